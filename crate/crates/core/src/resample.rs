//! Evaluation of band-limited periodic fields away from grid nodes, and
//! inversion of near-identity periodic maps. This is the resampling layer
//! behind the continuation: per-step displacements are small, so a truncated
//! Taylor shift built from exact spectral derivatives is both fast and
//! accurate; a thresholded trigonometric sum covers large displacements.

use crate::chart::{GridChart, ScalarField};
use crate::spectral::{self, Spectrum};
use num_complex::Complex64;
use rayon::prelude::*;

/// Per-point displacements, one vector per axis (same layout as field data).
#[derive(Debug, Clone)]
pub struct Displacement {
    chart: GridChart,
    comps: Vec<Vec<f64>>,
}

impl Displacement {
    pub fn zero(chart: GridChart) -> Self {
        Self {
            chart,
            comps: vec![vec![0.0; chart.point_count()]; chart.dims()],
        }
    }

    pub fn new(chart: GridChart, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), chart.dims());
        for c in &comps {
            assert_eq!(c.len(), chart.point_count());
        }
        Self { chart, comps }
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Largest wavenumber carrying relative spectral weight above `cutoff`.
fn effective_wavenumber(spec: &Spectrum, cutoff: f64) -> f64 {
    let chart = *spec.chart();
    let dims = chart.dims();
    let n = chart.samples();
    let max_c = spec.coeffs().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if max_c == 0.0 {
        return 0.0;
    }
    let mut k_eff = 0.0f64;
    for (flat, c) in spec.coeffs().iter().enumerate() {
        if c.norm() > cutoff * max_c {
            let mut rest = flat;
            let mut k2 = 0.0;
            for _ in 0..dims {
                let k = chart.wavenumber(rest % n);
                k2 += k * k;
                rest /= n;
            }
            k_eff = k_eff.max(k2.sqrt());
        }
    }
    k_eff
}

/// Smallest Taylor order p with (k h)^(p+1) / (p+1)! below `tol`, if any
/// order up to `max_order` reaches it.
fn taylor_order(kh: f64, tol: f64, max_order: usize) -> Option<usize> {
    let mut term = 1.0f64;
    for p in 0..=max_order {
        term *= kh / (p + 1) as f64;
        if term < tol {
            return Some(p);
        }
    }
    None
}

fn multi_indices(dims: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(dims: usize, order: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dims {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=order {
            prefix.push(k);
            rec(dims, order - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dims, order, &mut Vec::new(), &mut out);
    out
}

enum EvalPlan {
    /// Precomputed d^alpha f / alpha! fields for a truncated Taylor shift.
    Taylor(Vec<(Vec<usize>, Vec<Complex64>)>),
    /// Thresholded modes for an exact trigonometric sum.
    Trig(Vec<(Vec<usize>, Complex64)>),
}

/// Reusable off-grid evaluator for one field, planned for displacements up
/// to `max_shift` at relative accuracy `tol`.
pub struct ShiftEvaluator {
    chart: GridChart,
    plan: EvalPlan,
}

impl ShiftEvaluator {
    pub fn new(field: &ScalarField, max_shift: f64, tol: f64) -> Self {
        let chart = *field.chart();
        let spec = spectral::forward(field);
        // Modes below this relative weight cannot matter at the target
        // accuracy, so they do not drive the Taylor order up.
        let k_eff = effective_wavenumber(&spec, (0.1 * tol).max(1e-13));
        let plan = match taylor_order(k_eff * max_shift, tol, 8) {
            Some(order) => {
                let dims = chart.dims();
                let terms = multi_indices(dims, order)
                    .into_par_iter()
                    .map(|alpha| {
                        let mut fact = 1.0f64;
                        for &m in &alpha {
                            for j in 1..=m {
                                fact *= j as f64;
                            }
                        }
                        let inv_fact = 1.0 / fact;
                        let dfield = spec
                            .apply_symbol(|bins| {
                                let mut s = Complex64::new(inv_fact, 0.0);
                                for (a, &m) in alpha.iter().enumerate() {
                                    let ik = Complex64::new(0.0, chart.wavenumber(bins[a]));
                                    for _ in 0..m {
                                        s *= ik;
                                    }
                                }
                                s
                            })
                            .to_field();
                        (alpha, dfield.into_values())
                    })
                    .collect();
                EvalPlan::Taylor(terms)
            }
            None => {
                let n = chart.samples();
                let dims = chart.dims();
                let max_c = spec.coeffs().iter().fold(0.0f64, |m, v| m.max(v.norm()));
                let floor = 1e-14 * max_c;
                let mut modes = Vec::new();
                for (flat, &c) in spec.coeffs().iter().enumerate() {
                    if c.norm() > floor {
                        let mut bins = vec![0usize; dims];
                        let mut rest = flat;
                        for slot in bins.iter_mut().rev() {
                            *slot = rest % n;
                            rest /= n;
                        }
                        modes.push((bins, c));
                    }
                }
                EvalPlan::Trig(modes)
            }
        };
        Self { chart, plan }
    }

    /// Values f(x_j + delta_j) on every grid node.
    pub fn eval(&self, delta: &Displacement) -> Vec<Complex64> {
        let chart = self.chart;
        let dims = chart.dims();
        match &self.plan {
            EvalPlan::Taylor(terms) => {
                let points = chart.point_count();
                (0..points)
                    .into_par_iter()
                    .map(|j| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (alpha, field) in terms {
                            let mut w = 1.0f64;
                            for (a, &m) in alpha.iter().enumerate() {
                                let d = delta.comps()[a][j];
                                for _ in 0..m {
                                    w *= d;
                                }
                            }
                            acc += field[j] * w;
                        }
                        acc
                    })
                    .collect()
            }
            EvalPlan::Trig(modes) => {
                let n = chart.samples();
                (0..chart.point_count())
                    .into_par_iter()
                    .map(|j| {
                        let mut x = vec![0.0; dims];
                        chart.point(j, &mut x);
                        for (a, slot) in x.iter_mut().enumerate() {
                            *slot += delta.comps()[a][j];
                        }
                        let mut table = vec![vec![Complex64::new(0.0, 0.0); n]; dims];
                        for a in 0..dims {
                            for bin in 0..n {
                                table[a][bin] =
                                    Complex64::new(0.0, chart.wavenumber(bin) * x[a]).exp();
                            }
                        }
                        let mut total = Complex64::new(0.0, 0.0);
                        for (bins, c) in modes {
                            let mut phase = *c;
                            for (a, &bin) in bins.iter().enumerate() {
                                phase *= table[a][bin];
                            }
                            total += phase;
                        }
                        total
                    })
                    .collect()
            }
        }
    }
}

/// Evaluate `field` at `x_j + delta_j` for every grid point `j`.
pub fn eval_shifted(field: &ScalarField, delta: &Displacement, tol: f64) -> Vec<Complex64> {
    let chart = *field.chart();
    chart
        .check_same(delta.chart())
        .expect("displacement chart mismatch");
    let h = delta.max_abs();
    if h == 0.0 {
        return field.values().to_vec();
    }
    ShiftEvaluator::new(field, h, tol).eval(delta)
}

/// Solve `w + u(w) = y` for every grid node `y`, returning `delta = w - y`
/// (so `w = y + delta`). Converges for contractive periodic `u`.
pub fn invert_displacement(u: &Displacement, tol: f64, max_iter: usize) -> Displacement {
    invert_displacement_with(u, tol, max_iter, 1e-10)
}

/// As [`invert_displacement`] with an explicit resampling accuracy. Axis
/// pairs are packed into complex fields so one evaluator serves two axes.
pub fn invert_displacement_with(
    u: &Displacement,
    tol: f64,
    max_iter: usize,
    eval_tol: f64,
) -> Displacement {
    let chart = *u.chart();
    let dims = chart.dims();
    let points = chart.point_count();
    let h = u.max_abs();
    let pairs = dims / 2;
    let evaluators: Vec<ShiftEvaluator> = (0..pairs)
        .map(|p| {
            let vals: Vec<Complex64> = (0..points)
                .map(|j| Complex64::new(u.comps()[2 * p][j], u.comps()[2 * p + 1][j]))
                .collect();
            let f = ScalarField::from_values(chart, vals).unwrap();
            ShiftEvaluator::new(&f, 1.5 * h.max(1e-12), eval_tol)
        })
        .collect();
    let odd_axis = if dims % 2 == 1 {
        let f = ScalarField::from_real(chart, &u.comps()[dims - 1]).unwrap();
        Some(ShiftEvaluator::new(&f, 1.5 * h.max(1e-12), eval_tol))
    } else {
        None
    };
    let mut delta = Displacement::zero(chart);
    for _ in 0..max_iter {
        // delta_next = -u(y + delta)
        let mut next = vec![vec![0.0; points]; dims];
        for (p, ev) in evaluators.iter().enumerate() {
            let vals = ev.eval(&delta);
            for j in 0..points {
                next[2 * p][j] = -vals[j].re;
                next[2 * p + 1][j] = -vals[j].im;
            }
        }
        if let Some(ev) = &odd_axis {
            let vals = ev.eval(&delta);
            for j in 0..points {
                next[dims - 1][j] = -vals[j].re;
            }
        }
        let mut change = 0.0f64;
        for a in 0..dims {
            for j in 0..points {
                change = change.max((next[a][j] - delta.comps[a][j]).abs());
            }
        }
        delta = Displacement::new(chart, next);
        if change < tol {
            break;
        }
    }
    delta
}
