//! Spectral calculus on periodic charts: multi-axis FFTs, partial
//! derivatives, and Wirtinger derivatives with the sqrt(2) normalization
//! z^n = (x^{2n-1} + i x^{2n}) / sqrt(2).

use crate::chart::{ChartError, GridChart, ScalarField};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap();
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Tiled transpose of a (rows x n) view into an (n x rows) view: rotates
/// the fastest grid axis to the slowest position.
fn rotate_axes(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    let rows = src.len() / n;
    const TILE: usize = 64;
    let mut rb = 0;
    while rb < rows {
        let rend = (rb + TILE).min(rows);
        for c in 0..n {
            let base = c * rows;
            for r in rb..rend {
                dst[base + r] = src[r * n + c];
            }
        }
        rb = rend;
    }
}

/// In-place full transform over all axes: each pass runs batched FFTs along
/// the currently fastest axis, then rotates the axis order; after D passes
/// the original layout is restored with every axis transformed.
fn fft_all_axes(chart: &GridChart, data: &mut Vec<Complex64>, inverse: bool) {
    let n = chart.samples();
    let fft = plan(n, inverse);
    let mut work = vec![Complex64::default(); data.len()];
    for _ in 0..chart.dims() {
        data.par_chunks_mut(n).for_each(|chunk| {
            fft.process(chunk);
        });
        rotate_axes(data, &mut work, n);
        std::mem::swap(data, &mut work);
    }
}

/// Fourier coefficients of a field, normalized so `coeff[0]` is the mean.
#[derive(Debug, Clone)]
pub struct Spectrum {
    chart: GridChart,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_field(&self) -> ScalarField {
        let mut data = self.coeffs.clone();
        fft_all_axes(&self.chart, &mut data, true);
        ScalarField::from_values(self.chart, data).expect("inverse transform produced non-finite values")
    }

    /// Apply a per-mode symbol; `sym` receives the 0-based DFT bin multi-index.
    pub fn apply_symbol(&self, sym: impl Fn(&[usize]) -> Complex64 + Sync) -> Spectrum {
        let dims = self.chart.dims();
        let n = self.chart.samples();
        debug_assert!(dims <= 8);
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(flat, &c)| {
                let mut bins = [0usize; 8];
                let mut rest = flat;
                for slot in bins[..dims].iter_mut().rev() {
                    *slot = rest % n;
                    rest /= n;
                }
                c * sym(&bins[..dims])
            })
            .collect();
        Spectrum {
            chart: self.chart,
            coeffs,
        }
    }
}

pub fn forward(field: &ScalarField) -> Spectrum {
    let chart = *field.chart();
    let mut data = field.values().to_vec();
    fft_all_axes(&chart, &mut data, false);
    let scale = 1.0 / chart.point_count() as f64;
    for v in &mut data {
        *v *= scale;
    }
    Spectrum { chart, coeffs: data }
}

/// Spectral partial derivative along 1-based axis `m`.
pub fn partial(field: &ScalarField, m: usize) -> Result<ScalarField, ChartError> {
    let chart = *field.chart();
    chart.check_axis(m)?;
    let spec = forward(field);
    let a = m - 1;
    Ok(spec
        .apply_symbol(|bins| Complex64::new(0.0, chart.wavenumber(bins[a])))
        .to_field())
}

/// Wirtinger derivative along complex axis `n` (1-based):
/// conjugate = false gives d/dz^n = (d_{2n-1} - i d_{2n}) / sqrt(2),
/// conjugate = true gives d/dzbar^n = (d_{2n-1} + i d_{2n}) / sqrt(2).
pub fn wirtinger(field: &ScalarField, n: usize, conjugate: bool) -> Result<ScalarField, ChartError> {
    let chart = *field.chart();
    chart.check_complex_axis(n)?;
    let spec = forward(field);
    Ok(spec.apply_symbol(|bins| dbar_pair_symbol(&chart, bins, n, conjugate)).to_field())
}

/// Fourier symbol of the Wirtinger derivative pair for complex axis `n`.
pub fn dbar_pair_symbol(chart: &GridChart, bins: &[usize], n: usize, conjugate: bool) -> Complex64 {
    let ka = chart.wavenumber(bins[2 * n - 2]);
    let kb = chart.wavenumber(bins[2 * n - 1]);
    // (i ka -/+ kb) / sqrt(2): symbol of (d_a +/- i d_b)/sqrt(2).
    let s = std::f64::consts::SQRT_2.recip();
    if conjugate {
        Complex64::new(-kb * s, ka * s)
    } else {
        Complex64::new(kb * s, ka * s)
    }
}

/// Derivative of a real component array, staying real.
pub fn partial_real(chart: &GridChart, comp: &[f64], m: usize) -> Result<Vec<f64>, ChartError> {
    let f = ScalarField::from_real(*chart, comp)?;
    Ok(partial(&f, m)?.re())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn chart1() -> GridChart {
        GridChart::new(1, 16, TAU).unwrap()
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let f = ScalarField::from_fn(chart1(), |_| Complex64::new(3.5, -1.0));
        let df = partial(&f, 1).unwrap();
        assert!(df.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_of_sine_matches_analytic() {
        let c = chart1();
        let k = TAU / c.period();
        let f = ScalarField::from_fn(c, |x| Complex64::new((k * x[0]).sin(), 0.0));
        let df = partial(&f, 1).unwrap();
        let expect = ScalarField::from_fn(c, |x| Complex64::new(k * (k * x[0]).cos(), 0.0));
        let err = df.sub(&expect).unwrap().max_abs();
        assert!(err < 1e-12, "err = {err}");
        // No dependence on the second axis.
        assert!(partial(&f, 2).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn axis_out_of_range_is_rejected() {
        let f = ScalarField::zeros(chart1());
        assert!(partial(&f, 0).is_err());
        assert!(partial(&f, 3).is_err());
        assert!(wirtinger(&f, 2, true).is_err());
    }

    #[test]
    fn mixed_partials_commute() {
        let c = GridChart::new(2, 8, TAU).unwrap();
        let f = ScalarField::from_fn(c, |x| {
            Complex64::new((x[0] + 2.0 * x[2]).sin() * (x[3]).cos(), (x[1] - x[2]).cos())
        });
        let scale = f.max_abs();
        for (a, b) in [(1, 2), (1, 3), (2, 4), (3, 4)] {
            let ab = partial(&partial(&f, a).unwrap(), b).unwrap();
            let ba = partial(&partial(&f, b).unwrap(), a).unwrap();
            let rel = ab.sub(&ba).unwrap().max_abs() / scale;
            assert!(rel < 1e-10, "axes ({a},{b}) rel = {rel}");
        }
    }

    #[test]
    fn wirtinger_is_the_expected_partial_combination() {
        let c = GridChart::new(2, 8, TAU).unwrap();
        let f = ScalarField::from_fn(c, |x| {
            Complex64::new((x[0] + x[3]).cos(), (2.0 * x[1]).sin() + x[2].cos())
        });
        for n in 1..=2 {
            for conjugate in [false, true] {
                let w = wirtinger(&f, n, conjugate).unwrap();
                let da = partial(&f, 2 * n - 1).unwrap();
                let db = partial(&f, 2 * n).unwrap();
                let sign = if conjugate { 1.0 } else { -1.0 };
                let expect = da
                    .add(&db.scale(Complex64::new(0.0, sign)))
                    .unwrap()
                    .scale(Complex64::new(std::f64::consts::SQRT_2.recip(), 0.0));
                assert!(w.sub(&expect).unwrap().max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wirtinger_of_constant_is_zero() {
        let c = chart1();
        let f = ScalarField::from_fn(c, |_| Complex64::new(1.25, 0.5));
        assert!(wirtinger(&f, 1, true).unwrap().max_abs() < 1e-13);
        assert!(wirtinger(&f, 1, false).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn antiholomorphic_mode_has_single_mode_dbar() {
        // f = exp(-i 2 pi (x1 + x2)/L) viewed as the k = (-1,-1) bin: dbar f
        // is the same single mode scaled by (i k1 - k2)/sqrt(2).
        let c = chart1();
        let k = TAU / c.period();
        let f = ScalarField::from_fn(c, |x| Complex64::new(0.0, -k * (x[0] + x[1])).exp());
        let w = wirtinger(&f, 1, true).unwrap();
        let expect = f.scale(Complex64::new(k, -k).scale(std::f64::consts::SQRT_2.recip()));
        assert!(w.sub(&expect).unwrap().max_abs() < 1e-12);
        // Forward oracle: a single Fourier bin in, a single bin out.
        let spec = forward(&w);
        let nonzero = spec.coeffs().iter().filter(|v| v.norm() > 1e-12).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn parseval_roundtrip_preserves_norm() {
        let c = GridChart::new(2, 8, TAU).unwrap();
        let f = ScalarField::from_fn(c, |x| {
            Complex64::new((x[0] * 2.0).sin() + x[1].cos(), (x[2] + x[3]).sin())
        });
        let back = forward(&f).to_field();
        let rel = back.sub(&f).unwrap().norm_l2() / f.norm_l2();
        assert!(rel < 1e-12, "rel = {rel}");
    }
}
