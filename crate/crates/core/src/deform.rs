//! Structures and metrics built by pulling the canonical pair back through
//! periodic diffeomorphisms, plus the deformation specs the CLI consumes.
//!
//! The diffeomorphism is y = x + s v(x) with v given by a short list of
//! Fourier modes, so Jacobians are exact trigonometric sums and test cases
//! are resolution independent.

use crate::almost_complex::canonical_table;
use crate::chart::{ChartError, GridChart, ScalarField, TensorField};
use crate::coords::ComplexCoordinateMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// One real Fourier mode of one displacement component:
/// a cos(2 pi k.x / L) + b sin(2 pi k.x / L).
#[derive(Debug, Clone)]
pub struct DisplacementMode {
    /// 1-based component of the displacement field.
    pub component: usize,
    /// Integer wavevector, one entry per axis.
    pub k: Vec<i64>,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

/// A periodic diffeomorphism x -> x + scale * v(x).
#[derive(Debug, Clone)]
pub struct DiffeoSpec {
    pub modes: Vec<DisplacementMode>,
    pub scale: f64,
}

impl DiffeoSpec {
    /// Reject modes outside the chart or beyond its Nyquist range.
    pub fn check(&self, chart: &GridChart) -> Result<(), ChartError> {
        let half = (chart.samples() / 2) as i64;
        for mode in &self.modes {
            if mode.component == 0 || mode.component > chart.dims() {
                return Err(ChartError::AxisOutOfRange {
                    axis: mode.component,
                    dims: chart.dims(),
                });
            }
            if mode.k.len() != chart.dims() || mode.k.iter().any(|k| k.abs() >= half) {
                return Err(ChartError::LengthMismatch {
                    got: mode.k.len(),
                    want: chart.dims(),
                });
            }
        }
        Ok(())
    }

    fn phase(&self, mode: &DisplacementMode, x: &[f64], l: f64) -> f64 {
        mode.k
            .iter()
            .zip(x)
            .map(|(&k, &xi)| TAU * k as f64 * xi / l)
            .sum()
    }

    /// Displacement components sampled on the grid.
    pub fn displacement(&self, chart: &GridChart) -> Vec<Vec<f64>> {
        let dims = chart.dims();
        let mut out = vec![vec![0.0; chart.point_count()]; dims];
        let mut x = vec![0.0; dims];
        for j in 0..chart.point_count() {
            chart.point(j, &mut x);
            for mode in &self.modes {
                let ph = self.phase(mode, &x, chart.period());
                out[mode.component - 1][j] +=
                    self.scale * (mode.cos_coeff * ph.cos() + mode.sin_coeff * ph.sin());
            }
        }
        out
    }

    /// Exact Jacobian J[M][N] = d y^M / d x^N at one point.
    pub fn jacobian_at(&self, chart: &GridChart, x: &[f64]) -> DMatrix<f64> {
        let dims = chart.dims();
        let mut j = DMatrix::identity(dims, dims);
        let l = chart.period();
        for mode in &self.modes {
            let ph = self.phase(mode, x, l);
            for n in 0..dims {
                let kn = TAU * mode.k[n] as f64 / l;
                if kn == 0.0 {
                    continue;
                }
                j[(mode.component - 1, n)] +=
                    self.scale * kn * (-mode.cos_coeff * ph.sin() + mode.sin_coeff * ph.cos());
            }
        }
        j
    }
}

/// Pull the canonical structure and the flat metric back through the
/// diffeomorphism: the structure field I(x) = J^T I0 J^-T and metric
/// g(x) = J^T J, for which z0(x + s v(x)) are exact complex coordinates.
pub fn pullback_pair(
    chart: &GridChart,
    spec: &DiffeoSpec,
) -> Result<(TensorField, TensorField), ChartError> {
    spec.check(chart)?;
    let dims = chart.dims();
    let points = chart.point_count();
    let i0 = canonical_table(dims);
    let per_point: Vec<(Vec<f64>, Vec<f64>)> = (0..points)
        .into_par_iter()
        .map(|flat| {
            let mut x = vec![0.0; dims];
            chart.point(flat, &mut x);
            let j = spec.jacobian_at(chart, &x);
            let jt = j.transpose();
            let jti = jt
                .clone()
                .try_inverse()
                .expect("diffeomorphism Jacobian is invertible");
            let i_here = &jt * &i0 * &jti;
            let g_here = &jt * &j;
            let mut iv = Vec::with_capacity(dims * dims);
            let mut gv = Vec::with_capacity(dims * dims);
            for r in 0..dims {
                for c in 0..dims {
                    iv.push(i_here[(r, c)]);
                    gv.push(g_here[(r, c)]);
                }
            }
            (iv, gv)
        })
        .collect();
    let mut i_field = TensorField::zeros(*chart, 1, 1);
    let mut g_field = TensorField::zeros(*chart, 0, 2);
    for (flat, (iv, gv)) in per_point.iter().enumerate() {
        for ci in 0..dims * dims {
            i_field.components_mut()[ci][flat] = iv[ci];
            g_field.components_mut()[ci][flat] = gv[ci];
        }
    }
    Ok((i_field, g_field))
}

/// The exact complex coordinates of the pullback structure:
/// z^n(x) = z0^n(x + s v(x)) = z0^n(x) + s (v^{2n-1} + i v^{2n}) / sqrt 2.
pub fn exact_pullback_coordinates(
    chart: &GridChart,
    spec: &DiffeoSpec,
) -> Result<ComplexCoordinateMap, ChartError> {
    spec.check(chart)?;
    let v = spec.displacement(chart);
    let d = chart.complex_dim();
    let mut periodic = Vec::with_capacity(d);
    for n in 0..d {
        let values: Vec<Complex64> = (0..chart.point_count())
            .map(|j| Complex64::new(v[2 * n][j], v[2 * n + 1][j]).scale(std::f64::consts::SQRT_2.recip()))
            .collect();
        periodic.push(ScalarField::from_values(*chart, values)?);
    }
    Ok(ComplexCoordinateMap::from_parts(*chart, None, None, periodic))
}

/// The two-mode benchmark family on a d = 2 chart:
/// v^1 = c sin(2 pi x^2 / L), v^2 = c cos(2 pi x^3 / L) with c = 0.2.
/// The family couples the two complex pairs, its Jacobian series terminates
/// (so the pullback is exactly band-limited), and a single linearized step
/// leaves a genuinely quadratic residual.
pub fn benchmark_diffeo(scale: f64) -> DiffeoSpec {
    let c = 0.2;
    DiffeoSpec {
        modes: vec![
            DisplacementMode {
                component: 1,
                k: vec![0, 1, 0, 0],
                cos_coeff: 0.0,
                sin_coeff: c,
            },
            DisplacementMode {
                component: 2,
                k: vec![0, 0, 1, 0],
                cos_coeff: c,
                sin_coeff: 0.0,
            },
        ],
        scale,
    }
}
