//! Minimal-norm spectral solution of the dbar system d f / d zbar^n = omega_n
//! on the torus chart, with closedness diagnostics.
//!
//! Closed forms with vanishing zero modes are exact, and the solver returns
//! the unique minimal-L2-norm primitive; non-closed input yields the least
//! squares solution plus residuals quantifying the obstruction.

use crate::chart::{ChartError, GridChart, ScalarField};
use crate::spectral::{self, dbar_pair_symbol};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DbarError {
    #[error("component {component} has zero-mode magnitude {magnitude:.3e} (tolerance {tol:.3e}); no periodic primitive exists")]
    NonzeroMeanRhs {
        component: usize,
        magnitude: f64,
        tol: f64,
    },
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// The (0,1)-form omega = sum_n omega_n dzbar^n as d component fields.
#[derive(Debug, Clone)]
pub struct AntiholomorphicForm {
    chart: GridChart,
    comps: Vec<ScalarField>,
}

impl AntiholomorphicForm {
    pub fn new(comps: Vec<ScalarField>) -> Result<Self, ChartError> {
        assert!(!comps.is_empty());
        let chart = *comps[0].chart();
        assert_eq!(chart.complex_dim(), comps.len(), "need one component per complex axis");
        for c in &comps {
            chart.check_same(c.chart())?;
        }
        Ok(Self { chart, comps })
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn zero_modes(&self) -> Vec<Complex64> {
        self.comps.iter().map(|c| c.mean()).collect()
    }
}

/// Max over n < m of the closedness defect |dbar_n omega_m - dbar_m omega_n|;
/// zero by convention when d = 1.
pub fn closedness_residual(omega: &AntiholomorphicForm) -> Result<f64, ChartError> {
    let d = omega.chart.complex_dim();
    let mut worst = 0.0f64;
    for n in 1..=d {
        for m in (n + 1)..=d {
            let a = spectral::wirtinger(&omega.comps[m - 1], n, true)?;
            let b = spectral::wirtinger(&omega.comps[n - 1], m, true)?;
            worst = worst.max(a.sub(&b)?.max_abs());
        }
    }
    Ok(worst)
}

/// Solution report for the dbar system.
#[derive(Debug, Clone)]
pub struct DbarSolution {
    pub f: ScalarField,
    /// Max |dbar_n f - omega_n| per component.
    pub equation_residuals: Vec<f64>,
    pub closedness_residual: f64,
    /// Mean of each right-hand side (must be below tolerance on the torus).
    pub zero_modes: Vec<Complex64>,
}

impl DbarSolution {
    pub fn max_equation_residual(&self) -> f64 {
        self.equation_residuals.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Minimal-norm least-squares solve: in Fourier space
/// fhat(k) = sum_n conj(sigma_n(k)) omega_n_hat(k) / sum_n |sigma_n(k)|^2,
/// with fhat = 0 on modes where every symbol vanishes (gauge fixing).
pub fn solve(omega: &AntiholomorphicForm, mean_tol: f64) -> Result<DbarSolution, DbarError> {
    let chart = omega.chart;
    let d = chart.complex_dim();
    let zero_modes = omega.zero_modes();
    for (idx, mode) in zero_modes.iter().enumerate() {
        if mode.norm() > mean_tol {
            return Err(DbarError::NonzeroMeanRhs {
                component: idx + 1,
                magnitude: mode.norm(),
                tol: mean_tol,
            });
        }
    }
    let spectra: Vec<_> = omega.comps.iter().map(spectral::forward).collect();
    let n = chart.samples();
    let dims = chart.dims();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); chart.point_count()];
    let mut bins = vec![0usize; dims];
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        let mut rest = flat;
        for b in bins.iter_mut().rev() {
            *b = rest % n;
            rest /= n;
        }
        let mut numer = Complex64::new(0.0, 0.0);
        let mut denom = 0.0;
        for (nn, spec) in spectra.iter().enumerate() {
            let sym = dbar_pair_symbol(&chart, &bins, nn + 1, true);
            numer += sym.conj() * spec.coeffs()[flat];
            denom += sym.norm_sqr();
        }
        *slot = if denom > 0.0 { numer / denom } else { Complex64::new(0.0, 0.0) };
    }
    let mut base = spectral::forward(&ScalarField::zeros(chart));
    base.coeffs_mut().copy_from_slice(&coeffs);
    let f = base.to_field();
    let mut equation_residuals = Vec::with_capacity(d);
    for (nn, w) in omega.comps.iter().enumerate() {
        let df = spectral::wirtinger(&f, nn + 1, true)?;
        equation_residuals.push(df.sub(w)?.max_abs());
    }
    Ok(DbarSolution {
        f,
        equation_residuals,
        closedness_residual: closedness_residual(omega)?,
        zero_modes,
    })
}
