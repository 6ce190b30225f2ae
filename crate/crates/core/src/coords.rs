//! Construction of complex coordinates from an integrable almost complex
//! structure: one linearized dbar step for small deformations, and a
//! continuation over a straight-line path in structure space for finite
//! ones, re-expressing the structure in the updated coordinates after each
//! step by Jacobian transformation and Fourier resampling.
//!
//! Coordinate maps are stored as z^n = C z0 + Cb conj(z0) + periodic, with
//! z0^n = (x^{2n-1} + i x^{2n}) / sqrt 2. The constant linear sector absorbs
//! the zero Fourier modes of the deformation, which on the torus have no
//! periodic dbar primitive.

use crate::almost_complex::{
    anticommutator_residual, canonical_table, nijenhuis, polar_project, AcsError,
    AlmostComplexStructure,
};
use crate::chart::{ChartError, GridChart, ScalarField, TensorField};
use crate::dbar::{self, AntiholomorphicForm, DbarError};
use crate::resample::{invert_displacement_with, Displacement, ShiftEvaluator};
use crate::spectral;
use nalgebra::DMatrix;
use rayon::prelude::*;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoordsError {
    #[error("anticommutator residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    AnticommutatorViolated { residual: f64, tol: f64 },
    #[error("deformation size {norm:.3e} exceeds the step bound {bound:.3e}; try at least {suggested_steps} steps")]
    StepTooLarge {
        norm: f64,
        bound: f64,
        suggested_steps: usize,
    },
    #[error("integrability obstruction: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    IntegrabilityObstruction { residual: f64, tol: f64 },
    #[error("path validation failed at step {step}: {detail}")]
    PathValidationFailed { step: usize, detail: String },
    #[error("coordinate Jacobian is singular at grid point {flat}")]
    SingularJacobian { flat: usize },
    #[error(transparent)]
    Dbar(#[from] DbarError),
    #[error(transparent)]
    Acs(#[from] AcsError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Tolerances and bounds for the constructor.
#[derive(Debug, Clone)]
pub struct ConstructConfig {
    /// Pointwise bound accepted for I^2 = -1 on path intermediates.
    pub validation_tol: f64,
    /// Gate on the Nijenhuis max-norm and the base closedness tolerance.
    pub integrability_tol: f64,
    /// Largest deformation handled by one linearized step.
    pub step_bound: f64,
    /// Closedness gate slack times ||Delta||_inf^2 (quadratic terms the
    /// linearization legitimately neglects).
    pub closedness_slack: f64,
    /// Zero-mode tolerance handed to the dbar solver.
    pub mean_tol: f64,
    /// Relative accuracy of the off-grid resampling.
    pub resample_tol: f64,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        Self {
            validation_tol: 1e-8,
            integrability_tol: 1e-6,
            step_bound: 0.05,
            closedness_slack: 25.0,
            mean_tol: 1e-9,
            resample_tol: 1e-8,
        }
    }
}

/// Default number of continuation steps.
pub const DEFAULT_STEPS: usize = 8;

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub sigma: f64,
    pub delta_inf: f64,
    /// Norm of the constant sector absorbed into the linear part.
    pub mean_shift: f64,
    pub closedness: f64,
    pub solve_residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub steps: Vec<StepRecord>,
}

/// Candidate complex coordinates z^n = sum_m C[n][m] z0^m
/// + Cb[n][m] conj(z0^m) + periodic^n.
#[derive(Debug, Clone)]
pub struct ComplexCoordinateMap {
    chart: GridChart,
    c_lin: DMatrix<Complex64>,
    cb_lin: DMatrix<Complex64>,
    periodic: Vec<ScalarField>,
    pub provenance: Provenance,
}

impl ComplexCoordinateMap {
    /// Identity-linear map with the given periodic parts (None means the
    /// canonical linear sector).
    pub fn from_parts(
        chart: GridChart,
        c_lin: Option<DMatrix<Complex64>>,
        cb_lin: Option<DMatrix<Complex64>>,
        periodic: Vec<ScalarField>,
    ) -> Self {
        let d = chart.complex_dim();
        assert_eq!(periodic.len(), d);
        Self {
            chart,
            c_lin: c_lin.unwrap_or_else(|| DMatrix::identity(d, d)),
            cb_lin: cb_lin.unwrap_or_else(|| DMatrix::zeros(d, d)),
            periodic,
            provenance: Provenance::default(),
        }
    }

    /// The canonical coordinates z0.
    pub fn canonical(chart: GridChart) -> Self {
        let d = chart.complex_dim();
        Self::from_parts(
            chart,
            None,
            None,
            (0..d).map(|_| ScalarField::zeros(chart)).collect(),
        )
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn linear(&self) -> (&DMatrix<Complex64>, &DMatrix<Complex64>) {
        (&self.c_lin, &self.cb_lin)
    }

    pub fn periodic(&self) -> &[ScalarField] {
        &self.periodic
    }

    /// Compose with a constant holomorphic reparametrization w = A z.
    pub fn reparametrize(&self, a: &DMatrix<Complex64>) -> Self {
        let d = self.chart.complex_dim();
        assert_eq!((a.nrows(), a.ncols()), (d, d));
        let mut periodic = Vec::with_capacity(d);
        for n in 0..d {
            let mut acc = ScalarField::zeros(self.chart);
            for m in 0..d {
                acc = acc.add(&self.periodic[m].scale(a[(n, m)])).unwrap();
            }
            periodic.push(acc);
        }
        Self {
            chart: self.chart,
            c_lin: a * &self.c_lin,
            cb_lin: a * &self.cb_lin,
            periodic,
            provenance: self.provenance.clone(),
        }
    }

    /// Values of z^n on the grid.
    pub fn values(&self, n: usize) -> Vec<Complex64> {
        let chart = self.chart;
        let d = chart.complex_dim();
        let s = std::f64::consts::SQRT_2.recip();
        let mut x = vec![0.0; chart.dims()];
        (0..chart.point_count())
            .map(|j| {
                chart.point(j, &mut x);
                let mut v = self.periodic[n].values()[j];
                for m in 0..d {
                    let z0 = Complex64::new(x[2 * m] * s, x[2 * m + 1] * s);
                    v += self.c_lin[(n, m)] * z0 + self.cb_lin[(n, m)] * z0.conj();
                }
                v
            })
            .collect()
    }

    /// All first derivatives d_M z^n as grid arrays: out[n][m0] with m0 the
    /// 0-based axis; the linear sector contributes constants.
    pub fn derivatives(&self) -> Result<Vec<Vec<Vec<Complex64>>>, ChartError> {
        let chart = self.chart;
        let d = chart.complex_dim();
        let dims = chart.dims();
        let s = std::f64::consts::SQRT_2.recip();
        let mut out = Vec::with_capacity(d);
        for n in 0..d {
            let mut per_axis = Vec::with_capacity(dims);
            for axis in 1..=dims {
                let dphi = spectral::partial(&self.periodic[n], axis)?;
                let m = (axis - 1) / 2;
                let parity = (axis - 1) % 2;
                // d_M z0^m = (delta_{M,2m-1} + i delta_{M,2m}) / sqrt 2.
                let b = if parity == 0 {
                    Complex64::new(s, 0.0)
                } else {
                    Complex64::new(0.0, s)
                };
                let constant = self.c_lin[(n, m)] * b + self.cb_lin[(n, m)] * b.conj();
                per_axis.push(dphi.values().iter().map(|v| v + constant).collect());
            }
            out.push(per_axis);
        }
        Ok(out)
    }
}

/// Right-hand sides of the reduced dbar system for an anticommuting
/// deformation: omega[n][m] = (i/2) Delta_{2m-1}^{(2n-1) + i (2n)}.
pub fn delta_rhs(
    delta: &TensorField,
    anticomm_tol: f64,
) -> Result<Vec<Vec<ScalarField>>, CoordsError> {
    let residual = anticommutator_residual(delta);
    if residual > anticomm_tol {
        return Err(CoordsError::AnticommutatorViolated {
            residual,
            tol: anticomm_tol,
        });
    }
    let chart = *delta.chart();
    let d = chart.complex_dim();
    let half_i = Complex64::new(0.0, 0.5);
    let mut rows = Vec::with_capacity(d);
    for n in 0..d {
        let mut row = Vec::with_capacity(d);
        for m in 0..d {
            let re = delta.comp(&[2 * m, 2 * n]);
            let im = delta.comp(&[2 * m, 2 * n + 1]);
            let values = re
                .iter()
                .zip(im)
                .map(|(&a, &b)| half_i * Complex64::new(a, b))
                .collect();
            row.push(ScalarField::from_values(chart, values)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The constant structure nearest to the field mean, satisfying K^2 = -1.
fn mean_structure(structure: &TensorField) -> Result<DMatrix<f64>, CoordsError> {
    let dims = structure.chart().dims();
    let points = structure.chart().point_count() as f64;
    let mut mean = DMatrix::zeros(dims, dims);
    for r in 0..dims {
        for c in 0..dims {
            let comp = structure.comp(&[r, c]);
            mean[(r, c)] = comp.iter().sum::<f64>() / points;
        }
    }
    polar_table(&mean).map_err(CoordsError::from)
}

/// Polar-type projection of one matrix onto K^2 = -1.
fn polar_table(table: &DMatrix<f64>) -> Result<DMatrix<f64>, AcsError> {
    let dims = table.nrows();
    let s = -(table * table);
    let depart = (&s - DMatrix::<f64>::identity(dims, dims)).norm();
    if depart > 0.9 {
        return Err(AcsError::ProjectionFailed { residual: depart });
    }
    let mut y = s;
    let mut z = DMatrix::<f64>::identity(dims, dims);
    for _ in 0..40 {
        let t = (DMatrix::<f64>::identity(dims, dims) * 3.0 - &z * &y) * 0.5;
        y = &y * &t;
        z = &t * &z;
        if (&z * &y - DMatrix::<f64>::identity(dims, dims)).norm() < 1e-15 {
            break;
        }
    }
    Ok(table * z)
}

/// The exact linear coordinates of a constant structure K: rows of the
/// -i eigenprojection of K applied to the canonical gradient rows, returned
/// as the (C, Cb) coefficients over (z0, conj z0).
fn linear_sector(k_table: &DMatrix<f64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let dims = k_table.nrows();
    let d = dims / 2;
    let s = std::f64::consts::SQRT_2.recip();
    let mut c = DMatrix::<Complex64>::zeros(d, d);
    let mut cb = DMatrix::<Complex64>::zeros(d, d);
    for n in 0..d {
        // a = P a0 with P = (1 + i K)/2 acting on the row vector a0 of
        // d_M z0^n values.
        let mut a = vec![Complex64::new(0.0, 0.0); dims];
        for (mm, slot) in a.iter_mut().enumerate() {
            let a0_mm = |idx: usize| -> Complex64 {
                if idx == 2 * n {
                    Complex64::new(s, 0.0)
                } else if idx == 2 * n + 1 {
                    Complex64::new(0.0, s)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
            let mut v = a0_mm(mm).scale(0.5);
            for q in 0..dims {
                v += Complex64::new(0.0, 0.5 * k_table[(mm, q)]) * a0_mm(q);
            }
            *slot = v;
        }
        for m in 0..d {
            c[(n, m)] = (a[2 * m] - Complex64::new(0.0, 1.0) * a[2 * m + 1]) * s;
            cb[(n, m)] = (a[2 * m] + Complex64::new(0.0, 1.0) * a[2 * m + 1]) * s;
        }
    }
    (c, cb)
}

struct StepOutcome {
    delta_inf: f64,
    mean_shift: f64,
    closedness: f64,
    solve_residual: f64,
    k_table: DMatrix<f64>,
    corrections: Vec<ScalarField>,
}

/// One linearized step against a structure field that is already close to
/// canonical: split off the constant sector, check row closedness, solve.
fn step_core(
    structure: &TensorField,
    cfg: &ConstructConfig,
    closedness_gate: f64,
) -> Result<StepOutcome, CoordsError> {
    let chart = *structure.chart();
    let dims = chart.dims();
    let i0 = canonical_table(dims);
    let k_table = mean_structure(structure)?;
    let mut delta = structure.clone();
    for r in 0..dims {
        for c in 0..dims {
            let shift = k_table[(r, c)] - i0[(r, c)];
            if shift != 0.0 {
                for v in delta.comp_mut(&[r, c]).iter_mut() {
                    *v -= shift;
                }
            }
        }
    }
    // Subtract the canonical part to get the fluctuation, then re-center:
    // the grid mean of the structure need not sit on the K^2 = -1 variety,
    // and the transverse leftover (quadratically small) has no periodic
    // primitive. It is dropped here and surfaces in the final residual.
    let mut delta = delta.sub(&TensorField::constant_rank2(chart, 1, 1, &i0))?;
    let points = chart.point_count() as f64;
    let mut recenter_norm = 0.0f64;
    for comp in delta.components_mut() {
        let mean = comp.iter().sum::<f64>() / points;
        recenter_norm = recenter_norm.max(mean.abs());
        for v in comp.iter_mut() {
            *v -= mean;
        }
    }
    let delta_inf = delta.max_abs();
    let mean_shift = (&k_table - &i0).norm().max(recenter_norm);
    if delta_inf > cfg.step_bound || mean_shift > cfg.step_bound {
        let total = delta_inf.max(mean_shift);
        return Err(CoordsError::StepTooLarge {
            norm: total,
            bound: cfg.step_bound,
            suggested_steps: (total / (0.8 * cfg.step_bound)).ceil() as usize,
        });
    }
    // The anticommutator defect of a projected structure is quadratic in
    // the deformation; gate accordingly.
    let anticomm_tol = (16.0 * dims as f64 * (delta_inf + mean_shift).powi(2)).max(1e-12);
    let rows = delta_rhs(&delta, anticomm_tol)?;
    let d = chart.complex_dim();
    let mut closedness = 0.0f64;
    let mut forms = Vec::with_capacity(d);
    for row in rows {
        let form = AntiholomorphicForm::new(row)?;
        closedness = closedness.max(dbar::closedness_residual(&form)?);
        forms.push(form);
    }
    if closedness > closedness_gate {
        return Err(CoordsError::IntegrabilityObstruction {
            residual: closedness,
            tol: closedness_gate,
        });
    }
    let mut corrections = Vec::with_capacity(d);
    let mut solve_residual = 0.0f64;
    for form in &forms {
        let sol = dbar::solve(form, cfg.mean_tol)?;
        solve_residual = solve_residual.max(sol.max_equation_residual());
        corrections.push(sol.f.clone());
    }
    Ok(StepOutcome {
        delta_inf,
        mean_shift,
        closedness,
        solve_residual,
        k_table,
        corrections,
    })
}

/// A single linearized dbar step: valid when the deformation is below the
/// step bound. The constant sector of the deformation is solved exactly in
/// the linear part of the returned map.
pub fn linear_step(
    acs: &AlmostComplexStructure,
    cfg: &ConstructConfig,
) -> Result<ComplexCoordinateMap, CoordsError> {
    let chart = *acs.chart();
    let probe = acs
        .structure()
        .sub(&TensorField::constant_rank2(chart, 1, 1, &canonical_table(chart.dims())))?
        .max_abs();
    let gate = cfg
        .integrability_tol
        .max(cfg.closedness_slack * probe * probe);
    let outcome = step_core(acs.structure(), cfg, gate)?;
    let (c_lin, cb_lin) = linear_sector(&outcome.k_table);
    let mut map = ComplexCoordinateMap::from_parts(
        chart,
        Some(c_lin),
        Some(cb_lin),
        outcome.corrections,
    );
    map.provenance.steps.push(StepRecord {
        step: 1,
        sigma: 1.0,
        delta_inf: outcome.delta_inf,
        mean_shift: outcome.mean_shift,
        closedness: outcome.closedness,
        solve_residual: outcome.solve_residual,
    });
    Ok(map)
}

/// Spatial derivative table of a displacement: out[m][n][j] = d_n u^m.
fn displacement_jacobian(
    chart: &GridChart,
    u: &[Vec<f64>],
) -> Result<Vec<Vec<Vec<f64>>>, ChartError> {
    let dims = chart.dims();
    let mut out = Vec::with_capacity(dims);
    for m in 0..dims {
        let mut per_axis = Vec::with_capacity(dims);
        for axis in 1..=dims {
            per_axis.push(spectral::partial_real(chart, &u[m], axis)?);
        }
        out.push(per_axis);
    }
    Ok(out)
}

/// Construct complex coordinates by continuation along the straight path
/// I(sigma) = I0 + sigma (I - I0), re-expressing the structure in the
/// updated coordinates after each step.
pub fn construct_coordinates(
    acs: &AlmostComplexStructure,
    steps: usize,
    cfg: &ConstructConfig,
) -> Result<ComplexCoordinateMap, CoordsError> {
    assert!(steps >= 1);
    let chart = *acs.chart();
    let dims = chart.dims();
    let d = chart.complex_dim();
    let points = chart.point_count();
    let i0 = canonical_table(dims);
    let i0_field = TensorField::constant_rank2(chart, 1, 1, &i0);

    // Theorem gate: refuse non-integrable structures before any solve.
    let nf = nijenhuis(acs)?;
    if nf.max_abs() > cfg.integrability_tol {
        return Err(CoordsError::IntegrabilityObstruction {
            residual: nf.max_abs(),
            tol: cfg.integrability_tol,
        });
    }

    let delta_total = acs.structure().sub(&i0_field)?;
    let total_inf = delta_total.max_abs();
    if total_inf / steps as f64 > cfg.step_bound {
        return Err(CoordsError::StepTooLarge {
            norm: total_inf,
            bound: cfg.step_bound,
            suggested_steps: (total_inf / (0.8 * cfg.step_bound)).ceil() as usize,
        });
    }
    // Closedness gate: quadratic in the total deformation (the straight
    // path is non-integrable at that order even for integrable endpoints).
    let closedness_gate = cfg
        .integrability_tol
        .max(cfg.closedness_slack * total_inf * total_inf);

    // Transported state: gx = original x minus the current frame coordinate,
    // and the pushforward of the total deformation.
    let mut gx: Vec<Vec<f64>> = vec![vec![0.0; points]; dims];
    let mut cdelta = delta_total.clone();
    let mut provenance = Provenance::default();

    for step in 1..=steps {
        let sigma = step as f64 / steps as f64;
        // Structure of the path point expressed in the current frame:
        // A + sigma * push(Delta), with A the pushforward of I0 computed
        // exactly from the accumulated map.
        let dgx = displacement_jacobian(&chart, &gx)?;
        let mut expressed = TensorField::zeros(chart, 1, 1);
        for j in 0..points {
            let mut jac = DMatrix::<f64>::identity(dims, dims);
            for r in 0..dims {
                for c in 0..dims {
                    jac[(r, c)] += dgx[r][c][j];
                }
            }
            let jt = jac.transpose();
            let jti = jt.clone().try_inverse().ok_or(CoordsError::SingularJacobian { flat: j })?;
            let a_here = &jt * &i0 * &jti;
            for r in 0..dims {
                for c in 0..dims {
                    expressed.components_mut()[r * dims + c][j] =
                        a_here[(r, c)] + sigma * cdelta.comp(&[r, c])[j];
                }
            }
        }
        let projected = polar_project(&expressed, cfg.validation_tol).map_err(|e| match e {
            AcsError::ProjectionFailed { residual } => CoordsError::PathValidationFailed {
                step,
                detail: format!("intermediate structure violates I^2 = -1 (residual {residual:.3e})"),
            },
            other => CoordsError::from(other),
        })?;

        let outcome = step_core(&projected, cfg, closedness_gate)?;
        provenance.steps.push(StepRecord {
            step,
            sigma,
            delta_inf: outcome.delta_inf,
            mean_shift: outcome.mean_shift,
            closedness: outcome.closedness,
            solve_residual: outcome.solve_residual,
        });

        // Frame update displacement u from the periodic corrections.
        let mut u: Vec<Vec<f64>> = Vec::with_capacity(dims);
        for n in 0..d {
            let re: Vec<f64> = outcome.corrections[n]
                .values()
                .iter()
                .map(|v| v.re * std::f64::consts::SQRT_2)
                .collect();
            let im: Vec<f64> = outcome.corrections[n]
                .values()
                .iter()
                .map(|v| v.im * std::f64::consts::SQRT_2)
                .collect();
            u.push(re);
            u.push(im);
        }
        let u_disp = Displacement::new(chart, u.clone());
        let du = displacement_jacobian(&chart, &u)?;
        let back = invert_displacement_with(&u_disp, 1e-12, 60, 0.1 * cfg.resample_tol);

        // Transport the deformation tensor and the accumulated map to the
        // new frame: combine pointwise first, then resample once. Axis and
        // column pairs are packed into complex fields.
        let transformed: Vec<Vec<f64>> = {
            let per_point: Vec<Vec<f64>> = (0..points)
                .into_par_iter()
                .map(|j| {
                    let mut ju = DMatrix::<f64>::identity(dims, dims);
                    for rr in 0..dims {
                        for cc in 0..dims {
                            ju[(rr, cc)] += du[rr][cc][j];
                        }
                    }
                    let jui = ju.clone().try_inverse().unwrap_or_else(|| {
                        DMatrix::identity(dims, dims)
                    });
                    let mut out = vec![0.0; dims * dims];
                    for r in 0..dims {
                        for c in 0..dims {
                            let mut acc = 0.0;
                            for p in 0..dims {
                                for q in 0..dims {
                                    acc += jui[(p, r)] * cdelta.comp(&[p, q])[j] * ju[(c, q)];
                                }
                            }
                            out[r * dims + c] = acc;
                        }
                    }
                    out
                })
                .collect();
            let mut by_comp = vec![vec![0.0; points]; dims * dims];
            for (j, row) in per_point.iter().enumerate() {
                for (ci, v) in row.iter().enumerate() {
                    by_comp[ci][j] = *v;
                }
            }
            by_comp
        };
        let mut packed: Vec<ScalarField> = Vec::with_capacity(dims * dims / 2 + dims / 2);
        for r in 0..dims {
            for c_pair in 0..dims / 2 {
                let vals: Vec<Complex64> = (0..points)
                    .map(|j| {
                        Complex64::new(
                            transformed[r * dims + 2 * c_pair][j],
                            transformed[r * dims + 2 * c_pair + 1][j],
                        )
                    })
                    .collect();
                packed.push(ScalarField::from_values(chart, vals)?);
            }
        }
        // gx_new(y) = gx(w) - u(w) at w = y + back.
        for a_pair in 0..dims / 2 {
            let vals: Vec<Complex64> = (0..points)
                .map(|j| {
                    Complex64::new(
                        gx[2 * a_pair][j] - u[2 * a_pair][j],
                        gx[2 * a_pair + 1][j] - u[2 * a_pair + 1][j],
                    )
                })
                .collect();
            packed.push(ScalarField::from_values(chart, vals)?);
        }
        let max_shift = back.max_abs();
        let resampled: Vec<Vec<Complex64>> = packed
            .iter()
            .map(|f| ShiftEvaluator::new(f, max_shift, cfg.resample_tol).eval(&back))
            .collect();
        let mut it = resampled.into_iter();
        for r in 0..dims {
            for c_pair in 0..dims / 2 {
                let vals = it.next().unwrap();
                for j in 0..points {
                    cdelta.comp_mut(&[r, 2 * c_pair])[j] = vals[j].re;
                    cdelta.comp_mut(&[r, 2 * c_pair + 1])[j] = vals[j].im;
                }
            }
        }
        for a_pair in 0..dims / 2 {
            let vals = it.next().unwrap();
            for j in 0..points {
                gx[2 * a_pair][j] = vals[j].re;
                gx[2 * a_pair + 1][j] = vals[j].im;
            }
        }
    }

    // Final constant sector from the structure expressed in the last frame.
    let dgx = displacement_jacobian(&chart, &gx)?;
    let mut expressed = TensorField::zeros(chart, 1, 1);
    for j in 0..points {
        let mut jac = DMatrix::<f64>::identity(dims, dims);
        for r in 0..dims {
            for c in 0..dims {
                jac[(r, c)] += dgx[r][c][j];
            }
        }
        let jt = jac.transpose();
        let jti = jt.clone().try_inverse().ok_or(CoordsError::SingularJacobian { flat: j })?;
        let a_here = &jt * &i0 * &jti;
        for r in 0..dims {
            for c in 0..dims {
                expressed.components_mut()[r * dims + c][j] =
                    a_here[(r, c)] + cdelta.comp(&[r, c])[j];
            }
        }
    }
    let k_final = mean_structure(&expressed)?;
    let (c_lin, cb_lin) = linear_sector(&k_final);

    // Invert the accumulated map x = w + gx(w) on the original grid and
    // assemble the periodic parts of z = C z0(w(x)) + Cb conj(z0(w(x))).
    let gx_disp = Displacement::new(chart, gx);
    let back_total = invert_displacement_with(&gx_disp, 1e-12, 80, 0.1 * cfg.resample_tol);
    let s = std::f64::consts::SQRT_2.recip();
    let mut w0diff = Vec::with_capacity(d);
    for m in 0..d {
        let vals: Vec<Complex64> = (0..points)
            .map(|j| {
                Complex64::new(
                    back_total.comps()[2 * m][j] * s,
                    back_total.comps()[2 * m + 1][j] * s,
                )
            })
            .collect();
        w0diff.push(ScalarField::from_values(chart, vals)?);
    }
    let mut periodic = Vec::with_capacity(d);
    for n in 0..d {
        let mut acc = ScalarField::zeros(chart);
        for m in 0..d {
            acc = acc
                .add(&w0diff[m].scale(c_lin[(n, m)]))?
                .add(&w0diff[m].conj().scale(cb_lin[(n, m)]))?;
        }
        periodic.push(acc);
    }
    let mut map = ComplexCoordinateMap::from_parts(chart, Some(c_lin), Some(cb_lin), periodic);
    map.provenance = provenance;
    Ok(map)
}

/// Max over n, M, and the grid of |D_M z^n| with D_M = d_M - i I[M][N] d_N.
pub fn coordinate_residual(
    map: &ComplexCoordinateMap,
    acs: &AlmostComplexStructure,
) -> Result<f64, CoordsError> {
    map.chart().check_same(acs.chart())?;
    let chart = *map.chart();
    let dims = chart.dims();
    let points = chart.point_count();
    let dz = map.derivatives()?;
    let ic = acs.structure().components();
    let mut worst = 0.0f64;
    for per_axis in &dz {
        for m in 0..dims {
            for j in 0..points {
                let mut v = per_axis[m][j];
                for nn in 0..dims {
                    v -= Complex64::new(0.0, ic[m * dims + nn][j]) * per_axis[nn][j];
                }
                worst = worst.max(v.norm());
            }
        }
    }
    Ok(worst)
}

/// Complex-frame Jacobian rows (dz^n, d conj(z^n)) at one point.
fn complex_jacobian(
    dz: &[Vec<Vec<Complex64>>],
    d: usize,
    dims: usize,
    j: usize,
) -> DMatrix<Complex64> {
    let mut jac = DMatrix::<Complex64>::zeros(dims, dims);
    for n in 0..d {
        for m in 0..dims {
            jac[(n, m)] = dz[n][m][j];
            jac[(d + n, m)] = dz[n][m][j].conj();
        }
    }
    jac
}

/// Transform the structure to the frame of the candidate coordinates and
/// measure the deviation from the canonical complex-frame form
/// I = diag(-i, ..., -i, +i, ..., +i).
pub fn complex_frame_residual(
    map: &ComplexCoordinateMap,
    acs: &AlmostComplexStructure,
) -> Result<f64, CoordsError> {
    map.chart().check_same(acs.chart())?;
    let chart = *map.chart();
    let dims = chart.dims();
    let d = chart.complex_dim();
    let points = chart.point_count();
    let dz = map.derivatives()?;
    let ic = acs.structure().components();
    let mut worst = 0.0f64;
    for j in 0..points {
        let jac = complex_jacobian(&dz, d, dims, j);
        let jinv = jac
            .clone()
            .try_inverse()
            .ok_or(CoordsError::SingularJacobian { flat: j })?;
        for a in 0..dims {
            for b in 0..dims {
                let mut v = Complex64::new(0.0, 0.0);
                for m in 0..dims {
                    for nn in 0..dims {
                        v += jinv[(m, a)] * Complex64::new(ic[m * dims + nn][j], 0.0) * jac[(b, nn)];
                    }
                }
                let want = if a == b {
                    if a < d {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    }
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((v - want).norm());
            }
        }
    }
    Ok(worst)
}

/// Metric blocks in the coordinate frame of the candidate map.
#[derive(Debug)]
pub struct HermitianMetricReport {
    /// Hermitian block h_{n mbar} as d^2 complex fields (row-major).
    pub h: Vec<ScalarField>,
    /// Max |g^{nm}| over the holomorphic-holomorphic inverse block.
    pub max_holo_inverse: f64,
    /// Max |g^{nbar mbar}|.
    pub max_antiholo_inverse: f64,
    /// Max |conj(h_{n mbar}) - h_{m nbar}|.
    pub hermiticity_residual: f64,
}

/// Transform the metric to the complex frame: the inverse-metric blocks
/// g^{nm} and g^{nbar mbar} vanish for true complex coordinates, and the
/// mixed lower block is the Hermitian metric.
pub fn hermitian_metric_report(
    map: &ComplexCoordinateMap,
    metric: &TensorField,
) -> Result<HermitianMetricReport, CoordsError> {
    map.chart().check_same(metric.chart())?;
    let chart = *map.chart();
    let dims = chart.dims();
    let d = chart.complex_dim();
    let points = chart.point_count();
    let dz = map.derivatives()?;
    let mut h_vals = vec![vec![Complex64::new(0.0, 0.0); points]; d * d];
    let mut max_holo = 0.0f64;
    let mut max_antiholo = 0.0f64;
    let mut herm = 0.0f64;
    for j in 0..points {
        let jac = complex_jacobian(&dz, d, dims, j);
        let jinv = jac
            .clone()
            .try_inverse()
            .ok_or(CoordsError::SingularJacobian { flat: j })?;
        let g = metric.matrix_at(j);
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or(CoordsError::SingularJacobian { flat: j })?;
        // Upper blocks: g^{ab} = J[a][M] J[b][N] ginv[M][N].
        for a in 0..d {
            for b in 0..d {
                let mut holo = Complex64::new(0.0, 0.0);
                let mut anti = Complex64::new(0.0, 0.0);
                for m in 0..dims {
                    for nn in 0..dims {
                        let gmn = Complex64::new(ginv[(m, nn)], 0.0);
                        holo += jac[(a, m)] * jac[(b, nn)] * gmn;
                        anti += jac[(d + a, m)] * jac[(d + b, nn)] * gmn;
                    }
                }
                max_holo = max_holo.max(holo.norm());
                max_antiholo = max_antiholo.max(anti.norm());
            }
        }
        // Lower mixed block: h_{n mbar} = Jinv[M][n] Jinv[N][d+m] g[M][N].
        for n in 0..d {
            for m in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for mm in 0..dims {
                    for nn in 0..dims {
                        acc += jinv[(mm, n)] * jinv[(nn, d + m)] * Complex64::new(g[(mm, nn)], 0.0);
                    }
                }
                h_vals[n * d + m][j] = acc;
            }
        }
        for n in 0..d {
            for m in 0..d {
                herm = herm.max((h_vals[n * d + m][j].conj() - h_vals[m * d + n][j]).norm());
            }
        }
    }
    let h = h_vals
        .into_iter()
        .map(|vals| ScalarField::from_values(chart, vals))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HermitianMetricReport {
        h,
        max_holo_inverse: max_holo,
        max_antiholo_inverse: max_antiholo,
        hermiticity_residual: herm,
    })
}
