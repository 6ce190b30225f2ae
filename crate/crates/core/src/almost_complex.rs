//! Validation and canonicalization of almost complex structures, Nijenhuis
//! tensors, and linearized constraint checks.
//!
//! A structure is a (1,1) tensor field with value table `I[M][N]` contracted
//! as `D_M = d_M - i I[M][N] d_N`; the canonical structure is
//! diag(eps, ..., eps) with eps = [[0,-1],[1,0]]. With a metric, the lowered
//! tensor `I.g` must be antisymmetric.

use crate::chart::{ChartError, GridChart, TensorField};
use crate::spectral;
use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AcsError {
    #[error("max |I^2 + 1| = {max:.3e} exceeds tolerance {tol:.3e}")]
    SquareResidualExceeded { max: f64, tol: f64 },
    #[error("max |I_MN + I_NM| = {max:.3e} exceeds tolerance {tol:.3e}")]
    AntisymmetryResidualExceeded { max: f64, tol: f64 },
    #[error("metric is not symmetric positive definite at grid point {flat}")]
    MetricNotSpd { flat: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("projection to I^2 = -1 stalled at residual {residual:.3e}")]
    ProjectionFailed { residual: f64 },
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// The 2x2 rotation block eps = [[0,-1],[1,0]].
pub fn eps_block() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Canonical table diag(eps, ..., eps) for a chart of real dimension D.
pub fn canonical_table(dims: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(dims, dims);
    for b in 0..dims / 2 {
        t[(2 * b, 2 * b + 1)] = -1.0;
        t[(2 * b + 1, 2 * b)] = 1.0;
    }
    t
}

/// Canonical structure field diag(eps, ..., eps).
pub fn canonical_structure(chart: GridChart) -> TensorField {
    TensorField::constant_rank2(chart, 1, 1, &canonical_table(chart.dims()))
}

/// Euclidean metric field.
pub fn flat_metric(chart: GridChart) -> TensorField {
    TensorField::constant_rank2(chart, 0, 2, &DMatrix::identity(chart.dims(), chart.dims()))
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub tol: f64,
    pub max_square_residual: f64,
    pub max_antisymmetry_residual: Option<f64>,
    pub metric_spd: Option<bool>,
}

/// A validated almost complex structure, optionally with a compatible metric.
#[derive(Debug, Clone)]
pub struct AlmostComplexStructure {
    structure: TensorField,
    metric: Option<TensorField>,
    report: ValidationReport,
}

impl AlmostComplexStructure {
    pub fn structure(&self) -> &TensorField {
        &self.structure
    }

    pub fn metric(&self) -> Option<&TensorField> {
        self.metric.as_ref()
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn chart(&self) -> &GridChart {
        self.structure.chart()
    }
}

/// Pointwise max-norm of I^2 + 1.
pub fn square_residual(structure: &TensorField) -> f64 {
    let dims = structure.chart().dims();
    let comps = structure.components();
    (0..structure.chart().point_count())
        .into_par_iter()
        .map(|j| {
            let mut worst = 0.0f64;
            for m in 0..dims {
                for n in 0..dims {
                    let mut acc = if m == n { 1.0 } else { 0.0 };
                    for p in 0..dims {
                        acc += comps[m * dims + p][j] * comps[p * dims + n][j];
                    }
                    worst = worst.max(acc.abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Validate a candidate structure against I^2 = -1 and, when a metric is
/// supplied, antisymmetry of the lowered tensor and positivity of the metric.
pub fn validate(
    structure: TensorField,
    metric: Option<TensorField>,
    tol: f64,
) -> Result<AlmostComplexStructure, AcsError> {
    assert_eq!(structure.rank(), (1, 1), "structure must be a (1,1) tensor");
    if structure.chart().dims() % 2 != 0 {
        return Err(AcsError::DegenerateInput("odd real dimension".into()));
    }
    let max_square = square_residual(&structure);
    if max_square > tol {
        return Err(AcsError::SquareResidualExceeded { max: max_square, tol });
    }
    let mut max_antisym = None;
    let mut spd = None;
    if let Some(g) = &metric {
        structure.chart().check_same(g.chart())?;
        let dims = structure.chart().dims();
        let ic = structure.components();
        let gc = g.components();
        let worst = (0..structure.chart().point_count())
            .into_par_iter()
            .map(|j| {
                let mut w = 0.0f64;
                for m in 0..dims {
                    for n in 0..dims {
                        let mut lower_mn = 0.0;
                        let mut lower_nm = 0.0;
                        for p in 0..dims {
                            lower_mn += ic[m * dims + p][j] * gc[p * dims + n][j];
                            lower_nm += ic[n * dims + p][j] * gc[p * dims + m][j];
                        }
                        w = w.max((lower_mn + lower_nm).abs());
                        w = w.max((gc[m * dims + n][j] - gc[n * dims + m][j]).abs());
                    }
                }
                w
            })
            .reduce(|| 0.0, f64::max);
        if worst > tol {
            return Err(AcsError::AntisymmetryResidualExceeded { max: worst, tol });
        }
        max_antisym = Some(worst);
        // Positivity via pointwise Cholesky.
        let bad = (0..structure.chart().point_count())
            .into_par_iter()
            .find_any(|&j| g.matrix_at(j).cholesky().is_none());
        if let Some(flat) = bad {
            return Err(AcsError::MetricNotSpd { flat });
        }
        spd = Some(true);
    }
    Ok(AlmostComplexStructure {
        structure,
        metric,
        report: ValidationReport {
            tol,
            max_square_residual: max_square,
            max_antisymmetry_residual: max_antisym,
            metric_spd: spd,
        },
    })
}

/// Build a per-point orthonormal frame bringing the structure to the
/// canonical block form, by the iterative pairing construction: pick a unit
/// vector, pair it with its image, restrict to the orthogonal complement,
/// recurse. The seed of each pair is the first standard basis vector with a
/// usable projection into the current complement.
pub fn canonical_frame(
    i_pt: &DMatrix<f64>,
    g_pt: &DMatrix<f64>,
    tol: f64,
) -> Result<DMatrix<f64>, AcsError> {
    let dims = i_pt.nrows();
    if dims % 2 != 0 {
        return Err(AcsError::DegenerateInput("odd dimension".into()));
    }
    if g_pt.clone().cholesky().is_none() {
        return Err(AcsError::DegenerateInput("metric not positive definite".into()));
    }
    // J acts on vectors: (J v)^P = v^M I[M][P].
    let j_op = i_pt.transpose();
    let g_dot = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a.transpose() * g_pt * b)[(0, 0)];
    let mut frame: Vec<DMatrix<f64>> = Vec::with_capacity(dims);
    let mut seed = 0usize;
    while frame.len() < dims {
        // Seed for the next pair, projected into the current complement.
        let mut v = None;
        while seed < dims {
            let mut w = DMatrix::zeros(dims, 1);
            w[(seed, 0)] = 1.0;
            seed += 1;
            for e in &frame {
                let c = g_dot(&w, e);
                w -= e * c;
            }
            let norm = g_dot(&w, &w).sqrt();
            if norm > 1e-8 {
                v = Some(w / norm);
                break;
            }
        }
        let e_odd = v.ok_or_else(|| {
            AcsError::DegenerateInput("no usable seed vector for the next frame pair".into())
        })?;
        // Partner vector: -J e, reorthogonalized against the frame so the
        // output is orthonormal to round-off even for slightly off inputs.
        let mut e_even = -(&j_op * &e_odd);
        let raw = e_even.clone();
        for e in frame.iter().chain(std::iter::once(&e_odd)) {
            let c = g_dot(&e_even, e);
            e_even -= e * c;
        }
        let norm = g_dot(&e_even, &e_even).sqrt();
        if norm < 0.5 || (g_dot(&raw, &raw).sqrt() - 1.0).abs() > 0.1 {
            return Err(AcsError::DegenerateInput(format!(
                "structure does not preserve the complement (pair norm {norm:.3e}, tol {tol:.1e})"
            )));
        }
        frame.push(e_odd);
        frame.push(e_even / norm);
    }
    let mut e = DMatrix::zeros(dims, dims);
    for (a, col) in frame.iter().enumerate() {
        e.set_column(a, &col.column(0));
    }
    Ok(e)
}

/// Per-point orthonormal frames for a whole validated structure.
#[derive(Debug, Clone)]
pub struct Vielbein {
    chart: GridChart,
    frames: Vec<DMatrix<f64>>,
}

impl Vielbein {
    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn frame_at(&self, flat: usize) -> &DMatrix<f64> {
        &self.frames[flat]
    }
}

pub fn vielbein(acs: &AlmostComplexStructure) -> Result<Vielbein, AcsError> {
    let chart = *acs.chart();
    let dims = chart.dims();
    let identity = DMatrix::identity(dims, dims);
    let frames: Result<Vec<_>, AcsError> = (0..chart.point_count())
        .into_par_iter()
        .map(|j| {
            let i_pt = acs.structure().matrix_at(j);
            let g_pt = acs
                .metric()
                .map(|g| g.matrix_at(j))
                .unwrap_or_else(|| identity.clone());
            canonical_frame(&i_pt, &g_pt, acs.report().tol)
        })
        .collect();
    Ok(Vielbein {
        chart,
        frames: frames?,
    })
}

/// The Nijenhuis field, stored exactly antisymmetrized in the lower pair.
#[derive(Debug, Clone)]
pub struct NijenhuisField {
    tensor: TensorField,
    max_abs: f64,
}

impl NijenhuisField {
    pub fn tensor(&self) -> &TensorField {
        &self.tensor
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }
}

/// Spatial derivatives d_M I[N][K] of all components, as flat arrays
/// indexed [m][n*dims + k].
pub fn structure_derivatives(structure: &TensorField) -> Result<Vec<Vec<Vec<f64>>>, ChartError> {
    let chart = structure.chart();
    let dims = chart.dims();
    (1..=dims)
        .map(|m| {
            structure
                .components()
                .iter()
                .map(|comp| spectral::partial_real(chart, comp, m))
                .collect()
        })
        .collect()
}

/// Evaluate the Nijenhuis tensor
/// N[M][N][K] = d_[M I_N]][K] - I[M][P] I[N][Q] d_[P I_Q]][K]
/// with the unnormalized antisymmetrizer X_[MN] = X_MN - X_NM.
pub fn nijenhuis(acs: &AlmostComplexStructure) -> Result<NijenhuisField, AcsError> {
    let chart = *acs.chart();
    let dims = chart.dims();
    let points = chart.point_count();
    let ic = acs.structure().components();
    let di = structure_derivatives(acs.structure())?;

    // a[m][q*dims+k][j] = sum_p I[m][p] d_p I[q][k]
    let a: Vec<Vec<Vec<f64>>> = (0..dims)
        .into_par_iter()
        .map(|m| {
            (0..dims * dims)
                .map(|qk| {
                    let mut acc = vec![0.0; points];
                    for p in 0..dims {
                        let ip = &ic[m * dims + p];
                        let dpi = &di[p][qk];
                        for j in 0..points {
                            acc[j] += ip[j] * dpi[j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let mut tensor = TensorField::zeros(chart, 1, 2);
    let mut max_abs = 0.0f64;
    for m in 0..dims {
        for n in (m + 1)..dims {
            for k in 0..dims {
                let mut comp = vec![0.0; points];
                for j in 0..points {
                    let mut v = di[m][n * dims + k][j] - di[n][m * dims + k][j];
                    for q in 0..dims {
                        v -= ic[n * dims + q][j] * a[m][q * dims + k][j];
                        v += ic[m * dims + q][j] * a[n][q * dims + k][j];
                    }
                    comp[j] = v;
                    max_abs = max_abs.max(v.abs());
                }
                let neg: Vec<f64> = comp.iter().map(|v| -v).collect();
                tensor.comp_mut(&[m, n, k]).copy_from_slice(&comp);
                tensor.comp_mut(&[n, m, k]).copy_from_slice(&neg);
            }
        }
    }
    Ok(NijenhuisField { tensor, max_abs })
}

/// Contraction with I giving the conventional normalization:
/// N_conv[M][N][K] = sum_P I[M][P] N[P][N][K].
pub fn conventional_nijenhuis(
    nf: &NijenhuisField,
    acs: &AlmostComplexStructure,
) -> Result<NijenhuisField, AcsError> {
    let chart = *acs.chart();
    chart.check_same(nf.tensor.chart())?;
    let dims = chart.dims();
    let points = chart.point_count();
    let ic = acs.structure().components();
    let mut tensor = TensorField::zeros(chart, 1, 2);
    let mut max_abs = 0.0f64;
    for m in 0..dims {
        for n in 0..dims {
            for k in 0..dims {
                let mut comp = vec![0.0; points];
                for p in 0..dims {
                    let ip = &ic[m * dims + p];
                    let np = nf.tensor.comp(&[p, n, k]);
                    for j in 0..points {
                        comp[j] += ip[j] * np[j];
                    }
                }
                for v in &comp {
                    max_abs = max_abs.max(v.abs());
                }
                tensor.comp_mut(&[m, n, k]).copy_from_slice(&comp);
            }
        }
    }
    Ok(NijenhuisField { tensor, max_abs })
}

/// Max-norm of Delta I0 + I0 Delta against the canonical structure.
pub fn anticommutator_residual(delta: &TensorField) -> f64 {
    let chart = delta.chart();
    let dims = chart.dims();
    let i0 = canonical_table(dims);
    let dc = delta.components();
    (0..chart.point_count())
        .into_par_iter()
        .map(|j| {
            let mut worst = 0.0f64;
            for m in 0..dims {
                for n in 0..dims {
                    let mut acc = 0.0;
                    for p in 0..dims {
                        acc += dc[m * dims + p][j] * i0[(p, n)];
                        acc += i0[(m, p)] * dc[p * dims + n][j];
                    }
                    worst = worst.max(acc.abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Max-norm of the two sides of the linearized integrability conditions:
/// d_P Delta[N][M] - d_N Delta[P][M]
///   = I0[P][Q] I0[N][S] (d_Q Delta[S][M] - d_S Delta[Q][M]).
pub fn linearized_nijenhuis_residual(delta: &TensorField) -> Result<f64, AcsError> {
    let chart = delta.chart();
    let dims = chart.dims();
    let points = chart.point_count();
    let i0 = canonical_table(dims);
    let dd = structure_derivatives(delta)?;
    let mut worst = 0.0f64;
    for p in 0..dims {
        for n in 0..dims {
            for m in 0..dims {
                for j in 0..points {
                    let lhs = dd[p][n * dims + m][j] - dd[n][p * dims + m][j];
                    let mut rhs = 0.0;
                    for q in 0..dims {
                        if i0[(p, q)] == 0.0 {
                            continue;
                        }
                        for s in 0..dims {
                            if i0[(n, s)] == 0.0 {
                                continue;
                            }
                            rhs += i0[(p, q)]
                                * i0[(n, s)]
                                * (dd[q][s * dims + m][j] - dd[s][q * dims + m][j]);
                        }
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Project a near-structure to the closest tensor with I^2 = -1 exactly,
/// via the coupled Newton iteration for the inverse square root of -I^2.
/// I and -I^2 commute, so I (-I^2)^{-1/2} squares to -1.
pub fn polar_project(structure: &TensorField, tol: f64) -> Result<TensorField, AcsError> {
    let chart = *structure.chart();
    let dims = chart.dims();
    let points = chart.point_count();
    let comps: Vec<Result<Vec<f64>, AcsError>> = (0..points)
        .into_par_iter()
        .map(|j| {
            let i_pt = structure.matrix_at(j);
            let s = -(&i_pt * &i_pt);
            let depart = (&s - DMatrix::identity(dims, dims)).norm();
            if depart > 0.9 {
                return Err(AcsError::ProjectionFailed { residual: depart });
            }
            let mut y = s.clone();
            let mut z = DMatrix::<f64>::identity(dims, dims);
            for _ in 0..40 {
                let t = (DMatrix::<f64>::identity(dims, dims) * 3.0 - &z * &y) * 0.5;
                y = &y * &t;
                z = &t * &z;
                if (&z * &y - DMatrix::<f64>::identity(dims, dims)).norm() < 1e-15 {
                    break;
                }
            }
            let fixed = &i_pt * &z;
            let resid = (&fixed * &fixed + DMatrix::<f64>::identity(dims, dims)).norm();
            if resid > tol {
                return Err(AcsError::ProjectionFailed { residual: resid });
            }
            let mut row = Vec::with_capacity(dims * dims);
            for r in 0..dims {
                for c in 0..dims {
                    row.push(fixed[(r, c)]);
                }
            }
            Ok(row)
        })
        .collect();
    let mut out = TensorField::zeros(chart, 1, 1);
    for (j, per_point) in comps.into_iter().enumerate() {
        let per_point = per_point?;
        for (ci, v) in per_point.into_iter().enumerate() {
            out.components_mut()[ci][j] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ScalarField;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    fn chart2() -> GridChart {
        GridChart::new(2, 8, TAU).unwrap()
    }

    #[test]
    fn canonical_structure_validates_with_zero_residuals() {
        let chart = chart2();
        let acs = validate(
            canonical_structure(chart),
            Some(flat_metric(chart)),
            1e-8,
        )
        .unwrap();
        assert_eq!(acs.report().max_square_residual, 0.0);
        assert_eq!(acs.report().max_antisymmetry_residual, Some(0.0));
    }

    #[test]
    fn sign_flip_breaks_the_square_condition() {
        let chart = chart2();
        let mut table = canonical_table(chart.dims());
        table[(0, 1)] = 1.0;
        let bad = TensorField::constant_rank2(chart, 1, 1, &table);
        assert!(matches!(
            validate(bad, None, 1e-8),
            Err(AcsError::SquareResidualExceeded { .. })
        ));
    }

    #[test]
    fn canonical_frame_is_identity_on_the_canonical_structure() {
        let dims = 4;
        let e = canonical_frame(
            &canonical_table(dims),
            &DMatrix::identity(dims, dims),
            1e-8,
        )
        .unwrap();
        assert!((e - DMatrix::<f64>::identity(dims, dims)).norm() < 1e-14);
    }

    #[test]
    fn canonical_frame_on_reversed_orientation() {
        // A 2x2 antisymmetric root of -1 is eps up to a sign; the frame for
        // -eps flips the second axis.
        let minus_eps = -eps_block();
        let g = DMatrix::identity(2, 2);
        let e = canonical_frame(&minus_eps, &g, 1e-8).unwrap();
        let lowered = &minus_eps * &g;
        let projected = e.transpose() * lowered * &e;
        assert!((projected - eps_block()).norm() < 1e-14);
        assert!((e[(1, 1)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn canonical_frame_recovers_rotated_structures() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dims = 4;
        for _ in 0..20 {
            // Random orthogonal conjugation of the canonical table.
            let a = DMatrix::from_fn(dims, dims, |_, _| rng.gen_range(-1.0..1.0));
            let qr = a.qr();
            let r = qr.q();
            let i_pt = &r * canonical_table(dims) * r.transpose();
            let g = DMatrix::identity(dims, dims);
            let e = canonical_frame(&i_pt, &g, 1e-8).unwrap();
            let ortho = (e.transpose() * &g * &e - DMatrix::<f64>::identity(dims, dims)).norm();
            assert!(ortho < 1e-12, "orthonormality {ortho:.3e}");
            let projected = e.transpose() * (&i_pt * &g) * &e;
            let resid = (projected - canonical_table(dims)).norm();
            assert!(resid < 1e-12, "projection residual {resid:.3e}");
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let g = DMatrix::zeros(2, 2);
        assert!(matches!(
            canonical_frame(&eps_block(), &g, 1e-8),
            Err(AcsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn constant_structure_has_zero_nijenhuis() {
        let chart = chart2();
        let acs = validate(canonical_structure(chart), None, 1e-8).unwrap();
        let nf = nijenhuis(&acs).unwrap();
        assert_eq!(nf.max_abs(), 0.0);
    }

    #[test]
    fn any_two_dimensional_structure_is_integrable() {
        // Perturb the canonical structure on a d=1 chart, reproject, and
        // check the Nijenhuis tensor vanishes to spectral accuracy.
        let chart = GridChart::new(1, 16, TAU).unwrap();
        let mut delta = TensorField::zeros(chart, 1, 1);
        let f = ScalarField::from_fn(chart, |x| {
            num_complex::Complex64::new(0.01 * (x[0].sin() + (x[1] * 2.0).cos()), 0.0)
        })
        .re();
        let g = ScalarField::from_fn(chart, |x| {
            num_complex::Complex64::new(0.01 * ((x[0] + x[1]).cos()), 0.0)
        })
        .re();
        // Anticommuting pattern: diag block [[a, b], [b, -a]].
        delta.comp_mut(&[0, 0]).copy_from_slice(&f);
        delta.comp_mut(&[0, 1]).copy_from_slice(&g);
        delta.comp_mut(&[1, 0]).copy_from_slice(&g);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        delta.comp_mut(&[1, 1]).copy_from_slice(&neg);
        let candidate = canonical_structure(chart).add(&delta).unwrap();
        let projected = polar_project(&candidate, 1e-12).unwrap();
        let acs = validate(projected, None, 1e-10).unwrap();
        let nf = nijenhuis(&acs).unwrap();
        assert!(nf.max_abs() < 1e-8, "max |N| = {:.3e}", nf.max_abs());
    }

    #[test]
    fn conventional_contraction_matches_loop_oracle_and_squares_to_minus_one() {
        let chart = GridChart::new(1, 8, TAU).unwrap();
        let mut delta = TensorField::zeros(chart, 1, 1);
        let f = ScalarField::from_fn(chart, |x| {
            num_complex::Complex64::new(0.05 * x[0].sin(), 0.0)
        })
        .re();
        delta.comp_mut(&[0, 0]).copy_from_slice(&f);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        delta.comp_mut(&[1, 1]).copy_from_slice(&neg);
        let projected = polar_project(&canonical_structure(chart).add(&delta).unwrap(), 1e-12).unwrap();
        let acs = validate(projected, None, 1e-8).unwrap();
        let nf = nijenhuis(&acs).unwrap();
        let conv = conventional_nijenhuis(&nf, &acs).unwrap();
        // Independent elementwise contraction oracle.
        let dims = chart.dims();
        let ic = acs.structure().components();
        for m in 0..dims {
            for n in 0..dims {
                for k in 0..dims {
                    for j in [0usize, 5, 17] {
                        let mut want = 0.0;
                        for p in 0..dims {
                            want += ic[m * dims + p][j] * nf.tensor().comp(&[p, n, k])[j];
                        }
                        let got = conv.tensor().comp(&[m, n, k])[j];
                        assert!((got - want).abs() < 1e-14);
                    }
                }
            }
        }
        // Applying the map twice equals -N by I^2 = -1.
        let twice = conventional_nijenhuis(&conv, &acs).unwrap();
        for (a, b) in twice
            .tensor()
            .components()
            .iter()
            .zip(nf.tensor().components())
        {
            for (x, y) in a.iter().zip(b) {
                assert!((x + y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn anticommutator_residual_matches_hand_cases() {
        let chart = GridChart::new(1, 4, TAU).unwrap();
        // Pauli-pattern Delta anticommutes: Delta11 = -Delta22, Delta12 = Delta21.
        let mut delta = TensorField::zeros(chart, 1, 1);
        let ones = vec![0.3; chart.point_count()];
        let twos = vec![-0.1; chart.point_count()];
        delta.comp_mut(&[0, 0]).copy_from_slice(&ones);
        delta.comp_mut(&[1, 1]).copy_from_slice(&ones.iter().map(|v| -v).collect::<Vec<_>>());
        delta.comp_mut(&[0, 1]).copy_from_slice(&twos);
        delta.comp_mut(&[1, 0]).copy_from_slice(&twos);
        assert!(anticommutator_residual(&delta) < 1e-15);
        // Delta = eps commutes instead: residual is exactly 2.
        let eps = TensorField::constant_rank2(chart, 1, 1, &eps_block());
        assert!((anticommutator_residual(&eps) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linearized_residual_vanishes_for_dbar_exact_deformations() {
        // Read Delta off a chosen smooth periodic dz via the reduced system
        // run backwards; the linearized conditions then hold by construction.
        let chart = GridChart::new(2, 8, TAU).unwrap();
        let dz: Vec<ScalarField> = (0..2)
            .map(|n| {
                ScalarField::from_fn(chart, |x| {
                    let phase = if n == 0 { x[0] + x[2] } else { x[1] - x[3] };
                    num_complex::Complex64::new(0.02 * phase.sin(), 0.015 * phase.cos())
                })
            })
            .collect();
        let mut delta = TensorField::zeros(chart, 1, 1);
        for nn in 0..2usize {
            for mm in 0..2usize {
                let omega = spectral::wirtinger(&dz[nn], mm + 1, true).unwrap();
                // omega = (i/2) (Delta[2m][2n] + i Delta[2m][2n+1]) (0-based
                // rows 2m), so Delta_row = -2 i omega.
                let comp = omega.scale(num_complex::Complex64::new(0.0, -2.0));
                let re = comp.re();
                let im = comp.im();
                delta.comp_mut(&[2 * mm, 2 * nn]).copy_from_slice(&re);
                delta.comp_mut(&[2 * mm, 2 * nn + 1]).copy_from_slice(&im);
                // Anticommutation completion: each block is [[p, q], [q, -p]].
                let neg_re: Vec<f64> = re.iter().map(|v| -v).collect();
                delta.comp_mut(&[2 * mm + 1, 2 * nn]).copy_from_slice(&im);
                delta.comp_mut(&[2 * mm + 1, 2 * nn + 1]).copy_from_slice(&neg_re);
            }
        }
        assert!(anticommutator_residual(&delta) < 1e-13);
        let resid = linearized_nijenhuis_residual(&delta).unwrap();
        assert!(resid < 1e-8, "residual {resid:.3e}");
        assert!(linearized_nijenhuis_residual(&TensorField::zeros(chart, 1, 1)).unwrap() == 0.0);
    }
}
