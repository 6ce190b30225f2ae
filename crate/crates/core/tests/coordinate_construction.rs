//! End-to-end checks of the coordinate constructor against pullback
//! structures with known exact coordinates.

use acomplex_core::almost_complex::{canonical_structure, flat_metric, nijenhuis, polar_project, validate};
use acomplex_core::chart::{GridChart, ScalarField, TensorField};
use acomplex_core::coords::{self, ComplexCoordinateMap, ConstructConfig, CoordsError};
use acomplex_core::deform::{benchmark_diffeo, exact_pullback_coordinates, pullback_pair};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

fn benchmark_structure(
    n: usize,
    s: f64,
    with_metric: bool,
) -> (GridChart, acomplex_core::AlmostComplexStructure) {
    let chart = GridChart::new(2, n, TAU).unwrap();
    let spec = benchmark_diffeo(s);
    let (i_field, g_field) = pullback_pair(&chart, &spec).unwrap();
    let metric = if with_metric { Some(g_field) } else { None };
    (chart, validate(i_field, metric, 1e-8).unwrap())
}

/// A deformation violating the closedness (integrability) conditions:
/// one anticommuting block sourced by a field of the wrong variable.
fn non_closed_delta(chart: GridChart, amplitude: f64) -> TensorField {
    let mut delta = TensorField::zeros(chart, 1, 1);
    let p = ScalarField::from_fn(chart, |x| Complex64::new(amplitude * (x[2]).sin(), 0.0)).re();
    let q = ScalarField::from_fn(chart, |x| Complex64::new(amplitude * (x[3]).cos(), 0.0)).re();
    let neg_p: Vec<f64> = p.iter().map(|v| -v).collect();
    delta.comp_mut(&[0, 0]).copy_from_slice(&p);
    delta.comp_mut(&[0, 1]).copy_from_slice(&q);
    delta.comp_mut(&[1, 0]).copy_from_slice(&q);
    delta.comp_mut(&[1, 1]).copy_from_slice(&neg_p);
    delta
}

#[test]
fn canonical_coordinates_solve_the_canonical_structure() {
    let chart = GridChart::new(2, 8, TAU).unwrap();
    let acs = validate(canonical_structure(chart), Some(flat_metric(chart)), 1e-10).unwrap();
    let map = ComplexCoordinateMap::canonical(chart);
    assert!(coords::coordinate_residual(&map, &acs).unwrap() < 1e-12);
    assert!(coords::complex_frame_residual(&map, &acs).unwrap() < 1e-12);
    let report = coords::hermitian_metric_report(&map, acs.metric().unwrap()).unwrap();
    assert!(report.max_holo_inverse < 1e-12);
    assert!(report.hermiticity_residual < 1e-12);
    // Flat metric in canonical coordinates: h is the identity block.
    let d = chart.complex_dim();
    for n in 0..d {
        for m in 0..d {
            let want = if n == m { 1.0 } else { 0.0 };
            for v in report.h[n * d + m].values().iter().take(4) {
                assert!((v - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn linear_step_on_canonical_structure_returns_canonical_map() {
    let chart = GridChart::new(2, 8, TAU).unwrap();
    let acs = validate(canonical_structure(chart), None, 1e-10).unwrap();
    let map = coords::linear_step(&acs, &ConstructConfig::default()).unwrap();
    let (c, cb) = map.linear();
    assert!((c - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-14);
    assert!(cb.norm() < 1e-14);
    for p in map.periodic() {
        assert!(p.max_abs() < 1e-14);
    }
}

#[test]
fn exact_pullback_coordinates_have_machine_residual() {
    let chart = GridChart::new(2, 16, TAU).unwrap();
    let spec = benchmark_diffeo(0.1);
    let (i_field, g_field) = pullback_pair(&chart, &spec).unwrap();
    let acs = validate(i_field, Some(g_field), 1e-8).unwrap();
    let exact = exact_pullback_coordinates(&chart, &spec).unwrap();
    assert!(coords::coordinate_residual(&exact, &acs).unwrap() < 1e-12);
    // The metric transforms to Hermitian form in these coordinates.
    let report = coords::hermitian_metric_report(&exact, acs.metric().unwrap()).unwrap();
    assert!(report.max_holo_inverse < 1e-10);
    assert!(report.hermiticity_residual < 1e-10);
}

#[test]
fn single_linear_step_residual_scales_quadratically() {
    let mut resids = Vec::new();
    for s in [1e-2, 1e-3] {
        let (_, acs) = benchmark_structure(16, s, false);
        let map = coords::linear_step(&acs, &ConstructConfig::default()).unwrap();
        let r = coords::coordinate_residual(&map, &acs).unwrap();
        assert!(r <= 10.0 * s * s, "s={s}: r={r:.3e}");
        resids.push((s, r));
    }
    let slope = (resids[0].1.ln() - resids[1].1.ln()) / (resids[0].0.ln() - resids[1].0.ln());
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn stale_coordinates_see_the_deformation() {
    // z0 against a deformed structure leaves a residual at the size of the
    // deformation.
    let (chart, acs) = benchmark_structure(8, 1e-2, false);
    let map = ComplexCoordinateMap::canonical(chart);
    let r = coords::coordinate_residual(&map, &acs).unwrap();
    let delta_inf = acs
        .structure()
        .sub(&canonical_structure(chart))
        .unwrap()
        .max_abs();
    assert!(r > 0.05 * delta_inf && r < 5.0 * delta_inf, "r={r}, delta={delta_inf}");
    // The complex-frame residual measures the same failure.
    let fr = coords::complex_frame_residual(&map, &acs).unwrap();
    assert!(fr > 0.05 * delta_inf && fr < 5.0 * delta_inf);
}

#[test]
fn continuation_beats_the_single_step_and_is_monotone() {
    let (_, acs) = benchmark_structure(8, 0.1, false);
    let cfg = ConstructConfig::default();
    let single = coords::linear_step(&acs, &cfg).unwrap();
    let r_single = coords::coordinate_residual(&single, &acs).unwrap();
    let five = coords::construct_coordinates(&acs, 5, &cfg).unwrap();
    let r5 = coords::coordinate_residual(&five, &acs).unwrap();
    let ten = coords::construct_coordinates(&acs, 10, &cfg).unwrap();
    let r10 = coords::coordinate_residual(&ten, &acs).unwrap();
    assert!(r5 <= 1e-3, "r5 = {r5:.3e}");
    assert!(r5 < r_single, "r5 = {r5:.3e} vs single {r_single:.3e}");
    assert!(r10 < r5, "r10 = {r10:.3e} vs r5 = {r5:.3e}");
    assert_eq!(five.provenance.steps.len(), 5);
}

#[test]
fn construct_refuses_non_integrable_structures_before_solving() {
    let chart = GridChart::new(2, 8, TAU).unwrap();
    let delta = non_closed_delta(chart, 0.04);
    let candidate = canonical_structure(chart).add(&delta).unwrap();
    let structure = polar_project(&candidate, 1e-10).unwrap();
    let acs = validate(structure, None, 1e-8).unwrap();
    let nf = nijenhuis(&acs).unwrap();
    assert!(nf.max_abs() > 1e-3, "N = {:.3e}", nf.max_abs());
    match coords::construct_coordinates(&acs, 4, &ConstructConfig::default()) {
        Err(CoordsError::IntegrabilityObstruction { residual, .. }) => {
            assert!(residual > 1e-3);
        }
        other => panic!("expected obstruction, got {other:?}"),
    }
}

#[test]
fn linear_step_detects_non_closed_rows() {
    let chart = GridChart::new(2, 8, TAU).unwrap();
    let delta = non_closed_delta(chart, 0.01);
    let candidate = canonical_structure(chart).add(&delta).unwrap();
    let structure = polar_project(&candidate, 1e-10).unwrap();
    let acs = validate(structure, None, 1e-8).unwrap();
    assert!(matches!(
        coords::linear_step(&acs, &ConstructConfig::default()),
        Err(CoordsError::IntegrabilityObstruction { .. })
    ));
}

#[test]
fn step_bound_is_enforced_with_a_suggestion() {
    let chart = GridChart::new(2, 8, TAU).unwrap();
    let spec = benchmark_diffeo(0.9);
    let (i_field, _) = pullback_pair(&chart, &spec).unwrap();
    let acs = validate(i_field, None, 1e-8).unwrap();
    match coords::linear_step(&acs, &ConstructConfig::default()) {
        Err(CoordsError::StepTooLarge { suggested_steps, .. }) => {
            assert!(suggested_steps > 1);
        }
        other => panic!("expected StepTooLarge, got {other:?}"),
    }
}

#[test]
fn holomorphic_reparametrization_leaves_the_residual_scale_unchanged() {
    let (_, acs) = benchmark_structure(8, 1e-2, false);
    let map = coords::linear_step(&acs, &ConstructConfig::default()).unwrap();
    let r = coords::coordinate_residual(&map, &acs).unwrap();
    // Nondegenerate constant analytic reparametrization w = A z (the only
    // holomorphic maps preserving the periodic torus ansatz).
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.3),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.0, -0.4),
            Complex64::new(0.8, 0.0),
        ],
    );
    let re_map = map.reparametrize(&a);
    let r2 = coords::coordinate_residual(&re_map, &acs).unwrap();
    let cond = {
        let svd = a.map(|v| v).svd(false, false);
        svd.singular_values.max() / svd.singular_values.min()
    };
    assert!(r2 <= 10.0 * cond * r, "r={r:.3e} r2={r2:.3e} cond={cond:.2}");
    assert!(r2 >= r / (10.0 * cond));
}

#[test]
fn hermitian_report_flags_incompatible_metrics() {
    // A metric that does not lower the structure antisymmetrically: the
    // report carries a large holomorphic block rather than an error.
    let (chart, acs) = benchmark_structure(8, 1e-2, false);
    let map = coords::linear_step(&acs, &ConstructConfig::default()).unwrap();
    let mut bad = flat_metric(chart);
    // Stretch one axis so g is SPD but incompatible with the structure.
    for v in bad.comp_mut(&[0, 0]).iter_mut() {
        *v = 3.0;
    }
    let report = coords::hermitian_metric_report(&map, &bad).unwrap();
    assert!(report.max_holo_inverse > 0.1);
}

#[test]
fn continuation_hermitian_blocks_track_the_coordinate_residual() {
    let (_, acs) = benchmark_structure(8, 0.1, true);
    let cfg = ConstructConfig::default();
    let map = coords::construct_coordinates(&acs, 5, &cfg).unwrap();
    let r = coords::coordinate_residual(&map, &acs).unwrap();
    let report = coords::hermitian_metric_report(&map, acs.metric().unwrap()).unwrap();
    assert!(
        report.max_holo_inverse <= 10.0 * r,
        "holo {:.3e} vs residual {:.3e}",
        report.max_holo_inverse,
        r
    );
    assert!(report.hermiticity_residual < 1e-10);
}
