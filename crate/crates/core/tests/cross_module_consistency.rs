//! Consistency between the symbolic verifier and the numeric geometry:
//! the Nijenhuis pattern extracted from the covariant-derivative commutator
//! must reproduce the numeric Nijenhuis field, and the Nijenhuis tensor must
//! transform as a tensor under periodic diffeomorphisms.

use acomplex_core::almost_complex::{
    canonical_structure, nijenhuis, polar_project, structure_derivatives, validate,
};
use acomplex_core::chart::{GridChart, ScalarField, TensorField};
use acomplex_core::deform::{DiffeoSpec, DisplacementMode};
use acomplex_core::resample::{eval_shifted, Displacement};
use acomplex_core::susy::{self, FormalStructure};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;

/// A random band-limited valid structure: canonical plus a small smooth
/// perturbation, reprojected onto I^2 = -1.
fn random_structure(chart: GridChart, amplitude: f64, seed: u64) -> TensorField {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dims = chart.dims();
    let mut delta = TensorField::zeros(chart, 1, 1);
    for r in 0..dims {
        for c in 0..dims {
            let a: f64 = rng.gen_range(-amplitude..amplitude);
            let b: f64 = rng.gen_range(-amplitude..amplitude);
            let k1 = rng.gen_range(0..dims);
            let k2 = rng.gen_range(0..dims);
            let f = ScalarField::from_fn(chart, |x| {
                Complex64::new(a * (x[k1]).sin() + b * (x[k2] + x[k1]).cos(), 0.0)
            });
            delta.comp_mut(&[r, c]).copy_from_slice(&f.re());
        }
    }
    let candidate = canonical_structure(chart).add(&delta).unwrap();
    polar_project(&candidate, 1e-11).unwrap()
}

#[test]
fn symbolic_nijenhuis_pattern_matches_numeric_evaluation() {
    let chart = GridChart::new(2, 8, TAU).unwrap();
    let dims = chart.dims();
    let structure = random_structure(chart, 0.05, 11);
    let acs = validate(structure, None, 1e-8).unwrap();
    let nf = nijenhuis(&acs).unwrap();
    let di = structure_derivatives(acs.structure()).unwrap();
    let fs = FormalStructure::new(dims).unwrap();

    for (m, n) in [(1u16, 2u16), (1, 3), (2, 4), (3, 4)] {
        let report = susy::cal_d_commutator(&fs, m, n);
        assert!(report.residual.is_zero());
        // The reduced commutator equals -i N_[MN]^K d_K z; extract the
        // coefficient polynomials and evaluate them on the sampled field.
        let reduced = report
            .raw
            .sub(&report.dz_term)
            .sub(&report.relation_content);
        let coeffs = susy::coord_jet_coefficients(&reduced, 1);
        for j in [0usize, 17, 101, 255] {
            let sample = |row: u16, col: u16, derivs: &[u16]| -> f64 {
                let r = row as usize - 1;
                let c = col as usize - 1;
                match derivs {
                    [] => acs.structure().comp(&[r, c])[j],
                    [p] => di[*p as usize - 1][r * dims + c][j],
                    other => panic!("unexpected derivative order {other:?}"),
                }
            };
            for k in 1..=dims as u16 {
                let poly = coeffs
                    .get(&vec![k])
                    .cloned()
                    .unwrap_or_else(acomplex_core::grassmann::expr::GrassmannExpr::zero);
                let value = susy::eval_struct_poly(&poly, &sample);
                // Coefficient is -i times the Nijenhuis component; no extra
                // antisymmetrization factor under the unnormalized
                // convention.
                let want = nf.tensor().comp(&[m as usize - 1, n as usize - 1, k as usize - 1])[j];
                let got = (Complex64::new(0.0, 1.0) * value).re;
                assert!(
                    (got - want).abs() < 1e-10,
                    "(M,N,K)=({m},{n},{k}) point {j}: symbolic {got:.3e} vs numeric {want:.3e}"
                );
                assert!(value.im.abs() < 1e-12 || (value * Complex64::new(0.0, 1.0)).im.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn nijenhuis_transforms_as_a_tensor() {
    // Pull a non-integrable structure back through a periodic diffeomorphism
    // and compare its Nijenhuis field with the Jacobian-transformed pullback
    // of the original one. (d = 1 structures are always integrable, so the
    // test lives on a d = 2 chart.)
    let chart = GridChart::new(2, 16, TAU).unwrap();
    let dims = chart.dims();
    let structure = random_structure(chart, 0.02, 5);
    let acs = validate(structure.clone(), None, 1e-8).unwrap();
    let nf = nijenhuis(&acs).unwrap();
    assert!(nf.max_abs() > 1e-4, "want a non-integrable test structure");

    let spec = DiffeoSpec {
        modes: vec![
            DisplacementMode {
                component: 2,
                k: vec![1, 0, 0, 0],
                cos_coeff: 0.006,
                sin_coeff: 0.0,
            },
            DisplacementMode {
                component: 4,
                k: vec![0, 0, 1, 0],
                cos_coeff: 0.0,
                sin_coeff: 0.005,
            },
        ],
        scale: 1.0,
    };
    // phi(x) = x + v(x); the pulled-back tensor at x uses values at phi(x).
    let v = spec.displacement(&chart);
    let points = chart.point_count();
    let shift = Displacement::new(chart, v);
    // Values of the structure and of its Nijenhuis field at phi(x),
    // evaluated pairwise through complex packing.
    let eval_packed = |comps: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(comps.len());
        for pair in comps.chunks(2) {
            let vals: Vec<Complex64> = (0..points)
                .map(|j| Complex64::new(pair[0][j], pair.get(1).map_or(0.0, |p| p[j])))
                .collect();
            let f = ScalarField::from_values(chart, vals).unwrap();
            let shifted = eval_shifted(&f, &shift, 1e-10);
            out.push(shifted.iter().map(|z| z.re).collect());
            if pair.len() == 2 {
                out.push(shifted.iter().map(|z| z.im).collect());
            }
        }
        out
    };
    let i_at_phi = eval_packed(structure.components());
    let n_at_phi = eval_packed(nf.tensor().components());

    // Pullback structure: I'(x) = J^T I(phi(x)) J^-T with J = d phi / d x.
    let mut pulled = TensorField::zeros(chart, 1, 1);
    let mut x = vec![0.0; dims];
    for j in 0..points {
        chart.point(j, &mut x);
        let jac = spec.jacobian_at(&chart, &x);
        let jt = jac.transpose();
        let jti = jt.clone().try_inverse().unwrap();
        let mut i_here = nalgebra::DMatrix::<f64>::zeros(dims, dims);
        for r in 0..dims {
            for c in 0..dims {
                i_here[(r, c)] = i_at_phi[r * dims + c][j];
            }
        }
        pulled.set_matrix_at(j, &(&jt * i_here * &jti));
    }
    let pulled_acs = validate(pulled, None, 1e-6).unwrap();
    let pulled_nf = nijenhuis(&pulled_acs).unwrap();

    // Tensor transform of the original Nijenhuis field:
    // N'[M][N][K](x) = J[P][M] J[Q][N] N[P][Q][S](phi(x)) Jinv[K][S].
    let mut worst = 0.0f64;
    for j in (0..points).step_by(7) {
        chart.point(j, &mut x);
        let jac = spec.jacobian_at(&chart, &x);
        let jinv = jac.clone().try_inverse().unwrap();
        for m in 0..dims {
            for n in 0..dims {
                for k in 0..dims {
                    let mut want = 0.0;
                    for p in 0..dims {
                        for q in 0..dims {
                            for s in 0..dims {
                                want += jac[(p, m)]
                                    * jac[(q, n)]
                                    * n_at_phi[(p * dims + q) * dims + s][j]
                                    * jinv[(k, s)];
                            }
                        }
                    }
                    let got = pulled_nf.tensor().comp(&[m, n, k])[j];
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    assert!(worst < 1e-6, "tensor-transform mismatch {worst:.3e}");
}
