//! Superspace differential operators and superfields over one time
//! dimension, with exact component transformation laws.
//!
//! Conventions: the N=1 supercharge is Q = -i(d_theta + i theta d_t) and the
//! covariant derivative is D = d_theta - i theta d_t, so D^2 = -i d_t. The
//! N=2 supercharges carry 1/sqrt(2) so that {Q, Qbar} = H = -i d_t, and the
//! covariant derivatives are D = d_theta - i thetab d_t,
//! Dbar = -d_thetab + i theta d_t.

use super::atom::{EvenAtom, OddAtom};
use super::coeff::Coeff;
use super::expr::GrassmannExpr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SuperspaceError {
    #[error("expression uses generator {0} unknown to operator {1}")]
    UnknownGenerator(String, String),
    #[error("superfield is not chiral: Dbar residual = {0}")]
    NotChiral(String),
}

/// Time derivative as an even derivation on jets. `dim` is the number of
/// real coordinates (needed for the chain rule on structure jets).
pub fn ddt(e: &GrassmannExpr, dim: usize) -> GrassmannExpr {
    e.derive_even(
        &|odd| {
            if odd.is_field() {
                GrassmannExpr::from_odd(odd.dotted())
            } else {
                GrassmannExpr::zero()
            }
        },
        &|even| match even {
            EvenAtom::Struct { .. } => {
                assert!(dim > 0, "structure jets need the chart dimension");
                let mut out = GrassmannExpr::zero();
                for k in 1..=dim as u16 {
                    out = out.add(
                        &GrassmannExpr::from_even(even.with_deriv(k)).mul(
                            &GrassmannExpr::from_even(EvenAtom::X { index: k, dots: 1 }),
                        ),
                    );
                }
                out
            }
            EvenAtom::Coord { .. } => panic!("coordinate jets are time independent"),
            other => GrassmannExpr::from_even(other.dotted()),
        },
    )
}

fn theta(gen: OddAtom) -> GrassmannExpr {
    GrassmannExpr::from_odd(gen)
}

fn i() -> Coeff {
    Coeff::i()
}

/// d_theta - i theta d_t with respect to an arbitrary real generator.
pub fn cov_derivative_with(gen: OddAtom, e: &GrassmannExpr, dim: usize) -> GrassmannExpr {
    e.d_odd(gen).sub(&theta(gen).mul(&ddt(e, dim)).scale(&i()))
}

/// -i (d_theta + i theta d_t) with respect to an arbitrary real generator.
pub fn supercharge_with(gen: OddAtom, e: &GrassmannExpr, dim: usize) -> GrassmannExpr {
    e.d_odd(gen)
        .scale(&-i())
        .add(&theta(gen).mul(&ddt(e, dim)))
}

/// The named superspace differential operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperOp {
    /// N=1 supercharge.
    QN1,
    /// N=1 covariant derivative.
    DN1,
    /// Hamiltonian -i d_t.
    H,
    /// N=2 complex supercharge and conjugate.
    QN2,
    QbarN2,
    /// N=2 covariant derivatives.
    DN2,
    DbarN2,
    /// Plain derivatives.
    Dt,
    DTheta,
    DThetaBar,
}

impl SuperOp {
    fn name(self) -> &'static str {
        match self {
            SuperOp::QN1 => "Q_N1",
            SuperOp::DN1 => "D_N1",
            SuperOp::H => "H",
            SuperOp::QN2 => "Q_N2",
            SuperOp::QbarN2 => "Qbar_N2",
            SuperOp::DN2 => "D_N2",
            SuperOp::DbarN2 => "Dbar_N2",
            SuperOp::Dt => "d_t",
            SuperOp::DTheta => "d_theta",
            SuperOp::DThetaBar => "d_thetab",
        }
    }

    fn is_n1(self) -> bool {
        matches!(self, SuperOp::QN1 | SuperOp::DN1)
    }
}

/// Apply a superspace operator. N=1 operators reject expressions carrying
/// the conjugate generator.
pub fn apply(op: SuperOp, e: &GrassmannExpr, dim: usize) -> Result<GrassmannExpr, SuperspaceError> {
    if op.is_n1() && e.contains_odd(OddAtom::ThetaBar) {
        return Err(SuperspaceError::UnknownGenerator(
            "thetab".into(),
            op.name().into(),
        ));
    }
    let s2inv = Coeff::inv_sqrt2();
    Ok(match op {
        SuperOp::QN1 => supercharge_with(OddAtom::Theta, e, dim),
        SuperOp::DN1 => cov_derivative_with(OddAtom::Theta, e, dim),
        SuperOp::H => ddt(e, dim).scale(&-i()),
        SuperOp::Dt => ddt(e, dim),
        SuperOp::DTheta => e.d_odd(OddAtom::Theta),
        SuperOp::DThetaBar => e.d_odd(OddAtom::ThetaBar),
        // Q = -(i/sqrt2)(d_theta + i thetab d_t)
        SuperOp::QN2 => e
            .d_odd(OddAtom::Theta)
            .scale(&-i())
            .add(&theta(OddAtom::ThetaBar).mul(&ddt(e, dim)))
            .scale(&s2inv),
        // Qbar = -(i/sqrt2)(d_thetab + i theta d_t)
        SuperOp::QbarN2 => e
            .d_odd(OddAtom::ThetaBar)
            .scale(&-i())
            .add(&theta(OddAtom::Theta).mul(&ddt(e, dim)))
            .scale(&s2inv),
        // D = d_theta - i thetab d_t
        SuperOp::DN2 => e
            .d_odd(OddAtom::Theta)
            .sub(&theta(OddAtom::ThetaBar).mul(&ddt(e, dim)).scale(&i())),
        // Dbar = -d_thetab + i theta d_t
        SuperOp::DbarN2 => e
            .d_odd(OddAtom::ThetaBar)
            .neg()
            .add(&theta(OddAtom::Theta).mul(&ddt(e, dim)).scale(&i())),
    })
}

/// Berezin integral over one generator: the left derivative.
pub fn berezin(e: &GrassmannExpr, gen: OddAtom) -> GrassmannExpr {
    e.d_odd(gen)
}

// ---- superfield builders -------------------------------------------------

/// N=1 superfield X^m = x^m(t) + i theta psi^m(t).
pub fn n1_superfield(m: u16) -> GrassmannExpr {
    GrassmannExpr::from_even(EvenAtom::X { index: m, dots: 0 }).add(
        &theta(OddAtom::Theta)
            .mul(&GrassmannExpr::from_odd(OddAtom::Psi { index: m, dots: 0 }))
            .scale(&i()),
    )
}

/// Generic N=2 superfield z + i theta chi + i thetab lambda + theta thetab F.
pub fn generic_n2_superfield() -> GrassmannExpr {
    let z = GrassmannExpr::from_even(EvenAtom::Zc { dots: 0 });
    let chi = GrassmannExpr::from_odd(OddAtom::Chi { dots: 0 });
    let lam = GrassmannExpr::from_odd(OddAtom::Lambda { dots: 0 });
    let aux = GrassmannExpr::from_even(EvenAtom::Aux { dots: 0 });
    z.add(&theta(OddAtom::Theta).mul(&chi).scale(&i()))
        .add(&theta(OddAtom::ThetaBar).mul(&lam).scale(&i()))
        .add(&theta(OddAtom::Theta).mul(&theta(OddAtom::ThetaBar)).mul(&aux))
}

/// Left chiral superfield Z = z(t_L) + i sqrt2 theta chi(t_L) expanded over
/// t_L = t - i theta thetab.
pub fn chiral_superfield() -> GrassmannExpr {
    let z = GrassmannExpr::from_even(EvenAtom::Zc { dots: 0 });
    let zdot = GrassmannExpr::from_even(EvenAtom::Zc { dots: 1 });
    let chi = GrassmannExpr::from_odd(OddAtom::Chi { dots: 0 });
    z.add(
        &theta(OddAtom::Theta)
            .mul(&chi)
            .scale(&i().mul_ref(&Coeff::sqrt2())),
    )
    .add(
        &theta(OddAtom::Theta)
            .mul(&theta(OddAtom::ThetaBar))
            .mul(&zdot)
            .scale(&-i()),
    )
}

// ---- supersymmetry variations --------------------------------------------

/// N=1 variation delta X = i eta Q X.
pub fn susy_variation_n1(e: &GrassmannExpr, dim: usize) -> Result<GrassmannExpr, SuperspaceError> {
    Ok(theta(OddAtom::Eta)
        .mul(&apply(SuperOp::QN1, e, dim)?)
        .scale(&i()))
}

/// N=2 variation delta Phi = i sqrt2 (eps Q + epsb Qbar) Phi.
pub fn susy_variation_n2(e: &GrassmannExpr, dim: usize) -> Result<GrassmannExpr, SuperspaceError> {
    let q = apply(SuperOp::QN2, e, dim)?;
    let qb = apply(SuperOp::QbarN2, e, dim)?;
    Ok(theta(OddAtom::Epsilon)
        .mul(&q)
        .add(&theta(OddAtom::EpsilonBar).mul(&qb))
        .scale(&i().mul_ref(&Coeff::sqrt2())))
}

/// N=2 variation at fixed parameter value eps = value_of_eps(eta-type atoms);
/// used to restrict to real or imaginary parameter directions.
pub fn susy_variation_n2_with(
    eps: &GrassmannExpr,
    eps_bar: &GrassmannExpr,
    e: &GrassmannExpr,
    dim: usize,
) -> Result<GrassmannExpr, SuperspaceError> {
    let q = apply(SuperOp::QN2, e, dim)?;
    let qb = apply(SuperOp::QbarN2, e, dim)?;
    Ok(eps
        .mul(&q)
        .add(&eps_bar.mul(&qb))
        .scale(&i().mul_ref(&Coeff::sqrt2())))
}

/// Dbar of the expression: the left-chirality residual (empty iff chiral).
pub fn chirality_check(e: &GrassmannExpr, dim: usize) -> GrassmannExpr {
    apply(SuperOp::DbarN2, e, dim).expect("Dbar accepts all generators")
}

/// Split a left chiral superfield into the two real N=1 superfields of the
/// substitution theta = (theta1 + i theta2)/sqrt2.
///
/// Returns (X1, X2) as expressions over (t, theta1), and checks the
/// reconstruction Z = (X1 + i X2 + i theta2 [D X1 + i D X2]) / sqrt2.
pub fn chiral_split(z: &GrassmannExpr) -> Result<(GrassmannExpr, GrassmannExpr), SuperspaceError> {
    let resid = chirality_check(z, 0);
    if !resid.is_zero() {
        return Err(SuperspaceError::NotChiral(resid.to_string()));
    }
    let s2inv = GrassmannExpr::from_coeff(Coeff::inv_sqrt2());
    let t1 = theta(OddAtom::Theta1);
    let t2 = theta(OddAtom::Theta2);
    // theta = (theta1 + i theta2)/sqrt2, thetab = (theta1 - i theta2)/sqrt2
    let th = t1.add(&t2.scale(&i())).mul(&s2inv);
    let thb = t1.add(&t2.scale(&-i())).mul(&s2inv);
    let z_split = z.subst_odd(OddAtom::Theta, &th).subst_odd(OddAtom::ThetaBar, &thb);

    // Restriction to theta2 = 0 is (X1 + i X2)/sqrt2.
    let mut restricted = GrassmannExpr::zero();
    for (m, c) in z_split.terms() {
        if m.odd.binary_search(&OddAtom::Theta2).is_err() {
            restricted = restricted.add(&GrassmannExpr::term(m.clone(), c.clone()));
        }
    }
    let a = restricted.scale(&Coeff::sqrt2());
    let abar = a.conj();
    let half = Coeff::from_ratio(1, 2);
    let x1 = a.add(&abar).scale(&half);
    let x2 = a.sub(&abar).scale(&half.mul_ref(&-i()));

    // Reconstruction identity fixes the theta2 part.
    let dx1 = cov_derivative_with(OddAtom::Theta1, &x1, 0);
    let dx2 = cov_derivative_with(OddAtom::Theta1, &x2, 0);
    let rebuilt = x1
        .add(&x2.scale(&i()))
        .add(&t2.mul(&dx1.add(&dx2.scale(&i()))).scale(&i()))
        .scale(&Coeff::inv_sqrt2());
    let diff = z_split.sub(&rebuilt);
    if !diff.is_zero() {
        return Err(SuperspaceError::NotChiral(diff.to_string()));
    }
    Ok((x1, x2))
}

// ---- identity suite -------------------------------------------------------

pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: GrassmannExpr,
}

/// The exact engine identities: each residual must be identically zero.
pub fn identity_suite() -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let x = n1_superfield(1);
    let phi = generic_n2_superfield();
    let z = chiral_superfield();
    let ap = |op, e: &GrassmannExpr| apply(op, e, 0).unwrap();

    // D^2 = -i d_t on the N=1 superfield.
    out.push(IdentityCheck {
        name: "D_N1^2 + i d_t = 0",
        residual: ap(SuperOp::DN1, &ap(SuperOp::DN1, &x)).sub(&ddt(&x, 0).scale(&-Coeff::i())),
    });
    // Q^2 = H on the N=1 superfield.
    out.push(IdentityCheck {
        name: "Q_N1^2 = H",
        residual: ap(SuperOp::QN1, &ap(SuperOp::QN1, &x)).sub(&ap(SuperOp::H, &x)),
    });
    // N=2 algebra on the generic superfield.
    out.push(IdentityCheck {
        name: "Q_N2^2 = 0",
        residual: ap(SuperOp::QN2, &ap(SuperOp::QN2, &phi)),
    });
    out.push(IdentityCheck {
        name: "Qbar_N2^2 = 0",
        residual: ap(SuperOp::QbarN2, &ap(SuperOp::QbarN2, &phi)),
    });
    out.push(IdentityCheck {
        name: "{Q_N2, Qbar_N2} = H",
        residual: ap(SuperOp::QN2, &ap(SuperOp::QbarN2, &phi))
            .add(&ap(SuperOp::QbarN2, &ap(SuperOp::QN2, &phi)))
            .sub(&ap(SuperOp::H, &phi)),
    });
    // Covariant derivatives: nilpotent, anticommute with the supercharges.
    out.push(IdentityCheck {
        name: "D_N2^2 = 0",
        residual: ap(SuperOp::DN2, &ap(SuperOp::DN2, &phi)),
    });
    out.push(IdentityCheck {
        name: "Dbar_N2^2 = 0",
        residual: ap(SuperOp::DbarN2, &ap(SuperOp::DbarN2, &phi)),
    });
    out.push(IdentityCheck {
        name: "{D_N2, Q_N2} = 0",
        residual: ap(SuperOp::DN2, &ap(SuperOp::QN2, &phi))
            .add(&ap(SuperOp::QN2, &ap(SuperOp::DN2, &phi))),
    });
    out.push(IdentityCheck {
        name: "{D_N2, Qbar_N2} = 0",
        residual: ap(SuperOp::DN2, &ap(SuperOp::QbarN2, &phi))
            .add(&ap(SuperOp::QbarN2, &ap(SuperOp::DN2, &phi))),
    });
    // Chirality of the left chiral superfield, and of its conjugate.
    out.push(IdentityCheck {
        name: "Dbar Z = 0",
        residual: chirality_check(&z, 0),
    });
    out.push(IdentityCheck {
        name: "D Zbar = 0",
        residual: ap(SuperOp::DN2, &z.conj()),
    });

    // Component law delta x = i eta psi, delta psi = -eta xdot.
    let dx = susy_variation_n1(&x, 0).unwrap();
    let eta = theta(OddAtom::Eta);
    let psi = GrassmannExpr::from_odd(OddAtom::Psi { index: 1, dots: 0 });
    let xdot = GrassmannExpr::from_even(EvenAtom::X { index: 1, dots: 1 });
    let expect = eta.mul(&psi).scale(&Coeff::i()).add(
        &theta(OddAtom::Theta)
            .mul(&eta.mul(&xdot).neg())
            .scale(&Coeff::i()),
    );
    out.push(IdentityCheck {
        name: "delta x = i eta psi, delta psi = -eta x'",
        residual: dx.sub(&expect),
    });

    // Product rule: delta(X1 X2) = delta(X1) X2 + X1 delta(X2).
    let x2f = n1_superfield(2);
    let prod = x.mul(&x2f);
    let lhs = susy_variation_n1(&prod, 0).unwrap();
    let rhs = susy_variation_n1(&x, 0)
        .unwrap()
        .mul(&x2f)
        .add(&x.mul(&susy_variation_n1(&x2f, 0).unwrap()));
    out.push(IdentityCheck {
        name: "delta(X1 X2) = delta X1 * X2 + X1 * delta X2",
        residual: lhs.sub(&rhs),
    });

    // Chiral component law delta z = i sqrt2 eps chi, delta chi = -sqrt2 epsb z'.
    let dz = susy_variation_n2(&z, 0).unwrap();
    let eps = theta(OddAtom::Epsilon);
    let epsb = theta(OddAtom::EpsilonBar);
    let chi = GrassmannExpr::from_odd(OddAtom::Chi { dots: 0 });
    let zdot = GrassmannExpr::from_even(EvenAtom::Zc { dots: 1 });
    let dz_comp = eps.mul(&chi).scale(&Coeff::i().mul_ref(&Coeff::sqrt2()));
    let dchi_comp = epsb.mul(&zdot).scale(&Coeff::sqrt2()).neg();
    let expect = dz_comp
        .add(
            &theta(OddAtom::Theta)
                .mul(&dchi_comp)
                .scale(&Coeff::i().mul_ref(&Coeff::sqrt2())),
        )
        .add(
            &theta(OddAtom::Theta)
                .mul(&theta(OddAtom::ThetaBar))
                .mul(&ddt(&dz_comp, 0))
                .scale(&-Coeff::i()),
        );
    out.push(IdentityCheck {
        name: "delta z = i sqrt2 eps chi, delta chi = -sqrt2 epsb z'",
        residual: dz.sub(&expect),
    });

    out.extend(split_identities());
    out
}

/// Identities of the N=2 -> N=1 chiral split with composite components
/// z = (x1 + i x2)/sqrt2, chi = (psi1 + i psi2)/sqrt2.
fn split_identities() -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let s2inv = Coeff::inv_sqrt2();
    let compose = |e: &GrassmannExpr| -> GrassmannExpr {
        let mut acc = GrassmannExpr::zero();
        for (m, c) in e.terms() {
            let mut factor = GrassmannExpr::from_coeff(c.clone());
            for a in &m.even {
                let rep = match a {
                    EvenAtom::Zc { dots } => GrassmannExpr::from_even(EvenAtom::X {
                        index: 1,
                        dots: *dots,
                    })
                    .add(
                        &GrassmannExpr::from_even(EvenAtom::X {
                            index: 2,
                            dots: *dots,
                        })
                        .scale(&Coeff::i()),
                    )
                    .scale(&s2inv),
                    EvenAtom::ZcBar { dots } => GrassmannExpr::from_even(EvenAtom::X {
                        index: 1,
                        dots: *dots,
                    })
                    .add(
                        &GrassmannExpr::from_even(EvenAtom::X {
                            index: 2,
                            dots: *dots,
                        })
                        .scale(&-Coeff::i()),
                    )
                    .scale(&s2inv),
                    other => GrassmannExpr::from_even(other.clone()),
                };
                factor = factor.mul(&rep);
            }
            for a in &m.odd {
                let rep = match a {
                    OddAtom::Chi { dots } => GrassmannExpr::from_odd(OddAtom::Psi {
                        index: 1,
                        dots: *dots,
                    })
                    .add(
                        &GrassmannExpr::from_odd(OddAtom::Psi {
                            index: 2,
                            dots: *dots,
                        })
                        .scale(&Coeff::i()),
                    )
                    .scale(&s2inv),
                    OddAtom::ChiBar { dots } => GrassmannExpr::from_odd(OddAtom::Psi {
                        index: 1,
                        dots: *dots,
                    })
                    .add(
                        &GrassmannExpr::from_odd(OddAtom::Psi {
                            index: 2,
                            dots: *dots,
                        })
                        .scale(&-Coeff::i()),
                    )
                    .scale(&s2inv),
                    other => GrassmannExpr::from_odd(*other),
                };
                factor = factor.mul(&rep);
            }
            acc = acc.add(&factor);
        }
        acc
    };

    let z = compose(&chiral_superfield());
    // Split into the two N=1 superfields and compare with x_A + i theta1 psi_A.
    let (x1, x2) = chiral_split(&z).expect("composite chiral superfield splits");
    let n1_like = |a: u16| {
        GrassmannExpr::from_even(EvenAtom::X { index: a, dots: 0 }).add(
            &theta(OddAtom::Theta1)
                .mul(&GrassmannExpr::from_odd(OddAtom::Psi { index: a, dots: 0 }))
                .scale(&Coeff::i()),
        )
    };
    out.push(IdentityCheck {
        name: "chiral split gives X_A = x_A + i theta1 psi_A",
        residual: x1.sub(&n1_like(1)).add(&x2.sub(&n1_like(2))),
    });

    // Real parameter eps = eta/sqrt2: two copies of the N=1 law.
    let eta = theta(OddAtom::Eta);
    let eps_real = eta.scale(&s2inv);
    let d_real = susy_variation_n2_with(&eps_real, &eps_real, &z, 0).unwrap();
    let expect_real = {
        // delta x_A = i eta psi_A, delta psi_A = -eta x_A'
        let dxa = |a: u16| {
            eta.mul(&GrassmannExpr::from_odd(OddAtom::Psi { index: a, dots: 0 }))
                .scale(&Coeff::i())
        };
        let dpsia = |a: u16| {
            eta.mul(&GrassmannExpr::from_even(EvenAtom::X { index: a, dots: 1 }))
                .neg()
        };
        chiral_form(&dxa(1), &dxa(2), &dpsia(1), &dpsia(2))
    };
    out.push(IdentityCheck {
        name: "real-eps variation = two copies of the N=1 law",
        residual: d_real.sub(&expect_real),
    });

    // Imaginary parameter eps = i etat/sqrt2: the second supersymmetry.
    let etat = theta(OddAtom::EtaTilde(1));
    let eps_im = etat.scale(&Coeff::i().mul_ref(&s2inv));
    let eps_im_bar = etat.scale(&(-Coeff::i()).mul_ref(&s2inv));
    let d_tilde = susy_variation_n2_with(&eps_im, &eps_im_bar, &z, 0).unwrap();
    let expect_tilde = {
        // delta~ x1 = -i etat psi2, delta~ x2 = i etat psi1,
        // delta~ psi1 = -etat x2', delta~ psi2 = etat x1'.
        let p = |a: u16, dots: u8| GrassmannExpr::from_odd(OddAtom::Psi { index: a, dots });
        let xd = |a: u16| GrassmannExpr::from_even(EvenAtom::X { index: a, dots: 1 });
        let dx1 = etat.mul(&p(2, 0)).scale(&-Coeff::i());
        let dx2 = etat.mul(&p(1, 0)).scale(&Coeff::i());
        let dp1 = etat.mul(&xd(2)).neg();
        let dp2 = etat.mul(&xd(1));
        chiral_form(&dx1, &dx2, &dp1, &dp2)
    };
    out.push(IdentityCheck {
        name: "imaginary-eps variation = second supersymmetry components",
        residual: d_tilde.sub(&expect_tilde),
    });

    // Compact form: delta~ X_A = etat eps_{AB} D X_B on N=1 superfields,
    // with eps_{12} = -1, eps_{21} = 1.
    let xsf = |a: u16| {
        GrassmannExpr::from_even(EvenAtom::X { index: a, dots: 0 }).add(
            &theta(OddAtom::Theta)
                .mul(&GrassmannExpr::from_odd(OddAtom::Psi { index: a, dots: 0 }))
                .scale(&Coeff::i()),
        )
    };
    let dxb = |a: u16| cov_derivative_with(OddAtom::Theta, &xsf(a), 0);
    let tilde_x = |a: u16| {
        // Components from trans-tilde-eta assembled as a superfield.
        let p = |k: u16| GrassmannExpr::from_odd(OddAtom::Psi { index: k, dots: 0 });
        let xd = |k: u16| GrassmannExpr::from_even(EvenAtom::X { index: k, dots: 1 });
        let (dx, dpsi) = if a == 1 {
            (
                etat.mul(&p(2)).scale(&-Coeff::i()),
                etat.mul(&xd(2)).neg(),
            )
        } else {
            (etat.mul(&p(1)).scale(&Coeff::i()), etat.mul(&xd(1)))
        };
        dx.add(&theta(OddAtom::Theta).mul(&dpsi).scale(&Coeff::i()))
    };
    let compact1 = tilde_x(1).sub(&etat.mul(&dxb(2)).neg());
    let compact2 = tilde_x(2).sub(&etat.mul(&dxb(1)));
    out.push(IdentityCheck {
        name: "delta~ X_A = etat eps_AB D X_B",
        residual: compact1.add(&compact2),
    });

    out
}

/// Assemble the variation of a chiral superfield from component variations:
/// dz + i sqrt2 theta dchi - i theta thetab d(dz)/dt.
fn chiral_form(
    dx1: &GrassmannExpr,
    dx2: &GrassmannExpr,
    dp1: &GrassmannExpr,
    dp2: &GrassmannExpr,
) -> GrassmannExpr {
    let s2inv = Coeff::inv_sqrt2();
    let dz = dx1.add(&dx2.scale(&Coeff::i())).scale(&s2inv);
    let dchi = dp1.add(&dp2.scale(&Coeff::i())).scale(&s2inv);
    dz.add(
        &theta(OddAtom::Theta)
            .mul(&dchi)
            .scale(&Coeff::i().mul_ref(&Coeff::sqrt2())),
    )
    .add(
        &theta(OddAtom::Theta)
            .mul(&theta(OddAtom::ThetaBar))
            .mul(&ddt(&dz, 0))
            .scale(&-Coeff::i()),
    )
}
