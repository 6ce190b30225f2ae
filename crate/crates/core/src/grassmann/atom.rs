//! Symbol vocabulary for the Grassmann engine.
//!
//! Odd atoms are anticommuting: superspace generators first, then
//! transformation parameters, then component fields, so the derived order is
//! the canonical monomial order. Even atoms are commuting formal symbols:
//! component fields and structure-tensor jets. Time derivatives are `dots`;
//! spatial derivatives are sorted index lists (partial derivatives commute).

use std::fmt;

/// Anticommuting symbol. The derived `Ord` is the canonical ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OddAtom {
    /// N=1 superspace generator theta, or the complex N=2 theta.
    Theta,
    /// Conjugate N=2 generator.
    ThetaBar,
    /// Real generators after the N=2 -> N=1 split.
    Theta1,
    Theta2,
    /// Real N=1 supersymmetry parameter.
    Eta,
    /// Second-supersymmetry parameters (labelled 1, 2 for commutators).
    EtaTilde(u8),
    /// Complex N=2 parameter and its conjugate.
    Epsilon,
    EpsilonBar,
    /// Real superpartner psi^index with time-derivative count.
    Psi { index: u16, dots: u8 },
    /// Chiral multiplet fermions.
    Chi { dots: u8 },
    ChiBar { dots: u8 },
    Lambda { dots: u8 },
    LambdaBar { dots: u8 },
}

impl OddAtom {
    pub fn dotted(self) -> OddAtom {
        match self {
            OddAtom::Psi { index, dots } => OddAtom::Psi { index, dots: dots + 1 },
            OddAtom::Chi { dots } => OddAtom::Chi { dots: dots + 1 },
            OddAtom::ChiBar { dots } => OddAtom::ChiBar { dots: dots + 1 },
            OddAtom::Lambda { dots } => OddAtom::Lambda { dots: dots + 1 },
            OddAtom::LambdaBar { dots } => OddAtom::LambdaBar { dots: dots + 1 },
            other => other,
        }
    }

    /// Fields carry time dependence; generators and parameters do not.
    pub fn is_field(self) -> bool {
        matches!(
            self,
            OddAtom::Psi { .. }
                | OddAtom::Chi { .. }
                | OddAtom::ChiBar { .. }
                | OddAtom::Lambda { .. }
                | OddAtom::LambdaBar { .. }
        )
    }

    pub fn conj(self) -> OddAtom {
        match self {
            OddAtom::Theta => OddAtom::ThetaBar,
            OddAtom::ThetaBar => OddAtom::Theta,
            OddAtom::Epsilon => OddAtom::EpsilonBar,
            OddAtom::EpsilonBar => OddAtom::Epsilon,
            OddAtom::Chi { dots } => OddAtom::ChiBar { dots },
            OddAtom::ChiBar { dots } => OddAtom::Chi { dots },
            OddAtom::Lambda { dots } => OddAtom::LambdaBar { dots },
            OddAtom::LambdaBar { dots } => OddAtom::Lambda { dots },
            real => real,
        }
    }
}

impl fmt::Display for OddAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn dots(f: &mut fmt::Formatter<'_>, n: u8) -> fmt::Result {
            for _ in 0..n {
                write!(f, "'")?;
            }
            Ok(())
        }
        match *self {
            OddAtom::Theta => write!(f, "theta"),
            OddAtom::ThetaBar => write!(f, "thetab"),
            OddAtom::Theta1 => write!(f, "theta1"),
            OddAtom::Theta2 => write!(f, "theta2"),
            OddAtom::Eta => write!(f, "eta"),
            OddAtom::EtaTilde(k) => write!(f, "etat{k}"),
            OddAtom::Epsilon => write!(f, "eps"),
            OddAtom::EpsilonBar => write!(f, "epsb"),
            OddAtom::Psi { index, dots: d } => {
                write!(f, "psi{index}")?;
                dots(f, d)
            }
            OddAtom::Chi { dots: d } => {
                write!(f, "chi")?;
                dots(f, d)
            }
            OddAtom::ChiBar { dots: d } => {
                write!(f, "chib")?;
                dots(f, d)
            }
            OddAtom::Lambda { dots: d } => {
                write!(f, "lam")?;
                dots(f, d)
            }
            OddAtom::LambdaBar { dots: d } => {
                write!(f, "lamb")?;
                dots(f, d)
            }
        }
    }
}

/// Commuting formal symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvenAtom {
    /// Real coordinate superfield component x^index.
    X { index: u16, dots: u8 },
    /// Chiral multiplet scalar z(t) and conjugate.
    Zc { dots: u8 },
    ZcBar { dots: u8 },
    /// Auxiliary component F(t) of the generic N=2 superfield.
    Aux { dots: u8 },
    AuxBar { dots: u8 },
    /// Structure-tensor value table entry I[row][col] with spatial
    /// derivative indices (sorted; row is the free contraction slot).
    Struct { row: u16, col: u16, derivs: Vec<u16> },
    /// Spatial jet of a target coordinate function z^n(x).
    Coord { n: u16, derivs: Vec<u16> },
}

impl EvenAtom {
    pub fn strukt(row: u16, col: u16, derivs: &[u16]) -> EvenAtom {
        let mut d = derivs.to_vec();
        d.sort_unstable();
        EvenAtom::Struct { row, col, derivs: d }
    }

    pub fn coord(n: u16, derivs: &[u16]) -> EvenAtom {
        let mut d = derivs.to_vec();
        d.sort_unstable();
        EvenAtom::Coord { n, derivs: d }
    }

    pub fn with_deriv(&self, axis: u16) -> EvenAtom {
        match self {
            EvenAtom::Struct { row, col, derivs } => {
                let mut d = derivs.clone();
                d.push(axis);
                d.sort_unstable();
                EvenAtom::Struct {
                    row: *row,
                    col: *col,
                    derivs: d,
                }
            }
            EvenAtom::Coord { n, derivs } => {
                let mut d = derivs.clone();
                d.push(axis);
                d.sort_unstable();
                EvenAtom::Coord { n: *n, derivs: d }
            }
            other => panic!("spatial derivative of non-spatial atom {other:?}"),
        }
    }

    pub fn dotted(&self) -> EvenAtom {
        match self {
            EvenAtom::X { index, dots } => EvenAtom::X {
                index: *index,
                dots: dots + 1,
            },
            EvenAtom::Zc { dots } => EvenAtom::Zc { dots: dots + 1 },
            EvenAtom::ZcBar { dots } => EvenAtom::ZcBar { dots: dots + 1 },
            EvenAtom::Aux { dots } => EvenAtom::Aux { dots: dots + 1 },
            EvenAtom::AuxBar { dots } => EvenAtom::AuxBar { dots: dots + 1 },
            other => panic!("time derivative of {other:?} must go through the chain rule"),
        }
    }

    pub fn conj(&self) -> EvenAtom {
        match self {
            EvenAtom::Zc { dots } => EvenAtom::ZcBar { dots: *dots },
            EvenAtom::ZcBar { dots } => EvenAtom::Zc { dots: *dots },
            EvenAtom::Aux { dots } => EvenAtom::AuxBar { dots: *dots },
            EvenAtom::AuxBar { dots } => EvenAtom::Aux { dots: *dots },
            real => real.clone(),
        }
    }
}

impl fmt::Display for EvenAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn dots(f: &mut fmt::Formatter<'_>, n: u8) -> fmt::Result {
            for _ in 0..n {
                write!(f, "'")?;
            }
            Ok(())
        }
        fn derivs(f: &mut fmt::Formatter<'_>, d: &[u16]) -> fmt::Result {
            for k in d {
                write!(f, "d{k} ")?;
            }
            Ok(())
        }
        match self {
            EvenAtom::X { index, dots: d } => {
                write!(f, "x{index}")?;
                dots(f, *d)
            }
            EvenAtom::Zc { dots: d } => {
                write!(f, "z")?;
                dots(f, *d)
            }
            EvenAtom::ZcBar { dots: d } => {
                write!(f, "zb")?;
                dots(f, *d)
            }
            EvenAtom::Aux { dots: d } => {
                write!(f, "F")?;
                dots(f, *d)
            }
            EvenAtom::AuxBar { dots: d } => {
                write!(f, "Fb")?;
                dots(f, *d)
            }
            EvenAtom::Struct { row, col, derivs: d } => {
                derivs(f, d)?;
                write!(f, "I[{row}][{col}]")
            }
            EvenAtom::Coord { n, derivs: d } => {
                derivs(f, d)?;
                write!(f, "zf{n}")
            }
        }
    }
}
