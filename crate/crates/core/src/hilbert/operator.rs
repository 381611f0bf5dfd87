use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::hilbert::space::HilbertSpace;
use crate::linalg;
use crate::sparse::CsrMatrix;

/// Qutrit levels, ordered g = 0, e = 1, f = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::F => 2,
        }
    }

    pub fn parse(s: &str) -> Result<Level> {
        match s {
            "g" => Ok(Level::G),
            "e" => Ok(Level::E),
            "f" => Ok(Level::F),
            other => Err(CoreError::Parameter(format!(
                "unknown qutrit level `{other}` (expected g, e, or f)"
            ))),
        }
    }
}

/// A linear operator tagged with the space it acts on.
#[derive(Debug, Clone)]
pub struct Operator {
    space: Arc<HilbertSpace>,
    matrix: CsrMatrix,
}

impl Operator {
    pub fn from_csr(space: Arc<HilbertSpace>, matrix: CsrMatrix) -> Result<Operator> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
                context: "operator matrix vs space".into(),
            });
        }
        Ok(Operator { space, matrix })
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Operator {
        let d = space.total_dim();
        Operator {
            space,
            matrix: CsrMatrix::identity(d),
        }
    }

    pub fn zero(space: Arc<HilbertSpace>) -> Operator {
        let d = space.total_dim();
        Operator {
            space,
            matrix: CsrMatrix::zeros(d, d),
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: self.matrix.add(&other.matrix),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.scale(c),
        }
    }

    pub fn dot(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: self.matrix.matmul(&other.matrix),
        })
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.dagger(),
        }
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.dot(other)?.sub(&other.dot(self)?)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.is_hermitian(tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    fn check_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(CoreError::SpaceMismatch(
                "operators act on different spaces".into(),
            ));
        }
        Ok(())
    }
}

/// Single-mode photon annihilation operator: <n-1|a|n> = sqrt(n).
pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension {
            dim,
            reason: "annihilation needs at least two Fock levels".into(),
        });
    }
    let space = HilbertSpace::single("mode", dim)?;
    let trips: Vec<(usize, usize, C64)> = (1..dim)
        .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
        .collect();
    Operator::from_csr(space, CsrMatrix::from_triplets(dim, dim, &trips))
}

/// Single-mode number operator a†a.
pub fn number(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension {
            dim,
            reason: "number operator needs at least two Fock levels".into(),
        });
    }
    let space = HilbertSpace::single("mode", dim)?;
    let entries: Vec<C64> = (0..dim).map(|n| C64::new(n as f64, 0.0)).collect();
    Operator::from_csr(space, CsrMatrix::diag(&entries))
}

/// Qutrit transition operator |to><from| on the 3-level space (g, e, f).
/// `from == to` yields the projector onto that level.
pub fn qutrit_transition(from: Level, to: Level) -> Operator {
    let space = HilbertSpace::single("qutrit", 3).expect("static space");
    let m = CsrMatrix::from_triplets(3, 3, &[(to.index(), from.index(), C64::new(1.0, 0.0))]);
    Operator::from_csr(space, m).expect("static operator")
}

/// sigma_z = |e><e| - |g><g| on the qutrit (f untouched).
pub fn qutrit_sigma_z() -> Operator {
    qutrit_transition(Level::E, Level::E)
        .sub(&qutrit_transition(Level::G, Level::G))
        .expect("same space")
}

/// Kronecker-embed a single-subsystem operator into `space` at subsystem
/// `which`, identities elsewhere.
pub fn embed(op: &Operator, space: &Arc<HilbertSpace>, which: &str) -> Result<Operator> {
    let pos = space.position(which)?;
    let want = space.dims()[pos];
    if op.dim() != want {
        return Err(CoreError::DimensionMismatch {
            expected: want,
            got: op.dim(),
            context: format!("embedding into subsystem `{which}`"),
        });
    }
    let mut acc: Option<CsrMatrix> = None;
    for (k, &d) in space.dims().iter().enumerate() {
        let factor = if k == pos {
            op.matrix().clone()
        } else {
            CsrMatrix::identity(d)
        };
        acc = Some(match acc {
            None => factor,
            Some(m) => m.kron(&factor),
        });
    }
    Operator::from_csr(space.clone(), acc.expect("non-empty space"))
}

/// Embed several single-subsystem operators at once (product across distinct
/// subsystems, identities elsewhere). Labels must be distinct.
pub fn embed_product(
    ops: &[(&Operator, &str)],
    space: &Arc<HilbertSpace>,
) -> Result<Operator> {
    let mut by_pos: Vec<Option<&Operator>> = vec![None; space.n_subsystems()];
    for &(op, which) in ops {
        let pos = space.position(which)?;
        let want = space.dims()[pos];
        if op.dim() != want {
            return Err(CoreError::DimensionMismatch {
                expected: want,
                got: op.dim(),
                context: format!("embedding into subsystem `{which}`"),
            });
        }
        if by_pos[pos].is_some() {
            return Err(CoreError::Parameter(format!(
                "subsystem `{which}` given twice in embed_product"
            )));
        }
        by_pos[pos] = Some(op);
    }
    let mut acc: Option<CsrMatrix> = None;
    for (k, &d) in space.dims().iter().enumerate() {
        let factor = match by_pos[k] {
            Some(op) => op.matrix().clone(),
            None => CsrMatrix::identity(d),
        };
        acc = Some(match acc {
            None => factor,
            Some(m) => m.kron(&factor),
        });
    }
    Operator::from_csr(space.clone(), acc.expect("non-empty space"))
}

/// Single-mode displacement operator D(alpha) = exp(alpha a† - alpha* a).
pub fn displacement(alpha: C64, dim: usize) -> Result<Operator> {
    let a = annihilation(dim)?;
    let gen = a
        .dagger()
        .scale(alpha)
        .sub(&a.scale(alpha.conj()))?
        .matrix()
        .to_dense();
    let d = linalg::expm(&gen);
    let m = CsrMatrix::from_dense(&d.view(), 0.0);
    Operator::from_csr(a.space().clone(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn annihilation_entries() {
        // dim 2: [[0,1],[0,0]]
        let a = annihilation(2).unwrap();
        assert_eq!(a.matrix().get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(a.matrix().nnz(), 1);
        // dim 3: (0,1)=1, (1,2)=sqrt(2)
        let a3 = annihilation(3).unwrap();
        assert_eq!(a3.matrix().get(0, 1), C64::new(1.0, 0.0));
        assert!((a3.matrix().get(1, 2) - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn number_operator_eigenvalue() {
        // a†a on Fock |5> in dim 8 has eigenvalue 5.
        let a = annihilation(8).unwrap();
        let n = a.dagger().dot(&a).unwrap();
        assert!((n.matrix().get(5, 5) - C64::new(5.0, 0.0)).norm() < 1e-14);
        assert_eq!(n.matrix().get(5, 4), C64::new(0.0, 0.0));
    }

    #[test]
    fn qutrit_transitions() {
        let s = qutrit_transition(Level::G, Level::E); // |e><g|
        assert_eq!(s.matrix().get(1, 0), C64::new(1.0, 0.0));
        assert_eq!(s.matrix().nnz(), 1);
        let pe = qutrit_transition(Level::E, Level::E);
        assert_eq!(pe.matrix().get(1, 1), C64::new(1.0, 0.0));
        let sz = qutrit_sigma_z();
        assert_eq!(sz.matrix().get(0, 0), C64::new(-1.0, 0.0));
        assert_eq!(sz.matrix().get(1, 1), C64::new(1.0, 0.0));
        assert_eq!(sz.matrix().get(2, 2), C64::new(0.0, 0.0));
        assert!(Level::parse("x").is_err());
    }

    #[test]
    fn embed_places_operator() {
        // embed 2x2 a into (3, 2): equals kron(I3, a)
        let space = HilbertSpace::new(&[("q", 3), ("c", 2)]).unwrap();
        let a = annihilation(2).unwrap();
        let e = embed(&a, &space, "c").unwrap();
        assert_eq!(e.dim(), 6);
        for b in 0..3 {
            assert_eq!(e.matrix().get(2 * b, 2 * b + 1), C64::new(1.0, 0.0));
        }
        assert_eq!(e.matrix().nnz(), 3);
    }

    #[test]
    fn disjoint_embeddings_commute() {
        let space = HilbertSpace::new(&[("c1", 3), ("c2", 4)]).unwrap();
        let a = embed(&annihilation(3).unwrap(), &space, "c1").unwrap();
        let b = embed(&annihilation(4).unwrap(), &space, "c2").unwrap();
        let comm = a.commutator(&b).unwrap();
        assert_abs_diff_eq!(comm.max_abs(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn displacement_is_unitary_on_low_subspace() {
        let alpha = C64::new(1.0, 0.0);
        let d = displacement(alpha, 30).unwrap();
        let dm = displacement(-alpha, 30).unwrap();
        let prod = d.dot(&dm).unwrap();
        // identity on the low-photon subspace with tiny leakage
        for i in 0..15 {
            assert!((prod.matrix().get(i, i) - C64::new(1.0, 0.0)).norm() < 1e-8);
        }
    }
}
