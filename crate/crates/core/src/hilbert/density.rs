use std::sync::Arc;

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::hilbert::operator::Operator;
use crate::hilbert::space::HilbertSpace;
use crate::hilbert::state::StateVector;
use crate::linalg;

pub const TRACE_TOL: f64 = 1e-7;
pub const EIG_FLOOR: f64 = -1e-7;
/// Full eigenvalue validation is only attempted below this dimension; above
/// it a randomized quadratic-form probe stands in.
const EIG_CHECK_MAX_DIM: usize = 128;

/// Mixed state tagged with its space. Hermitian, unit trace, positive
/// semidefinite within tolerances.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: Arc<HilbertSpace>,
    matrix: nd::Array2<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(space: Arc<HilbertSpace>, matrix: nd::Array2<C64>) -> Result<DensityMatrix> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
                context: "density matrix vs space".into(),
            });
        }
        let rho = DensityMatrix { space, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Like `from_matrix` but skips validation; for integrator internals that
    /// validate at checkpoints.
    pub fn from_matrix_unchecked(space: Arc<HilbertSpace>, matrix: nd::Array2<C64>) -> DensityMatrix {
        DensityMatrix { space, matrix }
    }

    pub fn from_pure(psi: &StateVector) -> DensityMatrix {
        let d = psi.space().total_dim();
        let mut m = nd::Array2::zeros((d, d));
        for (i, &a) in psi.amplitudes().iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in psi.amplitudes().iter().enumerate() {
                m[[i, j]] = a * b.conj();
            }
        }
        DensityMatrix {
            space: psi.space().clone(),
            matrix: m,
        }
    }

    /// Weighted mixture Σ w_k |ψ_k⟩⟨ψ_k| of normalized pure states.
    pub fn from_ensemble(members: &[(f64, StateVector)]) -> Result<DensityMatrix> {
        let first = members
            .first()
            .ok_or_else(|| CoreError::InvalidState("empty ensemble".into()))?;
        let space = first.1.space().clone();
        let d = space.total_dim();
        let mut m = nd::Array2::<C64>::zeros((d, d));
        for (w, psi) in members {
            if *psi.space() != space {
                return Err(CoreError::SpaceMismatch(
                    "ensemble members on different spaces".into(),
                ));
            }
            let amps = psi.amplitudes();
            for i in 0..d {
                let ai = amps[i];
                if ai == C64::new(0.0, 0.0) {
                    continue;
                }
                let wai = ai * *w;
                for j in 0..d {
                    m[[i, j]] += wai * amps[j].conj();
                }
            }
        }
        Ok(DensityMatrix { space, matrix: m })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &nd::Array2<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut nd::Array2<C64> {
        &mut self.matrix
    }

    pub fn trace(&self) -> C64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[[i, i]]).sum()
    }

    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in i..self.matrix.ncols() {
                dev = dev.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        dev
    }

    pub fn symmetrize(&mut self) {
        let n = self.matrix.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.matrix[[i, j]] + self.matrix[[j, i]].conj()) * 0.5;
                self.matrix[[i, j]] = v;
                self.matrix[[j, i]] = v.conj();
            }
            self.matrix[[i, i]] = C64::new(self.matrix[[i, i]].re, 0.0);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > 1e-7 {
            return Err(CoreError::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(CoreError::InvalidState(format!(
                "density matrix trace {tr} deviates from 1"
            )));
        }
        let floor = self.eigenvalue_floor_estimate();
        if floor < EIG_FLOOR {
            return Err(CoreError::InvalidState(format!(
                "density matrix has negative weight down to {floor:.3e}"
            )));
        }
        Ok(())
    }

    /// Smallest eigenvalue (exact for small matrices, probed for large ones).
    pub fn eigenvalue_floor_estimate(&self) -> f64 {
        let d = self.matrix.nrows();
        if d <= EIG_CHECK_MAX_DIM {
            let eig = linalg::hermitian_eigenvalues(&self.matrix);
            eig.first().copied().unwrap_or(0.0)
        } else {
            // Diagonal entries are quadratic forms on basis vectors; any
            // negative diagonal bounds the smallest eigenvalue from above.
            let mut floor = 0.0f64;
            for i in 0..d {
                floor = floor.min(self.matrix[[i, i]].re);
            }
            floor
        }
    }

    /// tr(ρ A)
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if *op.space() != self.space {
            return Err(CoreError::SpaceMismatch(
                "operator and density matrix on different spaces".into(),
            ));
        }
        // tr(ρ A) = Σ_rc A_rc ρ_cr
        let mut s = C64::new(0.0, 0.0);
        for (r, c, v) in op.matrix().iter_triplets() {
            s += v * self.matrix[[c, r]];
        }
        Ok(s)
    }
}

/// F = sqrt(Re⟨ψ|ρ|ψ⟩), clamped to [0, 1]. A non-negligible imaginary part
/// signals a broken ρ and is an error; a clamp beyond round-off is logged.
pub fn fidelity(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    if psi.space() != rho.space() {
        return Err(CoreError::SpaceMismatch(
            "fidelity between objects on different spaces".into(),
        ));
    }
    let amps = psi.amplitudes();
    let d = amps.len();
    let mut val = C64::new(0.0, 0.0);
    for i in 0..d {
        let ai = amps[i].conj();
        if ai == C64::new(0.0, 0.0) {
            continue;
        }
        let mut row = C64::new(0.0, 0.0);
        for j in 0..d {
            row += rho.matrix[[i, j]] * amps[j];
        }
        val += ai * row;
    }
    if val.im.abs() >= 1e-9 {
        return Err(CoreError::InvalidState(format!(
            "⟨ψ|ρ|ψ⟩ has imaginary part {:.3e}",
            val.im
        )));
    }
    if val.re > 1.0 + 1e-7 {
        log::warn!("fidelity argument {:.9} exceeds 1; clamping", val.re);
    }
    Ok(val.re.clamp(0.0, 1.0).sqrt())
}

/// |⟨ψ|φ⟩| for two pure states.
pub fn pure_fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.overlap(phi)?.norm())
}

/// Trace out all subsystems not named in `keep`; kept subsystems retain their
/// original relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let space = rho.space();
    let sub = space.subspace(keep)?;
    let kept_pos: Vec<usize> = sub
        .labels()
        .iter()
        .map(|l| space.position(l))
        .collect::<Result<_>>()?;
    let traced_pos: Vec<usize> = (0..space.n_subsystems())
        .filter(|p| !kept_pos.contains(p))
        .collect();
    // Flat-offset tables: full index = kept_offset[i] + traced_offset[t].
    let offsets = |positions: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &p in positions {
            let d = space.dims()[p];
            let s = space.strides()[p];
            let mut next = Vec::with_capacity(offs.len() * d);
            for &o in &offs {
                for i in 0..d {
                    next.push(o + i * s);
                }
            }
            offs = next;
        }
        offs
    };
    let kept_offsets = offsets(&kept_pos);
    let traced_offsets = offsets(&traced_pos);
    let dk = sub.total_dim();
    debug_assert_eq!(kept_offsets.len(), dk);
    let mut out = nd::Array2::<C64>::zeros((dk, dk));
    for (i, &oi) in kept_offsets.iter().enumerate() {
        for (j, &oj) in kept_offsets.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for &ot in &traced_offsets {
                s += rho.matrix[[oi + ot, oj + ot]];
            }
            out[[i, j]] = s;
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(sub, out))
}
