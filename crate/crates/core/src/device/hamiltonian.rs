//! Interaction-picture Hamiltonians of the form
//!   H(t) = H_static + Σ_k (A_k e^{i ν_k t} + A_k† e^{-i ν_k t})
//! with analytically evaluated coefficients, plus a second-order reduction of
//! very fast terms to their time-averaged static shift.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::hilbert::operator::Operator;
use crate::hilbert::space::HilbertSpace;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct OscTerm {
    /// Amplitude operator A of A e^{iνt} + h.c.
    pub op: Operator,
    /// Oscillation frequency ν (rad/s).
    pub freq: f64,
    /// Cached A† matrix.
    adag: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    space: Arc<HilbertSpace>,
    static_part: Operator,
    terms: Vec<OscTerm>,
}

impl TimeDependentHamiltonian {
    pub fn new(space: Arc<HilbertSpace>) -> TimeDependentHamiltonian {
        TimeDependentHamiltonian {
            static_part: Operator::zero(space.clone()),
            space,
            terms: Vec::new(),
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn terms(&self) -> &[OscTerm] {
        &self.terms
    }

    /// Add a Hermitian static term.
    pub fn add_static(&mut self, op: Operator) -> Result<()> {
        if op.space() != &self.space {
            return Err(CoreError::SpaceMismatch(
                "static term on a different space".into(),
            ));
        }
        let dev = op.matrix().hermiticity_deviation();
        let scale = op.max_abs().max(1e-300);
        if dev > 1e-10 * scale {
            return Err(CoreError::NotHermitian { deviation: dev });
        }
        self.static_part = self.static_part.add(&op)?;
        Ok(())
    }

    /// Add an oscillating term A e^{iνt} + h.c. A term with ν = 0 is folded
    /// into the static part as A + A†.
    pub fn add_term(&mut self, op: Operator, freq: f64) -> Result<()> {
        if op.space() != &self.space {
            return Err(CoreError::SpaceMismatch(
                "oscillating term on a different space".into(),
            ));
        }
        if freq == 0.0 {
            let herm = op.add(&op.dagger())?;
            self.static_part = self.static_part.add(&herm)?;
            return Ok(());
        }
        let adag = op.matrix().dagger();
        self.terms.push(OscTerm { op, freq, adag });
        Ok(())
    }

    /// H(t) as an explicit operator.
    pub fn evaluate(&self, t: f64) -> Operator {
        let mut m = self.static_part.matrix().clone();
        for term in &self.terms {
            let ph = C64::from_polar(1.0, term.freq * t);
            m = m.add(&term.op.matrix().scale(ph));
            m = m.add(&term.adag.scale(ph.conj()));
        }
        Operator::from_csr(self.space.clone(), m).expect("same space")
    }

    /// Largest oscillation frequency magnitude (0 if fully static).
    pub fn max_freq(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.freq.abs())
            .fold(0.0f64, f64::max)
    }

    /// out += -i H(t) x  (Schrödinger right-hand side).
    pub fn apply_rhs(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let minus_i = C64::new(0.0, -1.0);
        self.static_part.matrix().matvec_acc(minus_i, x, out);
        for term in &self.terms {
            let ph = C64::from_polar(1.0, term.freq * t);
            term.op.matrix().matvec_acc(minus_i * ph, x, out);
            term.adag.matvec_acc(minus_i * ph.conj(), x, out);
        }
    }

    /// out += c * H(t) x with an arbitrary scalar prefactor.
    pub fn apply_scaled(&self, t: f64, c: C64, x: &[C64], out: &mut [C64]) {
        self.static_part.matrix().matvec_acc(c, x, out);
        for term in &self.terms {
            let ph = C64::from_polar(1.0, term.freq * t);
            term.op.matrix().matvec_acc(c * ph, x, out);
            term.adag.matvec_acc(c * ph.conj(), x, out);
        }
    }

    /// out += -i [H(t), rho] (dense commutator accumulation).
    pub fn apply_commutator_rhs(
        &self,
        t: f64,
        rho: &ndarray::Array2<C64>,
        out: &mut ndarray::Array2<C64>,
    ) {
        let minus_i = C64::new(0.0, -1.0);
        let plus_i = C64::new(0.0, 1.0);
        let hs = self.static_part.matrix();
        hs.mat_dense_acc(minus_i, rho, out);
        hs.dense_mat_acc(plus_i, rho, out);
        for term in &self.terms {
            let ph = C64::from_polar(1.0, term.freq * t);
            term.op.matrix().mat_dense_acc(minus_i * ph, rho, out);
            term.op.matrix().dense_mat_acc(plus_i * ph, rho, out);
            term.adag.mat_dense_acc(minus_i * ph.conj(), rho, out);
            term.adag.dense_mat_acc(plus_i * ph.conj(), rho, out);
        }
    }

    /// Replace every oscillating term with |ν| >= cutoff by its second-order
    /// time-averaged static contribution [A, A†]/ν, keeping slower terms
    /// oscillating. This is the standard effective-Hamiltonian reduction for
    /// far-off-resonant couplings.
    pub fn reduce_fast_terms(&self, cutoff: f64) -> Result<TimeDependentHamiltonian> {
        let mut out = TimeDependentHamiltonian::new(self.space.clone());
        out.static_part = self.static_part.clone();
        for term in &self.terms {
            if term.freq.abs() >= cutoff {
                let a = term.op.matrix();
                let comm = a
                    .matmul(&term.adag)
                    .add(&term.adag.matmul(a).scale(C64::new(-1.0, 0.0)));
                let shift = Operator::from_csr(
                    self.space.clone(),
                    comm.scale(C64::new(1.0 / term.freq, 0.0)),
                )?;
                out.add_static(shift)?;
            } else {
                out.terms.push(term.clone());
            }
        }
        Ok(out)
    }

    /// Hermiticity deviation of H(t) relative to its magnitude.
    pub fn hermiticity_deviation_at(&self, t: f64) -> f64 {
        let h = self.evaluate(t);
        let scale = h.max_abs().max(1e-300);
        h.matrix().hermiticity_deviation() / scale
    }
}
