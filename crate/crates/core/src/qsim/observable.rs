use num_complex::Complex64;

use super::linalg::{self, CMat};
use super::state::PureState;
use super::{Result, SimError};
use crate::bits::Bits;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliKind {
    X,
    Z,
}

/// A ±1-outcome Hermitian observable (an involution). Outcome +1 maps to
/// bit 0 and −1 to bit 1. Parity observables are kept in structured form and
/// applied as index permutations/sign flips; anything else is a small dense
/// matrix.
#[derive(Clone, Debug)]
pub struct BinaryObservable {
    width: usize,
    form: ObsForm,
}

#[derive(Clone, Debug)]
enum ObsForm {
    Parity { kind: PauliKind, mask: Bits },
    Dense(CMat),
}

/// σ_x(r) = ∏_{i: r_i=1} σ_{x,i} or σ_z(s) = ∏_{i: s_i=1} σ_{z,i} over a
/// register of `mask.len()` qubits. An all-zero mask is the identity.
pub fn pauli_parity(kind: PauliKind, mask: &Bits) -> BinaryObservable {
    BinaryObservable { width: mask.len(), form: ObsForm::Parity { kind, mask: *mask } }
}

impl BinaryObservable {
    pub fn from_dense(mat: CMat) -> Result<BinaryObservable> {
        let dim = mat.nrows();
        if !linalg::is_hermitian(&mat, tol::OPERATOR) {
            return Err(SimError::NotInvolutive);
        }
        if (&mat * &mat - linalg::identity(dim))
            .iter()
            .any(|c| c.norm() > tol::OPERATOR * dim as f64)
        {
            return Err(SimError::NotInvolutive);
        }
        let width = dim.trailing_zeros() as usize;
        Ok(BinaryObservable { width, form: ObsForm::Dense(mat) })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn to_dense(&self) -> CMat {
        match &self.form {
            ObsForm::Dense(m) => m.clone(),
            ObsForm::Parity { kind, mask } => {
                let dim = 1usize << self.width;
                let mut m = CMat::zeros(dim, dim);
                for col in 0..dim {
                    let (row, sign) = parity_action(*kind, mask, col);
                    m[(row, col)] = Complex64::new(if sign { -1.0 } else { 1.0 }, 0.0);
                }
                m
            }
        }
    }

    /// The +1 eigenprojector (Id + O)/2.
    pub fn plus_projector(&self) -> CMat {
        let dim = 1usize << self.width;
        (self.to_dense() + linalg::identity(dim)) * Complex64::new(0.5, 0.0)
    }

    /// Apply the observable as a unitary to a whole register.
    pub fn apply(&self, state: &mut PureState, register: &str) -> Result<()> {
        let qubits = state.layout().qubits_of(register)?;
        self.apply_qubits(state, &qubits)
    }

    pub fn apply_qubits(&self, state: &mut PureState, qubits: &[usize]) -> Result<()> {
        if qubits.len() != self.width {
            return Err(SimError::DimensionMismatch { got: 1 << qubits.len(), want: self.width });
        }
        match &self.form {
            ObsForm::Parity { kind: PauliKind::Z, mask } => {
                let flip: usize = qubits
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| mask.get(*t))
                    .map(|(_, &q)| 1usize << q)
                    .sum();
                state.apply_sign(|idx| (idx & flip).count_ones() % 2 == 1);
            }
            ObsForm::Parity { kind: PauliKind::X, mask } => {
                let flip: usize = qubits
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| mask.get(*t))
                    .map(|(_, &q)| 1usize << q)
                    .sum();
                state.apply_permutation(|idx| idx ^ flip);
            }
            ObsForm::Dense(m) => state.apply_dense_unchecked(m, qubits),
        }
        Ok(())
    }

    /// Measure on a register: returns the surviving branches as
    /// (outcome bit, probability, renormalized post-state).
    pub fn measure(&self, state: &PureState, register: &str) -> Result<Vec<(bool, f64, PureState)>> {
        let qubits = state.layout().qubits_of(register)?;
        self.measure_qubits(state, &qubits)
    }

    pub fn measure_qubits(
        &self,
        state: &PureState,
        qubits: &[usize],
    ) -> Result<Vec<(bool, f64, PureState)>> {
        let mut flipped = state.clone();
        self.apply_qubits(&mut flipped, qubits)?;
        let mut out = Vec::new();
        for (bit, sign) in [(false, 1.0), (true, -1.0)] {
            let mut branch = state.clone();
            let mut prob = 0.0;
            for (slot, f) in branch.amplitudes_mut().iter_mut().zip(flipped.amplitudes()) {
                *slot = (*slot + f * sign) * 0.5;
                prob += slot.norm_sqr();
            }
            if prob < tol::ZERO_BRANCH {
                continue;
            }
            let scale = 1.0 / prob.sqrt();
            for slot in branch.amplitudes_mut() {
                *slot *= scale;
            }
            out.push((bit, prob, branch));
        }
        Ok(out)
    }

    pub fn expectation(&self, state: &PureState, register: &str) -> Result<f64> {
        let mut flipped = state.clone();
        self.apply(&mut flipped, register)?;
        let inner: Complex64 = state
            .amplitudes()
            .iter()
            .zip(flipped.amplitudes())
            .map(|(a, f)| a.conj() * f)
            .sum();
        Ok(inner.re)
    }

    /// Operator product; parity observables of the same kind compose by mask
    /// XOR, anything else multiplies densely.
    pub fn product(&self, other: &BinaryObservable) -> Result<BinaryObservable> {
        if self.width != other.width {
            return Err(SimError::DimensionMismatch { got: 1 << other.width, want: self.width });
        }
        match (&self.form, &other.form) {
            (
                ObsForm::Parity { kind: k1, mask: m1 },
                ObsForm::Parity { kind: k2, mask: m2 },
            ) if k1 == k2 => Ok(pauli_parity(*k1, &m1.xor(m2))),
            _ => BinaryObservable::from_dense(self.to_dense() * other.to_dense()),
        }
    }
}

fn parity_action(kind: PauliKind, mask: &Bits, idx: usize) -> (usize, bool) {
    match kind {
        PauliKind::Z => {
            let overlap = (idx as u32) & mask.value();
            (idx, overlap.count_ones() % 2 == 1)
        }
        PauliKind::X => (idx ^ mask.value() as usize, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::RegisterLayout;

    fn basis_state(bits: &Bits) -> PureState {
        let mut s = PureState::alloc(RegisterLayout::new([("r", bits.len())]).unwrap());
        for i in 0..bits.len() {
            if bits.get(i) {
                s.x(i);
            }
        }
        s
    }

    #[test]
    fn z_parity_eigenvalues() {
        // σ_z(10) on |10>: only bit 0 is in the mask and it is set ⇒ −1.
        let obs = pauli_parity(PauliKind::Z, &Bits::parse("10"));
        let s = basis_state(&Bits::parse("10"));
        assert!((obs.expectation(&s, "r").unwrap() + 1.0).abs() < 1e-12);

        // σ_z(11) on |11>: even parity ⇒ +1.
        let obs = pauli_parity(PauliKind::Z, &Bits::parse("11"));
        let s = basis_state(&Bits::parse("11"));
        assert!((obs.expectation(&s, "r").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_parity_flips() {
        let obs = pauli_parity(PauliKind::X, &Bits::parse("1"));
        let mut s = basis_state(&Bits::parse("0"));
        obs.apply(&mut s, "r").unwrap();
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mask_is_identity() {
        let obs = pauli_parity(PauliKind::X, &Bits::parse("00"));
        let d = obs.to_dense();
        assert!((d - linalg::identity(4)).iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn parity_product_law() {
        // X(m1)·X(m2) = X(m1⊕m2) as operators.
        for (m1, m2) in [("10", "11"), ("01", "01"), ("11", "00")] {
            for kind in [PauliKind::X, PauliKind::Z] {
                let a = pauli_parity(kind, &Bits::parse(m1));
                let b = pauli_parity(kind, &Bits::parse(m2));
                let prod = a.product(&b).unwrap().to_dense();
                let want = pauli_parity(kind, &Bits::parse(m1).xor(&Bits::parse(m2))).to_dense();
                assert!((prod - want).iter().all(|c| c.norm() < tol::OPERATOR));
            }
        }
    }

    #[test]
    fn xz_commutation_sign() {
        // σ_x(r)σ_z(s) = (−1)^{|r∧s|} σ_z(s)σ_x(r).
        for (r, s) in [("10", "10"), ("11", "01"), ("11", "11"), ("10", "01")] {
            let r = Bits::parse(r);
            let s = Bits::parse(s);
            let x = pauli_parity(PauliKind::X, &r).to_dense();
            let z = pauli_parity(PauliKind::Z, &s).to_dense();
            let sign = if r.and(&s).parity() { -1.0 } else { 1.0 };
            let lhs = &x * &z;
            let rhs = (&z * &x) * Complex64::new(sign, 0.0);
            assert!((lhs - rhs).iter().all(|c| c.norm() < tol::OPERATOR));
        }
    }

    #[test]
    fn plus_projector_is_idempotent() {
        for (kind, mask) in [
            (PauliKind::X, "10"),
            (PauliKind::Z, "11"),
            (PauliKind::X, "01"),
        ] {
            let p = pauli_parity(kind, &Bits::parse(mask)).plus_projector();
            assert!(linalg::is_projector(&p, tol::OPERATOR));
        }
    }

    #[test]
    fn measure_branches_are_normalized() {
        let obs = pauli_parity(PauliKind::X, &Bits::parse("1"));
        let s = basis_state(&Bits::parse("0"));
        let branches = obs.measure(&s, "r").unwrap();
        assert_eq!(branches.len(), 2);
        for (_, p, post) in &branches {
            assert!((p - 0.5).abs() < 1e-12);
            assert!((post.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
