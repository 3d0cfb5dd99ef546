use num_complex::Complex64;
use rand::Rng;

use super::dist::OutcomeDistribution;
use super::layout::RegisterLayout;
use super::linalg::{self, CMat};
use super::{Result, SimError};
use crate::bits::Bits;
use crate::tol;

/// A pure state over a register layout; amplitude `k` belongs to the basis
/// state whose qubit `i` equals bit `i` of `k`.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl PureState {
    /// All-zeros basis state.
    pub fn alloc(layout: RegisterLayout) -> PureState {
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amps[0] = Complex64::new(1.0, 0.0);
        PureState { layout, amps }
    }

    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<Complex64>) -> Result<PureState> {
        if amps.len() != layout.dim() {
            return Err(SimError::DimensionMismatch {
                got: amps.len(),
                want: layout.total_width(),
            });
        }
        let state = PureState { layout, amps };
        debug_assert!((state.norm_sqr() - 1.0).abs() <= tol::NORM.max(1e-9));
        Ok(state)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn total_width(&self) -> usize {
        self.layout.total_width()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Fidelity-free exact comparison: max amplitude deviation up to global phase.
    pub fn max_deviation_up_to_phase(&self, other: &PureState) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if inner.norm() > tol::ZERO_BRANCH {
            inner / inner.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }

    // ------------------------------------------------------------------
    // unitaries
    // ------------------------------------------------------------------

    /// Apply a dense operator to the listed qubits (bit `t` of the operator's
    /// index space is qubit `qubits[t]`). The operator must be unitary.
    pub fn apply_unitary_qubits(&mut self, op: &CMat, qubits: &[usize]) -> Result<()> {
        if !linalg::is_unitary(op, tol::OPERATOR) {
            return Err(SimError::NotUnitary);
        }
        self.apply_dense_unchecked(op, qubits);
        Ok(())
    }

    /// Apply a dense operator to a whole register.
    pub fn apply_unitary(&mut self, op: &CMat, register: &str) -> Result<()> {
        let qubits = self.layout.qubits_of(register)?;
        if op.nrows() != 1 << qubits.len() {
            return Err(SimError::DimensionMismatch {
                got: op.nrows(),
                want: qubits.len(),
            });
        }
        self.apply_unitary_qubits(op, &qubits)
    }

    /// Apply a dense operator spanning several registers (in the given order).
    pub fn apply_unitary_regs(&mut self, op: &CMat, registers: &[&str]) -> Result<()> {
        let mut qubits = Vec::new();
        for r in registers {
            qubits.extend(self.layout.qubits_of(r)?);
        }
        if op.nrows() != 1 << qubits.len() {
            return Err(SimError::DimensionMismatch {
                got: op.nrows(),
                want: qubits.len(),
            });
        }
        self.apply_unitary_qubits(op, &qubits)
    }

    /// No unitarity check; callers pass gates known to be unitary.
    pub(crate) fn apply_dense_unchecked(&mut self, op: &CMat, qubits: &[usize]) {
        let k = qubits.len();
        let sub_dim = 1usize << k;
        assert_eq!(op.nrows(), sub_dim);
        let target_mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let dim = self.amps.len();
        let mut gathered = vec![Complex64::new(0.0, 0.0); sub_dim];
        for base in 0..dim {
            if base & target_mask != 0 {
                continue;
            }
            let mut indices = [0usize; 1 << 8];
            debug_assert!(sub_dim <= 1 << 8);
            for sub in 0..sub_dim {
                let mut idx = base;
                for (t, &q) in qubits.iter().enumerate() {
                    if (sub >> t) & 1 == 1 {
                        idx |= 1 << q;
                    }
                }
                indices[sub] = idx;
                gathered[sub] = self.amps[idx];
            }
            for row in 0..sub_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for col in 0..sub_dim {
                    acc += op[(row, col)] * gathered[col];
                }
                self.amps[indices[row]] = acc;
            }
        }
    }

    pub fn h(&mut self, qubit: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dim = self.amps.len();
        let bit = 1usize << qubit;
        for i in 0..dim {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = (a + b) * s;
                self.amps[i | bit] = (a - b) * s;
            }
        }
    }

    pub fn x(&mut self, qubit: usize) {
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    pub fn z(&mut self, qubit: usize) {
        let bit = 1usize << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let cb = 1usize << control;
        let tb = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Multiply each basis amplitude by `phase(index)`.
    pub fn apply_diagonal<F: Fn(usize) -> Complex64>(&mut self, phase: F) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= phase(i);
        }
    }

    /// Flip the sign of amplitudes where `negate(index)` holds.
    pub fn apply_sign<F: Fn(usize) -> bool>(&mut self, negate: F) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if negate(i) {
                *a = -*a;
            }
        }
    }

    /// Permute basis states: amplitude at `i` moves to `permute(i)`.
    pub fn apply_permutation<F: Fn(usize) -> usize>(&mut self, permute: F) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[permute(i)] = *a;
        }
        self.amps = out;
    }

    /// XOR a classical function of `inputs` into `outputs` (both qubit lists).
    pub fn apply_classical_xor<F: Fn(Bits) -> Bits>(
        &mut self,
        inputs: &[usize],
        outputs: &[usize],
        f: F,
    ) {
        let in_len = inputs.len();
        let out_len = outputs.len();
        self.apply_permutation(|idx| {
            let mut inp = 0u32;
            for (t, &q) in inputs.iter().enumerate() {
                inp |= (((idx >> q) & 1) as u32) << t;
            }
            let val = f(Bits::new(inp, in_len));
            assert_eq!(val.len(), out_len);
            let mut out = idx;
            for (t, &q) in outputs.iter().enumerate() {
                if val.get(t) {
                    out ^= 1 << q;
                }
            }
            out
        });
    }

    // ------------------------------------------------------------------
    // measurement
    // ------------------------------------------------------------------

    /// Exact outcome distribution of measuring `register` in the per-qubit
    /// bases given by `h` (0 standard, 1 Hadamard).
    pub fn measure_bases(&self, register: &str, h: &Bits) -> Result<OutcomeDistribution> {
        let qubits = self.layout.qubits_of(register)?;
        if h.len() != qubits.len() {
            return Err(SimError::LengthMismatch { got: h.len(), want: qubits.len() });
        }
        let mut rotated = self.clone();
        for (t, &q) in qubits.iter().enumerate() {
            if h.get(t) {
                rotated.h(q);
            }
        }
        Ok(rotated.marginal_distribution(&qubits))
    }

    /// Probability of each value of the listed qubits in the standard basis.
    pub fn marginal_distribution(&self, qubits: &[usize]) -> OutcomeDistribution {
        let n = qubits.len();
        let mut probs = vec![0.0f64; 1 << n];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut v = 0usize;
            for (t, &q) in qubits.iter().enumerate() {
                v |= ((i >> q) & 1) << t;
            }
            probs[v] += p;
        }
        OutcomeDistribution::new(n, probs)
    }

    /// Sample a basis measurement of `register`, collapsing the state.
    pub fn sample_measure<R: Rng + ?Sized>(
        &mut self,
        register: &str,
        h: &Bits,
        rng: &mut R,
    ) -> Result<Bits> {
        let qubits = self.layout.qubits_of(register)?;
        if h.len() != qubits.len() {
            return Err(SimError::LengthMismatch { got: h.len(), want: qubits.len() });
        }
        for (t, &q) in qubits.iter().enumerate() {
            if h.get(t) {
                self.h(q);
            }
        }
        let dist = self.marginal_distribution(&qubits);
        let outcome = dist.sample(rng);
        self.project_qubits(&qubits, &outcome)?;
        for (t, &q) in qubits.iter().enumerate() {
            if h.get(t) {
                self.h(q);
            }
        }
        Ok(outcome)
    }

    /// Project the listed qubits onto a basis value and renormalize.
    pub fn project_qubits(&mut self, qubits: &[usize], value: &Bits) -> Result<f64> {
        assert_eq!(value.len(), qubits.len());
        let mut prob = 0.0f64;
        for (i, a) in self.amps.iter_mut().enumerate() {
            let mut matches = true;
            for (t, &q) in qubits.iter().enumerate() {
                if ((i >> q) & 1 == 1) != value.get(t) {
                    matches = false;
                    break;
                }
            }
            if matches {
                prob += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if prob < tol::ZERO_BRANCH {
            return Err(SimError::ZeroProbabilityBranch);
        }
        let scale = 1.0 / prob.sqrt();
        for a in &mut self.amps {
            *a *= scale;
        }
        Ok(prob)
    }

    /// Project `register` onto a basis value and drop it from the layout.
    /// Returns the branch probability and the reduced state.
    pub fn project_out(&self, register: &str, value: &Bits) -> Result<(f64, PureState)> {
        let qubits = self.layout.qubits_of(register)?;
        if value.len() != qubits.len() {
            return Err(SimError::LengthMismatch { got: value.len(), want: qubits.len() });
        }
        let new_layout = self.layout.without(register)?;
        let offset = self.layout.offset_of(register)?;
        let width = qubits.len();
        let low_mask = (1usize << offset) - 1;
        let mut amps = vec![Complex64::new(0.0, 0.0); new_layout.dim()];
        let mut prob = 0.0f64;
        for (j, slot) in amps.iter_mut().enumerate() {
            let idx = (j & low_mask) | (value.index() << offset) | ((j & !low_mask) << width);
            let a = self.amps[idx];
            prob += a.norm_sqr();
            *slot = a;
        }
        if prob < tol::ZERO_BRANCH {
            return Err(SimError::ZeroProbabilityBranch);
        }
        let scale = 1.0 / prob.sqrt();
        for a in &mut amps {
            *a *= scale;
        }
        Ok((prob, PureState { layout: new_layout, amps }))
    }

    /// All standard-basis branches of `register` with probability above the
    /// zero-branch threshold; the register is dropped from each branch state.
    pub fn branches_project_out(&self, register: &str) -> Result<Vec<(Bits, f64, PureState)>> {
        let width = self.layout.width_of(register)?;
        let mut out = Vec::new();
        for value in Bits::all(width) {
            match self.project_out(register, &value) {
                Ok((p, state)) => out.push((value, p, state)),
                Err(SimError::ZeroProbabilityBranch) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Append a fresh all-zeros register to the end of the layout.
    pub fn append_register(&self, name: &str, width: usize) -> Result<PureState> {
        let mut regs: Vec<(String, usize)> = self.layout.registers().to_vec();
        regs.push((name.to_string(), width));
        let layout = RegisterLayout::new(regs)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(PureState { layout, amps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn single() -> PureState {
        PureState::alloc(RegisterLayout::new([("a", 1)]).unwrap())
    }

    #[test]
    fn alloc_is_zero_state() {
        let s = single();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));
        let two = PureState::alloc(RegisterLayout::new([("a", 1), ("b", 1)]).unwrap());
        assert_eq!(two.amplitudes()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = single();
        s.apply_unitary(&linalg::hadamard(), "a").unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - r).abs() < 1e-12);
        assert!((s.amplitudes()[1].re - r).abs() < 1e-12);
    }

    #[test]
    fn identity_preserves_state_and_x_is_involution() {
        let mut s = single();
        s.apply_unitary(&linalg::identity(2), "a").unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        s.x(0);
        s.x(0);
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn non_unitary_rejected() {
        let mut s = single();
        let bad = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(s.apply_unitary(&bad, "a"), Err(SimError::NotUnitary)));
    }

    #[test]
    fn measure_bases_examples() {
        // h=0 on |1>
        let mut s = single();
        s.x(0);
        let d = s.measure_bases("a", &Bits::parse("0")).unwrap();
        assert!((d.prob(&Bits::parse("1")) - 1.0).abs() < 1e-12);

        // h=1 on |-> = (|0>-|1>)/sqrt(2)
        let mut s = single();
        s.x(0);
        s.h(0);
        let d = s.measure_bases("a", &Bits::parse("1")).unwrap();
        assert!((d.prob(&Bits::parse("1")) - 1.0).abs() < 1e-12);

        // h=(0,1) on |0>|+>
        let mut s = PureState::alloc(RegisterLayout::new([("r", 2)]).unwrap());
        s.h(1);
        let d = s.measure_bases("r", &Bits::parse("01")).unwrap();
        assert!((d.prob(&Bits::parse("00")) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_measure_collapses_bell_pair() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut s = PureState::alloc(RegisterLayout::new([("p", 1), ("q", 1)]).unwrap());
            s.h(0);
            s.cnot(0, 1);
            let b = s.sample_measure("p", &Bits::parse("0"), &mut rng).unwrap();
            let d = s.measure_bases("q", &Bits::parse("0")).unwrap();
            assert!((d.prob(&b) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_measure_deterministic_on_basis_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut s = single();
        let b = s.sample_measure("a", &Bits::parse("0"), &mut rng).unwrap();
        assert_eq!(b, Bits::parse("0"));
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_out_removes_register() {
        // |0>|1>: projecting the second register out on |1> leaves |0>.
        let mut s = PureState::alloc(RegisterLayout::new([("a", 1), ("b", 1)]).unwrap());
        s.x(1);
        let (p, reduced) = s.project_out("b", &Bits::parse("1")).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert_eq!(reduced.total_width(), 1);
        assert!((reduced.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn random_unitaries_preserve_norm(seed in 0u64..1000) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut s = PureState::alloc(
                RegisterLayout::new([("a", 2), ("b", 1)]).unwrap(),
            );
            let u = linalg::random_unitary(4, &mut rng);
            s.apply_unitary_regs(&u, &["a"]).unwrap();
            let v = linalg::random_unitary(2, &mut rng);
            s.apply_unitary(&v, "b").unwrap();
            proptest::prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);

            // and every basis-measurement distribution stays normalized
            let h = Bits::new((seed % 8) as u32, 3);
            let joint = {
                let mut regs_state = s.clone();
                regs_state.h(0);
                regs_state.measure_bases("a", &h.slice(0, 2)).unwrap()
            };
            proptest::prop_assert!((joint.total_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn monte_carlo_matches_exact_distribution() {
        // 10^5 samples of |+> in the standard basis stay within 4 sigma.
        let trials = 100_000usize;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut zeros = 0usize;
        for _ in 0..trials {
            let mut s = single();
            s.h(0);
            if s.sample_measure("a", &Bits::parse("0"), &mut rng).unwrap() == Bits::parse("0") {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / trials as f64;
        let sigma = (0.25f64 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * sigma, "freq {freq} too far from 0.5");
    }
}
