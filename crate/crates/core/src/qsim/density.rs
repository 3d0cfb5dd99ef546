use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use super::dist::OutcomeDistribution;
use super::layout::RegisterLayout;
use super::linalg::{hadamard, is_hermitian, CMat};
use super::state::PureState;
use super::{Result, SimError};
use crate::bits::Bits;

/// A density operator over a register layout.
#[derive(Clone, Debug)]
pub struct MixedState {
    layout: RegisterLayout,
    rho: CMat,
}

impl MixedState {
    pub fn new(layout: RegisterLayout, rho: CMat) -> Result<MixedState> {
        if rho.nrows() != layout.dim() {
            return Err(SimError::DimensionMismatch {
                got: rho.nrows(),
                want: layout.total_width(),
            });
        }
        let m = MixedState { layout, rho };
        debug_assert!(m.check_invariants(1e-10).is_ok());
        Ok(m)
    }

    pub fn from_pure(state: &PureState) -> MixedState {
        let dim = state.amplitudes().len();
        let amps = state.amplitudes();
        let rho = CMat::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj());
        MixedState { layout: state.layout().clone(), rho }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn operator(&self) -> &CMat {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).sum()
    }

    /// Hermiticity, unit trace, and positive semidefiniteness.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        if !is_hermitian(&self.rho, tol) {
            return Err(SimError::NotPsd);
        }
        if (self.trace() - 1.0).abs() > tol {
            return Err(SimError::NotPsd);
        }
        let eig = SymmetricEigen::new(self.rho.clone());
        if eig.eigenvalues.iter().any(|&e| e < -tol) {
            return Err(SimError::NotPsd);
        }
        Ok(())
    }

    /// Distribution of measuring `register` qubit-by-qubit in bases `h`.
    pub fn measure_bases(&self, register: &str, h: &Bits) -> Result<OutcomeDistribution> {
        let qubits = self.layout.qubits_of(register)?;
        if h.len() != qubits.len() {
            return Err(SimError::LengthMismatch { got: h.len(), want: qubits.len() });
        }
        let mut rho = self.rho.clone();
        let had = hadamard();
        for (t, &q) in qubits.iter().enumerate() {
            if h.get(t) {
                rho = conjugate_single(&rho, &had, q);
            }
        }
        let n = qubits.len();
        let mut probs = vec![0.0f64; 1 << n];
        for i in 0..rho.nrows() {
            let p = rho[(i, i)].re;
            let mut v = 0usize;
            for (t, &q) in qubits.iter().enumerate() {
                v |= ((i >> q) & 1) << t;
            }
            probs[v] += p;
        }
        Ok(OutcomeDistribution::new(n, probs))
    }
}

/// U_q rho U_q† for a single-qubit operator on qubit `q`.
fn conjugate_single(rho: &CMat, u: &CMat, q: usize) -> CMat {
    let dim = rho.nrows();
    let bit = 1usize << q;
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..2usize {
                for b in 0..2usize {
                    let ii = (i & !bit) | (a << q);
                    let jj = (j & !bit) | (b << q);
                    acc += u[((i >> q) & 1, a)] * rho[(ii, jj)] * u[((j >> q) & 1, b)].conj();
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Reduced density operator keeping the named registers (in the given order).
pub fn trace_out(state: &PureState, keep: &[&str]) -> Result<MixedState> {
    let new_layout = state.layout().keep(keep)?;
    let mut kept_qubits = Vec::new();
    for name in keep {
        kept_qubits.extend(state.layout().qubits_of(name)?);
    }
    let k = kept_qubits.len();
    let total = state.total_width();
    let other: Vec<usize> = (0..total).filter(|q| !kept_qubits.contains(q)).collect();
    let amps = state.amplitudes();
    let mut rho = CMat::zeros(1 << k, 1 << k);
    let build = |kept_val: usize, rest_val: usize| -> usize {
        let mut idx = 0usize;
        for (t, &q) in kept_qubits.iter().enumerate() {
            idx |= ((kept_val >> t) & 1) << q;
        }
        for (t, &q) in other.iter().enumerate() {
            idx |= ((rest_val >> t) & 1) << q;
        }
        idx
    };
    for rest in 0..(1usize << other.len()) {
        for i in 0..(1usize << k) {
            let ai = amps[build(i, rest)];
            if ai.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..(1usize << k) {
                rho[(i, j)] += ai * amps[build(j, rest)].conj();
            }
        }
    }
    MixedState::new(new_layout, rho)
}

/// Reduced density operator from a mixed state.
pub fn trace_out_mixed(state: &MixedState, keep: &[&str]) -> Result<MixedState> {
    let new_layout = state.layout().keep(keep)?;
    let mut kept_qubits = Vec::new();
    for name in keep {
        kept_qubits.extend(state.layout().qubits_of(name)?);
    }
    let k = kept_qubits.len();
    let total = state.layout().total_width();
    let other: Vec<usize> = (0..total).filter(|q| !kept_qubits.contains(q)).collect();
    let rho_in = state.operator();
    let mut rho = CMat::zeros(1 << k, 1 << k);
    let build = |kept_val: usize, rest_val: usize| -> usize {
        let mut idx = 0usize;
        for (t, &q) in kept_qubits.iter().enumerate() {
            idx |= ((kept_val >> t) & 1) << q;
        }
        for (t, &q) in other.iter().enumerate() {
            idx |= ((rest_val >> t) & 1) << q;
        }
        idx
    };
    for rest in 0..(1usize << other.len()) {
        for i in 0..(1usize << k) {
            for j in 0..(1usize << k) {
                rho[(i, j)] += rho_in[(build(i, rest), build(j, rest))];
            }
        }
    }
    MixedState::new(new_layout, rho)
}

/// Trace distance (1/2)·||a - b||₁ between two density operators.
pub fn trace_distance(a: &MixedState, b: &MixedState) -> f64 {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch in trace distance");
    let diff = a.operator() - b.operator();
    // force exact Hermiticity before the eigensolve
    let herm = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    0.5 * eig.eigenvalues.iter().map(|e| e.abs()).sum::<f64>()
}

impl MixedState {
    /// Convenience: trace distance to a pure state.
    pub fn distance_to_pure(&self, psi: &PureState) -> f64 {
        trace_distance(self, &MixedState::from_pure(psi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    #[test]
    fn product_state_traces_to_factor() {
        // |0>|1>: tracing out the first qubit leaves |1><1|.
        let mut s = PureState::alloc(RegisterLayout::new([("a", 1), ("b", 1)]).unwrap());
        s.x(1);
        let m = trace_out(&s, &["b"]).unwrap();
        assert!((m.operator()[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!(m.operator()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn bell_pair_marginal_is_maximally_mixed() {
        let mut s = PureState::alloc(RegisterLayout::new([("a", 1), ("b", 1)]).unwrap());
        s.h(0);
        s.cnot(0, 1);
        let m = trace_out(&s, &["b"]).unwrap();
        assert!((m.operator()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((m.operator()[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!(m.operator()[(0, 1)].norm() < 1e-12);

        // distance from |0><0| is exactly 1/2 (eigenvalues ±1/2 of the difference)
        let zero = {
            let z = PureState::alloc(RegisterLayout::new([("b", 1)]).unwrap());
            MixedState::from_pure(&z)
        };
        assert!((trace_distance(&m, &zero) - 0.5).abs() < tol::EXACT);
    }

    #[test]
    fn trace_distance_to_self_is_zero() {
        let mut s = PureState::alloc(RegisterLayout::new([("a", 2)]).unwrap());
        s.h(0);
        s.cnot(0, 1);
        let m = MixedState::from_pure(&s);
        assert!(trace_distance(&m, &m) < 1e-12);
    }

    #[test]
    fn empty_keep_set_is_an_error() {
        let s = PureState::alloc(RegisterLayout::new([("a", 1)]).unwrap());
        assert!(matches!(trace_out(&s, &[]), Err(SimError::EmptyKeepSet)));
    }

    #[test]
    fn mixed_measure_matches_pure_measure() {
        let mut s = PureState::alloc(RegisterLayout::new([("a", 2)]).unwrap());
        s.h(0);
        s.cnot(0, 1);
        let m = MixedState::from_pure(&s);
        for h in Bits::all(2) {
            let dp = s.measure_bases("a", &h).unwrap();
            let dm = m.measure_bases("a", &h).unwrap();
            assert!(dp.tv_distance(&dm) < 1e-12);
        }
    }
}
