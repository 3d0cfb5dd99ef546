//! Teleportation-style extraction of an N-qubit state from the prover.
//!
//! The circuit entangles the prover's space with N fresh Bell pairs through
//! a W-controlled application of the parity observables, XORs the Bell
//! measurement outcome back onto W, and keeps the second Bell half. When
//! the observables are genuine Paulis the output equals the input state
//! exactly; for protocol observables it is the state whose basis
//! measurements the verifier's outputs are compared against.

use super::observables::ObservableSet;
use super::Result;
use crate::bits::Bits;
use crate::qsim::{trace_out, MixedState, PureState, RegisterLayout};

/// Run the extraction circuit on `psi` (a state over the observable space)
/// and return the N-qubit extracted state.
pub fn extract_state(set: &ObservableSet, psi: &PureState) -> Result<MixedState> {
    let n = set.n();
    let work = build_work_state(set, psi)?;
    Ok(trace_out(&run_circuit(set, work, n), &["a2"])?)
}

fn build_work_state(set: &ObservableSet, psi: &PureState) -> Result<PureState> {
    assert_eq!(
        psi.total_width(),
        set.h_width(),
        "state does not cover the observable space"
    );
    let mut regs: Vec<(String, usize)> = psi.layout().registers().to_vec();
    let n = set.n();
    regs.push(("a1".to_string(), n));
    regs.push(("a2".to_string(), n));
    regs.push(("wr".to_string(), n));
    regs.push(("ws".to_string(), n));
    let layout = RegisterLayout::new(regs)?;
    let mut work = PureState::alloc(layout);
    {
        let src = psi.amplitudes();
        let dst = work.amplitudes_mut();
        dst[0] = num_complex::Complex64::new(0.0, 0.0);
        dst[..src.len()].copy_from_slice(src);
    }
    Ok(work)
}

fn run_circuit(set: &ObservableSet, mut work: PureState, n: usize) -> PureState {
    let a1 = work.layout().offset_of("a1").expect("a1");
    let a2 = work.layout().offset_of("a2").expect("a2");
    let wr = work.layout().offset_of("wr").expect("wr");
    let ws = work.layout().offset_of("ws").expect("ws");

    // Bell pairs on (a1, a2) and uniform superposition on W
    for j in 0..n {
        work.h(a1 + j);
        work.cnot(a1 + j, a2 + j);
        work.h(wr + j);
        work.h(ws + j);
    }

    // controlled X(r)Z(s) on the observable space and σx(r)σz(s) on a1,
    // both controlled by W; the Z part applies first
    for j in 0..n {
        work.cz(ws + j, set_b_qubit(set, &work, j));
        work.cz(ws + j, a1 + j);
    }
    apply_controlled_x_parity(set, &mut work, wr);
    for j in 0..n {
        work.cnot(wr + j, a1 + j);
    }

    // XOR the Bell readout of (a1, a2) onto W, leaving the pairs intact
    for j in 0..n {
        work.cnot(a1 + j, a2 + j);
        work.h(a1 + j);
        work.cnot(a2 + j, wr + j);
        work.cnot(a1 + j, ws + j);
        work.h(a1 + j);
        work.cnot(a1 + j, a2 + j);
    }
    work
}

fn set_b_qubit(set: &ObservableSet, work: &PureState, j: usize) -> usize {
    match set {
        ObservableSet::Pauli { .. } => work.layout().offset_of("h").expect("h register") + j,
        ObservableSet::Protocol { .. } => {
            work.layout().offset_of(&format!("z{j}")).expect("slot register")
        }
    }
}

/// ∏_j ctrl_{wr_j}-X_j. For Pauli sets these are plain CNOTs; for protocol
/// sets the shared attack-unitary sandwich is applied once and the per-slot
/// diagonals run under their controls in a single sweep.
fn apply_controlled_x_parity(set: &ObservableSet, work: &mut PureState, wr: usize) {
    let n = set.n();
    match set {
        ObservableSet::Pauli { .. } => {
            for j in 0..n {
                let target = set_b_qubit(set, work, j);
                work.cnot(wr + j, target);
            }
        }
        ObservableSet::Protocol { ell, .. } => {
            set.conjugation_forward(work);
            let slot_w = ell + 1;
            let mut slot_info = Vec::with_capacity(n);
            for j in 0..n {
                let z = work.layout().qubits_of(&format!("z{j}")).expect("slot register");
                let u = work.layout().offset_of(&format!("u{j}")).expect("ancilla register");
                slot_info.push((j, z, u));
            }
            work.apply_sign(|idx| {
                let mut sign = false;
                for (j, z, u) in &slot_info {
                    if (idx >> (wr + j)) & 1 == 0 {
                        continue;
                    }
                    let mut d = 0u32;
                    for (t, &q) in z.iter().enumerate() {
                        d |= (((idx >> q) & 1) as u32) << t;
                    }
                    let anc = (idx >> u) & 1 == 1;
                    if set.slot_sign_public(*j, &Bits::new(d, slot_w), anc) {
                        sign = !sign;
                    }
                }
                sign
            });
            set.conjugation_backward(work);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{random_n_qubit_state, MaliciousProver};
    use crate::mproto::ProtocolParams;
    use crate::qsim::MixedState;
    use crate::tol;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn pauli_extraction_reproduces_basis_states() {
        for n in 1..=2usize {
            let set = ObservableSet::pauli(n);
            let psi = PureState::alloc(RegisterLayout::new([("h", n)]).unwrap());
            let tau = extract_state(&set, &psi).unwrap();
            assert!(tau.distance_to_pure(&relabel(&psi)) < tol::EXACT);
        }
    }

    #[test]
    fn pauli_extraction_reproduces_plus_state() {
        let set = ObservableSet::pauli(1);
        let mut psi = PureState::alloc(RegisterLayout::new([("h", 1)]).unwrap());
        psi.h(0);
        let tau = extract_state(&set, &psi).unwrap();
        assert!(tau.distance_to_pure(&relabel(&psi)) < tol::EXACT);
    }

    #[test]
    fn pauli_extraction_reproduces_random_states() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for n in 1..=3usize {
            for _ in 0..3 {
                let psi = {
                    let amps = crate::qsim::random_state_vector(1 << n, &mut rng);
                    PureState::from_amplitudes(
                        RegisterLayout::new([("h", n)]).unwrap(),
                        amps,
                    )
                    .unwrap()
                };
                let set = ObservableSet::pauli(n);
                let tau = extract_state(&set, &psi).unwrap();
                let d = tau.distance_to_pure(&relabel(&psi));
                assert!(d < tol::EXACT, "n={n}: trace distance {d}");
            }
        }
    }

    #[test]
    fn honest_prover_extraction_recovers_committed_qubit() {
        // N=1, ℓ=1: the extracted state equals the logical input qubit
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        let params = ProtocolParams::new(1, 1);
        for _ in 0..5 {
            let sigma = random_n_qubit_state(1, &mut rng);
            let prover = MaliciousProver::honest(sigma.clone());
            let (set, psi) = crate::extract::samp(&params, &prover, &mut rng).unwrap();
            let tau = extract_state(&set, &psi).unwrap();
            let d = tau.distance_to_pure(&relabel(&sigma));
            assert!(d < tol::EXACT, "trace distance {d}");
        }
    }

    fn relabel(psi: &PureState) -> PureState {
        // compare against the extracted register's layout (same amplitudes)
        PureState::from_amplitudes(
            RegisterLayout::new([("a2", psi.total_width())]).unwrap(),
            psi.amplitudes().to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn extracted_state_is_a_density_operator() {
        let mut rng = ChaCha20Rng::seed_from_u64(47);
        let params = ProtocolParams::new(2, 1);
        let prover = MaliciousProver::random(2, 1, 1, &mut rng);
        let (set, psi) = crate::extract::samp(&params, &prover, &mut rng).unwrap();
        let tau: MixedState = extract_state(&set, &psi).unwrap();
        tau.check_invariants(1e-9).unwrap();
    }
}
