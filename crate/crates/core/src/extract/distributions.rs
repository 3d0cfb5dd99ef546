//! Exact verifier-output distributions and the hybrid chain.
//!
//! Every distribution here is computed for one fixed sampled key set (the
//! `key_seed` argument) by enumerating all measurement branches with their
//! amplitudes; fallback coins split mass exactly. Distributions meant to be
//! compared against each other must be computed with the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::observables::{append_fallback_ancillas, ObservableSet};
use super::{basis_split, ExtractError, MaliciousProver, Result};
use crate::batchkeys::{self, BasisSpec, MasterSecretKey};
use crate::bits::Bits;
use crate::mproto::{self, ProtocolParams};
use crate::qsim::{identity, kron, pauli_x, pauli_z, CMat, OutcomeDistribution, PureState};
use crate::rtcf::{self, Preimages};

use num_complex::Complex64;

/// One commitment branch: the observables for its y, the branch weight, and
/// the residual state extended by the fallback ancillas.
pub struct SampledCommitment {
    pub set: ObservableSet,
    pub weight: f64,
    pub psi: PureState,
    pub ys: Vec<Bits>,
}

/// All commitment branches under keys sampled in all-two-to-one mode.
pub fn two_to_one_ensemble(
    params: &ProtocolParams,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<Vec<SampledCommitment>> {
    let mut rng = ChaCha20Rng::seed_from_u64(key_seed);
    let (pk, sk) = super::sim_gen(params, &mut rng)?;
    let n = params.n as usize;
    let pks: Vec<rtcf::RtcfPublicKey> =
        (0..n).map(|i| batchkeys::ext_pk(&pk, i as u32)).collect::<batchkeys::Result<_>>()?;
    let mut out = Vec::new();
    for (ys, weight, state) in prover.commit_branches(&pks)? {
        let set = ObservableSet::protocol(params, &sk, &ys, prover)?;
        let psi = append_fallback_ancillas(state, n)?;
        out.push(SampledCommitment { set, weight, psi, ys });
    }
    Ok(out)
}

// ----------------------------------------------------------------------
// the verifier's output distribution (mode-matched keys, inversion for S)
// ----------------------------------------------------------------------

/// Exact distribution of the verifier's measurement-round output: keys in
/// mode h_i per slot, standard-basis bits obtained by inverting y, Hadamard
/// bits decoded from the equations d with the fallback coin.
pub fn verifier_output_distribution(
    params: &ProtocolParams,
    basis: &BasisSpec,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    let mut rng = ChaCha20Rng::seed_from_u64(key_seed);
    let (pk, sk) = mproto::mp_gen(params, basis, &mut rng)?;
    verifier_output_distribution_with_keys(params, basis, prover, &pk, &sk)
}

/// As [`verifier_output_distribution`] for an already-sampled key pair, so
/// callers can compare against sessions run under those exact keys.
pub fn verifier_output_distribution_with_keys(
    params: &ProtocolParams,
    basis: &BasisSpec,
    prover: &MaliciousProver,
    pk: &crate::batchkeys::MasterPublicKey,
    sk: &MasterSecretKey,
) -> Result<OutcomeDistribution> {
    let n = params.n as usize;
    let h = basis.to_bits()?;
    let (r_slots, s_slots) = basis_split(&h);
    let pks: Vec<rtcf::RtcfPublicKey> =
        (0..n).map(|i| batchkeys::ext_pk(&pk, i as u32)).collect::<batchkeys::Result<_>>()?;
    let mut dist = OutcomeDistribution::zeroed(n);
    for (ys, p_y, state) in prover.commit_branches(&pks)? {
        // standard-basis bits come from inverting the commitment
        let mut base = Bits::zeros(n);
        for &i in &s_slots {
            let ski = batchkeys::ext_sk(&sk, i as u32)?;
            match rtcf::invert(&ski, &ys[i])? {
                Some(Preimages::Injective(p)) => base = base.with_bit(i, p.b),
                _ => return Err(ExtractError::MalformedCommitment),
            }
        }
        let claws = slot_claws(&sk, &ys, &r_slots)?;
        accumulate_equation_branches(
            params, prover, &state, &claws, &r_slots, base, p_y, &mut dist,
        )?;
    }
    Ok(dist)
}

// ----------------------------------------------------------------------
// direct-measurement distributions (B measured for S, d decoded for R)
// ----------------------------------------------------------------------

/// Distribution with all keys in two-to-one mode: standard-basis bits are
/// measured directly off the committed-bit registers, Hadamard bits decoded
/// from d as in the real protocol.
pub fn all_two_to_one_distribution(
    params: &ProtocolParams,
    h: &Bits,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    assert_eq!(h.len(), params.n as usize, "basis width mismatch");
    let basis = BasisSpec::constant(true, params.n);
    direct_measurement_distribution(params, &basis, h, prover, key_seed)
}

/// As [`all_two_to_one_distribution`] but with keys sampled in mode h_i.
pub fn mode_matched_distribution(
    params: &ProtocolParams,
    basis: &BasisSpec,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    let h = basis.to_bits()?;
    direct_measurement_distribution(params, basis, &h, prover, key_seed)
}

fn direct_measurement_distribution(
    params: &ProtocolParams,
    key_basis: &BasisSpec,
    h: &Bits,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    let mut rng = ChaCha20Rng::seed_from_u64(key_seed);
    let (pk, sk) = mproto::mp_gen(params, key_basis, &mut rng)?;
    let n = params.n as usize;
    let (r_slots, s_slots) = basis_split(h);
    let pks: Vec<rtcf::RtcfPublicKey> =
        (0..n).map(|i| batchkeys::ext_pk(&pk, i as u32)).collect::<batchkeys::Result<_>>()?;
    let mut dist = OutcomeDistribution::zeroed(n);
    for (ys, p_y, state) in prover.commit_branches(&pks)? {
        let claws = slot_claws(&sk, &ys, &r_slots)?;
        // measure the committed bits of the standard-basis slots first
        let b_qubits: Vec<usize> = s_slots
            .iter()
            .map(|&i| state.layout().offset_of(&format!("z{i}")).expect("slot register"))
            .collect();
        for v in Bits::all(s_slots.len()) {
            let mut branch = state.clone();
            let p_v = match branch.project_qubits(&b_qubits, &v) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let mut base = Bits::zeros(n);
            for (t, &i) in s_slots.iter().enumerate() {
                base = base.with_bit(i, v.get(t));
            }
            accumulate_equation_branches(
                params,
                prover,
                &branch,
                &claws,
                &r_slots,
                base,
                p_y * p_v,
                &mut dist,
            )?;
        }
    }
    Ok(dist)
}

/// Claw data for the listed slots (keys there must be two-to-one).
fn slot_claws(
    sk: &MasterSecretKey,
    ys: &[Bits],
    slots: &[usize],
) -> Result<Vec<Option<(Bits, Bits)>>> {
    let mut claws = vec![None; ys.len()];
    for &i in slots {
        let ski = batchkeys::ext_sk(sk, i as u32)?;
        match rtcf::invert(&ski, &ys[i])? {
            Some(Preimages::Claw { x0, x1 }) => claws[i] = Some((x0, x1)),
            _ => return Err(ExtractError::MalformedCommitment),
        }
    }
    Ok(claws)
}

/// Apply the attack unitary, rotate every opening register to the Hadamard
/// basis, and fold each equation outcome d into the distribution: valid d
/// contribute their equation bit, invalid d split mass over a fresh coin.
fn accumulate_equation_branches(
    params: &ProtocolParams,
    prover: &MaliciousProver,
    state: &PureState,
    claws: &[Option<(Bits, Bits)>],
    r_slots: &[usize],
    base: Bits,
    mass: f64,
    dist: &mut OutcomeDistribution,
) -> Result<()> {
    let n = params.n as usize;
    let slot_w = params.slot_width();
    let mut work = state.clone();
    prover.apply_attack(&mut work, n)?;
    let mut z_qubits = Vec::with_capacity(n * slot_w);
    for i in 0..n {
        z_qubits.extend(work.layout().qubits_of(&format!("z{i}"))?);
    }
    for &q in &z_qubits {
        work.h(q);
    }
    let d_dist = work.marginal_distribution(&z_qubits);
    for (d_joint, p_d) in d_dist.support() {
        // distribute the outcome mass over the hadamard slots
        let mut targets = vec![(base, mass * p_d)];
        for &i in r_slots {
            let d_i = d_joint.slice(i * slot_w, slot_w);
            let (x0, x1) = claws[i].as_ref().expect("claw prepared for every hadamard slot");
            let mut next = Vec::with_capacity(targets.len() * 2);
            if params.good_policy.is_good(x0, x1, &d_i) {
                let bit = rtcf::hardcore_bit(x0, x1, &d_i)?;
                for (m, p) in targets {
                    next.push((m.with_bit(i, bit), p));
                }
            } else {
                for (m, p) in targets {
                    next.push((m.with_bit(i, false), p * 0.5));
                    next.push((m.with_bit(i, true), p * 0.5));
                }
            }
            targets = next;
        }
        for (m, p) in targets {
            dist.add_mass(&m, p);
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------
// extracted-state distributions
// ----------------------------------------------------------------------

/// Operational route: run the extractor per commitment branch and measure
/// the extracted state in the bases given by h.
pub fn extracted_distribution(
    params: &ProtocolParams,
    h: &Bits,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    assert_eq!(h.len(), params.n as usize, "basis width mismatch");
    let n = params.n as usize;
    let (r_slots, s_slots) = basis_split(h);
    let mut dist = OutcomeDistribution::zeroed(n);
    for branch in two_to_one_ensemble(params, prover, key_seed)? {
        let tau = super::extract_state(&branch.set, &branch.psi)?;
        for u in Bits::all(r_slots.len()) {
            for v in Bits::all(s_slots.len()) {
                let proj = pauli_outcome_projector(n, &r_slots, &u, &s_slots, &v);
                let p = (0..tau.dim())
                    .map(|r| {
                        (0..tau.dim())
                            .map(|c| proj[(r, c)] * tau.operator()[(c, r)])
                            .sum::<Complex64>()
                    })
                    .sum::<Complex64>()
                    .re;
                if p > 0.0 {
                    dist.add_mass(&super::assemble_outcome(h, &u, &v), branch.weight * p);
                }
            }
        }
    }
    Ok(dist)
}

/// Π^σx_u Π^σz_v on N qubits, built densely.
pub(crate) fn pauli_outcome_projector(
    n: usize,
    r_slots: &[usize],
    u: &Bits,
    s_slots: &[usize],
    v: &Bits,
) -> CMat {
    let mut op = identity(1 << n);
    let embed_single = |m: &CMat, q: usize| -> CMat {
        let mut full = identity(1);
        for k in 0..n {
            let factor = if k == q { m.clone() } else { identity(2) };
            full = kron(&factor, &full);
        }
        full
    };
    for (t, &i) in r_slots.iter().enumerate() {
        let sign = if u.get(t) { -1.0 } else { 1.0 };
        let p = (identity(2) + pauli_x() * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0);
        op = embed_single(&p, i) * op;
    }
    for (t, &i) in s_slots.iter().enumerate() {
        let sign = if v.get(t) { -1.0 } else { 1.0 };
        let p = (identity(2) + pauli_z() * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0);
        op = embed_single(&p, i) * op;
    }
    op
}

/// Probability-mass route for the extracted distribution:
/// E over u' of ⟨ψ| Π^Z_v Z(u') Π^X_{u'⊕u} Z(u') Π^Z_v |ψ⟩.
pub fn extracted_distribution_pmf(
    params: &ProtocolParams,
    h: &Bits,
    prover: &MaliciousProver,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    let r_len = basis_split(h).0.len();
    hybrid_distribution(params, h, prover, r_len, key_seed)
}

// ----------------------------------------------------------------------
// hybrids
// ----------------------------------------------------------------------

/// Hyb_j: the first j Hadamard slots are twirled by a random Z parity
/// before the X measurement. Hyb_0 is the two-to-one distribution in its
/// probability-mass form; Hyb_|R| is the extracted distribution.
pub fn hybrid_distribution(
    params: &ProtocolParams,
    h: &Bits,
    prover: &MaliciousProver,
    j: usize,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    assert_eq!(h.len(), params.n as usize, "basis width mismatch");
    let n = params.n as usize;
    let (r_slots, s_slots) = basis_split(h);
    assert!(j <= r_slots.len(), "hybrid index exceeds the Hadamard slot count");
    let mut dist = OutcomeDistribution::zeroed(n);
    for branch in two_to_one_ensemble(params, prover, key_seed)? {
        for v in Bits::all(s_slots.len()) {
            let mut projected = branch.psi.clone();
            let mass_v = branch.set.z_projection(&mut projected, &s_slots, &v);
            if mass_v < crate::tol::ZERO_BRANCH {
                continue;
            }
            for uprime in Bits::all(j) {
                let mut twirled = projected.clone();
                let mut mask = Bits::zeros(n);
                for (t, &i) in r_slots.iter().take(j).enumerate() {
                    if uprime.get(t) {
                        mask = mask.with_bit(i, true);
                    }
                }
                branch.set.apply_z_parity(&mut twirled, &mask);
                let weight = branch.weight / (1u32 << j) as f64;
                for (x_out, p, _) in branch.set.measure_x_slots(&twirled, &r_slots) {
                    // undo the twirl on the outcome labels
                    let mut u = x_out;
                    for (t, _) in r_slots.iter().take(j).enumerate() {
                        if uprime.get(t) {
                            u = u.flipped(t);
                        }
                    }
                    dist.add_mass(&super::assemble_outcome(h, &u, &v), weight * p);
                }
            }
        }
    }
    Ok(dist)
}

/// Hyb_{j,b} (j is 1-based): hybrid j−1 with Z_j^b inserted around the X
/// projector and the j-th outcome bit flipped by b.
pub fn hybrid_half_distribution(
    params: &ProtocolParams,
    h: &Bits,
    prover: &MaliciousProver,
    j: usize,
    b: bool,
    key_seed: u64,
) -> Result<OutcomeDistribution> {
    let n = params.n as usize;
    let (r_slots, s_slots) = basis_split(h);
    assert!(j >= 1 && j <= r_slots.len(), "hybrid half index out of range");
    let mut dist = OutcomeDistribution::zeroed(n);
    for branch in two_to_one_ensemble(params, prover, key_seed)? {
        for v in Bits::all(s_slots.len()) {
            let mut projected = branch.psi.clone();
            let mass_v = branch.set.z_projection(&mut projected, &s_slots, &v);
            if mass_v < crate::tol::ZERO_BRANCH {
                continue;
            }
            for uprime in Bits::all(j - 1) {
                let mut twirled = projected.clone();
                let mut mask = Bits::zeros(n);
                for (t, &i) in r_slots.iter().take(j - 1).enumerate() {
                    if uprime.get(t) {
                        mask = mask.with_bit(i, true);
                    }
                }
                if b {
                    mask = mask.with_bit(r_slots[j - 1], !mask.get(r_slots[j - 1]));
                }
                branch.set.apply_z_parity(&mut twirled, &mask);
                let weight = branch.weight / (1u32 << (j - 1)) as f64;
                for (x_out, p, _) in branch.set.measure_x_slots(&twirled, &r_slots) {
                    let mut u = x_out;
                    for (t, _) in r_slots.iter().take(j - 1).enumerate() {
                        if uprime.get(t) {
                            u = u.flipped(t);
                        }
                    }
                    if b {
                        u = u.flipped(j - 1);
                    }
                    dist.add_mass(&super::assemble_outcome(h, &u, &v), weight * p);
                }
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::random_n_qubit_state;
    use crate::qsim::RegisterLayout;
    use crate::tol;

    fn honest(n: usize, amps: Option<Vec<Complex64>>) -> MaliciousProver {
        let layout = RegisterLayout::new([("w", n)]).unwrap();
        let sigma = match amps {
            Some(a) => PureState::from_amplitudes(layout, a).unwrap(),
            None => PureState::alloc(layout),
        };
        MaliciousProver::honest(sigma)
    }

    fn plus_zero() -> MaliciousProver {
        // |0⟩ ⊗ |+⟩ over two slots (slot 0 standard, slot 1 Hadamard)
        let r = std::f64::consts::FRAC_1_SQRT_2;
        honest(
            2,
            Some(vec![
                Complex64::new(r, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(r, 0.0),
                Complex64::new(0.0, 0.0),
            ]),
        )
    }

    #[test]
    fn output_distribution_of_product_state_is_deterministic() {
        // σ = |0⟩⊗|+⟩, h = (0,1) ⇒ output 00 with probability 1
        let params = ProtocolParams::new(2, 1);
        let basis = BasisSpec::from_bits(&Bits::parse("01"));
        let prover = plus_zero();
        let d = verifier_output_distribution(&params, &basis, &prover, 7).unwrap();
        assert!((d.prob(&Bits::parse("00")) - 1.0).abs() < tol::EXACT);
    }

    #[test]
    fn output_distribution_of_bell_pair_is_correlated() {
        // σ = |φ+⟩, h = (0,0) ⇒ {00: 1/2, 11: 1/2}
        let params = ProtocolParams::new(2, 1);
        let basis = BasisSpec::constant(false, 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let prover = honest(
            2,
            Some(vec![
                Complex64::new(r, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(r, 0.0),
            ]),
        );
        let d = verifier_output_distribution(&params, &basis, &prover, 11).unwrap();
        assert!((d.prob(&Bits::parse("00")) - 0.5).abs() < tol::EXACT);
        assert!((d.prob(&Bits::parse("11")) - 0.5).abs() < tol::EXACT);
    }

    #[test]
    fn classical_one_commitment_outputs_one() {
        // prover committing |1⟩ on an injective slot: output 1 always
        let params = ProtocolParams::new(1, 1);
        let basis = BasisSpec::constant(false, 1);
        let prover = honest(1, Some(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]));
        let d = verifier_output_distribution(&params, &basis, &prover, 13).unwrap();
        assert!((d.prob(&Bits::parse("1")) - 1.0).abs() < tol::EXACT);
    }

    #[test]
    fn hadamard_slot_of_zero_state_is_uniform() {
        // N=1, h=1, σ=|0⟩: equations decode to a uniform bit
        let params = ProtocolParams::new(1, 1);
        let basis = BasisSpec::constant(true, 1);
        let prover = honest(1, None);
        let d = mode_matched_distribution(&params, &basis, &prover, 17).unwrap();
        assert!((d.prob(&Bits::parse("0")) - 0.5).abs() < tol::EXACT);
        assert!((d.prob(&Bits::parse("1")) - 0.5).abs() < tol::EXACT);
    }

    #[test]
    fn honest_distributions_collapse_to_direct_measurement() {
        // D_out = D_h = D_2to1 = M(h, σ) exactly for honest provers
        let params = ProtocolParams::new(2, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        for h_val in 0..4u32 {
            let h = Bits::new(h_val, 2);
            let basis = BasisSpec::from_bits(&h);
            for trial in 0..3 {
                let sigma = random_n_qubit_state(2, &mut rng);
                let want = sigma.measure_bases("w", &h).unwrap();
                let prover = MaliciousProver::honest(sigma);
                let seed = 100 + trial;
                let d_out =
                    verifier_output_distribution(&params, &basis, &prover, seed).unwrap();
                let d_h = mode_matched_distribution(&params, &basis, &prover, seed).unwrap();
                let d_221 = all_two_to_one_distribution(&params, &h, &prover, seed).unwrap();
                assert!(d_out.tv_distance(&want) < tol::EXACT, "h={h}");
                assert!(d_h.tv_distance(&want) < tol::EXACT, "h={h}");
                assert!(d_221.tv_distance(&want) < tol::EXACT, "h={h}");
            }
        }
    }

    #[test]
    fn hybrid_zero_matches_operational_two_to_one() {
        let params = ProtocolParams::new(2, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let h = Bits::parse("11");
        for trial in 0..3u64 {
            let prover = MaliciousProver::random(2, 1, 1, &mut rng);
            let operational =
                all_two_to_one_distribution(&params, &h, &prover, trial).unwrap();
            let pmf = hybrid_distribution(&params, &h, &prover, 0, trial).unwrap();
            let dev = operational.max_pointwise_deviation(&pmf);
            assert!(dev < tol::EXACT, "operational vs pmf deviation {dev}");
        }
    }

    #[test]
    fn extracted_operational_matches_pmf_form() {
        let params = ProtocolParams::new(2, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(29);
        for (trial, h) in [Bits::parse("11"), Bits::parse("10"), Bits::parse("01")]
            .iter()
            .enumerate()
        {
            let prover = MaliciousProver::random(2, 1, 1, &mut rng);
            let op = extracted_distribution(&params, h, &prover, trial as u64).unwrap();
            let pmf = extracted_distribution_pmf(&params, h, &prover, trial as u64).unwrap();
            let dev = op.max_pointwise_deviation(&pmf);
            assert!(dev < tol::EXACT, "h={h}: extractor vs formula deviation {dev}");
        }
    }

    #[test]
    fn honest_prover_hybrid_chain_is_constant() {
        let params = ProtocolParams::new(2, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let h = Bits::parse("11");
        let sigma = random_n_qubit_state(2, &mut rng);
        let prover = MaliciousProver::honest(sigma);
        let h0 = hybrid_distribution(&params, &h, &prover, 0, 5).unwrap();
        for j in 1..=2usize {
            let hj = hybrid_distribution(&params, &h, &prover, j, 5).unwrap();
            let dev = h0.max_pointwise_deviation(&hj);
            assert!(dev < tol::EXACT, "Hyb_0 vs Hyb_{j}: deviation {dev}");
        }
    }

    #[test]
    fn hybrid_relations_hold_for_malicious_provers() {
        let params = ProtocolParams::new(2, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(37);
        let h = Bits::parse("11");
        for trial in 0..2u64 {
            let prover = MaliciousProver::random(2, 1, 1, &mut rng);
            for j in 1..=2usize {
                let prev = hybrid_distribution(&params, &h, &prover, j - 1, trial).unwrap();
                let half0 = hybrid_half_distribution(&params, &h, &prover, j, false, trial)
                    .unwrap();
                let half1 =
                    hybrid_half_distribution(&params, &h, &prover, j, true, trial).unwrap();
                let full = hybrid_distribution(&params, &h, &prover, j, trial).unwrap();
                assert!(prev.max_pointwise_deviation(&half0) < tol::EXACT);
                let mixture = half0.mix(&half1, 0.5);
                assert!(full.max_pointwise_deviation(&mixture) < tol::EXACT);
            }
        }
    }
}
