//! Delegated verification on top of the commit-and-measure protocol.
//!
//! The composition: a one-message quantum proof system whose verifier only
//! post-processes random-basis measurement outcomes (realized here by a toy
//! stabilizer-check instance), glued to the measurement protocol so a
//! classical verifier can obtain those outcomes. Bases come from a PRF seed,
//! which keeps the verifier's messages small; soundness amplification is
//! plain parallel repetition, whose driving quantity (the orthogonality
//! score of a commit-challenge-response cheater) is computed exactly here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::batchkeys::{self, Backend, BasisSpec, MasterPublicKey, MasterSecretKey, PprfSeed};
use crate::bits::Bits;
use crate::mproto::{
    self, CommitMessage, GoodPolicy, Opening, ProtocolParams, SessionResult, Verdict,
};
use crate::qsim::{
    self, identity, pauli_parity, CMat, PauliKind, PureState, RegisterLayout,
};
use crate::wire::{self, tag, Frame};

use num_complex::Complex64;

#[derive(Debug, Error)]
pub enum DelegateError {
    #[error("proof width {0} out of supported range 1..=4")]
    ProofWidth(usize),
    #[error("stabilizer checks do not commute")]
    NonCommutingChecks,
    #[error("check support exceeds the proof width")]
    SupportOutOfRange,
    #[error("instance has no satisfying proof state")]
    NoInstance,
    #[error("malformed instance file: {0}")]
    MalformedInstance(String),
    #[error("batch instances must share one proof width")]
    MixedProofWidths,
    #[error("model is malformed: {0}")]
    MalformedModel(&'static str),
    #[error(transparent)]
    Protocol(#[from] mproto::ProtocolError),
    #[error(transparent)]
    Keys(#[from] batchkeys::BatchKeyError),
    #[error(transparent)]
    Sim(#[from] qsim::SimError),
}

pub type Result<T> = std::result::Result<T, DelegateError>;

// ----------------------------------------------------------------------
// post-hoc verification interface and its stabilizer toy
// ----------------------------------------------------------------------

/// A one-message quantum proof checked by classical post-processing of
/// per-qubit standard/Hadamard measurement outcomes.
pub trait PostHocInstance {
    fn label(&self) -> &str;
    fn proof_width(&self) -> usize;
    fn witness_copies(&self) -> usize;
    /// The honest proof state, if one exists.
    fn honest_proof(&self) -> Result<PureState>;
    /// The classical predicate on (basis vector, outcomes).
    fn verify(&self, h: &Bits, m: &Bits) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParityCheck {
    pub kind: PauliKind,
    pub support: Bits,
    pub parity: bool,
}

/// Toy instance: a list of commuting X/Z parity checks. A proof is any state
/// satisfying all of them; verification evaluates a check only when every
/// supported qubit was measured in the check's basis.
#[derive(Clone, Debug)]
pub struct StabilizerCheckInstance {
    label: String,
    proof_width: usize,
    witness_copies: usize,
    checks: Vec<ParityCheck>,
}

impl StabilizerCheckInstance {
    pub fn new(
        label: impl Into<String>,
        proof_width: usize,
        checks: Vec<ParityCheck>,
    ) -> Result<StabilizerCheckInstance> {
        if !(1..=4).contains(&proof_width) {
            return Err(DelegateError::ProofWidth(proof_width));
        }
        for c in &checks {
            if c.support.len() != proof_width {
                return Err(DelegateError::SupportOutOfRange);
            }
        }
        for (a, b) in checks.iter().enumerate().flat_map(|(i, a)| {
            checks[i + 1..].iter().map(move |b| (a, b))
        }) {
            if a.kind != b.kind && a.support.and(&b.support).parity() {
                return Err(DelegateError::NonCommutingChecks);
            }
        }
        Ok(StabilizerCheckInstance {
            label: label.into(),
            proof_width,
            witness_copies: 1,
            checks,
        })
    }

    pub fn checks(&self) -> &[ParityCheck] {
        &self.checks
    }

    /// Joint projector onto states satisfying every check.
    fn joint_projector(&self) -> CMat {
        let dim = 1 << self.proof_width;
        let mut p = identity(dim);
        for c in &self.checks {
            let s = pauli_parity(c.kind, &c.support).to_dense();
            let sign = if c.parity { -1.0 } else { 1.0 };
            p = (identity(dim) + s * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0) * p;
        }
        p
    }

    pub fn is_yes_instance(&self) -> bool {
        let p = self.joint_projector();
        (0..p.nrows()).map(|i| p[(i, i)].re).sum::<f64>() > 0.5
    }

    // ------------------------------------------------------------------
    // line-oriented text form: a width header, then one check per line
    // ------------------------------------------------------------------

    pub fn to_text(&self) -> String {
        let mut out = format!("width {}\n", self.proof_width);
        for c in &self.checks {
            let kind = match c.kind {
                PauliKind::X => "X",
                PauliKind::Z => "Z",
            };
            out.push_str(&format!(
                "{kind} {:x} {}\n",
                c.support.value(),
                c.parity as u8
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<StabilizerCheckInstance> {
        let mut width: Option<usize> = None;
        let mut checks = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            let err = |msg: &str| {
                DelegateError::MalformedInstance(format!("line {}: {msg}", lineno + 1))
            };
            match head {
                "width" => {
                    let w = parts
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err("expected `width <n>`"))?;
                    width = Some(w);
                }
                "X" | "Z" => {
                    let w = width.ok_or_else(|| err("check before width header"))?;
                    let mask = parts
                        .next()
                        .and_then(|s| u32::from_str_radix(s, 16).ok())
                        .ok_or_else(|| err("expected hexadecimal mask"))?;
                    let parity = match parts.next() {
                        Some("0") => false,
                        Some("1") => true,
                        _ => return Err(err("expected parity bit 0 or 1")),
                    };
                    if mask >= (1u32 << w) {
                        return Err(err("mask exceeds proof width"));
                    }
                    checks.push(ParityCheck {
                        kind: if head == "X" { PauliKind::X } else { PauliKind::Z },
                        support: Bits::new(mask, w),
                        parity,
                    });
                }
                _ => return Err(err("unrecognized directive")),
            }
        }
        let width = width.ok_or_else(|| {
            DelegateError::MalformedInstance("missing width header".to_string())
        })?;
        StabilizerCheckInstance::new("file-instance", width, checks)
    }
}

impl PostHocInstance for StabilizerCheckInstance {
    fn label(&self) -> &str {
        &self.label
    }

    fn proof_width(&self) -> usize {
        self.proof_width
    }

    fn witness_copies(&self) -> usize {
        self.witness_copies
    }

    fn honest_proof(&self) -> Result<PureState> {
        let p = self.joint_projector();
        let dim = p.nrows();
        // any nonzero column of the projector lies in the satisfying subspace
        let col = (0..dim)
            .max_by(|&a, &b| {
                let na: f64 = (0..dim).map(|r| p[(r, a)].norm_sqr()).sum();
                let nb: f64 = (0..dim).map(|r| p[(r, b)].norm_sqr()).sum();
                na.partial_cmp(&nb).unwrap()
            })
            .unwrap();
        let norm: f64 = (0..dim).map(|r| p[(r, col)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return Err(DelegateError::NoInstance);
        }
        let amps: Vec<Complex64> = (0..dim).map(|r| p[(r, col)] / norm).collect();
        Ok(PureState::from_amplitudes(
            RegisterLayout::new([("pi", self.proof_width)])?,
            amps,
        )?)
    }

    fn verify(&self, h: &Bits, m: &Bits) -> bool {
        assert_eq!(h.len(), self.proof_width);
        assert_eq!(m.len(), self.proof_width);
        for c in &self.checks {
            let evaluated = match c.kind {
                PauliKind::Z => c.support.iter().zip(h.iter()).all(|(s, hb)| !s || !hb),
                PauliKind::X => c.support.iter().zip(h.iter()).all(|(s, hb)| !s || hb),
            };
            if evaluated && m.and(&c.support).parity() != c.parity {
                return false;
            }
        }
        true
    }
}

/// Honest proof generation (the instance's generator).
pub fn fhm_prove(inst: &dyn PostHocInstance) -> Result<PureState> {
    inst.honest_proof()
}

/// The classical acceptance predicate on measured outcomes.
pub fn fhm_verify(inst: &dyn PostHocInstance, h: &Bits, m: &Bits) -> Verdict {
    if inst.verify(h, m) {
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

// ----------------------------------------------------------------------
// PRF-derived bases
// ----------------------------------------------------------------------

/// The basis circuit C(i) = low bit of PRF(seed, i), over 16-bit indices.
pub fn basis_from_prf(seed: [u8; 32], proof_width: u32) -> BasisSpec {
    BasisSpec::from_prf_seed(PprfSeed::new(seed, 16), 0, proof_width)
}

// ----------------------------------------------------------------------
// the verifier-succinct delegation session
// ----------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DelegateConfig {
    pub ell: usize,
    pub backend: Backend,
    pub good_policy: GoodPolicy,
}

impl Default for DelegateConfig {
    fn default() -> Self {
        DelegateConfig { ell: 1, backend: Backend::Compressed, good_policy: GoodPolicy::All }
    }
}

impl DelegateConfig {
    pub fn trivial() -> Self {
        DelegateConfig { backend: Backend::Trivial, ..Default::default() }
    }

    fn protocol_params(&self, proof_width: u32) -> ProtocolParams {
        ProtocolParams {
            n: proof_width,
            ell: self.ell,
            backend: self.backend,
            good_policy: self.good_policy,
        }
    }
}

fn fork_seed(coins: &[u8; 32], tag: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(coins);
    h.update(tag);
    h.finalize().into()
}

/// The verifier side of one repetition, fully derived from a 32-byte coin
/// string: the PRF basis, the key pair, the challenge bit, and the fallback
/// coins of the output rule.
pub struct SemiVerifier {
    pub params: ProtocolParams,
    pub basis: BasisSpec,
    pub pk: MasterPublicKey,
    pub sk: MasterSecretKey,
    challenge: bool,
    out_seed: [u8; 32],
}

impl SemiVerifier {
    pub fn from_coins(
        inst: &dyn PostHocInstance,
        cfg: &DelegateConfig,
        coins: &[u8; 32],
    ) -> Result<SemiVerifier> {
        let proof_width = inst.proof_width() as u32;
        let params = cfg.protocol_params(proof_width);
        let basis = basis_from_prf(fork_seed(coins, b"basis"), proof_width);
        let mut key_rng = ChaCha20Rng::from_seed(fork_seed(coins, b"keys"));
        let (pk, sk) = mproto::mp_gen(&params, &basis, &mut key_rng)?;
        let challenge = fork_seed(coins, b"challenge")[0] & 1 == 1;
        Ok(SemiVerifier {
            params,
            basis,
            pk,
            sk,
            challenge,
            out_seed: fork_seed(coins, b"out"),
        })
    }

    /// First verifier message: the public key, framed.
    pub fn first_message(&self) -> Vec<u8> {
        Frame::new(tag::PK, self.pk.to_bytes()).encode()
    }

    /// Second verifier message: the challenge bit, framed.
    pub fn second_message(&self) -> Vec<u8> {
        Frame::new(tag::CHALLENGE, vec![self.challenge as u8]).encode()
    }

    pub fn challenge(&self) -> bool {
        self.challenge
    }

    /// Final decision on the prover's framed messages with the verifier's
    /// own challenge. Used as the relation predicate V(x, y, z, r).
    pub fn decide(&self, inst: &dyn PostHocInstance, y_bytes: &[u8], z_bytes: &[u8]) -> bool {
        self.decide_with_challenge(inst, self.challenge, y_bytes, z_bytes)
    }

    /// As [`SemiVerifier::decide`] with an externally supplied public-coin
    /// challenge (the hash-chain transform derives it from the transcript).
    pub fn decide_with_challenge(
        &self,
        inst: &dyn PostHocInstance,
        challenge: bool,
        y_bytes: &[u8],
        z_bytes: &[u8],
    ) -> bool {
        let n = self.params.n as usize;
        let slot_w = self.params.slot_width();
        let parse = || -> wire::Result<(CommitMessage, Opening)> {
            let (yf, rest) = Frame::decode_expect(y_bytes, tag::COMMITMENT)?;
            if !rest.is_empty() {
                return Err(wire::WireError::TrailingBytes);
            }
            let (zf, rest) = Frame::decode_expect(z_bytes, tag::OPENING)?;
            if !rest.is_empty() {
                return Err(wire::WireError::TrailingBytes);
            }
            Ok((
                CommitMessage::from_frame(&yf, n, slot_w)?,
                Opening::from_frame(&zf, n, slot_w)?,
            ))
        };
        let (y, z) = match parse() {
            Ok(v) => v,
            Err(_) => return false,
        };
        self.decide_parsed_with_challenge(inst, challenge, &y, &z)
    }

    pub fn decide_parsed(
        &self,
        inst: &dyn PostHocInstance,
        y: &CommitMessage,
        z: &Opening,
    ) -> bool {
        self.decide_parsed_with_challenge(inst, self.challenge, y, z)
    }

    pub fn decide_parsed_with_challenge(
        &self,
        inst: &dyn PostHocInstance,
        challenge: bool,
        y: &CommitMessage,
        z: &Opening,
    ) -> bool {
        let mut out_rng = ChaCha20Rng::from_seed(self.out_seed);
        let result = mproto::evaluate_opening(
            &self.params,
            &self.basis,
            &self.pk,
            &self.sk,
            y,
            challenge,
            z,
            &mut out_rng,
        );
        match result {
            SessionResult::Tested(v) => v == Verdict::Accept,
            SessionResult::Measured(m) => {
                let h = self.basis.to_bits().expect("proof width fits");
                inst.verify(&h, &m)
            }
        }
    }
}

/// Prover behaviors for delegation experiments.
pub enum DelegateProver {
    /// Commits the instance's honest proof and opens by measuring.
    Honest,
    /// Commits the given state instead of the honest proof.
    WrongState(PureState),
    /// Commits an all-zeros state honestly but garbles the measurement-round
    /// opening, so only test rounds can accept.
    TestOnly,
}

impl DelegateProver {
    fn committed_state(&self, inst: &dyn PostHocInstance) -> Result<PureState> {
        match self {
            DelegateProver::Honest => inst.honest_proof(),
            DelegateProver::WrongState(s) => Ok(s.clone()),
            DelegateProver::TestOnly => Ok(PureState::alloc(RegisterLayout::new([(
                "pi",
                inst.proof_width(),
            )])?)),
        }
    }
}

/// One repetition of the verifier-succinct protocol. Returns the verdict and
/// the total verifier message size in bytes.
pub fn semi_succinct_run<R: Rng>(
    inst: &dyn PostHocInstance,
    prover: &DelegateProver,
    cfg: &DelegateConfig,
    coins: &[u8; 32],
    rng: &mut R,
) -> Result<(bool, usize)> {
    let verifier = SemiVerifier::from_coins(inst, cfg, coins)?;
    let verifier_bytes = verifier.first_message().len() + verifier.second_message().len();

    let sigma = prover.committed_state(inst)?;
    let (y, mut post) = mproto::mp_commit(&verifier.pk, &sigma, rng)?;
    let c = verifier.challenge();
    let z = match (prover, c) {
        (DelegateProver::TestOnly, true) => {
            // garbage response: wrong slot count
            Opening::Measure(vec![])
        }
        _ => mproto::mp_open(&mut post, c, rng)?,
    };
    Ok((verifier.decide_parsed(inst, &y, &z), verifier_bytes))
}

/// k-fold parallel repetition with per-slot provers: accept iff every

/// repetition accepts. Coins for repetition t are forked from `rng`.
pub fn parallel_repeat<R: Rng>(
    k: usize,
    inst: &dyn PostHocInstance,
    provers: &[DelegateProver],
    cfg: &DelegateConfig,
    rng: &mut R,
) -> Result<bool> {
    assert_eq!(provers.len(), k, "one prover per repetition");
    for prover in provers {
        let mut coins = [0u8; 32];
        rng.fill(&mut coins);
        let (accept, _) = semi_succinct_run(inst, prover, cfg, &coins, rng)?;
        if !accept {
            return Ok(false);
        }
    }
    Ok(true)
}

// ----------------------------------------------------------------------
// orthogonality score
// ----------------------------------------------------------------------

/// A commit-challenge-response cheater over a declared finite coin set: a
/// per-coin post-commit state, one response unitary per challenge, a public
/// (coin-independent) test predicate V₀ and a per-coin predicate V₁, both
/// as projectors.
pub struct CheatingProverModel {
    pub states: Vec<PureState>,
    pub u0: CMat,
    pub u1: CMat,
    pub v0: CMat,
    pub v1: Vec<CMat>,
}

/// E_r ⟨ψ_r| Π₀ Π₁ Π₀ |ψ_r⟩ with Π_b = U_b† V_{b,r} U_b, exhaustively over
/// the declared coins.
pub fn orthogonality_score(model: &CheatingProverModel) -> Result<f64> {
    if model.states.is_empty() || model.states.len() > 256 {
        return Err(DelegateError::MalformedModel("coin set must have 1..=256 entries"));
    }
    if model.v1.len() != model.states.len() {
        return Err(DelegateError::MalformedModel("one V1 projector per coin"));
    }
    if !qsim::is_projector(&model.v0, crate::tol::OPERATOR) {
        return Err(DelegateError::MalformedModel("V0 is not a projector"));
    }
    for v in &model.v1 {
        if !qsim::is_projector(v, crate::tol::OPERATOR) {
            return Err(DelegateError::MalformedModel("V1 is not a projector"));
        }
    }
    if !qsim::is_unitary(&model.u0, crate::tol::OPERATOR)
        || !qsim::is_unitary(&model.u1, crate::tol::OPERATOR)
    {
        return Err(DelegateError::MalformedModel("response maps must be unitary"));
    }
    let pi0 = model.u0.adjoint() * &model.v0 * &model.u0;
    let mut total = 0.0;
    for (psi, v1) in model.states.iter().zip(&model.v1) {
        let pi1 = model.u1.adjoint() * v1 * &model.u1;
        let amps = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let w = &pi0 * (&pi1 * (&pi0 * &amps));
        total += amps.dotc(&w).re;
    }
    Ok(total / model.states.len() as f64)
}

// ----------------------------------------------------------------------
// batch verification
// ----------------------------------------------------------------------

/// Verify n instances against one key generation: a shared uniformly random
/// basis, per-instance commitments and openings, one challenge bit, and a
/// conjunctive verdict. Returns (verdict, verifier message bytes).
pub fn batch_run<R: Rng>(
    instances: &[StabilizerCheckInstance],
    provers: &[DelegateProver],
    cfg: &DelegateConfig,
    rng: &mut R,
) -> Result<(bool, usize)> {
    assert!(!instances.is_empty());
    assert_eq!(provers.len(), instances.len());
    let width = instances[0].proof_width();
    if instances.iter().any(|i| i.proof_width() != width) {
        return Err(DelegateError::MixedProofWidths);
    }
    let params = cfg.protocol_params(width as u32);
    // uniform basis, shared across instances
    let h = Bits::new(rng.gen_range(0..(1u32 << width)), width);
    let basis = BasisSpec::from_bits(&h);
    let (pk, sk) = mproto::mp_gen(&params, &basis, rng)?;
    let verifier_bytes = Frame::new(tag::PK, pk.to_bytes()).encode().len()
        + Frame::new(tag::CHALLENGE, vec![0]).encode().len();

    let mut commits = Vec::new();
    for (inst, prover) in instances.iter().zip(provers) {
        let sigma = prover.committed_state(inst)?;
        let (y, post) = mproto::mp_commit(&pk, &sigma, rng)?;
        commits.push((y, post));
    }
    let c: bool = rng.gen();
    let mut all_accept = true;
    for ((inst, prover), (y, mut post)) in
        instances.iter().zip(provers).zip(commits.into_iter())
    {
        let z = match (prover, c) {
            (DelegateProver::TestOnly, true) => Opening::Measure(vec![]),
            _ => mproto::mp_open(&mut post, c, rng)?,
        };
        let result =
            mproto::evaluate_opening(&params, &basis, &pk, &sk, &y, c, &z, rng);
        let accept = match result {
            SessionResult::Tested(v) => v == Verdict::Accept,
            SessionResult::Measured(m) => inst.verify(&h, &m),
        };
        all_accept &= accept;
    }
    Ok((all_accept, verifier_bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::hadamard;

    fn check(kind: PauliKind, mask: &str, parity: bool) -> ParityCheck {
        ParityCheck { kind, support: Bits::parse(mask), parity }
    }

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    /// Z-check parity 0 on qubit 0 and X-check parity 0 on qubit 1: |0⟩⊗|+⟩.
    fn product_instance() -> StabilizerCheckInstance {
        StabilizerCheckInstance::new(
            "zero-plus",
            2,
            vec![check(PauliKind::Z, "10", false), check(PauliKind::X, "01", false)],
        )
        .unwrap()
    }

    /// Bell-pair instance: σz⊗σz = +1 and σx⊗σx = +1.
    fn bell_instance() -> StabilizerCheckInstance {
        StabilizerCheckInstance::new(
            "bell",
            2,
            vec![check(PauliKind::Z, "11", false), check(PauliKind::X, "11", false)],
        )
        .unwrap()
    }

    #[test]
    fn single_qubit_checks_accept_and_reject() {
        // Z-check parity 0 on qubit 0, state |0⟩: accept for all h
        let inst = StabilizerCheckInstance::new(
            "zero",
            1,
            vec![check(PauliKind::Z, "1", false)],
        )
        .unwrap();
        let proof = fhm_prove(&inst).unwrap();
        assert!((proof.amplitudes()[0].norm() - 1.0).abs() < 1e-9);
        for h in Bits::all(1) {
            let d = proof.measure_bases("pi", &h).unwrap();
            for (m, p) in d.support() {
                assert!(p > 0.0);
                assert_eq!(fhm_verify(&inst, &h, &m), Verdict::Accept);
            }
        }

        // X-check on |+⟩ at h=1: accept
        let inst_x = StabilizerCheckInstance::new(
            "plus",
            1,
            vec![check(PauliKind::X, "1", false)],
        )
        .unwrap();
        let proof = fhm_prove(&inst_x).unwrap();
        let mut expect_plus = PureState::alloc(RegisterLayout::new([("pi", 1)]).unwrap());
        expect_plus.apply_unitary(&hadamard(), "pi").unwrap();
        assert!(proof.max_deviation_up_to_phase(&expect_plus) < 1e-9);
        assert_eq!(fhm_verify(&inst_x, &Bits::parse("1"), &Bits::parse("0")), Verdict::Accept);

        // proof |1⟩ against the Z-parity-0 check at h=0: reject
        assert_eq!(fhm_verify(&inst, &Bits::parse("0"), &Bits::parse("1")), Verdict::Reject);
    }

    #[test]
    fn non_commuting_checks_are_rejected() {
        let err = StabilizerCheckInstance::new(
            "bad",
            1,
            vec![check(PauliKind::Z, "1", false), check(PauliKind::X, "1", false)],
        );
        assert!(matches!(err, Err(DelegateError::NonCommutingChecks)));
    }

    #[test]
    fn honest_proofs_satisfy_all_checks_for_every_basis() {
        for inst in [product_instance(), bell_instance()] {
            assert!(inst.is_yes_instance());
            let proof = fhm_prove(&inst).unwrap();
            for h in Bits::all(2) {
                let d = proof.measure_bases("pi", &h).unwrap();
                for (m, _) in d.support() {
                    assert_eq!(fhm_verify(&inst, &h, &m), Verdict::Accept, "h={h} m={m}");
                }
            }
        }
    }

    #[test]
    fn instance_text_roundtrip() {
        let inst = bell_instance();
        let text = inst.to_text();
        let back = StabilizerCheckInstance::from_text(&text).unwrap();
        assert_eq!(back.proof_width(), 2);
        assert_eq!(back.checks(), inst.checks());
        assert!(StabilizerCheckInstance::from_text("Z 1 0\n").is_err());
        assert!(StabilizerCheckInstance::from_text("width 2\nQ 1 0\n").is_err());
    }

    #[test]
    fn prf_basis_is_deterministic_and_balanced() {
        let b1 = basis_from_prf([5u8; 32], 1024);
        let b2 = basis_from_prf([5u8; 32], 1024);
        let mut ones = 0usize;
        let mut differs = 0usize;
        let b3 = basis_from_prf([6u8; 32], 1024);
        for i in 0..1024u32 {
            let v = b1.eval(i).unwrap();
            assert_eq!(v, b2.eval(i).unwrap());
            ones += v as usize;
            differs += (v != b3.eval(i).unwrap()) as usize;
        }
        let frac = ones as f64 / 1024.0;
        assert!((frac - 0.5).abs() < 0.05, "bit balance {frac}");
        assert!(differs >= 1, "different seeds must disagree somewhere");
    }

    #[test]
    fn honest_runs_always_accept() {
        let inst = product_instance();
        let cfg = DelegateConfig::default();
        let mut r = rng(1);
        for _ in 0..200 {
            let mut coins = [0u8; 32];
            r.fill(&mut coins);
            let (accept, _) =
                semi_succinct_run(&inst, &DelegateProver::Honest, &cfg, &coins, &mut r).unwrap();
            assert!(accept);
        }
    }

    #[test]
    fn test_only_cheater_accepts_on_half_the_challenges() {
        let inst = product_instance();
        let cfg = DelegateConfig::default();
        let mut r = rng(2);
        let trials = 10_000usize;
        let mut accepts = 0usize;
        for _ in 0..trials {
            let mut coins = [0u8; 32];
            r.fill(&mut coins);
            let (accept, _) =
                semi_succinct_run(&inst, &DelegateProver::TestOnly, &cfg, &coins, &mut r)
                    .unwrap();
            accepts += accept as usize;
        }
        let freq = accepts as f64 / trials as f64;
        let bound = 4.0 * (0.25f64 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() < bound, "test-only acceptance {freq}");
    }

    #[test]
    fn wrong_state_prover_passes_tests_but_fails_measurements() {
        // |1⟩⊗|−⟩ violates both checks of the product instance, so test
        // rounds accept while measurement rounds reject whenever a check is
        // evaluated under the sampled basis
        let inst = product_instance();
        let cfg = DelegateConfig::default();
        let wrong = {
            let mut s = PureState::alloc(RegisterLayout::new([("w", 2)]).unwrap());
            s.x(0);
            s.x(1);
            s.h(1);
            s
        };
        let prover = DelegateProver::WrongState(wrong);
        let mut r = rng(31);
        let mut test_rounds = 0usize;
        let mut measurement_rejections = 0usize;
        let mut measurement_rounds = 0usize;
        for _ in 0..400 {
            let mut coins = [0u8; 32];
            r.fill(&mut coins);
            let verifier = SemiVerifier::from_coins(&inst, &cfg, &coins).unwrap();
            let (accept, _) = semi_succinct_run(&inst, &prover, &cfg, &coins, &mut r).unwrap();
            if verifier.challenge() {
                measurement_rounds += 1;
                measurement_rejections += !accept as usize;
            } else {
                test_rounds += 1;
                assert!(accept, "test round must accept a well-formed commitment");
            }
        }
        assert!(test_rounds > 0 && measurement_rounds > 0);
        assert!(
            measurement_rejections > 0,
            "a check-violating state must be caught on some measurement round"
        );
    }

    #[test]
    fn parallel_repetition_of_honest_prover_accepts() {
        let inst = bell_instance();
        let cfg = DelegateConfig::default();
        let mut r = rng(3);
        for _ in 0..20 {
            let provers: Vec<DelegateProver> =
                (0..5).map(|_| DelegateProver::Honest).collect();
            assert!(parallel_repeat(5, &inst, &provers, &cfg, &mut r).unwrap());
        }
    }

    #[test]
    fn orthogonality_score_closed_forms() {
        let zero = PureState::alloc(RegisterLayout::new([("q", 1)]).unwrap());
        let proj_zero = {
            let mut m = CMat::zeros(2, 2);
            m[(0, 0)] = Complex64::new(1.0, 0.0);
            m
        };
        // Π0 = Π1 = Id: score 1
        let model = CheatingProverModel {
            states: vec![zero.clone()],
            u0: identity(2),
            u1: identity(2),
            v0: identity(2),
            v1: vec![identity(2)],
        };
        assert!((orthogonality_score(&model).unwrap() - 1.0).abs() < crate::tol::CLOSED_FORM);

        // orthogonal projectors: score 0
        let proj_one = identity(2) - &proj_zero;
        let model = CheatingProverModel {
            states: vec![zero.clone()],
            u0: identity(2),
            u1: identity(2),
            v0: proj_zero.clone(),
            v1: vec![proj_one],
        };
        assert!(orthogonality_score(&model).unwrap().abs() < crate::tol::CLOSED_FORM);

        // Π0 = |+⟩⟨+| (via U0 = H, V0 = |0⟩⟨0|), Π1 = |0⟩⟨0|, ψ = |0⟩: 1/4
        let model = CheatingProverModel {
            states: vec![zero],
            u0: hadamard(),
            u1: identity(2),
            v0: proj_zero.clone(),
            v1: vec![proj_zero],
        };
        assert!((orthogonality_score(&model).unwrap() - 0.25).abs() < crate::tol::CLOSED_FORM);
    }

    #[test]
    fn orthogonality_score_stays_in_range() {
        // random models over a few coins: the score is a probability
        let mut r = rng(21);
        for _ in 0..10 {
            let dim = 4usize;
            let coins = 3usize;
            let states: Vec<PureState> = (0..coins)
                .map(|_| {
                    PureState::from_amplitudes(
                        RegisterLayout::new([("q", 2)]).unwrap(),
                        qsim::random_state_vector(dim, &mut r),
                    )
                    .unwrap()
                })
                .collect();
            let rand_proj = |r: &mut ChaCha20Rng| {
                let u = qsim::random_unitary(dim, r);
                let mut d = CMat::zeros(dim, dim);
                d[(0, 0)] = Complex64::new(1.0, 0.0);
                d[(1, 1)] = Complex64::new(1.0, 0.0);
                u.adjoint() * d * u
            };
            let model = CheatingProverModel {
                states,
                u0: qsim::random_unitary(dim, &mut r),
                u1: qsim::random_unitary(dim, &mut r),
                v0: rand_proj(&mut r),
                v1: (0..coins).map(|_| rand_proj(&mut r)).collect(),
            };
            let score = orthogonality_score(&model).unwrap();
            assert!(
                (-crate::tol::EXACT..=1.0 + crate::tol::EXACT).contains(&score),
                "score {score} out of range"
            );
        }
    }

    #[test]
    fn orthogonality_score_rejects_non_projectors() {
        let zero = PureState::alloc(RegisterLayout::new([("q", 1)]).unwrap());
        let model = CheatingProverModel {
            states: vec![zero],
            u0: identity(2),
            u1: identity(2),
            v0: identity(2) * Complex64::new(0.5, 0.0),
            v1: vec![identity(2)],
        };
        assert!(matches!(
            orthogonality_score(&model),
            Err(DelegateError::MalformedModel(_))
        ));
    }

    #[test]
    fn batch_of_honest_instances_accepts() {
        let instances = vec![product_instance(), bell_instance()];
        let provers = vec![DelegateProver::Honest, DelegateProver::Honest];
        let cfg = DelegateConfig::default();
        let mut r = rng(4);
        for _ in 0..50 {
            let (accept, _) = batch_run(&instances, &provers, &cfg, &mut r).unwrap();
            assert!(accept);
        }
    }

    #[test]
    fn batch_with_one_cheater_caps_acceptance() {
        let instances = vec![product_instance(), product_instance()];
        let provers = vec![DelegateProver::Honest, DelegateProver::TestOnly];
        let cfg = DelegateConfig::default();
        let mut r = rng(5);
        let trials = 4000usize;
        let accepts: usize = (0..trials)
            .map(|_| batch_run(&instances, &provers, &cfg, &mut r).unwrap().0 as usize)
            .sum();
        let freq = accepts as f64 / trials as f64;
        let bound = 4.0 * (0.25f64 / trials as f64).sqrt();
        assert!(freq <= 0.5 + bound, "cheating batch acceptance {freq}");
    }

    #[test]
    fn compressed_verifier_messages_are_size_invariant() {
        let cfg = DelegateConfig::default();
        let mut sizes = Vec::new();
        for width in [4usize, 8, 16] {
            let checks =
                vec![ParityCheck { kind: PauliKind::Z, support: Bits::new(1, width), parity: false }];
            let inst = StabilizerCheckInstance::new("size-probe", width, checks);
            // proof widths above 4 are rejected by the toy generator; build
            // the verifier directly from a synthetic instance width instead
            let inst = match inst {
                Ok(i) => i,
                Err(_) => {
                    sizes.push(compressed_pk_bytes(width as u32, &cfg));
                    continue;
                }
            };
            let v = SemiVerifier::from_coins(&inst, &cfg, &[7u8; 32]).unwrap();
            sizes.push(v.first_message().len());
        }
        assert!(sizes.windows(2).all(|w| w[0] == w[1]), "sizes {sizes:?}");

        // the trivial backend grows linearly in the proof width
        let mut trivial_sizes = Vec::new();
        for width in [4u32, 8, 16] {
            trivial_sizes.push(trivial_pk_bytes(width));
        }
        assert!(trivial_sizes.windows(2).all(|w| w[0] < w[1]), "sizes {trivial_sizes:?}");
    }

    fn compressed_pk_bytes(width: u32, cfg: &DelegateConfig) -> usize {
        let basis = basis_from_prf([9u8; 32], width);
        let (pk, _) =
            batchkeys::setup_with_seed(cfg.ell, width, &basis, [1u8; 32]).unwrap();
        Frame::new(tag::PK, pk.to_bytes()).encode().len()
    }

    fn trivial_pk_bytes(width: u32) -> usize {
        let basis = basis_from_prf([9u8; 32], width);
        let mut r = rng(9);
        let (pk, _) = batchkeys::setup(1, width, &basis, Backend::Trivial, &mut r).unwrap();
        Frame::new(tag::PK, pk.to_bytes()).encode().len()
    }
}
