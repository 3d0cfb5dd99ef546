//! The N-qubit commit-and-measure protocol.
//!
//! Four messages: the verifier sends a batched public key, the prover
//! commits to image points y, the verifier sends a challenge bit, and the
//! prover opens either in the standard basis (test round, c = 0) or the
//! Hadamard basis (measurement round, c = 1). The verifier then either
//! checks preimages or decodes measurement outcomes from the equations d.
//!
//! Register convention for the prover state: slot i occupies an (ℓ+1)-qubit
//! register `z{i}` whose qubit 0 is the committed bit b_i and whose
//! remaining ℓ qubits hold x_i; commitment registers `y{i}` follow, then an
//! optional private register `i`.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::batchkeys::{self, Backend, BasisSpec, MasterPublicKey, MasterSecretKey};
use crate::bits::Bits;
use crate::qsim::{self, PureState, RegisterLayout};
use crate::rtcf::{self, DomainPoint, Preimages};
use crate::wire::{self, tag, Frame};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("params violate the qubit budget: {0} qubits needed")]
    QubitBudget(usize),
    #[error("input state has {got} qubits, protocol expects {want}")]
    StateWidth { got: usize, want: usize },
    #[error("opening variant does not match the challenge")]
    VariantMismatch,
    #[error("opening has {got} slots, expected {want}")]
    SlotCount { got: usize, want: usize },
    #[error("commitment is outside the image of the committed function")]
    MalformedCommitment,
    #[error(transparent)]
    Sim(#[from] qsim::SimError),
    #[error(transparent)]
    Keys(#[from] batchkeys::BatchKeyError),
    #[error(transparent)]
    Rtcf(#[from] rtcf::RtcfError),
    #[error(transparent)]
    Wire(#[from] wire::WireError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// Which equation vectors the verifier accepts in the measurement round.
/// The toy claw-free backend accepts everything; `RejectAll` is a test hook
/// that forces the uniform-fallback path of the output rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GoodPolicy {
    #[default]
    All,
    RejectAll,
}

impl GoodPolicy {
    pub fn is_good(&self, x0: &Bits, x1: &Bits, d: &Bits) -> bool {
        match self {
            GoodPolicy::All => rtcf::good(x0, x1, d),
            GoodPolicy::RejectAll => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolParams {
    pub n: u32,
    pub ell: usize,
    pub backend: Backend,
    pub good_policy: GoodPolicy,
}

impl ProtocolParams {
    pub fn new(n: u32, ell: usize) -> ProtocolParams {
        ProtocolParams { n, ell, backend: Backend::Trivial, good_policy: GoodPolicy::All }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_good_policy(mut self, policy: GoodPolicy) -> Self {
        self.good_policy = policy;
        self
    }

    pub fn slot_width(&self) -> usize {
        self.ell + 1
    }

    /// Commit-phase simulation uses z and y registers of ℓ+1 qubits per slot
    /// plus any private workspace.
    pub fn check_commit_budget(&self, i_width: usize) -> Result<()> {
        let need = self.n as usize * self.slot_width() * 2 + i_width;
        if need > qsim::MAX_QUBITS {
            return Err(ProtocolError::QubitBudget(need));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitMessage {
    pub ys: Vec<Bits>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Opening {
    /// Standard-basis openings (b_i, x_i) for the test round.
    Test(Vec<DomainPoint>),
    /// Hadamard-basis equation vectors d_i for the measurement round.
    Measure(Vec<Bits>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

/// Verifier output of one session: a test verdict or N measured bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionResult {
    Tested(Verdict),
    Measured(Bits),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub pk_digest: [u8; 32],
    pub y: CommitMessage,
    pub c: bool,
    pub z: Opening,
    pub result: SessionResult,
}

// ----------------------------------------------------------------------
// verifier algorithms
// ----------------------------------------------------------------------

/// Sample the batched key pair for basis circuit C.
pub fn mp_gen<R: Rng>(
    params: &ProtocolParams,
    basis: &BasisSpec,
    rng: &mut R,
) -> Result<(MasterPublicKey, MasterSecretKey)> {
    Ok(batchkeys::setup(params.ell, params.n, basis, params.backend, rng)?)
}

/// Test-round check: every slot's (b, x) must be a valid preimage of y.
pub fn mp_test(pk: &MasterPublicKey, y: &CommitMessage, z: &Opening) -> Result<Verdict> {
    let points = match z {
        Opening::Test(p) => p,
        Opening::Measure(_) => return Err(ProtocolError::VariantMismatch),
    };
    if points.len() != y.ys.len() || y.ys.len() != pk.slots() as usize {
        return Err(ProtocolError::SlotCount { got: points.len(), want: pk.slots() as usize });
    }
    for (i, (point, yi)) in points.iter().zip(&y.ys).enumerate() {
        let pki = batchkeys::ext_pk(pk, i as u32)?;
        if point.x.len() != pki.ell() || !rtcf::check(&pki, point.b, &point.x, yi) {
            return Ok(Verdict::Reject);
        }
    }
    Ok(Verdict::Accept)
}

/// Measurement-round output rule. Slot i with basis bit 0 ignores d_i and
/// inverts y_i; basis bit 1 decodes the equation bit d·(1, x₀⊕x₁) when d is
/// accepted by the good policy, and otherwise outputs a fresh coin.
pub fn mp_out<R: Rng + ?Sized>(
    sk: &MasterSecretKey,
    y: &CommitMessage,
    z: &Opening,
    basis: &BasisSpec,
    policy: GoodPolicy,
    rng: &mut R,
) -> Result<Bits> {
    let ds = match z {
        Opening::Measure(d) => d,
        Opening::Test(_) => return Err(ProtocolError::VariantMismatch),
    };
    let n = basis.slots();
    if ds.len() != n as usize || y.ys.len() != n as usize {
        return Err(ProtocolError::SlotCount { got: ds.len(), want: n as usize });
    }
    let mut m = Bits::zeros(n as usize);
    for i in 0..n {
        let ski = batchkeys::ext_sk(sk, i)?;
        let pre = rtcf::invert(&ski, &y.ys[i as usize])?
            .ok_or(ProtocolError::MalformedCommitment)?;
        let bit = match (basis.eval(i)?, pre) {
            (false, Preimages::Injective(p)) => p.b,
            (true, Preimages::Claw { x0, x1 }) => {
                let d = &ds[i as usize];
                if d.len() != ski.ell() + 1 {
                    return Err(ProtocolError::SlotCount {
                        got: d.len(),
                        want: ski.ell() + 1,
                    });
                }
                if policy.is_good(&x0, &x1, d) {
                    rtcf::hardcore_bit(&x0, &x1, d)?
                } else {
                    rng.gen()
                }
            }
            // key mode disagrees with the basis bit: setup correctness rules
            // this out for honestly generated keys
            _ => return Err(ProtocolError::MalformedCommitment),
        };
        m = m.with_bit(i as usize, bit);
    }
    Ok(m)
}

// ----------------------------------------------------------------------
// honest prover
// ----------------------------------------------------------------------

/// Build the pre-measurement commit state for input `sigma` (N qubits):
/// registers z0..z(N-1), then y0..y(N-1), then `i` when `i_width > 0`.
/// Each slot holds Σ_x |w_i, x⟩|f(w_i, x)⟩ / √(2^ℓ) entangled with σ.
pub fn commit_state(
    pks: &[rtcf::RtcfPublicKey],
    sigma: &PureState,
    i_width: usize,
) -> Result<PureState> {
    let n = pks.len();
    if sigma.total_width() != n {
        return Err(ProtocolError::StateWidth { got: sigma.total_width(), want: n });
    }
    let ell = pks[0].ell();
    let slot_w = ell + 1;
    let mut regs: Vec<(String, usize)> = (0..n).map(|i| (format!("z{i}"), slot_w)).collect();
    regs.extend((0..n).map(|i| (format!("y{i}"), slot_w)));
    if i_width > 0 {
        regs.push(("i".to_string(), i_width));
    }
    let layout = RegisterLayout::new(regs)?;
    let mut state = PureState::alloc(layout);

    // scatter σ onto the b-qubits of the z registers
    let b_qubit = |i: usize| i * slot_w;
    {
        let amps = state.amplitudes_mut();
        amps[0] = num_complex::Complex64::new(0.0, 0.0);
        for (w, a) in sigma.amplitudes().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut idx = 0usize;
            for i in 0..n {
                if (w >> i) & 1 == 1 {
                    idx |= 1 << b_qubit(i);
                }
            }
            amps[idx] = *a;
        }
    }

    // uniform superposition over each x register, then evaluate f into y
    for (i, pk) in pks.iter().enumerate() {
        for q in 0..ell {
            state.h(b_qubit(i) + 1 + q);
        }
        let inputs: Vec<usize> = (0..slot_w).map(|q| b_qubit(i) + q).collect();
        let y_offset = n * slot_w + i * slot_w;
        let outputs: Vec<usize> = (0..slot_w).map(|q| y_offset + q).collect();
        state.apply_classical_xor(&inputs, &outputs, |bx| {
            let p = DomainPoint::decode(&bx);
            rtcf::eval(pk, p.b, &p.x).expect("domain point width fixed by register")
        });
    }
    Ok(state)
}

/// Honest commit: prepare the range superposition, measure all y registers,
/// return the outcomes and the residual state on the z registers.
pub fn mp_commit<R: Rng + ?Sized>(
    pk: &MasterPublicKey,
    sigma: &PureState,
    rng: &mut R,
) -> Result<(CommitMessage, PureState)> {
    let n = pk.slots() as usize;
    let pks: Vec<rtcf::RtcfPublicKey> =
        (0..n).map(|i| batchkeys::ext_pk(pk, i as u32)).collect::<batchkeys::Result<_>>()?;
    let mut state = commit_state(&pks, sigma, 0)?;
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let reg = format!("y{i}");
        let qubits = state.layout().qubits_of(&reg)?;
        let y = state.marginal_distribution(&qubits).sample(rng);
        let (_, reduced) = state.project_out(&reg, &y)?;
        state = reduced;
        ys.push(y);
    }
    Ok((CommitMessage { ys }, state))
}

/// Honest opening: standard-basis samples of every slot for c = 0,
/// Hadamard-basis samples for c = 1.
pub fn mp_open<R: Rng + ?Sized>(state: &mut PureState, c: bool, rng: &mut R) -> Result<Opening> {
    let slots: Vec<String> = state
        .layout()
        .registers()
        .iter()
        .map(|(name, _)| name.clone())
        .filter(|name| name.starts_with('z'))
        .collect();
    if c {
        let mut ds = Vec::with_capacity(slots.len());
        for reg in &slots {
            let w = state.layout().width_of(reg)?;
            let ones = Bits::new(u32::MAX, w);
            ds.push(state.sample_measure(reg, &ones, rng)?);
        }
        Ok(Opening::Measure(ds))
    } else {
        let mut points = Vec::with_capacity(slots.len());
        for reg in &slots {
            let w = state.layout().width_of(reg)?;
            let outcome = state.sample_measure(reg, &Bits::zeros(w), rng)?;
            points.push(DomainPoint::decode(&outcome));
        }
        Ok(Opening::Test(points))
    }
}

// ----------------------------------------------------------------------
// session driver
// ----------------------------------------------------------------------

/// Prover side of one session. Implementations may cheat arbitrarily at the
/// classical interface; the session driver treats malformed openings as
/// immediate rejections.
pub trait SessionProver {
    fn commit(&mut self, pk: &MasterPublicKey, rng: &mut dyn RngCore) -> Result<CommitMessage>;
    fn open(&mut self, c: bool, rng: &mut dyn RngCore) -> Result<Opening>;
}

/// The honest prover: commits its input state and opens by measuring.
pub struct HonestProver {
    sigma: PureState,
    post_commit: Option<PureState>,
}

impl HonestProver {
    pub fn new(sigma: PureState) -> HonestProver {
        HonestProver { sigma, post_commit: None }
    }
}

impl SessionProver for HonestProver {
    fn commit(&mut self, pk: &MasterPublicKey, rng: &mut dyn RngCore) -> Result<CommitMessage> {
        let (y, state) = mp_commit(pk, &self.sigma, rng)?;
        self.post_commit = Some(state);
        Ok(y)
    }

    fn open(&mut self, c: bool, rng: &mut dyn RngCore) -> Result<Opening> {
        let state = self.post_commit.as_mut().expect("open before commit");
        mp_open(state, c, rng)
    }
}

/// Run one full session with a fresh challenge coin from `rng`.
pub fn run_session<R: Rng, P: SessionProver>(
    params: &ProtocolParams,
    basis: &BasisSpec,
    prover: &mut P,
    rng: &mut R,
) -> Result<Transcript> {
    let (pk, sk) = mp_gen(params, basis, rng)?;
    run_session_with_keys(params, basis, &pk, &sk, prover, rng)
}

pub fn run_session_with_keys<R: Rng, P: SessionProver>(
    params: &ProtocolParams,
    basis: &BasisSpec,
    pk: &MasterPublicKey,
    sk: &MasterSecretKey,
    prover: &mut P,
    rng: &mut R,
) -> Result<Transcript> {
    let y = prover.commit(pk, rng)?;
    let c: bool = rng.gen();
    let z = prover.open(c, rng)?;
    let result = evaluate_opening(params, basis, pk, sk, &y, c, &z, rng);
    Ok(Transcript { pk_digest: pk.digest(), y, c, z, result })
}

/// Verifier's final step; malformed openings become rejections (test round)
/// or a rejected-measurement marker (measurement round).
pub fn evaluate_opening<R: Rng + ?Sized>(
    params: &ProtocolParams,
    basis: &BasisSpec,
    pk: &MasterPublicKey,
    sk: &MasterSecretKey,
    y: &CommitMessage,
    c: bool,
    z: &Opening,
    rng: &mut R,
) -> SessionResult {
    if c {
        match mp_out(sk, y, z, basis, params.good_policy, rng) {
            Ok(m) => SessionResult::Measured(m),
            Err(_) => SessionResult::Tested(Verdict::Reject),
        }
    } else {
        match mp_test(pk, y, z) {
            Ok(v) => SessionResult::Tested(v),
            Err(_) => SessionResult::Tested(Verdict::Reject),
        }
    }
}

/// Deterministic session: every coin (keys, challenge, opening measurements,
/// fallback bits) comes from one seeded stream.
pub fn run_seeded_session<P: SessionProver>(
    params: &ProtocolParams,
    basis: &BasisSpec,
    prover: &mut P,
    seed: u64,
) -> Result<Transcript> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    run_session(params, basis, prover, &mut rng)
}

// ----------------------------------------------------------------------
// wire encoding
// ----------------------------------------------------------------------

impl CommitMessage {
    pub fn to_frame(&self) -> Frame {
        let mut payload = Vec::new();
        for y in &self.ys {
            payload.extend_from_slice(&y.pack());
        }
        Frame::new(tag::COMMITMENT, payload)
    }

    pub fn from_frame(f: &Frame, n: usize, slot_width: usize) -> wire::Result<CommitMessage> {
        let per = slot_width.div_ceil(8);
        if f.tag != tag::COMMITMENT || f.payload.len() != n * per {
            return Err(wire::WireError::MalformedPayload);
        }
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let y = Bits::unpack(&f.payload[i * per..(i + 1) * per], slot_width)
                .ok_or(wire::WireError::MalformedPayload)?;
            ys.push(y);
        }
        Ok(CommitMessage { ys })
    }
}

impl Opening {
    pub fn to_frame(&self) -> Frame {
        let mut payload = Vec::new();
        match self {
            Opening::Test(points) => {
                payload.push(0x00);
                for p in points {
                    payload.extend_from_slice(&p.encode().pack());
                }
            }
            Opening::Measure(ds) => {
                payload.push(0x01);
                for d in ds {
                    payload.extend_from_slice(&d.pack());
                }
            }
        }
        Frame::new(tag::OPENING, payload)
    }

    pub fn from_frame(f: &Frame, n: usize, slot_width: usize) -> wire::Result<Opening> {
        if f.tag != tag::OPENING || f.payload.is_empty() {
            return Err(wire::WireError::MalformedPayload);
        }
        let per = slot_width.div_ceil(8);
        let body = &f.payload[1..];
        if body.len() != n * per {
            return Err(wire::WireError::MalformedPayload);
        }
        let mut slots = Vec::with_capacity(n);
        for i in 0..n {
            let b = Bits::unpack(&body[i * per..(i + 1) * per], slot_width)
                .ok_or(wire::WireError::MalformedPayload)?;
            slots.push(b);
        }
        match f.payload[0] {
            0x00 => Ok(Opening::Test(slots.iter().map(DomainPoint::decode).collect())),
            0x01 => Ok(Opening::Measure(slots)),
            _ => Err(wire::WireError::MalformedPayload),
        }
    }
}

impl Transcript {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut frames = vec![
            Frame::new(tag::PK, self.pk_digest.to_vec()),
            self.y.to_frame(),
            Frame::new(tag::CHALLENGE, vec![self.c as u8]),
            self.z.to_frame(),
        ];
        let result_payload = match &self.result {
            SessionResult::Tested(v) => vec![0x00, matches!(v, Verdict::Accept) as u8],
            SessionResult::Measured(m) => {
                let mut p = vec![0x01];
                p.extend_from_slice(&m.pack());
                p
            }
        };
        frames.push(Frame::new(tag::RESULT, result_payload));
        wire::encode_all(&frames)
    }

    pub fn from_bytes(bytes: &[u8], n: usize, slot_width: usize) -> wire::Result<Transcript> {
        let frames = wire::decode_all(bytes)?;
        if frames.len() != 5 {
            return Err(wire::WireError::MalformedPayload);
        }
        if frames[0].tag != tag::PK || frames[0].payload.len() != 32 {
            return Err(wire::WireError::MalformedPayload);
        }
        let mut pk_digest = [0u8; 32];
        pk_digest.copy_from_slice(&frames[0].payload);
        let y = CommitMessage::from_frame(&frames[1], n, slot_width)?;
        if frames[2].tag != tag::CHALLENGE || frames[2].payload.len() != 1 {
            return Err(wire::WireError::MalformedPayload);
        }
        let c = frames[2].payload[0] == 1;
        let z = Opening::from_frame(&frames[3], n, slot_width)?;
        let rf = &frames[4];
        if rf.tag != tag::RESULT || rf.payload.is_empty() {
            return Err(wire::WireError::MalformedPayload);
        }
        let result = match rf.payload[0] {
            0x00 if rf.payload.len() == 2 => SessionResult::Tested(if rf.payload[1] == 1 {
                Verdict::Accept
            } else {
                Verdict::Reject
            }),
            0x01 => {
                let m = Bits::unpack(&rf.payload[1..], n)
                    .ok_or(wire::WireError::MalformedPayload)?;
                SessionResult::Measured(m)
            }
            _ => return Err(wire::WireError::MalformedPayload),
        };
        Ok(Transcript { pk_digest, y, c, z, result })
    }
}
