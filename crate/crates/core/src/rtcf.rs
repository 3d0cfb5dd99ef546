//! Dual-mode randomized trapdoor claw-free functions.
//!
//! The toy backend realizes the interface exactly over tiny domains: an
//! injective key holds a permutation g' of (ℓ+1)-bit strings and evaluates
//! f(b,x) = g'(b‖x); a two-to-one key holds a permutation g of ℓ-bit strings
//! plus a nonzero shift s and evaluates f(b,x) = g(x ⊕ b·s), so the two
//! preimages of every image point form the claw (0,x₀),(1,x₀⊕s).
//!
//! The toy backend is information-theoretically INSECURE: the public key
//! determines the whole function table, including the claw structure. It
//! exists so that protocol correctness and the extraction identities can be
//! checked exactly; no hardness property holds or is claimed. The games in
//! this module run the hardcore-bit and collapsing experiments as concrete
//! procedures, which is useful for exercising protocol plumbing (and for
//! demonstrating the insecurity), not as evidence of security.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::qsim::PureState;

#[derive(Debug, Error)]
pub enum RtcfError {
    #[error("domain width {0} out of supported range 1..=4")]
    WidthOutOfRange(usize),
    #[error("domain point outside D")]
    OutsideDomain,
    #[error("bit string length {got}, expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("malformed serialized key")]
    MalformedKey,
    #[error("adversary output malformed")]
    MalformedAdversaryOutput,
}

pub type Result<T> = std::result::Result<T, RtcfError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Injective,
    TwoToOne,
}

impl Mode {
    pub fn from_bit(b: bool) -> Mode {
        if b {
            Mode::TwoToOne
        } else {
            Mode::Injective
        }
    }

    pub fn bit(&self) -> bool {
        matches!(self, Mode::TwoToOne)
    }
}

/// A bijection on `width`-bit strings stored as a lookup table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermTable {
    width: usize,
    table: Vec<u16>,
}

impl PermTable {
    pub fn identity(width: usize) -> PermTable {
        PermTable { width, table: (0..1u16 << width).collect() }
    }

    pub fn random<R: Rng>(width: usize, rng: &mut R) -> PermTable {
        let mut table: Vec<u16> = (0..1u16 << width).collect();
        table.shuffle(rng);
        PermTable { width, table }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn apply(&self, x: &Bits) -> Bits {
        assert_eq!(x.len(), self.width);
        Bits::new(self.table[x.index()] as u32, self.width)
    }

    pub fn inverse(&self) -> PermTable {
        let mut table = vec![0u16; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            table[y as usize] = x as u16;
        }
        PermTable { width: self.width, table }
    }

    fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.table.len()];
        self.table.iter().all(|&y| {
            let i = y as usize;
            i < seen.len() && !std::mem::replace(&mut seen[i], true)
        })
    }
}

/// Public key of the toy backend. In two-to-one mode the shift is part of
/// the public key: evaluation and checking are public-key-only operations
/// and need the full function table (this is the documented insecurity).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RtcfPublicKey {
    Injective { ell: usize, g: PermTable },
    TwoToOne { ell: usize, g: PermTable, s: Bits },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RtcfSecretKey {
    Injective { ell: usize, g_inv: PermTable },
    TwoToOne { ell: usize, g_inv: PermTable, s: Bits },
}

/// A point (b, x) of the domain {0,1} × D.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DomainPoint {
    pub b: bool,
    pub x: Bits,
}

impl DomainPoint {
    /// The (ℓ+1)-bit encoding b‖x with b at index 0.
    pub fn encode(&self) -> Bits {
        Bits::new(if self.b { 1 } else { 0 }, 1).concat(&self.x)
    }

    pub fn decode(bits: &Bits) -> DomainPoint {
        DomainPoint { b: bits.get(0), x: bits.slice(1, bits.len() - 1) }
    }
}

/// Range points travel padded to ℓ+1 bits regardless of mode.
pub fn pad_range(y: &Bits, ell: usize) -> Bits {
    match y.len() {
        l if l == ell + 1 => *y,
        l if l == ell => y.concat(&Bits::zeros(1)),
        _ => panic!("range point of width {}", y.len()),
    }
}

impl RtcfPublicKey {
    pub fn ell(&self) -> usize {
        match self {
            RtcfPublicKey::Injective { ell, .. } | RtcfPublicKey::TwoToOne { ell, .. } => *ell,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            RtcfPublicKey::Injective { .. } => Mode::Injective,
            RtcfPublicKey::TwoToOne { .. } => Mode::TwoToOne,
        }
    }

    /// f(b, x) as an unpadded range point (ℓ bits two-to-one, ℓ+1 injective).
    pub fn forward(&self, b: bool, x: &Bits) -> Result<Bits> {
        match self {
            RtcfPublicKey::Injective { ell, g } => {
                if x.len() != *ell {
                    return Err(RtcfError::LengthMismatch { got: x.len(), want: *ell });
                }
                Ok(g.apply(&DomainPoint { b, x: *x }.encode()))
            }
            RtcfPublicKey::TwoToOne { ell, g, s } => {
                if x.len() != *ell {
                    return Err(RtcfError::LengthMismatch { got: x.len(), want: *ell });
                }
                let arg = if b { x.xor(s) } else { *x };
                Ok(g.apply(&arg))
            }
        }
    }
}

impl RtcfSecretKey {
    pub fn ell(&self) -> usize {
        match self {
            RtcfSecretKey::Injective { ell, .. } | RtcfSecretKey::TwoToOne { ell, .. } => *ell,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            RtcfSecretKey::Injective { .. } => Mode::Injective,
            RtcfSecretKey::TwoToOne { .. } => Mode::TwoToOne,
        }
    }

    pub fn shift(&self) -> Option<&Bits> {
        match self {
            RtcfSecretKey::TwoToOne { s, .. } => Some(s),
            _ => None,
        }
    }
}

/// Sample a key pair; `ell` is the domain bit width, 1 ≤ ell ≤ 4.
pub fn gen<R: Rng>(ell: usize, mode: Mode, rng: &mut R) -> Result<(RtcfPublicKey, RtcfSecretKey)> {
    if !(1..=4).contains(&ell) {
        return Err(RtcfError::WidthOutOfRange(ell));
    }
    match mode {
        Mode::Injective => {
            let g = PermTable::random(ell + 1, rng);
            let g_inv = g.inverse();
            Ok((RtcfPublicKey::Injective { ell, g }, RtcfSecretKey::Injective { ell, g_inv }))
        }
        Mode::TwoToOne => {
            let g = PermTable::random(ell, rng);
            let g_inv = g.inverse();
            let s = Bits::new(rng.gen_range(1u32..1 << ell), ell);
            Ok((
                RtcfPublicKey::TwoToOne { ell, g, s },
                RtcfSecretKey::TwoToOne { ell, g_inv, s },
            ))
        }
    }
}

/// Evaluate f on (b, x), returning the padded range point. The toy backend
/// is deterministic (the output distribution is a point mass), so no
/// sampling randomness is consumed.
pub fn eval(pk: &RtcfPublicKey, b: bool, x: &Bits) -> Result<Bits> {
    Ok(pad_range(&pk.forward(b, x)?, pk.ell()))
}

/// Probability density of `y` under Eval(pk, b, x): 0 or 1 for the toy.
pub fn density(pk: &RtcfPublicKey, b: bool, x: &Bits, y: &Bits) -> Result<f64> {
    Ok(if eval(pk, b, x)? == pad_range(y, pk.ell()) { 1.0 } else { 0.0 })
}

/// Preimages of a padded range point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preimages {
    Injective(DomainPoint),
    Claw { x0: Bits, x1: Bits },
}

/// Invert a padded range point; `None` when y is outside the image.
pub fn invert(sk: &RtcfSecretKey, y: &Bits) -> Result<Option<Preimages>> {
    let ell = sk.ell();
    if y.len() != ell + 1 {
        return Err(RtcfError::LengthMismatch { got: y.len(), want: ell + 1 });
    }
    match sk {
        RtcfSecretKey::Injective { g_inv, .. } => {
            let p = DomainPoint::decode(&g_inv.apply(y));
            Ok(Some(Preimages::Injective(p)))
        }
        RtcfSecretKey::TwoToOne { g_inv, s, .. } => {
            if y.get(ell) {
                // pad bit set: outside the image of the two-to-one function
                return Ok(None);
            }
            let x0 = g_inv.apply(&y.slice(0, ell));
            Ok(Some(Preimages::Claw { x0, x1: x0.xor(s) }))
        }
    }
}

/// 1 iff y is in the support of Eval(pk, b, x).
pub fn check(pk: &RtcfPublicKey, b: bool, x: &Bits, y: &Bits) -> bool {
    if y.len() != pk.ell() + 1 {
        return false;
    }
    match eval(pk, b, x) {
        Ok(fy) => fy == *y,
        Err(_) => false,
    }
}

/// Membership of d in the valid-equation set. The toy set has density
/// exactly 1; the first bit of d is ignored by contract.
pub fn good(_x0: &Bits, _x1: &Bits, d: &Bits) -> bool {
    debug_assert!(!d.is_empty());
    true
}

/// The equation bit d·(1, x₀⊕x₁) over GF(2).
pub fn hardcore_bit(x0: &Bits, x1: &Bits, d: &Bits) -> Result<bool> {
    if d.len() != x0.len() + 1 {
        return Err(RtcfError::LengthMismatch { got: d.len(), want: x0.len() + 1 });
    }
    let target = Bits::new(1, 1).concat(&x0.xor(x1));
    Ok(d.dot(&target))
}

// ----------------------------------------------------------------------
// canonical serialization
// ----------------------------------------------------------------------

const TAG_TOY_INJECTIVE: u8 = 0x01;
const TAG_TOY_TWO_TO_ONE: u8 = 0x02;

fn write_table(out: &mut Vec<u8>, t: &PermTable) {
    let entry_bytes = t.width.div_ceil(8);
    for &y in &t.table {
        let le = (y as u32).to_le_bytes();
        out.extend_from_slice(&le[..entry_bytes]);
    }
}

fn read_table(bytes: &[u8], width: usize) -> Result<(PermTable, usize)> {
    let entry_bytes = width.div_ceil(8);
    let n = 1usize << width;
    let need = n * entry_bytes;
    if bytes.len() < need {
        return Err(RtcfError::MalformedKey);
    }
    let mut table = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = 0u32;
        for (j, &b) in bytes[k * entry_bytes..(k + 1) * entry_bytes].iter().enumerate() {
            v |= (b as u32) << (8 * j);
        }
        table.push(v as u16);
    }
    let t = PermTable { width, table };
    if !t.is_bijection() {
        return Err(RtcfError::MalformedKey);
    }
    Ok((t, need))
}

impl RtcfPublicKey {
    /// Backend tag byte, ℓ byte, permutation table entries little-endian;
    /// two-to-one keys append the shift s.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            RtcfPublicKey::Injective { ell, g } => {
                out.push(TAG_TOY_INJECTIVE);
                out.push(*ell as u8);
                write_table(&mut out, g);
            }
            RtcfPublicKey::TwoToOne { ell, g, s } => {
                out.push(TAG_TOY_TWO_TO_ONE);
                out.push(*ell as u8);
                write_table(&mut out, g);
                out.extend_from_slice(&s.pack());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RtcfPublicKey> {
        if bytes.len() < 2 {
            return Err(RtcfError::MalformedKey);
        }
        let ell = bytes[1] as usize;
        if !(1..=4).contains(&ell) {
            return Err(RtcfError::MalformedKey);
        }
        match bytes[0] {
            TAG_TOY_INJECTIVE => {
                let (g, used) = read_table(&bytes[2..], ell + 1)?;
                if bytes.len() != 2 + used {
                    return Err(RtcfError::MalformedKey);
                }
                Ok(RtcfPublicKey::Injective { ell, g })
            }
            TAG_TOY_TWO_TO_ONE => {
                let (g, used) = read_table(&bytes[2..], ell)?;
                let s_bytes = ell.div_ceil(8);
                if bytes.len() != 2 + used + s_bytes {
                    return Err(RtcfError::MalformedKey);
                }
                let s = Bits::unpack(&bytes[2 + used..], ell).ok_or(RtcfError::MalformedKey)?;
                if s.is_zero() {
                    return Err(RtcfError::MalformedKey);
                }
                Ok(RtcfPublicKey::TwoToOne { ell, g, s })
            }
            _ => Err(RtcfError::MalformedKey),
        }
    }
}

impl RtcfSecretKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            RtcfSecretKey::Injective { ell, g_inv } => {
                out.push(TAG_TOY_INJECTIVE);
                out.push(*ell as u8);
                write_table(&mut out, g_inv);
            }
            RtcfSecretKey::TwoToOne { ell, g_inv, s } => {
                out.push(TAG_TOY_TWO_TO_ONE);
                out.push(*ell as u8);
                write_table(&mut out, g_inv);
                out.extend_from_slice(&s.pack());
            }
        }
        out
    }
}

// ----------------------------------------------------------------------
// games
// ----------------------------------------------------------------------

/// What an adversary returns in the adaptive hardcore-bit game.
#[derive(Clone, Debug)]
pub struct HardcoreResponse {
    pub y: Bits,
    pub preimage: DomainPoint,
    pub d: Bits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HardcoreOutcome {
    /// Valid preimage and d ∈ Good with equation bit 0.
    Win0,
    /// Valid preimage and d ∈ Good with equation bit 1.
    Win1,
    /// Invalid preimage, malformed output, or d outside Good.
    Fail,
}

/// Run one round of the adaptive hardcore-bit game. The adversary sees the
/// public key (which, for the toy backend, already contains the trapdoor
/// material; this game documents that insecurity rather than refuting it).
pub fn adaptive_hardcore_game<R, A>(
    ell: usize,
    adversary: A,
    rng: &mut R,
) -> Result<HardcoreOutcome>
where
    R: Rng,
    A: FnOnce(&RtcfPublicKey, &mut R) -> Option<HardcoreResponse>,
{
    let (pk, sk) = gen(ell, Mode::TwoToOne, rng)?;
    let resp = match adversary(&pk, rng) {
        Some(r) => r,
        None => return Ok(HardcoreOutcome::Fail),
    };
    if resp.d.len() != ell + 1
        || resp.preimage.x.len() != ell
        || !check(&pk, resp.preimage.b, &resp.preimage.x, &resp.y)
    {
        return Ok(HardcoreOutcome::Fail);
    }
    let (x0, x1) = match invert(&sk, &resp.y)? {
        Some(Preimages::Claw { x0, x1 }) => (x0, x1),
        _ => return Ok(HardcoreOutcome::Fail),
    };
    if !good(&x0, &x1, &resp.d) {
        return Ok(HardcoreOutcome::Fail);
    }
    Ok(if hardcore_bit(&x0, &x1, &resp.d)? {
        HardcoreOutcome::Win1
    } else {
        HardcoreOutcome::Win0
    })
}

/// A collapsing-game distinguisher: commits a claimed image y and a state on
/// the (ℓ+1)-qubit preimage register, then guesses the challenge bit after
/// the challenger hands the register back.
pub trait CollapseDistinguisher {
    fn commit<R: Rng>(&mut self, pk: &RtcfPublicKey, rng: &mut R) -> (Bits, PureState);
    fn guess<R: Rng>(&mut self, state: PureState, rng: &mut R) -> bool;
}

/// Run the collapsing game at challenge bit `b`: verify Check in
/// superposition (guessing blind on failure), measure the claimed-bit
/// register iff b = 1, and return the distinguisher's guess.
pub fn collapse_game<R: Rng, D: CollapseDistinguisher>(
    distinguisher: &mut D,
    pk: &RtcfPublicKey,
    b: bool,
    rng: &mut R,
) -> Result<bool> {
    let (y, state) = distinguisher.commit(pk, rng);
    match collapse_challenge(pk, &y, state, b, rng)? {
        Some(post) => Ok(distinguisher.guess(post, rng)),
        None => Ok(rng.gen()),
    }
}

/// The challenger's step, exposed so tests can compare post-states directly.
/// Returns `None` when the check measurement rejects.
pub fn collapse_challenge<R: Rng>(
    pk: &RtcfPublicKey,
    y: &Bits,
    mut state: PureState,
    b: bool,
    rng: &mut R,
) -> Result<Option<PureState>> {
    let ell = pk.ell();
    assert_eq!(state.total_width(), ell + 1, "state must cover the (b,x) register");
    let valid_mass: f64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let p = DomainPoint::decode(&Bits::new(*i as u32, ell + 1));
            check(pk, p.b, &p.x, y)
        })
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let valid = rng.gen::<f64>() < valid_mass;
    let mut mass = 0.0f64;
    for i in 0..state.amplitudes().len() {
        let p = DomainPoint::decode(&Bits::new(i as u32, ell + 1));
        if check(pk, p.b, &p.x, y) != valid {
            state.amplitudes_mut()[i] = num_complex::Complex64::new(0.0, 0.0);
        } else {
            mass += state.amplitudes()[i].norm_sqr();
        }
    }
    if mass < crate::tol::ZERO_BRANCH || !valid {
        return Ok(None);
    }
    let scale = 1.0 / mass.sqrt();
    for a in state.amplitudes_mut() {
        *a *= scale;
    }
    if b {
        // measure the claimed bit (qubit 0)
        let d = state.marginal_distribution(&[0]);
        let outcome = d.sample(rng);
        state.project_qubits(&[0], &outcome).map_err(|_| RtcfError::MalformedAdversaryOutput)?;
    }
    Ok(Some(state))
}
