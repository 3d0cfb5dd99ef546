//! Executable soundness machinery for the commit-and-measure protocol.
//!
//! The pieces: a black-box malicious prover model, the protocol observables
//! X_i/Z_i built from a committed transcript, a teleportation-style
//! extractor, the verifier-output distributions computed exactly by branch
//! enumeration, the hybrid interpolation between them, and the extraction
//! identity checked numerically on both sides.
//!
//! Computational-indistinguishability claims are not asserted for
//! adversarial provers; only the relations that hold unconditionally are
//! checked there, while honest provers get the full exact-collapse chain.

mod claims;
mod distributions;
mod extractor;
mod observables;

pub use claims::{signed_statistic, verify_extracted_claim, verify_extracted_claim_all};
pub use distributions::{
    all_two_to_one_distribution, extracted_distribution, extracted_distribution_pmf,
    hybrid_distribution, hybrid_half_distribution, mode_matched_distribution,
    two_to_one_ensemble, verifier_output_distribution, verifier_output_distribution_with_keys,
    SampledCommitment,
};
pub use extractor::extract_state;
pub use observables::{ObservableSet, SlotClaw};

use rand::Rng;
use thiserror::Error;

use crate::batchkeys::{self, BasisSpec, MasterPublicKey, MasterSecretKey};
use crate::bits::Bits;
use crate::mproto::{self, ProtocolParams};
use crate::qsim::{self, CMat, PureState};
use crate::rtcf;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("attack unitary dimension {got}, expected {want}")]
    AttackDimension { got: usize, want: usize },
    #[error("slot {0} has no claw (key not two-to-one)")]
    MissingClaw(usize),
    #[error("POVM element is not between 0 and Id")]
    PovmOutOfRange,
    #[error("commitment outside the image; distribution undefined")]
    MalformedCommitment,
    #[error(transparent)]
    Protocol(#[from] mproto::ProtocolError),
    #[error(transparent)]
    Keys(#[from] batchkeys::BatchKeyError),
    #[error(transparent)]
    Rtcf(#[from] rtcf::RtcfError),
    #[error(transparent)]
    Sim(#[from] qsim::SimError),
}

pub type Result<T> = std::result::Result<T, ExtractError>;

/// A black-box cheating prover: an input state pushed through the honest
/// commitment circuit, an optional pre-measurement unitary on its private
/// registers (together these form the adversarial commit unitary), and an
/// attack unitary applied before the Hadamard opening. The test-round
/// opening is the identity map. The public key and commitment are kept
/// classically alongside the residual state.
pub struct MaliciousProver {
    pub sigma: PureState,
    pub i_width: usize,
    pub commit_twist: Option<CMat>,
    pub attack: AttackUnitary,
}

#[derive(Clone)]
pub enum AttackUnitary {
    Identity,
    Dense(CMat),
}

impl MaliciousProver {
    pub fn honest(sigma: PureState) -> MaliciousProver {
        MaliciousProver { sigma, i_width: 0, commit_twist: None, attack: AttackUnitary::Identity }
    }

    /// Random prover: Haar-random input state and Haar-random attack unitary
    /// over the opening and private registers.
    pub fn random<R: Rng>(n: u32, ell: usize, i_width: usize, rng: &mut R) -> MaliciousProver {
        let sigma = random_n_qubit_state(n as usize, rng);
        let attack_dim = 1usize << (n as usize * (ell + 1) + i_width);
        MaliciousProver {
            sigma,
            i_width,
            commit_twist: None,
            attack: AttackUnitary::Dense(qsim::random_unitary(attack_dim, rng)),
        }
    }

    pub fn n(&self) -> usize {
        self.sigma.total_width()
    }

    /// All commitment branches: outcome strings y with their probabilities
    /// and the residual states on z0..z(N-1) (and `i` when present).
    pub fn commit_branches(
        &self,
        pks: &[rtcf::RtcfPublicKey],
    ) -> Result<Vec<(Vec<Bits>, f64, PureState)>> {
        let n = pks.len();
        let mut state = mproto::commit_state(pks, &self.sigma, self.i_width)?;
        if let Some(twist) = &self.commit_twist {
            let regs = private_registers(n, self.i_width);
            let names: Vec<&str> = regs.iter().map(|s| s.as_str()).collect();
            state.apply_unitary_regs(twist, &names)?;
        }
        let mut branches = vec![(Vec::new(), 1.0f64, state)];
        for i in 0..n {
            let reg = format!("y{i}");
            let mut next = Vec::new();
            for (ys, p, s) in &branches {
                for (y, py, post) in s.branches_project_out(&reg)? {
                    let mut ys = ys.clone();
                    ys.push(y);
                    next.push((ys, p * py, post));
                }
            }
            branches = next;
        }
        Ok(branches)
    }

    /// Apply the attack unitary to a state containing the z/i registers.
    pub fn apply_attack(&self, state: &mut PureState, n: usize) -> Result<()> {
        match &self.attack {
            AttackUnitary::Identity => Ok(()),
            AttackUnitary::Dense(u) => {
                let regs = private_registers(n, self.i_width);
                let names: Vec<&str> = regs.iter().map(|s| s.as_str()).collect();
                let width: usize = names
                    .iter()
                    .map(|r| state.layout().width_of(r))
                    .collect::<qsim::Result<Vec<_>>>()?
                    .iter()
                    .sum();
                if u.nrows() != 1 << width {
                    return Err(ExtractError::AttackDimension { got: u.nrows(), want: 1 << width });
                }
                state.apply_unitary_regs(u, &names)?;
                Ok(())
            }
        }
    }
}

fn private_registers(n: usize, i_width: usize) -> Vec<String> {
    let mut regs: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    if i_width > 0 {
        regs.push("i".to_string());
    }
    regs
}

pub(crate) fn random_n_qubit_state<R: Rng>(n: usize, rng: &mut R) -> PureState {
    let layout = qsim::RegisterLayout::new([("w", n)]).expect("small layout");
    let amps = qsim::random_state_vector(1 << n, rng);
    PureState::from_amplitudes(layout, amps).expect("normalized by construction")
}

/// Simulation-mode key generation: the constant two-to-one basis.
pub fn sim_gen<R: Rng>(
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<(MasterPublicKey, MasterSecretKey)> {
    let basis = BasisSpec::constant(true, params.n);
    Ok(mproto::mp_gen(params, &basis, rng)?)
}

/// Sample keys in all-two-to-one mode, run the prover's commitment, measure
/// y, and return the protocol observables together with the residual state
/// extended by the fresh fallback ancillas.
pub fn samp<R: Rng>(
    params: &ProtocolParams,
    prover: &MaliciousProver,
    rng: &mut R,
) -> Result<(ObservableSet, PureState)> {
    let (pk, sk) = sim_gen(params, rng)?;
    let n = params.n as usize;
    let pks: Vec<rtcf::RtcfPublicKey> =
        (0..n).map(|i| batchkeys::ext_pk(&pk, i as u32)).collect::<batchkeys::Result<_>>()?;
    let branches = prover.commit_branches(&pks)?;
    // sample one commitment branch
    let roll: f64 = rng.gen();
    let mut acc = 0.0;
    let mut chosen = branches.len() - 1;
    for (k, (_, p, _)) in branches.iter().enumerate() {
        acc += p;
        if roll < acc {
            chosen = k;
            break;
        }
    }
    let (ys, _, state) = branches.into_iter().nth(chosen).expect("nonempty branches");
    let set = ObservableSet::protocol(params, &sk, &ys, prover)?;
    let psi = observables::append_fallback_ancillas(state, n)?;
    Ok((set, psi))
}

/// The full verifier output m from restrictions u (Hadamard slots) and v
/// (standard slots) given the basis h.
pub(crate) fn assemble_outcome(h: &Bits, u: &Bits, v: &Bits) -> Bits {
    let mut m = Bits::zeros(h.len());
    let mut iu = 0;
    let mut iv = 0;
    for i in 0..h.len() {
        if h.get(i) {
            m = m.with_bit(i, u.get(iu));
            iu += 1;
        } else {
            m = m.with_bit(i, v.get(iv));
            iv += 1;
        }
    }
    m
}

/// Slot indices measured in the Hadamard basis (R) and standard basis (S).
pub(crate) fn basis_split(h: &Bits) -> (Vec<usize>, Vec<usize>) {
    let r = (0..h.len()).filter(|&i| h.get(i)).collect();
    let s = (0..h.len()).filter(|&i| !h.get(i)).collect();
    (r, s)
}
