//! Protocol observables X_i and Z_i.
//!
//! Z_i is the Pauli-Z on the committed bit of slot i. X_i conjugates a
//! diagonal sign (the equation bit over valid d, the fallback ancilla bit
//! over invalid d) by Hadamards on slot i plus its ancilla and by the
//! attack unitary:
//!
//!   X_i = (U ⊗ Id)† (H_{z_i} ⊗ H_{u_i}) D_i (H_{z_i} ⊗ H_{u_i}) (U ⊗ Id).
//!
//! Since D_i acts on disjoint qubits per slot and the U conjugation is
//! shared, products over slots reduce to one U sandwich around per-slot
//! involutions, which is how every application below is implemented.

use num_complex::Complex64;

use super::{ExtractError, MaliciousProver, Result};
use crate::batchkeys::{self, MasterSecretKey};
use crate::bits::Bits;
use crate::mproto::{GoodPolicy, ProtocolParams};
use crate::qsim::{
    embed_operator, hadamard, identity, kron, pauli_x, pauli_z, BinaryObservable, CMat, PureState,
    RegisterLayout,
};
use crate::rtcf::{self, Preimages};

/// Claw data of one two-to-one slot.
#[derive(Clone, Debug)]
pub struct SlotClaw {
    pub x0: Bits,
    pub x1: Bits,
}

/// The measurement side of a committed transcript: either genuine Paulis on
/// an N-qubit space (the reference case for the extractor identity) or the
/// protocol observables parameterized by (keys, y, attack unitary).
pub enum ObservableSet {
    Pauli {
        n: usize,
    },
    Protocol {
        n: usize,
        ell: usize,
        i_width: usize,
        attack: super::AttackUnitary,
        claws: Vec<Option<SlotClaw>>,
        good_policy: GoodPolicy,
    },
}

impl ObservableSet {
    pub fn pauli(n: usize) -> ObservableSet {
        ObservableSet::Pauli { n }
    }

    /// Build the observables for a commitment y under the given secret key.
    /// Slots whose key is two-to-one get claw data; injective slots have no
    /// X observable (they are only ever measured with Z).
    pub fn protocol(
        params: &ProtocolParams,
        sk: &MasterSecretKey,
        ys: &[Bits],
        prover: &MaliciousProver,
    ) -> Result<ObservableSet> {
        let n = params.n as usize;
        let mut claws = Vec::with_capacity(n);
        for (i, y) in ys.iter().enumerate() {
            let ski = batchkeys::ext_sk(sk, i as u32)?;
            match ski {
                sk_i if sk_i.mode() == rtcf::Mode::TwoToOne => {
                    match rtcf::invert(&sk_i, y)? {
                        Some(Preimages::Claw { x0, x1 }) => claws.push(Some(SlotClaw { x0, x1 })),
                        _ => return Err(ExtractError::MalformedCommitment),
                    }
                }
                _ => claws.push(None),
            }
        }
        Ok(ObservableSet::Protocol {
            n,
            ell: params.ell,
            i_width: prover.i_width,
            attack: prover.attack.clone(),
            claws,
            good_policy: params.good_policy,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            ObservableSet::Pauli { n } => *n,
            ObservableSet::Protocol { n, .. } => *n,
        }
    }

    /// Total qubits of the space the observables act on.
    pub fn h_width(&self) -> usize {
        match self {
            ObservableSet::Pauli { n } => *n,
            ObservableSet::Protocol { n, ell, i_width, .. } => n * (ell + 1) + i_width + n,
        }
    }

    /// Layout of a bare observable-space state.
    pub fn h_layout(&self) -> RegisterLayout {
        match self {
            ObservableSet::Pauli { n } => {
                RegisterLayout::new([("h", *n)]).expect("within qubit cap")
            }
            ObservableSet::Protocol { n, ell, i_width, .. } => {
                let mut regs: Vec<(String, usize)> =
                    (0..*n).map(|i| (format!("z{i}"), ell + 1)).collect();
                if *i_width > 0 {
                    regs.push(("i".to_string(), *i_width));
                }
                regs.extend((0..*n).map(|i| (format!("u{i}"), 1)));
                RegisterLayout::new(regs).expect("within qubit cap")
            }
        }
    }

    pub fn claw(&self, i: usize) -> Result<&SlotClaw> {
        match self {
            ObservableSet::Pauli { .. } => Err(ExtractError::MissingClaw(i)),
            ObservableSet::Protocol { claws, .. } => {
                claws[i].as_ref().ok_or(ExtractError::MissingClaw(i))
            }
        }
    }

    /// Qubit carrying the committed bit of slot i inside `state`.
    fn b_qubit(&self, state: &PureState, i: usize) -> usize {
        match self {
            ObservableSet::Pauli { .. } => {
                state.layout().offset_of("h").expect("pauli register h") + i
            }
            ObservableSet::Protocol { .. } => {
                state.layout().offset_of(&format!("z{i}")).expect("slot register")
            }
        }
    }

    fn slot_qubits(&self, state: &PureState, i: usize) -> (Vec<usize>, usize) {
        let z = state.layout().qubits_of(&format!("z{i}")).expect("slot register");
        let u = state.layout().offset_of(&format!("u{i}")).expect("ancilla register");
        (z, u)
    }

    fn attack_targets(&self, state: &PureState) -> Vec<usize> {
        let mut qubits = Vec::new();
        for i in 0..self.n() {
            qubits.extend(state.layout().qubits_of(&format!("z{i}")).expect("slot register"));
        }
        if let ObservableSet::Protocol { i_width, .. } = self {
            if *i_width > 0 {
                qubits.extend(state.layout().qubits_of("i").expect("private register"));
            }
        }
        qubits
    }

    fn apply_attack(&self, state: &mut PureState, adjoint: bool) {
        if let ObservableSet::Protocol { attack: super::AttackUnitary::Dense(u), .. } = self {
            let targets = self.attack_targets(state);
            let op = if adjoint { u.adjoint() } else { u.clone() };
            state.apply_dense_unchecked(&op, &targets);
        }
    }

    /// Sign of the diagonal D_i at (d, fallback-bit) for slot i.
    fn slot_sign(&self, i: usize, d: &Bits, ancilla: bool) -> bool {
        match self {
            ObservableSet::Pauli { .. } => unreachable!("pauli sets have no slot diagonal"),
            ObservableSet::Protocol { claws, good_policy, .. } => {
                let claw = claws[i].as_ref().expect("slot without claw has no X observable");
                if good_policy.is_good(&claw.x0, &claw.x1, d) {
                    rtcf::hardcore_bit(&claw.x0, &claw.x1, d).expect("width fixed by register")
                } else {
                    ancilla
                }
            }
        }
    }

    /// Apply the parity observable X(r) = ∏_{i: r_i=1} X_i as a unitary.
    pub fn apply_x_parity(&self, state: &mut PureState, r: &Bits) {
        assert_eq!(r.len(), self.n());
        if r.is_zero() {
            return;
        }
        match self {
            ObservableSet::Pauli { .. } => {
                for i in 0..self.n() {
                    if r.get(i) {
                        state.x(self.b_qubit(state, i));
                    }
                }
            }
            ObservableSet::Protocol { ell, .. } => {
                self.apply_attack(state, false);
                let slots: Vec<usize> = (0..self.n()).filter(|&i| r.get(i)).collect();
                self.hadamard_slots(state, &slots);
                let slot_w = ell + 1;
                // one diagonal sweep: multiply the signs of every selected slot
                let mut slot_info = Vec::new();
                for &i in &slots {
                    let (z, u) = self.slot_qubits(state, i);
                    slot_info.push((i, z, u));
                }
                state.apply_sign(|idx| {
                    let mut sign = false;
                    for (i, z, u) in &slot_info {
                        let mut d = 0u32;
                        for (t, &q) in z.iter().enumerate() {
                            d |= (((idx >> q) & 1) as u32) << t;
                        }
                        let anc = (idx >> u) & 1 == 1;
                        sign ^= self.slot_sign(*i, &Bits::new(d, slot_w), anc);
                    }
                    sign
                });
                self.hadamard_slots(state, &slots);
                self.apply_attack(state, true);
            }
        }
    }

    /// Apply the parity observable Z(s) = ∏_{i: s_i=1} Z_i as a unitary.
    pub fn apply_z_parity(&self, state: &mut PureState, s: &Bits) {
        assert_eq!(s.len(), self.n());
        for i in 0..self.n() {
            if s.get(i) {
                state.z(self.b_qubit(state, i));
            }
        }
    }

    fn hadamard_slots(&self, state: &mut PureState, slots: &[usize]) {
        for &i in slots {
            let (z, u) = self.slot_qubits(state, i);
            for q in z {
                state.h(q);
            }
            state.h(u);
        }
    }

    /// The shared sandwich around the per-slot diagonals: attack unitary,
    /// then Hadamards on every slot and its ancilla.
    pub(crate) fn conjugation_forward(&self, state: &mut PureState) {
        let all: Vec<usize> = (0..self.n()).collect();
        self.apply_attack(state, false);
        self.hadamard_slots(state, &all);
    }

    pub(crate) fn conjugation_backward(&self, state: &mut PureState) {
        let all: Vec<usize> = (0..self.n()).collect();
        self.hadamard_slots(state, &all);
        self.apply_attack(state, true);
    }

    pub(crate) fn slot_sign_public(&self, i: usize, d: &Bits, ancilla: bool) -> bool {
        self.slot_sign(i, d, ancilla)
    }

    // ------------------------------------------------------------------
    // exact measurement, structured route
    // ------------------------------------------------------------------

    /// Jointly measure Z_i for the listed slots; returns outcome branches in
    /// slot-list order with renormalized post-states.
    pub fn measure_z_slots(
        &self,
        state: &PureState,
        slots: &[usize],
    ) -> Vec<(Bits, f64, PureState)> {
        let qubits: Vec<usize> = slots.iter().map(|&i| self.b_qubit(state, i)).collect();
        let mut out = Vec::new();
        for v in Bits::all(slots.len()) {
            let mut branch = state.clone();
            match branch.project_qubits(&qubits, &v) {
                Ok(p) => out.push((v, p, branch)),
                Err(_) => {}
            }
        }
        out
    }

    /// Jointly measure X_i for the listed slots. The conjugation (attack
    /// unitary plus Hadamards) is applied once, the commuting diagonals are
    /// read out exactly, and the conjugation is undone on each branch.
    pub fn measure_x_slots(
        &self,
        state: &PureState,
        slots: &[usize],
    ) -> Vec<(Bits, f64, PureState)> {
        match self {
            ObservableSet::Pauli { .. } => {
                let mut work = state.clone();
                let qubits: Vec<usize> = slots.iter().map(|&i| self.b_qubit(state, i)).collect();
                for &q in &qubits {
                    work.h(q);
                }
                let mut out = Vec::new();
                for v in Bits::all(slots.len()) {
                    let mut branch = work.clone();
                    if let Ok(p) = branch.project_qubits(&qubits, &v) {
                        for &q in &qubits {
                            branch.h(q);
                        }
                        out.push((v, p, branch));
                    }
                }
                out
            }
            ObservableSet::Protocol { ell, .. } => {
                let mut work = state.clone();
                self.apply_attack(&mut work, false);
                self.hadamard_slots(&mut work, slots);
                let slot_w = ell + 1;
                let mut slot_info = Vec::new();
                for &i in slots {
                    let (z, u) = self.slot_qubits(state, i);
                    slot_info.push((i, z, u));
                }
                // outcome of each basis index under the commuting diagonals
                let outcome_of = |idx: usize| -> usize {
                    let mut o = 0usize;
                    for (t, (i, z, u)) in slot_info.iter().enumerate() {
                        let mut d = 0u32;
                        for (k, &q) in z.iter().enumerate() {
                            d |= (((idx >> q) & 1) as u32) << k;
                        }
                        let anc = (idx >> u) & 1 == 1;
                        if self.slot_sign(*i, &Bits::new(d, slot_w), anc) {
                            o |= 1 << t;
                        }
                    }
                    o
                };
                let dim = work.amplitudes().len();
                let mut masses = vec![0.0f64; 1 << slots.len()];
                for idx in 0..dim {
                    let p = work.amplitudes()[idx].norm_sqr();
                    if p > 0.0 {
                        masses[outcome_of(idx)] += p;
                    }
                }
                let mut out = Vec::new();
                for (o, &mass) in masses.iter().enumerate() {
                    if mass < crate::tol::ZERO_BRANCH {
                        continue;
                    }
                    let mut branch = work.clone();
                    let scale = 1.0 / mass.sqrt();
                    for (idx, amp) in branch.amplitudes_mut().iter_mut().enumerate() {
                        if outcome_of(idx) == o {
                            *amp *= scale;
                        } else {
                            *amp = Complex64::new(0.0, 0.0);
                        }
                    }
                    self.hadamard_slots(&mut branch, slots);
                    self.apply_attack(&mut branch, true);
                    out.push((Bits::new(o as u32, slots.len()), mass, branch));
                }
                out
            }
        }
    }

    /// ‖Π^X_outcome |state⟩‖² over the listed slots (no post-state needed).
    pub fn x_projection_mass(&self, state: &PureState, slots: &[usize], outcome: &Bits) -> f64 {
        self.measure_x_slots(state, slots)
            .iter()
            .find(|(o, _, _)| o == outcome)
            .map(|(_, p, _)| *p)
            .unwrap_or(0.0)
    }

    /// Project in place onto the Z-outcome subspace; returns the mass.
    pub fn z_projection(&self, state: &mut PureState, slots: &[usize], outcome: &Bits) -> f64 {
        let qubits: Vec<usize> = slots.iter().map(|&i| self.b_qubit(state, i)).collect();
        let mut mass = 0.0f64;
        for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
            let mut matches = true;
            for (t, &q) in qubits.iter().enumerate() {
                if ((idx >> q) & 1 == 1) != outcome.get(t) {
                    matches = false;
                    break;
                }
            }
            if matches {
                mass += amp.norm_sqr();
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        mass
    }

    // ------------------------------------------------------------------
    // dense definitional route (small spaces only)
    // ------------------------------------------------------------------

    fn dense_attack(&self, layout: &RegisterLayout) -> CMat {
        let total = layout.total_width();
        match self {
            ObservableSet::Pauli { .. } => identity(1 << total),
            ObservableSet::Protocol { attack, .. } => match attack {
                super::AttackUnitary::Identity => identity(1 << total),
                super::AttackUnitary::Dense(u) => {
                    let state = PureState::alloc(layout.clone());
                    embed_operator(u, &self.attack_targets(&state), total)
                }
            },
        }
    }

    /// Dense X(r) from the definition, on the bare observable-space layout.
    pub fn x_parity_dense(&self, r: &Bits) -> CMat {
        let layout = self.h_layout();
        let total = layout.total_width();
        match self {
            ObservableSet::Pauli { .. } => {
                let state = PureState::alloc(layout.clone());
                let mut op = identity(1 << total);
                for i in 0..self.n() {
                    if r.get(i) {
                        op = embed_operator(&pauli_x(), &[self.b_qubit(&state, i)], total) * op;
                    }
                }
                op
            }
            ObservableSet::Protocol { ell, .. } => {
                let state = PureState::alloc(layout.clone());
                let u_full = self.dense_attack(&layout);
                let mut mid = identity(1 << total);
                let slot_w = ell + 1;
                let had = {
                    let mut h = hadamard();
                    for _ in 0..slot_w {
                        h = kron(&hadamard(), &h);
                    }
                    h // (ℓ+2)-qubit Hadamard, ancilla as the top factor
                };
                for i in 0..self.n() {
                    if !r.get(i) {
                        continue;
                    }
                    let (z, u) = self.slot_qubits(&state, i);
                    let mut targets = z.clone();
                    targets.push(u);
                    let dim = 1 << (slot_w + 1);
                    let mut diag = CMat::zeros(dim, dim);
                    for idx in 0..dim {
                        let d = Bits::new((idx & ((1 << slot_w) - 1)) as u32, slot_w);
                        let anc = (idx >> slot_w) & 1 == 1;
                        let sign = if self.slot_sign(i, &d, anc) { -1.0 } else { 1.0 };
                        diag[(idx, idx)] = Complex64::new(sign, 0.0);
                    }
                    let m_i = &had * diag * &had;
                    mid = embed_operator(&m_i, &targets, total) * mid;
                }
                u_full.adjoint() * mid * u_full
            }
        }
    }

    /// Dense Z(s) from the definition.
    pub fn z_parity_dense(&self, s: &Bits) -> CMat {
        let layout = self.h_layout();
        let total = layout.total_width();
        let state = PureState::alloc(layout);
        let mut op = identity(1 << total);
        for i in 0..self.n() {
            if s.get(i) {
                op = embed_operator(&pauli_z(), &[self.b_qubit(&state, i)], total) * op;
            }
        }
        op
    }

    /// Dense projector Π^X_u = E_{u'} (−1)^{u·u'} X(u') over the given slots.
    pub fn x_projector_dense(&self, slots: &[usize], outcome: &Bits) -> CMat {
        assert_eq!(slots.len(), outcome.len());
        let total = self.h_width();
        let mut acc = CMat::zeros(1 << total, 1 << total);
        for uprime in Bits::all(slots.len()) {
            let mut mask = Bits::zeros(self.n());
            for (t, &i) in slots.iter().enumerate() {
                if uprime.get(t) {
                    mask = mask.with_bit(i, true);
                }
            }
            let sign = if outcome.dot(&uprime) { -1.0 } else { 1.0 };
            acc += self.x_parity_dense(&mask) * Complex64::new(sign, 0.0);
        }
        acc * Complex64::new(1.0 / (1 << slots.len()) as f64, 0.0)
    }

    /// Dense projector Π^Z_v over the given slots.
    pub fn z_projector_dense(&self, slots: &[usize], outcome: &Bits) -> CMat {
        assert_eq!(slots.len(), outcome.len());
        let total = self.h_width();
        let mut acc = CMat::zeros(1 << total, 1 << total);
        for vprime in Bits::all(slots.len()) {
            let mut mask = Bits::zeros(self.n());
            for (t, &i) in slots.iter().enumerate() {
                if vprime.get(t) {
                    mask = mask.with_bit(i, true);
                }
            }
            let sign = if outcome.dot(&vprime) { -1.0 } else { 1.0 };
            acc += self.z_parity_dense(&mask) * Complex64::new(sign, 0.0);
        }
        acc * Complex64::new(1.0 / (1 << slots.len()) as f64, 0.0)
    }

    /// The parity observable as a checked binary observable (dense).
    pub fn parity_observable(&self, kind: crate::qsim::PauliKind, mask: &Bits) -> BinaryObservable {
        let m = match kind {
            crate::qsim::PauliKind::X => self.x_parity_dense(mask),
            crate::qsim::PauliKind::Z => self.z_parity_dense(mask),
        };
        BinaryObservable::from_dense(m).expect("parity observables are involutions")
    }
}

/// Extend a residual commit state with the per-slot fallback ancillas u_i.
pub fn append_fallback_ancillas(state: PureState, n: usize) -> Result<PureState> {
    let mut s = state;
    for i in 0..n {
        s = s.append_register(&format!("u{i}"), 1)?;
    }
    Ok(s)
}
