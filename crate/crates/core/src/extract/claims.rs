//! Numeric forms of the extraction identities.
//!
//! The extracted-state identity is checked with two independent routes: the
//! left side runs the actual extraction circuit and traces, the right side
//! evaluates the u'-averaged projector expression directly from the dense
//! definitional operators.

use nalgebra::DVector;
use num_complex::Complex64;

use super::distributions::pauli_outcome_projector;
use super::observables::ObservableSet;
use super::{basis_split, ExtractError, Result};
use crate::bits::Bits;
use crate::qsim::{is_hermitian, CMat, OutcomeDistribution, PureState};
use crate::tol;

/// Both sides of the extracted-state identity for one outcome (u, v):
/// lhs = Tr(Π^σx_u Π^σz_v τ) with τ from the extraction circuit;
/// rhs = E_{u'} ⟨ψ| Π^Z_v Z(u') Π^X_{u'⊕u} Z(u') Π^Z_v |ψ⟩.
pub fn verify_extracted_claim(
    set: &ObservableSet,
    psi: &PureState,
    h: &Bits,
    u: &Bits,
    v: &Bits,
) -> Result<(f64, f64)> {
    let n = set.n();
    assert_eq!(h.len(), n);
    let (r_slots, s_slots) = basis_split(h);
    assert_eq!(u.len(), r_slots.len());
    assert_eq!(v.len(), s_slots.len());

    // operational side
    let tau = super::extract_state(set, psi)?;
    let proj = pauli_outcome_projector(n, &r_slots, u, &s_slots, v);
    let lhs = (0..tau.dim())
        .map(|r| {
            (0..tau.dim()).map(|c| proj[(r, c)] * tau.operator()[(c, r)]).sum::<Complex64>()
        })
        .sum::<Complex64>()
        .re;

    // definitional side
    let pz = set.z_projector_dense(&s_slots, v);
    let amps = DVector::from_column_slice(psi.amplitudes());
    let projected = &pz * &amps;
    let mut rhs = 0.0;
    for uprime in Bits::all(r_slots.len()) {
        let mut mask = Bits::zeros(n);
        for (t, &i) in r_slots.iter().enumerate() {
            if uprime.get(t) {
                mask = mask.with_bit(i, true);
            }
        }
        let z_par = set.z_parity_dense(&mask);
        let twirled = &z_par * &projected;
        let px = set.x_projector_dense(&r_slots, &uprime.xor(u));
        let image = &px * &twirled;
        rhs += twirled.dotc(&image).re;
    }
    rhs /= (1usize << r_slots.len()) as f64;
    Ok((lhs, rhs))
}

/// Both sides of the identity for every outcome (u, v) at once. The
/// extracted state and the dense projectors are built once and reused, so
/// this is the form the experiment harness calls in a trial loop.
pub fn verify_extracted_claim_all(
    set: &ObservableSet,
    psi: &PureState,
    h: &Bits,
) -> Result<Vec<(Bits, Bits, f64, f64)>> {
    let n = set.n();
    assert_eq!(h.len(), n);
    let (r_slots, s_slots) = basis_split(h);
    let tau = super::extract_state(set, psi)?;
    let amps = DVector::from_column_slice(psi.amplitudes());

    let x_projs: Vec<CMat> =
        Bits::all(r_slots.len()).map(|o| set.x_projector_dense(&r_slots, &o)).collect();
    let z_parities: Vec<CMat> = Bits::all(r_slots.len())
        .map(|uprime| {
            let mut mask = Bits::zeros(n);
            for (t, &i) in r_slots.iter().enumerate() {
                if uprime.get(t) {
                    mask = mask.with_bit(i, true);
                }
            }
            set.z_parity_dense(&mask)
        })
        .collect();

    let mut out = Vec::new();
    for v in Bits::all(s_slots.len()) {
        let pz = set.z_projector_dense(&s_slots, &v);
        let projected = &pz * &amps;
        let twirled: Vec<DVector<Complex64>> =
            z_parities.iter().map(|zp| zp * &projected).collect();
        for u in Bits::all(r_slots.len()) {
            let proj = pauli_outcome_projector(n, &r_slots, &u, &s_slots, &v);
            let lhs = (0..tau.dim())
                .map(|r| {
                    (0..tau.dim())
                        .map(|c| proj[(r, c)] * tau.operator()[(c, r)])
                        .sum::<Complex64>()
                })
                .sum::<Complex64>()
                .re;
            let mut rhs = 0.0;
            for uprime in Bits::all(r_slots.len()) {
                let w = &twirled[uprime.index()];
                let image = &x_projs[uprime.xor(&u).index()] * w;
                rhs += w.dotc(&image).re;
            }
            rhs /= (1usize << r_slots.len()) as f64;
            out.push((u, v, lhs, rhs));
        }
    }
    Ok(out)
}

/// E_{x∼dist} (−1)^{x_j} ⟨x_{∖j}| M |x_{∖j}⟩ for both distributions. M must
/// be a binary-POVM element on the remaining bits: Hermitian with spectrum
/// inside [0, 1].
pub fn signed_statistic(
    dist0: &OutcomeDistribution,
    dist1: &OutcomeDistribution,
    m: &CMat,
    j: usize,
) -> Result<(f64, f64)> {
    let n = dist0.bit_len();
    assert_eq!(dist1.bit_len(), n);
    assert!(j < n);
    if m.nrows() != 1 << (n - 1) || !povm_element_in_range(m) {
        return Err(ExtractError::PovmOutOfRange);
    }
    let stat = |d: &OutcomeDistribution| -> f64 {
        d.support()
            .map(|(x, p)| {
                let rest = drop_bit(&x, j);
                let sign = if x.get(j) { -1.0 } else { 1.0 };
                p * sign * m[(rest.index(), rest.index())].re
            })
            .sum()
    };
    Ok((stat(dist0), stat(dist1)))
}

fn drop_bit(x: &Bits, j: usize) -> Bits {
    let mut out = Bits::zeros(x.len() - 1);
    let mut t = 0;
    for i in 0..x.len() {
        if i != j {
            out = out.with_bit(t, x.get(i));
            t += 1;
        }
    }
    out
}

fn povm_element_in_range(m: &CMat) -> bool {
    if !is_hermitian(m, tol::OPERATOR) {
        return false;
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::linalg::SymmetricEigen::new(herm);
    eig.eigenvalues.iter().all(|&e| e > -tol::OPERATOR && e < 1.0 + tol::OPERATOR)
}
