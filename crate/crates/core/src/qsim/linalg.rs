use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::tol;

pub type CMat = DMatrix<Complex64>;

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn hadamard() -> CMat {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMat::from_row_slice(2, 2, &[s, s, s, -s])
}

pub fn pauli_x() -> CMat {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    CMat::from_row_slice(2, 2, &[z, o, o, z])
}

pub fn pauli_z() -> CMat {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    CMat::from_row_slice(2, 2, &[o, z, z, -o])
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let d = m.nrows();
    (m.adjoint() * m - identity(d)).iter().all(|c| c.norm() <= tol * d as f64)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|c| c.norm() <= tol)
}

pub fn is_projector(m: &CMat, tol: f64) -> bool {
    is_hermitian(m, tol) && (m * m - m).iter().all(|c| c.norm() <= tol)
}

/// Embed a `k`-qubit operator into a `total`-qubit space.
///
/// Bit `t` of the small operator's index corresponds to global qubit
/// `targets[t]`. Only feasible for small `total`; the simulator applies
/// operators directly to states instead of materializing embeddings above
/// 14 qubits.
pub fn embed_operator(op: &CMat, targets: &[usize], total: usize) -> CMat {
    assert!(total <= 14, "refusing to materialize an operator on {total} qubits");
    let k = targets.len();
    assert_eq!(op.nrows(), 1 << k);
    let dim = 1usize << total;
    let mut out = CMat::zeros(dim, dim);
    let extract = |idx: usize| -> usize {
        targets
            .iter()
            .enumerate()
            .fold(0usize, |acc, (t, &q)| acc | (((idx >> q) & 1) << t))
    };
    let target_mask: usize = targets.iter().map(|&q| 1usize << q).sum();
    for col in 0..dim {
        let rest = col & !target_mask;
        let sub_col = extract(col);
        for sub_row in 0..(1 << k) {
            let mut row = rest;
            for (t, &q) in targets.iter().enumerate() {
                if (sub_row >> t) & 1 == 1 {
                    row |= 1 << q;
                }
            }
            let v = op[(sub_row, sub_col)];
            if v.norm() > 0.0 {
                out[(row, col)] += v;
            }
        }
    }
    out
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // fix the phase ambiguity so the distribution is Haar
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    debug_assert!(is_unitary(&q, tol::OPERATOR));
    q
}

/// Haar-random pure state amplitudes.
pub fn random_state_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= norm;
    }
    v
}
