//! Seeded random instances: Haar unitaries, row contractions, minimal
//! liftings and a few structured non-c.n.c. tuples.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lifting::{build_lifting, Lifting};
use crate::numlin::{
    block_diag, cx, hstack, identity, op_norm, re, scale, zeros, CMatrix,
};
use crate::rowcon::{defects, RowContraction};

pub type TestRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for sub-case `index` derived from a master seed (splitmix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_complex(rng: &mut TestRng) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    cx(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> CMatrix {
    let mut m = zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = random_complex(rng);
        }
    }
    m
}

pub fn random_hermitian(rng: &mut TestRng, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    (&g + g.adjoint()) * re(0.5)
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase fix).
pub fn random_unitary(rng: &mut TestRng, n: usize) -> CMatrix {
    if n == 0 {
        return zeros(0, 0);
    }
    let g = random_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { re(1.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Random row contraction with `‖T̲‖ = norm`.
pub fn random_row_contraction(rng: &mut TestRng, n: usize, d: usize, norm: f64) -> RowContraction {
    let row = random_matrix(rng, n, n * d);
    let s = op_norm(&row);
    let row = if s > 0.0 { scale(&row, norm / s) } else { row };
    RowContraction::from_row(&row, d).expect("shapes are consistent")
}

/// Random row contraction with norm drawn uniformly from `[lo, hi]`.
pub fn random_strict_row_contraction(
    rng: &mut TestRng,
    n: usize,
    d: usize,
    lo: f64,
    hi: f64,
) -> RowContraction {
    let norm = rng.random_range(lo..=hi);
    random_row_contraction(rng, n, d, norm)
}

/// Random matrix with operator norm `norm`.
pub fn random_contraction(rng: &mut TestRng, rows: usize, cols: usize, norm: f64) -> CMatrix {
    let m = random_matrix(rng, rows, cols);
    let s = op_norm(&m);
    if s > 0.0 {
        scale(&m, norm / s)
    } else {
        m
    }
}

/// Row contraction that is not c.n.c.: a unitary `k×k` corner (arity 1
/// extended by zero blocks) beside a strict random part.
pub fn random_non_cnc(rng: &mut TestRng, n: usize, d: usize, k: usize) -> RowContraction {
    assert!(k >= 1 && k <= n);
    let u = random_unitary(rng, k);
    let strict = random_row_contraction(rng, n - k, d, 0.7);
    let w = random_unitary(rng, n);
    let blocks: Vec<CMatrix> = (0..d)
        .map(|i| {
            let corner = if i == 0 { u.clone() } else { zeros(k, k) };
            let b = block_diag(&[&corner, strict.block(i)]);
            &w * b * w.adjoint()
        })
        .collect();
    RowContraction::new(blocks).expect("valid blocks")
}

/// Random minimal lifting: strict `C` and `A` (so `A` is c.n.c.) linked by a
/// random contraction `γ` that is injective on `𝔇_{*,A}`.
pub fn random_minimal_lifting(rng: &mut TestRng, n_c: usize, n_a: usize, d: usize) -> Lifting {
    assert!(n_a <= n_c * d, "injective γ needs dim H_A ≤ d·dim H_C");
    let c = random_strict_row_contraction(rng, n_c, d, 0.3, 0.9);
    let a = random_strict_row_contraction(rng, n_a, d, 0.3, 0.9);
    let k_c = defects(&c, crate::numlin::DEFAULT_RANK_TOL).unwrap().dim_d();
    let k_a = defects(&a, crate::numlin::DEFAULT_RANK_TOL).unwrap().dim_dstar();
    let norm = rng.random_range(0.4..=0.95);
    let gamma = random_contraction(rng, k_c, k_a, norm);
    build_lifting(&c, &a, &gamma).expect("random lifting is valid")
}

/// Random minimal lifting whose link contraction is an isometry (so the
/// defect `D_{*,γ}` has the largest possible kernel).
pub fn random_isometric_link_lifting(
    rng: &mut TestRng,
    n_c: usize,
    n_a: usize,
    d: usize,
) -> Lifting {
    let c = random_strict_row_contraction(rng, n_c, d, 0.3, 0.9);
    let a = random_strict_row_contraction(rng, n_a, d, 0.3, 0.9);
    let k_c = n_c * d;
    let u = random_unitary(rng, k_c);
    let gamma = u.columns(0, n_a).into_owned();
    build_lifting(&c, &a, &gamma).expect("random lifting is valid")
}

/// `[T_1 … T_d]` conjugated blockwise by `u`.
pub fn conjugate_row(t: &RowContraction, u: &CMatrix) -> RowContraction {
    RowContraction::new(t.blocks().iter().map(|b| u * b * u.adjoint()).collect())
        .expect("conjugation keeps shapes")
}

/// Random vector on the unit sphere of `C^n`.
pub fn random_unit_vector(rng: &mut TestRng, n: usize) -> CMatrix {
    let v = random_matrix(rng, n, 1);
    let nrm = v.norm();
    v / re(nrm)
}

/// Identity padded beside zeros: the `n × nd` row `[I, 0, …, 0]`.
pub fn first_block_row(n: usize, d: usize) -> CMatrix {
    let mut parts = vec![identity(n)];
    parts.extend((1..d).map(|_| zeros(n, n)));
    let refs: Vec<&CMatrix> = parts.iter().collect();
    hstack(n, &refs)
}
