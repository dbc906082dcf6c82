//! Deciders for equivalence of symbols (`θ_1 = θ_2·v`), coincidence of
//! symbols (`Ũ·θ_1 = θ_2·U`) and unitary equivalence of row contractions.
//!
//! Confirmations carry the unitaries that certify them. Refutations only come
//! from unitary invariants; a solver that fails to converge says `Unknown`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::colligation::Colligation;
use crate::error::{Error, Result};
use crate::fock::NCSeries;
use crate::numlin::{
    cx, fro_norm, hermitian_eig, identity, kron, pinv, polar_unitary, singular_values,
    unitarity_residual, vstack, zeros, CMatrix, DEFAULT_RANK_TOL,
};
use crate::rowcon::RowContraction;
use crate::testgen::{derive_seed, random_unitary, rng_from_seed, TestRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    RefutedByInvariant,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct EquivalenceResult {
    pub status: Verdict,
    /// `[v]`, `[U, Ũ]` or `[U]` depending on the solver; empty when refuted.
    pub unitaries: Vec<CMatrix>,
    pub residual: f64,
    pub tol: f64,
    /// Human-readable invariant certificate when refuted.
    pub certificate: Option<String>,
    /// Index of the restart that produced the best candidate.
    pub restart: usize,
    /// Largest increase of the objective over any half-step.
    pub max_increase: f64,
}

impl EquivalenceResult {
    fn refuted(certificate: String, tol: f64) -> Self {
        Self {
            status: Verdict::RefutedByInvariant,
            unitaries: Vec::new(),
            residual: f64::INFINITY,
            tol,
            certificate: Some(certificate),
            restart: 0,
            max_increase: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    /// `None` selects `1e-8·(1 + Σ‖c_w‖)`.
    pub tol: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            iters: 500,
            seed: 0,
            tol: None,
        }
    }
}

fn default_tol(s: &NCSeries) -> f64 {
    1e-8 * (1.0 + s.coeff_norm_sum())
}

fn sv_mismatch(a: &[f64], b: &[f64], tol: f64) -> Option<f64> {
    let n = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let dev = (0..n)
        .map(|i| (get(a, i) - get(b, i)).abs())
        .fold(0.0, f64::max);
    (dev > tol).then_some(dev)
}

fn check_series_pair(s1: &NCSeries, s2: &NCSeries) -> Result<()> {
    if s1.arity() != s2.arity() || s1.degree() != s2.degree() || s1.out_dim() != s2.out_dim() {
        return Err(Error::ShapeMismatch(format!(
            "series (d={}, N={}, out={}) vs (d={}, N={}, out={})",
            s1.arity(),
            s1.degree(),
            s1.out_dim(),
            s2.arity(),
            s2.degree(),
            s2.out_dim()
        )));
    }
    Ok(())
}

fn stacked(s: &NCSeries) -> CMatrix {
    let refs: Vec<&CMatrix> = s.coeffs().iter().collect();
    vstack(s.in_dim(), &refs)
}

/// Decides `θ_1 = θ_2·v` for a unitary `v`.
pub fn equivalence_solve(s1: &NCSeries, s2: &NCSeries, tol: Option<f64>) -> Result<EquivalenceResult> {
    check_series_pair(s1, s2)?;
    let tol = tol.unwrap_or_else(|| default_tol(s1));
    if s1.in_dim() != s2.in_dim() {
        return Ok(EquivalenceResult::refuted(
            format!("input dimensions {} ≠ {}", s1.in_dim(), s2.in_dim()),
            tol,
        ));
    }
    let (m1, m2) = (stacked(s1), stacked(s2));
    if let Some(dev) = sv_mismatch(&singular_values(&m1), &singular_values(&m2), tol) {
        return Ok(EquivalenceResult::refuted(
            format!("singular values of stacked coefficients differ by {dev:.3e}"),
            tol,
        ));
    }
    let v = polar_unitary(&(m2.adjoint() * &m1))?;
    let residual = fro_norm(&(&m1 - &m2 * &v));
    let status = if residual <= tol && unitarity_residual(&v) < 1e-9 {
        Verdict::Confirmed
    } else {
        Verdict::Unknown
    };
    Ok(EquivalenceResult {
        status,
        unitaries: vec![v],
        residual,
        tol,
        certificate: None,
        restart: 0,
        max_increase: 0.0,
    })
}

fn random_cvec(rng: &mut TestRng, n: usize) -> Vec<num_complex::Complex64> {
    (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            cx(a, b)
        })
        .collect()
}

/// Solutions `(X_1, …)` of a homogeneous linear system given by its Gram
/// matrix, combined with random weights and split into square blocks.
fn intertwiner_guess(gram: &CMatrix, shapes: &[usize], rng: &mut TestRng) -> Result<Option<Vec<CMatrix>>> {
    let eig = hermitian_eig(gram)?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(1.0);
    let basis = eig.select(|l| l <= 1e-10 * top);
    if basis.ncols() == 0 {
        return Ok(None);
    }
    let w = random_cvec(rng, basis.ncols());
    let z = &basis * CMatrix::from_vec(w.len(), 1, w);
    let mut out = Vec::new();
    let mut off = 0;
    for &n in shapes {
        let mut x = zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                x[(i, j)] = z[(off + i + j * n, 0)];
            }
        }
        off += n * n;
        out.push(polar_unitary(&x)?);
    }
    Ok(Some(out))
}

fn coincidence_objective(s1: &NCSeries, s2: &NCSeries, u: &CMatrix, ut: &CMatrix) -> f64 {
    s1.coeffs()
        .iter()
        .zip(s2.coeffs())
        .map(|(c1, c2)| fro_norm(&(ut * c1 - c2 * u)).powi(2))
        .sum()
}

/// Decides `Ũ·(θ_1)_w = (θ_2)_w·U` for unitaries `U` (inputs), `Ũ` (outputs).
///
/// Restart 0 starts from a random element of the solution space of the
/// linearized equations; later restarts start from random unitaries.
pub fn coincidence_solve(s1: &NCSeries, s2: &NCSeries, opts: &SolverOptions) -> Result<EquivalenceResult> {
    if s1.arity() != s2.arity() || s1.degree() != s2.degree() {
        return Err(Error::ShapeMismatch("arity or degree differ".into()));
    }
    let tol = opts.tol.unwrap_or_else(|| default_tol(s1));
    if s1.in_dim() != s2.in_dim() || s1.out_dim() != s2.out_dim() {
        return Ok(EquivalenceResult::refuted(
            format!(
                "dimensions {}→{} vs {}→{}",
                s1.in_dim(),
                s1.out_dim(),
                s2.in_dim(),
                s2.out_dim()
            ),
            tol,
        ));
    }
    for (k, (c1, c2)) in s1.coeffs().iter().zip(s2.coeffs()).enumerate() {
        if let Some(dev) = sv_mismatch(&singular_values(c1), &singular_values(c2), tol) {
            return Ok(EquivalenceResult::refuted(
                format!("singular values at word {} differ by {dev:.3e}", s1.words()[k]),
                tol,
            ));
        }
    }
    let (p, q) = (s1.in_dim(), s1.out_dim());

    let mut best: Option<(f64, usize, CMatrix, CMatrix)> = None;
    let mut max_increase: f64 = 0.0;
    for r in 0..opts.restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(opts.seed, r as u64));
        let start = if r == 0 {
            intertwiner_guess(&coincidence_gram(s1, s2), &[p, q], &mut rng)?
        } else {
            None
        };
        let (mut u, mut ut) = match start {
            Some(v) => (v[0].clone(), v[1].clone()),
            None => (random_unitary(&mut rng, p), random_unitary(&mut rng, q)),
        };
        let mut j = coincidence_objective(s1, s2, &u, &ut);
        for _ in 0..opts.iters {
            if j.sqrt() <= tol * 1e-3 {
                break;
            }
            let mut acc = zeros(q, q);
            for (c1, c2) in s1.coeffs().iter().zip(s2.coeffs()) {
                acc += c2 * &u * c1.adjoint();
            }
            ut = polar_unitary(&acc)?;
            let j1 = coincidence_objective(s1, s2, &u, &ut);
            let mut acc = zeros(p, p);
            for (c1, c2) in s1.coeffs().iter().zip(s2.coeffs()) {
                acc += c2.adjoint() * &ut * c1;
            }
            u = polar_unitary(&acc)?;
            let j2 = coincidence_objective(s1, s2, &u, &ut);
            max_increase = max_increase.max(j1 - j).max(j2 - j1);
            let done = (j - j2).abs() <= 1e-15 * (1.0 + j);
            j = j2;
            if done {
                break;
            }
        }
        let res = j.max(0.0).sqrt();
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, r, u, ut));
        }
        if res <= tol {
            break;
        }
    }
    let (residual, restart, u, ut) = best.unwrap();
    let ok = residual <= tol && unitarity_residual(&u) < 1e-9 && unitarity_residual(&ut) < 1e-9;
    Ok(EquivalenceResult {
        status: if ok { Verdict::Confirmed } else { Verdict::Unknown },
        unitaries: vec![u, ut],
        residual,
        tol,
        certificate: None,
        restart,
        max_increase,
    })
}

/// Gram matrix of `Ũc1_w − c2_wU = 0`, `Uc1_w* − c2_w*Ũ = 0` in the unknown
/// `[vec U; vec Ũ]`.
fn coincidence_gram(s1: &NCSeries, s2: &NCSeries) -> CMatrix {
    let (p, q) = (s1.in_dim(), s1.out_dim());
    let n = p * p + q * q;
    let mut g = zeros(n, n);
    let (ip, iq) = (identity(p), identity(q));
    for (c1, c2) in s1.coeffs().iter().zip(s2.coeffs()) {
        let mut l1 = zeros(q * p, n);
        l1.columns_mut(0, p * p).copy_from(&(-kron(&ip, c2)));
        l1.columns_mut(p * p, q * q).copy_from(&kron(&c1.transpose(), &iq));
        let mut l2 = zeros(p * q, n);
        l2.columns_mut(0, p * p).copy_from(&kron(&c1.conjugate(), &ip));
        l2.columns_mut(p * p, q * q).copy_from(&(-kron(&iq, &c2.adjoint())));
        g += l1.adjoint() * &l1 + l2.adjoint() * &l2;
    }
    g
}

fn rowcon_objective(t1: &RowContraction, t2: &RowContraction, u: &CMatrix) -> f64 {
    t1.blocks()
        .iter()
        .zip(t2.blocks())
        .map(|(a, b)| fro_norm(&(u * a - b * u)).powi(2))
        .sum()
}

fn rowcon_invariants(t: &RowContraction) -> (Vec<f64>, Vec<num_complex::Complex64>) {
    let row = t.row();
    let eig = hermitian_eig(&(&row * row.adjoint())).map(|e| e.values).unwrap_or_default();
    let d = t.arity();
    let mut traces = Vec::new();
    for i in 0..d {
        traces.push(t.block(i).trace());
        for j in 0..d {
            traces.push((t.block(i) * t.block(j)).trace());
            traces.push((t.block(i).adjoint() * t.block(j)).trace());
        }
    }
    (eig, traces)
}

/// Decides `U·T_i = T2_i·U` for a unitary `U`.
pub fn rowcon_unitary_equiv(
    t1: &RowContraction,
    t2: &RowContraction,
    opts: &SolverOptions,
) -> Result<EquivalenceResult> {
    if t1.dim() != t2.dim() || t1.arity() != t2.arity() {
        return Err(Error::ShapeMismatch(format!(
            "row contractions ({}, d={}) vs ({}, d={})",
            t1.dim(),
            t1.arity(),
            t2.dim(),
            t2.arity()
        )));
    }
    let scale: f64 = t1.blocks().iter().map(fro_norm).sum();
    let tol = opts.tol.unwrap_or(1e-8 * (1.0 + scale));
    let (e1, tr1) = rowcon_invariants(t1);
    let (e2, tr2) = rowcon_invariants(t2);
    if let Some(dev) = sv_mismatch(&e1, &e2, tol) {
        return Ok(EquivalenceResult::refuted(
            format!("spectra of ΣT_iT_i* differ by {dev:.3e}"),
            tol,
        ));
    }
    let dev = tr1
        .iter()
        .zip(&tr2)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if dev > tol {
        return Ok(EquivalenceResult::refuted(
            format!("traces of words of length ≤ 2 differ by {dev:.3e}"),
            tol,
        ));
    }

    let n = t1.dim();
    let gram = {
        let mut g = zeros(n * n, n * n);
        let i = identity(n);
        for (a, b) in t1.blocks().iter().zip(t2.blocks()) {
            let l1 = kron(&a.transpose(), &i) - kron(&i, b);
            let l2 = kron(&a.conjugate(), &i) - kron(&i, &b.adjoint());
            g += l1.adjoint() * &l1 + l2.adjoint() * &l2;
        }
        g
    };
    let mut best: Option<(f64, usize, CMatrix)> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(opts.seed, r as u64));
        let start = if r == 0 {
            intertwiner_guess(&gram, &[n], &mut rng)?
        } else {
            None
        };
        let mut u = match start {
            Some(v) => v[0].clone(),
            None => random_unitary(&mut rng, n),
        };
        let mut j = rowcon_objective(t1, t2, &u);
        for _ in 0..opts.iters {
            if j.sqrt() <= tol * 1e-3 {
                break;
            }
            let mut acc = zeros(n, n);
            for (a, b) in t1.blocks().iter().zip(t2.blocks()) {
                acc += b * &u * a.adjoint() + b.adjoint() * &u * a;
            }
            let next = polar_unitary(&acc)?;
            let jn = rowcon_objective(t1, t2, &next);
            if jn >= j {
                break;
            }
            u = next;
            j = jn;
        }
        let res = j.max(0.0).sqrt();
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, r, u));
        }
        if res <= tol {
            break;
        }
    }
    let (residual, restart, u) = best.unwrap();
    let ok = residual <= tol && unitarity_residual(&u) < 1e-9;
    Ok(EquivalenceResult {
        status: if ok { Verdict::Confirmed } else { Verdict::Unknown },
        unitaries: vec![u],
        residual,
        tol,
        certificate: None,
        restart,
        max_increase: 0.0,
    })
}

/// The state map `U` of two observable colligations whose transfer functions
/// satisfy `θ_1 = θ_2·v`, with the residuals of
/// `C_2U = C_1`, `A_{2,i}U = UA_{1,i}`, `B_{2,j}v = UB_{1,j}`, `D_2v = D_1`
/// and `‖U*U − I‖`.
#[derive(Debug, Clone)]
pub struct StateMap {
    pub u: CMatrix,
    pub residuals: [f64; 5],
}

pub fn colligation_state_map(w1: &Colligation, w2: &Colligation, v: &CMatrix) -> Result<StateMap> {
    if w1.arity() != w2.arity()
        || w1.state_dim() != w2.state_dim()
        || w1.out_dim() != w2.out_dim()
        || v.shape() != (w2.in_dim(), w1.in_dim())
    {
        return Err(Error::ShapeMismatch("colligation shapes differ".into()));
    }
    let n = w1.state_dim();
    let obs = |w: &Colligation| {
        let mut rows = vec![w.c().clone()];
        let mut frontier = vec![w.c().clone()];
        for _ in 0..n {
            let mut next = Vec::new();
            for x in &frontier {
                for a in w.a_blocks() {
                    next.push(x * a);
                }
            }
            rows.extend(next.iter().cloned());
            frontier = next;
        }
        let refs: Vec<&CMatrix> = rows.iter().collect();
        vstack(n, &refs)
    };
    let u = pinv(&obs(w2), DEFAULT_RANK_TOL) * obs(w1);
    let a_res = w1
        .a_blocks()
        .iter()
        .zip(w2.a_blocks())
        .map(|(a1, a2)| fro_norm(&(a2 * &u - &u * a1)))
        .fold(0.0, f64::max);
    let b_res = (0..w1.arity())
        .map(|j| fro_norm(&(w2.b_block(j) * v - &u * w1.b_block(j))))
        .fold(0.0, f64::max);
    let residuals = [
        fro_norm(&(w2.c() * &u - w1.c())),
        a_res,
        b_res,
        fro_norm(&(w2.d() * v - w1.d())),
        unitarity_residual(&u),
    ];
    Ok(StateMap { u, residuals })
}
