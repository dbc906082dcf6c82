//! Contractive liftings `E_i = [[C_i, 0], [B_i, A_i]]` of `C` by `A`, the
//! link contraction `γ`, the unitary `σ`, and the characteristic function
//! `θ_{C,E}` computed two ways.
//!
//! Defect spaces are handled in the coordinates of their range bases. The
//! maps `E_i` act on `H_C ⊕ H_A`, so `D_E` lives on `⊕^d(H_C ⊕ H_A)`; the
//! block formulas for `σ` are written on `(⊕^d H_C) ⊕ (⊕^d H_A)`, related by
//! [`coordinate_permutation`].

use num_complex::Complex64;

use crate::colligation::Colligation;
use crate::error::{Error, Result};
use crate::fock::{prefix_table, series_eval_scalar, tail_bound, NCSeries};
use crate::numlin::{
    column_span, fro_norm, hstack, identity, inverse, isometry_residual,
    largest_invariant_subspace, null_space, op_norm, re, unitarity_residual, vstack, zeros,
    CMatrix, OrthonormalBasis, DEFAULT_KERNEL_TOL, DEFAULT_RANK_TOL,
};
use crate::rowcon::{
    char_symbol_from, defect_of, defects, inv_sqrt_diag, restricted_inverse, validate, DefectPair,
    RowContraction,
};

/// A lifting of `C` by `A` with coupling blocks `B_i : H_C → H_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    c: RowContraction,
    a: RowContraction,
    b: Vec<CMatrix>,
    e: RowContraction,
}

impl Lifting {
    pub fn new(c: RowContraction, a: RowContraction, b: Vec<CMatrix>) -> Result<Self> {
        let d = c.arity();
        if a.arity() != d || b.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "arities differ: C has {d}, A has {}, B has {}",
                a.arity(),
                b.len()
            )));
        }
        let (nc, na) = (c.dim(), a.dim());
        for bi in &b {
            if bi.shape() != (na, nc) {
                return Err(Error::ShapeMismatch(format!(
                    "B block {:?}, expected ({na}, {nc})",
                    bi.shape()
                )));
            }
            crate::numlin::ensure_finite(bi)?;
        }
        let blocks = (0..d)
            .map(|i| {
                let top = hstack(nc, &[c.block(i), &zeros(nc, na)]);
                let bottom = hstack(na, &[&b[i], a.block(i)]);
                vstack(nc + na, &[&top, &bottom])
            })
            .collect();
        let e = RowContraction::new(blocks)?;
        let r = validate(&e);
        if !r.is_contraction {
            return Err(Error::NotContraction { norm: r.norm });
        }
        Ok(Self { c, a, b, e })
    }

    /// Splits an assembled row contraction on `C^split ⊕ C^{n−split}`.
    pub fn from_e(e: &RowContraction, split: usize) -> Result<Self> {
        let n = e.dim();
        if split > n {
            return Err(Error::ShapeMismatch(format!("split {split} exceeds dimension {n}")));
        }
        let na = n - split;
        let mut c = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for blk in e.blocks() {
            let upper = blk.view((0, split), (split, na));
            if upper.iter().any(|z| z.norm() > 1e-12) {
                return Err(Error::ShapeMismatch(
                    "upper-right block of E is not zero".into(),
                ));
            }
            c.push(blk.view((0, 0), (split, split)).into_owned());
            b.push(blk.view((split, 0), (na, split)).into_owned());
            a.push(blk.view((split, split), (na, na)).into_owned());
        }
        Self::new(RowContraction::new(c)?, RowContraction::new(a)?, b)
    }

    pub fn c(&self) -> &RowContraction {
        &self.c
    }
    pub fn a(&self) -> &RowContraction {
        &self.a
    }
    pub fn e(&self) -> &RowContraction {
        &self.e
    }
    pub fn b_blocks(&self) -> &[CMatrix] {
        &self.b
    }
    pub fn arity(&self) -> usize {
        self.c.arity()
    }
    pub fn n_c(&self) -> usize {
        self.c.dim()
    }
    pub fn n_a(&self) -> usize {
        self.a.dim()
    }

    /// `B̲ = [B_1 … B_d] : H_C^d → H_A`.
    pub fn b_row(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.b.iter().collect();
        hstack(self.n_a(), &refs)
    }
}

/// The link contraction `γ : 𝔇_{*,A} → 𝔇_C` and the defect of `γ*`.
#[derive(Debug, Clone)]
pub struct GammaData {
    /// `γ` in defect coordinates (`dim 𝔇_C × dim 𝔇_{*,A}`).
    pub gamma: CMatrix,
    /// `γ` as a map `H_A → H_C^d` vanishing off `𝔇_{*,A}`.
    pub gamma_ambient: CMatrix,
    /// `D_{*,γ} = (I − γγ*)^{1/2}` in `𝔇_C` coordinates.
    pub dstar_gamma: CMatrix,
    /// Basis of `𝔇_{*,γ}` inside `𝔇_C` coordinates.
    pub basis_dstar_gamma: OrthonormalBasis,
    pub mu_dstar_gamma: Vec<f64>,
    /// `‖B̲* − D_C γ D_{*,A}‖`.
    pub residual: f64,
    pub defects_c: DefectPair,
    pub defects_a: DefectPair,
}

/// `E` with `B̲ = D_{*,A} γ* D_C`, `γ` given in defect coordinates.
pub fn build_lifting(c: &RowContraction, a: &RowContraction, gamma: &CMatrix) -> Result<Lifting> {
    let dc = defects(c, DEFAULT_RANK_TOL)?;
    let da = defects(a, DEFAULT_RANK_TOL)?;
    if gamma.shape() != (dc.dim_d(), da.dim_dstar()) {
        return Err(Error::ShapeMismatch(format!(
            "γ is {:?}, expected ({}, {})",
            gamma.shape(),
            dc.dim_d(),
            da.dim_dstar()
        )));
    }
    let norm = op_norm(gamma);
    if norm > 1.0 + 1e-10 {
        return Err(Error::GammaNotContractive { norm });
    }
    let b_row = &da.dstar * da.q_dstar() * gamma.adjoint() * dc.q_d().adjoint() * &dc.d;
    let nc = c.dim();
    let b = (0..c.arity())
        .map(|j| b_row.columns(j * nc, nc).into_owned())
        .collect();
    Lifting::new(c.clone(), a.clone(), b)
}

pub fn extract_gamma(e: &Lifting, rank_tol: f64) -> Result<GammaData> {
    let dc = defects(&e.c, rank_tol)?;
    let da = defects(&e.a, rank_tol)?;
    let b_row = e.b_row();
    let gamma_ambient = dc.d_inv() * b_row.adjoint() * da.dstar_inv();
    let residual = fro_norm(&(b_row.adjoint() - &dc.d * &gamma_ambient * &da.dstar));
    if residual > 1e-9 * (1.0 + fro_norm(&b_row)) {
        return Err(Error::ResidualTooLarge {
            what: "B* = D_C γ D_{*,A}".into(),
            residual,
        });
    }
    let gamma = dc.q_d().adjoint() * &gamma_ambient * da.q_dstar();
    let k = gamma.nrows();
    let (dstar_gamma, basis, mu) = defect_of(&(identity(k) - &gamma * gamma.adjoint()), rank_tol)?;
    Ok(GammaData {
        gamma,
        gamma_ambient,
        dstar_gamma,
        basis_dstar_gamma: basis,
        mu_dstar_gamma: mu,
        residual,
        defects_c: dc,
        defects_a: da,
    })
}

#[derive(Debug, Clone)]
pub struct ResolvingReport {
    pub resolving: bool,
    /// Dimension of the largest `A_i*`-invariant subspace of `ker(γ D_{*,A})`.
    pub k1_dim: usize,
    /// Dimension of the largest `A_i*`-invariant subspace of `ker D_{*,A}`.
    pub k2_dim: usize,
    /// A unit vector in `K_1 ⊖ K_2` when not resolving.
    pub witness: Option<CMatrix>,
}

pub fn resolving_check(e: &Lifting) -> Result<ResolvingReport> {
    let g = extract_gamma(e, DEFAULT_RANK_TOL)?;
    let ops = e.a.adjoint_blocks();
    let da = &g.defects_a;
    let k1 = largest_invariant_subspace(
        &null_space(&(&g.gamma_ambient * &da.dstar), DEFAULT_KERNEL_TOL),
        &ops,
        DEFAULT_KERNEL_TOL,
    );
    let k2 = largest_invariant_subspace(&da.basis_dstar.complement(), &ops, DEFAULT_KERNEL_TOL);
    let resolving = k1.dim() <= k2.dim();
    let witness = if resolving {
        None
    } else {
        let rest = k1.matrix() - k2.projector() * k1.matrix();
        let best = (0..rest.ncols())
            .max_by(|&i, &j| {
                rest.column(i)
                    .norm()
                    .partial_cmp(&rest.column(j).norm())
                    .unwrap()
            })
            .unwrap();
        let v = rest.columns(best, 1).into_owned();
        let nrm = v.norm();
        Some(v / re(nrm))
    };
    Ok(ResolvingReport {
        resolving,
        k1_dim: k1.dim(),
        k2_dim: k2.dim(),
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalityReport {
    pub minimal: bool,
    /// Dimension of the smallest `E_i`-invariant subspace containing `H_C`.
    pub reachable_dim: usize,
    pub total_dim: usize,
}

pub fn minimality_check(e: &Lifting) -> MinimalityReport {
    let n = e.e.dim();
    let nc = e.n_c();
    let mut q = zeros(n, nc);
    for i in 0..nc {
        q[(i, i)] = re(1.0);
    }
    loop {
        let mut parts = vec![q.clone()];
        parts.extend(e.e.blocks().iter().map(|x| x * &q));
        let refs: Vec<&CMatrix> = parts.iter().collect();
        let next = column_span(&hstack(n, &refs), 1e-10);
        if next.dim() == q.ncols() {
            break;
        }
        q = next.matrix().clone();
    }
    MinimalityReport {
        minimal: q.ncols() == n,
        reachable_dim: q.ncols(),
        total_dim: n,
    }
}

/// Permutation matrix `P` with `P·x` reordering `⊕^d(H_C ⊕ H_A)` into
/// `(⊕^d H_C) ⊕ (⊕^d H_A)`.
pub fn coordinate_permutation(n_c: usize, n_a: usize, d: usize) -> CMatrix {
    let ne = n_c + n_a;
    let mut p = zeros(ne * d, ne * d);
    for i in 0..d {
        for k in 0..n_c {
            p[(i * n_c + k, i * ne + k)] = re(1.0);
        }
        for k in 0..n_a {
            p[(d * n_c + i * n_a + k, i * ne + n_c + k)] = re(1.0);
        }
    }
    p
}

/// The unitary `σ : 𝔇_E → 𝔇_{*,γ} ⊕ 𝔇_A` and the data it is built from.
#[derive(Debug, Clone)]
pub struct SigmaMap {
    /// `σ` in coordinates: rows `𝔇_{*,γ}` then `𝔇_A`, columns `𝔇_E`.
    pub sigma: CMatrix,
    /// `σ D_E` as a map on `⊕^d(H_C ⊕ H_A)`.
    pub sigma_de: CMatrix,
    /// `‖(σD_E)*(σD_E) − D_E²‖`.
    pub isometry_residual: f64,
    pub unitarity_residual: f64,
    pub dim_dstar_gamma: usize,
    pub dim_d_a: usize,
    pub gamma: GammaData,
    pub defects_e: DefectPair,
}

impl SigmaMap {
    /// `σ` on the ambient space: `σ·Q_E*`.
    pub fn sigma_ambient(&self) -> CMatrix {
        &self.sigma * self.defects_e.q_d().adjoint()
    }

    /// Rows of `σ` landing in `𝔇_{*,γ}`.
    pub fn sigma_gamma(&self) -> CMatrix {
        self.sigma.rows(0, self.dim_dstar_gamma).into_owned()
    }

    /// Rows of `σ` landing in `𝔇_A`.
    pub fn sigma_a(&self) -> CMatrix {
        self.sigma
            .rows(self.dim_dstar_gamma, self.dim_d_a)
            .into_owned()
    }
}

pub fn sigma_map(e: &Lifting) -> Result<SigmaMap> {
    let g = extract_gamma(e, DEFAULT_RANK_TOL)?;
    let de = defects(&e.e, DEFAULT_RANK_TOL)?;
    let (nc, na, d) = (e.n_c(), e.n_a(), e.arity());
    let dc = &g.defects_c;
    let da = &g.defects_a;
    let qg = g.basis_dstar_gamma.matrix();
    let qc_dc = dc.q_d().adjoint() * &dc.d;
    let top_left = qg.adjoint() * &g.dstar_gamma * &qc_dc;
    let bottom_left = -(da.q_d().adjoint()
        * e.a.column_adjoint()
        * da.q_dstar()
        * g.gamma.adjoint()
        * &qc_dc);
    let bottom_right = da.q_d().adjoint() * &da.d;
    let (kg, ka) = (qg.ncols(), da.dim_d());
    let top = hstack(kg, &[&top_left, &zeros(kg, na * d)]);
    let bottom = hstack(ka, &[&bottom_left, &bottom_right]);
    let m = vstack((nc + na) * d, &[&top, &bottom]) * coordinate_permutation(nc, na, d);
    let d2 = &de.d * &de.d;
    let iso = fro_norm(&(m.adjoint() * &m - d2));
    if iso > 1e-9 {
        return Err(Error::NotWellDefined {
            what: "‖σD_E v‖ = ‖D_E v‖".into(),
            residual: iso,
        });
    }
    let sigma = &m * de.q_d() * inv_sqrt_diag(&de.mu_d);
    let unit = if sigma.nrows() == sigma.ncols() {
        unitarity_residual(&sigma)
    } else {
        f64::INFINITY
    };
    if unit > 1e-9 {
        return Err(Error::NotWellDefined {
            what: format!(
                "σ unitarity ({}×{})",
                sigma.nrows(),
                sigma.ncols()
            ),
            residual: unit,
        });
    }
    Ok(SigmaMap {
        sigma,
        sigma_de: m,
        isometry_residual: iso,
        unitarity_residual: unit,
        dim_dstar_gamma: kg,
        dim_d_a: ka,
        gamma: g,
        defects_e: de,
    })
}

/// `θ_{C,E} = [D_{*,γ}, (I⊗γ)θ_A]·σ` in defect coordinates
/// (`𝔇_E → 𝔇_C`).
pub fn lifting_char_decomposed(e: &Lifting, degree: usize) -> Result<NCSeries> {
    let sm = sigma_map(e)?;
    lifting_char_decomposed_from(e, &sm, degree)
}

pub fn lifting_char_decomposed_from(e: &Lifting, sm: &SigmaMap, degree: usize) -> Result<NCSeries> {
    let g = &sm.gamma;
    let theta_a = char_symbol_from(&e.a, &g.defects_a, degree)?;
    let kc = g.gamma.nrows();
    let first = &g.dstar_gamma * g.basis_dstar_gamma.matrix();
    let mut s = NCSeries::zero(e.arity(), sm.sigma.ncols(), kc, degree)?;
    for k in 0..theta_a.len() {
        let right = &g.gamma * theta_a.coeff_at(k);
        let left = if k == 0 {
            first.clone()
        } else {
            zeros(kc, sm.dim_dstar_gamma)
        };
        *s.coeff_at_mut(k) = hstack(kc, &[&left, &right]) * &sm.sigma;
    }
    Ok(s)
}

/// `θ_{C,E}` assembled from its action on `D_E i_j(h_c)` and `D_E i_j(h_a)`,
/// without reference to `σ`:
///
/// * `h_c`: `D_C i_j − γD_{*,A}B_j` at `∅`, `−γD_{*,A}A_α*B_j` at `α ≠ ∅`;
/// * `h_a`: `−γA̲D_A i_j` at `∅`, `γD_{*,A}A_β*P_kD_A² i_j` at `(k)·β`.
pub fn lifting_char_direct(e: &Lifting, degree: usize) -> Result<NCSeries> {
    let g = extract_gamma(e, DEFAULT_RANK_TOL)?;
    let de = defects(&e.e, DEFAULT_RANK_TOL)?;
    let (nc, na, d) = (e.n_c(), e.n_a(), e.arity());
    let ne = nc + na;
    let dc = &g.defects_c;
    let da = &g.defects_a;
    let qc = dc.q_d().adjoint();
    let kc = qc.nrows();
    let gd = &qc * &g.gamma_ambient * &da.dstar;
    let arow = e.a.row();
    let da2 = identity(na * d) - arow.adjoint() * &arow;
    let adj = e.a.adjoint_blocks();

    let mut k = NCSeries::zero(d, ne * d, kc, degree)?;
    let words = k.words();
    let parents = prefix_table(&words, d);
    for j in 0..d {
        let bj = &e.b[j];
        let col_c = j * ne;
        let col_a = j * ne + nc;
        // h_c part
        let k0 = &qc * (dc.d.columns(j * nc, nc) - &g.gamma_ambient * &da.dstar * bj);
        k.coeff_at_mut(0).columns_mut(col_c, nc).copy_from(&k0);
        let mut y: Vec<CMatrix> = vec![zeros(na, nc); words.len()];
        y[0] = bj.clone();
        for (w, word) in words.iter().enumerate().skip(1) {
            let (parent, last) = parents[w].unwrap();
            y[w] = &adj[last - 1] * &y[parent];
            let _ = word;
            let blk = -(&gd * &y[w]);
            k.coeff_at_mut(w).columns_mut(col_c, nc).copy_from(&blk);
        }
        // h_a part
        let k0 = -(&qc * &g.gamma_ambient * &arow * da_columns(&da.d, j, na));
        k.coeff_at_mut(0).columns_mut(col_a, na).copy_from(&k0);
        let mut z: Vec<CMatrix> = vec![zeros(na, na); words.len()];
        for (w, word) in words.iter().enumerate().skip(1) {
            let (parent, last) = parents[w].unwrap();
            z[w] = if word.len() == 1 {
                da2.view(((last - 1) * na, j * na), (na, na)).into_owned()
            } else {
                &adj[last - 1] * &z[parent]
            };
            let blk = &gd * &z[w];
            k.coeff_at_mut(w).columns_mut(col_a, na).copy_from(&blk);
        }
    }
    k.apply_input(&(de.q_d() * inv_sqrt_diag(&de.mu_d)))
}

fn da_columns(m: &CMatrix, j: usize, na: usize) -> CMatrix {
    m.columns(j * na, na).into_owned()
}

/// The colligation `V = [[A̲*, D_A P σ], [γ D_{*,A}, D_{*,γ} P σ − γ A̲ P σ]]`
/// with state `H_A`, input `𝔇_E` and output `𝔇_C` (defect coordinates).
pub fn lifting_colligation(e: &Lifting) -> Result<Colligation> {
    let sm = sigma_map(e)?;
    lifting_colligation_from(e, &sm)
}

pub fn lifting_colligation_from(e: &Lifting, sm: &SigmaMap) -> Result<Colligation> {
    let g = &sm.gamma;
    let da = &g.defects_a;
    let sa = sm.sigma_a();
    let sg = sm.sigma_gamma();
    let gq = &g.gamma * da.q_dstar().adjoint();
    Colligation::new(
        e.a.adjoint_blocks(),
        &da.d * da.q_d() * &sa,
        &gq * &da.dstar,
        &g.dstar_gamma * g.basis_dstar_gamma.matrix() * &sg - &gq * e.a.row() * da.q_d() * &sa,
    )
}

/// Coefficients mapped back to ambient coordinates: `Q_C c_w Q_E*`.
pub fn ambient_symbol(s: &NCSeries, sm: &SigmaMap) -> Result<NCSeries> {
    let out = crate::fock::series_apply_output(sm.gamma.defects_c.q_d(), s)?;
    out.apply_input(&sm.defects_e.q_d().adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBoundReport {
    pub lambda: Complex64,
    /// `‖θ_{C,E}(λ)‖` of the truncated series.
    pub lhs: f64,
    /// `‖D_{*,γ}‖ + ‖(A − λ)(I − λ̄A)^{-1}‖`.
    pub rhs: f64,
    pub tail: f64,
    /// `rhs + tail − lhs`.
    pub slack: f64,
    pub holds: bool,
}

pub fn norm_bound_check(e: &Lifting, lambda: Complex64, degree: usize) -> Result<NormBoundReport> {
    if e.arity() != 1 {
        return Err(Error::ArityNotOne(e.arity()));
    }
    if lambda.norm() >= 1.0 {
        return Err(Error::BadParameter(format!("|λ| = {} ≥ 1", lambda.norm())));
    }
    let sm = sigma_map(e)?;
    let theta = lifting_char_decomposed_from(e, &sm, degree)?;
    let lhs = op_norm(&series_eval_scalar(&theta, lambda)?);
    let na = e.n_a();
    let a = e.a.block(0);
    let blaschke = (a - identity(na) * lambda) * inverse(&(identity(na) - a * lambda.conj()))?;
    let rhs = op_norm(&sm.gamma.dstar_gamma) + op_norm(&blaschke);
    let tail = tail_bound(degree, lambda.norm());
    let slack = rhs + tail - lhs;
    Ok(NormBoundReport {
        lambda,
        lhs,
        rhs,
        tail,
        slack,
        holds: slack >= -1e-8,
    })
}

/// `‖Q*Q − I‖` for the columns of `σ`, exposed for reports.
pub fn sigma_isometry_residual(sm: &SigmaMap) -> f64 {
    isometry_residual(&sm.sigma)
}

/// Restricted inverse `D_C^{-1}` on `𝔇_C`, used by the Möbius checks.
pub fn dc_inverse(g: &GammaData) -> CMatrix {
    restricted_inverse(g.defects_c.q_d(), &g.defects_c.mu_d)
}
