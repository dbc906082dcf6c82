//! Colligations `W = [[A, B], [C, D]] : H_1 ⊕ H_2 → H_1^d ⊕ H_3`, their
//! transfer functions, co-isometry and observability, and the structure
//! decomposition of co-isometric observable colligations.

use crate::error::{Error, Result};
use crate::fock::{fock_cached, neumann_oracle, prefix_table, NCSeries};
use crate::numlin::{
    coisometry_residual, ensure_finite, fro_norm, hstack, identity, largest_invariant_subspace,
    op_norm, psd_sqrt, re, unitarity_residual, vstack, zeros, CMatrix, OrthonormalBasis,
    DEFAULT_CLAMP_TOL, DEFAULT_KERNEL_TOL,
};
use crate::rowcon::{defect_of, defects, inv_sqrt_diag, DefectPair, RowContraction};

/// A colligation of arity `d`: `A` is stored as its `d` blocks `A_i`
/// (`n_1 × n_1`), `B` as the stacked `d·n_1 × n_2` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Colligation {
    a: Vec<CMatrix>,
    b: CMatrix,
    c: CMatrix,
    d: CMatrix,
}

impl Colligation {
    pub fn new(a: Vec<CMatrix>, b: CMatrix, c: CMatrix, d: CMatrix) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::BadParameter("arity must be at least 1".into()));
        }
        let n1 = c.ncols();
        let (n3, n2) = d.shape();
        for ai in &a {
            if ai.shape() != (n1, n1) {
                return Err(Error::ShapeMismatch(format!(
                    "A block {:?}, expected ({n1}, {n1})",
                    ai.shape()
                )));
            }
            ensure_finite(ai)?;
        }
        if b.shape() != (a.len() * n1, n2) {
            return Err(Error::ShapeMismatch(format!(
                "B is {:?}, expected ({}, {n2})",
                b.shape(),
                a.len() * n1
            )));
        }
        if c.nrows() != n3 {
            return Err(Error::ShapeMismatch(format!(
                "C has {} rows, D has {n3}",
                c.nrows()
            )));
        }
        ensure_finite(&b)?;
        ensure_finite(&c)?;
        ensure_finite(&d)?;
        Ok(Self { a, b, c, d })
    }

    /// Splits a full `(d·n_1 + n_3) × (n_1 + n_2)` matrix.
    pub fn from_matrix(w: &CMatrix, arity: usize, state_dim: usize, in_dim: usize) -> Result<Self> {
        let n1 = state_dim;
        if arity == 0 || w.ncols() != n1 + in_dim || w.nrows() < arity * n1 {
            return Err(Error::ShapeMismatch(format!(
                "colligation matrix {:?} incompatible with d={arity}, n1={n1}, n2={in_dim}",
                w.shape()
            )));
        }
        let n3 = w.nrows() - arity * n1;
        let a = (0..arity)
            .map(|i| w.view((i * n1, 0), (n1, n1)).into_owned())
            .collect();
        let b = w.view((0, n1), (arity * n1, in_dim)).into_owned();
        let c = w.view((arity * n1, 0), (n3, n1)).into_owned();
        let d = w.view((arity * n1, n1), (n3, in_dim)).into_owned();
        Self::new(a, b, c, d)
    }

    pub fn arity(&self) -> usize {
        self.a.len()
    }
    pub fn state_dim(&self) -> usize {
        self.c.ncols()
    }
    pub fn in_dim(&self) -> usize {
        self.d.ncols()
    }
    pub fn out_dim(&self) -> usize {
        self.d.nrows()
    }
    pub fn a_blocks(&self) -> &[CMatrix] {
        &self.a
    }
    pub fn b(&self) -> &CMatrix {
        &self.b
    }
    pub fn c(&self) -> &CMatrix {
        &self.c
    }
    pub fn d(&self) -> &CMatrix {
        &self.d
    }

    /// `B_j`, the `j`-th block of `B` (0-based).
    pub fn b_block(&self, j: usize) -> CMatrix {
        let n1 = self.state_dim();
        self.b.rows(j * n1, n1).into_owned()
    }

    /// Stacked `A : H_1 → H_1^d`.
    pub fn a_stacked(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.a.iter().collect();
        vstack(self.state_dim(), &refs)
    }

    /// The full block matrix `W`.
    pub fn matrix(&self) -> CMatrix {
        let top = hstack(self.arity() * self.state_dim(), &[&self.a_stacked(), &self.b]);
        let bottom = hstack(self.out_dim(), &[&self.c, &self.d]);
        vstack(self.state_dim() + self.in_dim(), &[&top, &bottom])
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix())
    }
}

/// `c_∅ = D`, `c_{(j,k_1,…,k_m)} = C A_{k_m} ⋯ A_{k_1} B_j`.
pub fn transfer_symbol(w: &Colligation, degree: usize) -> Result<NCSeries> {
    let d = w.arity();
    let (n1, p, q) = (w.state_dim(), w.in_dim(), w.out_dim());
    let mut s = NCSeries::zero(d, p, q, degree)?;
    *s.coeff_at_mut(0) = w.d.clone();
    let words = s.words();
    let parents = prefix_table(&words, d);
    let mut x: Vec<CMatrix> = vec![zeros(n1, p); words.len()];
    for (k, word) in words.iter().enumerate().skip(1) {
        let (parent, last) = parents[k].unwrap();
        x[k] = if word.len() == 1 {
            w.b_block(last - 1)
        } else {
            &w.a[last - 1] * &x[parent]
        };
        *s.coeff_at_mut(k) = &w.c * &x[k];
    }
    Ok(s)
}

/// `D + C(I − (R̲⊗I)(I⊗A))^{-1}(R̲⊗I)(I⊗B)` on the truncated Fock space.
pub fn transfer_oracle(w: &Colligation, degree: usize) -> Result<NCSeries> {
    let fock = fock_cached(w.arity(), degree)?;
    let b: Vec<CMatrix> = (0..w.arity()).map(|j| w.b_block(j)).collect();
    neumann_oracle(&fock, &w.a, &b, &w.c, &w.d)
}

/// `(‖WW* − I‖ < tol, ‖WW* − I‖)`.
pub fn is_coisometric(w: &Colligation, tol: f64) -> (bool, f64) {
    let r = coisometry_residual(&w.matrix());
    (r < tol, r)
}

/// `∩_α ker(C A_α)`: the largest subspace of `ker C` invariant under every
/// `A_i`. Empty iff `W` is observable.
pub fn unobservable_subspace(w: &Colligation) -> OrthonormalBasis {
    let start = crate::numlin::null_space(&w.c, DEFAULT_KERNEL_TOL);
    largest_invariant_subspace(&start, &w.a, DEFAULT_KERNEL_TOL)
}

/// Hypotheses recorded by [`structure_decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesesReport {
    pub coisometry_residual: f64,
    pub observable: bool,
    pub input_dim: usize,
    pub defect_dim: usize,
    pub output_dim: usize,
    /// Whether some `n ≥ 1` has `n(d−1) ≤ dim Y ≤ nd`.
    pub output_dim_condition: bool,
}

#[derive(Debug, Clone)]
pub struct StructureDecomposition {
    /// The recovered row contraction `A̲` (blocks `A_i*` of the basic
    /// operator).
    pub row: RowContraction,
    /// `γ : 𝔇_{*,A} → Y` in defect coordinates.
    pub gamma: CMatrix,
    /// `σ̃ : U → 𝔇_A` in defect coordinates.
    pub sigma_tilde: CMatrix,
    pub gamma_coisometry_residual: f64,
    pub sigma_unitarity_residual: f64,
    /// `‖D + γ A̲ σ̃‖` with the maps read in ambient coordinates.
    pub d_block_residual: f64,
    pub residual: f64,
    pub report: HypothesesReport,
}

fn output_dim_condition(d: usize, dim_y: usize) -> bool {
    if d == 1 {
        return true;
    }
    (1..=dim_y.max(1)).any(|n| n * (d - 1) <= dim_y && dim_y <= n * d)
}

const STRUCTURE_TOL: f64 = 1e-9;

fn hypotheses(w: &Colligation, dp: &DefectPair) -> HypothesesReport {
    HypothesesReport {
        coisometry_residual: coisometry_residual(&w.matrix()),
        observable: unobservable_subspace(w).is_empty(),
        input_dim: w.in_dim(),
        defect_dim: dp.dim_d(),
        output_dim: w.out_dim(),
        output_dim_condition: output_dim_condition(w.arity(), w.out_dim()),
    }
}

fn basic_row(w: &Colligation) -> Result<RowContraction> {
    RowContraction::new(w.a.iter().map(|x| x.adjoint()).collect())
}

/// `W = [[I, 0], [0, γ]]·[[A̲*, D_A σ̃], [D_{*,A}, −A̲ σ̃]]` for a co-isometric
/// observable `W` with `dim U = dim 𝔇_A`.
pub fn structure_decompose(w: &Colligation, rank_tol: f64) -> Result<StructureDecomposition> {
    let row = basic_row(w)?;
    let dp = defects(&row, rank_tol)?;
    let report = hypotheses(w, &dp);
    if report.coisometry_residual > STRUCTURE_TOL {
        return Err(Error::HypothesisViolated(format!(
            "colligation is not co-isometric (residual {:.3e})",
            report.coisometry_residual
        )));
    }
    if !report.observable {
        return Err(Error::HypothesisViolated("colligation is not observable".into()));
    }
    if report.input_dim != report.defect_dim {
        return Err(Error::HypothesisViolated(format!(
            "input dimension {} differs from dim 𝔇_A = {}",
            report.input_dim, report.defect_dim
        )));
    }
    let sigma_tilde = dp.q_d().adjoint() * dp.d_inv() * &w.b;
    let gamma = &w.c * dp.q_dstar() * inv_sqrt_diag(&dp.mu_dstar);
    let sigma_res = unitarity_residual(&sigma_tilde);
    let gamma_res = coisometry_residual(&gamma);
    if sigma_res > STRUCTURE_TOL {
        return Err(Error::DecompositionFailed {
            what: "σ̃ unitarity".into(),
            residual: sigma_res,
        });
    }
    if gamma_res > STRUCTURE_TOL {
        return Err(Error::DecompositionFailed {
            what: "γ co-isometry".into(),
            residual: gamma_res,
        });
    }
    let rebuilt = structure_reconstruct(&row, &dp, &gamma, &sigma_tilde)?;
    let residual = fro_norm(&(rebuilt.matrix() - w.matrix()));
    let d_block_residual = fro_norm(
        &(&w.d + &gamma * dp.q_dstar().adjoint() * row.row() * dp.q_d() * &sigma_tilde),
    );
    if residual > 1e-8 {
        return Err(Error::DecompositionFailed {
            what: "reconstruction".into(),
            residual,
        });
    }
    Ok(StructureDecomposition {
        row,
        gamma,
        sigma_tilde,
        gamma_coisometry_residual: gamma_res,
        sigma_unitarity_residual: sigma_res,
        d_block_residual,
        residual,
        report,
    })
}

/// `[[A̲*, D_A Q_A σ̃], [γ Q_*^* D_{*,A}, −γ Q_*^* A̲ Q_A σ̃]]`.
pub fn structure_reconstruct(
    row: &RowContraction,
    dp: &DefectPair,
    gamma: &CMatrix,
    sigma_tilde: &CMatrix,
) -> Result<Colligation> {
    if gamma.ncols() != dp.dim_dstar() || sigma_tilde.nrows() != dp.dim_d() {
        return Err(Error::ShapeMismatch(format!(
            "γ is {:?} and σ̃ is {:?}, defect dimensions are {} and {}",
            gamma.shape(),
            sigma_tilde.shape(),
            dp.dim_dstar(),
            dp.dim_d()
        )));
    }
    let qs = dp.q_dstar().adjoint();
    Colligation::new(
        row.adjoint_blocks(),
        &dp.d * dp.q_d() * sigma_tilde,
        gamma * &qs * &dp.dstar,
        -(gamma * &qs * row.row() * dp.q_d() * sigma_tilde),
    )
}

/// Decomposition of a co-isometric colligation into the lifting form
/// `[[A̲*, D_A P σ_A], [γ D_{*,A}, D_{*,γ} P σ_γ − γ A̲ P σ_A]]` with a
/// unitary `σ = [σ_γ; σ_A] : U → 𝔇_{*,γ} ⊕ 𝔇_A`.
///
/// Unlike [`structure_decompose`] this allows `dim U > dim 𝔇_A`; the extra
/// input directions are carried by the defect of `γ*`.
#[derive(Debug, Clone)]
pub struct LiftingForm {
    pub row: RowContraction,
    pub gamma: CMatrix,
    pub dstar_gamma: CMatrix,
    pub basis_dstar_gamma: OrthonormalBasis,
    pub sigma_gamma: CMatrix,
    pub sigma_a: CMatrix,
    pub sigma_unitarity_residual: f64,
    pub residual: f64,
}

pub fn lifting_form_decompose(w: &Colligation, rank_tol: f64) -> Result<LiftingForm> {
    let row = basic_row(w)?;
    let dp = defects(&row, rank_tol)?;
    let cores = coisometry_residual(&w.matrix());
    if cores > STRUCTURE_TOL {
        return Err(Error::HypothesisViolated(format!(
            "colligation is not co-isometric (residual {cores:.3e})"
        )));
    }
    let sigma_a = dp.q_d().adjoint() * dp.d_inv() * &w.b;
    let gamma = &w.c * dp.q_dstar() * inv_sqrt_diag(&dp.mu_dstar);
    if op_norm(&gamma) > 1.0 + 1e-9 {
        return Err(Error::GammaNotContractive {
            norm: op_norm(&gamma),
        });
    }
    let m = w.out_dim();
    let (dstar_gamma, basis_g, mu_g) = defect_of(&(identity(m) - &gamma * gamma.adjoint()), rank_tol)?;
    let qs = dp.q_dstar().adjoint();
    let rest = &w.d + &gamma * &qs * row.row() * dp.q_d() * &sigma_a;
    let sigma_gamma = basis_g.matrix().adjoint() * crate::rowcon::restricted_inverse(basis_g.matrix(), &mu_g) * rest;
    let sigma = vstack(w.in_dim(), &[&sigma_gamma, &sigma_a]);
    let sigma_res = unitarity_residual(&sigma);
    let rebuilt = Colligation::new(
        row.adjoint_blocks(),
        &dp.d * dp.q_d() * &sigma_a,
        &gamma * &qs * &dp.dstar,
        &dstar_gamma * basis_g.matrix() * &sigma_gamma - &gamma * &qs * row.row() * dp.q_d() * &sigma_a,
    )?;
    let residual = fro_norm(&(rebuilt.matrix() - w.matrix()));
    if sigma_res > STRUCTURE_TOL || residual > 1e-8 {
        return Err(Error::DecompositionFailed {
            what: if sigma_res > STRUCTURE_TOL {
                "σ unitarity".into()
            } else {
                "reconstruction".into()
            },
            residual: sigma_res.max(residual),
        });
    }
    Ok(LiftingForm {
        row,
        gamma,
        dstar_gamma,
        basis_dstar_gamma: basis_g,
        sigma_gamma,
        sigma_a,
        sigma_unitarity_residual: sigma_res,
        residual,
    })
}

/// `G = (P_m, 0, …, 0)` on `C^n` with `m = nd − k`, whose defect space
/// `𝔇_G` has dimension exactly `k`.
pub fn make_defect_constrained(n: usize, d: usize, k: usize) -> Result<RowContraction> {
    if d == 0 || n == 0 {
        return Err(Error::OutOfRange("n and d must be positive".into()));
    }
    if k < n * (d - 1) || k > n * d {
        return Err(Error::OutOfRange(format!(
            "k = {k} outside [{}, {}]",
            n * (d - 1),
            n * d
        )));
    }
    let m = n * d - k;
    let mut p = zeros(n, n);
    for i in 0..m {
        p[(i, i)] = re(1.0);
    }
    let mut blocks = vec![p];
    blocks.extend((1..d).map(|_| zeros(n, n)));
    RowContraction::new(blocks)
}

/// `(I − XX*)^{1/2}` for a contraction `X`.
pub fn dstar_of(x: &CMatrix) -> Result<CMatrix> {
    psd_sqrt(&(identity(x.nrows()) - x * x.adjoint()), DEFAULT_CLAMP_TOL)
}
