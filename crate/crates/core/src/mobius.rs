//! Blaschke-factor transforms `T_a = (T − a)(I − āT)^{-1}` of single
//! contractions and liftings, the unitaries `Z_T`, `Z_{*T}` relating the
//! defects of `T` and `T_a`, and pointwise checks of the transformed
//! characteristic functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{series_eval_scalar, tail_bound};
use crate::lifting::{minimality_check, sigma_map, Lifting, SigmaMap};
use crate::numlin::{
    block_diag, fro_norm, hstack, identity, inverse, max_abs, op_norm, re, unitarity_residual,
    vstack, CMatrix, DEFAULT_RANK_TOL,
};
use crate::rowcon::{char_symbol_from, defects, DefectPair, RowContraction};

/// Default evaluation points.
pub const DEFAULT_SAMPLES: [(f64, f64); 6] =
    [(0.0, 0.0), (0.3, 0.0), (-0.3, 0.0), (0.0, 0.2), (0.0, -0.2), (0.25, 0.25)];

pub fn default_samples() -> Vec<Complex64> {
    DEFAULT_SAMPLES.iter().map(|&(x, y)| Complex64::new(x, y)).collect()
}

/// `μ = (λ + a)/(1 + āλ)`.
pub fn mobius_point(lambda: Complex64, a: Complex64) -> Complex64 {
    (lambda + a) / (Complex64::new(1.0, 0.0) + a.conj() * lambda)
}

fn check_a(a: Complex64) -> Result<()> {
    if !a.re.is_finite() || !a.im.is_finite() || a.norm() >= 1.0 {
        return Err(Error::BadParameter(format!("|a| = {} must be < 1", a.norm())));
    }
    Ok(())
}

pub fn mobius_contraction(t: &CMatrix, a: Complex64) -> Result<CMatrix> {
    check_a(a)?;
    crate::numlin::ensure_square(t)?;
    let norm = op_norm(t);
    if norm > 1.0 + 1e-10 {
        return Err(Error::NotContraction { norm });
    }
    let n = t.nrows();
    let i = identity(n);
    Ok((t - &i * a) * inverse(&(&i - t * a.conj()))?)
}

/// `S_T = (1 − |a|²)^{1/2}(I − āT)^{-1}`.
pub fn mobius_s(t: &CMatrix, a: Complex64) -> Result<CMatrix> {
    check_a(a)?;
    let i = identity(t.nrows());
    Ok(inverse(&(&i - t * a.conj()))? * re((1.0 - a.norm_sqr()).sqrt()))
}

#[derive(Debug, Clone)]
pub struct MobiusData {
    pub a: Complex64,
    pub t_a: CMatrix,
    pub s_t: CMatrix,
    /// `Z_T : 𝔇_{T_a} → 𝔇_T` in defect coordinates.
    pub z: CMatrix,
    /// `Z_{*T} : 𝔇_{*,T_a} → 𝔇_{*,T}` in defect coordinates.
    pub z_star: CMatrix,
    pub defects_t: DefectPair,
    pub defects_ta: DefectPair,
    /// `‖Z_T D_{T_a} − D_T S_T‖`, `‖Z_{*T} D_{*,T_a} − D_{*,T} S_T*‖`,
    /// and the unitarity residuals of `Z_T`, `Z_{*T}`.
    pub residuals: [f64; 4],
}

pub fn z_unitaries(t: &CMatrix, a: Complex64, rank_tol: f64) -> Result<MobiusData> {
    let t_a = mobius_contraction(t, a)?;
    let s_t = mobius_s(t, a)?;
    let dt = defects(&RowContraction::single(t.clone())?, rank_tol)?;
    let dta = defects(&RowContraction::single(t_a.clone())?, rank_tol)?;
    if dt.dim_d() != dta.dim_d() {
        return Err(Error::DefectRankMismatch {
            left: dta.dim_d(),
            right: dt.dim_d(),
        });
    }
    if dt.dim_dstar() != dta.dim_dstar() {
        return Err(Error::DefectRankMismatch {
            left: dta.dim_dstar(),
            right: dt.dim_dstar(),
        });
    }
    let z = dt.q_d().adjoint() * &dt.d * &s_t * dta.d_inv() * dta.q_d();
    let z_star = dt.q_dstar().adjoint() * &dt.dstar * s_t.adjoint() * dta.dstar_inv() * dta.q_dstar();
    let r0 = fro_norm(&(&z * dta.q_d().adjoint() * &dta.d - dt.q_d().adjoint() * &dt.d * &s_t));
    let r1 = fro_norm(
        &(&z_star * dta.q_dstar().adjoint() * &dta.dstar
            - dt.q_dstar().adjoint() * &dt.dstar * s_t.adjoint()),
    );
    let residuals = [r0, r1, unitarity_residual(&z), unitarity_residual(&z_star)];
    if residuals.iter().any(|&r| r > 1e-9) {
        return Err(Error::NotWellDefined {
            what: "Z_T, Z_{*T} relations".into(),
            residual: residuals.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(MobiusData {
        a,
        t_a,
        s_t,
        z,
        z_star,
        defects_t: dt,
        defects_ta: dta,
        residuals,
    })
}

/// `E_a = [[C_a, 0], [S_A B S_C, A_a]]`, checked against `(E̲)_a`.
pub fn mobius_lifting(e: &Lifting, a: Complex64) -> Result<Lifting> {
    if e.arity() != 1 {
        return Err(Error::ArityNotOne(e.arity()));
    }
    let c = e.c().block(0);
    let am = e.a().block(0);
    let ca = mobius_contraction(c, a)?;
    let aa = mobius_contraction(am, a)?;
    let b = mobius_s(am, a)? * &e.b_blocks()[0] * mobius_s(c, a)?;
    let ea = Lifting::new(
        RowContraction::single(ca)?,
        RowContraction::single(aa)?,
        vec![b],
    )?;
    let direct = mobius_contraction(e.e().block(0), a)?;
    let residual = max_abs(&(&direct - ea.e().block(0)));
    if residual > 1e-10 {
        return Err(Error::ResidualTooLarge {
            what: "E_a blockwise".into(),
            residual,
        });
    }
    if minimality_check(e).minimal && !minimality_check(&ea).minimal {
        return Err(Error::HypothesisViolated("E_a is not minimal".into()));
    }
    Ok(ea)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfSample {
    pub lambda: Complex64,
    pub mu: Complex64,
    pub residual: f64,
    pub bound: f64,
}

impl CfSample {
    pub fn holds(&self) -> bool {
        self.residual <= self.bound
    }
}

fn check_samples(samples: &[Complex64]) -> Result<()> {
    if let Some(l) = samples.iter().find(|l| !(l.norm() <= 0.5)) {
        return Err(Error::BadParameter(format!("sample |λ| = {} exceeds 0.5", l.norm())));
    }
    Ok(())
}

fn bound(degree: usize, radii: &[f64]) -> f64 {
    let r = radii.iter().copied().fold(0.0, f64::max);
    2.0 * tail_bound(degree, r) + 1e-8
}

/// `‖Z_{*T} θ_{T_a}(λ) Z_T* − θ_T(μ)‖` at each sample.
pub fn verify_cf_relation(
    t: &CMatrix,
    a: Complex64,
    samples: &[Complex64],
    degree: usize,
) -> Result<Vec<CfSample>> {
    check_samples(samples)?;
    let md = z_unitaries(t, a, DEFAULT_RANK_TOL)?;
    let rt = RowContraction::single(t.clone())?;
    let rta = RowContraction::single(md.t_a.clone())?;
    let th = char_symbol_from(&rt, &md.defects_t, degree)?;
    let tha = char_symbol_from(&rta, &md.defects_ta, degree)?;
    samples
        .iter()
        .map(|&lambda| {
            let mu = mobius_point(lambda, a);
            let lhs = &md.z_star * series_eval_scalar(&tha, lambda)? * md.z.adjoint();
            let rhs = series_eval_scalar(&th, mu)?;
            Ok(CfSample {
                lambda,
                mu,
                residual: op_norm(&(lhs - rhs)),
                bound: bound(degree, &[lambda.norm(), mu.norm()]),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LiftingCfReport {
    pub a: Complex64,
    /// `‖θ_{C_a,E_a}(λ) − Z_C* θ_{C,E}(μ) W‖` with the unitary
    /// `W = σ* diag(Q_γ* Z_C Q_{γ_a}, Z_A) σ_a`.
    pub rotated: Vec<CfSample>,
    /// Factored identity for `θ_{C_a,E_a}(λ) D_{E_a}` with `D_A` in the
    /// lower-right corner.
    pub factored: Vec<CfSample>,
    /// The same identity with `D_{A_a}` in that corner.
    pub factored_verbatim: Vec<f64>,
    /// `‖W*W − I‖`.
    pub input_unitarity: f64,
    /// `‖γ_a − Z_C* γ Z_{*A}‖`.
    pub gamma_residual: f64,
}

impl LiftingCfReport {
    pub fn holds(&self) -> bool {
        self.rotated.iter().all(CfSample::holds)
            && self.factored.iter().all(CfSample::holds)
            && self.input_unitarity < 1e-9
            && self.gamma_residual < 1e-9
    }
}

pub fn verify_lifting_cf(
    e: &Lifting,
    a: Complex64,
    samples: &[Complex64],
    degree: usize,
) -> Result<LiftingCfReport> {
    if e.arity() != 1 {
        return Err(Error::ArityNotOne(e.arity()));
    }
    check_samples(samples)?;
    let ea = mobius_lifting(e, a)?;
    let sm = sigma_map(e)?;
    let sma = sigma_map(&ea)?;
    let zc = z_unitaries(e.c().block(0), a, DEFAULT_RANK_TOL)?;
    let za = z_unitaries(e.a().block(0), a, DEFAULT_RANK_TOL)?;
    let theta = crate::lifting::lifting_char_decomposed_from(e, &sm, degree)?;
    let theta_a = crate::lifting::lifting_char_decomposed_from(&ea, &sma, degree)?;
    let g = &sm.gamma;
    let gamma_residual = fro_norm(&(&sma.gamma.gamma - zc.z.adjoint() * &g.gamma * &za.z_star));

    let qg = g.basis_dstar_gamma.matrix();
    let qga = sma.gamma.basis_dstar_gamma.matrix();
    let w = sm.sigma.adjoint()
        * block_diag(&[&(qg.adjoint() * &zc.z * qga), &za.z])
        * &sma.sigma;
    let input_unitarity = if w.nrows() == w.ncols() {
        unitarity_residual(&w)
    } else {
        f64::INFINITY
    };

    let theta_in_a = char_symbol_from(e.a(), &g.defects_a, degree)?;
    let da = &g.defects_a;
    let dc = &g.defects_c;
    let kc = g.gamma.nrows();
    let (nc, na) = (e.n_c(), e.n_a());
    let qc_dc = dc.q_d().adjoint() * &dc.d;
    let th_a_at_a = series_eval_scalar(&theta_in_a, a)?;
    let left_col = vstack(
        nc,
        &[
            &(&g.dstar_gamma * &qc_dc),
            &(th_a_at_a.adjoint() * g.gamma.adjoint() * &qc_dc),
        ],
    );
    let s_diag = block_diag(&[&zc.s_t, &za.s_t]);
    let middle = |corner: &CMatrix| -> CMatrix {
        let zeros_top = crate::numlin::zeros(kc, na);
        let right_col = vstack(na, &[&zeros_top, corner]);
        hstack(kc + da.dim_d(), &[&left_col, &right_col])
    };
    let m_fixed = middle(&(da.q_d().adjoint() * &da.d));
    let m_verbatim = middle(&(da.q_d().adjoint() * &za.defects_ta.d));
    let dea = sma.defects_e.q_d().adjoint() * &sma.defects_e.d;

    let mut rotated = Vec::new();
    let mut factored = Vec::new();
    let mut factored_verbatim = Vec::new();
    for &lambda in samples {
        let mu = mobius_point(lambda, a);
        let b = bound(degree, &[lambda.norm(), mu.norm(), a.norm()]);
        let lhs = series_eval_scalar(&theta_a, lambda)?;
        let rhs = zc.z.adjoint() * series_eval_scalar(&theta, mu)? * &w;
        rotated.push(CfSample {
            lambda,
            mu,
            residual: op_norm(&(&lhs - rhs)),
            bound: b,
        });
        let lhs_f = &lhs * &dea;
        let th_mu = series_eval_scalar(&theta_in_a, mu)?;
        let row = hstack(kc, &[&g.dstar_gamma, &(&g.gamma * th_mu)]);
        let front = zc.z.adjoint() * row;
        let fixed = &front * &m_fixed * &s_diag;
        let verbatim = &front * &m_verbatim * &s_diag;
        factored.push(CfSample {
            lambda,
            mu,
            residual: op_norm(&(&lhs_f - fixed)),
            bound: b,
        });
        factored_verbatim.push(op_norm(&(&lhs_f - verbatim)));
    }
    Ok(LiftingCfReport {
        a,
        rotated,
        factored,
        factored_verbatim,
        input_unitarity,
        gamma_residual,
    })
}

/// `σ_a` and `σ` for a lifting and its transform, for reports.
pub fn sigma_pair(e: &Lifting, a: Complex64) -> Result<(SigmaMap, SigmaMap)> {
    Ok((sigma_map(e)?, sigma_map(&mobius_lifting(e, a)?)?))
}
