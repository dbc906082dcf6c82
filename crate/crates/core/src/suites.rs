//! Seeded property suites, one random instance per case.
//!
//! Each case is a pure function of its seed, so cases can run in any order
//! or in parallel; [`aggregate`] folds the outcomes with order-independent
//! reductions (counts and maxima).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::colligation::{
    is_coisometric, make_defect_constrained, structure_decompose, structure_reconstruct,
    transfer_oracle, transfer_symbol, unobservable_subspace, Colligation,
};
use crate::equiv::{
    coincidence_solve, colligation_state_map, equivalence_solve, rowcon_unitary_equiv,
    SolverOptions, Verdict,
};
use crate::error::{Error, Result};
use crate::fock::{multianalytic_norm, series_apply_output};
use crate::lifting::{
    build_lifting, extract_gamma, lifting_char_decomposed_from, lifting_char_direct,
    lifting_colligation, lifting_colligation_from, minimality_check, norm_bound_check,
    resolving_check, sigma_map, Lifting,
};
use crate::mobius::{
    default_samples, mobius_contraction, mobius_lifting, verify_cf_relation, verify_lifting_cf,
    z_unitaries,
};
use crate::numlin::{
    fro_norm, identity, max_abs, op_norm, re, DEFAULT_RANK_TOL,
};
use crate::rowcon::{
    char_symbol_from, char_symbol_oracle, cnc_subspace_from, defects, popescu_colligation_from,
    RowContraction,
};
use crate::testgen::{
    conjugate_row, derive_seed, random_contraction, random_minimal_lifting, random_non_cnc,
    random_row_contraction, random_strict_row_contraction, random_unitary, rng_from_seed,
    TestRng,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Rowcon,
    Colligation,
    Lifting,
    Equiv,
    Mobius,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Rowcon,
        Suite::Colligation,
        Suite::Lifting,
        Suite::Equiv,
        Suite::Mobius,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rowcon => "rowcon",
            Suite::Colligation => "colligation",
            Suite::Lifting => "lifting",
            Suite::Equiv => "equiv",
            Suite::Mobius => "mobius",
        }
    }

    /// Properties in report order, with their tolerances.
    pub fn properties(self) -> &'static [(&'static str, f64)] {
        match self {
            Suite::Rowcon => &[
                ("defect identity D_T² + T̲*T̲ = I", 1e-10),
                ("char symbol agrees with Neumann oracle", 1e-10),
                ("W_A co-isometric", 1e-10),
                ("transfer of W_A equals char symbol", 1e-10),
                ("multi-analytic norm at most 1", 1e-8),
                ("c.n.c. subspace is co-invariant inside ker D_*", 1e-9),
                ("W_A observable iff c.n.c.", 0.0),
            ],
            Suite::Colligation => &[
                ("transfer symbol agrees with Neumann oracle", 1e-10),
                ("co-isometric colligation is Schur class", 1e-8),
                ("structure decompose recovers construction", 1e-8),
                ("defect dimension bounds", 0.0),
                ("defect-constrained constructor hits k", 0.0),
                ("equal transfer symbols give a unitary state map", 1e-8),
                ("input rotation acts on σ̃ only", 1e-8),
            ],
            Suite::Lifting => &[
                ("γ survives build then extract", 1e-9),
                ("B̲* = D_C γ D_{*,A}", 1e-9),
                ("σ unitary", 1e-9),
                ("direct and decomposed char functions agree", 1e-9),
                ("transfer of V equals char function", 1e-9),
                ("minimal ⇒ resolving and A c.n.c.", 0.0),
                ("norm inequality (d = 1)", 1e-8),
                ("block-unitary related liftings are equivalent", 1e-8),
            ],
            Suite::Equiv => &[
                ("coincidence found for conjugate pairs", 1e-8),
                ("equivalence recovers input unitary", 1e-8),
                ("unitary equivalence of conjugate row contractions", 1e-8),
                ("invariants refute rescaled pairs", 0.0),
            ],
            Suite::Mobius => &[
                ("involution (T_a)_{-a} = T", 1e-10),
                ("Z-unitaries satisfy their defining relations", 1e-9),
                ("transformed lifting is blockwise T_a and minimal", 1e-10),
                ("γ_a = Z_C* γ Z_{*A}", 1e-9),
                ("char function relation for C (residual/bound)", 1.0),
                ("lifting char function relations (residual/bound)", 1.0),
            ],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::BadParameter(format!("unknown suite {s:?}")))
    }
}

/// Residual of one property on one case; `None` means not applicable.
pub type CaseOutcome = Vec<Option<f64>>;

/// Seed of case `index` of `suite` under `master`.
pub fn case_seed(master: u64, suite: Suite, index: u64) -> u64 {
    derive_seed(derive_seed(master, suite as u64 + 1), index)
}

pub fn run_case(suite: Suite, seed: u64) -> CaseOutcome {
    let mut rng = rng_from_seed(seed);
    let mut out = vec![None; suite.properties().len()];
    let mut put = |k: usize, r: Result<f64>| out[k] = Some(r.unwrap_or(f64::INFINITY));
    match suite {
        Suite::Rowcon => rowcon_case(&mut rng, &mut put),
        Suite::Colligation => colligation_case(&mut rng, &mut put),
        Suite::Lifting => lifting_case(&mut rng, &mut put),
        Suite::Equiv => equiv_case(&mut rng, &mut put),
        Suite::Mobius => mobius_case(&mut rng, &mut put),
    }
    out
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

fn rowcon_case(rng: &mut TestRng, put: &mut dyn FnMut(usize, Result<f64>)) {
    let n = rng.random_range(1..=4);
    let d = rng.random_range(1..=3);
    let t = match rng.random_range(0..3) {
        0 if n > 1 => {
            let k = rng.random_range(1..n);
            random_non_cnc(rng, n, d, k)
        }
        1 => random_row_contraction(rng, n, d, 1.0),
        _ => random_strict_row_contraction(rng, n, d, 0.2, 0.95),
    };
    let dp = match defects(&t, DEFAULT_RANK_TOL) {
        Ok(dp) => dp,
        Err(e) => return put(0, Err(e)),
    };
    let row = t.row();
    put(0, Ok(max_abs(&(&dp.d * &dp.d + row.adjoint() * &row - identity(n * d)))));
    let degree = 4;
    let sym = char_symbol_from(&t, &dp, degree);
    put(1, (|| sym.clone()?.max_deviation(&char_symbol_oracle(&t, degree)?))());
    let w = popescu_colligation_from(&t, &dp);
    put(2, w.as_ref().map(|w| is_coisometric(w, 1e-10).1).map_err(Clone::clone));
    put(3, (|| transfer_symbol(w.as_ref().map_err(Clone::clone)?, degree)?.max_deviation(&sym.clone()?))());
    put(4, (|| Ok((multianalytic_norm(&sym.clone()?.truncate(3))? - 1.0).max(0.0)))());
    let cnc = cnc_subspace_from(&t, &dp);
    let q = cnc.matrix();
    let p = cnc.projector();
    let mut res = fro_norm(&(&dp.dstar * q));
    for b in t.blocks() {
        res = res.max(fro_norm(&(b.adjoint() * q - &p * b.adjoint() * q)));
    }
    put(5, Ok(res));
    if let Ok(w) = &w {
        put(6, Ok(flag(unobservable_subspace(w).dim() == cnc.dim())));
    }
}

fn colligation_case(rng: &mut TestRng, put: &mut dyn FnMut(usize, Result<f64>)) {
    let d = rng.random_range(1..=3);
    let n1 = rng.random_range(1..=4);
    let n2 = rng.random_range(1..=3);
    let n3 = rng.random_range(1..=3);
    let m = random_contraction(rng, d * n1 + n3, n1 + n2, 0.95);
    put(0, (|| {
        let w = Colligation::from_matrix(&m, d, n1, n2)?;
        transfer_symbol(&w, 5)?.max_deviation(&transfer_oracle(&w, 5)?)
    })());

    let n3c = n3.min(n2);
    let u = random_unitary(rng, n1 + n2);
    put(1, (|| {
        let w = Colligation::from_matrix(&u.rows(0, n1 + n3c).into_owned(), 1, n1, n2)?;
        Ok((multianalytic_norm(&transfer_symbol(&w, 6)?)? - 1.0).max(0.0))
    })());

    let a = random_strict_row_contraction(rng, n1, d, 0.3, 0.95);
    let dp = defects(&a, DEFAULT_RANK_TOL);
    let recon = dp.as_ref().map_err(Clone::clone).and_then(|dp| {
        let sigma0 = random_unitary(rng, dp.dim_d());
        let gamma0 = random_unitary(rng, dp.dim_dstar());
        let w = structure_reconstruct(&a, dp, &gamma0, &sigma0)?;
        Ok((w, sigma0, gamma0))
    });
    put(2, (|| {
        let (w, sigma0, gamma0) = recon.clone()?;
        let s = structure_decompose(&w, DEFAULT_RANK_TOL)?;
        Ok(s.residual
            .max(max_abs(&(&s.sigma_tilde - sigma0)))
            .max(max_abs(&(&s.gamma - gamma0))))
    })());
    put(6, (|| {
        let (w, sigma0, _) = recon.clone()?;
        let k = sigma0.ncols();
        let s = random_unitary(&mut rng_from_seed(n1 as u64 + 17 * d as u64), k);
        let rotated = Colligation::new(
            w.a_blocks().to_vec(),
            w.b() * &s,
            w.c().clone(),
            w.d() * &s,
        )?;
        let s1 = structure_decompose(&w, DEFAULT_RANK_TOL)?;
        let s2 = structure_decompose(&rotated, DEFAULT_RANK_TOL)?;
        Ok(max_abs(&(&s2.sigma_tilde - &s1.sigma_tilde * &s)).max(max_abs(&(&s2.gamma - &s1.gamma))))
    })());

    let norm = rng.random_range(0.2..=1.0);
    let t = random_row_contraction(rng, n1, d, norm);
    put(3, (|| {
        let k = defects(&t, DEFAULT_RANK_TOL)?.dim_d();
        Ok(flag(n1 * (d - 1) <= k && k <= n1 * d))
    })());
    let k = rng.random_range(n1 * (d - 1)..=n1 * d);
    put(4, (|| {
        let g = make_defect_constrained(n1, d, k)?;
        Ok(flag(defects(&g, DEFAULT_RANK_TOL)?.dim_d() == k))
    })());

    put(5, (|| {
        let dp = dp.clone()?;
        let w1 = popescu_colligation_from(&a, &dp)?;
        let u0 = random_unitary(rng, n1);
        let blocks_u0 = crate::numlin::block_diag(&vec![&u0; d]);
        let w2 = Colligation::new(
            w1.a_blocks().iter().map(|x| &u0 * x * u0.adjoint()).collect(),
            &blocks_u0 * w1.b(),
            w1.c() * u0.adjoint(),
            w1.d().clone(),
        )?;
        let s1 = transfer_symbol(&w1, 2 * n1)?;
        let s2 = transfer_symbol(&w2, 2 * n1)?;
        let eq = s1.max_deviation(&s2)?;
        let sm = colligation_state_map(&w1, &w2, &identity(w1.in_dim()))?;
        let worst = sm.residuals.iter().copied().fold(eq, f64::max);
        Ok(worst.max(max_abs(&(&sm.u - &u0))))
    })());
}

fn random_lifting(rng: &mut TestRng) -> Lifting {
    let d = rng.random_range(1..=2);
    let n_c = rng.random_range(1..=3);
    let n_a = rng.random_range(1..=(n_c * d).min(3));
    random_minimal_lifting(rng, n_c, n_a, d)
}

fn lifting_case(rng: &mut TestRng, put: &mut dyn FnMut(usize, Result<f64>)) {
    let e = random_lifting(rng);
    let degree = 5;
    put(0, (|| {
        let g = extract_gamma(&e, DEFAULT_RANK_TOL)?;
        let back = build_lifting(e.c(), e.a(), &g.gamma)?;
        let g2 = extract_gamma(&back, DEFAULT_RANK_TOL)?;
        Ok(max_abs(&(&g2.gamma - &g.gamma)).max(max_abs(&(back.e().row() - e.e().row()))))
    })());
    let sm = sigma_map(&e);
    put(1, sm.as_ref().map(|s| s.gamma.residual / (1.0 + op_norm(&e.b_row()))).map_err(Clone::clone));
    put(2, sm.as_ref().map(|s| s.unitarity_residual.max(s.isometry_residual)).map_err(Clone::clone));
    let theta = sm.as_ref().map_err(Clone::clone).and_then(|s| lifting_char_decomposed_from(&e, s, degree));
    put(3, (|| theta.clone()?.max_deviation(&lifting_char_direct(&e, degree)?))());
    put(4, (|| {
        let v = lifting_colligation_from(&e, sm.as_ref().map_err(Clone::clone)?)?;
        transfer_symbol(&v, degree)?.max_deviation(&theta.clone()?)
    })());
    put(5, (|| {
        let minimal = minimality_check(&e).minimal;
        let resolving = resolving_check(&e)?.resolving;
        let cnc = crate::rowcon::is_cnc(e.a())?;
        Ok(flag(!minimal || (resolving && cnc)))
    })());
    if e.arity() == 1 {
        let lambda = Complex64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.28));
        put(6, norm_bound_check(&e, lambda, 60).map(|r| (-r.slack).max(0.0)));
    }
    put(7, (|| {
        let u0 = random_unitary(rng, e.n_a());
        let e2 = Lifting::new(
            e.c().clone(),
            conjugate_row(e.a(), &u0),
            e.b_blocks().iter().map(|b| &u0 * b).collect(),
        )?;
        let s1 = theta.clone()?;
        let s2 = crate::lifting::lifting_char_decomposed(&e2, degree)?;
        let r = equivalence_solve(&s1, &s2, Some(1e-8))?;
        if r.status != Verdict::Confirmed {
            return Ok(f64::INFINITY);
        }
        let v1 = lifting_colligation(&e)?;
        let v2 = lifting_colligation(&e2)?;
        let st = colligation_state_map(&v1, &v2, &r.unitaries[0])?;
        Ok(st.residuals.iter().copied().fold(r.residual, f64::max))
    })());
}

fn equiv_case(rng: &mut TestRng, put: &mut dyn FnMut(usize, Result<f64>)) {
    let n = rng.random_range(1..=3);
    let d = rng.random_range(1..=2);
    let a = random_strict_row_contraction(rng, n, d, 0.3, 0.9);
    let u0 = random_unitary(rng, n);
    let a2 = conjugate_row(&a, &u0);
    let seed = rng.random::<u64>();
    put(0, (|| {
        let s1 = char_symbol_from(&a, &defects(&a, DEFAULT_RANK_TOL)?, 4)?;
        let s2 = char_symbol_from(&a2, &defects(&a2, DEFAULT_RANK_TOL)?, 4)?;
        let mut opts = SolverOptions {
            seed,
            ..SolverOptions::default()
        };
        let mut r = coincidence_solve(&s1, &s2, &opts)?;
        if r.status == Verdict::Unknown {
            opts.restarts = 64;
            opts.iters = 2000;
            r = coincidence_solve(&s1, &s2, &opts)?;
        }
        if r.status != Verdict::Confirmed {
            return Ok(f64::INFINITY);
        }
        let (u, ut) = (&r.unitaries[0], &r.unitaries[1]);
        Ok(s1
            .coeffs()
            .iter()
            .zip(s2.coeffs())
            .map(|(c1, c2)| max_abs(&(ut * c1 - c2 * u)))
            .fold(r.residual, f64::max))
    })());
    put(1, (|| {
        let s = char_symbol_from(&a, &defects(&a, DEFAULT_RANK_TOL)?, 4)?;
        let v0 = random_unitary(rng, s.in_dim());
        let s2 = s.apply_input(&v0)?;
        let r = equivalence_solve(&s, &s2, None)?;
        if r.status != Verdict::Confirmed {
            return Ok(f64::INFINITY);
        }
        Ok(r.residual.max(max_abs(&(&r.unitaries[0] - v0.adjoint()))))
    })());
    put(2, (|| {
        let opts = SolverOptions {
            seed,
            ..SolverOptions::default()
        };
        let r = rowcon_unitary_equiv(&a, &a2, &opts)?;
        if r.status != Verdict::Confirmed {
            return Ok(f64::INFINITY);
        }
        Ok(r.residual)
    })());
    put(3, (|| {
        let scaled = RowContraction::new(a.blocks().iter().map(|b| b * re(0.5)).collect())?;
        let opts = SolverOptions {
            seed,
            ..SolverOptions::default()
        };
        let r = rowcon_unitary_equiv(&a, &scaled, &opts)?;
        let s1 = char_symbol_from(&a, &defects(&a, DEFAULT_RANK_TOL)?, 2)?;
        let s2 = series_apply_output(&identity(s1.out_dim()), &s1)?;
        let same = coincidence_solve(&s1, &s2, &opts)?;
        Ok(flag(
            r.status == Verdict::RefutedByInvariant && same.status != Verdict::RefutedByInvariant,
        ))
    })());
}

fn mobius_case(rng: &mut TestRng, put: &mut dyn FnMut(usize, Result<f64>)) {
    let n_c = rng.random_range(1..=3);
    let n_a = rng.random_range(1..=n_c);
    let e = random_minimal_lifting(rng, n_c, n_a, 1);
    let a = Complex64::from_polar(rng.random_range(0.0..=0.5), rng.random_range(0.0..6.28));
    let t = e.c().block(0).clone();
    put(0, (|| {
        let back = mobius_contraction(&mobius_contraction(&t, a)?, -a)?;
        Ok(max_abs(&(back - &t)))
    })());
    put(1, z_unitaries(&t, a, DEFAULT_RANK_TOL).map(|m| m.residuals.iter().copied().fold(0.0, f64::max)));
    put(2, (|| {
        let ea = mobius_lifting(&e, a)?;
        let direct = mobius_contraction(e.e().block(0), a)?;
        let dev = max_abs(&(direct - ea.e().block(0)));
        Ok(if minimality_check(&ea).minimal { dev } else { f64::INFINITY })
    })());
    let samples = default_samples();
    let rep = verify_lifting_cf(&e, a, &samples, 40);
    put(3, rep.as_ref().map(|r| r.gamma_residual.max(r.input_unitarity)).map_err(Clone::clone));
    put(4, verify_cf_relation(&t, a, &samples, 40).map(|v| {
        v.iter().map(|s| s.residual / s.bound).fold(0.0, f64::max)
    }));
    put(5, rep.map(|r| {
        r.rotated
            .iter()
            .chain(&r.factored)
            .map(|s| s.residual / s.bound)
            .fold(0.0, f64::max)
    }));
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertySummary {
    pub property: String,
    pub tol: f64,
    pub cases: usize,
    pub passed: usize,
    /// Largest residual seen; `None` when no case applied or a case failed
    /// to produce a finite residual.
    pub worst_residual: Option<f64>,
}

impl PropertySummary {
    pub fn ok(&self) -> bool {
        self.passed == self.cases
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub seed: u64,
    pub properties: Vec<PropertySummary>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.properties.iter().all(PropertySummary::ok)
    }
}

/// Folds per-case outcomes into per-property counts and maxima.
pub fn aggregate(suite: Suite, seed: u64, outcomes: &[CaseOutcome]) -> SuiteReport {
    let props = suite.properties();
    let mut acc: BTreeMap<usize, (usize, usize, f64)> = BTreeMap::new();
    for case in outcomes {
        for (k, r) in case.iter().enumerate() {
            let Some(r) = *r else { continue };
            let e = acc.entry(k).or_insert((0, 0, 0.0));
            e.0 += 1;
            if r <= props[k].1 {
                e.1 += 1;
            }
            e.2 = if r.is_nan() { f64::INFINITY } else { e.2.max(r) };
        }
    }
    SuiteReport {
        suite,
        cases: outcomes.len(),
        seed,
        properties: props
            .iter()
            .enumerate()
            .map(|(k, (name, tol))| {
                let (cases, passed, worst) = acc.get(&k).copied().unwrap_or((0, 0, 0.0));
                PropertySummary {
                    property: (*name).to_string(),
                    tol: *tol,
                    cases,
                    passed,
                    worst_residual: (cases > 0 && worst.is_finite()).then_some(worst),
                }
            })
            .collect(),
    }
}

/// Runs a suite sequentially.
pub fn run_suite(suite: Suite, cases: usize, seed: u64) -> SuiteReport {
    let outcomes: Vec<_> = (0..cases as u64)
        .map(|i| run_case(suite, case_seed(seed, suite, i)))
        .collect();
    aggregate(suite, seed, &outcomes)
}
