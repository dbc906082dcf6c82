//! Worked scalar liftings with known closed-form characteristic functions.
//!
//! Fixtures live in `fixtures/*.json` and are regenerated by
//! `fixtures/generate.py` (mpmath, 50 digits).

use serde::{Deserialize, Serialize};

use crate::colligation::{is_coisometric, transfer_symbol};
use crate::equiv::{equivalence_solve, Verdict};
use crate::error::{Error, Result};
use crate::fock::NCSeries;
use crate::io::{complex_from_json, lifting_from_json, matrix_from_json, LiftingJson, MatrixJson};
use crate::lifting::{
    ambient_symbol, lifting_char_decomposed_from, lifting_char_direct, lifting_colligation_from,
    sigma_map, Lifting,
};
use crate::numlin::{hstack, max_abs, op_norm, vstack, CMatrix, DEFAULT_RANK_TOL};
use crate::rowcon::defects;

pub const EXAMPLES: [&str; 4] = ["5.1a", "5.1b", "5.2", "5.3"];

const FIXTURES: [(&str, &str); 4] = [
    ("5.1a", include_str!("../fixtures/example_5_1_a.json")),
    ("5.1b", include_str!("../fixtures/example_5_1_b.json")),
    ("5.2", include_str!("../fixtures/example_5_2.json")),
    ("5.3", include_str!("../fixtures/example_5_3.json")),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub label: String,
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Expected {
    pub b: [f64; 2],
    pub gamma: [f64; 2],
    pub dstar_gamma_norm: f64,
    pub d_e: MatrixJson,
    #[serde(default)]
    pub d_e_check: Option<MatrixJson>,
    #[serde(default)]
    pub sigma_de: Option<MatrixJson>,
    #[serde(default)]
    pub sigma_ambient: Option<MatrixJson>,
    #[serde(default)]
    pub colligation: Option<MatrixJson>,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub formula: String,
    pub lifting: LiftingJson,
    pub degree: usize,
    #[serde(default)]
    pub alpha: Option<[f64; 2]>,
    pub expected: Expected,
}

/// Names accepted by [`fixture`]: `5.1a`, `5.1b`, `5.2`, `5.3`, and `5.1`
/// for both `5.1` fixtures via [`expand_name`].
pub fn expand_name(which: &str) -> Result<Vec<&'static str>> {
    match which {
        "all" => Ok(EXAMPLES.to_vec()),
        "5.1" => Ok(vec!["5.1a", "5.1b"]),
        other => EXAMPLES
            .iter()
            .find(|&&n| n == other)
            .map(|&n| vec![n])
            .ok_or_else(|| Error::BadParameter(format!("unknown example {other:?}"))),
    }
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let text = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::BadParameter(format!("unknown example {name:?}")))?;
    crate::io::parse(text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleReport {
    pub name: String,
    pub formula: String,
    pub checks: Vec<Check>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, label: impl Into<String>, deviation: f64, tol: f64) {
        self.checks.push(Check {
            label: label.into(),
            deviation,
            tol,
            pass: deviation <= tol,
        });
    }
}

fn series_column(s: &NCSeries, m: &CMatrix, col: usize) -> Vec<num_complex::Complex64> {
    s.coeffs().iter().map(|c| (c * m)[(0, col)]).collect()
}

fn component_deviation(got: &[num_complex::Complex64], want: &Component) -> f64 {
    if got.len() != want.coeffs.len() {
        return f64::INFINITY;
    }
    got.iter()
        .zip(&want.coeffs)
        .map(|(g, &w)| (g - complex_from_json(w)).norm())
        .fold(0.0, f64::max)
}

/// The lifting `E` of a fixture.
pub fn example_lifting(name: &str) -> Result<Lifting> {
    lifting_from_json(&fixture(name)?.lifting)
}

pub fn run_example(name: &str, tol: f64) -> Result<ExampleReport> {
    let fx = fixture(name)?;
    let e = lifting_from_json(&fx.lifting)?;
    let ex = &fx.expected;
    let mut rep = ExampleReport {
        name: fx.name.clone(),
        formula: fx.formula.clone(),
        checks: Vec::new(),
    };
    let sm = sigma_map(&e)?;
    let g = &sm.gamma;
    rep.push("B", (e.b_blocks()[0][(0, 0)] - complex_from_json(ex.b)).norm(), tol);
    rep.push("γ", (g.gamma[(0, 0)] - complex_from_json(ex.gamma)).norm(), tol);
    rep.push("‖D_{*,γ}‖", (op_norm(&g.dstar_gamma) - ex.dstar_gamma_norm).abs(), tol);
    let de = defects(e.e(), DEFAULT_RANK_TOL)?;
    rep.push("D_E", max_abs(&(&de.d - matrix_from_json(&ex.d_e)?)), tol);
    if let Some(m) = &ex.d_e_check {
        rep.push("D_E (numerical root)", max_abs(&(&de.d - matrix_from_json(m)?)), tol);
    }
    if let Some(m) = &ex.sigma_de {
        rep.push("σD_E", max_abs(&(&sm.sigma_de - matrix_from_json(m)?)), tol);
    }
    if let Some(m) = &ex.sigma_ambient {
        rep.push("σ", max_abs(&(sm.sigma_ambient() - matrix_from_json(m)?)), tol);
    }

    let theta = lifting_char_decomposed_from(&e, &sm, fx.degree)?;
    let direct = lifting_char_direct(&e, fx.degree)?;
    rep.push("direct = decomposed", theta.max_deviation(&direct)?, tol);
    let v = lifting_colligation_from(&e, &sm)?;
    rep.push("θ_V = θ_{C,E}", transfer_symbol(&v, fx.degree)?.max_deviation(&theta)?, tol);
    rep.push("V co-isometric", is_coisometric(&v, tol).1, tol);
    if let Some(m) = &ex.colligation {
        let qe = sm.defects_e.q_d().adjoint();
        let top = hstack(v.state_dim(), &[&v.a_blocks()[0], &(v.b() * &qe)]);
        let bottom = hstack(v.out_dim(), &[v.c(), &(v.d() * &qe)]);
        let amb = vstack(top.ncols(), &[&top, &bottom]);
        rep.push("V", max_abs(&(amb - matrix_from_json(m)?)), tol);
    }

    let amb = ambient_symbol(&theta, &sm)?;
    let de_amb = &de.d;
    let sigma_star = sm.sigma.adjoint();
    for comp in &ex.components {
        let dev = match comp.label.as_str() {
            "blaschke" => {
                let coeffs = comp
                    .coeffs
                    .iter()
                    .map(|&z| CMatrix::from_element(1, 1, complex_from_json(z)))
                    .collect();
                let target = NCSeries::from_coeffs(1, 1, 1, fx.degree, coeffs)?;
                let r = equivalence_solve(&theta, &target, Some(tol.max(1e-8)))?;
                if r.status == Verdict::Confirmed {
                    r.residual
                } else {
                    f64::INFINITY
                }
            }
            "theta e1" => component_deviation(&series_column(&amb, &identity_of(&amb), 0), comp),
            "theta e2" => component_deviation(&series_column(&amb, &identity_of(&amb), 1), comp),
            "theta D_E e_C" => component_deviation(&series_column(&amb, de_amb, 0), comp),
            "theta D_E e_A" => component_deviation(&series_column(&amb, de_amb, 1), comp),
            "gamma theta_A" => {
                component_deviation(&series_column(&theta, &sigma_star, sm.dim_dstar_gamma), comp)
            }
            other => return Err(Error::BadParameter(format!("unknown component {other:?}"))),
        };
        let ctol = if comp.label == "blaschke" { tol.max(1e-8) } else { tol };
        rep.push(comp.label.clone(), dev, ctol);
    }
    Ok(rep)
}

fn identity_of(s: &NCSeries) -> CMatrix {
    crate::numlin::identity(s.in_dim())
}
