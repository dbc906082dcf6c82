use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use charfock::colligation::{is_coisometric, transfer_oracle, transfer_symbol, unobservable_subspace};
use charfock::equiv::{coincidence_solve, equivalence_solve, EquivalenceResult, SolverOptions, Verdict};
use charfock::io::{
    colligation_from_json, lifting_from_json, matrix_to_json, parse, rowcon_from_json,
    series_from_json, series_to_json, to_pretty, ColligationJson, LiftingJson, NCSeriesJson,
    RowContractionJson,
};
use charfock::lifting::{lifting_char_decomposed, lifting_char_direct, minimality_check, resolving_check};
use charfock::mobius::{default_samples, verify_cf_relation, verify_lifting_cf};
use charfock::rowcon::{char_symbol, char_symbol_oracle, cnc_subspace, validate};
use charfock::suites::{aggregate, case_seed, run_case, Suite, SuiteReport};
use charfock::worked::{expand_name, run_example};
use charfock::{Error, NCSeries};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

const OK: u8 = 0;
const CHECK_FAILED: u8 = 1;
const INVALID_INPUT: u8 = 2;
const UNKNOWN: u8 = 3;

#[derive(Parser)]
#[command(name = "charfock", version, about = "Characteristic functions of row contractions and liftings")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Master seed; CHARFOCK_SEED takes precedence.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Direct,
    Decomposed,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Cnc,
    Coisom,
    Observable,
    Minimal,
    Resolving,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Rowcon,
    Colligation,
    Lifting,
    Equiv,
    Mobius,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic symbol of a row contraction.
    Charfn {
        input: PathBuf,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Also compare against the Neumann-series oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Transfer symbol of a colligation.
    Transfer {
        input: PathBuf,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Characteristic symbol of a lifting.
    LiftCharfn {
        input: PathBuf,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Method::Decomposed)]
        method: Method,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Structural checks.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        input: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Search for unitaries U, Ũ with Ũ θ₁ = θ₂ U.
    Coincide {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Search for a unitary v with θ₁ = θ₂ v.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Möbius-transform relations for a single contraction or a lifting (d = 1).
    Mobius {
        input: PathBuf,
        /// Real part of the transform parameter.
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        /// Imaginary part of the transform parameter.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, default_value_t = 40)]
        degree: usize,
    },
    /// Reproduce the worked examples.
    Examples {
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Seeded property suites.
    Proptest {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

/// A rendered report and its exit status.
struct Report {
    json: Value,
    text: String,
    code: u8,
}

enum Failure {
    Input(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<Report, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> std::result::Result<T, Failure> {
    parse(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn check_tol(tol: f64) -> std::result::Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Input(format!("tolerance must be positive, got {tol}")))
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn code(pass: bool) -> u8 {
    if pass {
        OK
    } else {
        CHECK_FAILED
    }
}

fn series_text(s: &NCSeries) -> String {
    let mut out = format!(
        "series: arity {}, {}x{} coefficients, degree {}\n",
        s.arity(),
        s.out_dim(),
        s.in_dim(),
        s.degree()
    );
    for (w, m) in s.iter() {
        let _ = writeln!(out, "  {w}:");
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| fmt_complex(m[(i, j)])).collect();
            let _ = writeln!(out, "    [{}]", row.join(", "));
        }
    }
    out
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:+.12e}{:+.12e}i", z.re, z.im)
}

fn oracle_line(dev: f64, tol: f64) -> String {
    format!("oracle deviation {dev:.3e} (tol {tol:.1e}): {}\n", status(dev <= tol))
}

fn cmd_charfn(input: &Path, degree: usize, oracle: bool, tol: f64) -> Outcome {
    check_tol(tol)?;
    let t = rowcon_from_json(&read_json::<RowContractionJson>(input)?)?;
    let s = char_symbol(&t, degree)?;
    let mut json = json!({ "series": series_to_json(&s) });
    let mut text = series_text(&s);
    let mut pass = true;
    if oracle {
        let dev = s.max_deviation(&char_symbol_oracle(&t, degree)?)?;
        pass = dev <= tol;
        json["oracle_deviation"] = json!(dev);
        text.push_str(&oracle_line(dev, tol));
    }
    Ok(Report { json, text, code: code(pass) })
}

fn cmd_transfer(input: &Path, degree: usize, oracle: bool, tol: f64) -> Outcome {
    check_tol(tol)?;
    let w = colligation_from_json(&read_json::<ColligationJson>(input)?)?;
    let s = transfer_symbol(&w, degree)?;
    let mut json = json!({ "series": series_to_json(&s) });
    let mut text = series_text(&s);
    let mut pass = true;
    if oracle {
        let dev = s.max_deviation(&transfer_oracle(&w, degree)?)?;
        pass = dev <= tol;
        json["oracle_deviation"] = json!(dev);
        text.push_str(&oracle_line(dev, tol));
    }
    Ok(Report { json, text, code: code(pass) })
}

fn cmd_lift_charfn(input: &Path, degree: usize, method: Method, tol: f64) -> Outcome {
    check_tol(tol)?;
    let e = lifting_from_json(&read_json::<LiftingJson>(input)?)?;
    let mut text = String::new();
    if !minimality_check(&e).minimal {
        text.push_str("warning: lifting is not minimal\n");
    }
    let (s, dev) = match method {
        Method::Direct => (lifting_char_direct(&e, degree)?, None),
        Method::Decomposed => (lifting_char_decomposed(&e, degree)?, None),
        Method::Both => {
            let s = lifting_char_decomposed(&e, degree)?;
            let dev = s.max_deviation(&lifting_char_direct(&e, degree)?)?;
            (s, Some(dev))
        }
    };
    let mut json = json!({ "series": series_to_json(&s) });
    text.push_str(&series_text(&s));
    let mut pass = true;
    if let Some(dev) = dev {
        pass = dev <= tol;
        json["direct_decomposed_deviation"] = json!(dev);
        let _ = writeln!(text, "direct vs decomposed {dev:.3e} (tol {tol:.1e}): {}", status(pass));
    }
    Ok(Report { json, text, code: code(pass) })
}

fn cmd_check(kind: CheckKind, input: &Path, tol: f64) -> Outcome {
    check_tol(tol)?;
    let (name, pass, detail) = match kind {
        CheckKind::Cnc => {
            let t = rowcon_from_json(&read_json::<RowContractionJson>(input)?)?;
            let v = validate(&t);
            if !v.is_contraction {
                return Err(Error::NotContraction { norm: v.norm }.into());
            }
            let dim = cnc_subspace(&t)?.dim();
            ("cnc", dim == 0, json!({ "non_cnc_dim": dim }))
        }
        CheckKind::Coisom => {
            let w = colligation_from_json(&read_json::<ColligationJson>(input)?)?;
            let (ok, res) = is_coisometric(&w, tol);
            ("coisom", ok, json!({ "residual": res }))
        }
        CheckKind::Observable => {
            let w = colligation_from_json(&read_json::<ColligationJson>(input)?)?;
            let dim = unobservable_subspace(&w).dim();
            ("observable", dim == 0, json!({ "unobservable_dim": dim }))
        }
        CheckKind::Minimal => {
            let e = lifting_from_json(&read_json::<LiftingJson>(input)?)?;
            let r = minimality_check(&e);
            (
                "minimal",
                r.minimal,
                json!({ "reachable_dim": r.reachable_dim, "total_dim": r.total_dim }),
            )
        }
        CheckKind::Resolving => {
            let e = lifting_from_json(&read_json::<LiftingJson>(input)?)?;
            let r = resolving_check(&e)?;
            let witness = r.witness.as_ref().map(matrix_to_json);
            (
                "resolving",
                r.resolving,
                json!({ "k1_dim": r.k1_dim, "k2_dim": r.k2_dim, "witness": witness }),
            )
        }
    };
    let mut json = json!({ "check": name, "pass": pass });
    let mut text = format!("{name}: {}\n", status(pass));
    if let Value::Object(m) = detail {
        for (k, v) in m {
            if !v.is_null() {
                let _ = writeln!(text, "  {k}: {v}");
            }
            json[k] = v;
        }
    }
    Ok(Report { json, text, code: code(pass) })
}

fn verdict_report(kind: &str, r: &EquivalenceResult) -> Report {
    let verdict = match r.status {
        Verdict::Confirmed => "confirmed",
        Verdict::RefutedByInvariant => "refuted_by_invariant",
        Verdict::Unknown => "unknown",
    };
    let mut text = format!("{kind}: {verdict}\n  residual {:.3e} (tol {:.1e})\n", r.residual, r.tol);
    if let Some(c) = &r.certificate {
        let _ = writeln!(text, "  certificate: {c}");
    }
    let json = json!({
        "command": kind,
        "status": r.status,
        "residual": r.residual,
        "tol": r.tol,
        "certificate": r.certificate,
        "unitaries": r.unitaries.iter().map(matrix_to_json).collect::<Vec<_>>(),
    });
    let code = match r.status {
        Verdict::Confirmed => OK,
        Verdict::RefutedByInvariant => CHECK_FAILED,
        Verdict::Unknown => UNKNOWN,
    };
    Report { json, text, code }
}

fn read_series(path: &Path) -> std::result::Result<NCSeries, Failure> {
    Ok(series_from_json(&read_json::<NCSeriesJson>(path)?)?)
}

fn cmd_coincide(left: &Path, right: &Path, tol: Option<f64>, restarts: usize, iters: usize, seed: u64) -> Outcome {
    if let Some(t) = tol {
        check_tol(t)?;
    }
    let opts = SolverOptions { restarts, iters, seed, tol };
    let r = coincidence_solve(&read_series(left)?, &read_series(right)?, &opts)?;
    Ok(verdict_report("coincide", &r))
}

fn cmd_equiv(left: &Path, right: &Path, tol: Option<f64>) -> Outcome {
    if let Some(t) = tol {
        check_tol(t)?;
    }
    let r = equivalence_solve(&read_series(left)?, &read_series(right)?, tol)?;
    Ok(verdict_report("equiv", &r))
}

#[derive(Serialize)]
struct SampleJson {
    lambda: [f64; 2],
    mu: [f64; 2],
    residual: f64,
    bound: f64,
}

fn samples_json(v: &[charfock::mobius::CfSample]) -> Vec<SampleJson> {
    v.iter()
        .map(|s| SampleJson {
            lambda: [s.lambda.re, s.lambda.im],
            mu: [s.mu.re, s.mu.im],
            residual: s.residual,
            bound: s.bound,
        })
        .collect()
}

fn samples_text(title: &str, v: &[charfock::mobius::CfSample]) -> String {
    let mut out = format!("  {title}:\n");
    for s in v {
        let _ = writeln!(
            out,
            "    λ = {} μ = {} residual {:.3e} bound {:.3e} {}",
            fmt_complex(s.lambda),
            fmt_complex(s.mu),
            s.residual,
            s.bound,
            status(s.holds())
        );
    }
    out
}

fn cmd_mobius(input: &Path, a: Complex64, degree: usize) -> Outcome {
    let text_in = read(input)?;
    let samples = default_samples();
    if let Ok(lj) = parse::<LiftingJson>(&text_in) {
        let e = lifting_from_json(&lj)?;
        let r = verify_lifting_cf(&e, a, &samples, degree)?;
        let pass = r.holds();
        let mut text = format!("mobius lifting a = {}: {}\n", fmt_complex(a), status(pass));
        let _ = writeln!(text, "  input unitarity {:.3e}", r.input_unitarity);
        let _ = writeln!(text, "  γ relation {:.3e}", r.gamma_residual);
        text.push_str(&samples_text("rotated", &r.rotated));
        text.push_str(&samples_text("factored", &r.factored));
        let verbatim = r.factored_verbatim.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(text, "  factored with D_(A_a) in the corner: worst residual {verbatim:.3e}");
        let json = json!({
            "a": [a.re, a.im],
            "pass": pass,
            "input_unitarity": r.input_unitarity,
            "gamma_residual": r.gamma_residual,
            "rotated": samples_json(&r.rotated),
            "factored": samples_json(&r.factored),
            "factored_verbatim": r.factored_verbatim,
        });
        return Ok(Report { json, text, code: code(pass) });
    }
    let t = rowcon_from_json(&read_json::<RowContractionJson>(input)?)?;
    if t.arity() != 1 {
        return Err(Error::ArityNotOne(t.arity()).into());
    }
    let v = verify_cf_relation(t.block(0), a, &samples, degree)?;
    let pass = v.iter().all(|s| s.holds());
    let mut text = format!("mobius contraction a = {}: {}\n", fmt_complex(a), status(pass));
    text.push_str(&samples_text("relation", &v));
    let json = json!({ "a": [a.re, a.im], "pass": pass, "relation": samples_json(&v) });
    Ok(Report { json, text, code: code(pass) })
}

fn cmd_examples(which: &str, tol: f64) -> Outcome {
    check_tol(tol)?;
    let names = expand_name(which)?;
    let mut text = String::new();
    let mut reports = Vec::new();
    let mut pass = true;
    for name in names {
        let rep = run_example(name, tol)?;
        let ok = rep.passed();
        pass &= ok;
        let _ = writeln!(text, "example {}: {}", rep.name, status(ok));
        if ok {
            let _ = writeln!(text, "  {}", rep.formula);
        }
        for c in &rep.checks {
            let _ = writeln!(
                text,
                "  {:<24} {:.3e} (tol {:.1e}) {}",
                c.label,
                c.deviation,
                c.tol,
                status(c.pass)
            );
        }
        reports.push(rep);
    }
    Ok(Report {
        json: json!({ "pass": pass, "examples": reports }),
        text,
        code: code(pass),
    })
}

fn run_suite_parallel(suite: Suite, cases: usize, seed: u64) -> SuiteReport {
    let outcomes: Vec<_> = (0..cases as u64)
        .into_par_iter()
        .map(|i| run_case(suite, case_seed(seed, suite, i)))
        .collect();
    aggregate(suite, seed, &outcomes)
}

fn cmd_proptest(suite: SuiteArg, cases: usize, seed: u64) -> Outcome {
    let suites: Vec<Suite> = match suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Rowcon => vec![Suite::Rowcon],
        SuiteArg::Colligation => vec![Suite::Colligation],
        SuiteArg::Lifting => vec![Suite::Lifting],
        SuiteArg::Equiv => vec![Suite::Equiv],
        SuiteArg::Mobius => vec![Suite::Mobius],
    };
    let reports: Vec<SuiteReport> = suites.iter().map(|&s| run_suite_parallel(s, cases, seed)).collect();
    let pass = reports.iter().all(SuiteReport::ok);
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "suite {} ({} cases, seed {}): {}", r.suite, r.cases, r.seed, status(r.ok()));
        for p in &r.properties {
            let worst = match p.worst_residual {
                Some(w) => format!("{w:.3e}"),
                None if p.cases == 0 => "n/a".into(),
                None => "non-finite".into(),
            };
            let _ = writeln!(
                text,
                "  {:<52} {:>4}/{:<4} worst {:>10} (tol {:.1e}) {}",
                p.property,
                p.passed,
                p.cases,
                worst,
                p.tol,
                status(p.ok())
            );
        }
    }
    Ok(Report {
        json: json!({ "pass": pass, "suites": reports }),
        text,
        code: code(pass),
    })
}

fn seed_from_env(default: u64) -> std::result::Result<u64, Failure> {
    match std::env::var("CHARFOCK_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("CHARFOCK_SEED is not a 64-bit integer: {s:?}"))),
        Err(_) => Ok(default),
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let seed = seed_from_env(cli.common.seed)?;
    match &cli.command {
        Command::Charfn { input, degree, oracle, tol } => cmd_charfn(input, *degree, *oracle, *tol),
        Command::Transfer { input, degree, oracle, tol } => cmd_transfer(input, *degree, *oracle, *tol),
        Command::LiftCharfn { input, degree, method, tol } => cmd_lift_charfn(input, *degree, *method, *tol),
        Command::Check { kind, input, tol } => cmd_check(*kind, input, *tol),
        Command::Coincide { left, right, tol, restarts, iters } => {
            cmd_coincide(left, right, *tol, *restarts, *iters, seed)
        }
        Command::Equiv { left, right, tol } => cmd_equiv(left, right, *tol),
        Command::Mobius { input, re, im, degree } => cmd_mobius(input, Complex64::new(*re, *im), *degree),
        Command::Examples { which, tol } => cmd_examples(which, *tol),
        Command::Proptest { suite, cases } => cmd_proptest(*suite, *cases, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match dispatch(&cli) {
        Ok(r) => r,
        Err(Failure::Input(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(INVALID_INPUT);
        }
    };
    let body = match cli.common.format {
        Format::Json => format!("{}\n", to_pretty(&report.json)),
        Format::Text => report.text,
    };
    match &cli.common.output {
        Some(path) => {
            if let Err(e) = fs::write(path, body) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(INVALID_INPUT);
            }
        }
        None => print!("{body}"),
    }
    ExitCode::from(report.code)
}
