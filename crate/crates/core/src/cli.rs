//! Command-line front end: instance files in, text or JSON reports out.
//!
//! Exit codes: 0 attained, 1 unattained, 2 unbounded, 3 infeasible,
//! 64 malformed input or flags. `check` exits 1 when any instance fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::instance::Qp1qcInstance;
use crate::linalg::{SymMatrix, Tolerance};
use crate::oracle::{achieved_class, cross_check, gen_instance, TargetClass, MAX_GRID_DIM};
use crate::pencil::{pencil_interval, sdc_certificate, sdc_residuals, PencilInterval, SdcResult};
use crate::slater::slater_holds;
use crate::solution::{Path, Solution, Status};
use crate::solver::classify_and_solve;

pub const EXIT_ATTAINED: u8 = 0;
pub const EXIT_UNATTAINED: u8 = 1;
pub const EXIT_UNBOUNDED: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
/// Exit code of `check` when some instance fails.
pub const EXIT_CHECK_FAILED: u8 = 1;

/// Refinement rounds for oracle cross-checks.
const ORACLE_ROUNDS: usize = 6;
/// Allowed asymmetry of `A` and `B`, relative to their largest entry.
const ASYMMETRY_REL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "qp1qc",
    version,
    about = "Classify and solve quadratic programs with one quadratic constraint"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Relative tolerance for rank and range decisions.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Emit a single JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Cross-check the result with the grid oracle (n ≤ 3).
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Seed for randomized searches and instance generation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify and solve an instance.
    Solve { path: PathBuf },
    /// Report the semidefinite interval of A + σB and the SDC status.
    Pencil { path: PathBuf },
    /// Report a simultaneous diagonalization of A and B, if one is found.
    Sdc { path: PathBuf },
    /// Solve generated instances and compare against the oracles.
    Check {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

/// Malformed instance file, naming the key at fault when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub key: Option<String>,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.key {
            Some(k) => write!(f, "key `{k}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> InputError {
    InputError {
        key: Some(key.to_string()),
        message: message.into(),
    }
}

fn number(key: &str, v: &Value) -> std::result::Result<f64, InputError> {
    let x = v
        .as_f64()
        .ok_or_else(|| bad(key, format!("expected a number, found {v}")))?;
    if !x.is_finite() {
        return Err(bad(key, "number is not finite"));
    }
    Ok(x)
}

fn vector(key: &str, v: &Value, n: usize) -> std::result::Result<DVector<f64>, InputError> {
    let items = v
        .as_array()
        .ok_or_else(|| bad(key, "expected an array of numbers"))?;
    if items.len() != n {
        return Err(bad(
            key,
            format!("expected {n} entries, found {}", items.len()),
        ));
    }
    let xs = items
        .iter()
        .map(|x| number(key, x))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(xs))
}

fn matrix(key: &str, v: &Value, n: usize) -> std::result::Result<SymMatrix, InputError> {
    let rows = v
        .as_array()
        .ok_or_else(|| bad(key, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(bad(key, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let r = vector(key, row, n).map_err(|e| bad(key, format!("row {i}: {}", e.message)))?;
        m.set_row(i, &r.transpose());
    }
    let asym = (&m - m.transpose()).amax();
    let scale = m.amax().max(1.0);
    if asym > ASYMMETRY_REL * scale {
        return Err(bad(
            key,
            format!("matrix is not symmetric (max |Mij − Mji| = {asym:e})"),
        ));
    }
    SymMatrix::new(m).map_err(|e| bad(key, e.to_string()))
}

/// Parses an instance document with keys `n`, `A`, `B`, `f`, `g`, `mu`.
pub fn parse_instance(text: &str) -> std::result::Result<Qp1qcInstance, InputError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| InputError {
        key: None,
        message: format!("not valid JSON: {e}"),
    })?;
    let obj = doc.as_object().ok_or_else(|| InputError {
        key: None,
        message: "expected a JSON object".into(),
    })?;
    let get = |k: &str| obj.get(k).ok_or_else(|| bad(k, "missing"));
    let n = get("n")?
        .as_u64()
        .filter(|&n| n >= 1)
        .ok_or_else(|| bad("n", "expected a positive integer"))? as usize;
    let a = matrix("A", get("A")?, n)?;
    let b = matrix("B", get("B")?, n)?;
    let f = vector("f", get("f")?, n)?;
    let g = vector("g", get("g")?, n)?;
    let mu = number("mu", get("mu")?)?;
    Qp1qcInstance::new(a, b, f, g, mu).map_err(|e| InputError {
        key: None,
        message: e.to_string(),
    })
}

/// Serializes as a JSON number, or as `"+inf"`, `"-inf"`, `null`.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            x if x.is_finite() => s.serialize_f64(x),
            x if x == f64::INFINITY => s.serialize_str("+inf"),
            x if x == f64::NEG_INFINITY => s.serialize_str("-inf"),
            _ => s.serialize_none(),
        }
    }
}

fn nums(v: &DVector<f64>) -> Vec<Num> {
    v.iter().map(|&x| Num(x)).collect()
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<Num>> {
    m.row_iter()
        .map(|r| r.iter().map(|&x| Num(x)).collect())
        .collect()
}

fn fmt_num(x: f64) -> String {
    match x {
        x if x == f64::INFINITY => "+inf".into(),
        x if x == f64::NEG_INFINITY => "-inf".into(),
        x if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e16) => format!("{x:e}"),
        x => format!("{x}"),
    }
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Serialize)]
pub struct PencilReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<Num>,
}

impl PencilReport {
    fn new(iv: &PencilInterval) -> Self {
        let (sigma, lo, hi) = match *iv {
            PencilInterval::Empty => (None, None, None),
            PencilInterval::Singleton(s) => (Some(Num(s)), None, None),
            PencilInterval::Interval { lo, hi } => (None, Some(Num(lo)), Some(Num(hi))),
        };
        PencilReport {
            kind: iv.kind(),
            sigma,
            lo,
            hi,
        }
    }

    fn text(&self) -> String {
        let f = |n: &Option<Num>| n.map_or(String::new(), |n| fmt_num(n.0));
        match self.kind {
            "singleton" => format!("singleton {{{}}}", f(&self.sigma)),
            "interval" => format!("interval [{}, {}]", f(&self.lo), f(&self.hi)),
            k => k.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SdcReport {
    pub status: &'static str,
    #[serde(rename = "cond_C")]
    pub cond_c: Option<Num>,
    pub method: Option<&'static str>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<Num>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diag_a: Option<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diag_b: Option<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<[Num; 2]>,
}

impl SdcReport {
    fn new(inst: &Qp1qcInstance, r: &SdcResult, full: bool) -> Self {
        let mut rep = SdcReport {
            status: r.kind(),
            cond_c: None,
            method: None,
            c: None,
            diag_a: None,
            diag_b: None,
            residuals: None,
        };
        if let SdcResult::Sdc(cert) = r {
            rep.cond_c = Some(Num(cert.cond));
            rep.method = Some(cert.method.as_str());
            if full {
                let (ra, rb) = sdc_residuals(&inst.a, &inst.b, cert);
                rep.c = Some(rows(&cert.c));
                rep.diag_a = Some(nums(&cert.d_a));
                rep.diag_b = Some(nums(&cert.d_b));
                rep.residuals = Some([Num(ra), Num(rb)]);
            }
        }
        rep
    }

    fn text(&self) -> String {
        match (&self.cond_c, &self.method) {
            (Some(c), Some(m)) => format!("{} (cond(C) {}, {m})", self.status, fmt_num(c.0)),
            _ => self.status.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CertificateReport {
    pub sigma: Num,
    pub feas_resid: Num,
    pub stat_resid: Num,
    pub comp_resid: Num,
    pub pencil_min_eig: Num,
    pub scale: Num,
    pub tol: Num,
    pub passes: bool,
}

#[derive(Debug, Serialize)]
pub struct WitnessReport {
    pub base: Vec<Num>,
    pub direction: Vec<Num>,
    pub curvature: Vec<Num>,
}

impl WitnessReport {
    fn new(p: &Path) -> Self {
        WitnessReport {
            base: nums(&p.base),
            direction: nums(&p.direction),
            curvature: nums(&p.curvature),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OracleCheckReport {
    /// `None` when the oracle could not run.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<f64>,
    pub pencil: f64,
    pub sdc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub status: &'static str,
    pub case: &'static str,
    /// Optimal value or infimum.
    pub value: Option<Num>,
    pub x_star: Option<Vec<Num>>,
    pub sigma_star: Option<Num>,
    pub certificate: Option<CertificateReport>,
    pub witness: Option<WitnessReport>,
    pub pencil: PencilReport,
    pub sdc: SdcReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheckReport>,
    pub timings_ms: Timings,
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Exit code for a solver outcome.
pub fn exit_code(status: &Status) -> u8 {
    match status {
        Status::Attained { .. } => EXIT_ATTAINED,
        Status::Unattained { .. } => EXIT_UNATTAINED,
        Status::UnboundedBelow { .. } => EXIT_UNBOUNDED,
        Status::Infeasible => EXIT_INFEASIBLE,
    }
}

fn oracle_check(inst: &Qp1qcInstance, sol: &Solution, tol: Tolerance) -> OracleCheckReport {
    if inst.dim() > MAX_GRID_DIM {
        return OracleCheckReport {
            passed: None,
            detail: format!("skipped: the grid oracle needs n ≤ {MAX_GRID_DIM}"),
        };
    }
    match slater_holds(inst, tol).and_then(|s| cross_check(inst, sol, s, ORACLE_ROUNDS)) {
        Ok(c) => OracleCheckReport {
            passed: Some(c.passed),
            detail: c.detail,
        },
        Err(e) => OracleCheckReport {
            passed: Some(false),
            detail: e.to_string(),
        },
    }
}

/// Solves and assembles the full report.
pub fn solve_report(
    inst: &Qp1qcInstance,
    tol: Tolerance,
    with_oracle: bool,
) -> Result<(SolveReport, u8)> {
    let t = Instant::now();
    let sol = classify_and_solve(inst, tol)?;
    let t_solve = millis(t);
    let t = Instant::now();
    let iv = pencil_interval(&inst.a, &inst.b, tol)?;
    let t_pencil = millis(t);
    let t = Instant::now();
    let sdc = sdc_certificate(&inst.a, &inst.b, tol)?;
    let t_sdc = millis(t);
    let (oracle, t_oracle) = if with_oracle {
        let t = Instant::now();
        (Some(oracle_check(inst, &sol, tol)), Some(millis(t)))
    } else {
        (None, None)
    };

    let (x_star, certificate, witness) = match &sol.status {
        Status::Attained {
            x_star,
            certificate,
            ..
        } => (
            Some(nums(x_star)),
            certificate.as_ref().map(|c| CertificateReport {
                sigma: Num(c.sigma),
                feas_resid: Num(c.feas_resid),
                stat_resid: Num(c.stat_resid),
                comp_resid: Num(c.comp_resid),
                pencil_min_eig: Num(c.pencil_min_eig),
                scale: Num(c.scale),
                tol: Num(c.tol),
                passes: c.passes(),
            }),
            None,
        ),
        Status::UnboundedBelow { witness } => {
            (None, None, witness.as_ref().map(WitnessReport::new))
        }
        _ => (None, None, None),
    };
    let report = SolveReport {
        status: sol.status.kind(),
        case: sol.case.as_str(),
        value: sol.status.value().map(Num),
        x_star,
        sigma_star: sol.status.sigma_star().map(Num),
        certificate,
        witness,
        pencil: PencilReport::new(&iv),
        sdc: SdcReport::new(inst, &sdc, false),
        oracle,
        timings_ms: Timings {
            solve: Some(t_solve),
            pencil: t_pencil,
            sdc: t_sdc,
            oracle: t_oracle,
        },
    };
    Ok((report, exit_code(&sol.status)))
}

fn solve_text(r: &SolveReport) -> String {
    let mut out = vec![
        format!("status:      {}", r.status),
        format!("case:        {}", r.case),
    ];
    let label = if r.status == "unattained" {
        "infimum:    "
    } else {
        "value:      "
    };
    if let Some(v) = r.value {
        out.push(format!("{label} {}", fmt_num(v.0)));
    }
    if let Some(x) = &r.x_star {
        let v = DVector::from_iterator(x.len(), x.iter().map(|n| n.0));
        out.push(format!("x*:          {}", fmt_vec(&v)));
    }
    if let Some(s) = r.sigma_star {
        out.push(format!("sigma*:      {}", fmt_num(s.0)));
    }
    if let Some(c) = &r.certificate {
        out.push(format!(
            "certificate: {} (feasibility {:.2e}, stationarity {:.2e}, complementarity {:.2e}, min eigenvalue {:.2e}, scale {:.2e})",
            if c.passes { "pass" } else { "FAIL" },
            c.feas_resid.0,
            c.stat_resid.0,
            c.comp_resid.0,
            c.pencil_min_eig.0,
            c.scale.0
        ));
    }
    if let Some(w) = &r.witness {
        let v = |xs: &[Num]| DVector::from_iterator(xs.len(), xs.iter().map(|n| n.0));
        out.push(format!(
            "witness:     x(t) = {} + t·{} + t²·{}",
            fmt_vec(&v(&w.base)),
            fmt_vec(&v(&w.direction)),
            fmt_vec(&v(&w.curvature))
        ));
    }
    out.push(format!("pencil:      {}", r.pencil.text()));
    out.push(format!("sdc:         {}", r.sdc.text()));
    if let Some(o) = &r.oracle {
        let verdict = match o.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "skipped",
        };
        out.push(format!("oracle:      {verdict} ({})", o.detail));
    }
    let t = &r.timings_ms;
    let mut times = format!(
        "solve {:.3}, pencil {:.3}, sdc {:.3}",
        t.solve.unwrap_or(0.0),
        t.pencil,
        t.sdc
    );
    if let Some(o) = t.oracle {
        times.push_str(&format!(", oracle {o:.3}"));
    }
    out.push(format!("time (ms):   {times}"));
    out.join("\n")
}

#[derive(Debug, Serialize)]
struct PencilCommandReport {
    pencil: PencilReport,
    sdc: SdcReport,
    timings_ms: Timings,
}

/// One generated instance that failed [`run_check`].
#[derive(Debug, Clone, Serialize)]
pub struct CheckFailure {
    pub index: usize,
    pub seed: u64,
    pub target: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub n: usize,
    pub total: usize,
    pub passed: usize,
    /// Achieved class of each instance, in order.
    pub classes: Vec<String>,
    pub failures: Vec<CheckFailure>,
}

/// Generates `count` instances from `seed`, solves each with `solve`, and
/// checks the result against the grid oracle and, for attained results,
/// the optimality certificate.
pub fn run_check<S>(
    seed: u64,
    count: usize,
    n: usize,
    tol: Tolerance,
    solve: S,
) -> Result<CheckSummary>
where
    S: Fn(&Qp1qcInstance, Tolerance) -> Result<Solution>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = CheckSummary {
        n,
        total: count,
        passed: 0,
        classes: Vec::with_capacity(count),
        failures: Vec::new(),
    };
    for index in 0..count {
        let inst_seed: u64 = rng.random();
        let gi = gen_instance(inst_seed, n, TargetClass::Any);
        let inst = &gi.instance;
        let fail = |detail: String| CheckFailure {
            index,
            seed: inst_seed,
            target: gi.target.to_string(),
            detail,
        };
        let sol = match solve(inst, tol) {
            Ok(s) => s,
            Err(e) => {
                summary.classes.push("error".into());
                summary.failures.push(fail(format!("solver error: {e}")));
                continue;
            }
        };
        summary.classes.push(achieved_class(&sol).to_string());
        let slater = slater_holds(inst, tol)?;
        if let Status::Attained { certificate, .. } = &sol.status {
            match certificate {
                Some(c) if !c.passes() => {
                    summary.failures.push(fail("certificate fails".into()));
                    continue;
                }
                None if slater => {
                    summary
                        .failures
                        .push(fail("attained without a certificate".into()));
                    continue;
                }
                _ => {}
            }
        }
        let outcome = cross_check(inst, &sol, slater, ORACLE_ROUNDS)?;
        if outcome.passed {
            summary.passed += 1;
        } else {
            summary.failures.push(fail(format!(
                "{} ({}): {}",
                sol.status.kind(),
                sol.case,
                outcome.detail
            )));
        }
    }
    Ok(summary)
}

fn read_instance(path: &PathBuf) -> std::result::Result<Qp1qcInstance, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_instance(&text).map_err(|e| format!("invalid instance {}: {e}", path.display()))
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

/// Runs the CLI on `args` (including the program name), writing reports to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let rendered = e.render();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> std::result::Result<u8, String> {
    let flags = &cli.flags;
    if !(flags.tol > 0.0 && flags.tol < 1.0) {
        return Err(format!("--tol must lie in (0, 1), got {}", flags.tol));
    }
    let tol = Tolerance::default().with_rel(flags.tol);
    let io = |e: std::io::Error| format!("cannot write output: {e}");
    match &cli.command {
        Command::Solve { path } => {
            let inst = read_instance(path)?;
            let (report, code) = solve_report(&inst, tol, flags.oracle)
                .map_err(|e| format!("solver failed: {e}"))?;
            if flags.json {
                emit_json(out, &report).map_err(io)?;
            } else {
                writeln!(out, "{}", solve_text(&report)).map_err(io)?;
            }
            Ok(code)
        }
        Command::Pencil { path } => {
            let inst = read_instance(path)?;
            let t = Instant::now();
            let iv = pencil_interval(&inst.a, &inst.b, tol).map_err(|e| e.to_string())?;
            let t_pencil = millis(t);
            let t = Instant::now();
            let sdc = sdc_certificate(&inst.a, &inst.b, tol).map_err(|e| e.to_string())?;
            let t_sdc = millis(t);
            let report = PencilCommandReport {
                pencil: PencilReport::new(&iv),
                sdc: SdcReport::new(&inst, &sdc, false),
                timings_ms: Timings {
                    solve: None,
                    pencil: t_pencil,
                    sdc: t_sdc,
                    oracle: None,
                },
            };
            if flags.json {
                emit_json(out, &report).map_err(io)?;
            } else {
                writeln!(
                    out,
                    "pencil: {}\nsdc:    {}",
                    report.pencil.text(),
                    report.sdc.text()
                )
                .map_err(io)?;
            }
            Ok(0)
        }
        Command::Sdc { path } => {
            let inst = read_instance(path)?;
            let sdc = sdc_certificate(&inst.a, &inst.b, tol).map_err(|e| e.to_string())?;
            let report = SdcReport::new(&inst, &sdc, true);
            if flags.json {
                emit_json(out, &report).map_err(io)?;
            } else {
                writeln!(out, "sdc: {}", report.text()).map_err(io)?;
                if let SdcResult::Sdc(cert) = &sdc {
                    writeln!(out, "C = {}", cert.c).map_err(io)?;
                    writeln!(out, "diag(CᵀAC) = {}", fmt_vec(&cert.d_a)).map_err(io)?;
                    writeln!(out, "diag(CᵀBC) = {}", fmt_vec(&cert.d_b)).map_err(io)?;
                }
            }
            Ok(0)
        }
        Command::Check { count, n } => {
            if *n == 0 || *n > MAX_GRID_DIM {
                return Err(format!(
                    "--n must lie in 1..={MAX_GRID_DIM} for the grid oracle, got {n}"
                ));
            }
            let summary = run_check(flags.seed, *count, *n, tol, classify_and_solve)
                .map_err(|e| format!("check failed: {e}"))?;
            if flags.json {
                emit_json(out, &summary).map_err(io)?;
            } else {
                for f in &summary.failures {
                    writeln!(
                        out,
                        "FAIL #{} (seed {}, target {}): {}",
                        f.index, f.seed, f.target, f.detail
                    )
                    .map_err(io)?;
                }
                writeln!(out, "{}/{} passed", summary.passed, summary.total).map_err(io)?;
            }
            Ok(if summary.failures.is_empty() {
                0
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SADDLE: &str =
        r#"{"n":2,"A":[[1,0],[0,-1]],"B":[[0,1],[1,0]],"f":[0,0],"g":[0,0],"mu":0}"#;

    #[test]
    fn parses_and_symmetrizes() {
        let i = parse_instance(
            r#"{"n":2,"A":[[1,1e-12],[0,2]],"B":[[1,0],[0,1]],"f":[1,2],"g":[0,0],"mu":3}"#,
        )
        .unwrap();
        assert_eq!(i.a[(0, 1)], i.a[(1, 0)]);
        assert_eq!(i.f[1], 2.0);
        assert_eq!(i.mu, 3.0);
    }

    #[test]
    fn diagnostics_name_the_key() {
        let cases = [
            (
                r#"{"n":2,"A":[[1,0],[0,1]],"B":[[1,0],[0,1]],"f":[0,0],"g":[0,0]}"#,
                "mu",
            ),
            (
                r#"{"n":2,"A":[[1,0],[0,1]],"B":[[1,0],[0,1]],"f":[0],"g":[0,0],"mu":1}"#,
                "f",
            ),
            (
                r#"{"n":2,"A":[[1,0.5],[0,1]],"B":[[1,0],[0,1]],"f":[0,0],"g":[0,0],"mu":1}"#,
                "A",
            ),
            (
                r#"{"n":2,"A":[[1,0],[0,1]],"B":[[1,0],[0]],"f":[0,0],"g":[0,0],"mu":1}"#,
                "B",
            ),
            (r#"{"n":0,"A":[],"B":[],"f":[],"g":[],"mu":1}"#, "n"),
            (
                r#"{"n":2,"A":[[1,0],[0,1]],"B":[[1,0],[0,1]],"f":[0,0],"g":[0,"x"],"mu":1}"#,
                "g",
            ),
        ];
        for (text, key) in cases {
            let e = parse_instance(text).unwrap_err();
            assert_eq!(e.key.as_deref(), Some(key), "{e}");
        }
        assert!(parse_instance("[1, 2]").unwrap_err().key.is_none());
        assert!(parse_instance("{").unwrap_err().key.is_none());
    }

    #[test]
    fn infinities_serialize_as_sentinels() {
        let s = serde_json::to_string(&[
            Num(f64::INFINITY),
            Num(f64::NEG_INFINITY),
            Num(1.5),
            Num(f64::NAN),
        ])
        .unwrap();
        assert_eq!(s, r#"["+inf","-inf",1.5,null]"#);
    }

    #[test]
    fn pencil_report_shapes() {
        let s = serde_json::to_string(&PencilReport::new(&PencilInterval::Singleton(0.0))).unwrap();
        assert_eq!(s, r#"{"kind":"singleton","sigma":0.0}"#);
        let s = serde_json::to_string(&PencilReport::new(&PencilInterval::Interval {
            lo: -1.0,
            hi: f64::INFINITY,
        }))
        .unwrap();
        assert_eq!(s, r#"{"kind":"interval","lo":-1.0,"hi":"+inf"}"#);
        assert_eq!(
            serde_json::to_string(&PencilReport::new(&PencilInterval::Empty)).unwrap(),
            r#"{"kind":"empty"}"#
        );
    }

    #[test]
    fn report_key_order_is_stable() {
        let inst = parse_instance(SADDLE).unwrap();
        let (r, code) = solve_report(&inst, Tolerance::default(), false).unwrap();
        assert_eq!(code, EXIT_UNBOUNDED);
        let text = serde_json::to_string(&r).unwrap();
        let keys = [
            "\"status\"",
            "\"case\"",
            "\"value\"",
            "\"x_star\"",
            "\"sigma_star\"",
            "\"pencil\"",
            "\"sdc\"",
            "\"timings_ms\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
    }

    #[test]
    fn usage_errors_exit_64() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["qp1qc", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(
            run(["qp1qc", "check", "--n", "5"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(
            run(
                ["qp1qc", "solve", "/nonexistent/file.json"],
                &mut out,
                &mut err
            ),
            EXIT_USAGE
        );
        assert_eq!(run(["qp1qc", "--help"], &mut out, &mut err), 0);
    }

    #[test]
    fn injected_fault_is_caught() {
        let shifted = |inst: &Qp1qcInstance, tol: Tolerance| {
            let mut s = classify_and_solve(inst, tol)?;
            if let Status::Attained { value, .. } = &mut s.status {
                *value -= 1.0;
            }
            Ok(s)
        };
        let good = run_check(3, 12, 2, Tolerance::default(), classify_and_solve).unwrap();
        let bad = run_check(3, 12, 2, Tolerance::default(), shifted).unwrap();
        assert_eq!(good.passed, 12, "{:?}", good.failures);
        assert!(!bad.failures.is_empty());
        assert_eq!(good.classes, bad.classes);
    }
}
