//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input, 3 unsupported
//! request. The backend follows `--backend` or `SOLVKIT_BACKEND`
//! (`rational`, `float`, `auto`); `auto` picks exact arithmetic for the
//! polynomial coordinate kinds.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, qes_lattice, spectrum_check};
use crate::model::{CertificateBlock, ModelFile, V31Mode};
use crate::polyop::HtOperator;
use crate::qes::{qes_feasible, QesModel};
use crate::scalar::{Rational, RealField};
use crate::sinusoid::Kind;
use crate::verify::{closure_coeffs, run_suite, verify_closure_with, Check, CheckReport, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "solvkit", version, about = "Spectra, eigenpolynomials and identity checks for discrete quantum mechanics")]
struct Cli {
    /// Arithmetic backend.
    #[arg(long, global = true, value_enum, env = "SOLVKIT_BACKEND", default_value_t = BackendChoice::Auto)]
    backend: BackendChoice,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    Auto,
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energies E(0), ..., E(n_max) of an L = 2 model.
    Spectrum {
        model: PathBuf,
        /// Highest level; defaults to min(N, 10).
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Coefficients of the eigenpolynomial P_n(η), lowest power first.
    Eigenpoly {
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run identity checks and print a JSON report.
    Verify {
        model: PathBuf,
        /// Comma-separated subset of: axioms, closure, alpha, dual, casimir, ladder, shape, telescoping, crum.
        #[arg(long)]
        checks: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the closure coefficients in the report.
        #[arg(long)]
        emit_certificate: bool,
    },
    /// Eigenvalues of the invariant block of an L = 3 or 4 model.
    Qes {
        model: PathBuf,
        /// Subspace degree; overrides the model's qes block.
        #[arg(long = "M", alias = "m")]
        m: Option<usize>,
        /// Print a JSON report instead of bare eigenvalues.
        #[arg(long)]
        report: bool,
    },
    /// Build the lattice Hamiltonian and compare it with the closed forms.
    Lattice {
        model: PathBuf,
        /// Add per-site data and eigenvectors.
        #[arg(long)]
        diag: bool,
        /// Print the lattice as CSV instead of the report.
        #[arg(long)]
        csv: bool,
        /// Hard-wall truncation for semi-infinite lattices.
        #[arg(long = "K-tr", alias = "k-tr")]
        k_tr: Option<usize>,
    },
    /// The sinusoidal coordinate catalog.
    Catalog {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

/// What `verify` prints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub backend: Backend,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateBlock>,
}

struct Output {
    stdout: String,
    stderr: String,
    code: i32,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema(_)
        | Error::InvalidParameter(_)
        | Error::DegreeConstraint
        | Error::InconsistentConstraint(_)
        | Error::ConstraintViolation(_)
        | Error::Positivity { .. }
        | Error::Precondition(_) => EXIT_INPUT,
        Error::Unsupported(_) | Error::NotExactlySolvable { .. } | Error::InexactBackend(_) => EXIT_UNSUPPORTED,
        _ => EXIT_FAIL,
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let _ = out.write_all(o.stdout.as_bytes());
            let _ = err.write_all(o.stderr.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::NotExactlySolvable { .. } = e {
                let _ = writeln!(err, "hint: use the `qes` subcommand for L = 3 or 4");
            }
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    macro_rules! dispatch {
        ($file:expr, $f:ident($($a:expr),*)) => {{
            let file = $file;
            match backend(cli.backend, &file) {
                Backend::Rational => $f::<Rational>(&file, Backend::Rational, $($a),*),
                Backend::Float => $f::<f64>(&file, Backend::Float, $($a),*),
            }
        }};
    }
    match &cli.command {
        Command::Spectrum { model, n_max, format } => dispatch!(read_model(model)?, spectrum(*n_max, *format)),
        Command::Eigenpoly { model, n, format } => dispatch!(read_model(model)?, eigenpoly(*n, *format)),
        Command::Verify {
            model,
            checks,
            seed,
            emit_certificate,
        } => {
            let checks = parse_checks(checks.as_deref())?;
            dispatch!(read_model(model)?, verify(checks.as_deref(), *seed, *emit_certificate))
        }
        Command::Qes { model, m, report } => dispatch!(read_model(model)?, qes(*m, *report)),
        Command::Lattice { model, diag, csv, k_tr } => lattice(&read_model(model)?, *diag, *csv, *k_tr),
        Command::Catalog { format } => Ok(Output::ok(catalog(*format))),
    }
}

fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    ModelFile::from_json(&text)
}

fn backend(choice: BackendChoice, file: &ModelFile) -> Backend {
    match choice {
        BackendChoice::Rational => Backend::Rational,
        BackendChoice::Float => Backend::Float,
        BackendChoice::Auto if file.coordinate.kind.is_polynomial() => Backend::Rational,
        BackendChoice::Auto => Backend::Float,
    }
}

fn scalar_json<R: RealField>(x: &R) -> Value {
    if R::EXACT {
        Value::String(x.to_string())
    } else {
        json!(x.to_f64())
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn spectrum<R: RealField>(file: &ModelFile, backend: Backend, n_max: Option<usize>, format: Format) -> Result<Output> {
    let m = file.load::<R>()?;
    let op = HtOperator::new(&m.spec, &m.coord)?;
    if op.degree() != 2 {
        return Err(Error::NotExactlySolvable { degree: op.degree() });
    }
    let bound = m.coord.n_bound().map(|n| n as usize);
    let n_max = n_max.unwrap_or(bound.map_or(10, |n| n.min(10)));
    if let Some(n) = bound.filter(|&n| n_max > n) {
        return Err(Error::InvalidParameter(format!("n-max {n_max} exceeds N = {n}")));
    }
    let energies = (0..=n_max).map(|n| op.energy(n)).collect::<Result<Vec<R>>>()?;
    let text = match format {
        Format::Csv => {
            let cells: Vec<String> = energies.iter().map(|e| e.to_string()).collect();
            format!("{}\n", cells.join(","))
        }
        Format::Json => to_json(&json!({
            "backend": backend,
            "energies": energies.iter().map(scalar_json).collect::<Vec<_>>(),
        })),
    };
    Ok(Output::ok(text))
}

fn eigenpoly<R: RealField>(file: &ModelFile, backend: Backend, n: usize, format: Format) -> Result<Output> {
    let m = file.load::<R>()?;
    let op = HtOperator::new(&m.spec, &m.coord)?;
    if op.degree() != 2 {
        return Err(Error::NotExactlySolvable { degree: op.degree() });
    }
    let p = op.eigenpoly(n)?;
    let energy = op.energy(n)?;
    let text = match format {
        Format::Csv => {
            let cells: Vec<String> = p.coeffs().iter().map(|c| c.to_string()).collect();
            format!("{}\n", cells.join(","))
        }
        Format::Json => to_json(&json!({
            "backend": backend,
            "n": n,
            "energy": scalar_json(&energy),
            "coefficients": p.coeffs().iter().map(scalar_json).collect::<Vec<_>>(),
        })),
    };
    Ok(Output::ok(text))
}

fn parse_checks(raw: Option<&str>) -> Result<Option<Vec<Check>>> {
    let Some(raw) = raw else { return Ok(None) };
    let names: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(Error::InvalidParameter("--checks needs at least one check".into()));
    }
    names
        .into_iter()
        .map(|s| Check::parse(s).ok_or_else(|| Error::InvalidParameter(format!("unknown check {s:?}"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn verify<R: RealField>(
    file: &ModelFile,
    backend: Backend,
    checks: Option<&[Check]>,
    seed: u64,
    emit_certificate: bool,
) -> Result<Output> {
    let report = verify_report::<R>(file, backend, checks, seed, emit_certificate)?;
    let code = match report.status {
        Status::Pass => EXIT_OK,
        Status::Fail => EXIT_FAIL,
    };
    Ok(Output {
        stdout: to_json(&report),
        stderr: String::new(),
        code,
    })
}

/// Backend picked when none is requested: exact for polynomial coordinates.
pub fn auto_backend(file: &ModelFile) -> Backend {
    backend(BackendChoice::Auto, file)
}

/// Runs `checks` (or the default set for the model's degree) on a parsed model.
/// A certificate stored in the model replaces the computed closure coefficients.
pub fn verify_model(
    file: &ModelFile,
    backend: Backend,
    checks: Option<&[Check]>,
    seed: u64,
    emit_certificate: bool,
) -> Result<VerifyReport> {
    match backend {
        Backend::Rational => verify_report::<Rational>(file, backend, checks, seed, emit_certificate),
        Backend::Float => verify_report::<f64>(file, backend, checks, seed, emit_certificate),
    }
}

fn verify_report<R: RealField>(
    file: &ModelFile,
    backend: Backend,
    checks: Option<&[Check]>,
    seed: u64,
    emit_certificate: bool,
) -> Result<VerifyReport> {
    let m = file.load::<R>()?;
    let l2 = m.spec.degree() == 2;
    let checks = match checks {
        Some([]) => return Err(Error::InvalidParameter("at least one check is needed".into())),
        Some(c) => {
            if let Some(bad) = c.iter().find(|c| c.needs_l2()).filter(|_| !l2) {
                return Err(Error::Unsupported(format!(
                    "check {} needs L = 2 (got L = {})",
                    bad.name(),
                    m.spec.degree()
                )));
            }
            c.to_vec()
        }
        None if l2 => Check::ALL.to_vec(),
        None => vec![Check::Axioms, Check::Dual],
    };
    let mut reports = run_suite(&m.spec, &m.coord, &checks, seed)?;
    if let Some(cert) = &m.certificate {
        if let Some(slot) = reports.iter_mut().find(|r| r.check == "closure") {
            let mut r = verify_closure_with(&m.spec, &m.coord, cert, &m.coord.sample_points(seed))?;
            r.notes.push("coefficients taken from the model's certificate".into());
            *slot = r;
        }
    }
    let certificate = if emit_certificate && l2 {
        Some(CertificateBlock::from_coeffs(&closure_coeffs(&m.spec, &m.coord)?))
    } else {
        None
    };
    let pass = reports.iter().all(CheckReport::passed);
    Ok(VerifyReport {
        backend,
        seed,
        status: if pass { Status::Pass } else { Status::Fail },
        checks: reports,
        certificate,
    })
}

fn qes_m(file: &ModelFile, m: Option<usize>) -> Result<usize> {
    m.or(file.qes.as_ref().map(|q| q.m))
        .ok_or_else(|| Error::InvalidParameter("the subspace degree needs --M or a qes block".into()))
}

fn complex_text(z: &num::Complex<f64>) -> String {
    if z.im.abs() <= 1e-12 * z.re.abs().max(1.0) {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn qes<R: RealField>(file: &ModelFile, backend: Backend, m: Option<usize>, report: bool) -> Result<Output> {
    let model = file.load::<R>()?;
    let degree = model.spec.degree();
    let big_m = qes_m(file, m)?;
    if degree >= 5 {
        let feas = qes_feasible(degree, &model.coord.bracket_context(), big_m)?;
        let w = feas.witness.expect("L >= 5 carries a witness");
        let value = w.det_exact.unwrap_or_else(|| w.det.to_string());
        return Err(Error::Unsupported(format!(
            "non-QES: det=[1/2]≠0 ([1/2] = {value}); no degree-{degree} potential keeps a polynomial subspace invariant"
        )));
    }
    let policy = file.qes.as_ref().map_or(V31Mode::Enforce, |q| q.v31).policy();
    let q = QesModel::build(&model.spec, &model.coord, big_m, policy)?;
    let eigenvalues = q.spectrum()?;
    let mut stderr = String::new();
    for w in q.warnings() {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let stdout = if report {
        let mat = q.matrix()?;
        let rows: Vec<Vec<Value>> = (0..=mat.k)
            .map(|r| (0..=mat.k).map(|c| scalar_json(mat.get(r, c))).collect())
            .collect();
        to_json(&json!({
            "backend": backend,
            "L": degree,
            "M": big_m,
            "e0": scalar_json(q.e0()),
            "e0_closed_form": scalar_json(q.closed_e0()),
            "e1": q.e1().map(scalar_json),
            "e1_closed_form": q.closed_e1().map(scalar_json),
            "compensation": q.compensation().coeffs().iter().map(scalar_json).collect::<Vec<_>>(),
            "warnings": q.warnings(),
            "matrix": rows,
            "eigenvalues": eigenvalues.iter().map(|z| json!({"re": z.re, "im": z.im})).collect::<Vec<_>>(),
        }))
    } else {
        let mut s = String::new();
        for z in &eigenvalues {
            let _ = writeln!(s, "{}", complex_text(z));
        }
        s
    };
    Ok(Output {
        stdout,
        stderr,
        code: EXIT_OK,
    })
}

fn lattice(file: &ModelFile, diag: bool, csv: bool, k_tr: Option<usize>) -> Result<Output> {
    if !file.coordinate.kind.is_discrete() {
        return Err(Error::Schema(format!(
            "lattice needs a real-shift coordinate, not {}",
            file.coordinate.kind
        )));
    }
    let m = file.load::<f64>()?;
    let k_tr = k_tr.or(file.lattice.as_ref().and_then(|l| l.k_tr));
    let degree = m.spec.degree();
    let (lat, mut report) = match degree {
        2 => {
            let lat = build_lattice(&m.spec, &m.coord, k_tr)?;
            let r = spectrum_check(&lat)?;
            let pass = r.status == Status::Pass;
            (lat, (serde_json::to_value(&r).expect("report serializes"), pass))
        }
        3 | 4 => {
            let big_m = qes_m(file, None)?;
            let policy = file.qes.as_ref().map_or(V31Mode::Enforce, |q| q.v31).policy();
            let q = QesModel::build(&m.spec, &m.coord, big_m, policy)?;
            let lat = build_lattice(q.spec(), &m.coord, k_tr)?;
            let r = qes_lattice(&lat, &q)?;
            let pass = r.status == Status::Pass;
            (lat, (serde_json::to_value(&r).expect("report serializes"), pass))
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "lattice comparison needs L = 2, 3 or 4 (got L = {degree})"
            )))
        }
    };
    let code = if report.1 { EXIT_OK } else { EXIT_FAIL };
    if csv {
        return Ok(Output {
            stdout: lat.to_csv(diag),
            stderr: String::new(),
            code,
        });
    }
    if diag {
        let sites: Vec<Value> = (0..lat.dim())
            .map(|x| json!({"x": x, "B": lat.b[x], "D": lat.d[x], "phi0": lat.phi0[x]}))
            .collect();
        let diagonal: Vec<f64> = (0..lat.dim()).map(|x| lat.h[(x, x)]).collect();
        report.0["sites"] = Value::Array(sites);
        report.0["diagonal"] = json!(diagonal);
    }
    report.0["size"] = json!(lat.size);
    if let Some(t) = lat.tail {
        report.0["tail"] = json!(t);
    }
    Ok(Output {
        stdout: to_json(&report.0),
        stderr: String::new(),
        code,
    })
}

fn catalog(format: Format) -> String {
    let row = |k: Kind| {
        let shift = if k.is_discrete() { "real" } else { "imaginary" };
        let params = match k {
            Kind::D2 => "N, d, eps'",
            Kind::D5 => "N, q, d, eps'",
            Kind::D3 | Kind::D4 => "N, q",
            Kind::D1 => "N",
            _ => "gamma",
        };
        (k, k.formula(), k.domain(), shift, params)
    };
    match format {
        Format::Json => {
            let rows: Vec<Value> = Kind::CATALOG
                .iter()
                .map(|&k| {
                    let (k, eta, domain, shift, params) = row(k);
                    json!({"kind": k, "eta": eta, "domain": domain, "shift": shift, "parameters": params})
                })
                .collect();
            to_json(&rows)
        }
        Format::Csv => {
            let mut s = String::from("kind,eta,domain,shift,parameters\n");
            for &k in &Kind::CATALOG {
                let (k, eta, domain, shift, params) = row(k);
                let _ = writeln!(s, "{k},{eta},\"{domain}\",{shift},\"{params}\"");
            }
            s
        }
    }
}
