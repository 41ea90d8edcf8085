//! The `weylkit` command line: argument parsing, point selection, parallel
//! per-point evaluation and report assembly.
//!
//! Exit codes: 0 when every named check passes, 1 when a check fails, 2 for
//! spec, expression and usage errors, 3 for degenerate geometry.

mod commands;
pub mod report;
pub mod sampler;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::constructs::{catalog, catalog_text, CATALOG_NAMES};
use crate::error::{Error, Result};
use crate::expr::{parse, CompiledExpr, Expr};
use crate::geometry::MetricSource;
use crate::spec_file::{load_spec, Spec};
use report::{aggregate, point_json, to_json, Check, PointBlock};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Unresolved(_)
        | Error::Spec { .. }
        | Error::UnknownCatalog(_)
        | Error::Shape(_)
        | Error::Precondition(_) => EXIT_INPUT,
        Error::DegenerateMetric { .. } | Error::Signature { .. } | Error::Domain { .. } | Error::OrderExhausted(_) => {
            EXIT_DEGENERATE
        }
        Error::NoPotential => EXIT_CHECK_FAILED,
    }
}

#[derive(Parser, Debug)]
#[command(name = "weylkit", version, about = "Curvature, compatibility and Petrov checks for coordinate metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Curvature tensors and their identities.
    Curvature(Common),
    /// Riemann and Weyl compatibility of symmetric tensors and vectors.
    Compat(CompatArgs),
    /// Petrov type, electric and magnetic parts, Bel–Debever criteria.
    Classify(ClassifyArgs),
    /// Gauss, Codazzi and compatibility checks for an embedding.
    Hypersurface(Common),
    /// Geodesic-map deformation of the curvature.
    GeodesicMap(GeodesicArgs),
    /// List catalog entries or print one as spec-file text.
    Catalog(CatalogArgs),
    /// Run the acceptance suite.
    VerifyAll(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Built-in metric or embedding.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    catalog: Option<String>,
    /// Spec file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of sampled points.
    #[arg(long, default_value_t = 5)]
    points: usize,
    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit point, comma-separated; repeatable. Disables sampling.
    #[arg(long = "point", value_name = "X0,X1,..")]
    explicit: Vec<String>,
    /// Sampling range override, repeatable.
    #[arg(long = "range", value_name = "COORD=LO:HI")]
    ranges: Vec<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol_identity: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_classify: f64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug, Clone)]
struct CompatArgs {
    #[command(flatten)]
    common: Common,
    /// `metric`, `ricci`, or n² (or n(n+1)/2 upper-triangle) comma-separated
    /// component expressions; repeatable.
    #[arg(long = "tensor")]
    tensors: Vec<String>,
    /// Contravariant components, comma-separated expressions; repeatable.
    #[arg(long = "vector")]
    vectors: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Observer, contravariant; normalized when timelike, used as the
    /// Bel–Debever direction when null.
    #[arg(long)]
    observer: Option<String>,
    /// Null vector for the Bel–Debever criteria, contravariant.
    #[arg(long)]
    null: Option<String>,
    /// Expected Petrov type (I, II, D, III, N, O), checked at every point.
    #[arg(long)]
    expect_type: Option<String>,
    /// Search for principal null directions.
    #[arg(long)]
    pnd: bool,
}

#[derive(Args, Debug, Clone)]
struct GeodesicArgs {
    #[command(flatten)]
    common: Common,
    /// Potential ψ with X = dψ.
    #[arg(long)]
    psi: String,
    /// Symmetric tensors for the transfer checks, as for `compat`.
    #[arg(long = "tensor")]
    tensors: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct CatalogArgs {
    /// Print the spec-file text of one entry.
    #[arg(long)]
    show: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

/// Runs the CLI on `args` (including the program name). The report goes to
/// `out` unless `--out` is given; summaries and errors go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return EXIT_PASS;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Catalog(a) => {
            let text = match a.show {
                Some(name) => catalog_text(&name)?,
                None => CATALOG_NAMES.iter().map(|n| format!("{n}\n")).collect(),
            };
            emit(&text, None, out)?;
            Ok(EXIT_PASS)
        }
        Command::VerifyAll(a) => {
            let results = crate::verify::run_all();
            let criteria: Vec<Value> = results.iter().map(|c| serde_json::to_value(c).unwrap_or(Value::Null)).collect();
            let pass = results.iter().all(|c| c.pass);
            let doc = json!({
                "tool": tool(),
                "command": "verify-all",
                "criteria": criteria,
                "pass": pass,
            });
            emit(&to_json(&doc), a.out.as_ref(), out)?;
            if !a.quiet {
                for c in &results {
                    let _ = writeln!(err, "{}", c.line());
                }
            }
            Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Command::Curvature(c) => {
            let spec = load(&c)?;
            let points = resolve_points(&spec, &c)?;
            let src = spec.source();
            let blocks = per_point(&points, |p| commands::curvature(src, p))?;
            finish("curvature", &spec, &c, Map::new(), &points, blocks, out, err)
        }
        Command::Compat(a) => {
            let c = &a.common;
            let spec = load(c)?;
            let src = spec.source();
            let mut tensors = a.tensors.clone();
            if tensors.is_empty() {
                tensors = vec!["metric".into(), "ricci".into()];
            }
            let fields = commands::parse_tensors(src, &tensors)?;
            let vectors = a.vectors.iter().map(|v| parse_vector(src, v)).collect::<Result<Vec<_>>>()?;
            let points = resolve_points(&spec, c)?;
            let tol = c.tol_classify;
            let blocks = per_point(&points, |p| commands::compat(src, p, &fields, &vectors, &a.vectors, tol))?;
            let mut payload = Map::new();
            payload.insert("tensors".into(), json!(tensors));
            payload.insert("vectors".into(), json!(a.vectors));
            finish("compat", &spec, c, payload, &points, blocks, out, err)
        }
        Command::Classify(a) => {
            let c = &a.common;
            let spec = load(c)?;
            let src = spec.source();
            if src.expected_signature() != Some((3, 1)) {
                return Err(Error::precondition("classification needs a 4-dimensional Lorentzian metric"));
            }
            let observer = a.observer.as_deref().map(|v| parse_vector(src, v)).transpose()?;
            let null = a.null.as_deref().map(|v| parse_vector(src, v)).transpose()?;
            let expect = a.expect_type.as_deref().map(parse_petrov).transpose()?;
            let points = resolve_points(&spec, c)?;
            let opts = commands::ClassifyOpts {
                observer: observer.as_deref(),
                null: null.as_deref(),
                expect,
                pnd: a.pnd,
                tol: c.tol_classify,
            };
            let blocks = per_point(&points, |p| commands::classify(src, p, &opts))?;
            let mut payload = Map::new();
            payload.insert("observer".into(), json!(a.observer));
            payload.insert("null".into(), json!(a.null));
            payload.insert("expect_type".into(), json!(a.expect_type));
            finish("classify", &spec, c, payload, &points, blocks, out, err)
        }
        Command::Hypersurface(c) => {
            let spec = load(&c)?;
            let emb = spec
                .embedding()
                .ok_or_else(|| Error::precondition("hypersurface needs a spec with an [embedding] section"))?;
            let points = resolve_points(&spec, &c)?;
            let blocks = per_point(&points, |p| commands::hypersurface(emb, p))?;
            finish("hypersurface", &spec, &c, Map::new(), &points, blocks, out, err)
        }
        Command::GeodesicMap(a) => {
            let c = &a.common;
            let spec = load(c)?;
            let src = spec.source();
            let gm = crate::constructs::GeodesicMapSpec::parse(src, &a.psi)?;
            let fields = commands::parse_tensors(src, &a.tensors)?;
            let points = resolve_points(&spec, c)?;
            let tol = c.tol_identity;
            let blocks = per_point(&points, |p| commands::geodesic(src, p, &gm, &fields, tol))?;
            let mut payload = Map::new();
            payload.insert("psi".into(), json!(gm.psi.to_string()));
            payload.insert("tensors".into(), json!(a.tensors));
            finish("geodesic-map", &spec, c, payload, &points, blocks, out, err)
        }
    }
}

fn tool() -> Value {
    json!({"name": "weylkit", "version": env!("CARGO_PKG_VERSION")})
}

fn load(c: &Common) -> Result<Spec> {
    match (&c.catalog, &c.spec) {
        (Some(name), _) => catalog(name),
        (None, Some(path)) => load_spec(path),
        (None, None) => Err(Error::precondition("one of --catalog or --spec is required")),
    }
}

fn emit(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::precondition(format!("cannot write the report: {e}"));
    match path {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => out.write_all(text.as_bytes()).map_err(io),
    }
}

/// Constant-valued expression list, e.g. `"0, pi/2, 1"`.
fn eval_list(src: &dyn MetricSource, text: &str, what: &str) -> Result<Vec<f64>> {
    let n = src.dim();
    let vals = text.split(',').map(|t| eval_constant(src, t)).collect::<Result<Vec<f64>>>()?;
    if vals.len() != n {
        return Err(Error::precondition(format!("{what} `{text}` has {} components, expected {n}", vals.len())));
    }
    Ok(vals)
}

/// Expression over parameters only, e.g. `pi/2` or `2*M`.
fn eval_constant(src: &dyn MetricSource, text: &str) -> Result<f64> {
    let e = parse(text.trim())?;
    CompiledExpr::compile(&e, &src.bindings())?.eval_real(&vec![0.0; src.dim()])
}

/// Contravariant vector given as comma-separated expressions in the chart.
fn parse_vector(src: &dyn MetricSource, text: &str) -> Result<Vec<Expr>> {
    let exprs = text.split(',').map(|t| parse(t.trim())).collect::<Result<Vec<_>>>()?;
    if exprs.len() != src.dim() {
        return Err(Error::precondition(format!("vector `{text}` has {} components, expected {}", exprs.len(), src.dim())));
    }
    Ok(exprs)
}

fn parse_petrov(s: &str) -> Result<crate::classify::PetrovType> {
    use crate::classify::PetrovType::*;
    Ok(match s.trim().to_ascii_uppercase().as_str() {
        "I" => I,
        "II" => II,
        "D" => D,
        "III" => III,
        "N" => N,
        "O" => O,
        _ => return Err(Error::precondition(format!("unknown Petrov type `{s}`"))),
    })
}

fn range_error(text: &str, message: &str) -> Error {
    Error::Spec {
        location: format!("--range {text}"),
        message: message.to_string(),
    }
}

/// Sampling box after applying `--range` overrides.
fn effective_ranges(src: &dyn MetricSource, overrides: &[String]) -> Result<Vec<(f64, f64)>> {
    let mut ranges = src.sample_ranges();
    for text in overrides {
        let (coord, rest) = text.split_once('=').ok_or_else(|| range_error(text, "expected COORD=LO:HI"))?;
        let (lo, hi) = rest.split_once(':').ok_or_else(|| range_error(text, "expected COORD=LO:HI"))?;
        let idx = src
            .coords()
            .iter()
            .position(|c| c == coord.trim())
            .ok_or_else(|| range_error(text, "unknown coordinate"))?;
        let (lo, hi) = (eval_constant(src, lo)?, eval_constant(src, hi)?);
        if hi < lo {
            return Err(range_error(text, "lower bound exceeds upper bound"));
        }
        ranges[idx] = (lo, hi);
    }
    Ok(ranges)
}

fn resolve_points(spec: &Spec, c: &Common) -> Result<Vec<Vec<f64>>> {
    let src = spec.source();
    if !c.explicit.is_empty() {
        return c.explicit.iter().map(|p| eval_list(src, p, "point")).collect();
    }
    if c.points == 0 {
        return Err(Error::precondition("--points must be positive"));
    }
    if !(c.tol_identity > 0.0 && c.tol_classify > 0.0) {
        return Err(Error::precondition("tolerances must be positive"));
    }
    let ranges = effective_ranges(src, &c.ranges)?;
    sampler::sample_points(src, &ranges, c.points, c.seed)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("WEYLKIT_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| Error::precondition(format!("thread pool: {e}")))
}

/// Evaluates `f` at every point in parallel; the first error by point index wins.
fn per_point<F>(points: &[Vec<f64>], f: F) -> Result<Vec<PointBlock>>
where
    F: Fn(&[f64]) -> Result<PointBlock> + Sync + Send,
{
    let pool = thread_pool()?;
    let results: Vec<Result<PointBlock>> = pool.install(|| points.par_iter().map(|p| f(p)).collect());
    results.into_iter().collect()
}

/// Tolerance of a named check.
fn tolerance(name: &str, c: &Common) -> f64 {
    let base = name.split(':').next().unwrap_or(name);
    match base {
        "christoffel_fd" => 1e-5,
        "expected_type" => 0.5,
        "weyl_divergence_identity" | "contracted_bianchi" | "lovelock" | "dpi_identity" | "codazzi_cyclic_identity"
        | "suite_compat" | "omega_codazzi" | "purely_electric" | "weyl_transfer" => 10.0 * c.tol_identity,
        _ => c.tol_identity,
    }
}

fn spec_echo(spec: &Spec) -> Value {
    match spec {
        Spec::Metric(m) => {
            let n = m.coords.len();
            let mut comps = Vec::new();
            for i in 0..n {
                for j in i..n {
                    let e = &m.components[i][j];
                    if *e != Expr::num(0.0) {
                        comps.push(json!([i, j, e.to_string()]));
                    }
                }
            }
            json!({
                "name": m.name,
                "kind": "metric",
                "dim": n,
                "coords": m.coords,
                "params": m.params.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
                "signature": [m.signature.0, m.signature.1],
                "metric": comps,
            })
        }
        Spec::Embedding(e) => json!({
            "name": e.name,
            "kind": "embedding",
            "dim": e.coords.len(),
            "coords": e.coords,
            "params": e.params.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            "signature": [e.signature.0, e.signature.1],
            "ambient_signature": [e.ambient_signature.0, e.ambient_signature.1],
            "embedding": e.maps.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    command: &str,
    spec: &Spec,
    c: &Common,
    payload: Map<String, Value>,
    points: &[Vec<f64>],
    blocks: Vec<PointBlock>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let checks: Vec<Check> = aggregate(&blocks, &|n| tolerance(n, c));
    let pass = checks.iter().all(|k| k.pass);
    let mut agg = Map::new();
    for k in &checks {
        agg.insert(k.name.clone(), json!(k.value));
    }
    let mut config = payload;
    config.insert("seed".into(), json!(c.seed));
    config.insert("sampled".into(), json!(c.explicit.is_empty()));
    config.insert("points".into(), json!(points.len()));
    config.insert("tol_identity".into(), json!(c.tol_identity));
    config.insert("tol_classify".into(), json!(c.tol_classify));
    if c.explicit.is_empty() {
        let ranges = effective_ranges(spec.source(), &c.ranges)?;
        config.insert("ranges".into(), json!(ranges.iter().map(|r| [r.0, r.1]).collect::<Vec<_>>()));
    }
    let doc = json!({
        "tool": tool(),
        "command": command,
        "spec": spec_echo(spec),
        "config": Value::Object(config),
        "points": blocks.iter().enumerate().map(|(i, b)| point_json(i, &points[i], b)).collect::<Vec<_>>(),
        "aggregate": Value::Object(agg),
        "checks": checks,
        "pass": pass,
    });
    emit(&to_json(&doc), c.out.as_ref(), out)?;
    if !c.quiet {
        let _ = writeln!(err, "weylkit {command}: {} at {} point(s)", spec.name(), points.len());
        for k in &checks {
            let verdict = if k.pass { "ok" } else { "FAIL" };
            let _ = writeln!(err, "  {:<32} {:>10.3e}  (tol {:.1e})  {verdict}", k.name, k.value, k.tolerance);
        }
        let _ = writeln!(err, "{}", if pass { "PASS" } else { "FAIL" });
    }
    Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}
