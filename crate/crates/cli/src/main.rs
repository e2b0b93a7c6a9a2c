use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use wpgeom::horo::{fiber_diameter_upper, project, BasePoint, BasePointJson, FiberCoords};
use wpgeom::lab::suites::{g1_suite, g2_suite, properties_suite, SuiteReport};
use wpgeom::lab::{
    default_grid, geometric_experiment, report_csv, report_json, run_experiment, to_canonical_json,
    Experiment, ExperimentJson,
};
use wpgeom::linalg::rows_of;
use wpgeom::reduction::{in_siegel_set, reduce_sl2, reduce_spd, siegel_coords, spd_clauses};
use wpgeom::siegel::{siegel_distance, SiegelPoint, SiegelPointJson};
use wpgeom::tropical::{trwp_distance, FlatTorusJson, FlatTorusMetric};
use wpgeom::GeomError;

#[derive(Parser, Debug)]
#[command(
    name = "wpgeom",
    version,
    about = "Weil-Petersson geometry of the Siegel upper half-space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input JSON file.
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output file (or directory for collapse-run); standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment config (collapse-run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    g: Option<usize>,
    #[arg(long, global = true)]
    gprime: Option<usize>,
    /// Siegel-set parameter.
    #[arg(long, global = true, default_value_t = 2.0)]
    u: f64,
    /// Ball radius.
    #[arg(long = "R", global = true)]
    radius: Option<f64>,
    #[arg(long, global = true, default_value_t = 40)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long = "n-max", global = true, default_value_t = 12)]
    n_max: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Siegel coordinates, Siegel-set membership and reduced forms of a point.
    Reduce,
    /// Distance between two points `{"a": …, "b": …}`.
    Dist {
        #[arg(long, value_enum, default_value_t = DistKind::Siegel)]
        kind: DistKind,
    },
    /// Horospherical projection and fiber coordinates of a point.
    Project,
    /// Fiber diameter estimate over a base point.
    FiberDiam,
    /// Collapse experiments from a config or the default grid.
    CollapseRun,
    /// Validation suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum DistKind {
    Siegel,
    Tropical,
    Base,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Suite {
    All,
    G1,
    G2,
    Properties,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug)]
enum CliError {
    Geom(GeomError),
    /// Unreadable or malformed input, missing flags.
    Input(String),
    Io(String),
    ChecksFailed(String),
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Geom(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Geom(e) if e.is_validation() => 1,
            CliError::Geom(_) => 2,
            CliError::Input(_) => 1,
            CliError::Io(_) => 2,
            CliError::ChecksFailed(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Geom(e) => write!(f, "{e}"),
            CliError::Input(s) => write!(f, "invalid input: {s}"),
            CliError::Io(s) => write!(f, "i/o error: {s}"),
            CliError::ChecksFailed(s) => write!(f, "verification failed: {s}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: for<'de> Deserialize<'de>>(path: Option<&Path>, what: &str) -> CliResult<T> {
    let path = path.ok_or_else(|| CliError::Input(format!("--in is required ({what})")))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn emit(cli: &Cli, v: &Value) -> CliResult<()> {
    let text = to_canonical_json(v);
    match &cli.out {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_reduce(cli: &Cli) -> CliResult<Value> {
    let j: SiegelPointJson = read_json(cli.input.as_deref(), "a Siegel point")?;
    let tau = SiegelPoint::from_json(&j)?;
    let coords = siegel_coords(&tau)?;
    let (red, um) = reduce_spd(tau.y(), cli.u)?;
    let mut out = json!({
        "coords": coords.to_json(),
        "in_siegel_set": in_siegel_set(&tau, cli.u),
        "clauses": spd_clauses(tau.y(), cli.u)?,
        "u": cli.u,
        "reduced_Y": rows_of(red.as_mat()),
        "U": um.rows(),
    });
    if tau.g() == 1 {
        let (t, m) = reduce_sl2(&tau)?;
        out["sl2"] = json!({ "tau": t.to_json(), "M": m.to_json() });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct Pair<T> {
    a: T,
    b: T,
}

fn cmd_dist(cli: &Cli, kind: DistKind) -> CliResult<Value> {
    let d = match kind {
        DistKind::Siegel => {
            let p: Pair<SiegelPointJson> =
                read_json(cli.input.as_deref(), "{\"a\", \"b\"} Siegel points")?;
            siegel_distance(
                &SiegelPoint::from_json(&p.a)?,
                &SiegelPoint::from_json(&p.b)?,
            )?
        }
        DistKind::Tropical => {
            let p: Pair<FlatTorusJson> =
                read_json(cli.input.as_deref(), "{\"a\", \"b\"} flat metrics")?;
            trwp_distance(
                &FlatTorusMetric::from_json(&p.a)?,
                &FlatTorusMetric::from_json(&p.b)?,
            )?
        }
        DistKind::Base => {
            let p: Pair<BasePointJson> =
                read_json(cli.input.as_deref(), "{\"a\", \"b\"} base points")?;
            wpgeom::horo::base_distance(&BasePoint::from_json(&p.a)?, &BasePoint::from_json(&p.b)?)?
        }
    };
    let kind = format!("{kind:?}").to_lowercase();
    Ok(json!({ "kind": kind, "distance": d }))
}

fn require_gprime(cli: &Cli) -> CliResult<usize> {
    cli.gprime
        .ok_or_else(|| CliError::Input("--gprime is required".into()))
}

fn cmd_project(cli: &Cli) -> CliResult<Value> {
    let j: SiegelPointJson = read_json(cli.input.as_deref(), "a Siegel point")?;
    let tau = SiegelPoint::from_json(&j)?;
    let gp = require_gprime(cli)?;
    let base = project(&tau, gp)?;
    let f = FiberCoords::of(&tau, gp)?;
    Ok(json!({
        "base": base.to_json(),
        "fiber": { "Xppp": rows_of(&f.xppp), "Yppp": rows_of(&f.yppp), "Xpp": rows_of(&f.xpp) },
    }))
}

fn cmd_fiber_diam(cli: &Cli) -> CliResult<Value> {
    let j: BasePointJson = read_json(cli.input.as_deref(), "a base point")?;
    let base = BasePoint::from_json(&j)?;
    let fd = fiber_diameter_upper(&base, cli.u, cli.samples)?;
    Ok(serde_json::to_value(fd).expect("serializable"))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Many { experiments: Vec<ExperimentJson> },
    One(ExperimentJson),
}

fn experiments(cli: &Cli) -> CliResult<Vec<Experiment>> {
    if let Some(path) = &cli.config {
        let cfg: ConfigFile = read_json(Some(path), "an experiment config")?;
        let list = match cfg {
            ConfigFile::Many { experiments } => experiments,
            ConfigFile::One(e) => vec![e],
        };
        return list
            .iter()
            .map(|e| Experiment::from_json(e).map_err(CliError::from))
            .collect();
    }
    let mut out = Vec::new();
    for e in default_grid(cli.u, cli.seed)? {
        if cli.g.is_some_and(|g| g != e.spec.g)
            || cli.gprime.is_some_and(|g| g != e.spec.gprime)
            || cli.radius.is_some_and(|r| r != e.radius)
        {
            continue;
        }
        out.push(geometric_experiment(
            e.spec.g,
            e.spec.gprime,
            e.radius,
            cli.u,
            cli.seed,
            cli.samples,
            cli.n_max,
        )?);
    }
    if out.is_empty() {
        // Flags outside the grid describe a single geometric experiment.
        let (g, gp, r) = match (cli.g, cli.gprime, cli.radius) {
            (Some(g), Some(gp), Some(r)) => (g, gp, r),
            _ => {
                return Err(CliError::Input(
                    "no grid experiment matches --g/--gprime/--R".into(),
                ))
            }
        };
        out.push(geometric_experiment(
            g,
            gp,
            r,
            cli.u,
            cli.seed,
            cli.samples,
            cli.n_max,
        )?);
    }
    Ok(out)
}

fn cmd_collapse_run(cli: &Cli) -> CliResult<Value> {
    let out_dir = cli
        .out
        .clone()
        .ok_or_else(|| CliError::Input("--out DIR is required".into()))?;
    let mut summary = Vec::new();
    for e in experiments(cli)? {
        let report = run_experiment(&e)?;
        let label = e.label();
        if matches!(cli.format, Format::Json | Format::Both) {
            write_atomic(
                &out_dir.join(format!("{label}.json")),
                &report_json(&report),
            )?;
        }
        if matches!(cli.format, Format::Csv | Format::Both) {
            write_atomic(&out_dir.join(format!("{label}.csv")), &report_csv(&report))?;
        }
        summary.push(json!({ "experiment": label, "fits": report.fits }));
    }
    Ok(Value::Array(summary))
}

fn cmd_verify(cli: &Cli, suite: Suite) -> CliResult<Value> {
    let mut reports: Vec<SuiteReport> = Vec::new();
    if matches!(suite, Suite::All | Suite::G1) {
        reports.push(g1_suite());
    }
    if matches!(suite, Suite::All | Suite::G2) {
        reports.push(g2_suite());
    }
    if matches!(suite, Suite::All | Suite::Properties) {
        reports.push(properties_suite(cli.seed));
    }
    for r in &reports {
        for c in &r.checks {
            eprintln!(
                "{} {}/{}: {:.3e} (tol {:.1e}) {}",
                if c.passed { "PASS" } else { "FAIL" },
                r.name,
                c.name,
                c.value,
                c.tolerance,
                c.detail
            );
        }
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.clone())
        .collect();
    let v = serde_json::to_value(&reports).expect("serializable");
    if failed.is_empty() {
        Ok(v)
    } else {
        emit(cli, &v)?;
        Err(CliError::ChecksFailed(failed.join(", ")))
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let v = match &cli.command {
        Command::Reduce => cmd_reduce(cli)?,
        Command::Dist { kind } => cmd_dist(cli, *kind)?,
        Command::Project => cmd_project(cli)?,
        Command::FiberDiam => cmd_fiber_diam(cli)?,
        Command::CollapseRun => {
            let v = cmd_collapse_run(cli)?;
            print!("{}", to_canonical_json(&v));
            return Ok(());
        }
        Command::Verify { suite } => cmd_verify(cli, *suite)?,
    };
    emit(cli, &v)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
