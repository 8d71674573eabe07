//! Command-line driver: reads instances, runs one operation and writes a JSON
//! report to stdout or `--out`.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on bad input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use lipfree::free_space::{
    enumerate_extreme_points, free_norm, godard_coordinates, lp_norm_oracle, norm_profile,
};
use lipfree::little_lip::{flatness_report, lipschitz_constant, separating_function};
use lipfree::metric::{four_point_check, parse_metric_csv, validate_metric, write_metric_csv};
use lipfree::rearrange::{
    measure_check, normalize_tree, rearrange_closed_interval, rearrange_gap_interval,
    rearrange_separated_interval, verify_rearrangement, verify_subordinated,
};
use lipfree::tree::{realize_tree, PointDocument};
use lipfree::{gen, Error, MarkedTree, Molecule, TreePoint};
use serde_json::{json, Map, Value};

/// Tolerance on norm agreement between the two solvers.
const NORM_AGREEMENT: f64 = 1e-6;
/// Allowed excess of a separating function's Lipschitz constant over 1.
const LIPSCHITZ_SLACK: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "lipfree", version, about = "Finite R-trees and Lipschitz-free space norms")]
struct Cli {
    /// Input file: a CSV distance matrix or a tree JSON document.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Root label for CSV input, overriding any `#root:` line.
    #[arg(long, global = true)]
    root: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, default_value_t = lipfree::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include the construction trace in rearrangement reports.
    #[arg(long, global = true)]
    trace: bool,
    /// Leave the timestamp out of the report.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a distance matrix and test the four-point condition.
    Check,
    /// Build the tree spanned by a tree metric.
    Realize,
    /// Norm of a molecule by edge coordinates and by transport.
    Norm {
        /// Molecule JSON: an object from labels to coefficients.
        #[arg(long)]
        molecule: PathBuf,
        /// Second molecule; adds the profile `t ↦ ‖molecule − t·direction‖`.
        #[arg(long)]
        direction: Option<PathBuf>,
    },
    /// List the extreme elementary molecules.
    Extreme,
    /// Rearrange along a segment, or normalize the whole tree without one.
    Rearrange {
        /// Lower end: a vertex id or `edge@offset`.
        #[arg(long, requires = "to")]
        from: Option<String>,
        /// Upper end: a vertex id or `edge@offset`.
        #[arg(long, requires = "from")]
        to: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Closed)]
        mode: Mode,
    },
    /// Separating function between two M-points with its flatness audit.
    Separate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Radii for the flatness audit; derived from the function if omitted.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Generate an instance.
    Gen {
        #[arg(value_enum)]
        kind: Kind,
        /// Branch count, leaf count or path length depending on the kind.
        #[arg(long, default_value_t = 8)]
        size: usize,
        /// Probability that an internal vertex of a random tree is in M.
        #[arg(long, default_value_t = 0.0)]
        internal_m: f64,
        /// Probability that an edge between M-points of a random tree is marked.
        #[arg(long, default_value_t = 0.0)]
        marked: f64,
        /// Also write the metric on M as CSV.
        #[arg(long)]
        metric_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    /// Segment avoiding M with endpoints off the branching points.
    Separated,
    /// M-point endpoints with no M-point strictly between.
    Gap,
    /// Any segment between comparable points.
    Closed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Path,
    Star,
    Comb,
    RandomTree,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Realize => "realize",
            Command::Norm { .. } => "norm",
            Command::Extreme => "extreme",
            Command::Rearrange { .. } => "rearrange",
            Command::Separate { .. } => "separate",
            Command::Gen { .. } => "gen",
        }
    }
}

/// Why a command stopped.
enum Failure {
    Input(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical { .. } | Error::Invariant { .. } => Failure::Other(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<(bool, Map<String, Value>), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn input(cli: &Cli) -> Result<&Path, Failure> {
    cli.input
        .as_deref()
        .ok_or_else(|| Failure::Input("--input is required".into()))
}

fn epsilon(cli: &Cli) -> Result<f64, Failure> {
    match cli.epsilon {
        Some(e) if e.is_finite() && e > 0.0 => Ok(e),
        Some(e) => Err(Failure::Input(format!("--epsilon must be positive, got {e}"))),
        None => Err(Failure::Input("--epsilon is required".into())),
    }
}

/// Reads a tree document, either bare or as the `tree` field of a report.
fn load_tree(path: &Path) -> Result<MarkedTree, Failure> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let doc = match value.get("tree") {
        Some(tree) => tree.clone(),
        None => value,
    };
    let text = serde_json::to_string(&doc).expect("a parsed value serializes");
    MarkedTree::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_point(t: &MarkedTree, text: &str) -> Result<TreePoint, Failure> {
    let doc = match text.split_once('@') {
        Some((edge, offset)) => PointDocument::Edge {
            edge: edge.to_owned(),
            offset: offset
                .parse()
                .map_err(|_| Failure::Input(format!("bad offset in point {text:?}")))?,
        },
        None => PointDocument::Vertex {
            vertex: text.to_owned(),
        },
    };
    Ok(t.resolve_point(&doc)?)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn fields(pairs: Value) -> Map<String, Value> {
    match pairs {
        Value::Object(m) => m,
        _ => unreachable!("reports are objects"),
    }
}

fn cmd_check(cli: &Cli) -> CmdResult {
    let m = parse_metric_csv(&read(input(cli)?)?, cli.root.as_deref())?;
    let validation = validate_metric(&m, cli.tol);
    let witness = four_point_check(&m, cli.tol);
    let ok = validation.is_ok() && witness.is_none();
    Ok((
        ok,
        fields(json!({
            "points": m.len(),
            "root": m.root_label(),
            "metric": validation.is_ok(),
            "tree_metric": ok,
            "validation": to_value(&validation),
            "four_point": witness.as_ref().map(to_value),
        })),
    ))
}

fn cmd_realize(cli: &Cli) -> CmdResult {
    let m = parse_metric_csv(&read(input(cli)?)?, cli.root.as_deref())?;
    match realize_tree(&m, cli.tol) {
        Ok(t) => Ok((
            true,
            fields(json!({
                "points": m.len(),
                "steiner": t.vertex_count() - t.m_points().len(),
                "tree": t.to_json_value(),
            })),
        )),
        Err(Error::NotTreeMetric(w)) => Ok((
            false,
            fields(json!({ "points": m.len(), "four_point": to_value(&w) })),
        )),
        Err(e) => Err(e.into()),
    }
}

fn load_molecule(path: &Path) -> Result<Molecule, Failure> {
    Molecule::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_norm(cli: &Cli, molecule: &Path, direction: Option<&Path>) -> CmdResult {
    let t = load_tree(input(cli)?)?;
    let mu = load_molecule(molecule)?;
    let godard = free_norm(&t, &mu)?;
    let oracle = lp_norm_oracle(&t.to_metric(), &mu)?;
    let diff = (godard - oracle).abs();
    let coords = godard_coordinates(&t, &mu)?;
    let edge_coords: Map<String, Value> = t
        .edge_indices()
        .map(|e| (t.edge(e).id.clone(), json!(coords.coord(e))))
        .collect();
    let mut report = fields(json!({
        "godard_norm": godard,
        "oracle_norm": oracle,
        "diff": diff,
        "edge_coordinates": edge_coords,
    }));
    if let Some(path) = direction {
        let v = load_molecule(path)?;
        report.insert("profile".into(), to_value(&norm_profile(&t, &mu, &v)?));
    }
    Ok((diff <= NORM_AGREEMENT * oracle.max(1.0), report))
}

fn cmd_extreme(cli: &Cli) -> CmdResult {
    let t = load_tree(input(cli)?)?;
    let pairs = enumerate_extreme_points(&t);
    let list: Vec<Value> = pairs
        .iter()
        .map(|(x, y)| json!({ "x": x, "y": y }))
        .collect();
    Ok((true, fields(json!({ "count": list.len(), "extreme": list }))))
}

fn cmd_rearrange(cli: &Cli, segment: Option<(&str, &str)>, mode: Mode) -> CmdResult {
    let t = load_tree(input(cli)?)?;
    let eps = epsilon(cli)?;
    let res = match segment {
        None => normalize_tree(&t, eps, cli.tol)?,
        Some((a, b)) => {
            let (x, y) = (parse_point(&t, a)?, parse_point(&t, b)?);
            match mode {
                Mode::Separated => rearrange_separated_interval(&t, x, y, eps, cli.tol)?,
                Mode::Gap => rearrange_gap_interval(&t, x, y, eps, cli.tol)?,
                Mode::Closed => rearrange_closed_interval(&t, x, y, eps, cli.tol)?,
            }
        }
    };
    let verification = verify_rearrangement(&t, &res, cli.tol)?;
    let subordination = match res.segment {
        Some(_) => Some(verify_subordinated(&t, &res, cli.tol)?),
        None => None,
    };
    let measure = measure_check(&t, &res);
    let ok = verification.passed()
        && subordination.as_ref().is_none_or(|s| s.passed())
        && measure.passed();
    let mut report = fields(json!({
        "epsilon": eps,
        "constant": res.constant,
        "moved": res.trace.moved(),
        "tree": res.target.to_json_value(),
        "point_map": to_value(&res.point_map_document(&t)),
        "verification": to_value(&verification),
        "subordination": subordination.as_ref().map(to_value),
        "measure": to_value(&measure),
    }));
    if cli.trace {
        report.insert("trace".into(), to_value(&res.trace));
    }
    Ok((ok, report))
}

fn cmd_separate(cli: &Cli, from: &str, to: &str, radii: &[f64]) -> CmdResult {
    let t = load_tree(input(cli)?)?;
    let eps = epsilon(cli)?;
    let sep = separating_function(&t, from, to, eps, cli.tol)?;
    let lip = lipschitz_constant(&t, &sep.function)?;
    let d = t.distance(
        TreePoint::Vertex(t.m_point(from)?),
        TreePoint::Vertex(t.m_point(to)?),
    );
    let radii = if radii.is_empty() {
        let h = sep.min_retained_half_length().unwrap_or(d / 2.0);
        let mut r = vec![h / 4.0, h / 2.0, d / 2.0, d, 2.0 * d];
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    } else {
        radii.to_vec()
    };
    let flatness = flatness_report(&t, &sep.function, &radii)?;
    Ok((
        lip <= 1.0 + LIPSCHITZ_SLACK,
        fields(json!({
            "epsilon": eps,
            "distance": d,
            "lipschitz_constant": lip,
            "function": to_value(&sep.function),
            "gaps": to_value(&sep.gaps),
            "separation": sep.separation,
            "discarded": sep.discarded,
            "marked_length": sep.marked_length,
            "degraded": sep.degraded,
            "flatness": to_value(&flatness),
        })),
    ))
}

fn cmd_gen(
    cli: &Cli,
    kind: Kind,
    size: usize,
    internal_m: f64,
    marked: f64,
    metric_out: Option<&Path>,
) -> CmdResult {
    for (name, p) in [("--internal-m", internal_m), ("--marked", marked)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::Input(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    let t = match kind {
        Kind::Path => gen::path(size, 1.0),
        Kind::Star => gen::star(size, false),
        Kind::Comb => gen::comb(size),
        Kind::RandomTree => gen::random_marked_tree(
            &mut gen::rng(cli.seed),
            gen::RandomTreeOptions {
                leaves: size,
                internal_m,
                marked,
            },
        ),
    };
    if let Some(path) = metric_out {
        fs::write(path, write_metric_csv(&t.to_metric()))
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let kind_name = kind
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_owned();
    Ok((
        true,
        fields(json!({
            "kind": kind_name,
            "size": size,
            "seed": cli.seed,
            "m_points": t.m_points().len(),
            "tree": t.to_json_value(),
        })),
    ))
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Check => cmd_check(cli),
        Command::Realize => cmd_realize(cli),
        Command::Norm {
            molecule,
            direction,
        } => cmd_norm(cli, molecule, direction.as_deref()),
        Command::Extreme => cmd_extreme(cli),
        Command::Rearrange { from, to, mode } => {
            let segment = from.as_deref().zip(to.as_deref());
            cmd_rearrange(cli, segment, *mode)
        }
        Command::Separate { from, to, radii } => cmd_separate(cli, from, to, radii),
        Command::Gen {
            kind,
            size,
            internal_m,
            marked,
            metric_out,
        } => cmd_gen(cli, *kind, *size, *internal_m, *marked, metric_out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = Map::new();
    report.insert("command".into(), json!(cli.command.name()));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if !cli.no_timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        report.insert("timestamp".into(), json!(secs));
    }
    let code = match run(&cli) {
        Ok((ok, body)) => {
            report.insert("status".into(), json!(if ok { "ok" } else { "failed" }));
            report.extend(body);
            if ok {
                0
            } else {
                1
            }
        }
        Err(Failure::Input(message)) => {
            report.insert("status".into(), json!("error"));
            report.insert("error".into(), json!(message));
            2
        }
        Err(Failure::Other(message)) => {
            report.insert("status".into(), json!("failed"));
            report.insert("error".into(), json!(message));
            1
        }
    };
    let text = serde_json::to_string_pretty(&Value::Object(report)).expect("report serializes");
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text + "\n") {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            // A closed pipe is not worth a panic.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
        }
    }
    ExitCode::from(code)
}
