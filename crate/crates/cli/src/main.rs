//! Command-line runner for the loop-group / Chern-Simons 2-gerbe
//! verification suite.

use clap::{Args, Parser, Subcommand};
use csgerbe_core::checks::{
    all_checks, report_csv_row, run_all, CheckParams, CheckReport, CSV_HEADER,
};
use csgerbe_core::gerbe::{
    alpha_form, beta_a_form, cs_form, four_curvature_form, pontryagin_half_form,
    random_chart_vector, random_q_point, BundleModel,
};
use csgerbe_core::forms::{Point, PointComponent, Tangent, TangentComponent};
use csgerbe_core::lie::{random_algebra, GroupSpec};
use csgerbe_core::pathspace::{random_path, random_path_tangent, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "csgerbe", version, about = "numerical verification of loop-group and Chern-Simons 2-gerbe identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run identity checks and report errors against tolerances.
    Check(CheckArgs),
    /// Sweep grid size and FD step, emitting errors and fitted orders as CSV.
    Convergence(CheckArgs),
    /// Build the default SO(5) bundle and print the 2-gerbe data at a sample point.
    Demo(DemoArgs),
    /// List the catalog of named forms.
    Catalog(CatalogArgs),
}

#[derive(Debug, Clone, Args)]
struct CheckArgs {
    /// Group: su2, su3, so3, so5 or sp1.
    #[arg(long)]
    group: Option<String>,

    /// θ-grid size (even, ≥ 16).
    #[arg(long, short = 'N')]
    n: Option<usize>,

    /// Finite-difference step (1e-7 ..= 1e-2).
    #[arg(long)]
    h: Option<f64>,

    /// RNG seed (default from CSGERBE_SEED or 7).
    #[arg(long)]
    seed: Option<u64>,

    /// Checks to run: "all" or a comma-separated list of names.
    #[arg(long)]
    checks: Option<String>,

    /// Per-check tolerance override, repeatable: NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tolerances: Vec<String>,

    /// JSON config file; command-line flags win over its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output file for the machine-readable report.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Output format: text, json or csv.
    #[arg(long)]
    format: Option<String>,

    /// Also write the JSON report to this path (shorthand for
    /// --format json --output PATH while keeping the text table).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    /// Use the flat connection a ≡ 0.
    #[arg(long)]
    flat: bool,

    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,

    /// θ-grid size.
    #[arg(long, short = 'N')]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct CatalogArgs {
    /// Emit the catalog as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Resolved run configuration (flags > config file > defaults).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    group: String,
    n: usize,
    h: f64,
    seed: u64,
    checks: Vec<String>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    format: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seed = std::env::var("CSGERBE_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(7);
        RunConfig {
            group: "su2".into(),
            n: 128,
            h: 1e-4,
            seed,
            checks: vec!["all".into()],
            tolerances: BTreeMap::new(),
            format: "text".into(),
            output: None,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_group(name: &str) -> Result<GroupSpec, CliError> {
    match name {
        "su2" => Ok(GroupSpec::su(2)),
        "su3" => Ok(GroupSpec::su(3)),
        "so3" => Ok(GroupSpec::so(3)),
        "so5" => Ok(GroupSpec::so(5)),
        "sp1" => Ok(GroupSpec::sp(1)),
        other => Err(usage(format!(
            "unknown group '{other}' (expected su2, su3, so3, so5 or sp1)"
        ))),
    }
}

fn resolve_config(args: &CheckArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        cfg = serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid config file {}: {e}", path.display())))?;
    }
    if let Some(g) = &args.group {
        cfg.group = g.clone();
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(h) = args.h {
        cfg.h = h;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = &args.checks {
        cfg.checks = c.split(',').map(|s| s.trim().to_string()).collect();
    }
    for t in &args.tolerances {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| usage(format!("bad --tol '{t}', expected NAME=VALUE")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| usage(format!("bad tolerance value in '{t}'")))?;
        cfg.tolerances.insert(name.to_string(), value);
    }
    if let Some(f) = &args.format {
        cfg.format = f.clone();
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.display().to_string());
    }

    // invariants
    if cfg.n < 16 || cfg.n % 2 != 0 {
        return Err(usage(format!("N must be even and ≥ 16, got {}", cfg.n)));
    }
    if !(1e-7..=1e-2).contains(&cfg.h) {
        return Err(usage(format!("h must lie in [1e-7, 1e-2], got {}", cfg.h)));
    }
    if !["text", "json", "csv"].contains(&cfg.format.as_str()) {
        return Err(usage(format!("unknown format '{}'", cfg.format)));
    }
    parse_group(&cfg.group)?;
    Ok(cfg)
}

fn selection(cfg: &RunConfig) -> Result<Option<Vec<String>>, CliError> {
    if cfg.checks.len() == 1 && cfg.checks[0] == "all" {
        return Ok(None);
    }
    let known: Vec<&str> = all_checks().iter().map(|d| d.name).collect();
    for c in &cfg.checks {
        if !known.contains(&c.as_str()) {
            return Err(usage(format!(
                "unknown check '{c}' (known: {})",
                known.join(", ")
            )));
        }
    }
    Ok(Some(cfg.checks.clone()))
}

fn run_selected(cfg: &RunConfig, with_order: bool) -> Result<Vec<CheckReport>, CliError> {
    let spec = parse_group(&cfg.group)?;
    let names = selection(cfg)?;
    let base = CheckParams {
        spec,
        n: cfg.n,
        h: cfg.h,
        seed: cfg.seed,
        with_order,
        ..CheckParams::default()
    };
    let mut reports = Vec::new();
    match names {
        None => {
            let out = run_all(&base, None)
                .map_err(|e| CliError::Failure(format!("check run failed: {e}")))?;
            reports.extend(out);
        }
        Some(list) => {
            for name in &list {
                let mut params = base.clone();
                params.tolerance = cfg.tolerances.get(name).copied();
                let r = csgerbe_core::checks::run_check(name, &params)
                    .map_err(|e| CliError::Failure(format!("{name}: {e}")))?;
                reports.push(r);
            }
            reports.sort_by(|a, b| a.check.cmp(&b.check));
        }
    }
    // apply overrides to the "all" path too
    if !cfg.tolerances.is_empty() {
        for r in &mut reports {
            if let Some(t) = cfg.tolerances.get(&r.check) {
                r.tolerance = *t;
                r.pass = r.max_rel_err <= *t;
            }
        }
    }
    Ok(reports)
}

fn report_json(cfg: &RunConfig, reports: &[CheckReport]) -> serde_json::Value {
    serde_json::json!({
        "version": SCHEMA_VERSION,
        "config": cfg,
        "reports": reports,
    })
}

fn print_table(reports: &[CheckReport]) {
    println!(
        "{:<26} {:<7} {:>6} {:>9} {:>12} {:>10} {:>8}  status",
        "check", "group", "N", "h", "max_rel_err", "tol", "order"
    );
    for r in reports {
        println!(
            "{:<26} {:<7} {:>6} {:>9.1e} {:>12.3e} {:>10.1e} {:>8}  {}",
            r.check,
            r.group,
            r.n,
            r.h,
            r.max_rel_err,
            r.tolerance,
            r.observed_order
                .map(|o| format!("{o:.2}"))
                .unwrap_or_else(|| "-".into()),
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
}

fn write_or_print(path: &Option<String>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Failure(format!("cannot write {p}: {e}"))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_check(args: &CheckArgs) -> Result<bool, CliError> {
    let cfg = resolve_config(args)?;
    let reports = run_selected(&cfg, true)?;
    match cfg.format.as_str() {
        "text" => print_table(&reports),
        "json" => {
            let json = serde_json::to_string_pretty(&report_json(&cfg, &reports)).unwrap();
            write_or_print(&cfg.output, &json)?;
        }
        "csv" => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &reports {
                out.push_str(&report_csv_row(r));
                out.push('\n');
            }
            write_or_print(&cfg.output, out.trim_end())?;
        }
        _ => unreachable!(),
    }
    if let Some(path) = &args.json {
        let json = serde_json::to_string_pretty(&report_json(&cfg, &reports)).unwrap();
        std::fs::write(path, json)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
        if cfg.format == "text" {
            println!("report written to {}", path.display());
        }
    }
    Ok(reports.iter().all(|r| r.pass))
}

/// Least-squares slope of ln(err) against ln(x).
fn fitted_order(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, e)| *x > 0.0 && *e > 1e-15)
        .map(|(x, e)| (x.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn cmd_convergence(args: &CheckArgs) -> Result<bool, CliError> {
    let cfg = resolve_config(args)?;
    let ns = [64usize, 128, 256];
    let hs = [1e-3f64, 1e-4, 1e-5];
    let names: Vec<String> = match selection(&cfg)? {
        None => all_checks().iter().map(|d| d.name.to_string()).collect(),
        Some(list) => list,
    };
    let spec = parse_group(&cfg.group)?;
    let mut rows: Vec<CheckReport> = Vec::new();
    for name in &names {
        let mut grid: Vec<Vec<CheckReport>> = Vec::new();
        for &n in &ns {
            let mut row = Vec::new();
            for &h in &hs {
                let params = CheckParams {
                    spec,
                    n,
                    h,
                    seed: cfg.seed,
                    with_order: false,
                    ..CheckParams::default()
                };
                let r = csgerbe_core::checks::run_check(name, &params)
                    .map_err(|e| CliError::Failure(format!("{name}: {e}")))?;
                row.push(r);
            }
            grid.push(row);
        }
        // per N: fitted h-order; per h: fitted order in the grid spacing
        // 2π/N. A row reports the h-order where the FD truncation is
        // visible, and the grid order where the error is h-flat.
        for (ni, _) in ns.iter().enumerate() {
            let h_pts: Vec<(f64, f64)> = hs
                .iter()
                .zip(&grid[ni])
                .map(|(&h, r)| (h, r.max_rel_err))
                .collect();
            let h_order = fitted_order(&h_pts).unwrap_or(0.0);
            for (hi, _) in hs.iter().enumerate() {
                let n_pts: Vec<(f64, f64)> = ns
                    .iter()
                    .enumerate()
                    .map(|(nj, &n)| (1.0 / n as f64, grid[nj][hi].max_rel_err))
                    .collect();
                let n_order = fitted_order(&n_pts);
                grid[ni][hi].observed_order = if h_order >= 1.0 {
                    Some(h_order)
                } else {
                    n_order
                };
            }
        }
        for row in grid {
            rows.extend(row);
        }
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&report_csv_row(r));
        out.push('\n');
    }
    write_or_print(&cfg.output, out.trim_end())?;
    Ok(true)
}

fn cmd_demo(args: &DemoArgs) -> Result<bool, CliError> {
    let seed = args.seed.unwrap_or_else(|| {
        std::env::var("CSGERBE_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(7)
    });
    let n = args.n.unwrap_or(64);
    if n < 16 || !n.is_multiple_of(2) {
        return Err(usage(format!("N must be even and ≥ 16, got {n}")));
    }
    let spec = GroupSpec::so(5);
    let bundle = if args.flat {
        BundleModel::flat(spec, 4)
    } else {
        BundleModel::random(spec, 4, seed)
    }
    .map_err(|e| CliError::Failure(e.to_string()))?;
    let grid = GridSpec::new(n).map_err(|e| CliError::Failure(e.to_string()))?;

    println!(
        "rigid 2-gerbe demo: {} bundle over a 4-chart, seed {seed}, N = {n}{}",
        spec,
        if args.flat { " (flat connection)" } else { "" }
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xde40);
    let qpt = random_q_point(&bundle, &mut rng);
    let path = random_path(&spec, &grid, &mut rng);
    let q2 = random_path(&spec, &grid, &mut rng);

    // β_A at (x, g, p) on two sample tangents
    let beta = beta_a_form(&bundle, grid);
    let point_qp = Point::new(vec![
        qpt.components[0].clone(),
        qpt.components[1].clone(),
        PointComponent::Path(path.clone()),
    ]);
    let mk_qp = |rng: &mut ChaCha8Rng| {
        Tangent::new(vec![
            TangentComponent::Chart(random_chart_vector(4, rng)),
            TangentComponent::Group(random_algebra(&spec, 1.0, rng)),
            TangentComponent::Path(random_path_tangent(&spec, &grid, rng)),
        ])
    };
    let (b1, b2) = (mk_qp(&mut rng), mk_qp(&mut rng));
    let beta_val = beta
        .eval(&point_qp, &[b1, b2])
        .map_err(|e| CliError::Failure(e.to_string()))?
        .scalar()
        .unwrap();
    println!("beta_A at the sample point        : {beta_val:+.9e}");

    // −CS(A) on Q
    let cs = cs_form(&bundle);
    let mk_q = |rng: &mut ChaCha8Rng| {
        Tangent::new(vec![
            TangentComponent::Chart(random_chart_vector(4, rng)),
            TangentComponent::Group(random_algebra(&spec, 1.0, rng)),
        ])
    };
    let cs_val = cs
        .eval(&qpt, &[mk_q(&mut rng), mk_q(&mut rng), mk_q(&mut rng)])
        .map_err(|e| CliError::Failure(e.to_string()))?
        .scalar()
        .unwrap();
    println!("-CS(A) at the sample point        : {cs_val:+.9e}");

    // α at (x, g, p, q)
    let alpha = alpha_form(4, spec, grid);
    let point_qpq = Point::new(vec![
        qpt.components[0].clone(),
        qpt.components[1].clone(),
        PointComponent::Path(path),
        PointComponent::Path(q2),
    ]);
    let alpha_tan = Tangent::new(vec![
        TangentComponent::Chart(random_chart_vector(4, &mut rng)),
        TangentComponent::Group(random_algebra(&spec, 1.0, &mut rng)),
        TangentComponent::Path(random_path_tangent(&spec, &grid, &mut rng)),
        TangentComponent::Path(random_path_tangent(&spec, &grid, &mut rng)),
    ]);
    let alpha_val = alpha
        .eval(&point_qpq, std::slice::from_ref(&alpha_tan))
        .map_err(|e| CliError::Failure(e.to_string()))?
        .scalar()
        .unwrap();
    println!("alpha at the sample point         : {alpha_val:+.9e}");

    // 4-curvature / 2π against the half-Pontryagin representative
    let f4 = four_curvature_form(&bundle);
    let p1 = pontryagin_half_form(&bundle);
    let x = Point::new(vec![PointComponent::Chart(random_chart_vector(4, &mut rng))]);
    let vs: Vec<Tangent> = (0..4)
        .map(|_| Tangent::new(vec![TangentComponent::Chart(random_chart_vector(4, &mut rng))]))
        .collect();
    let curv = f4.eval(&x, &vs).map_err(|e| CliError::Failure(e.to_string()))?.scalar().unwrap();
    let p1v = p1.eval(&x, &vs).map_err(|e| CliError::Failure(e.to_string()))?.scalar().unwrap();
    println!("4-curvature/2π at a chart point   : {:+.9e}", curv / (2.0 * std::f64::consts::PI));
    println!("tr(F²)/16π² at the same point     : {p1v:+.9e}");
    let dev = (curv / (2.0 * std::f64::consts::PI) - p1v).abs();
    println!("half-p1 deviation                 : {dev:.3e}");
    Ok(true)
}

fn cmd_catalog(args: &CatalogArgs) -> Result<bool, CliError> {
    let entries = csgerbe_core::catalog::catalog_entries();
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&csgerbe_core::catalog::catalog_json()).unwrap()
        );
        return Ok(true);
    }
    println!(
        "{:<14} {:<30} {:>6}  {:<16} reference",
        "name", "space", "degree", "status"
    );
    for e in &entries {
        let status = match e.kind {
            csgerbe_core::catalog::EntryKind::Form => "form",
            csgerbe_core::catalog::EntryKind::Function => "function",
            csgerbe_core::catalog::EntryKind::DescendedOnly => "descended-only",
            csgerbe_core::catalog::EntryKind::BundleModule => "bundle module",
        };
        println!(
            "{:<14} {:<30} {:>6}  {:<16} {}",
            e.name,
            e.space,
            e.degree.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
            status,
            e.reference
        );
    }
    println!("({} table rows, {} supplementary)",
        entries.iter().filter(|e| e.source == "table").count(),
        entries.iter().filter(|e| e.source == "supplementary").count());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Demo(args) => cmd_demo(args),
        Command::Catalog(args) => cmd_catalog(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
