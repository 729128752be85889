use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hyperfill::funcspace::{
    besov_norm, besov_norm_dyadic, dirichlet_norm, lp_norm_boundary, lp_norm_graph, BoundaryFunction,
    GraphFunction,
};
use hyperfill::report::{round12, ReportTable};
use hyperfill::space::{generate_space, save_space, SpaceFormat, SpaceKind};
use hyperfill::traceext::{poisson_extension, trace, truncate_extension};
use hyperfill::verify::{run_all, Pipeline, RunConfig, SpaceSource, Status};
use hyperfill::{Error, Result};

#[derive(Parser)]
#[command(name = "hyperfill", version, about = "Hyperbolic fillings, traces and extensions of finite metric measure spaces")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "HYPERFILL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated space to a CSV or JSON file.
    GenSpace(GenSpaceArgs),
    /// Build the filling and write graph exports and structural stats.
    Build(BuildArgs),
    /// Norms of a boundary or graph function.
    Norms(FunctionArgs),
    /// Trace of a graph function, with its level-by-level remainders.
    Trace(TraceArgs),
    /// Poisson extension of a boundary function.
    Extend(ExtendArgs),
    /// Run the inequality checks and write a report bundle.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    IntervalGrid,
    Circle,
    Cantor,
    Snowflake,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for SpaceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => SpaceFormat::Csv,
            Format::Json => SpaceFormat::Json,
        }
    }
}

#[derive(Args)]
struct GenSpaceArgs {
    kind: Kind,
    /// Point count for interval-grid and circle.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Construction depth for cantor.
    #[arg(long, default_value_t = 3)]
    level: u32,
    /// Snowflake exponent in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Base space of a snowflake.
    #[arg(long, value_enum, default_value = "interval-grid")]
    base: Kind,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SetupArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Space file (CSV or JSON).
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    n_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    n_max: Option<i32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

impl SetupArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => {
                let path = self
                    .space
                    .clone()
                    .ok_or_else(|| Error::InvalidParams("either --space or --config is required".into()))?;
                RunConfig::new(SpaceSource::File { path, format: None })
            }
        };
        if let Some(path) = &self.space {
            cfg.space = SpaceSource::File {
                path: path.clone(),
                format: self.format.map(Into::into),
            };
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if self.n_min.is_some() {
            cfg.n_min = self.n_min;
        }
        if self.n_max.is_some() {
            cfg.n_max = self.n_max;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        Ok(cfg)
    }

    fn pipeline(&self) -> Result<Pipeline> {
        let cfg = self.config()?;
        let space = Arc::new(cfg.space.load()?);
        let params = cfg.filling_params(&space)?;
        Pipeline::build(space, &params, cfg.besov()?)
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct FunctionArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Boundary function (`id,value` CSV or JSON) or graph function JSON.
    #[arg(long)]
    function: PathBuf,
    /// Write the JSON result here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Graph function JSON.
    #[arg(long)]
    function: PathBuf,
    /// Level of the partial trace; defaults to the finest.
    #[arg(long, allow_hyphen_values = true)]
    level: Option<i32>,
    /// Trace output, CSV or JSON by extension.
    #[arg(long, short)]
    out: PathBuf,
    /// Remainder series as a report CSV.
    #[arg(long)]
    series: Option<PathBuf>,
}

#[derive(Args)]
struct ExtendArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Boundary function.
    #[arg(long)]
    function: PathBuf,
    /// Zero the extension above this level.
    #[arg(long, allow_hyphen_values = true)]
    truncate: Option<i32>,
    /// Graph function JSON output.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Comma-separated check names; all checks when omitted.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bundle directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn kind_of(k: Kind, a: &GenSpaceArgs) -> SpaceKind {
    match k {
        Kind::IntervalGrid => SpaceKind::IntervalGrid { n: a.n },
        Kind::Circle => SpaceKind::Circle { n: a.n },
        Kind::Cantor => SpaceKind::Cantor { level: a.level },
        Kind::Snowflake => SpaceKind::Snowflake {
            base: Box::new(match a.base {
                Kind::Snowflake => SpaceKind::IntervalGrid { n: a.n },
                b => kind_of(b, a),
            }),
            eps: a.eps,
        },
    }
}

/// Rounds every float in a JSON tree to twelve significant digits.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(round12(x));
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn write_json(path: &Path, mut v: Value) -> Result<()> {
    round_json(&mut v);
    let text = serde_json::to_string_pretty(&v).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(out: Option<&Path>, mut v: Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, v),
        None => {
            round_json(&mut v);
            let text = serde_json::to_string_pretty(&v).expect("serializable");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn ensure_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn cmd_gen_space(a: &GenSpaceArgs) -> Result<()> {
    let space = generate_space(&kind_of(a.kind, a))?;
    let format = a.format.map(Into::into).unwrap_or_else(|| SpaceFormat::from_path(&a.out));
    save_space(&space, &a.out, format)?;
    println!("wrote {} points to {}", space.len(), a.out.display());
    Ok(())
}

fn cmd_build(a: &BuildArgs) -> Result<()> {
    let p = a.setup.pipeline()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let g = p.graph();
    let rho: Vec<f64> = p.ug.links()[..g.edges().len()].iter().map(|l| l.rho_length).collect();
    write_json(&a.out.join("graph.json"), g.to_json(Some(&rho)))?;
    let dot = a.out.join("graph.dot");
    std::fs::write(&dot, g.to_dot()).map_err(|e| Error::Io { path: dot, source: e })?;
    let params = p.params();
    let levels: Vec<Value> = params
        .levels()
        .map(|n| {
            json!({
                "level": n,
                "vertices": g.level_range(n).len(),
                "mass": p.mu.level_mass(&p.ug, n),
            })
        })
        .collect();
    let stats = json!({
        "alpha": params.alpha,
        "tau": params.tau,
        "n_min": params.n_min,
        "n_max": params.n_max,
        "beta": p.besov.beta(),
        "vertices": g.num_vertices(),
        "edges": g.edges().len(),
        "total_mass": p.mu.total_mass(),
        "degree_stats": g.degree_stats(),
        "levels": levels,
    });
    write_json(&a.out.join("stats.json"), stats)?;
    println!(
        "{} vertices, {} edges, levels {}..={}",
        g.num_vertices(),
        g.edges().len(),
        params.n_min,
        params.n_max
    );
    Ok(())
}

fn cmd_norms(a: &FunctionArgs) -> Result<()> {
    ensure_file(&a.function)?;
    let p = a.setup.pipeline()?;
    let pw = p.p();
    let top = p.params().n_max;
    let is_graph = a.function.extension().is_some_and(|e| e == "json")
        && read_json(&a.function)?.get("vertex_values").is_some();
    let v = if is_graph {
        let u = GraphFunction::from_json(&read_json(&a.function)?, &p.ug)?;
        let tu = hyperfill::traceext::trace_level(&p.pous, &u, top);
        json!({
            "kind": "graph",
            "dirichlet": dirichlet_norm(&p.ug, &p.mu, &u, pw),
            "lp": lp_norm_graph(&p.ug, &p.mu, &u, pw),
            "trace": {
                "besov": besov_norm(&p.space, &tu, &p.besov),
                "lp": lp_norm_boundary(&p.space, &tu, pw),
            },
        })
    } else {
        let f = BoundaryFunction::load(&a.function, &p.space)?;
        let pf = p.extend(&f);
        json!({
            "kind": "boundary",
            "besov": besov_norm(&p.space, &f, &p.besov),
            "besov_dyadic": besov_norm_dyadic(&p.space, &f, &p.besov, p.params().alpha)?,
            "lp": lp_norm_boundary(&p.space, &f, pw),
            "extension": {
                "dirichlet": dirichlet_norm(&p.ug, &p.mu, &pf, pw),
                "lp": lp_norm_graph(&p.ug, &p.mu, &pf, pw),
            },
        })
    };
    emit(a.out.as_deref(), v)
}

fn save_boundary(f: &BoundaryFunction, path: &Path, p: &Pipeline) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        write_json(path, json!({ "boundary_values": f.values }))
    } else {
        f.save_csv(path, &p.space)
    }
}

fn cmd_trace(a: &TraceArgs) -> Result<()> {
    ensure_file(&a.function)?;
    let p = a.setup.pipeline()?;
    let params = *p.params();
    let u = GraphFunction::from_json(&read_json(&a.function)?, &p.ug)?;
    let level = a.level.unwrap_or(params.n_max);
    if level < params.n_min || level > params.n_max {
        return Err(Error::InvalidParams(format!(
            "level {level} outside {}..={}",
            params.n_min, params.n_max
        )));
    }
    let tr = trace(&p.ug, &p.pous, &u, params.n_min..=params.n_max, p.p())?;
    let idx = (level - params.n_min) as usize;
    save_boundary(&tr.partial[idx], &a.out, &p)?;
    if let Some(path) = &a.series {
        let rate = p.besov.beta() / p.p() - 1.0;
        let mut t = ReportTable::new("trace_remainder");
        for &(n, r) in &tr.remainders {
            t.push(format!("n{n}"), n as f64, 0.0, r, params.alpha.powf(rate * n as f64));
        }
        std::fs::write(path, t.to_csv()).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    let rem: Vec<Value> = tr
        .remainders
        .iter()
        .map(|&(n, r)| json!({ "level": n, "remainder": r }))
        .collect();
    emit(None, json!({ "level": level, "remainders": rem }))
}

fn cmd_extend(a: &ExtendArgs) -> Result<()> {
    ensure_file(&a.function)?;
    let p = a.setup.pipeline()?;
    let f = BoundaryFunction::load(&a.function, &p.space)?;
    let ext = poisson_extension(&p.ug, &f)?;
    let u = match a.truncate {
        Some(n) => truncate_extension(&ext, &p.ug, n),
        None => ext.pf,
    };
    write_json(&a.out, u.to_json(&p.ug))?;
    println!("wrote {} node values to {}", u.values.len(), a.out.display());
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let mut cfg = a.setup.config()?;
    if !a.checks.is_empty() {
        cfg.checks = a.checks.clone();
    }
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    if a.output.is_some() {
        cfg.output = a.output.clone();
    }
    let bundle = run_all(&cfg)?;
    for c in &bundle.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped: hypothesis",
        };
        if c.reason.is_empty() {
            println!("{:<22} {status}", c.name);
        } else {
            println!("{:<22} {status} ({})", c.name, c.reason);
        }
    }
    Ok(bundle.passed())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::GenSpace(a) => cmd_gen_space(a).map(|_| true),
        Command::Build(a) => cmd_build(a).map(|_| true),
        Command::Norms(a) => cmd_norms(a).map(|_| true),
        Command::Trace(a) => cmd_trace(a).map(|_| true),
        Command::Extend(a) => cmd_extend(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
