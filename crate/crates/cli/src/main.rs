//! `calabi`: exact class analysis, bubble exclusion and torus flow runs.
//!
//! Exit codes: 0 success (EXCLUDED, converged), 1 NOT_EXCLUDED or a failed
//! property sweep, 2 bad input, 3 class outside the Kähler cone, 4 flow
//! stiffness failure, 5 flow stopped before convergence, 6 I/O failure.

mod parse;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde::Serialize;
use serde_json::json;

use calabi_core::bubbles::{catalog, enumerate_candidates};
use calabi_core::energy::{analyze_class, compact_budgets};
use calabi_core::exclusion::{
    exclude_with, flip_threshold, ExclusionError, FlipThreshold, REPORT_SCHEMA,
};
use calabi_core::flow::{
    interpolation_check, interpolation_ratio, random_band_limited, write_history_csv,
    write_snapshot, SpectralGrid,
};
use calabi_core::lattice::kahler_cone_contains;
use calabi_core::rational::format_fraction;
use calabi_core::sobolev::sobolev_upper_bound;
use calabi_core::{
    CalabiFlow, ClassAnalysis, CohomologyClass, EnergyQuantity, ExclusionInput, ExclusionOptions,
    ExclusionReport, FlowConfig, FlowError, GeneratorRule, InitSpec, RunStatus, SobolevBoundReport,
    SurfaceModel, Verdict,
};

const THREADS_ENV: &str = "CALABI_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "calabi",
    version,
    about = "Calabi-flow bubble exclusion and torus flow simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy bounds, cone memberships and the Sobolev bound for a class.
    Analyze(AnalyzeArgs),
    /// Run the case-by-case bubble exclusion.
    Exclude(ExcludeArgs),
    /// Simulate the flow on the flat torus.
    Flow(FlowArgs),
    /// List bubble candidates within a budget.
    Catalog(CatalogArgs),
    /// Property sweep of the interpolation inequality.
    CheckInterp(InterpArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Generators {
    All,
    Any,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// `x=p/q` or "h:3 e:1/2,1/2,1/2".
    class: String,
    /// Squared Futaki norm, a multiple of pi^2.
    #[arg(long, default_value = "0")]
    futaki: String,
    /// Energy for the Sobolev bound (default: the lower bound A).
    #[arg(long)]
    energy: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct ExcludeArgs {
    class: String,
    /// Initial Calabi energy as a multiple of pi^2, or `B-`.
    #[arg(long)]
    energy: String,
    /// The initial metric is Z3-invariant.
    #[arg(long)]
    z3: bool,
    #[arg(long, default_value = "0")]
    futaki: String,
    #[arg(long, value_enum, default_value = "all")]
    lagrangian_generators: Generators,
    /// Also bisect for the energy where the verdict flips.
    #[arg(long)]
    threshold: bool,
    /// Bracket width for --threshold, a multiple of pi^2.
    #[arg(long, default_value = "1/1000")]
    resolution: String,
    /// Walk every candidate instead of stopping at the first survivors.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct FlowArgs {
    /// JSON file with FlowConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    /// `zero`, `cos:<eps>` or `random:<seed>,<band>`.
    #[arg(long, default_value = "zero")]
    init: String,
    /// Convergence threshold for max|R|.
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long, default_value = "flow-out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct CatalogArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    b2: u8,
    /// Initial energy on the three-point blowup; the Ric0 budget follows.
    #[arg(long, conflicts_with = "budget")]
    energy: Option<String>,
    /// Ric0 budget directly, a multiple of pi^2.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct InterpArgs {
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 200)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    band: usize,
    /// Exponent triple `r,p,q`; default sweeps r in {1, 3/2, 2} with p = q = 2r.
    #[arg(long)]
    exponents: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }

    fn io(err: io::Error) -> Self {
        // A closed stdout (e.g. `| head`) is not worth a message.
        if err.kind() == io::ErrorKind::BrokenPipe {
            return Self::new(6, "");
        }
        Self::new(6, format!("I/O error: {err}"))
    }
}

type Outcome = Result<u8, Failure>;

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Failure::new(6, e.to_string()))?;
    writeln!(io::stdout().lock(), "{s}").map_err(Failure::io)
}

fn unsupported(format: Format, command: &str) -> Failure {
    Failure::input(format!("format {format:?} is not available for {command}").to_lowercase())
}

fn class_in_cone(spec: &str) -> Result<CohomologyClass, Failure> {
    let w = parse::parse_class(spec).map_err(Failure::input)?;
    let inside = kahler_cone_contains(SurfaceModel::three_point_blowup(), &w)
        .map_err(|e| Failure::input(e.to_string()))?;
    if !inside {
        return Err(Failure::new(
            3,
            format!("class {spec:?} is outside the Kähler cone"),
        ));
    }
    Ok(w)
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    schema: u32,
    #[serde(flatten)]
    analysis: &'a ClassAnalysis,
    in_kahler_cone: bool,
    energy: &'a EnergyQuantity,
    sobolev: &'a SobolevBoundReport,
}

#[derive(Serialize)]
struct ExcludeOutput<'a> {
    #[serde(flatten)]
    report: &'a ExclusionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    flip_threshold: Option<&'a FlipThreshold>,
}

fn run_analyze(args: &AnalyzeArgs) -> Outcome {
    if args.format == Format::Csv {
        return Err(unsupported(args.format, "analyze"));
    }
    let w = class_in_cone(&args.class)?;
    let futaki = parse::parse_quantity(&args.futaki).map_err(Failure::input)?;
    let analysis = analyze_class(&w, &futaki).map_err(|e| Failure::input(e.to_string()))?;
    let energy = match &args.energy {
        Some(s) => parse::parse_energy(s, &w, &futaki).map_err(Failure::input)?,
        None => analysis.lower_bound_a.clone(),
    };
    let sobolev =
        sobolev_upper_bound(&w, &energy, &futaki).map_err(|e| Failure::input(e.to_string()))?;
    match args.format {
        Format::Json => {
            print_json(&AnalyzeOutput {
                schema: REPORT_SCHEMA,
                analysis: &analysis,
                in_kahler_cone: true,
                energy: &energy,
                sobolev: &sobolev,
            })?;
        }
        _ => {
            println!("A = {}", analysis.lower_bound_a);
            println!("B = {}", analysis.threshold_b);
            println!("R̄²V = {}", analysis.rbar_sq_vol);
            println!("Kähler cone: yes");
            println!("Tian cone: {}", yes_no(analysis.in_tian_cone));
            println!(
                "generalized Tian cone: {}",
                yes_no(analysis.in_generalized_tian_cone)
            );
            println!("energy = {energy}");
            println!("Yamabe² lower bound = {}", sobolev.yamabe_sq_lower_exact);
            println!("|R - R̄|² = {}", sobolev.deviation_sq_exact);
            match sobolev.sobolev_upper {
                Some(c) => println!("Sobolev constant <= {c:.17e}"),
                None => println!("Sobolev bound unavailable (Y² <= |R - R̄|²)"),
            }
        }
    }
    Ok(0)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn exclusion_failure(e: ExclusionError) -> Failure {
    match e {
        ExclusionError::NotKahler => Failure::new(3, e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

fn run_exclude(args: &ExcludeArgs) -> Outcome {
    if args.format == Format::Csv {
        return Err(unsupported(args.format, "exclude"));
    }
    let w = class_in_cone(&args.class)?;
    let futaki = parse::parse_quantity(&args.futaki).map_err(Failure::input)?;
    let energy = parse::parse_energy(&args.energy, &w, &futaki).map_err(Failure::input)?;
    let symmetry_order = if args.z3 { 3 } else { 1 };
    let input = ExclusionInput {
        kahler_class: w.clone(),
        initial_energy: energy,
        symmetry_order,
        futaki_norm_sq: futaki.clone(),
    };
    let mut opts = if args.exhaustive {
        ExclusionOptions::exhaustive()
    } else {
        ExclusionOptions::default()
    };
    opts.generators = match args.lagrangian_generators {
        Generators::All => GeneratorRule::All,
        Generators::Any => GeneratorRule::Any,
    };
    let report = exclude_with(&input, &opts).map_err(exclusion_failure)?;
    let threshold = if args.threshold {
        let res = parse::parse_quantity(&args.resolution).map_err(Failure::input)?;
        Some(flip_threshold(&w, symmetry_order, &futaki, &opts, &res).map_err(exclusion_failure)?)
    } else {
        None
    };
    match args.format {
        Format::Json => {
            print_json(&ExcludeOutput {
                report: &report,
                flip_threshold: threshold.as_ref(),
            })?;
        }
        _ => {
            print!("{}", report.render_text());
            if let Some(t) = &threshold {
                println!(
                    "Verdict flips in [{}, {}] (resolution {}).",
                    t.excluded_at, t.not_excluded_at, t.resolution
                );
            }
        }
    }
    Ok(match report.verdict {
        Verdict::Excluded => 0,
        Verdict::NotExcluded => 1,
    })
}

fn load_flow_config(args: &FlowArgs) -> Result<FlowConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(Failure::io)?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::input(format!("config {}: {e}", path.display())))?
        }
        None => FlowConfig::default(),
    };
    if let Some(n) = args.grid {
        cfg.grid_size = n;
    }
    if let Some(t) = args.tmax {
        cfg.max_time = t;
    }
    if let Some(r) = args.rtol {
        cfg.r_tol = r;
    }
    if let Some(d) = args.dt_max {
        cfg.dt_max = d;
        cfg.dt_initial = cfg.dt_initial.min(d);
    }
    Ok(cfg)
}

fn run_flow(args: &FlowArgs) -> Outcome {
    let cfg = load_flow_config(args)?;
    let init: InitSpec = args
        .init
        .parse()
        .map_err(|e: FlowError| Failure::input(e.to_string()))?;
    let solver = CalabiFlow::new(cfg).map_err(|e| Failure::input(e.to_string()))?;
    let n = solver.config().grid_size;
    let phi = init.build(n).map_err(|e| Failure::input(e.to_string()))?;
    let state = solver
        .state(phi)
        .map_err(|e| Failure::input(e.to_string()))?;
    let outcome = match solver.run(state) {
        Ok(o) => o,
        Err(e @ FlowError::Stiffness { .. }) => return Err(Failure::new(4, e.to_string())),
        Err(e) => return Err(Failure::input(e.to_string())),
    };

    fs::create_dir_all(&args.out_dir).map_err(Failure::io)?;
    let csv_path = args.out_dir.join("history.csv");
    let file = fs::File::create(&csv_path).map_err(Failure::io)?;
    write_history_csv(io::BufWriter::new(file), &outcome.state.history).map_err(Failure::io)?;
    let sidecar = write_snapshot(&args.out_dir, "final", &outcome.state).map_err(Failure::io)?;

    let s = &outcome.state;
    match args.format {
        Format::Csv => {
            let stdout = io::stdout();
            write_history_csv(stdout.lock(), &s.history).map_err(Failure::io)?;
        }
        Format::Json => {
            print_json(&json!({
                "schema": REPORT_SCHEMA,
                "status": outcome.status,
                "init": init.to_string(),
                "grid_size": n,
                "time": s.time,
                "accepted_steps": outcome.accepted,
                "rejected_steps": outcome.rejected,
                "calabi_energy": s.calabi_energy(),
                "max_abs_R": s.max_abs_r(),
                "total_area": s.total_area(),
                "u_oscillation": s.u_oscillation(),
                "csv": csv_path,
                "snapshot": sidecar,
            }))?;
        }
        Format::Text => {
            println!("status: {:?}", outcome.status);
            println!(
                "t = {:e}  steps = {} (+{} rejected)",
                s.time, outcome.accepted, outcome.rejected
            );
            println!(
                "energy = {:e}  max|R| = {:e}  area = {}",
                s.calabi_energy(),
                s.max_abs_r(),
                s.total_area()
            );
            println!("wrote {} and {}", csv_path.display(), sidecar.display());
        }
    }
    Ok(match outcome.status {
        RunStatus::Converged => 0,
        _ => 5,
    })
}

fn run_catalog(args: &CatalogArgs) -> Outcome {
    let budget = match (&args.energy, &args.budget) {
        (Some(e), None) => {
            let e = EnergyQuantity::parse(e).map_err(|e| Failure::input(e.to_string()))?;
            compact_budgets(SurfaceModel::three_point_blowup(), &e)
                .map_err(|e| Failure::input(e.to_string()))?
                .ric0_budget
        }
        (None, Some(b)) => EnergyQuantity::parse(b).map_err(|e| Failure::input(e.to_string()))?,
        _ => return Err(Failure::input("give exactly one of --energy or --budget")),
    };
    let en = enumerate_candidates(args.b2 as usize, &budget)
        .map_err(|e| Failure::input(e.to_string()))?;
    let rows = catalog(&en);
    match args.format {
        Format::Json => print_json(&json!({
            "schema": REPORT_SCHEMA,
            "b2": en.b2,
            "ric0_budget": en.ric0_budget,
            "param_bound": en.param_bound,
            "degenerate": en.degenerate,
            "entries": rows,
        }))?,
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record([
                "b2",
                "params",
                "group_order",
                "euler_char",
                "ric0",
                "wminus",
                "eta_invariant",
            ])
            .map_err(|e| Failure::io(e.into()))?;
            for r in &rows {
                let params = r
                    .candidate
                    .params
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(";");
                w.write_record([
                    r.candidate.b2.to_string(),
                    params,
                    r.candidate.group_order.to_string(),
                    r.candidate.euler_char.to_string(),
                    r.energies.ric0.to_string(),
                    r.energies.wminus.to_string(),
                    format_fraction(&r.energies.eta_invariant),
                ])
                .map_err(|e| Failure::io(e.into()))?;
            }
            w.flush().map_err(Failure::io)?;
        }
        Format::Text => {
            println!(
                "b2 = {}: {} candidate(s) with Ric0 < {} (parameters <= {})",
                en.b2,
                rows.len(),
                en.ric0_budget,
                en.param_bound
            );
            for r in &rows {
                println!(
                    "  {:?}  |G|={}  Ric0={}  W-={}",
                    r.candidate.params, r.candidate.group_order, r.energies.ric0, r.energies.wminus
                );
            }
            if !en.degenerate.is_empty() {
                println!("  degenerate (|G| = 0): {:?}", en.degenerate);
            }
        }
    }
    Ok(0)
}

fn csv_writer() -> csv::Writer<io::Stdout> {
    csv::Writer::from_writer(io::stdout())
}

fn parse_exponents(spec: &str) -> Result<(Rational64, Rational64, Rational64), Failure> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [r, p, q] = parts.as_slice() else {
        return Err(Failure::input("exponents must be r,p,q"));
    };
    let parse = |s: &str| {
        s.parse::<Rational64>()
            .map_err(|_| Failure::input(format!("cannot parse exponent {s:?}")))
    };
    Ok((parse(r)?, parse(p)?, parse(q)?))
}

fn run_check_interp(args: &InterpArgs) -> Outcome {
    if args.format == Format::Csv {
        return Err(unsupported(args.format, "check-interp"));
    }
    if args.grid < 16 || !args.grid.is_power_of_two() {
        return Err(Failure::input("grid must be a power of two >= 16"));
    }
    if args.band == 0 || 3 * args.band >= args.grid {
        return Err(Failure::input("band must lie in 1..grid/3"));
    }
    let triples = match &args.exponents {
        Some(s) => vec![parse_exponents(s)?],
        None => {
            let r = |n, d| Rational64::new(n, d);
            vec![
                (r(1, 1), r(2, 1), r(2, 1)),
                (r(3, 2), r(3, 1), r(3, 1)),
                (r(2, 1), r(4, 1), r(4, 1)),
            ]
        }
    };
    let grid = SpectralGrid::new(args.grid);
    let mut checks = 0u64;
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    let mut ratio_max = [0.0f64; 2];
    for i in 0..args.samples {
        let t = random_band_limited(args.grid, args.seed + i, args.band, 1.0);
        for &(r, p, q) in &triples {
            let c = interpolation_check(&grid, &t, r, p, q)
                .map_err(|e| Failure::input(e.to_string()))?;
            checks += 1;
            if c.rhs > 0.0 {
                worst = worst.max(c.lhs / c.rhs);
            }
            if !c.holds {
                violations.push(
                    json!({"seed": args.seed + i, "r": r.to_string(), "lhs": c.lhs, "rhs": c.rhs}),
                );
            }
        }
        for (slot, (i_, k_)) in [(1u32, 2u32), (1, 3)].into_iter().enumerate() {
            let ratio = interpolation_ratio(&grid, &t, i_, k_)
                .map_err(|e| Failure::input(e.to_string()))?;
            ratio_max[slot] = ratio_max[slot].max(ratio);
        }
    }
    let n = args.grid;
    let cosine: Vec<f64> = (0..n * n)
        .map(|i| (2.0 * std::f64::consts::PI * (i % n) as f64 / n as f64).cos())
        .collect();
    let one = Rational64::new(1, 1);
    let two = Rational64::new(2, 1);
    let cos_check = interpolation_check(&grid, &cosine, one, two, two)
        .map_err(|e| Failure::input(e.to_string()))?;
    let all_hold = violations.is_empty();
    match args.format {
        Format::Json => print_json(&json!({
            "schema": REPORT_SCHEMA,
            "samples": args.samples,
            "checks": checks,
            "all_hold": all_hold,
            "max_lhs_over_rhs": worst,
            "violations": violations,
            "cosine": cos_check,
            "ratio_sweep_max": {"1/2": ratio_max[0], "1/3": ratio_max[1]},
        }))?,
        _ => {
            println!(
                "{checks} checks over {} fields: {}",
                args.samples,
                if all_hold { "all hold" } else { "VIOLATIONS" }
            );
            println!("max lhs/rhs = {worst:.6}");
            println!(
                "cos 2πx: lhs = {:.12}  rhs = {:.12}",
                cos_check.lhs, cos_check.rhs
            );
            println!(
                "Parseval ratio max: i/k=1/2 {:.6}, i/k=1/3 {:.6}",
                ratio_max[0], ratio_max[1]
            );
        }
    }
    Ok(if all_hold { 0 } else { 1 })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::input(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Exclude(a) => run_exclude(a),
        Command::Flow(a) => run_flow(a),
        Command::Catalog(a) => run_catalog(a),
        Command::CheckInterp(a) => run_check_interp(a),
    });
    match result {
        Ok(code) => {
            let _ = io::stdout().flush();
            ExitCode::from(code)
        }
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("calabi: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
