//! The `gridflow` command line. Every subcommand is a thin wrapper over the
//! library; this module only parses flags, moves files and maps failures to
//! exit codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assets;
use crate::grid::NetworkModel;
use crate::io::{self, IoError};
use crate::pf::{self, PfError, PfSolution, SolveOptions};
use crate::plot;
use crate::repro::{self, Case, ReproError, ReproOptions};
use crate::scenario::{self, ScenarioConfig, ScenarioError};
use crate::surrogate::{self, ArchitectureSpec, Family, Model, SurrogateError, TrainConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NOT_RADIAL: i32 = 4;
pub const EXIT_GENERATION: i32 = 5;
pub const EXIT_NON_FINITE: i32 = 6;
pub const EXIT_REPRO: i32 = 7;

#[derive(Debug, Parser)]
#[command(name = "gridflow", version, about = "Three-phase distribution power flow and neural surrogates")]
pub struct Cli {
    /// Worker threads for scenario solving and concurrent training (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a circuit and, optionally, a scenario config.
    Validate {
        /// Circuit file (bundled names such as ieee4.ckt also work).
        #[arg(long)]
        circuit: PathBuf,
        /// Scenario config to check against the circuit.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Solve one snapshot power flow.
    Solve {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Fbs)]
        solver: SolverArg,
        /// Convergence tolerance on the per-phase voltage update, pu.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Solution CSV; losses go next to it as `<stem>_losses.csv`. Stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a dataset from a circuit and a scenario config.
    Gen {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long, env = "GRIDFLOW_SEED")]
        seed: Option<u64>,
        /// Output `.ds` file; the summary CSV is written as `<out>.report.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a surrogate on a dataset's training split.
    Train(TrainArgs),
    /// Score a model on a dataset split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Also write the group table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Draw SVG charts (with a CSV of the plotted points next to them).
    Plot(PlotArgs),
    /// Run a desk-scale case study and check its thresholds.
    Repro {
        #[arg(long, value_parser = parse_case)]
        case: Case,
        #[arg(long, env = "GRIDFLOW_SEED", default_value_t = 42)]
        seed: u64,
        /// One tenth of the hours and epochs; thresholds are still reported.
        #[arg(long)]
        quick: bool,
        /// Write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_family)]
    pub arch: Family,
    /// Defaults to the desk epoch count for the family (CNN 200, MLP 100, RBF 30).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: Option<u64>,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    /// Defaults to 256, or 1 for the RBF family.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub beta1: f64,
    #[arg(long, env = "GRIDFLOW_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Dropout after each hidden dense layer.
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// RBF neurons.
    #[arg(long, default_value_t = surrogate::RBF_K)]
    pub rbf_k: usize,
    /// Model JSON; the loss curve is written as `<out>.loss.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Dataset whose targets are drawn as daily profiles.
    #[arg(long, conflicts_with = "report")]
    pub solution: Option<PathBuf>,
    /// Overlay this model's predictions on the selected slots.
    #[arg(long, requires = "solution")]
    pub model: Option<PathBuf>,
    /// Comma-separated target slots for the overlay, e.g. `I:675:a,I:675:b`.
    #[arg(long, value_delimiter = ',')]
    pub slots: Vec<String>,
    #[arg(long, default_value_t = 24)]
    pub hours: usize,
    /// Loss-curve CSV written by `train`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// SVG path; the CSV goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Fbs,
    Ci,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

fn parse_case(s: &str) -> Result<Case, String> {
    s.parse()
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliError::new(EXIT_USAGE, message)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<PfError> for CliError {
    fn from(e: PfError) -> Self {
        let code = match e {
            PfError::NotRadial { .. } => EXIT_NOT_RADIAL,
            PfError::Diverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_USAGE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Pf(p) => p.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<SurrogateError> for CliError {
    fn from(e: SurrogateError) -> Self {
        let code = match e {
            SurrogateError::NonFiniteGradient { .. } => EXIT_NON_FINITE,
            _ => EXIT_USAGE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<ReproError> for CliError {
    fn from(e: ReproError) -> Self {
        match e {
            ReproError::Scenario(s) => s.into(),
            ReproError::Surrogate(s) => s.into(),
            g @ ReproError::Generation { .. } => CliError::new(EXIT_GENERATION, g.to_string()),
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<NetworkModel, CliError> {
    let text = assets::read_text(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    io::parse_circuit(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = assets::read_text(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    ScenarioConfig::parse(&text, path.parent()).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<scenario::Dataset, CliError> {
    io::read_dataset(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    io::read_model(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn solve_with(net: &NetworkModel, solver: SolverArg, opts: &SolveOptions) -> Result<PfSolution, CliError> {
    let sol = match solver {
        SolverArg::Ci => pf::CurrentInjectionSolver::new(net)?.solve(net, opts)?,
        _ => pf::FbsSolver::new(net)?.solve(net, opts)?,
    };
    if !sol.converged {
        return Err(CliError::new(EXIT_NOT_CONVERGED, format!("{} did not converge in {} iterations", if solver == SolverArg::Ci { "ci" } else { "fbs" }, sol.iterations)));
    }
    Ok(sol)
}

/// Runs one parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let mut say = |s: &str| {
        let _ = out.write_all(s.as_bytes());
    };
    match cli.command {
        Command::Validate { circuit, config } => {
            let net = load_circuit(&circuit)?;
            let layout = scenario::SlotLayout::new(&net);
            let radial = pf::order_branches(&net).is_ok();
            say(&format!(
                "{}: {} buses, {} branches, {} loads, {} capacitors, {} ({} features, {} targets)\n",
                net.name,
                net.buses.len(),
                net.branches.len(),
                net.loads.len(),
                net.capacitors.len(),
                if radial { "radial" } else { "meshed" },
                layout.nx(),
                layout.ny()
            ));
            if let Some(path) = config {
                let cfg = load_config(&path)?;
                scenario::generate_scenarios(&net, &ScenarioConfig { horizon: 1, ..cfg.clone() })?;
                say(&format!("{}: {} hours, {} PV, {} EV, seed {}\n", path.display(), cfg.horizon, cfg.pv.len(), cfg.ev.len(), cfg.seed));
            }
        }
        Command::Solve { circuit, solver, tol, max_iter, out: path } => {
            if !(tol > 0.0) || max_iter == 0 {
                return Err(CliError::usage("--tol must be positive and --max-iter at least 1"));
            }
            let net = load_circuit(&circuit)?;
            let opts = SolveOptions { tol, max_iter };
            let sol = solve_with(&net, solver, &opts)?;
            let name = if solver == SolverArg::Ci { "ci" } else { "fbs" };
            let mut report = format!("{name}: converged in {} iterations\n", sol.iterations);
            if solver == SolverArg::Both {
                let ci = solve_with(&net, SolverArg::Ci, &opts)?;
                let _ = writeln!(
                    report,
                    "fbs vs ci: max |dV| {:.3e} pu, max |dI| {:.3e} pu (ci {} iterations)",
                    sol.max_voltage_diff(&ci),
                    sol.max_current_diff(&ci),
                    ci.iterations
                );
            }
            let mismatch = pf::power_mismatch(&net, &sol)?.iter().flatten().map(|s| s.norm()).fold(0.0, f64::max);
            let _ = writeln!(report, "max power mismatch {mismatch:.3e} pu");
            match path {
                Some(p) => {
                    write(&p, &pf::solution_csv(&net, &sol))?;
                    let stem = p.with_extension("");
                    write(&with_suffix(&stem, "_losses.csv"), &pf::losses_csv(&net, &sol))?;
                    say(&report);
                }
                None => {
                    say(&pf::solution_csv(&net, &sol));
                    say(&report);
                }
            }
        }
        Command::Gen { circuit, config, seed, out: path } => {
            let net = load_circuit(&circuit)?;
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (ds, report) = scenario::generate_dataset(&net, &cfg, &SolveOptions::default())?;
            io::write_dataset(&ds, &path)?;
            write(&with_suffix(&path, ".report.csv"), &scenario::report_csv(&ds, &report))?;
            say(&format!(
                "{} samples ({} train, {} test), {} dropped of {} hours -> {}\n",
                ds.len(),
                ds.train.len(),
                ds.test.len(),
                report.dropped.len(),
                report.hours,
                path.display()
            ));
            if report.failure_rate() > 0.01 {
                return Err(CliError::new(EXIT_GENERATION, format!("{:.1}% of hours failed to solve", 100.0 * report.failure_rate())));
            }
        }
        Command::Train(a) => {
            if !(0.0..1.0).contains(&a.dropout) {
                return Err(CliError::usage("--dropout must lie in [0, 1)"));
            }
            let ds = load_dataset(&a.dataset)?;
            let defaults = TrainConfig::desk(a.arch, a.seed);
            let cfg = TrainConfig {
                lr: a.lr,
                batch: a.batch.map_or(defaults.batch, |b| b as usize),
                epochs: a.epochs.map_or(defaults.epochs, |e| e as usize),
                beta1: a.beta1,
                seed: a.seed,
            };
            cfg.validate()?;
            let arch = ArchitectureSpec {
                dropout: a.dropout,
                rbf_k: if a.arch == Family::Rbf { a.rbf_k } else { 0 },
                ..ArchitectureSpec::standard(a.arch, ds.nx(), ds.ny())
            };
            let mut model = Model::new(arch, &ds, cfg)?;
            let epochs = model.train.epochs;
            let history = surrogate::train(&mut model, &ds, |e, loss| log::info!("epoch {}/{epochs} loss {loss:.4e}", e + 1))?;
            io::write_model(&model, &a.out)?;
            let mut csv = String::from("epoch,loss\n");
            for (e, l) in history.iter().enumerate() {
                let _ = writeln!(csv, "{},{l}", e + 1);
            }
            write(&with_suffix(&a.out, ".loss.csv"), &csv)?;
            say(&format!("{} trained for {epochs} epochs, final loss {:.4e} -> {}\n", a.arch, history.last().copied().unwrap_or(f64::NAN), a.out.display()));
        }
        Command::Eval { model, dataset, split, csv } => {
            let mut m = load_model(&model)?;
            let ds = load_dataset(&dataset)?;
            let rows: Vec<usize> = match split {
                SplitArg::Train => ds.train.clone(),
                SplitArg::Test => ds.test.clone(),
                SplitArg::All => (0..ds.len()).collect(),
            };
            if rows.is_empty() {
                return Err(CliError::usage("the selected split is empty"));
            }
            let report = surrogate::evaluate(&mut m, &ds, &rows)?;
            if let Some(p) = csv {
                write(&p, &report.to_csv())?;
            }
            say(&report.table());
        }
        Command::Plot(a) => plot_command(a, &mut say)?,
        Command::Repro { case, seed, quick, json } => {
            let report = repro::run_case(case, &ReproOptions { seed, quick }, None)?;
            if let Some(p) = json {
                write(&p, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
            }
            say(&report.table());
            if !report.passed() {
                let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
                return Err(CliError::new(EXIT_REPRO, format!("failed: {}", names.join("; "))));
            }
        }
    }
    Ok(())
}

fn plot_command(a: PlotArgs, say: &mut dyn FnMut(&str)) -> Result<(), CliError> {
    let panels = if let Some(report) = &a.report {
        let text = std::fs::read_to_string(report).map_err(|e| CliError::usage(format!("{}: {e}", report.display())))?;
        let mut loss = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let v = line.rsplit(',').next().and_then(|s| s.trim().parse::<f64>().ok());
            loss.push(v.ok_or_else(|| CliError::usage(format!("{}: line {}: expected epoch,loss", report.display(), i + 1)))?);
        }
        let smooth = surrogate::smooth(&loss, 10);
        vec![plot::Panel {
            title: "Training loss".into(),
            x_label: "epoch".into(),
            y_label: "MSE (normalized)".into(),
            series: vec![
                plot::Series { name: "loss".into(), values: loss, dashed: false },
                plot::Series { name: "10-epoch mean".into(), values: smooth, dashed: true },
            ],
        }]
    } else if let Some(sol) = &a.solution {
        let ds = load_dataset(sol)?;
        let hours = a.hours.min(ds.len());
        if hours == 0 {
            return Err(CliError::usage("--hours must be at least 1"));
        }
        let mut panels = plot::profile_panels(&ds, hours);
        if let Some(mp) = &a.model {
            let mut model = load_model(mp)?;
            model.check_schema(&ds)?;
            let slots: Vec<usize> = if a.slots.is_empty() {
                (0..ds.ny()).filter(|&j| ds.y_names[j].starts_with("I:")).take(3).collect()
            } else {
                a.slots
                    .iter()
                    .map(|s| ds.y_names.iter().position(|n| n == s).ok_or_else(|| CliError::usage(format!("unknown slot `{s}`"))))
                    .collect::<Result<_, _>>()?
            };
            let raw: Vec<f64> = (0..hours).flat_map(|r| ds.x_row(r).to_vec()).collect();
            let pred = model.predict(&raw)?;
            let ny = ds.ny();
            let overlay: Vec<(String, Vec<f64>, Vec<f64>)> = slots
                .iter()
                .map(|&j| (ds.y_names[j].clone(), (0..hours).map(|r| ds.y_row(r)[j]).collect(), (0..hours).map(|r| pred[r * ny + j]).collect()))
                .collect();
            panels.push(plot::overlay_panel("Ground truth vs prediction", &overlay));
        }
        panels
    } else {
        return Err(CliError::usage("plot needs --solution or --report"));
    };
    write(&a.out, &plot::render(&panels))?;
    let csv = a.out.with_extension("csv");
    write(&csv, &plot::panels_csv(&panels))?;
    say(&format!("{} panels -> {} and {}\n", panels.len(), a.out.display(), csv.display()));
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match execute(cli, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
