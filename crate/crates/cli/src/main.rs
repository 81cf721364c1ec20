use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use memf_core::{
    generate_grid_instance, parse_instance, scale_model, solve, Diagnostics, EnergyModel, Labeling, Regularizer,
    SolveOptions, SolveReport, SolverKind, BRUTE_FORCE_CAP,
};

/// Exact minimization of multi-label submodular MRF energies.
#[derive(Parser, Debug)]
#[command(name = "memf", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run several solvers on a series of seeded instances and tabulate them.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// Generate an instance: `grid WxH`.
    #[arg(long, num_args = 2, value_names = ["KIND", "WxH"], conflicts_with = "input")]
    gen: Option<Vec<String>>,
    /// Read an instance file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    labels: usize,
    #[arg(long, value_enum, default_value_t = Reg::Quadratic)]
    reg: Reg,
    #[arg(long, default_value_t = 1)]
    huber_delta: i64,
    #[arg(long, default_value_t = 1)]
    weight: i64,
    /// Generated unaries are drawn from `0..U`.
    #[arg(long, default_value_t = 20)]
    unary_max: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiply all potentials by K and round; allows decimals in input files.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "block")]
    solver: SolverKind,
    /// Also run every other applicable solver and exit with 2 if any energy differs.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    diagnostics: bool,
    /// Write the labeling of a grid instance as a binary PGM.
    #[arg(long)]
    labeling_out: Option<PathBuf>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Comma-separated list of at least two solvers.
    #[arg(long, value_delimiter = ',', required = true)]
    solvers: Vec<SolverKind>,
    /// Number of generated instances, seeded `seed`, `seed+1`, ….
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    diagnostics: bool,
    /// Leave the time column out so that tables are reproducible.
    #[arg(long)]
    omit_time: bool,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Reg {
    Linear,
    Quadratic,
    Huber,
}

struct Instance {
    model: EnergyModel,
    grid: Option<(usize, usize)>,
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("expected WxH, got {s:?}"))?;
    let dims = (w.parse()?, h.parse()?);
    if dims.0 == 0 || dims.1 == 0 {
        bail!("grid dimensions must be positive, got {s:?}");
    }
    Ok(dims)
}

impl InstanceArgs {
    fn regularizer(&self) -> Regularizer {
        match self.reg {
            Reg::Linear => Regularizer::Linear,
            Reg::Quadratic => Regularizer::Quadratic,
            Reg::Huber => Regularizer::Huber {
                delta: self.huber_delta,
            },
        }
    }

    fn load(&self, seed: u64) -> Result<Instance> {
        match (&self.gen, &self.input) {
            (Some(gen), None) => {
                if gen[0] != "grid" {
                    bail!("unknown generator {:?}; only `grid` is supported", gen[0]);
                }
                let (w, h) = parse_dims(&gen[1])?;
                let mut model =
                    generate_grid_instance(w, h, self.labels, self.regularizer(), self.weight, self.unary_max, seed)?;
                if let Some(k) = self.scale {
                    model = scale_model(&model, k)?;
                }
                Ok(Instance {
                    model,
                    grid: Some((w, h)),
                })
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let model = parse_instance(&text, self.scale).with_context(|| format!("parsing {}", path.display()))?;
                Ok(Instance { model, grid: None })
            }
            _ => bail!("exactly one of --gen or --input is required"),
        }
    }
}

fn options(diagnostics: bool) -> SolveOptions {
    if diagnostics {
        SolveOptions::diagnostics()
    } else {
        SolveOptions::default()
    }
}

fn bruteforce_feasible(model: &EnergyModel) -> bool {
    let mut count: u128 = 1;
    for _ in 0..model.num_vertices() {
        count = count.saturating_mul(model.num_labels() as u128);
    }
    count <= BRUTE_FORCE_CAP
}

/// Binary P5 image, pixel `round(255·x/(ℓ−1))`.
fn pgm(labeling: &Labeling, width: usize, height: usize, num_labels: usize) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let top = (num_labels - 1) as f64;
    out.extend(
        labeling
            .as_slice()
            .iter()
            .map(|&x| (255.0 * x as f64 / top).round() as u8),
    );
    out
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let instance = args.instance.load(args.instance.seed)?;
    let model = &instance.model;
    let report = solve(model, args.solver, options(args.diagnostics))?;
    let mut text = report.to_kv();
    let mut code = ExitCode::SUCCESS;
    if args.verify {
        let mut energies = BTreeMap::new();
        energies.insert(args.solver, report.energy);
        for kind in SolverKind::ALL {
            if kind == args.solver || (kind == SolverKind::BruteForce && !bruteforce_feasible(model)) {
                continue;
            }
            energies.insert(kind, solve(model, kind, SolveOptions::default())?.energy);
        }
        for (kind, energy) in &energies {
            let _ = writeln!(text, "verify.{kind}={energy}");
        }
        let agree = energies.values().all(|&e| e == report.energy);
        let _ = writeln!(text, "verify={}", if agree { "pass" } else { "fail" });
        if !agree {
            code = ExitCode::from(2);
        }
    }
    if let Some(path) = &args.labeling_out {
        let Some((w, h)) = instance.grid else {
            bail!("--labeling-out needs a generated grid instance");
        };
        let labeling = report.labeling.as_ref().context("solver returned no labeling")?;
        fs::write(path, pgm(labeling, w, h, model.num_labels()))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.report_out {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{text}");
    Ok(code)
}

fn disagreement_dump(seed: u64, reports: &[SolveReport]) -> String {
    let mut s = format!("energy disagreement on seed {seed}\n");
    let first = &reports[0];
    for r in reports {
        let _ = write!(s, "  {}: energy={}", r.solver, r.energy);
        if let (Some(a), Some(b)) = (&first.labeling, &r.labeling) {
            let diff: Vec<String> = a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .enumerate()
                .filter(|(_, (x, y))| x != y)
                .map(|(i, (x, y))| format!("{i}:{x}->{y}"))
                .collect();
            let _ = write!(s, " labeling_diff_vs_{}=[{}]", first.solver, diff.join(" "));
        }
        s.push('\n');
    }
    s
}

fn compare(args: CompareArgs) -> Result<ExitCode> {
    let mut solvers: Vec<SolverKind> = Vec::new();
    for &kind in &args.solvers {
        if !solvers.contains(&kind) {
            solvers.push(kind);
        }
    }
    if solvers.len() < 2 {
        eprintln!("error: compare needs at least two distinct solvers, got {:?}", args.solvers);
        return Ok(ExitCode::from(2));
    }
    let mut table = String::new();
    let _ = write!(table, "seed\tsolver\tenergy\taugmentations\taug_ratio\tstored_values_peak");
    table.push_str(if args.omit_time { "\n" } else { "\ttime_ms\n" });
    let mut block_paths = Diagnostics::default();
    let mut failed = false;
    let count = if args.instance.input.is_some() { 1 } else { args.count };
    for k in 0..count {
        let seed = args.instance.seed + k;
        let instance = args.instance.load(seed)?;
        let reports = solvers
            .iter()
            .map(|&kind| solve(&instance.model, kind, options(args.diagnostics)))
            .collect::<memf_core::Result<Vec<_>>>()?;
        let base_aug = reports[0].augmentations;
        for r in &reports {
            let ratio = if base_aug > 0 {
                format!("{:.4}", r.augmentations as f64 / base_aug as f64)
            } else {
                "-".to_string()
            };
            let _ = write!(
                table,
                "{seed}\t{}\t{}\t{}\t{ratio}\t{}",
                r.solver, r.energy, r.augmentations, r.stored_values_peak
            );
            if args.omit_time {
                table.push('\n');
            } else {
                let _ = writeln!(table, "\t{:.3}", r.wall_time_ms);
            }
            if r.solver == SolverKind::Block.name() {
                if let Some(d) = &r.diagnostics {
                    block_paths.path_lengths.extend_from_slice(&d.path_lengths);
                }
            }
        }
        if reports.iter().any(|r| r.energy != reports[0].energy) {
            eprint!("{}", disagreement_dump(seed, &reports));
            failed = true;
        }
    }
    if args.diagnostics && solvers.contains(&SolverKind::Block) {
        let _ = writeln!(table, "# block path lengths");
        for (len, n) in block_paths.path_length_histogram() {
            let _ = writeln!(table, "# length {len}: {n}");
        }
        if let Some(m) = block_paths.median_path_length() {
            let _ = writeln!(table, "# median {m}");
        }
    }
    if let Some(path) = &args.report_out {
        fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{table}");
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Compare(args)) => compare(args),
        None => run(cli.run),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
