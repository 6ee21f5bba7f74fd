use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmdp_bench::bench::{bench_bellman, bench_projection, write_csv};
use rmdp_bench::verify::run_verify;
use rmdp_bench::{
    generate_synthetic, load_instance, save_instance, textbook_by_name, BenchError, Result, SyntheticParams,
};
use rmdp_core::bellman::robust_value_iteration;
use rmdp_core::{AmbiguityKind, AmbiguitySpec, BellmanConfig, MdpInstance};

#[derive(Parser)]
#[command(name = "rmdp", version, about = "Robust MDP solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic or textbook instance file.
    Generate(GenerateArgs),
    /// Run robust value iteration and print the objective.
    Solve(SolveArgs),
    /// Time every row projection of an instance.
    BenchProjection(BenchProjectionArgs),
    /// Time robust Bellman updates at random states.
    BenchBellman(BenchBellmanArgs),
    /// Cross-check the solvers against the brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Source {
    /// Instance file.
    #[arg(required_unless_present = "textbook", conflicts_with = "textbook")]
    instance: Option<PathBuf>,
    /// Built-in benchmark such as riverswim6 or chain10.
    #[arg(long)]
    textbook: Option<String>,
}

#[derive(Args)]
struct AmbiguityArgs {
    /// Ambiguity kind: l1, l2, kl or burg. Defaults to the instance file's set.
    #[arg(long)]
    kind: Option<AmbiguityKind>,
    /// Total-variation radius used to calibrate the budget.
    #[arg(long, conflicts_with = "kappa")]
    tv: Option<f64>,
    /// Budget κ, used as given.
    #[arg(long)]
    kappa: Option<f64>,
}

impl AmbiguityArgs {
    /// The set from the flags, or `stored` when no kind is given.
    fn resolve(&self, stored: Option<AmbiguitySpec>) -> Result<Option<AmbiguitySpec>> {
        let Some(kind) = self.kind else {
            if self.tv.is_some() || self.kappa.is_some() {
                return Err(BenchError::InvalidParams("--tv and --kappa need --kind".into()));
            }
            return Ok(stored);
        };
        let spec = match self.kappa {
            Some(kappa) => AmbiguitySpec::new(kind, kappa)?,
            None => AmbiguitySpec::from_tv(kind, self.tv.unwrap_or(0.05))?,
        };
        Ok(Some(spec))
    }

    fn require(&self, stored: Option<AmbiguitySpec>) -> Result<AmbiguitySpec> {
        self.resolve(stored)?
            .ok_or_else(|| BenchError::InvalidParams("no ambiguity set: pass --kind or use a file with one".into()))
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Per-iterate accuracy of the robust Bellman operator.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Worker threads for the states of one Bellman update.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SolverArgs {
    fn config(&self) -> Result<BellmanConfig> {
        Ok(BellmanConfig::new(self.epsilon)?.with_threads(self.threads))
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Built-in benchmark instead of a synthetic instance.
    #[arg(long, conflicts_with = "states")]
    textbook: Option<String>,
    #[arg(long, required_unless_present = "textbook")]
    states: Option<usize>,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 0.30)]
    support_fraction: f64,
    /// Dirichlet concentration of the transition rows.
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    #[arg(long, default_value_t = 0.99)]
    discount: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    ambiguity: AmbiguityArgs,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    ambiguity: AmbiguityArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Stopping threshold on the sup-norm change between iterates.
    #[arg(long, default_value_t = 1e-5)]
    vi_tol: f64,
}

#[derive(Args)]
struct BenchProjectionArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    ambiguity: AmbiguityArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timed repetitions per query (at least 5).
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// CSV output file; standard output if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchBellmanArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    ambiguity: AmbiguityArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Kind to check; all kinds if omitted.
    #[arg(long)]
    kind: Option<AmbiguityKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random projection queries per kind.
    #[arg(long, default_value_t = 50)]
    queries: usize,
}

struct Loaded {
    id: String,
    inst: MdpInstance,
    stored: Option<AmbiguitySpec>,
}

fn load(source: &Source) -> Result<Loaded> {
    if let Some(name) = &source.textbook {
        return Ok(Loaded { id: name.clone(), inst: textbook_by_name(name)?, stored: None });
    }
    let path = source.instance.as_deref().expect("clap requires an instance");
    let (inst, stored) = load_instance(path)?;
    let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Loaded { id, inst, stored })
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

fn emit_csv(out: Option<&Path>, records: &[rmdp_bench::bench::BenchRecord]) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(io_error(path))?;
            let mut w = BufWriter::new(file);
            write_csv(&mut w, records).map_err(io_error(path))?;
            w.flush().map_err(io_error(path))
        }
        None => write_csv(&mut io::stdout().lock(), records).map_err(io_error(Path::new("<stdout>"))),
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let inst = match (&args.textbook, args.states) {
        (Some(name), _) => textbook_by_name(name)?,
        (None, Some(states)) => {
            let params = SyntheticParams {
                num_states: states,
                num_actions: args.actions,
                support_fraction: args.support_fraction,
                dirichlet_concentration: args.concentration,
                discount: args.discount,
                tv_radius: args.ambiguity.tv.unwrap_or(0.05),
                seed: args.seed,
            };
            generate_synthetic(&params)?
        }
        (None, None) => return Err(BenchError::InvalidParams("pass --states or --textbook".into())),
    };
    let amb = args.ambiguity.resolve(None)?;
    save_instance(&inst, amb.as_ref(), &args.out)
}

fn solve(args: &SolveArgs) -> Result<()> {
    let loaded = load(&args.source)?;
    let amb = args.ambiguity.require(loaded.stored)?;
    let sol = robust_value_iteration(&loaded.inst, &amb, args.vi_tol, &args.solver.config()?)?;
    println!("objective {}", sol.objective);
    println!("iterations {}", sol.iterations);
    println!("residual {:e}", sol.residual);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => generate(&args)?,
        Command::Solve(args) => solve(&args)?,
        Command::BenchProjection(args) => {
            let loaded = load(&args.source)?;
            let amb = args.ambiguity.require(loaded.stored)?;
            let records = bench_projection(&loaded.id, &loaded.inst, &amb, args.seed, args.reps)?;
            emit_csv(args.out.as_deref(), &records)?;
        }
        Command::BenchBellman(args) => {
            let loaded = load(&args.source)?;
            let amb = args.ambiguity.require(loaded.stored)?;
            let cfg = args.solver.config()?;
            let records = bench_bellman(&loaded.id, &loaded.inst, &amb, &cfg, args.seed, args.samples, args.reps)?;
            emit_csv(args.out.as_deref(), &records)?;
        }
        Command::Verify(args) => {
            let kinds = args.kind.map_or_else(|| AmbiguityKind::ALL.to_vec(), |k| vec![k]);
            let mut ok = true;
            for kind in kinds {
                let report = run_verify(kind, args.seed, args.queries)?;
                for check in &report.checks {
                    println!("{check}");
                }
                ok &= report.passed();
            }
            if !ok {
                eprintln!("verification failed");
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
