use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use signloss::autoencoder::{run_demo, DemoConfig, DemoDataset};
use signloss::bench::{bench_csv, benchmark_losses, CountingAllocator, LossKind};
use signloss::calibration::{find_sharpness, CalibrationConfig, ReferenceLoss};
use signloss::dsl::{dsl_forward, dsl_gradient, DslConfig, LossValue, Scaling, SignKind};
use signloss::format::{read_tensor, write_tensor};
use signloss::topo::{
    pairwise_correlation_distance, sublevel_persistence_0d, wasserstein_distance,
    InfiniteDeathPolicy, PersistenceDiagram,
};
use signloss::Error;

#[global_allocator]
static ALLOC: CountingAllocator = CountingAllocator;

/// Directional sign loss and topological comparison tools.
#[derive(Parser)]
#[command(name = "signloss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Directional sign loss between two tensors.
    Dsl(DslArgs),
    /// Order-0 sublevel persistence diagram of a tensor.
    Persistence {
        tensor: PathBuf,
        /// Write the diagram here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wasserstein distance between two diagram files.
    Wasserstein {
        d1: PathBuf,
        d2: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Infinite death handling: cap, drop or reject.
        #[arg(long = "inf", default_value = "cap")]
        inf: InfiniteDeathPolicy,
    },
    /// Pairwise correlation distance between two tensors.
    Corrdist {
        x: PathBuf,
        y: PathBuf,
        /// Axis holding feature vectors; scalar locations if omitted.
        #[arg(long)]
        feature_axis: Option<usize>,
    },
    /// Fit the sharpness so DSL tracks a reference loss.
    Calibrate(CalibrateArgs),
    /// Train the demo autoencoder and evaluate held-out data.
    TrainDemo(TrainDemoArgs),
    /// Time losses over growing inputs.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DslArgs {
    x: PathBuf,
    y: PathBuf,
    #[arg(long, default_value_t = signloss::dsl::DEFAULT_SHARPNESS)]
    sharpness: f64,
    /// tanh, softsign or exact.
    #[arg(long, default_value = "tanh")]
    sign: SignKind,
    /// Comma-separated per-axis weights.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Halve the total so the sharp limit counts mismatches (default).
    #[arg(long, conflicts_with = "scale")]
    exact_units: bool,
    /// Divide by the number of comparisons instead.
    #[arg(long)]
    scale: bool,
    /// Treat axis 0 as a batch: per-example losses, averaged.
    #[arg(long)]
    skip_batch: bool,
    /// Write PREFIX_dx.dst and PREFIX_dy.dst, print d/ds as well.
    #[arg(long, value_name = "OUT_PREFIX")]
    grad: Option<String>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory of equally shaped .dst examples.
    data_dir: PathBuf,
    /// Reference loss: mse or mae.
    #[arg(long = "ref")]
    reference: ReferenceLoss,
    #[arg(long, default_value_t = 5000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1.0)]
    step_size: f64,
    #[arg(long, default_value_t = 1.0)]
    initial_sharpness: f64,
    /// Step log destination.
    #[arg(long, default_value = "calibration_log.csv")]
    log: PathBuf,
}

#[derive(Args)]
struct TrainDemoArgs {
    /// wave or walk.
    dataset: DemoDataset,
    #[arg(long, default_value_t = 1.0)]
    mse: f64,
    #[arg(long, default_value_t = 0.0)]
    dsl: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "demo_out")]
    out: PathBuf,
    /// Override the preset's batch count.
    #[arg(long)]
    batches: Option<usize>,
    /// Override the number of generated examples.
    #[arg(long)]
    examples: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "dsl,mse,exact-sign,persistence-wasserstein,correlation-distance")]
    kinds: Vec<LossKind>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    ranks: Vec<usize>,
    /// Target element counts, ascending.
    #[arg(long, value_delimiter = ',', default_value = "1024,4096,16384,65536,262144,1048576")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = signloss::bench::DEFAULT_TIME_BUDGET)]
    budget: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write records here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        e if e.is_data_error() => 3,
        _ => 4,
    }
}

fn run(command: Command) -> signloss::Result<()> {
    match command {
        Command::Dsl(args) => dsl(args),
        Command::Persistence { tensor, out } => {
            let diagram = sublevel_persistence_0d(&read_tensor(tensor)?)?;
            match out {
                Some(path) => diagram.write_text(path),
                None => {
                    print!("{}", diagram.to_text());
                    Ok(())
                }
            }
        }
        Command::Wasserstein { d1, d2, p, inf } => {
            let a = PersistenceDiagram::read_text(d1)?;
            let b = PersistenceDiagram::read_text(d2)?;
            println!("{}", wasserstein_distance(&a, &b, p, inf)?);
            Ok(())
        }
        Command::Corrdist { x, y, feature_axis } => {
            let d = pairwise_correlation_distance(&read_tensor(x)?, &read_tensor(y)?, feature_axis)?;
            println!("{d}");
            Ok(())
        }
        Command::Calibrate(args) => calibrate(args),
        Command::TrainDemo(args) => train_demo(args),
        Command::Bench(args) => {
            let records = benchmark_losses(
                &args.kinds,
                &args.ranks,
                &args.sizes,
                args.reps,
                args.budget,
                args.seed,
            )?;
            let csv = bench_csv(&records);
            match args.csv {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn dsl(args: DslArgs) -> signloss::Result<()> {
    let x = read_tensor(&args.x)?;
    let y = read_tensor(&args.y)?;
    let mut cfg = DslConfig::new(args.sharpness)
        .with_kind(args.sign)
        .with_scaling(if args.scale {
            Scaling::PerComparison
        } else {
            Scaling::ExactUnits
        })
        .with_batch_axis(args.skip_batch);
    if let Some(w) = args.weights {
        cfg = cfg.with_weights(w);
    }
    match dsl_forward(&x, &y, &cfg)? {
        LossValue::Scalar(v) => println!("{v}"),
        LossValue::PerExample(t) => println!("{}", t.data().iter().sum::<f64>() / t.len() as f64),
    }
    if let Some(prefix) = args.grad {
        let g = dsl_gradient(&x, &y, &cfg)?;
        write_tensor(&g.d_x, format!("{prefix}_dx.dst"))?;
        write_tensor(&g.d_y, format!("{prefix}_dy.dst"))?;
        println!("d_sharpness {}", g.d_sharpness);
    }
    Ok(())
}

fn read_dataset(dir: &Path) -> signloss::Result<Vec<signloss::Tensor>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dst"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Format(format!("no .dst files in {}", dir.display())));
    }
    paths.iter().map(read_tensor).collect()
}

fn calibrate(args: CalibrateArgs) -> signloss::Result<()> {
    let data = read_dataset(&args.data_dir)?;
    let cfg = CalibrationConfig {
        max_steps: args.max_steps,
        threshold: args.eps,
        step_size: args.step_size,
        batch_size: args.batch_size,
        reference_loss: args.reference,
        initial_sharpness: args.initial_sharpness,
        seed: args.seed,
        ..CalibrationConfig::default()
    };
    let out = find_sharpness(&data, &cfg)?;
    fs::write(&args.log, out.log_csv())?;
    println!("{}", out.sharpness);
    Ok(())
}

fn train_demo(args: TrainDemoArgs) -> signloss::Result<()> {
    let mut cfg = DemoConfig::preset(args.dataset, args.mse, args.dsl, args.seed);
    if let Some(b) = args.batches {
        cfg.train.total_batches = b;
    }
    if let Some(n) = args.examples {
        cfg.examples = n;
    }
    let out = run_demo(&cfg, args.seed)?;
    out.write(&args.out)?;
    println!(
        "directional_agreement {:.6}\npersistence_wasserstein {:.6}\ncorrelation_distance {:.6}",
        out.mean_directional_agreement(),
        out.mean_persistence_wasserstein(),
        out.mean_correlation_distance()
    );
    Ok(())
}
