use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use satlens::scenario::{uplink_loss_share, write_sweep_csv, write_uplink_csv, ConfigError, Scenario};
use satlens::verify::{self, Check};
use satlens::SimError;

/// Wave-optics simulator for chains of apertured relay satellites.
#[derive(Parser)]
#[command(name = "satlens", version)]
struct Cli {
    /// Worker threads for sweeps and Monte Carlo draws.
    #[arg(long, global = true, env = "SATLENS_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nominal chain run: trace.csv, budget.csv and summary.txt.
    Run(ScenarioArgs),
    /// Diffraction transmission over the [sweep] grid: sweep.csv.
    Sweep(ScenarioArgs),
    /// Setup-error Monte Carlo: errors.csv.
    Errors(ScenarioArgs),
    /// Turbulent uplink Monte Carlo: uplink.csv.
    Uplink(ScenarioArgs),
    /// Built-in checks; exits nonzero if any fails.
    Verify {
        suite: Suite,
        /// Grid size for the chain regressions.
        #[arg(long, default_value_t = 1024)]
        grid_n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Analytic,
    PaperRegression,
}

#[derive(Args)]
struct ScenarioArgs {
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `per_sat_loss`.
    #[arg(long)]
    per_sat_loss: Option<f64>,
    /// Overrides `errors.f_frac`.
    #[arg(long)]
    f_frac: Option<f64>,
    /// Overrides `errors.z_frac`.
    #[arg(long)]
    z_frac: Option<f64>,
    /// Overrides `errors.xy_frac`.
    #[arg(long)]
    xy_frac: Option<f64>,
    /// Overrides `errors.reps`.
    #[arg(long)]
    reps: Option<usize>,
    /// Overrides `errors.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `turbulence.seed`.
    #[arg(long)]
    screen_seed: Option<u64>,
    /// Overrides `turbulence.draws`.
    #[arg(long)]
    draws: Option<usize>,
    /// Overrides `numerics.grid_n`.
    #[arg(long)]
    grid_n: Option<usize>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, ConfigError> {
        let mut s = Scenario::load(&self.config)?;
        if let Some(v) = self.per_sat_loss {
            s.per_sat_loss = v;
        }
        let touches_errors = self.f_frac.is_some()
            || self.z_frac.is_some()
            || self.xy_frac.is_some()
            || self.reps.is_some()
            || self.seed.is_some();
        if touches_errors {
            let e = s.errors.get_or_insert_with(Default::default);
            e.f_frac = self.f_frac.unwrap_or(e.f_frac);
            e.z_frac = self.z_frac.unwrap_or(e.z_frac);
            e.xy_frac = self.xy_frac.unwrap_or(e.xy_frac);
            e.reps = self.reps.unwrap_or(e.reps);
            e.seed = self.seed.unwrap_or(e.seed);
        }
        if self.screen_seed.is_some() || self.draws.is_some() {
            let t = s.turbulence.get_or_insert_with(Default::default);
            t.seed = self.screen_seed.unwrap_or(t.seed);
            t.draws = self.draws.unwrap_or(t.draws);
        }
        if let Some(n) = self.grid_n {
            s.numerics.grid_n = n;
        }
        s.validate()?;
        Ok(s)
    }
}

enum Failure {
    Config(ConfigError),
    Sim(SimError),
    Io(String),
    ChecksFailed(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Sim(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let s = args.load()?;
            let report = s.run()?;
            report.trace.write_csv(create(&args.out, "trace.csv")?)?;
            report.budget.write_csv(create(&args.out, "budget.csv")?)?;
            if let Some(stats) = &report.errors {
                stats.write_csv(create(&args.out, "errors.csv")?)?;
            }
            let summary = report.summary()?;
            fs::write(args.out.join("summary.txt"), &summary)?;
            print!("{summary}");
        }
        Command::Sweep(args) => {
            let s = args.load()?;
            let rows = s.sweep()?;
            write_sweep_csv(&rows, create(&args.out, "sweep.csv")?)?;
            for r in &rows {
                println!("d {:.3} m  L0 {:.1} km  T {:.4e}  {:.3} dB", r.d, r.l0 / 1e3, r.transmission, r.loss_db);
            }
        }
        Command::Errors(args) => {
            let s = args.load()?;
            let stats = s.errors()?;
            stats.write_csv(create(&args.out, "errors.csv")?)?;
            println!(
                "mean {:.4}  std {:.4}  reps {}  failed {}",
                stats.final_mean(),
                stats.final_std(),
                stats.reps,
                stats.failed
            );
        }
        Command::Uplink(args) => {
            let s = args.load()?;
            let rows = s.uplink()?;
            write_uplink_csv(&rows, create(&args.out, "uplink.csv")?)?;
            let n = rows.len() as f64;
            let mean = |f: fn(&satlens::scenario::UplinkRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
            println!("draws               {}", rows.len());
            println!("mean uplink loss    {:.3} dB", mean(|r| r.uplink_loss_db));
            println!("mean chain loss     {:.3} dB", mean(|r| r.chain_loss_db));
            println!("mean total loss     {:.3} dB", mean(|r| r.total_loss_db));
            println!("uplink share        {:.3}", uplink_loss_share(&rows));
        }
        Command::Verify { suite, grid_n } => {
            let checks: Vec<Check> = match suite {
                Suite::Analytic => verify::analytic()?,
                Suite::PaperRegression => verify::paper_regression(grid_n)?,
            };
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(Failure::ChecksFailed(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Sim(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_guard_band() { 3 } else { 1 })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::ChecksFailed(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
    }
}
