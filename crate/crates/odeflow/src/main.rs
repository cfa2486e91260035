use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use odeflow::experiments::{
    run_convergence, run_grayscott, run_scale, slope_matches, write_records, ConvergenceSetup, GrayScottSetup, Problem,
    ScaleSetup, ScaleSystem,
};
use odeflow::report::FieldSummary;
use odeflow_core::StepperKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    /// Fixed-step convergence on the exponential family
    ConvergeExp,
    /// Fixed-step convergence on the sigmoid
    ConvergeSig,
    /// Adams-Bashforth(-Moulton) convergence on the exponential family
    ConvergeAb,
    /// 3D Gray-Scott reaction-diffusion with snapshots
    Grayscott,
    /// Strong scaling: wall time per worker count
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum System {
    Exp,
    Grayscott,
}

#[derive(Debug, Parser)]
#[command(name = "odeflow", version, about = "Run the time-stepping benchmarks")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Stepper name, or a comma-separated list for the convergence runs
    #[arg(long)]
    stepper: Option<String>,
    /// Worker threads; a comma-separated list for `scale`
    #[arg(long, env = "ODEFLOW_WORKERS", value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    /// Grid size NX[,NY[,NZ]]
    #[arg(long)]
    dims: Option<String>,
    /// Step size, or a strictly decreasing comma-separated sweep
    #[arg(long, value_delimiter = ',')]
    dt: Option<Vec<f64>>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    tf: Option<f64>,
    /// Absolute tolerance; with --rtol switches Gray-Scott to adaptive steps
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fail unless every fitted slope matches the stepper's order
    #[arg(long)]
    assert_order: bool,
    /// Gray-Scott snapshot interval in steps (0: final state only)
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    /// Repetitions per worker count for `scale`
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// System timed by `scale`
    #[arg(long, value_enum, default_value = "exp")]
    system: System,
}

fn parse_dims(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> =
        s.split(',').map(|p| p.trim().parse::<usize>()).collect::<Result<_, _>>().with_context(|| format!("bad --dims {s}"))?;
    match parts[..] {
        [x] => Ok([x, 1, 1]),
        [x, y] => Ok([x, y, 1]),
        [x, y, z] => Ok([x, y, z]),
        _ => bail!("--dims takes one to three sizes"),
    }
}

fn parse_steppers(s: &str) -> Result<Vec<StepperKind>> {
    s.split(',').map(|name| name.trim().parse::<StepperKind>().map_err(|_| anyhow::anyhow!("unknown stepper {name}"))).collect()
}

fn single_worker(cli: &Cli) -> Result<usize> {
    match cli.workers[..] {
        [w] if w >= 1 => Ok(w),
        _ => bail!("this experiment takes a single positive --workers value"),
    }
}

fn single_dt(cli: &Cli, default: f64) -> Result<f64> {
    match cli.dt.as_deref() {
        None => Ok(default),
        Some([dt]) => Ok(*dt),
        Some(_) => bail!("this experiment takes a single --dt value"),
    }
}

fn print_summary(summary: &[FieldSummary]) {
    for f in summary {
        println!("{}: min {:.6e} max {:.6e} variance {:.6e}", f.field, f.min, f.max, f.variance);
    }
}

fn converge(cli: &Cli) -> Result<bool> {
    let (problem, default_dims, default_steppers) = match cli.experiment {
        Experiment::ConvergeExp => (Problem::Exponential, "128,128", "rk4,cash-karp54,dopri5,fehlberg78"),
        Experiment::ConvergeSig => (Problem::Sigmoid, "1", "rk4,cash-karp54,dopri5,fehlberg78"),
        _ => (
            Problem::Exponential,
            "128,128",
            "ab1,ab2,ab3,ab4,ab5,ab6,ab7,ab8,abm1,abm2,abm3,abm4,abm5,abm6,abm7,abm8",
        ),
    };
    let steppers = parse_steppers(cli.stepper.as_deref().unwrap_or(default_steppers))?;
    let mut setup = ConvergenceSetup::new(problem, parse_dims(cli.dims.as_deref().unwrap_or(default_dims))?, steppers);
    setup.workers = single_worker(cli)?;
    if let Some(dts) = &cli.dt {
        setup.dts = dts.clone();
    }
    setup.t0 = cli.t0.unwrap_or(setup.t0);
    setup.tf = cli.tf.unwrap_or(setup.tf);
    let result = run_convergence(&setup)?;
    let path = write_records(&cli.out, "convergence.csv", &result.records)?;
    let mut ok = result.records.iter().all(|r| r.is_finite());
    for &(kind, slope) in &result.slopes {
        let verdict = if !cli.assert_order {
            ""
        } else if slope_matches(kind, slope) {
            " ok"
        } else {
            ok = false;
            " MISMATCH"
        };
        match slope {
            Some(s) => println!("{kind}: slope {s:.3} (order {}){verdict}", kind.order()),
            None => println!("{kind}: no slope, errors at roundoff (order {}){verdict}", kind.order()),
        }
    }
    println!("wrote {}", path.display());
    Ok(ok)
}

fn grayscott(cli: &Cli) -> Result<bool> {
    let mut setup = GrayScottSetup::new(parse_dims(cli.dims.as_deref().unwrap_or("32,32,32"))?, single_worker(cli)?);
    if let Some(s) = &cli.stepper {
        setup.stepper = s.parse().map_err(|_| anyhow::anyhow!("unknown stepper {s}"))?;
    }
    setup.dt = single_dt(cli, setup.dt)?;
    setup.t0 = cli.t0.unwrap_or(setup.t0);
    setup.tf = cli.tf.unwrap_or(setup.tf);
    setup.seed = cli.seed;
    setup.snapshot_every = cli.snapshot_every;
    setup.out = Some(cli.out.clone());
    if cli.atol.is_some() || cli.rtol.is_some() {
        setup.tolerance = Some((cli.atol.unwrap_or(0.0), cli.rtol.unwrap_or(0.0)));
    }
    let run = run_grayscott(&setup)?;
    write_records(&cli.out, "steps.csv", &run.steps)?;
    write_records(&cli.out, "summary.csv", &run.summary)?;
    println!("{} steps in {:.3} s", run.steps.len(), run.seconds);
    print_summary(&run.summary);
    Ok(run.summary.iter().all(|f| f.min.is_finite() && f.max.is_finite()))
}

fn scale(cli: &Cli) -> Result<bool> {
    let (system, dims, tf, dt) = match cli.system {
        System::Exp => (ScaleSystem::Exponential, "128,128", 5.0, 0.03125),
        System::Grayscott => (ScaleSystem::GrayScott, "32,32,32", 20.0, 1.0),
    };
    let t0 = if system == ScaleSystem::Exponential { -5.0 } else { 0.0 };
    let setup = ScaleSetup {
        system,
        dims: parse_dims(cli.dims.as_deref().unwrap_or(dims))?,
        workers: cli.workers.clone(),
        runs: cli.runs,
        stepper: cli.stepper.as_deref().unwrap_or("rk4").parse().map_err(|_| anyhow::anyhow!("unknown stepper"))?,
        t0: cli.t0.unwrap_or(t0),
        tf: cli.tf.unwrap_or(tf),
        dt: single_dt(cli, dt)?,
        seed: cli.seed,
    };
    let (timings, rows) = run_scale(&setup)?;
    write_records(&cli.out, "timing.csv", &timings)?;
    println!("workers  mean_seconds  efficiency");
    for r in &rows {
        println!("{:>7}  {:>12.4}  {:>10.3}", r.workers, r.mean_seconds, r.efficiency);
    }
    Ok(timings.iter().all(|t| t.seconds.is_finite()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.experiment {
        Experiment::ConvergeExp | Experiment::ConvergeSig | Experiment::ConvergeAb => converge(&cli),
        Experiment::Grayscott => grayscott(&cli),
        Experiment::Scale => scale(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
