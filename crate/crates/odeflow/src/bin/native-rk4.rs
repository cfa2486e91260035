//! Gray-Scott with a hard-coded RK4 loop, for comparing against
//! `odeflow grayscott --stepper rk4 --workers 1`.

use std::time::Instant;

use anyhow::{bail, Result};
use clap::Parser;
use odeflow::baseline::NativeRk4;
use odeflow::experiments::summarize;
use odeflow_core::models::{grayscott_init, GrayScottParams};
use odeflow_core::StateVector;

#[derive(Debug, Parser)]
#[command(name = "native-rk4", about = "Gray-Scott with a hand-written RK4 loop")]
struct Args {
    /// Cubic grid edge
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> Result<()> {
    let args = Args::parse();
    if args.n < 2 {
        bail!("grid edge must be at least 2");
    }
    let dims = [args.n; 3];
    let init = grayscott_init(dims, args.seed);
    let (mut c0, mut c1) = (init.component(0).to_vec(), init.component(1).to_vec());
    let mut rk4 = NativeRk4::new(GrayScottParams::default(), dims);
    let start = Instant::now();
    for _ in 0..args.steps {
        rk4.step(&mut c0, &mut c1, args.dt);
    }
    let seconds = start.elapsed().as_secs_f64();
    println!("{} steps in {seconds:.3} s", args.steps);
    for f in summarize(&StateVector::from_components(vec![c0, c1])?) {
        println!("{}: min {:.6e} max {:.6e} variance {:.6e}", f.field, f.min, f.max, f.variance);
    }
    Ok(())
}
