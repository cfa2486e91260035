//! The benchmark experiments behind the CLI, usable as a library.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use odeflow_core::models::{exponential_exact, grayscott_init, sigmoid_exact, spatial_variance, Exponential, GrayScottParams, Sigmoid};
use odeflow_core::{Controlled, ControllerConfig, GridPartition, State, StateVector, StepError, Stepper, StepperKind};

use crate::distributed::{DistributedState, Layout};
use crate::grayscott::{grayscott_partition, GrayScott};
use crate::report::{write_csv, ConvergenceRecord, FieldSummary, StepRecord, TimingRecord};
use crate::vtk::{write_structured_points, Field};

/// Errors below this are treated as roundoff and left out of slope fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// `du/dt = u` on the unit square, `u(t) = x*y*e^t`.
    Exponential,
    /// `du/dt = u(1-u)` at every grid point, `u(t) = 1/(1+e^-t)`.
    Sigmoid,
}

impl Problem {
    fn exact(self, t: f64, partition: &GridPartition) -> StateVector {
        match self {
            Problem::Exponential => exponential_exact(t, partition),
            Problem::Sigmoid => StateVector::scalar_field(vec![sigmoid_exact(t); partition.cells()]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub problem: Problem,
    pub dims: [usize; 3],
    pub workers: usize,
    pub t0: f64,
    pub tf: f64,
    /// Strictly decreasing.
    pub dts: Vec<f64>,
    pub steppers: Vec<StepperKind>,
}

impl ConvergenceSetup {
    pub fn new(problem: Problem, dims: [usize; 3], steppers: Vec<StepperKind>) -> Self {
        Self { problem, dims, workers: 1, t0: -5.0, tf: 5.0, dts: vec![0.5, 0.25, 0.125, 0.0625, 0.03125], steppers }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub records: Vec<ConvergenceRecord>,
    /// Fitted slope of `log l_inf` against `log steps`; `None` when fewer
    /// than two points lie above the roundoff floor.
    pub slopes: Vec<(StepperKind, Option<f64>)>,
    /// Final gathered state of every run, in record order.
    pub finals: Vec<StateVector>,
}

/// Running L-infinity and squared-L2 error over every visited state.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorAccumulator {
    pub l_inf: f64,
    pub sum_sq: f64,
}

impl ErrorAccumulator {
    /// Adds `u - exact`, visiting points in global order.
    pub fn add(&mut self, u: &StateVector, exact: &StateVector) {
        for c in 0..u.components() {
            for (&a, &b) in u.component(c).iter().zip(exact.component(c)) {
                let e = a - b;
                self.l_inf = odeflow_core::algebra::nan_max(self.l_inf, e.abs());
                self.sum_sq += e * e;
            }
        }
    }

    pub fn l_2(&self) -> f64 {
        self.sum_sq.sqrt()
    }
}

/// Least-squares slope of `log(error)` against `log(steps)` over the points
/// with a finite error above [`ROUNDOFF_FLOOR`].
pub fn fitted_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| e.is_finite() && *e > ROUNDOFF_FLOOR)
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Allowed deviation of a fitted slope from the nominal order.
pub fn order_tolerance(kind: StepperKind) -> f64 {
    if kind.is_multistep() {
        0.5
    } else {
        (0.1 * kind.order() as f64).max(0.4)
    }
}

/// Whether a fitted slope (negative for a converging method) matches the
/// order of `kind`.
pub fn slope_matches(kind: StepperKind, slope: Option<f64>) -> bool {
    slope.is_some_and(|s| (-s - kind.order() as f64).abs() <= order_tolerance(kind))
}

fn check_sweep(dts: &[f64]) -> Result<()> {
    if dts.is_empty() {
        bail!("empty dt sweep");
    }
    if dts.iter().any(|&dt| !(dt > 0.0) || !dt.is_finite()) {
        bail!("step sizes must be positive and finite");
    }
    if dts.windows(2).any(|w| w[1] >= w[0]) {
        bail!("dt sweep must be strictly decreasing");
    }
    Ok(())
}

/// Runs every stepper at every step size from `t0` to `tf` and measures the
/// error against the exact solution over all visited time levels.
pub fn run_convergence(setup: &ConvergenceSetup) -> Result<ConvergenceResult> {
    check_sweep(&setup.dts)?;
    if setup.steppers.iter().any(|k| k.is_symplectic()) {
        bail!("symplectic steppers need a (q, p) system, not a first-order ODE");
    }
    let partition = GridPartition::unit_box(setup.dims, setup.workers)?;
    let layout = Layout::new(partition.clone())?;
    let mut records = Vec::new();
    let mut finals = Vec::new();
    let mut slopes = Vec::new();
    for &kind in &setup.steppers {
        let mut points = Vec::new();
        for &dt in &setup.dts {
            let (record, last) = convergence_run(setup, &layout, kind, dt)?;
            points.push((record.steps, record.l_inf));
            records.push(record);
            finals.push(last);
        }
        slopes.push((kind, fitted_slope(&points)));
    }
    Ok(ConvergenceResult { records, slopes, finals })
}

fn convergence_run(
    setup: &ConvergenceSetup,
    layout: &Arc<Layout>,
    kind: StepperKind,
    dt: f64,
) -> Result<(ConvergenceRecord, StateVector)> {
    let partition = layout.partition();
    let problem = setup.problem;
    let mut u = DistributedState::from_global(layout, &problem.exact(setup.t0, partition))?;
    let mut stepper = Stepper::new(kind)?;
    let mut acc = ErrorAccumulator::default();
    let mut observe = |u: &DistributedState, t: f64| acc.add(&u.gather(), &problem.exact(t, partition));
    let start = Instant::now();
    let result = match problem {
        Problem::Exponential => {
            odeflow_core::integrate_const(&mut stepper, &mut Exponential, &mut u, setup.t0, setup.tf, dt, Some(&mut observe))
        }
        Problem::Sigmoid => {
            odeflow_core::integrate_const(&mut stepper, &mut Sigmoid, &mut u, setup.t0, setup.tf, dt, Some(&mut observe))
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let steps = ((setup.tf - setup.t0) / dt).round() as usize;
    let last = u.gather();
    let (l_inf, l_2) = match result {
        Ok(n) => {
            debug_assert_eq!(n, steps);
            acc.add(&last, &problem.exact(setup.t0 + steps as f64 * dt, partition));
            (acc.l_inf, acc.l_2())
        }
        Err(StepError::Divergence { .. }) => (f64::INFINITY, f64::INFINITY),
        Err(e) => return Err(e.into()),
    };
    let record = ConvergenceRecord { stepper: kind.to_string(), dt, steps, l_inf, l_2, seconds };
    Ok((record, last))
}

#[derive(Debug, Clone)]
pub struct GrayScottSetup {
    pub dims: [usize; 3],
    pub workers: usize,
    pub stepper: StepperKind,
    pub params: GrayScottParams,
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    pub seed: u64,
    /// Write a snapshot every this many steps (0: only the final state).
    pub snapshot_every: usize,
    pub out: Option<PathBuf>,
    /// `(atol, rtol)` switches to error-controlled stepping.
    pub tolerance: Option<(f64, f64)>,
}

impl GrayScottSetup {
    pub fn new(dims: [usize; 3], workers: usize) -> Self {
        Self {
            dims,
            workers,
            stepper: StepperKind::Rk4,
            params: GrayScottParams::default(),
            t0: 0.0,
            tf: 20.0,
            dt: 1.0,
            seed: 1,
            snapshot_every: 0,
            out: None,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrayScottRun {
    pub steps: Vec<StepRecord>,
    pub summary: Vec<FieldSummary>,
    pub final_state: StateVector,
    /// Wall time of the stepping loop alone.
    pub seconds: f64,
    pub snapshots: Vec<PathBuf>,
}

pub fn summarize(u: &StateVector) -> Vec<FieldSummary> {
    (0..u.components())
        .map(|c| {
            let v = u.component(c);
            FieldSummary {
                field: format!("C{c}"),
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                variance: spatial_variance(v),
            }
        })
        .collect()
}

pub fn write_snapshot(path: &Path, partition: &GridPartition, u: &StateVector, t: f64) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let fields: Vec<Field<'_>> = ["C0", "C1"]
        .iter()
        .enumerate()
        .take(u.components())
        .map(|(c, name)| Field { name, values: u.component(c) })
        .collect();
    let spacing = [0, 1, 2].map(|a| partition.spacing(a));
    write_structured_points(BufWriter::new(file), &format!("gray-scott t={t}"), partition.dims(), partition.lo(), spacing, &fields)?;
    Ok(())
}

pub fn run_grayscott(setup: &GrayScottSetup) -> Result<GrayScottRun> {
    if !(setup.tf > setup.t0) || !(setup.dt > 0.0) {
        bail!("Gray-Scott run needs tf > t0 and dt > 0");
    }
    if setup.stepper.is_symplectic() {
        bail!("symplectic steppers do not apply to Gray-Scott");
    }
    let partition = grayscott_partition(setup.dims, setup.workers)?;
    let layout = Layout::new(partition.clone())?;
    let mut u = DistributedState::from_global(&layout, &grayscott_init(setup.dims, setup.seed))?;
    let mut sys = GrayScott::new(setup.params);
    let mut steps = Vec::new();
    let mut snapshots = Vec::new();
    if let Some(dir) = &setup.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let snap = |step: usize, t: f64, u: &DistributedState, snapshots: &mut Vec<PathBuf>| -> Result<()> {
        if let Some(dir) = &setup.out {
            let path = dir.join(format!("snapshot_t{step}.vtk"));
            write_snapshot(&path, &partition, &u.gather(), t)?;
            snapshots.push(path);
        }
        Ok(())
    };
    if setup.snapshot_every > 0 {
        snap(0, setup.t0, &u, &mut snapshots)?;
    }

    let mut total = 0.0;
    let mut last_step = 0;
    match setup.tolerance {
        Some((atol, rtol)) => {
            let mut ctl = Controlled::new(setup.stepper, ControllerConfig::new(atol, rtol))?;
            let mut t = setup.t0;
            let mut dt = setup.dt;
            while t < setup.tf {
                let start = Instant::now();
                let mut rejects = 0;
                loop {
                    let last = t + dt >= setup.tf;
                    let h = if last { setup.tf - t } else { dt };
                    let r = ctl.try_step(&mut sys, &mut u, t, h)?;
                    if r.accepted {
                        t = if last { setup.tf } else { t + h };
                        dt = if last { dt.max(r.dt_next) } else { r.dt_next };
                        break;
                    }
                    rejects += 1;
                    if rejects > ctl.config().max_rejects_per_step {
                        return Err(StepError::ControllerStall { t, rejects }.into());
                    }
                    dt = r.dt_next;
                }
                let seconds = start.elapsed().as_secs_f64();
                total += seconds;
                last_step += 1;
                steps.push(StepRecord { step: last_step, t, seconds });
                if setup.snapshot_every > 0 && last_step % setup.snapshot_every == 0 && t < setup.tf {
                    snap(last_step, t, &u, &mut snapshots)?;
                }
            }
        }
        None => {
            let n = ((setup.tf - setup.t0) / setup.dt).round() as usize;
            let mut stepper = Stepper::new(setup.stepper)?;
            let startup = setup.stepper.steps().saturating_sub(1);
            for i in 0..n {
                let t = setup.t0 + i as f64 * setup.dt;
                let start = Instant::now();
                if i < startup {
                    stepper.startup_step(&mut sys, &mut u, t, setup.dt)?;
                } else {
                    stepper.do_step(&mut sys, &mut u, t, setup.dt)?;
                }
                let seconds = start.elapsed().as_secs_f64();
                total += seconds;
                last_step = i + 1;
                let t_end = setup.t0 + last_step as f64 * setup.dt;
                steps.push(StepRecord { step: last_step, t: t_end, seconds });
                if setup.snapshot_every > 0 && last_step % setup.snapshot_every == 0 && last_step != n {
                    snap(last_step, t_end, &u, &mut snapshots)?;
                }
            }
        }
    }
    let final_state = u.gather();
    snap(last_step, setup.tf, &u, &mut snapshots)?;
    Ok(GrayScottRun { steps, summary: summarize(&final_state), final_state, seconds: total, snapshots })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleSystem {
    Exponential,
    GrayScott,
}

#[derive(Debug, Clone)]
pub struct ScaleSetup {
    pub system: ScaleSystem,
    pub dims: [usize; 3],
    pub workers: Vec<usize>,
    pub runs: usize,
    pub stepper: StepperKind,
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRow {
    pub workers: usize,
    pub mean_seconds: f64,
    /// `T1 / (W * TW)`.
    pub efficiency: f64,
}

/// Times the same fixed-step integration `runs` times for each worker count.
/// The clock covers the integration only, not setup or output.
pub fn run_scale(setup: &ScaleSetup) -> Result<(Vec<TimingRecord>, Vec<ScaleRow>)> {
    if setup.workers.is_empty() || setup.workers.contains(&0) {
        bail!("worker counts must be positive");
    }
    if setup.runs == 0 {
        bail!("at least one run per worker count");
    }
    let mut timings = Vec::new();
    let mut means = Vec::new();
    for &w in &setup.workers {
        let (partition, init) = match setup.system {
            ScaleSystem::Exponential => {
                let p = GridPartition::unit_box(setup.dims, w)?;
                let init = exponential_exact(setup.t0, &p);
                (p, init)
            }
            ScaleSystem::GrayScott => (grayscott_partition(setup.dims, w)?, grayscott_init(setup.dims, setup.seed)),
        };
        let layout = Layout::new(partition)?;
        let mut sum = 0.0;
        for run in 0..setup.runs {
            let mut u = DistributedState::from_global(&layout, &init)?;
            let mut stepper = Stepper::new(setup.stepper)?;
            let start = Instant::now();
            match setup.system {
                ScaleSystem::Exponential => {
                    odeflow_core::integrate_const(&mut stepper, &mut Exponential, &mut u, setup.t0, setup.tf, setup.dt, None)?
                }
                ScaleSystem::GrayScott => odeflow_core::integrate_const(
                    &mut stepper,
                    &mut GrayScott::default(),
                    &mut u,
                    setup.t0,
                    setup.tf,
                    setup.dt,
                    None,
                )?,
            };
            let seconds = start.elapsed().as_secs_f64();
            sum += seconds;
            timings.push(TimingRecord { workers: w, run, seconds });
        }
        means.push((w, sum / setup.runs as f64));
    }
    let t1 = means.iter().find(|(w, _)| *w == 1).map(|m| m.1);
    let rows = means
        .into_iter()
        .map(|(w, mean)| ScaleRow { workers: w, mean_seconds: mean, efficiency: t1.map_or(f64::NAN, |t1| t1 / (w as f64 * mean)) })
        .collect();
    Ok((timings, rows))
}

/// Writes records as CSV to `dir/name`, creating `dir` if needed.
pub fn write_records<R: serde::Serialize>(dir: &Path, name: &str, records: &[R]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(BufWriter::new(file), records)?;
    Ok(path)
}
