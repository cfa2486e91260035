//! Acceptance checks. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line per criterion and exits non-zero if any fails.

#[path = "../../core/tests/support/scalar_oracle.rs"]
mod scalar_oracle;

use std::sync::Arc;
use std::time::{Duration, Instant};

use odeflow::baseline::NativeRk4;
use odeflow::experiments::{run_convergence, ConvergenceResult, ConvergenceSetup, Problem};
use odeflow::{grayscott_partition, DistributedState, GrayScott, Layout};
use odeflow_core::conformance::{self, Dense};
use odeflow_core::models::{grayscott_init, sigmoid_exact, spatial_variance, Exponential, GrayScottParams, Sigmoid};
use odeflow_core::multistep::{ADAMS_BASHFORTH, ADAMS_MOULTON};
use odeflow_core::tableau::FEHLBERG_78;
use odeflow_core::{
    integrate_const, Controlled, ControllerConfig, GridPartition, Operand, RhsError, State, StateVector, Stepper,
    StepperKind, System, MAX_ARITY,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SWEEP: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn bits(s: &StateVector) -> Vec<u64> {
    (0..s.components()).flat_map(|c| s.component(c).iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect()
}

fn convergence(problem: Problem, steppers: Vec<StepperKind>) -> ConvergenceResult {
    let dims = match problem {
        Problem::Exponential => [16, 16, 1],
        Problem::Sigmoid => [1, 1, 1],
    };
    let mut setup = ConvergenceSetup::new(problem, dims, steppers);
    setup.dts = SWEEP.to_vec();
    run_convergence(&setup).expect("convergence run")
}

fn slope_report(
    label: &str,
    result: &ConvergenceResult,
    tolerance: impl Fn(StepperKind) -> f64,
    lines: &mut Vec<String>,
) -> bool {
    let mut ok = true;
    for &(kind, slope) in &result.slopes {
        let p = kind.order() as f64;
        let tol = tolerance(kind);
        let pass = slope.is_some_and(|s| (-s - p).abs() <= tol);
        ok &= pass;
        let shown = slope.map_or("none".to_string(), |s| format!("{:.3}", -s));
        lines.push(format!("{label} {kind}: slope {shown}, want {p} ± {tol} {}", if pass { "ok" } else { "MISS" }));
    }
    ok
}

fn criterion_1_and_3() -> (Outcome, Outcome) {
    let start = Instant::now();
    let kinds = vec![StepperKind::Rk4, StepperKind::CashKarp54, StepperKind::Dopri5, StepperKind::Fehlberg78];
    let tol = |k: StepperKind| match k {
        StepperKind::Rk4 => 0.4,
        StepperKind::Fehlberg78 => 0.8,
        _ => 0.5,
    };
    let sig = convergence(Problem::Sigmoid, kinds.clone());
    let exp = convergence(Problem::Exponential, kinds);
    let elapsed = start.elapsed();
    let mut lines = Vec::new();
    let ok = slope_report("sigmoid", &sig, tol, &mut lines) & slope_report("exp16x16", &exp, tol, &mut lines);
    let fast = elapsed < Duration::from_secs(10);
    lines.push(format!("runtime {:.2} s (limit 10 s)", elapsed.as_secs_f64()));
    let c1 = Outcome::new(ok && fast, lines.join("; "));

    let finest = sig.records.iter().find(|r| r.stepper == "fehlberg78" && r.dt == 0.03125).expect("record");
    let c3 = Outcome::new(finest.l_inf <= 1e-12, format!("fehlberg78 sigmoid dt=0.03125 L∞ = {:.3e} (limit 1e-12)", finest.l_inf));
    (c1, c3)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut kinds: Vec<StepperKind> = (1..=8u8).map(StepperKind::AdamsBashforth).collect();
    kinds.extend((1..=8u8).map(StepperKind::AdamsBashforthMoulton));
    let sig = convergence(Problem::Sigmoid, kinds.clone());
    let exp = convergence(Problem::Exponential, kinds);
    let elapsed = start.elapsed();
    let mut lines = Vec::new();
    let ok = slope_report("sigmoid", &sig, |_| 0.5, &mut lines) & slope_report("exp16x16", &exp, |_| 0.5, &mut lines);
    let fast = elapsed < Duration::from_secs(30);
    lines.push(format!("runtime {:.2} s (limit 30 s)", elapsed.as_secs_f64()));
    Outcome::new(ok && fast, lines.join("; "))
}

fn run_fixed<F: System<DistributedState>>(kind: StepperKind, sys: &mut F, u: &mut DistributedState, t0: f64, tf: f64, dt: f64) {
    let mut stepper = Stepper::new(kind).unwrap();
    integrate_const(&mut stepper, sys, u, t0, tf, dt, None).unwrap();
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let workers = [1, 2, 4, 8];
    let mut lines = Vec::new();
    let mut ok = true;
    let exp_init = |p: &GridPartition| odeflow_core::models::exponential_exact(-5.0, p);
    let sig_init = |p: &GridPartition| StateVector::scalar_field(vec![sigmoid_exact(-5.0); p.cells()]);

    type Runner = Box<dyn Fn(&Arc<Layout>) -> StateVector>;
    let mut cases: Vec<(String, Runner)> = Vec::new();
    for (name, problem) in [("exp", Problem::Exponential), ("sigmoid", Problem::Sigmoid)] {
        let init = move |p: &GridPartition| match problem {
            Problem::Exponential => exp_init(p),
            Problem::Sigmoid => sig_init(p),
        };
        for kind in [StepperKind::Rk4, StepperKind::AdamsBashforth(4)] {
            cases.push((
                format!("{name} {kind}"),
                Box::new(move |l: &Arc<Layout>| {
                    let mut u = DistributedState::from_global(l, &init(l.partition())).unwrap();
                    match problem {
                        Problem::Exponential => run_fixed(kind, &mut Exponential, &mut u, -5.0, 5.0, 0.0625),
                        Problem::Sigmoid => run_fixed(kind, &mut Sigmoid, &mut u, -5.0, 5.0, 0.0625),
                    }
                    u.gather()
                }),
            ));
        }
        cases.push((
            format!("{name} dopri5-adaptive"),
            Box::new(move |l: &Arc<Layout>| {
                let mut u = DistributedState::from_global(l, &init(l.partition())).unwrap();
                let mut c = Controlled::new(StepperKind::Dopri5, ControllerConfig::new(1e-10, 1e-10)).unwrap();
                match problem {
                    Problem::Exponential => c.integrate_adaptive(&mut Exponential, &mut u, -5.0, 5.0, 0.5, None),
                    Problem::Sigmoid => c.integrate_adaptive(&mut Sigmoid, &mut u, -5.0, 5.0, 0.5, None),
                }
                .unwrap();
                u.gather()
            }),
        ));
    }
    for (name, run) in &cases {
        let finals: Vec<StateVector> = workers
            .iter()
            .map(|&w| run(&Layout::new(GridPartition::unit_box([16, 16, 1], w).unwrap()).unwrap()))
            .collect();
        let same = finals.iter().all(|f| bits(f) == bits(&finals[0]));
        ok &= same;
        lines.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }

    let dims = [16, 16, 16];
    let gs: Vec<StateVector> = workers
        .iter()
        .map(|&w| {
            let l = Layout::new(grayscott_partition(dims, w).unwrap()).unwrap();
            let mut u = DistributedState::from_global(&l, &grayscott_init(dims, 1)).unwrap();
            run_fixed(StepperKind::Rk4, &mut GrayScott::default(), &mut u, 0.0, 20.0, 1.0);
            u.gather()
        })
        .collect();
    let same = gs.iter().all(|f| bits(f) == bits(&gs[0]));
    ok &= same;
    lines.push(format!("gray-scott 16³ rk4 tf=20: {}", if same { "identical" } else { "DIFFERENT" }));

    let elapsed = start.elapsed();
    lines.push(format!("W ∈ {{1,2,4,8}}, runtime {:.2} s (limit 60 s)", elapsed.as_secs_f64()));
    Outcome::new(ok && elapsed < Duration::from_secs(60), lines.join("; "))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    // steady state
    let dims = [32, 32, 32];
    let n: usize = dims.iter().product();
    let l = Layout::new(grayscott_partition(dims, 1).unwrap()).unwrap();
    let rest = StateVector::from_components(vec![vec![1.0; n], vec![0.0; n]]).unwrap();
    let mut d = DistributedState::zeros(&l, 2).unwrap();
    GrayScott::default().rhs(0.0, &DistributedState::from_global(&l, &rest).unwrap(), &mut d).unwrap();
    let steady = d.gather().component(0).iter().chain(d.gather().component(1)).all(|&v| v == 0.0);

    // pattern run
    let init = grayscott_init(dims, 1);
    let initial_variance = spatial_variance(init.component(1));
    let mut u = DistributedState::from_global(&l, &init).unwrap();
    let mut sys = GrayScott::new(GrayScottParams::default());
    let mut stepper = Stepper::new(StepperKind::Rk4).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let steps = 20_000;
    let mut finite = true;
    for i in 0..steps {
        if let Err(e) = stepper.do_step(&mut sys, &mut u, i as f64, 1.0) {
            finite = false;
            eprintln!("gray-scott step {i}: {e}");
            break;
        }
        let g = u.gather();
        for v in g.component(0).iter().chain(g.component(1)) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let last = u.gather();
    let variance = spatial_variance(last.component(1));
    let threshold = 1e-4;
    let bounded = finite && lo >= -0.05 && hi <= 1.3;
    let elapsed = start.elapsed();
    let pass = steady && bounded && variance > threshold && elapsed < Duration::from_secs(600);
    Outcome::new(
        pass,
        format!(
            "rest-state rhs exactly zero: {steady}; 32³ dt=1 {steps} steps: range [{lo:.4}, {hi:.4}] (limit [-0.05, 1.3]); \
             C1 variance {variance:.3e} (threshold {threshold:.0e}, initial {initial_variance:.3e}); runtime {:.1} s (limit 600 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn growth<S: State>(_t: f64, u: &S, d: &mut S) {
    d.copy_from(u).unwrap();
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let draws: Vec<(f64, f64)> = (0..100).map(|_| (rng.random_range(0.1..=2.0), rng.random_range(1e-3..=0.5))).collect();
    let mut kinds: Vec<StepperKind> = StepperKind::RUNGE_KUTTA.to_vec();
    kinds.extend((1..=8u8).map(StepperKind::AdamsBashforth));
    kinds.extend((1..=8u8).map(StepperKind::AdamsBashforthMoulton));
    kinds.extend([StepperKind::SymplecticEuler, StepperKind::VelocityVerlet]);
    let layout = Layout::new(GridPartition::unit_box([8, 1, 1], 4).unwrap()).unwrap();
    let mut failures = Vec::new();
    for &kind in &kinds {
        let mut mismatches = 0;
        for &(u0, dt) in &draws {
            let (expected, got): (u64, Vec<u64>) = match kind {
                k if k.tableau().is_some() => {
                    let exp = scalar_oracle::rk_step(k.tableau().unwrap(), u0, dt).to_bits();
                    let mut d = StateVector::scalar_field(vec![u0]);
                    Stepper::new(k).unwrap().do_step(&mut growth, &mut d, 0.0, dt).unwrap();
                    let mut g = DistributedState::from_global(&layout, &StateVector::scalar_field(vec![u0; 8])).unwrap();
                    Stepper::new(k).unwrap().do_step(&mut growth, &mut g, 0.0, dt).unwrap();
                    let mut got = vec![d.component(0)[0].to_bits()];
                    got.extend(g.gather().component(0).iter().map(|v| v.to_bits()));
                    (exp, got)
                }
                StepperKind::AdamsBashforth(k) | StepperKind::AdamsBashforthMoulton(k) => {
                    let k = k as usize;
                    let corrector = matches!(kind, StepperKind::AdamsBashforthMoulton(_));
                    let exp =
                        scalar_oracle::adams_run(k, corrector, u0, dt, ADAMS_BASHFORTH[k - 1], ADAMS_MOULTON[k - 1], &FEHLBERG_78)
                            .to_bits();
                    let mut d = StateVector::scalar_field(vec![u0]);
                    integrate_const(&mut Stepper::new(kind).unwrap(), &mut growth, &mut d, 0.0, k as f64 * dt, dt, None).unwrap();
                    let mut g = DistributedState::from_global(&layout, &StateVector::scalar_field(vec![u0; 8])).unwrap();
                    integrate_const(&mut Stepper::new(kind).unwrap(), &mut growth, &mut g, 0.0, k as f64 * dt, dt, None).unwrap();
                    let mut got = vec![d.component(0)[0].to_bits()];
                    got.extend(g.gather().component(0).iter().map(|v| v.to_bits()));
                    (exp, got)
                }
                _ => {
                    // q'' = q with p0 = u0 / 2; compare q and p
                    let reference = if kind == StepperKind::SymplecticEuler {
                        scalar_oracle::symplectic_euler(u0, 0.5 * u0, dt)
                    } else {
                        scalar_oracle::velocity_verlet(u0, 0.5 * u0, dt)
                    };
                    let mut force = |_t: f64, q: &StateVector, a: &mut StateVector| {
                        a.linear_combination(&[(1.0, Operand::State(q))]).unwrap();
                    };
                    let (mut q, mut p) = (StateVector::scalar_field(vec![u0]), StateVector::scalar_field(vec![0.5 * u0]));
                    Stepper::new(kind).unwrap().do_step_symplectic(&mut force, &mut q, &mut p, 0.0, dt).unwrap();
                    let ok = q.component(0)[0].to_bits() == reference.0.to_bits()
                        && p.component(0)[0].to_bits() == reference.1.to_bits();
                    (u64::from(ok), vec![1])
                }
            };
            if got.iter().any(|&g| g != expected) {
                mismatches += 1;
            }
        }
        if mismatches > 0 {
            failures.push(format!("{kind}: {mismatches}/100 differ"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} steppers x 100 draws bitwise equal on dense and 4-worker grid states", kinds.len())
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

fn criterion_7() -> Outcome {
    let dims = [12, 5, 3];
    let n: usize = dims.iter().product();
    let mut rng = StdRng::seed_from_u64(77);
    let inputs: Vec<Dense> = (0..MAX_ARITY)
        .map(|_| (0..3).map(|_| (0..n).map(|_| rng.random_range(-1e3..1e3)).collect()).collect())
        .collect();
    let coeffs: Vec<f64> = (0..MAX_ARITY).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for w in [1, 2, 4] {
        let l = Layout::new(GridPartition::decompose(dims, [0.0; 3], [1.0; 3], w, 1, [true; 3]).unwrap()).unwrap();
        let r = conformance::check(
            |d: &Dense| DistributedState::from_global(&l, &StateVector::from_components(d.clone()).unwrap()).unwrap(),
            |s: &DistributedState| s.gather().into_components(),
            &inputs,
            &coeffs,
        );
        ok &= r.is_ok();
        lines.push(format!("W={w}: {}", r.map_or_else(|e| e, |_| "conforms".into())));
    }
    Outcome::new(ok, lines.join("; "))
}

/// du/dt = 0 before `t_jump` and `height * u` from then on: the embedded
/// estimate blows up on any step that straddles the jump.
struct Spike {
    t_jump: f64,
    height: f64,
}

impl<S: State> System<S> for Spike {
    fn rhs(&mut self, t: f64, u: &S, d: &mut S) -> Result<(), RhsError> {
        let c = if t >= self.t_jump { self.height } else { 0.0 };
        d.linear_combination(&[(c, Operand::State(u))])?;
        Ok(())
    }
}

fn criterion_8() -> Outcome {
    let cfg = ControllerConfig::new(1e-8, 1e-8);
    let safety = cfg.safety;
    let mut lines = Vec::new();
    let mut ok = true;

    let l = Layout::new(GridPartition::unit_box([8, 8, 1], 2).unwrap()).unwrap();
    let u0 = StateVector::scalar_field((0..64).map(|i| 1.0 + i as f64 / 64.0).collect());
    let mut u = DistributedState::from_global(&l, &u0).unwrap();
    let before: Vec<u64> = bits(&u.gather());
    let mut ctl = Controlled::new(StepperKind::Dopri5, cfg).unwrap();
    let dt = 1.0;
    let r = ctl.try_step(&mut Spike { t_jump: 0.45, height: 1e3 }, &mut u, 0.0, dt).unwrap();
    let unchanged = bits(&u.gather()) == before;
    let shrunk = r.dt_next <= safety * dt;
    ok &= !r.accepted && unchanged && shrunk;
    lines.push(format!(
        "single step: accepted={} err_ratio={:.3e} u unchanged={unchanged} dt_next={:.4} (<= {safety}·dt: {shrunk})",
        r.accepted, r.err_ratio, r.dt_next
    ));

    let mut v = DistributedState::from_global(&l, &u0).unwrap();
    let mut ctl = Controlled::new(StepperKind::Dopri5, cfg).unwrap();
    let accepted = ctl.integrate_adaptive(&mut Spike { t_jump: 0.45, height: 1e3 }, &mut v, 0.0, 1.0, 1.0, None).unwrap();
    let rejected = ctl.rejected_steps();
    ok &= rejected >= 1;
    lines.push(format!("integrate_adaptive over the jump: {accepted} accepted, {rejected} rejected"));
    Outcome::new(ok, lines.join("; "))
}

fn criterion_9() -> Outcome {
    let dims = [32, 32, 32];
    let steps = 100;
    let init = grayscott_init(dims, 1);
    let best = |mut f: Box<dyn FnMut() -> Duration>| (0..3).map(|_| f()).min().unwrap();

    let l = Layout::new(grayscott_partition(dims, 1).unwrap()).unwrap();
    let generic = best(Box::new(|| {
        let mut u = DistributedState::from_global(&l, &init).unwrap();
        let mut sys = GrayScott::default();
        let mut stepper = Stepper::new(StepperKind::Rk4).unwrap();
        let start = Instant::now();
        for i in 0..steps {
            stepper.do_step(&mut sys, &mut u, i as f64, 1.0).unwrap();
        }
        start.elapsed()
    }));
    let native = best(Box::new(|| {
        let (mut c0, mut c1) = (init.component(0).to_vec(), init.component(1).to_vec());
        let mut rk4 = NativeRk4::new(GrayScottParams::default(), dims);
        let start = Instant::now();
        for _ in 0..steps {
            rk4.step(&mut c0, &mut c1, 1.0);
        }
        start.elapsed()
    }));
    let ratio = generic.as_secs_f64() / native.as_secs_f64();
    Outcome::new(
        ratio <= 2.0,
        format!(
            "gray-scott 32³ {steps} steps, best of 3: generic {:.3} s, native {:.3} s, ratio {ratio:.2} (limit 2)",
            generic.as_secs_f64(),
            native.as_secs_f64()
        ),
    )
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| only.is_empty() || only.contains(&n);
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    if want(1) || want(3) {
        let (c1, c3) = criterion_1_and_3();
        results.push((1, "convergence orders (RK)", c1));
        results.push((3, "roundoff floor", c3));
    }
    let rest: [(usize, &str, fn() -> Outcome); 7] = [
        (2, "multistep orders", criterion_2),
        (4, "partition invariance", criterion_4),
        (5, "gray-scott steady state and pattern", criterion_5),
        (6, "oracle equivalence", criterion_6),
        (7, "algebra conformance", criterion_7),
        (8, "adaptive rejection", criterion_8),
        (9, "baseline parity", criterion_9),
    ];
    for (n, name, f) in rest {
        if want(n) {
            results.push((n, name, f()));
        }
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("{} criterion {n} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
