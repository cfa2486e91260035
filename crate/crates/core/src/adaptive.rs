//! Error-controlled step-size adaptation around an error stepper.
//!
//! Elementary controller: with `err` the element-wise error ratio of a trial
//! step and `p` the order of the advanced solution,
//!
//! * accepted (`err <= 1`): `dt_next = dt * min(grow_cap, max(shrink_floor, safety * err^(-1/p)))`
//! * rejected: `u` is restored and `dt_next = dt * max(shrink_floor, safety * err^(-1/(p-1)))`

use num_traits::Float;

use crate::algebra::{check_tolerance, State};
use crate::stepper::{check_step_args, prepare, StepError, Stepper, StepperKind, System};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub atol: f64,
    pub rtol: f64,
    pub safety: f64,
    pub shrink_floor: f64,
    pub grow_cap: f64,
    pub max_rejects_per_step: usize,
    pub dt_min: f64,
}

impl ControllerConfig {
    pub fn new(atol: f64, rtol: f64) -> Self {
        Self { atol, rtol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        check_tolerance(self.atol, self.rtol)?;
        if !(0.0 < self.safety && self.safety < 1.0) {
            return Err(StepError::InvalidArgument("safety factor must lie in (0, 1)"));
        }
        if !(0.0 < self.shrink_floor && self.shrink_floor < 1.0 && 1.0 < self.grow_cap) {
            return Err(StepError::InvalidArgument("need 0 < shrink_floor < 1 < grow_cap"));
        }
        if !(self.dt_min > 0.0) {
            return Err(StepError::InvalidArgument("dt_min must be positive"));
        }
        Ok(())
    }
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            atol: 1e-6,
            rtol: 1e-6,
            safety: 0.9,
            shrink_floor: 0.2,
            grow_cap: 5.0,
            max_rejects_per_step: 50,
            dt_min: 1e-12,
        }
    }
}

/// Outcome of one trial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TryStep {
    pub accepted: bool,
    pub dt_taken: f64,
    pub dt_next: f64,
    pub err_ratio: f64,
}

/// An error stepper wrapped with the step-size controller.
pub struct Controlled<S> {
    stepper: Stepper<S>,
    cfg: ControllerConfig,
    order: u32,
    checkpoint: Option<S>,
    err: Option<S>,
    rejected: usize,
}

impl<S: State> Controlled<S> {
    pub fn new(kind: StepperKind, cfg: ControllerConfig) -> Result<Self, StepError> {
        if !kind.has_error_estimate() {
            return Err(StepError::Unsupported { kind, operation: "adaptive stepping" });
        }
        cfg.validate()?;
        Ok(Self { stepper: Stepper::new(kind)?, cfg, order: kind.order(), checkpoint: None, err: None, rejected: 0 })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn kind(&self) -> StepperKind {
        self.stepper.kind()
    }

    /// Rejected trial steps since construction.
    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// One trial step of size `dt`. On acceptance `u` holds the new solution;
    /// on rejection `u` is bitwise what it was before the call.
    pub fn try_step<F: System<S>>(&mut self, sys: &mut F, u: &mut S, t: f64, dt: f64) -> Result<TryStep, StepError> {
        check_step_args(u, dt)?;
        prepare(&mut self.checkpoint, u)?;
        prepare(&mut self.err, u)?;
        let checkpoint = self.checkpoint.as_mut().expect("prepared");
        let err = self.err.as_mut().expect("prepared");
        checkpoint.copy_from(u)?;

        self.stepper.step_with_error_unchecked(sys, u, t, dt, err)?;
        let ratio = if u.is_finite() {
            S::err_ratio(err, checkpoint, u, self.cfg.atol, self.cfg.rtol)?
        } else {
            f64::NAN
        };

        let cfg = &self.cfg;
        let p = self.order as f64;
        if ratio <= 1.0 {
            let factor = cfg.safety * Float::powf(ratio, -1.0 / p);
            let factor = if factor.is_nan() { cfg.grow_cap } else { factor };
            let dt_next = dt * Float::min(cfg.grow_cap, Float::max(cfg.shrink_floor, factor));
            return Ok(TryStep { accepted: true, dt_taken: dt, dt_next, err_ratio: ratio });
        }

        core::mem::swap(u, checkpoint);
        self.rejected += 1;
        let factor = if ratio.is_nan() {
            cfg.shrink_floor
        } else {
            Float::max(cfg.shrink_floor, cfg.safety * Float::powf(ratio, -1.0 / (p - 1.0)))
        };
        let dt_next = dt * factor;
        if Float::abs(dt_next) < cfg.dt_min {
            return Err(StepError::StepSizeUnderflow { t, dt: dt_next });
        }
        Ok(TryStep { accepted: false, dt_taken: 0.0, dt_next, err_ratio: ratio })
    }

    /// Advances `u` from `t0` to exactly `tf`, truncating the last step, and
    /// returns the number of accepted steps. The observer sees `(u, t)` after
    /// every accepted step.
    pub fn integrate_adaptive<F: System<S>>(
        &mut self,
        sys: &mut F,
        u: &mut S,
        t0: f64,
        tf: f64,
        dt0: f64,
        mut observer: Option<&mut dyn FnMut(&S, f64)>,
    ) -> Result<usize, StepError> {
        if !(tf > t0) || !(dt0 > 0.0) {
            return Err(StepError::InvalidArgument("integrate_adaptive needs tf > t0 and dt0 > 0"));
        }
        let mut t = t0;
        let mut dt = dt0;
        let mut steps = 0;
        while t < tf {
            let mut rejects = 0;
            loop {
                let last = t + dt >= tf;
                let h = if last { tf - t } else { dt };
                let r = self.try_step(sys, u, t, h)?;
                if r.accepted {
                    t = if last { tf } else { t + h };
                    steps += 1;
                    if let Some(obs) = observer.as_mut() {
                        obs(u, t);
                    }
                    dt = if last { Float::max(dt, r.dt_next) } else { r.dt_next };
                    break;
                }
                rejects += 1;
                if rejects > self.cfg.max_rejects_per_step {
                    return Err(StepError::ControllerStall { t, rejects });
                }
                dt = r.dt_next;
            }
        }
        Ok(steps)
    }
}
