//! Steppers and the fixed-step driver.
//!
//! Arithmetic contract (relied on by the bitwise oracle tests): stage `i` of a
//! Runge-Kutta step is `Y_i = 1*u + sum_j (dt*a_ij)*k_j`, evaluated at time
//! `t + c_i*dt`; the update is `u <- 1*u + sum_j (dt*b_j)*k_j` over all
//! stages, zero weights included; the error estimate is
//! `sum_j (dt*(b_j - b_err_j))*k_j`.

use alloc::borrow::Cow;
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use arrayvec::ArrayVec;
use num_traits::Float;
use thiserror::Error;

use crate::algebra::{AlgebraError, Operand, State, MAX_ARITY};
use crate::multistep::History;
use crate::tableau::{self, ButcherTableau, TableauError};

/// Right-hand side `F(t, u)` of `du/dt = F(t, u)`.
///
/// `dudt` arrives already shaped like `u`. An implementation must leave `u`
/// unchanged and performs any ghost synchronisation it needs itself.
pub trait System<S> {
    fn rhs(&mut self, t: f64, u: &S, dudt: &mut S) -> Result<(), RhsError>;
}

impl<S, F> System<S> for F
where
    F: FnMut(f64, &S, &mut S),
{
    fn rhs(&mut self, t: f64, u: &S, dudt: &mut S) -> Result<(), RhsError> {
        self(t, u, dudt);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("right-hand side failed: {0}")]
pub struct RhsError(pub Cow<'static, str>);

impl From<AlgebraError> for RhsError {
    fn from(e: AlgebraError) -> Self {
        use alloc::string::ToString;
        RhsError(Cow::Owned(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error("multistep order {0} outside 1..=8")]
    MultistepOrder(u8),
    #[error("multistep history not primed: {have} of {need} right-hand side values available")]
    Unprimed { have: usize, need: usize },
    #[error("non-finite values produced in the step ending at t = {t}")]
    Divergence { t: f64 },
    #[error("{kind} does not support {operation}")]
    Unsupported { kind: StepperKind, operation: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("step size {dt} fell below the minimum at t = {t}")]
    StepSizeUnderflow { t: f64, dt: f64 },
    #[error("controller rejected {rejects} consecutive steps at t = {t}")]
    ControllerStall { t: f64, rejects: usize },
}

/// The explicit steppers on offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepperKind {
    ExplicitEuler,
    ModifiedMidpoint,
    Rk4,
    CashKarp54,
    Dopri5,
    Fehlberg78,
    /// Adams-Bashforth with `k` steps, `k` in 1..=8.
    AdamsBashforth(u8),
    /// Adams-Bashforth predictor with an Adams-Moulton corrector (PECE).
    AdamsBashforthMoulton(u8),
    SymplecticEuler,
    VelocityVerlet,
}

impl StepperKind {
    pub const RUNGE_KUTTA: [StepperKind; 6] = [
        StepperKind::ExplicitEuler,
        StepperKind::ModifiedMidpoint,
        StepperKind::Rk4,
        StepperKind::CashKarp54,
        StepperKind::Dopri5,
        StepperKind::Fehlberg78,
    ];

    pub fn tableau(self) -> Option<&'static ButcherTableau> {
        match self {
            StepperKind::ExplicitEuler => Some(&tableau::EXPLICIT_EULER),
            StepperKind::ModifiedMidpoint => Some(&tableau::MODIFIED_MIDPOINT),
            StepperKind::Rk4 => Some(&tableau::RK4),
            StepperKind::CashKarp54 => Some(&tableau::CASH_KARP_54),
            StepperKind::Dopri5 => Some(&tableau::DOPRI5),
            StepperKind::Fehlberg78 => Some(&tableau::FEHLBERG_78),
            _ => None,
        }
    }

    /// Order of accuracy of the solution the stepper advances.
    pub fn order(self) -> u32 {
        match self {
            StepperKind::AdamsBashforth(k) | StepperKind::AdamsBashforthMoulton(k) => k as u32,
            StepperKind::SymplecticEuler => 1,
            StepperKind::VelocityVerlet => 2,
            other => other.tableau().map_or(0, |t| t.order),
        }
    }

    pub fn is_multistep(self) -> bool {
        matches!(self, StepperKind::AdamsBashforth(_) | StepperKind::AdamsBashforthMoulton(_))
    }

    pub fn is_symplectic(self) -> bool {
        matches!(self, StepperKind::SymplecticEuler | StepperKind::VelocityVerlet)
    }

    pub fn has_error_estimate(self) -> bool {
        self.tableau().is_some_and(|t| t.b_err.is_some())
    }

    /// Number of multistep history values, 0 for one-step methods.
    pub fn steps(self) -> usize {
        match self {
            StepperKind::AdamsBashforth(k) | StepperKind::AdamsBashforthMoulton(k) => k as usize,
            _ => 0,
        }
    }
}

impl fmt::Display for StepperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepperKind::ExplicitEuler => f.write_str("euler"),
            StepperKind::ModifiedMidpoint => f.write_str("midpoint"),
            StepperKind::Rk4 => f.write_str("rk4"),
            StepperKind::CashKarp54 => f.write_str("cash-karp54"),
            StepperKind::Dopri5 => f.write_str("dopri5"),
            StepperKind::Fehlberg78 => f.write_str("fehlberg78"),
            StepperKind::AdamsBashforth(k) => write!(f, "ab{k}"),
            StepperKind::AdamsBashforthMoulton(k) => write!(f, "abm{k}"),
            StepperKind::SymplecticEuler => f.write_str("symplectic-euler"),
            StepperKind::VelocityVerlet => f.write_str("velocity-verlet"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown stepper name")]
pub struct ParseStepperError;

impl FromStr for StepperKind {
    type Err = ParseStepperError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "euler" | "explicit-euler" => StepperKind::ExplicitEuler,
            "midpoint" | "modified-midpoint" => StepperKind::ModifiedMidpoint,
            "rk4" => StepperKind::Rk4,
            "cash-karp54" | "cashkarp54" | "rkck54" => StepperKind::CashKarp54,
            "dopri5" | "rkdp5" => StepperKind::Dopri5,
            "fehlberg78" | "rkf78" => StepperKind::Fehlberg78,
            "symplectic-euler" => StepperKind::SymplecticEuler,
            "velocity-verlet" | "verlet" => StepperKind::VelocityVerlet,
            other => {
                let (ctor, digits): (fn(u8) -> StepperKind, &str) = if let Some(d) = other.strip_prefix("abm") {
                    (StepperKind::AdamsBashforthMoulton, d)
                } else if let Some(d) = other.strip_prefix("ab") {
                    (StepperKind::AdamsBashforth, d)
                } else {
                    return Err(ParseStepperError);
                };
                let k: u8 = digits.parse().map_err(|_| ParseStepperError)?;
                if !(1..=8).contains(&k) {
                    return Err(ParseStepperError);
                }
                ctor(k)
            }
        };
        Ok(kind)
    }
}

/// Gives `slot` the shape of `model`, creating it on first use.
pub(crate) fn prepare<S: State>(slot: &mut Option<S>, model: &S) -> Result<(), AlgebraError> {
    let s = slot.get_or_insert_with(|| S::empty(model.components()));
    s.resize_like(model)
}

pub(crate) fn prepare_all<S: State>(slots: &mut Vec<S>, n: usize, model: &S) -> Result<(), AlgebraError> {
    while slots.len() < n {
        slots.push(S::empty(model.components()));
    }
    for s in slots.iter_mut() {
        s.resize_like(model)?;
    }
    Ok(())
}

pub(crate) type Terms<'a, S> = ArrayVec<(f64, Operand<'a, S>), MAX_ARITY>;

/// A stepper instance. It owns its temporaries (created from the user's state
/// on first use) and, for multistep kinds, the history of right-hand sides.
pub struct Stepper<S> {
    kind: StepperKind,
    tableau: Option<&'static ButcherTableau>,
    stages: Vec<S>,
    stage_state: Option<S>,
    pub(crate) history: Option<History<S>>,
    startup: Option<Box<Stepper<S>>>,
    pub(crate) scratch: Option<S>,
    pub(crate) scratch2: Option<S>,
}

impl<S: State> Stepper<S> {
    pub fn new(kind: StepperKind) -> Result<Self, StepError> {
        let tableau = kind.tableau();
        if let Some(t) = tableau {
            t.validate()?;
        }
        let (history, startup) = match kind {
            StepperKind::AdamsBashforth(k) | StepperKind::AdamsBashforthMoulton(k) => {
                if !(1..=8).contains(&k) {
                    return Err(StepError::MultistepOrder(k));
                }
                (Some(History::new(k as usize)), Some(Box::new(Stepper::new(StepperKind::Fehlberg78)?)))
            }
            _ => (None, None),
        };
        Ok(Self {
            kind,
            tableau,
            stages: Vec::new(),
            stage_state: None,
            history,
            startup,
            scratch: None,
            scratch2: None,
        })
    }

    pub fn kind(&self) -> StepperKind {
        self.kind
    }

    /// Advances `u` from `t` to `t + dt` in place.
    pub fn do_step<F: System<S>>(&mut self, sys: &mut F, u: &mut S, t: f64, dt: f64) -> Result<(), StepError> {
        check_step_args(u, dt)?;
        match self.kind {
            k if k.is_symplectic() => Err(StepError::Unsupported { kind: k, operation: "do_step" }),
            StepperKind::AdamsBashforth(_) | StepperKind::AdamsBashforthMoulton(_) => {
                self.multistep_step(sys, u, t, dt)?;
                check_finite(u, t + dt)
            }
            _ => {
                let tab = self.tableau.expect("one-step kinds carry a tableau");
                self.rk_stages(tab, sys, u, t, dt)?;
                self.rk_update(tab.b, u, dt)?;
                check_finite(u, t + dt)
            }
        }
    }

    /// One step that also returns the embedded error estimate in `err`.
    pub fn do_step_with_error<F: System<S>>(
        &mut self,
        sys: &mut F,
        u: &mut S,
        t: f64,
        dt: f64,
        err: &mut S,
    ) -> Result<(), StepError> {
        check_step_args(u, dt)?;
        self.step_with_error_unchecked(sys, u, t, dt, err)?;
        check_finite(u, t + dt)
    }

    pub(crate) fn step_with_error_unchecked<F: System<S>>(
        &mut self,
        sys: &mut F,
        u: &mut S,
        t: f64,
        dt: f64,
        err: &mut S,
    ) -> Result<(), StepError> {
        let tab = match self.tableau {
            Some(t) if t.b_err.is_some() => t,
            _ => return Err(StepError::Unsupported { kind: self.kind, operation: "error estimation" }),
        };
        let b_err = tab.b_err.expect("checked above");
        self.rk_stages(tab, sys, u, t, dt)?;
        err.resize_like(u)?;
        {
            let mut terms: Terms<'_, S> = ArrayVec::new();
            for (j, k) in self.stages[..tab.stages()].iter().enumerate() {
                terms.push((dt * (tab.b[j] - b_err[j]), Operand::State(k)));
            }
            err.linear_combination(&terms)?;
        }
        self.rk_update(tab.b, u, dt)
    }

    fn rk_stages<F: System<S>>(
        &mut self,
        tab: &ButcherTableau,
        sys: &mut F,
        u: &S,
        t: f64,
        dt: f64,
    ) -> Result<(), StepError> {
        let s = tab.stages();
        prepare_all(&mut self.stages, s, u)?;
        prepare(&mut self.stage_state, u)?;
        let y = self.stage_state.as_mut().expect("prepared");
        sys.rhs(t + tab.c[0] * dt, u, &mut self.stages[0])?;
        for i in 1..s {
            let (done, rest) = self.stages.split_at_mut(i);
            let mut terms: Terms<'_, S> = ArrayVec::new();
            terms.push((1.0, Operand::State(u)));
            for (j, k) in done.iter().enumerate() {
                terms.push((dt * tab.a[i][j], Operand::State(k)));
            }
            y.linear_combination(&terms)?;
            sys.rhs(t + tab.c[i] * dt, y, &mut rest[0])?;
        }
        Ok(())
    }

    fn rk_update(&mut self, weights: &[f64], u: &mut S, dt: f64) -> Result<(), StepError> {
        let mut terms: Terms<'_, S> = ArrayVec::new();
        terms.push((1.0, Operand::Output));
        for (w, k) in weights.iter().zip(&self.stages) {
            terms.push((dt * w, Operand::State(k)));
        }
        u.linear_combination(&terms)?;
        Ok(())
    }

    /// One Fehlberg 78 step of the multistep start-up, recording `F(t, u)`
    /// in the history first.
    pub fn startup_step<F: System<S>>(&mut self, sys: &mut F, u: &mut S, t: f64, dt: f64) -> Result<(), StepError> {
        check_step_args(u, dt)?;
        let Some(startup) = self.startup.as_mut() else {
            return Err(StepError::Unsupported { kind: self.kind, operation: "multistep start-up" });
        };
        let history = self.history.as_mut().expect("multistep kinds own a history");
        history.ensure_current(sys, u, t)?;
        startup.do_step(sys, u, t, dt)
    }

    /// Primes the multistep history with `k - 1` Fehlberg 78 steps from `t0`.
    ///
    /// Afterwards the history holds `F` at `t0, t0 + dt, ..., t0 + (k-1)*dt`
    /// and `u` sits at the returned time. For `k = 1` nothing happens.
    pub fn bootstrap_multistep<F: System<S>>(
        &mut self,
        sys: &mut F,
        u: &mut S,
        t0: f64,
        dt: f64,
    ) -> Result<f64, StepError> {
        let k = self.kind.steps();
        if k == 0 {
            return Err(StepError::Unsupported { kind: self.kind, operation: "multistep start-up" });
        }
        self.reset();
        if k == 1 {
            return Ok(t0);
        }
        for i in 0..k - 1 {
            self.startup_step(sys, u, t0 + i as f64 * dt, dt)?;
        }
        let t = t0 + (k - 1) as f64 * dt;
        self.history.as_mut().expect("multistep").ensure_current(sys, u, t)?;
        Ok(t)
    }

    /// Right-hand side values held by the multistep history, newest first.
    pub fn history(&self) -> impl Iterator<Item = &S> {
        self.history.iter().flat_map(|h| h.values())
    }

    /// Stores an externally computed right-hand side value as the newest
    /// history entry, recorded at time `t`.
    pub fn push_history(&mut self, t: f64, f: S) -> Result<(), StepError> {
        let Some(h) = self.history.as_mut() else {
            return Err(StepError::Unsupported { kind: self.kind, operation: "history" });
        };
        h.push(t, f);
        Ok(())
    }

    /// Forgets the multistep history.
    pub fn reset(&mut self) {
        if let Some(h) = self.history.as_mut() {
            h.clear();
        }
    }
}

pub(crate) fn check_step_args<S: State>(u: &S, dt: f64) -> Result<(), StepError> {
    if u.is_empty() {
        return Err(StepError::InvalidArgument("state has no points"));
    }
    if dt == 0.0 || !dt.is_finite() {
        return Err(StepError::InvalidArgument("step size must be finite and non-zero"));
    }
    Ok(())
}

pub(crate) fn check_finite<S: State>(u: &S, t: f64) -> Result<(), StepError> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(StepError::Divergence { t })
    }
}

/// Integrates with a fixed step from `t0` to `tf` and returns the number of
/// steps, `round((tf - t0) / dt)`. Step `i` starts at `t0 + i*dt`; the
/// observer sees `(u, t)` before every step. Multistep kinds are restarted
/// and primed with Fehlberg 78 steps.
pub fn integrate_const<S: State, F: System<S>>(
    stepper: &mut Stepper<S>,
    sys: &mut F,
    u: &mut S,
    t0: f64,
    tf: f64,
    dt: f64,
    mut observer: Option<&mut dyn FnMut(&S, f64)>,
) -> Result<usize, StepError> {
    if !(tf > t0) || !(dt > 0.0) {
        return Err(StepError::InvalidArgument("integrate_const needs tf > t0 and dt > 0"));
    }
    let n = Float::round((tf - t0) / dt) as usize;
    let startup = stepper.kind().steps().saturating_sub(1);
    stepper.reset();
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        if let Some(obs) = observer.as_mut() {
            obs(u, t);
        }
        if i < startup {
            stepper.startup_step(sys, u, t, dt)?;
        } else {
            stepper.do_step(sys, u, t, dt)?;
        }
    }
    Ok(n)
}
