//! Symplectic steppers for separable Hamiltonians with unit mass:
//! `dq/dt = p`, `dp/dt = F(q)`.

use alloc::vec::Vec;

use crate::algebra::{AlgebraError, Operand, State};
use crate::state::StateVector;
use crate::stepper::{check_finite, prepare, StepError, Stepper, StepperKind, System};

impl<S: State> Stepper<S> {
    /// Advances coordinates `q` and momenta `p` by `dt`. `force` maps `q` to
    /// `dp/dt`. A zero `dt` leaves both untouched.
    pub fn do_step_symplectic<F: System<S>>(
        &mut self,
        force: &mut F,
        q: &mut S,
        p: &mut S,
        t: f64,
        dt: f64,
    ) -> Result<(), StepError> {
        if !self.kind().is_symplectic() {
            return Err(StepError::Unsupported { kind: self.kind(), operation: "symplectic step" });
        }
        if q.components() != p.components() {
            return Err(AlgebraError::ComponentMismatch { expected: q.components(), found: p.components() }.into());
        }
        if q.len() != p.len() {
            return Err(AlgebraError::LengthMismatch { expected: q.len(), found: p.len() }.into());
        }
        if !dt.is_finite() {
            return Err(StepError::InvalidArgument("step size must be finite"));
        }
        let kind = self.kind();
        prepare(&mut self.scratch, q)?;
        let accel = self.scratch.as_mut().expect("prepared");
        match kind {
            StepperKind::SymplecticEuler => {
                force.rhs(t, q, accel)?;
                p.linear_combination(&[(1.0, Operand::Output), (dt, Operand::State(&*accel))])?;
                q.linear_combination(&[(1.0, Operand::Output), (dt, Operand::State(&*p))])?;
            }
            _ => {
                let half = 0.5 * dt;
                force.rhs(t, q, accel)?;
                p.linear_combination(&[(1.0, Operand::Output), (half, Operand::State(&*accel))])?;
                q.linear_combination(&[(1.0, Operand::Output), (dt, Operand::State(&*p))])?;
                force.rhs(t + dt, q, accel)?;
                p.linear_combination(&[(1.0, Operand::Output), (half, Operand::State(&*accel))])?;
            }
        }
        check_finite(q, t + dt)?;
        check_finite(p, t + dt)
    }
}

/// Symplectic step on a packed phase-space state: the first half of the
/// components are coordinates, the second half the matching momenta.
pub fn do_step_symplectic<F: System<StateVector>>(
    stepper: &mut Stepper<StateVector>,
    force: &mut F,
    qp: &mut StateVector,
    t: f64,
    dt: f64,
) -> Result<(), StepError> {
    let c = qp.components();
    if c % 2 != 0 {
        return Err(StepError::InvalidArgument("phase-space state needs an even component count"));
    }
    let mut all = core::mem::replace(qp, StateVector::empty(1)).into_components();
    let momenta: Vec<Vec<f64>> = all.split_off(c / 2);
    let mut q = StateVector::from_components(all)?;
    let mut p = StateVector::from_components(momenta)?;
    let result = stepper.do_step_symplectic(force, &mut q, &mut p, t, dt);
    let mut joined = q.into_components();
    joined.extend(p.into_components());
    *qp = StateVector::from_components(joined)?;
    result
}
