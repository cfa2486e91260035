//! Adams-Bashforth and Adams-Bashforth-Moulton steppers.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use arrayvec::ArrayVec;

use crate::algebra::{Operand, State};
use crate::stepper::{prepare, StepError, Stepper, StepperKind, System, Terms};

/// Adams-Bashforth weights, newest right-hand side first.
#[rustfmt::skip]
pub const ADAMS_BASHFORTH: [&[f64]; 8] = [
    &[1.0],
    &[3.0 / 2.0, -1.0 / 2.0],
    &[23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0],
    &[55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0],
    &[1901.0 / 720.0, -2774.0 / 720.0, 2616.0 / 720.0, -1274.0 / 720.0, 251.0 / 720.0],
    &[4277.0 / 1440.0, -7923.0 / 1440.0, 9982.0 / 1440.0, -7298.0 / 1440.0, 2877.0 / 1440.0, -475.0 / 1440.0],
    &[198721.0 / 60480.0, -447288.0 / 60480.0, 705549.0 / 60480.0, -688256.0 / 60480.0,
      407139.0 / 60480.0, -134472.0 / 60480.0, 19087.0 / 60480.0],
    &[434241.0 / 120960.0, -1152169.0 / 120960.0, 2183877.0 / 120960.0, -2664477.0 / 120960.0,
      2102243.0 / 120960.0, -1041723.0 / 120960.0, 295767.0 / 120960.0, -36799.0 / 120960.0],
];

/// Adams-Moulton weights; the first applies to the predicted right-hand side
/// at the new time, the rest to the history, newest first.
#[rustfmt::skip]
pub const ADAMS_MOULTON: [&[f64]; 8] = [
    &[1.0],
    &[1.0 / 2.0, 1.0 / 2.0],
    &[5.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0],
    &[9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0],
    &[251.0 / 720.0, 646.0 / 720.0, -264.0 / 720.0, 106.0 / 720.0, -19.0 / 720.0],
    &[475.0 / 1440.0, 1427.0 / 1440.0, -798.0 / 1440.0, 482.0 / 1440.0, -173.0 / 1440.0, 27.0 / 1440.0],
    &[19087.0 / 60480.0, 65112.0 / 60480.0, -46461.0 / 60480.0, 37504.0 / 60480.0,
      -20211.0 / 60480.0, 6312.0 / 60480.0, -863.0 / 60480.0],
    &[36799.0 / 120960.0, 139849.0 / 120960.0, -121797.0 / 120960.0, 123133.0 / 120960.0,
      -88547.0 / 120960.0, 41499.0 / 120960.0, -11351.0 / 120960.0, 1375.0 / 120960.0],
];

/// Ring of past right-hand side values, newest first, at most `capacity` long.
pub(crate) struct History<S> {
    capacity: usize,
    values: VecDeque<S>,
    /// Time of the newest entry.
    newest_t: Option<f64>,
    spare: Vec<S>,
}

impl<S: State> History<S> {
    pub(crate) fn new(capacity: usize) -> Self {
        Self { capacity, values: VecDeque::with_capacity(capacity), newest_t: None, spare: Vec::new() }
    }

    pub(crate) fn values(&self) -> impl Iterator<Item = &S> {
        self.values.iter()
    }

    pub(crate) fn len(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn clear(&mut self) {
        self.spare.extend(self.values.drain(..));
        self.newest_t = None;
    }

    pub(crate) fn push(&mut self, t: f64, f: S) {
        self.values.push_front(f);
        self.newest_t = Some(t);
        while self.values.len() > self.capacity {
            let old = self.values.pop_back().expect("non-empty");
            self.spare.push(old);
        }
    }

    /// Number of values available for a step starting at `t`, counting the
    /// one that would be evaluated there.
    pub(crate) fn available_at(&self, t: f64) -> usize {
        if self.newest_t == Some(t) {
            self.values.len()
        } else {
            self.values.len() + 1
        }
    }

    /// Makes sure the newest entry is `F(t, u)`.
    pub(crate) fn ensure_current<F: System<S>>(&mut self, sys: &mut F, u: &S, t: f64) -> Result<(), StepError> {
        if self.newest_t == Some(t) {
            return Ok(());
        }
        let mut slot = Some(self.spare.pop().unwrap_or_else(|| S::empty(u.components())));
        prepare(&mut slot, u)?;
        let mut f = slot.expect("prepared");
        sys.rhs(t, u, &mut f)?;
        self.push(t, f);
        Ok(())
    }
}

impl<S: State> Stepper<S> {
    pub(crate) fn multistep_step<F: System<S>>(
        &mut self,
        sys: &mut F,
        u: &mut S,
        t: f64,
        dt: f64,
    ) -> Result<(), StepError> {
        let (k, corrector) = match self.kind() {
            StepperKind::AdamsBashforth(k) => (k as usize, false),
            StepperKind::AdamsBashforthMoulton(k) => (k as usize, true),
            other => return Err(StepError::Unsupported { kind: other, operation: "multistep step" }),
        };
        let history = self.history.as_mut().expect("multistep kinds own a history");
        let have = history.available_at(t);
        if have < k {
            return Err(StepError::Unprimed { have, need: k });
        }
        history.ensure_current(sys, u, t)?;
        debug_assert!(history.len() >= k);

        let beta = ADAMS_BASHFORTH[k - 1];
        if !corrector {
            let mut terms: Terms<'_, S> = ArrayVec::new();
            terms.push((1.0, Operand::Output));
            for (b, f) in beta.iter().zip(history.values()) {
                terms.push((dt * b, Operand::State(f)));
            }
            u.linear_combination(&terms)?;
            return Ok(());
        }

        prepare(&mut self.scratch, u)?;
        prepare(&mut self.scratch2, u)?;
        let predicted = self.scratch.as_mut().expect("prepared");
        let f_predicted = self.scratch2.as_mut().expect("prepared");
        {
            let mut terms: Terms<'_, S> = ArrayVec::new();
            terms.push((1.0, Operand::State(&*u)));
            for (b, f) in beta.iter().zip(history.values()) {
                terms.push((dt * b, Operand::State(f)));
            }
            predicted.linear_combination(&terms)?;
        }
        sys.rhs(t + dt, predicted, f_predicted)?;

        let gamma = ADAMS_MOULTON[k - 1];
        let mut terms: Terms<'_, S> = ArrayVec::new();
        terms.push((1.0, Operand::Output));
        terms.push((dt * gamma[0], Operand::State(&*f_predicted)));
        for (g, f) in gamma[1..].iter().zip(history.values()) {
            terms.push((dt * g, Operand::State(f)));
        }
        u.linear_combination(&terms)?;
        Ok(())
    }
}
