//! The algebra contract every stepper is written against.

use thiserror::Error;

/// Largest number of input states a single linear combination may take.
///
/// Together with the output this gives 15 participating states, enough for
/// the final update of a 13-stage method plus the current state.
pub const MAX_ARITY: usize = 14;

/// Highest supported component count of a state.
pub const MAX_COMPONENTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("component count mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected} points, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("states are laid out on different grids")]
    LayoutMismatch,
    #[error("linear combination arity {0} outside 1..={MAX_ARITY}")]
    Arity(usize),
    #[error("component count {0} outside 1..={MAX_COMPONENTS}")]
    ComponentCount(usize),
    #[error("absolute and relative tolerance are both zero (or negative)")]
    ZeroTolerance,
}

/// One input of a linear combination.
///
/// `Output` refers to the value the output state holds *before* the
/// combination is evaluated, which is how in-place updates such as
/// `u <- u + dt*k` are spelled without aliasing a mutable borrow.
#[derive(Debug)]
pub enum Operand<'a, S> {
    Output,
    State(&'a S),
}

impl<S> Clone for Operand<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Operand<'_, S> {}

/// A state type together with its algebra.
///
/// Every operation acts element-wise and component-wise, never reorders
/// elements and never changes the component count. `linear_combination`
/// evaluates its sum strictly left to right,
/// `acc = c0*x0; acc = acc + c1*x1; ...`, so two implementations that honour
/// the contract agree bitwise.
pub trait State: Clone {
    /// A fresh temporary with zero points; it is sized later by `resize_like`.
    fn empty(components: usize) -> Self;

    fn components(&self) -> usize;

    /// Points per component (owned points only for distributed states).
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Gives `self` the shape of `model`. Values already present are kept,
    /// new positions are zero.
    fn resize_like(&mut self, model: &Self) -> Result<(), AlgebraError>;

    /// `self <- sum_j coeff_j * operand_j`, summed left to right.
    fn linear_combination(&mut self, terms: &[(f64, Operand<'_, Self>)]) -> Result<(), AlgebraError>;

    /// Maximum absolute value over all components and points; 0 when empty.
    /// NaN propagates.
    fn norm_inf(&self) -> f64;

    /// `max |e| / (atol + rtol * max(|u_old|, |u_new|))` over all elements.
    fn err_ratio(e: &Self, u_old: &Self, u_new: &Self, atol: f64, rtol: f64) -> Result<f64, AlgebraError>;

    fn is_finite(&self) -> bool;

    fn copy_from(&mut self, src: &Self) -> Result<(), AlgebraError> {
        self.linear_combination(&[(1.0, Operand::State(src))])
    }
}

/// States that can apply a scalar function to every element.
pub trait Pointwise: State {
    fn map_from<F>(&mut self, src: &Self, f: F) -> Result<(), AlgebraError>
    where
        F: Fn(f64) -> f64 + Sync + Send;
}

pub fn check_arity(k: usize) -> Result<(), AlgebraError> {
    if k == 0 || k > MAX_ARITY {
        Err(AlgebraError::Arity(k))
    } else {
        Ok(())
    }
}

pub fn check_component_count(c: usize) -> Result<(), AlgebraError> {
    if c == 0 || c > MAX_COMPONENTS {
        Err(AlgebraError::ComponentCount(c))
    } else {
        Ok(())
    }
}

pub fn check_tolerance(atol: f64, rtol: f64) -> Result<(), AlgebraError> {
    if !(atol > 0.0 || rtol > 0.0) || atol < 0.0 || rtol < 0.0 {
        Err(AlgebraError::ZeroTolerance)
    } else {
        Ok(())
    }
}

/// NaN-propagating maximum used by every reduction so that results do not
/// depend on where a NaN sits.
#[inline]
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if b > a {
        b
    } else {
        a
    }
}

/// Slice-level kernels shared by the state implementations.
///
/// Keeping a single implementation of the per-element arithmetic is what makes
/// a dense state and a partitioned one produce identical bits.
pub mod kernels {
    use super::nan_max;
    use num_traits::Float;

    const CHUNK: usize = 256;

    /// `out <- sum_j c_j * x_j`, where a `None` input reads the old `out`.
    ///
    /// All inputs must have the length of `out`. Works chunk by chunk so that
    /// `None` operands may appear at any position.
    pub fn combine(out: &mut [f64], terms: &[(f64, Option<&[f64]>)]) {
        debug_assert!(!terms.is_empty());
        if terms[1..].iter().all(|t| t.1.is_some()) {
            // old `out` is read at most by the first term: accumulate in place
            let (c0, x0) = terms[0];
            match x0 {
                Some(x) => out.iter_mut().zip(x).for_each(|(o, &v)| *o = c0 * v),
                None => out.iter_mut().for_each(|o| *o = c0 * *o),
            }
            for &(c, x) in &terms[1..] {
                let x = x.expect("checked above");
                out.iter_mut().zip(x).for_each(|(o, &v)| *o = *o + c * v);
            }
            return;
        }
        let n = out.len();
        let mut acc = [0.0f64; CHUNK];
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let acc = &mut acc[..end - start];
            for (j, &(c, src)) in terms.iter().enumerate() {
                let x = match src {
                    Some(x) => &x[start..end],
                    None => &out[start..end],
                };
                if j == 0 {
                    for (a, &v) in acc.iter_mut().zip(x) {
                        *a = c * v;
                    }
                } else {
                    for (a, &v) in acc.iter_mut().zip(x) {
                        *a = *a + c * v;
                    }
                }
            }
            out[start..end].copy_from_slice(acc);
            start = end;
        }
    }

    pub fn max_abs(x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, &v| nan_max(m, Float::abs(v)))
    }

    pub fn err_ratio(e: &[f64], u_old: &[f64], u_new: &[f64], atol: f64, rtol: f64) -> f64 {
        let mut m = 0.0;
        for ((&e, &a), &b) in e.iter().zip(u_old).zip(u_new) {
            let scale = atol + rtol * Float::max(Float::abs(a), Float::abs(b));
            m = nan_max(m, Float::abs(e) / scale);
        }
        m
    }

    pub fn all_finite(x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }
}
