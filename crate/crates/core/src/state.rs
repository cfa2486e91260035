//! Dense multi-component state held in one address space.

use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{
    check_arity, check_component_count, check_tolerance, kernels, nan_max, AlgebraError, Operand,
    Pointwise, State,
};

/// `C` scalar fields of equal length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    components: Vec<Vec<f64>>,
}

impl StateVector {
    /// A zero state with `components` fields of `len` points.
    pub fn zeros(components: usize, len: usize) -> Result<Self, AlgebraError> {
        check_component_count(components)?;
        Ok(Self { components: vec![vec![0.0; len]; components] })
    }

    pub fn from_components(components: Vec<Vec<f64>>) -> Result<Self, AlgebraError> {
        check_component_count(components.len())?;
        let n = components[0].len();
        if let Some(bad) = components.iter().find(|c| c.len() != n) {
            return Err(AlgebraError::LengthMismatch { expected: n, found: bad.len() });
        }
        Ok(Self { components })
    }

    /// Single-component state.
    pub fn scalar_field(values: Vec<f64>) -> Self {
        Self { components: vec![values] }
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.components[c]
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    fn conforms(&self, other: &Self) -> Result<(), AlgebraError> {
        if other.components.len() != self.components.len() {
            return Err(AlgebraError::ComponentMismatch {
                expected: self.components.len(),
                found: other.components.len(),
            });
        }
        if other.len() != self.len() {
            return Err(AlgebraError::LengthMismatch { expected: self.len(), found: other.len() });
        }
        Ok(())
    }
}

impl State for StateVector {
    fn empty(components: usize) -> Self {
        Self { components: vec![Vec::new(); components.max(1)] }
    }

    fn components(&self) -> usize {
        self.components.len()
    }

    fn len(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    fn resize_like(&mut self, model: &Self) -> Result<(), AlgebraError> {
        if self.components.len() != model.components.len() {
            return Err(AlgebraError::ComponentMismatch {
                expected: model.components.len(),
                found: self.components.len(),
            });
        }
        let n = model.len();
        for c in &mut self.components {
            c.resize(n, 0.0);
        }
        Ok(())
    }

    fn linear_combination(&mut self, terms: &[(f64, Operand<'_, Self>)]) -> Result<(), AlgebraError> {
        check_arity(terms.len())?;
        for (_, op) in terms {
            if let Operand::State(s) = op {
                self.conforms(s)?;
            }
        }
        let mut slices: arrayvec::ArrayVec<(f64, Option<&[f64]>), { crate::MAX_ARITY }> =
            arrayvec::ArrayVec::new();
        for c in 0..self.components.len() {
            slices.clear();
            for &(coeff, op) in terms {
                slices.push((
                    coeff,
                    match op {
                        Operand::Output => None,
                        Operand::State(s) => Some(&s.components[c][..]),
                    },
                ));
            }
            kernels::combine(&mut self.components[c], &slices);
        }
        Ok(())
    }

    fn norm_inf(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| nan_max(m, kernels::max_abs(c)))
    }

    fn err_ratio(e: &Self, u_old: &Self, u_new: &Self, atol: f64, rtol: f64) -> Result<f64, AlgebraError> {
        check_tolerance(atol, rtol)?;
        e.conforms(u_old)?;
        e.conforms(u_new)?;
        Ok(e.components
            .iter()
            .zip(&u_old.components)
            .zip(&u_new.components)
            .fold(0.0, |m, ((e, a), b)| nan_max(m, kernels::err_ratio(e, a, b, atol, rtol))))
    }

    fn is_finite(&self) -> bool {
        self.components.iter().all(|c| kernels::all_finite(c))
    }

    fn copy_from(&mut self, src: &Self) -> Result<(), AlgebraError> {
        self.conforms(src)?;
        for (d, s) in self.components.iter_mut().zip(&src.components) {
            d.copy_from_slice(s);
        }
        Ok(())
    }
}

impl Pointwise for StateVector {
    fn map_from<F>(&mut self, src: &Self, f: F) -> Result<(), AlgebraError>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        self.conforms(src)?;
        for (d, s) in self.components.iter_mut().zip(&src.components) {
            for (d, &s) in d.iter_mut().zip(s) {
                *d = f(s);
            }
        }
        Ok(())
    }
}
