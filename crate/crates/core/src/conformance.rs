//! Conformance kit for [`State`] implementations.
//!
//! Given a way to build a state from dense per-component data (and to read
//! it back), the kit checks that `linear_combination` matches a plain scalar
//! loop bitwise for every arity, that an aliased output gives the same bits
//! as a copied one, and that the norm and error ratio agree with their
//! scalar definitions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::algebra::{Operand, State, MAX_ARITY};

/// Dense component data, one `Vec` per component.
pub type Dense = Vec<Vec<f64>>;

/// Reference: `out[c][i] = ((c0*x0[c][i]) + c1*x1[c][i]) + ...`.
pub fn reference_combination(terms: &[(f64, &Dense)]) -> Dense {
    let (c0, x0) = terms[0];
    let mut out: Dense = x0.iter().map(|comp| comp.iter().map(|&v| c0 * v).collect()).collect();
    for &(c, x) in &terms[1..] {
        for (o, xc) in out.iter_mut().zip(x.iter()) {
            for (o, &v) in o.iter_mut().zip(xc) {
                *o = *o + c * v;
            }
        }
    }
    out
}

fn bits(d: &Dense) -> Vec<Vec<u64>> {
    d.iter().map(|c| c.iter().map(|v| v.to_bits()).collect()).collect()
}

/// Runs the kit. `inputs` must hold at least `MAX_ARITY` dense states of
/// identical shape and `coeffs` at least `MAX_ARITY` coefficients.
pub fn check<S, B, R>(build: B, read: R, inputs: &[Dense], coeffs: &[f64]) -> Result<(), String>
where
    S: State,
    B: Fn(&Dense) -> S,
    R: Fn(&S) -> Dense,
{
    if inputs.len() < MAX_ARITY || coeffs.len() < MAX_ARITY {
        return Err(format!("kit needs {MAX_ARITY} inputs and coefficients"));
    }
    let states: Vec<S> = inputs.iter().map(&build).collect();
    let components = states[0].components();

    for k in 1..=MAX_ARITY {
        let dense_terms: Vec<(f64, &Dense)> = (0..k).map(|j| (coeffs[j], &inputs[j])).collect();
        let expected = bits(&reference_combination(&dense_terms));

        let mut out = S::empty(components);
        out.resize_like(&states[0]).map_err(|e| format!("resize: {e}"))?;
        let terms: Vec<(f64, Operand<'_, S>)> = (0..k).map(|j| (coeffs[j], Operand::State(&states[j]))).collect();
        out.linear_combination(&terms).map_err(|e| format!("arity {k}: {e}"))?;
        if bits(&read(&out)) != expected {
            return Err(format!("arity {k}: result differs from the scalar reference"));
        }

        // The same sum with input `k-1` (or 0) replaced by the aliased output.
        let alias_at = k / 2;
        let mut aliased = build(&inputs[alias_at]);
        let terms: Vec<(f64, Operand<'_, S>)> = (0..k)
            .map(|j| (coeffs[j], if j == alias_at { Operand::Output } else { Operand::State(&states[j]) }))
            .collect();
        aliased.linear_combination(&terms).map_err(|e| format!("aliased arity {k}: {e}"))?;
        if bits(&read(&aliased)) != expected {
            return Err(format!("arity {k}: aliased output differs from the non-aliased result"));
        }
    }

    let mut out = build(&inputs[0]);
    let too_many: Vec<(f64, Operand<'_, S>)> = (0..=MAX_ARITY).map(|j| (1.0, Operand::State(&states[j % MAX_ARITY]))).collect();
    if out.linear_combination(&too_many).is_ok() || out.linear_combination(&[]).is_ok() {
        return Err(String::from("unsupported arity was accepted"));
    }

    for (x, s) in inputs.iter().zip(&states) {
        let expected = x.iter().flatten().fold(0.0f64, |m, &v| Float::max(m, Float::abs(v)));
        if s.norm_inf().to_bits() != expected.to_bits() {
            return Err(String::from("norm_inf differs from the scalar maximum"));
        }
    }

    let (atol, rtol) = (1e-3, 1e-2);
    let mut expected = 0.0f64;
    for ((e, a), b) in inputs[0].iter().flatten().zip(inputs[1].iter().flatten()).zip(inputs[2].iter().flatten()) {
        let scale = atol + rtol * Float::max(Float::abs(*a), Float::abs(*b));
        expected = Float::max(expected, Float::abs(*e) / scale);
    }
    let got = S::err_ratio(&states[0], &states[1], &states[2], atol, rtol).map_err(|e| format!("err_ratio: {e}"))?;
    if got.to_bits() != expected.to_bits() {
        return Err(String::from("err_ratio differs from the scalar reference"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::StateVector;

    #[test]
    fn dense_state_vector_conforms() {
        let inputs: Vec<Dense> = (0..MAX_ARITY)
            .map(|j| (0..2).map(|c| (0..37).map(|i| ((i * 7 + j * 13 + c * 3) % 19) as f64 / 7.0 - 1.3).collect()).collect())
            .collect();
        let coeffs: Vec<f64> = (0..MAX_ARITY).map(|j| 0.1 * j as f64 - 0.65).collect();
        check(
            |d: &Dense| StateVector::from_components(d.clone()).unwrap(),
            |s: &StateVector| s.clone().into_components(),
            &inputs,
            &coeffs,
        )
        .unwrap();
    }
}
