//! Benchmark right-hand sides with known behaviour.
//!
//! * exponential family `du/dt = u`, exact solution `x*y*e^t` on the unit square
//! * sigmoid `du/dt = u(1 - u)`, exact solution `1 / (1 + e^-t)`
//! * Gray-Scott reaction-diffusion in a periodic 3D box

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraError, Operand, Pointwise, State};
use crate::partition::GridPartition;
use crate::state::StateVector;
use crate::stepper::{RhsError, System};

/// `du/dt = u`, element-wise. No spatial coupling.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl<S: State> System<S> for Exponential {
    fn rhs(&mut self, _t: f64, u: &S, dudt: &mut S) -> Result<(), RhsError> {
        dudt.linear_combination(&[(1.0, Operand::State(u))])?;
        Ok(())
    }
}

/// `x * y * e^t` sampled on the grid points of `partition`, x fastest.
pub fn exponential_exact(t: f64, partition: &GridPartition) -> StateVector {
    let [nx, ny, nz] = partition.dims();
    let growth = Float::exp(t);
    let mut values = Vec::with_capacity(nx * ny * nz);
    for _k in 0..nz {
        for j in 0..ny {
            let y = partition.coordinate(1, j);
            for i in 0..nx {
                values.push(partition.coordinate(0, i) * y * growth);
            }
        }
    }
    StateVector::scalar_field(values)
}

/// `du/dt = u (1 - u)`, element-wise.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sigmoid;

impl<S: Pointwise> System<S> for Sigmoid {
    fn rhs(&mut self, _t: f64, u: &S, dudt: &mut S) -> Result<(), RhsError> {
        dudt.map_from(u, |v| v * (1.0 - v))?;
        Ok(())
    }
}

pub fn sigmoid_exact(t: f64) -> f64 {
    1.0 / (1.0 + Float::exp(-t))
}

/// Gray-Scott parameters; the defaults are the pattern-forming set
/// `d1 = 2e-4, d2 = 1e-4, F = 0.014, K = 0.053`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayScottParams {
    pub d1: f64,
    pub d2: f64,
    pub feed: f64,
    pub kill: f64,
}

impl Default for GrayScottParams {
    fn default() -> Self {
        Self { d1: 2e-4, d2: 1e-4, feed: 0.014, kill: 0.053 }
    }
}

/// Edge length of the cubic Gray-Scott domain.
pub const GRAY_SCOTT_BOX: f64 = 2.5;

/// Second-order 7-point Laplacian; neighbours in the order
/// x-, x+, y-, y+, z-, z+.
#[inline(always)]
pub fn laplacian_7pt(center: f64, n: [f64; 6], inv_h2: f64) -> f64 {
    (n[0] + n[1] + n[2] + n[3] + n[4] + n[5] - 6.0 * center) * inv_h2
}

/// Gray-Scott rates at one cell given both concentrations and their
/// Laplacians.
#[inline(always)]
pub fn grayscott_rates(p: &GrayScottParams, c0: f64, c1: f64, lap0: f64, lap1: f64) -> (f64, f64) {
    let reaction = c0 * c1 * c1;
    let d0 = p.d1 * lap0 - reaction + p.feed - p.feed * c0;
    let d1 = p.d2 * lap1 + reaction - (p.feed + p.kill) * c1;
    (d0, d1)
}

/// Stencil update of one padded block.
///
/// `c0`/`c1` hold a box of extent `padded` (x fastest) whose cells in
/// `owned` have valid neighbours one step away in every direction. Rates
/// are written to `out0`/`out1` at the same padded positions.
#[allow(clippy::too_many_arguments)]
pub fn grayscott_block(
    p: &GrayScottParams,
    inv_h2: f64,
    padded: [usize; 3],
    owned: [core::ops::Range<usize>; 3],
    c0: &[f64],
    c1: &[f64],
    out0: &mut [f64],
    out1: &mut [f64],
) {
    let sx = 1;
    let sy = padded[0];
    let sz = padded[0] * padded[1];
    for k in owned[2].clone() {
        for j in owned[1].clone() {
            let row = j * sy + k * sz;
            for i in owned[0].clone() {
                let c = row + i;
                let n0 = [c0[c - sx], c0[c + sx], c0[c - sy], c0[c + sy], c0[c - sz], c0[c + sz]];
                let n1 = [c1[c - sx], c1[c + sx], c1[c - sy], c1[c + sy], c1[c - sz], c1[c + sz]];
                let lap0 = laplacian_7pt(c0[c], n0, inv_h2);
                let lap1 = laplacian_7pt(c1[c], n1, inv_h2);
                let (d0, d1) = grayscott_rates(p, c0[c], c1[c], lap0, lap1);
                out0[c] = d0;
                out1[c] = d1;
            }
        }
    }
}

/// Gray-Scott on a dense, single-address-space state with periodic
/// wraparound by index arithmetic (no ghost layers).
#[derive(Debug, Clone)]
pub struct GrayScottDense {
    params: GrayScottParams,
    dims: [usize; 3],
    inv_h2: f64,
}

impl GrayScottDense {
    pub fn new(params: GrayScottParams, dims: [usize; 3]) -> Self {
        let h = GRAY_SCOTT_BOX / dims[0] as f64;
        Self { params, dims, inv_h2: 1.0 / (h * h) }
    }

    pub fn inv_h2(&self) -> f64 {
        self.inv_h2
    }
}

impl System<StateVector> for GrayScottDense {
    fn rhs(&mut self, _t: f64, u: &StateVector, dudt: &mut StateVector) -> Result<(), RhsError> {
        let [nx, ny, nz] = self.dims;
        if u.components() != 2 || u.len() != nx * ny * nz {
            return Err(RhsError("Gray-Scott needs two components on the configured grid".into()));
        }
        let (c0, c1) = (u.component(0), u.component(1));
        let idx = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
        let mut d0 = vec![0.0; u.len()];
        let mut d1 = vec![0.0; u.len()];
        for k in 0..nz {
            let (km, kp) = ((k + nz - 1) % nz, (k + 1) % nz);
            for j in 0..ny {
                let (jm, jp) = ((j + ny - 1) % ny, (j + 1) % ny);
                for i in 0..nx {
                    let (im, ip) = ((i + nx - 1) % nx, (i + 1) % nx);
                    let at = [idx(im, j, k), idx(ip, j, k), idx(i, jm, k), idx(i, jp, k), idx(i, j, km), idx(i, j, kp)];
                    let c = idx(i, j, k);
                    let lap0 = laplacian_7pt(c0[c], at.map(|a| c0[a]), self.inv_h2);
                    let lap1 = laplacian_7pt(c1[c], at.map(|a| c1[a]), self.inv_h2);
                    (d0[c], d1[c]) = grayscott_rates(&self.params, c0[c], c1[c], lap0, lap1);
                }
            }
        }
        dudt.component_mut(0).copy_from_slice(&d0);
        dudt.component_mut(1).copy_from_slice(&d1);
        Ok(())
    }
}

/// Initial Gray-Scott field on the global grid (x fastest): `(1, 0)`
/// everywhere except a centred cube with one eighth of the edge length,
/// where `(0.5, 0.25)` is perturbed by up to ±1% from a seeded generator.
pub fn grayscott_init(dims: [usize; 3], seed: u64) -> StateVector {
    let n: usize = dims.iter().product();
    let mut c0 = vec![1.0; n];
    let mut c1 = vec![0.0; n];
    let seed_range = |len: usize| {
        let side = (len / 8).max(1);
        let start = len / 2 - side / 2;
        start..start + side
    };
    let [rx, ry, rz] = [seed_range(dims[0]), seed_range(dims[1]), seed_range(dims[2])];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in rz {
        for j in ry.clone() {
            for i in rx.clone() {
                let c = i + dims[0] * (j + dims[1] * k);
                c0[c] = 0.5 * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0));
                c1[c] = 0.25 * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0));
            }
        }
    }
    StateVector::from_components(vec![c0, c1]).expect("two equal-length fields")
}

/// L-infinity and L2 norms of `u - exact`, summed in global index order.
pub fn error_norms(u: &StateVector, exact: &StateVector) -> Result<(f64, f64), AlgebraError> {
    let mut diff = u.clone();
    diff.linear_combination(&[(1.0, Operand::Output), (-1.0, Operand::State(exact))])?;
    let l_inf = diff.norm_inf();
    let mut sum = 0.0;
    for c in 0..diff.components() {
        for &e in diff.component(c) {
            sum += e * e;
        }
    }
    Ok((l_inf, Float::sqrt(sum)))
}

/// Population variance of a field.
pub fn spatial_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}
