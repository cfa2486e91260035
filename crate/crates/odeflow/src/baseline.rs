//! Hand-written RK4 for Gray-Scott on a dense periodic grid: direct loops,
//! no state algebra, no ghost layers. Used as the reference point for the
//! cost of the generic stepper.

use odeflow_core::models::{grayscott_rates, laplacian_7pt, GrayScottParams, GRAY_SCOTT_BOX};

struct Stencil {
    params: GrayScottParams,
    dims: [usize; 3],
    inv_h2: f64,
    /// Periodic neighbour indices along each axis: `(minus, plus)`.
    wrap: [Vec<(usize, usize)>; 3],
}

impl Stencil {
    fn rhs(&self, c0: &[f64], c1: &[f64], d0: &mut [f64], d1: &mut [f64]) {
        let [nx, ny, nz] = self.dims;
        let (sy, sz) = (nx, nx * ny);
        for k in 0..nz {
            let (km, kp) = self.wrap[2][k];
            for j in 0..ny {
                let (jm, jp) = self.wrap[1][j];
                let row = j * sy + k * sz;
                let (ym, yp) = (jm * sy + k * sz, jp * sy + k * sz);
                let (zm, zp) = (j * sy + km * sz, j * sy + kp * sz);
                for i in 0..nx {
                    let (im, ip) = self.wrap[0][i];
                    let c = row + i;
                    let at = [row + im, row + ip, ym + i, yp + i, zm + i, zp + i];
                    let lap0 = laplacian_7pt(c0[c], at.map(|a| c0[a]), self.inv_h2);
                    let lap1 = laplacian_7pt(c1[c], at.map(|a| c1[a]), self.inv_h2);
                    (d0[c], d1[c]) = grayscott_rates(&self.params, c0[c], c1[c], lap0, lap1);
                }
            }
        }
    }
}

pub struct NativeRk4 {
    stencil: Stencil,
    k: [Vec<f64>; 8],
    tmp: [Vec<f64>; 2],
}

impl NativeRk4 {
    pub fn new(params: GrayScottParams, dims: [usize; 3]) -> Self {
        let n: usize = dims.iter().product();
        let h = GRAY_SCOTT_BOX / dims[0] as f64;
        let wrap = dims.map(|m| (0..m).map(|i| ((i + m - 1) % m, (i + 1) % m)).collect());
        Self {
            stencil: Stencil { params, dims, inv_h2: 1.0 / (h * h), wrap },
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: [vec![0.0; n], vec![0.0; n]],
        }
    }

    /// One classical RK4 step of size `dt` on `(c0, c1)`.
    pub fn step(&mut self, c0: &mut [f64], c1: &mut [f64], dt: f64) {
        let s = &self.stencil;
        let [k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b] = &mut self.k;
        let [t0, t1] = &mut self.tmp;
        let stage = |t: &mut [f64], u: &[f64], k: &[f64], a: f64| {
            for ((t, &u), &k) in t.iter_mut().zip(u).zip(k) {
                *t = u + a * k;
            }
        };
        s.rhs(c0, c1, k1a, k1b);
        stage(t0, c0, k1a, 0.5 * dt);
        stage(t1, c1, k1b, 0.5 * dt);
        s.rhs(t0, t1, k2a, k2b);
        stage(t0, c0, k2a, 0.5 * dt);
        stage(t1, c1, k2b, 0.5 * dt);
        s.rhs(t0, t1, k3a, k3b);
        stage(t0, c0, k3a, dt);
        stage(t1, c1, k3b, dt);
        s.rhs(t0, t1, k4a, k4b);
        let w = dt / 6.0;
        for (u, k) in [(&mut *c0, [&*k1a, &*k2a, &*k3a, &*k4a]), (&mut *c1, [&*k1b, &*k2b, &*k3b, &*k4b])] {
            for (i, u) in u.iter_mut().enumerate() {
                *u += w * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
        }
    }
}
