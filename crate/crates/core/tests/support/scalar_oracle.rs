//! Scalar-only reference integrators for `du/dt = u` (and `q'' = q` for the
//! symplectic schemes), written without the state algebra. They follow the
//! documented arithmetic of the library steppers so results can be compared
//! bit for bit.

#![allow(dead_code)]

use odeflow_core::tableau::ButcherTableau;

/// Stage values for `du/dt = u`: `k_i = Y_i`.
fn stages(tab: &ButcherTableau, u: f64, dt: f64) -> Vec<f64> {
    let mut k: Vec<f64> = Vec::with_capacity(tab.b.len());
    k.push(u);
    for i in 1..tab.b.len() {
        let mut y = 1.0 * u;
        for j in 0..i {
            y = y + (dt * tab.a[i][j]) * k[j];
        }
        k.push(y);
    }
    k
}

pub fn rk_step(tab: &ButcherTableau, u: f64, dt: f64) -> f64 {
    let k = stages(tab, u, dt);
    let mut acc = 1.0 * u;
    for (b, kj) in tab.b.iter().zip(&k) {
        acc = acc + (dt * b) * kj;
    }
    acc
}

/// Returns `(u_new, err)`.
pub fn rk_step_with_error(tab: &ButcherTableau, u: f64, dt: f64) -> (f64, f64) {
    let k = stages(tab, u, dt);
    let be = tab.b_err.expect("embedded weights");
    let mut err = (dt * (tab.b[0] - be[0])) * k[0];
    for j in 1..k.len() {
        err = err + (dt * (tab.b[j] - be[j])) * k[j];
    }
    (rk_step(tab, u, dt), err)
}

/// `k - 1` Fehlberg 78 start-up steps followed by one Adams step; returns
/// the state after all `k` steps (`k` steps of `dt` from `u0`).
pub fn adams_run(k: usize, corrector: bool, u0: f64, dt: f64, ab: &[f64], am: &[f64], rkf78: &ButcherTableau) -> f64 {
    // history newest first; for du/dt = u the stored rate equals the state
    let mut history: Vec<f64> = Vec::new();
    let mut u = u0;
    for _ in 0..k - 1 {
        history.insert(0, u);
        u = rk_step(rkf78, u, dt);
    }
    history.insert(0, u);
    let mut predicted = 1.0 * u;
    for (b, f) in ab.iter().zip(&history) {
        predicted = predicted + (dt * b) * f;
    }
    if !corrector {
        return predicted;
    }
    let f_pred = predicted;
    let mut acc = 1.0 * u;
    acc = acc + (dt * am[0]) * f_pred;
    for (g, f) in am[1..].iter().zip(&history) {
        acc = acc + (dt * g) * f;
    }
    acc
}

/// Symplectic Euler for `q'' = q`.
pub fn symplectic_euler(q: f64, p: f64, dt: f64) -> (f64, f64) {
    let p = 1.0 * p + dt * q;
    let q = 1.0 * q + dt * p;
    (q, p)
}

/// Velocity Verlet for `q'' = q`.
pub fn velocity_verlet(q: f64, p: f64, dt: f64) -> (f64, f64) {
    let half = 0.5 * dt;
    let p = 1.0 * p + half * q;
    let q = 1.0 * q + dt * p;
    let p = 1.0 * p + half * q;
    (q, p)
}

#[derive(Debug, PartialEq)]
pub struct AdaptiveRun {
    pub accepted: usize,
    pub rejected: usize,
    pub u: f64,
}

/// Elementary step-size controller around an embedded pair for `du/dt = u`,
/// with safety 0.9, shrink floor 0.2 and growth cap 5.
pub fn adaptive_run(tab: &ButcherTableau, u0: f64, t0: f64, tf: f64, dt0: f64, atol: f64, rtol: f64) -> AdaptiveRun {
    let p = tab.order as f64;
    let (safety, floor, cap) = (0.9f64, 0.2f64, 5.0f64);
    let (mut t, mut dt, mut u) = (t0, dt0, u0);
    let (mut accepted, mut rejected) = (0, 0);
    while t < tf {
        loop {
            let last = t + dt >= tf;
            let h = if last { tf - t } else { dt };
            let (un, e) = rk_step_with_error(tab, u, h);
            let ratio = e.abs() / (atol + rtol * u.abs().max(un.abs()));
            if ratio <= 1.0 {
                let next = h * cap.min(floor.max(safety * ratio.powf(-1.0 / p)));
                u = un;
                t = if last { tf } else { t + h };
                dt = if last { dt.max(next) } else { next };
                accepted += 1;
                break;
            }
            rejected += 1;
            dt = h * floor.max(safety * ratio.powf(-1.0 / (p - 1.0)));
        }
    }
    AdaptiveRun { accepted, rejected, u }
}
