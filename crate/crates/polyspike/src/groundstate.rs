//! Radial ground state of `-w'' - (N-1)/r w' + w = mu w^{p-1}`.
//!
//! The center value is found by bisection shooting, then the profile is
//! polished by Newton's method on a fourth-order finite-difference
//! discretization of `[0, R_tab]` whose far end is closed with the decaying
//! asymptotics. Beyond `R_tab` the profile is the analytic tail
//! `c_inf r^{-(N-1)/2} e^{-r}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::sparse::{CsrMatrix, LuSolver};
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::ode::{self, Tolerances};
use crate::numerics::{fit, quadrature, sphere_area};

/// Grid spacing of the polished table.
pub const DEFAULT_STEP: f64 = 0.01;
/// The table is extended until the profile drops below this value.
pub const TAIL_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub dimension: usize,
    pub exponent: f64,
    /// Coefficient `mu` of the equation the profile solves.
    pub coefficient: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub tail_amplitude: f64,
    pub tail_rate: f64,
    pub center_value: f64,
    /// Largest discrete ODE residual over the table.
    pub residual: f64,
    spline: MonotoneCubic,
}

/// Metadata written next to the profile CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub p: f64,
    pub n: usize,
    pub mu: f64,
    pub c_inf: f64,
    pub tail_rate: f64,
    pub r_tab: f64,
    pub center_value: f64,
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    pub tol: f64,
    pub step: f64,
    pub tail_cutoff: f64,
}

impl GroundStateOptions {
    pub fn with_tol(tol: f64) -> Self {
        GroundStateOptions { tol, step: DEFAULT_STEP, tail_cutoff: TAIL_CUTOFF }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    Overshoot,
    Undershoot,
}

fn critical_exponent(n: usize) -> f64 {
    if n <= 2 {
        f64::INFINITY
    } else {
        2.0 * n as f64 / (n as f64 - 2.0)
    }
}

fn nonlinearity(w: f64, p: f64, mu: f64) -> f64 {
    mu * w.abs().powf(p - 2.0) * w
}

/// Decaying solution shape of the linear far-field equation, with the first
/// correction of the modified Bessel asymptotics.
fn far_field(r: f64, n: usize) -> f64 {
    let nu = (n as f64 - 2.0) / 2.0;
    r.powf(-(n as f64 - 1.0) / 2.0) * (-r).exp() * (1.0 + (4.0 * nu * nu - 1.0) / (8.0 * r))
}

const SHOOT_START: f64 = 1e-4;

fn shoot_start(a: f64, p: f64, n: usize, mu: f64) -> [f64; 2] {
    let w2 = (a - nonlinearity(a, p, mu)) / (2.0 * n as f64);
    let r0 = SHOOT_START;
    [a + w2 * r0 * r0, 2.0 * w2 * r0]
}

fn shoot(a: f64, p: f64, n: usize, mu: f64, r_max: f64) -> (Shot, ode::Trajectory<2>) {
    let nf = n as f64;
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], -(nf - 1.0) / r * y[1] + y[0] - nonlinearity(y[0], p, mu)];
    let tol = Tolerances { rtol: 1e-13, atol: 1e-16, h_init: 1e-5, h_max: 0.05 };
    let mut verdict = None;
    let traj = ode::integrate(rhs, SHOOT_START, shoot_start(a, p, n, mu), r_max, tol, |_, y| {
        if y[0] < 0.0 {
            verdict = Some(Shot::Overshoot);
            true
        } else if y[1] > 0.0 {
            verdict = Some(Shot::Undershoot);
            true
        } else {
            false
        }
    });
    let v = verdict.unwrap_or(if traj.last().1[0] < 0.0 { Shot::Overshoot } else { Shot::Undershoot });
    (v, traj)
}

/// Bisection on the center value. Returns the final bracket.
pub fn shooting_center_value(p: f64, n: usize, mu: f64, width: f64) -> Result<(f64, f64)> {
    let equilibrium = mu.powf(-1.0 / (p - 2.0));
    let mut lo = equilibrium * (1.0 + 1e-3);
    if shoot(lo, p, n, mu, 60.0).0 != Shot::Undershoot {
        return Err(Error::Bracket(format!("lower shooting value {lo} does not undershoot")));
    }
    let mut hi = 2.0 * lo;
    let mut tries = 0;
    while shoot(hi, p, n, mu, 60.0).0 != Shot::Overshoot {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 40 {
            return Err(Error::Bracket(format!(
                "no overshooting center value found for p={p}, N={n}; p may be outside (2, 2*)"
            )));
        }
    }
    while hi - lo > width * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, p, n, mu, 60.0).0 {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
        }
    }
    Ok((lo, hi))
}

/// Solves the unit equation `-Delta w + w = w^{p-1}`.
pub fn solve_ground_state(p: f64, n: usize, tol: f64) -> Result<RadialProfile> {
    solve_equation(p, n, 1.0, GroundStateOptions::with_tol(tol))
}

/// Solves `-Delta u + u = mu u^{p-1}` directly.
pub fn solve_equation(p: f64, n: usize, mu: f64, opts: GroundStateOptions) -> Result<RadialProfile> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension {n} < 2")));
    }
    if !(p > 2.0 && p < critical_exponent(n)) {
        return Err(Error::Domain(format!("p={p} outside (2, 2*) for N={n}")));
    }
    if !(opts.tol > 0.0) || !(mu > 0.0) {
        return Err(Error::Domain("tolerance and coefficient must be positive".into()));
    }
    let (lo, hi) = shooting_center_value(p, n, mu, 1e-14)?;
    let a = 0.5 * (lo + hi);
    let (_, traj) = shoot(a, p, n, mu, 60.0);

    // Trust the shot while the profile is well above round-off amplification.
    let floor = 1e-6 * a;
    let mut last_ok = 0;
    for (k, y) in traj.y.iter().enumerate() {
        if y[0] > floor && y[1] <= 0.0 {
            last_ok = k;
        } else {
            break;
        }
    }
    let r_ok = traj.t[last_ok];
    let w_ok = traj.y[last_ok][0];
    let c_est = w_ok / far_field(r_ok, n);
    let mut r_tab = r_ok.ceil().max(5.0);
    while c_est * far_field(r_tab, n) >= 0.5 * opts.tail_cutoff {
        r_tab += 1.0;
    }
    let mut cells = (r_tab / opts.step).ceil() as usize;
    cells += cells % 2;
    let h = r_tab / cells as f64;
    let radii: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();

    let shot_r: Vec<f64> = traj.t[..=last_ok].to_vec();
    let shot_w: Vec<f64> = traj.y[..=last_ok].iter().map(|y| y[0]).collect();
    let shot_d: Vec<f64> = traj.y[..=last_ok].iter().map(|y| y[1]).collect();
    let shot = MonotoneCubic::new(shot_r, shot_w, shot_d);
    let mut w: Vec<f64> = radii
        .iter()
        .map(|&r| {
            if r <= SHOOT_START {
                a
            } else if r <= r_ok {
                shot.eval(r)
            } else {
                c_est * far_field(r, n)
            }
        })
        .collect();

    let disc = Discretization { n, p, mu, h, cells };
    let mut res = disc.residual(&w);
    let mut converged = false;
    for _ in 0..30 {
        let jac = disc.jacobian(&w);
        let lu = LuSolver::factor(&jac)?;
        let neg: Vec<f64> = res.iter().map(|v| -v).collect();
        let dw = lu.solve(&neg);
        let step = dw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (wi, di) in w.iter_mut().zip(&dw) {
            *wi += di;
        }
        res = disc.residual(&w);
        let rmax = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step < 1e-11 * a {
            converged = rmax < opts.tol;
            break;
        }
    }
    let residual = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !converged || residual >= opts.tol {
        return Err(Error::Convergence(format!("ground-state Newton polish stalled at residual {residual:e}")));
    }
    if w.iter().any(|v| *v <= 0.0) {
        return Err(Error::Convergence("polished profile lost positivity".into()));
    }
    let slopes = disc.first_derivative(&w);
    let tail_amplitude = tail_amplitude(&radii, &w, n);
    Ok(RadialProfile::assemble(n, p, mu, radii, w, slopes, tail_amplitude, residual))
}

struct Discretization {
    n: usize,
    p: f64,
    mu: f64,
    h: f64,
    cells: usize,
}

impl Discretization {
    /// Coefficients expressing the values at indices `-2..=cells+2` as linear
    /// combinations of unknowns: even reflection at 0, far-field ratio at the end.
    fn ghost(&self, k: isize) -> (usize, f64) {
        let m = self.cells as isize;
        if k < 0 {
            ((-k) as usize, 1.0)
        } else if k > m {
            let rm = m as f64 * self.h;
            let rk = k as f64 * self.h;
            (self.cells, far_field(rk, self.n) / far_field(rm, self.n))
        } else {
            (k as usize, 1.0)
        }
    }

    /// Stencil weights of `-w'' - (N-1)/r w'` at node `i` as (index, weight).
    fn linear_stencil(&self, i: usize) -> Vec<(usize, f64)> {
        let h2 = self.h * self.h;
        let nf = self.n as f64;
        let d2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        let d1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let mut out = Vec::with_capacity(5);
        for (o, off) in (-2isize..=2).enumerate() {
            let (j, c) = self.ghost(i as isize + off);
            let wgt = if i == 0 {
                // (N-1)/r w' -> (N-1) w'' at the origin.
                -nf * d2[o] / h2
            } else {
                let r = i as f64 * self.h;
                -d2[o] / h2 - (nf - 1.0) / r * d1[o] / self.h
            };
            out.push((j, c * wgt));
        }
        out
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        (0..=self.cells)
            .map(|i| {
                // Difference form keeps round-off proportional to the local variation.
                let st = self.linear_stencil(i);
                let csum: f64 = st.iter().map(|(_, c)| c).sum();
                let lin: f64 = st.iter().map(|(j, c)| c * (w[*j] - w[i])).sum::<f64>() + csum * w[i];
                lin + w[i] - nonlinearity(w[i], self.p, self.mu)
            })
            .collect()
    }

    fn jacobian(&self, w: &[f64]) -> CsrMatrix {
        let mut t = Vec::with_capacity(6 * (self.cells + 1));
        for i in 0..=self.cells {
            for (j, c) in self.linear_stencil(i) {
                t.push((i, j, c));
            }
            let dn = self.mu * (self.p - 1.0) * w[i].abs().powf(self.p - 2.0);
            t.push((i, i, 1.0 - dn));
        }
        CsrMatrix::from_triplets(self.cells + 1, self.cells + 1, &t)
    }

    fn first_derivative(&self, w: &[f64]) -> Vec<f64> {
        let d1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        (0..=self.cells)
            .map(|i| {
                (-2isize..=2)
                    .enumerate()
                    .map(|(o, off)| {
                        let (j, c) = self.ghost(i as isize + off);
                        c * d1[o] * w[j]
                    })
                    .sum::<f64>()
                    / self.h
            })
            .collect()
    }
}

/// Amplitude `c` of the far field `c r^{-(N-1)/2} e^{-r} (1 + (4 nu^2 - 1)/(8r))`,
/// averaged over the last decade of the table.
fn tail_amplitude(radii: &[f64], w: &[f64], n: usize) -> f64 {
    let (r_dec, _) = last_decade(radii, w);
    let vals: Vec<f64> = radii
        .iter()
        .zip(w)
        .filter(|(r, _)| **r >= r_dec)
        .map(|(r, v)| v / far_field(*r, n))
        .collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

fn last_decade(radii: &[f64], w: &[f64]) -> (f64, usize) {
    let end = *w.last().unwrap();
    let k = w.iter().rposition(|v| *v >= 10.0 * end).unwrap_or(0);
    (radii[k], k)
}

impl RadialProfile {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dimension: usize,
        exponent: f64,
        coefficient: f64,
        radii: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
        tail_amplitude: f64,
        residual: f64,
    ) -> Self {
        let spline = MonotoneCubic::new(radii.clone(), values.clone(), slopes.clone());
        let center_value = values[0];
        RadialProfile {
            dimension,
            exponent,
            coefficient,
            radii,
            values,
            slopes,
            tail_amplitude,
            tail_rate: 1.0,
            center_value,
            residual,
            spline,
        }
    }

    pub fn r_tab(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            p: self.exponent,
            n: self.dimension,
            mu: self.coefficient,
            c_inf: self.tail_amplitude,
            tail_rate: self.tail_rate,
            r_tab: self.r_tab(),
            center_value: self.center_value,
            residual: self.residual,
            samples: self.radii.len(),
        }
    }

    fn tail(&self, r: f64) -> (f64, f64) {
        let nf = self.dimension as f64;
        let half = (nf - 1.0) / 2.0;
        let c = ((nf - 2.0).powi(2) - 1.0) / 8.0;
        let base = self.tail_amplitude * r.powf(-half) * (-self.tail_rate * r).exp();
        let v = base * (1.0 + c / r);
        (v, -v * (self.tail_rate + half / r) - base * c / (r * r))
    }

    /// Profile value at radius `r >= 0`.
    pub fn evaluate(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.r_tab() {
            self.spline.eval(r)
        } else {
            self.tail(r).0
        }
    }

    /// Profile value and radial derivative.
    pub fn evaluate_with_derivative(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        if r <= self.r_tab() {
            self.spline.eval_with_derivative(r)
        } else {
            self.tail(r)
        }
    }

    /// Relative mismatch between table and analytic tail at `R_tab`.
    pub fn splice_mismatch(&self) -> f64 {
        let table = *self.values.last().unwrap();
        (self.tail(self.r_tab()).0 - table).abs() / table
    }

    /// Fitted exponential rate of `w r^{(N-1)/2}` over the last decade of the table.
    pub fn fitted_tail_rate(&self) -> f64 {
        let (_, k) = last_decade(&self.radii, &self.values);
        let half = (self.dimension as f64 - 1.0) / 2.0;
        let xs = &self.radii[k..];
        let ys: Vec<f64> = xs.iter().zip(&self.values[k..]).map(|(r, v)| (v * r.powf(half)).ln()).collect();
        -fit::line(xs, &ys).slope
    }

    /// Composite Simpson rule of `g(r, w, w') r^{N-1}` over the table, times the sphere area.
    fn radial_integral<G: Fn(f64, f64, f64) -> f64>(&self, g: G) -> f64 {
        let nm1 = self.dimension as i32 - 1;
        let m = self.radii.len() - 1;
        let h = self.radii[1] - self.radii[0];
        let mut s = 0.0;
        for i in 0..=m {
            let wgt = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let r = self.radii[i];
            s += wgt * g(r, self.values[i], self.slopes[i]) * r.powi(nm1);
        }
        s * h / 3.0 * sphere_area(self.dimension)
    }

    /// `int_{R^N} w^q`.
    pub fn power_integral(&self, q: f64) -> f64 {
        self.radial_integral(|_, w, _| w.powf(q))
    }

    /// `int_{R^N} |grad w|^2`.
    pub fn gradient_integral(&self) -> f64 {
        self.radial_integral(|_, _, d| d * d)
    }

    /// `1/2 int(|grad w|^2 + w^2) - mu/p int w^p`.
    pub fn action(&self) -> f64 {
        0.5 * (self.gradient_integral() + self.power_integral(2.0))
            - self.coefficient / self.exponent * self.power_integral(self.exponent)
    }

    /// Smallest modulus of an eigenvalue of the discrete radial linearization,
    /// estimated by inverse power iteration.
    pub fn radial_kernel_gap(&self) -> Result<f64> {
        let h = self.radii[1] - self.radii[0];
        let disc = Discretization {
            n: self.dimension,
            p: self.exponent,
            mu: self.coefficient,
            h,
            cells: self.radii.len() - 1,
        };
        let jac = disc.jacobian(&self.values);
        let lu = LuSolver::factor(&jac)?;
        let mut x: Vec<f64> = self.values.clone();
        let mut est = 0.0;
        for _ in 0..60 {
            let y = lu.solve(&x);
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            est = nx / ny;
            x = y.iter().map(|v| v / ny).collect();
        }
        Ok(est)
    }
}

/// Rescales a solution of the unit equation to solve `-Delta u + u = mu u^{p-1}`.
pub fn scale_profile(base: &RadialProfile, mu: f64) -> Result<RadialProfile> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("scaling coefficient mu={mu} must be positive")));
    }
    let k = mu.powf(1.0 / (2.0 - base.exponent));
    let total = base.coefficient * mu;
    Ok(RadialProfile::assemble(
        base.dimension,
        base.exponent,
        total,
        base.radii.clone(),
        base.values.iter().map(|v| k * v).collect(),
        base.slopes.iter().map(|v| k * v).collect(),
        k * base.tail_amplitude,
        k * base.residual,
    ))
}

/// Maximum residual of the discrete equation for the profile's own coefficient.
pub fn equation_residual(profile: &RadialProfile) -> f64 {
    let h = profile.radii[1] - profile.radii[0];
    let disc = Discretization {
        n: profile.dimension,
        p: profile.exponent,
        mu: profile.coefficient,
        h,
        cells: profile.radii.len() - 1,
    };
    disc.residual(&profile.values).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `int_{R^N} w(|x|)^{p-1} w(|x - d e_1|) dx` by nested adaptive quadrature.
pub fn interaction_integral(profile: &RadialProfile, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("interaction distance d={d} must be positive")));
    }
    let n = profile.dimension;
    let p = profile.exponent;
    let ang = sphere_area(n - 1);
    let pi = std::f64::consts::PI;
    let mut ok = true;
    let inner = |r: f64| -> f64 {
        let res = quadrature::integrate(
            |t: f64| {
                let s = (r * r + d * d - 2.0 * r * d * t.cos()).max(0.0).sqrt();
                t.sin().powi(n as i32 - 2) * profile.evaluate(s)
            },
            0.0,
            pi,
            0.0,
            1e-11,
        );
        res.value
    };
    let r_end = profile.r_tab();
    let mut breaks = vec![0.0];
    for b in [d, 1.0, 4.0] {
        if b < r_end && b > 0.0 {
            breaks.push(b);
        }
    }
    breaks.push(r_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let outer = quadrature::integrate_pieces(
        |r: f64| {
            if r == 0.0 && n > 1 {
                return 0.0;
            }
            ang * r.powi(n as i32 - 1) * profile.evaluate(r).powf(p - 1.0) * inner(r)
        },
        &breaks,
        0.0,
        1e-10,
    );
    ok &= outer.converged;
    if !ok {
        return Err(Error::Convergence(format!("interaction quadrature at d={d} did not converge")));
    }
    Ok(outer.value)
}

/// Fits `log I(d) = log k - lambda d - (N-1)/2 log d` over the given distances.
/// Returns `(k, lambda)`.
pub fn interaction_tail_fit(profile: &RadialProfile, distances: &[f64]) -> Result<(f64, f64)> {
    let half = (profile.dimension as f64 - 1.0) / 2.0;
    let mut ys = Vec::with_capacity(distances.len());
    for &d in distances {
        ys.push(interaction_integral(profile, d)?.ln() + half * d.ln());
    }
    let f = fit::line(distances, &ys);
    Ok((f.intercept.exp(), -f.slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn w4() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| solve_ground_state(4.0, 2, 1e-10).unwrap())
    }

    /// Plain RK4 shooting at a fixed step, bisected on the center value.
    fn fixed_step_shooting_oracle(p: f64, step: f64) -> f64 {
        let f = |r: f64, w: f64, d: f64| -d / r + w - w.powf(p - 1.0);
        let classify = |a: f64| -> bool {
            let mut r = 1e-4;
            let w2 = (a - a.powf(p - 1.0)) / 4.0;
            let (mut w, mut d) = (a + w2 * r * r, 2.0 * w2 * r);
            while r < 30.0 {
                let (k1w, k1d) = (d, f(r, w, d));
                let (k2w, k2d) = (d + 0.5 * step * k1d, f(r + 0.5 * step, w + 0.5 * step * k1w, d + 0.5 * step * k1d));
                let (k3w, k3d) = (d + 0.5 * step * k2d, f(r + 0.5 * step, w + 0.5 * step * k2w, d + 0.5 * step * k2d));
                let (k4w, k4d) = (d + step * k3d, f(r + step, w + step * k3w, d + step * k3d));
                w += step / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
                d += step / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
                r += step;
                if w < 0.0 {
                    return true;
                }
                if d > 0.0 {
                    return false;
                }
            }
            w < 0.0
        };
        let (mut lo, mut hi) = (1.5, 3.0);
        for _ in 0..45 {
            let mid = 0.5 * (lo + hi);
            if classify(mid) {
                hi = mid
            } else {
                lo = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn center_value_matches_fixed_step_oracle() {
        let oracle = fixed_step_shooting_oracle(4.0, 1e-5);
        let w = w4();
        assert!((w.center_value - oracle).abs() < 5e-7 * oracle, "{} vs {}", w.center_value, oracle);
    }

    #[test]
    fn profile_is_positive_and_decreasing() {
        let w = w4();
        assert!(w.values.iter().all(|v| *v > 0.0));
        assert!(w.slopes[1..].iter().all(|d| *d < 0.0));
        assert!(w.values.windows(2).all(|p| p[1] < p[0]));
        assert!(w.residual < 1e-10);
        assert!(*w.values.last().unwrap() < TAIL_CUTOFF);
    }

    #[test]
    fn tail_rate_and_splice() {
        let w = w4();
        assert!((w.fitted_tail_rate() - 1.0).abs() < 0.02);
        assert!(w.splice_mismatch() < 0.01);
        let r = w.r_tab() + 5.0;
        let expect = w.tail_amplitude * r.powf(-0.5) * (-r).exp() * (1.0 - 1.0 / (8.0 * r));
        assert_eq!(w.evaluate(r), expect);
        assert_eq!(w.evaluate(0.0), w.center_value);
        assert_eq!(w.evaluate(w.r_tab()), *w.values.last().unwrap());
    }

    #[test]
    fn tail_amplitude_matches_bessel_asymptotics() {
        // W ~ k K_0(r) with K_0(r) ~ sqrt(pi/(2r)) e^{-r}; k from the table.
        let w = w4();
        let r = 10.0;
        let k0 = (std::f64::consts::PI / (2.0 * r)).sqrt() * (-r).exp() * (1.0 - 1.0 / (8.0 * r) + 9.0 / (128.0 * r * r));
        let k = w.evaluate(r) / k0;
        let c_from_k = k * (std::f64::consts::PI / 2.0).sqrt();
        assert!((c_from_k - w.tail_amplitude).abs() < 3e-3 * w.tail_amplitude);
    }

    #[test]
    fn nehari_identity() {
        let w = w4();
        let p = w.exponent;
        let lhs = w.action();
        let rhs = (0.5 - 1.0 / p) * w.power_integral(p);
        assert!((lhs - rhs).abs() < 1e-8 * rhs.abs());
    }

    #[test]
    fn pohozaev_identity_plane() {
        // In R^2: int w^2 = (2/p) int w^p.
        let w = w4();
        let lhs = w.power_integral(2.0);
        let rhs = 2.0 / w.exponent * w.power_integral(w.exponent);
        assert!((lhs - rhs).abs() < 1e-8 * lhs);
    }

    #[test]
    fn cubic_case_residual() {
        let w = solve_ground_state(3.0, 2, 1e-10).unwrap();
        assert!(w.residual < 1e-10);
        assert!(w.power_integral(2.0).is_finite());
    }

    #[test]
    fn three_dimensional_cubic() {
        let w = solve_ground_state(4.0, 3, 1e-10).unwrap();
        assert!(w.values.windows(2).all(|p| p[1] < p[0]));
        let p = w.exponent;
        let rhs = (0.5 - 1.0 / p) * w.power_integral(p);
        assert!((w.action() - rhs).abs() < 1e-7 * rhs);
    }

    #[test]
    fn supercritical_rejected() {
        assert!(matches!(solve_ground_state(7.0, 3, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(solve_ground_state(2.0, 2, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn scaling_identity_and_center() {
        let w = w4();
        let same = scale_profile(w, 1.0).unwrap();
        assert_eq!(same.values, w.values);
        let s = scale_profile(w, 2.0).unwrap();
        assert!((s.center_value - w.center_value / 2f64.sqrt()).abs() < 1e-15);
        assert!(equation_residual(&s) < 1e-10);
        assert!(scale_profile(w, 0.0).is_err());
    }

    #[test]
    fn scaling_commutes_with_solving() {
        let w = w4();
        let s = scale_profile(w, 2.0).unwrap();
        let direct = solve_equation(4.0, 2, 2.0, GroundStateOptions::with_tol(1e-10)).unwrap();
        for r in [0.0, 0.5, 1.0, 3.0, 7.0, 15.0] {
            assert!((s.evaluate(r) - direct.evaluate(r)).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn nondegenerate_radial_linearization() {
        assert!(w4().radial_kernel_gap().unwrap() > 0.05);
    }

    #[test]
    fn interaction_small_distance_limit() {
        let w = w4();
        let i0 = interaction_integral(w, 1e-7).unwrap();
        let full = w.power_integral(4.0);
        assert!((i0 - full).abs() < 1e-6 * full);
    }

    #[test]
    fn interaction_decay_ratio() {
        let w = w4();
        let mut prev = interaction_integral(w, 10.0).unwrap();
        for d in 11..=20 {
            let d = d as f64;
            let cur = interaction_integral(w, d).unwrap();
            let ratio = cur / prev;
            let asym = (-1.0f64).exp() * ((d - 1.0) / d).sqrt();
            assert!((ratio / asym - 1.0).abs() < 0.02, "d={d} ratio {ratio} asym {asym}");
            assert!(cur > 0.0);
            prev = cur;
        }
        let (_, rate) = interaction_tail_fit(w, &[12.0, 14.0, 16.0, 18.0]).unwrap();
        assert!((rate - 1.0).abs() < 0.01);
    }
}
