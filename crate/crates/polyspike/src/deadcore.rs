//! Dead cores: the radial problem `-Δw + w^σ' = 0` in the unit ball with
//! `w = c` on the boundary, the boundary value `c_τ` producing a prescribed
//! core, the explicit power supersolution, and detection of vanishing regions
//! in constructed two-dimensional fields.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::fundamental_sector;
use crate::numerics::fit;
use crate::numerics::ode::{self, Tolerances};
use crate::problem::Problem;

/// Exponent `q0 = 2 / (1 - σ')` of the profile at the free boundary.
pub fn front_exponent(sigma_prime: f64) -> f64 {
    2.0 / (1.0 - sigma_prime)
}

/// `k` in `w ≈ k (r - r0)^q0` near the free boundary.
pub fn front_coefficient(sigma_prime: f64) -> f64 {
    let q = front_exponent(sigma_prime);
    (q * (q - 1.0)).powf(-1.0 / (1.0 - sigma_prime))
}

/// Target core radius `(m + τ) / (m + 3τ/2)`.
pub fn core_target(m: f64, tau: f64) -> f64 {
    (m + tau) / (m + 1.5 * tau)
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialDeadCore {
    pub sigma_prime: f64,
    pub c: f64,
    pub dimension: usize,
    #[serde(skip)]
    pub radii: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub core_radius: f64,
    /// Relative stationarity residual on the positive set.
    pub residual: f64,
    pub iterations: usize,
}

struct RadialFem {
    r: Vec<f64>,
    /// `int_e r^{N-1} / h_e^2` per element.
    stiff: Vec<f64>,
    mass: Vec<f64>,
    sigma: f64,
}

impl RadialFem {
    fn new(r: Vec<f64>, dim: usize, sigma: f64) -> Self {
        let ne = r.len() - 1;
        let mut stiff = vec![0.0; ne];
        let mut mass = vec![0.0; r.len()];
        let d = dim as f64;
        for e in 0..ne {
            let (a, b) = (r[e], r[e + 1]);
            let h = b - a;
            let vol = (b.powf(d) - a.powf(d)) / d;
            stiff[e] = vol / (h * h);
            // Exact hat-function moments of r^{N-1} on the element.
            let (ma, mb) = hat_moments(a, b, dim);
            mass[e] += ma;
            mass[e + 1] += mb;
        }
        RadialFem { r, stiff, mass, sigma }
    }

    fn energy(&self, w: &[f64]) -> f64 {
        let s = self.sigma;
        let grad: f64 = self.stiff.iter().enumerate().map(|(e, k)| 0.5 * k * (w[e + 1] - w[e]).powi(2)).sum();
        let pot: f64 = self.mass.iter().zip(w).map(|(m, x)| m * x.abs().powf(1.0 + s) / (1.0 + s)).sum();
        grad + pot
    }

    /// `max |g_i|` over free nodes against the largest balanced term; clipped nodes only count if they should grow.
    fn relative_residual(&self, w: &[f64], g: &[f64]) -> f64 {
        let n = w.len();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n - 1 {
            let mut t = self.mass[i] * w[i].max(0.0).powf(self.sigma);
            if i > 0 {
                t += self.stiff[i - 1] * (w[i] - w[i - 1]).abs();
            }
            t += self.stiff[i] * (w[i + 1] - w[i]).abs();
            den = den.max(t);
            num = num.max(if w[i] > 0.0 { g[i].abs() } else { (-g[i]).max(0.0) });
        }
        num / den.max(f64::MIN_POSITIVE)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.mass.iter().zip(w).map(|(m, x)| m * x.max(0.0).powf(self.sigma)).collect();
        for (e, k) in self.stiff.iter().enumerate() {
            let d = k * (w[e + 1] - w[e]);
            g[e] -= d;
            g[e + 1] += d;
        }
        g
    }

    /// Forward sweep of the nodal equations from `w_{j-1} = 0`, `w_j = t`.
    fn shoot(&self, j: usize, t: f64) -> Vec<f64> {
        let n = self.r.len();
        let mut w = vec![0.0; n];
        w[j] = t;
        for i in j..n - 1 {
            let left = if i > 0 { self.stiff[i - 1] * (w[i] - w[i - 1]) } else { 0.0 };
            w[i + 1] = w[i] + (left + self.mass[i] * w[i].powf(self.sigma)) / self.stiff[i];
            if !w[i + 1].is_finite() || w[i + 1] > 1e300 {
                w[i + 1..].iter_mut().for_each(|v| *v = f64::INFINITY);
                break;
            }
        }
        w
    }

    /// Value at node `j` whose forward sweep lands on `c`; the sweep is increasing in it.
    fn shooting_start(&self, j: usize, c: f64) -> f64 {
        let n = self.r.len();
        if j == n - 1 {
            return c;
        }
        let (mut lo, mut hi) = (f64::MIN_POSITIVE.ln(), c.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.shoot(j, mid.exp())[n - 1] < c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }
}

fn hat_moments(a: f64, b: f64, dim: usize) -> (f64, f64) {
    // Three-point Gauss on the element is exact for the N = 2, 3 integrands.
    let h = b - a;
    let nodes = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let (mut ma, mut mb) = (0.0, 0.0);
    for (x, wt) in nodes {
        let t = 0.5 * (x + 1.0);
        let r = a + t * h;
        let f = r.powi(dim as i32 - 1) * 0.5 * h * wt;
        ma += (1.0 - t) * f;
        mb += t * f;
    }
    (ma, mb)
}

/// Radial mesh: uniform fine layer of width `4δ` at the boundary plus a coarse interior.
fn radial_mesh(c: f64, sigma_prime: f64, fine: usize) -> Vec<f64> {
    let delta = (c / front_coefficient(sigma_prime)).powf(1.0 / front_exponent(sigma_prime));
    let width = (4.0 * delta).min(1.0);
    let mut r = Vec::new();
    if width < 1.0 {
        let coarse = 200;
        let start = 1.0 - width;
        for i in 0..coarse {
            r.push(start * i as f64 / coarse as f64);
        }
        for i in 0..=fine {
            r.push(start + width * i as f64 / fine as f64);
        }
    } else {
        for i in 0..=fine {
            r.push(i as f64 / fine as f64);
        }
    }
    r
}

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper.first().copied().unwrap_or(0.0) / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / den;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Minimizes `(1/2)∫|w'|² r^{N-1} + (1/(1+σ'))∫|w|^{1+σ'} r^{N-1}` with `w(1) = c` by projected Newton.
pub fn solve_radial_sublinear(c: f64, sigma_prime: f64, dimension: usize, tol: f64) -> Result<RadialDeadCore> {
    solve_radial_on(c, sigma_prime, dimension, tol, 4000)
}

pub fn solve_radial_on(c: f64, sigma_prime: f64, dimension: usize, tol: f64, fine: usize) -> Result<RadialDeadCore> {
    if !(c >= 0.0) {
        return Err(Error::config("c", format!("boundary value must be nonnegative, got {c}")));
    }
    if !(sigma_prime > 0.0 && sigma_prime < 1.0) {
        return Err(Error::config("sigma_prime", format!("must lie in (0, 1), got {sigma_prime}")));
    }
    if c == 0.0 {
        let r: Vec<f64> = (0..=fine).map(|i| i as f64 / fine as f64).collect();
        let n = r.len();
        return Ok(RadialDeadCore { sigma_prime, c, dimension, radii: r, values: vec![0.0; n], core_radius: 1.0, residual: 0.0, iterations: 0 });
    }
    let r = radial_mesh(c, sigma_prime, fine);
    let fem = RadialFem::new(r, dimension, sigma_prime);
    let n = fem.r.len();

    // Outermost first positive node whose shooting value is still negligible against c.
    let dead = 1e-13 * c;
    let mut j = 0;
    let mut t = fem.shooting_start(0, c);
    if t <= dead {
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if fem.shooting_start(mid, c) <= dead {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        j = lo;
        t = fem.shooting_start(j, c);
    }
    let mut w = fem.shoot(j, t);
    for v in w.iter_mut() {
        *v = v.min(c);
    }
    w[n - 1] = c;

    // Newton polish on the positive nodes, zeros held inside the core.
    let mut energy = fem.energy(&w);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..50 {
        iterations = it;
        let g = fem.gradient(&w);
        residual = fem.relative_residual(&w, &g);
        log::trace!("radial c={c:e} j={j} it={it} residual={residual:.3e}");
        if residual < tol {
            break;
        }
        let m = n - 1 - j;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        for i in 0..m {
            let node = j + i;
            if node > 0 {
                diag[i] += fem.stiff[node - 1];
            }
            diag[i] += fem.stiff[node];
            if i + 1 < m {
                off[i] = -fem.stiff[node];
            }
            diag[i] += fem.mass[node] * sigma_prime * w[node].max(f64::MIN_POSITIVE).powf(sigma_prime - 1.0);
        }
        let rhs: Vec<f64> = g[j..n - 1].iter().map(|v| -v).collect();
        let d = solve_tridiagonal(&off, &diag, &off, &rhs);
        let mut alpha = 1.0;
        let mut improved = false;
        while alpha > 1e-12 {
            let mut trial = w.clone();
            for i in 0..m {
                let node = j + i;
                trial[node] = (w[node] + alpha * d[i]).max(0.1 * w[node]);
            }
            let e = fem.energy(&trial);
            if e <= energy + 1e-14 * energy.abs() {
                w = trial;
                energy = e;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !(residual < tol) {
        return Err(Error::Convergence(format!("radial sublinear solve at c={c:.6e}: residual {residual:.3e} above {tol:.1e}")));
    }
    let core_radius = estimate_core_radius(&fem.r, &w, c, sigma_prime);
    Ok(RadialDeadCore { sigma_prime, c, dimension, radii: fem.r, values: w, core_radius, residual, iterations })
}

/// Free-boundary location from a quadratic fit of `w^{1/q0}` just outside the core.
fn estimate_core_radius(r: &[f64], w: &[f64], c: f64, sigma_prime: f64) -> f64 {
    if w[0] > 1e-6 * c {
        return 0.0;
    }
    let q0 = front_exponent(sigma_prime);
    let (lo, hi) = (1e-10 * c, 1e-4 * c);
    let pts: Vec<(f64, f64)> = r.iter().zip(w).filter(|(_, v)| **v >= lo && **v <= hi).map(|(x, v)| (*x, v.powf(1.0 / q0))).collect();
    let first_positive = r.iter().zip(w).find(|(_, v)| **v > lo).map(|(x, _)| *x).unwrap_or(1.0);
    if pts.len() < 5 {
        return first_positive;
    }
    let x0 = pts[0].0;
    let rows: Vec<Vec<f64>> = pts.iter().map(|(x, _)| vec![1.0, x - x0, (x - x0).powi(2)]).collect();
    let b: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let Some(f) = fit::least_squares(&rows, &b) else {
        return first_positive;
    };
    let (a0, a1, a2) = (f.coefficients[0], f.coefficients[1], f.coefficients[2]);
    // Root of a0 + a1 t + a2 t^2 nearest to the fitted window.
    let t = if a2.abs() < 1e-300 {
        -a0 / a1
    } else {
        let disc = (a1 * a1 - 4.0 * a2 * a0).max(0.0).sqrt();
        let t1 = (-a1 + disc) / (2.0 * a2);
        let t2 = (-a1 - disc) / (2.0 * a2);
        if (t1 - (-a0 / a1)).abs() < (t2 - (-a0 / a1)).abs() { t1 } else { t2 }
    };
    (x0 + t).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CTau {
    pub target: f64,
    /// Largest tested boundary value whose core reaches the target.
    pub c_tau: f64,
    /// Smallest tested boundary value whose core misses it.
    pub c_above: f64,
    pub core_at_c_tau: f64,
    pub core_above: f64,
    pub bisections: usize,
}

/// Bisection in `log c` for the largest `c` with `core_radius >= (m+τ)/(m+3τ/2)`.
pub fn find_c_tau(tau: f64, m: f64, sigma_prime: f64, dimension: usize) -> Result<CTau> {
    let target = core_target(m, tau);
    let tol = 1e-10;
    let core = |c: f64| solve_radial_sublinear(c, sigma_prime, dimension, tol).map(|s| s.core_radius);
    let (mut lo, mut hi) = (1e-40f64, 1.0f64);
    let (mut core_lo, mut core_hi) = (core(lo)?, core(hi)?);
    if !(core_lo >= target && core_hi < target) {
        return Err(Error::Bracket(format!(
            "core radius does not cross {target} on c in [{lo:e}, {hi:e}] (cores {core_lo}, {core_hi})"
        )));
    }
    let mut bisections = 0;
    while hi / lo - 1.0 > 1e-7 {
        let mid = (lo * hi).sqrt();
        let cm = core(mid)?;
        if cm >= target {
            lo = mid;
            core_lo = cm;
        } else {
            hi = mid;
            core_hi = cm;
        }
        bisections += 1;
        if bisections > 400 {
            return Err(Error::Convergence("c_tau bisection did not close".into()));
        }
    }
    Ok(CTau { target, c_tau: lo, c_above: hi, core_at_c_tau: core_lo, core_above: core_hi, bisections })
}

/// Boundary value reached by shooting from a free boundary at `r0`.
pub fn shooting_boundary_value(r0: f64, sigma_prime: f64, dimension: usize) -> f64 {
    let q0 = front_exponent(sigma_prime);
    let k = front_coefficient(sigma_prime);
    let eps = 1e-5 * (1.0 - r0).max(1e-12);
    let start = r0 + eps;
    let y0 = [k * eps.powf(q0), k * q0 * eps.powf(q0 - 1.0)];
    let d = dimension as f64 - 1.0;
    let span = 1.0 - start;
    let tolerances = Tolerances { rtol: 1e-12, atol: 1e-300, h_init: eps * 1e-2, h_max: span / 50.0 };
    let traj = ode::integrate(
        |r, y: &[f64; 2]| [y[1], y[0].max(0.0).powf(sigma_prime) - d / r * y[1]],
        start,
        y0,
        1.0,
        tolerances,
        |_, _| false,
    );
    traj.last().1[0]
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionCertificate {
    pub a: f64,
    pub q: f64,
    /// `(1-a)^{qσ'+2-q} - q(N-1)(1-a) - q(q-1)`.
    pub bracket: f64,
    /// Minimum of `(-Δw̄ + w̄^σ') / (r-a)^{q-2}` over a fine grid of `(a, 1]`.
    pub exact_min: f64,
    pub pass: bool,
}

/// Checks the power supersolution `w̄ = ((|x| - a)_+)^q`.
pub fn certify_supersolution(a: f64, q: f64, sigma_prime: f64, dimension: usize) -> Result<SupersolutionCertificate> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::config("a", format!("must lie in (0, 1), got {a}")));
    }
    if !(q > front_exponent(sigma_prime)) {
        return Err(Error::config("q", format!("must exceed 2/(1-sigma')={}, got {q}", front_exponent(sigma_prime))));
    }
    let nm1 = dimension as f64 - 1.0;
    let bracket = (1.0 - a).powf(q * sigma_prime + 2.0 - q) - q * nm1 * (1.0 - a) - q * (q - 1.0);
    let samples = 20000;
    let mut exact_min = f64::INFINITY;
    for i in 1..=samples {
        let r = a + (1.0 - a) * i as f64 / samples as f64;
        let t = r - a;
        let v = -(q * nm1 / r) * t - q * (q - 1.0) + t.powf(q * sigma_prime + 2.0 - q);
        exact_min = exact_min.min(v);
    }
    Ok(SupersolutionCertificate { a, q, bracket, exact_min, pass: bracket >= 0.0 && exact_min >= 0.0 })
}

/// Smallest `q` on a grid above `2/(1-σ')` whose certificate passes.
pub fn smallest_certified_q(a: f64, sigma_prime: f64, dimension: usize, step: f64) -> Result<f64> {
    let mut q = front_exponent(sigma_prime) + step;
    while q < 200.0 {
        if certify_supersolution(a, q, sigma_prime, dimension)?.pass {
            return Ok(q);
        }
        q += step;
    }
    Err(Error::Bracket(format!("no certified q below 200 for a={a}")))
}

/// `ell^{-m/(2(1-σ'))} ((2m+3τ) ln ell)^{2/(1-σ')}`.
pub fn envelope_scale(ell: f64, m: f64, tau: f64, sigma_prime: f64) -> f64 {
    ell.powf(-m / (2.0 * (1.0 - sigma_prime))) * ((2.0 * m + 3.0 * tau) * ell.ln()).powf(2.0 / (1.0 - sigma_prime))
}

/// Max relative residual of `-Δw_ℓ + 16 ell^{-m/2} w_ℓ^σ'` for the rescaled unit solution,
/// on the fine layer of the radial mesh.
pub fn scaling_residual(sol: &RadialDeadCore, ell: f64, m: f64, tau: f64) -> f64 {
    let big_r = (2.0 * m + 3.0 * tau) / 4.0 * ell.ln();
    let lam = envelope_scale(ell, m, tau, sol.sigma_prime);
    let coef = 16.0 * ell.powf(-m / 2.0);
    let d = sol.dimension as f64 - 1.0;
    let x: Vec<f64> = sol.radii.iter().map(|r| r * big_r).collect();
    let y: Vec<f64> = sol.values.iter().map(|w| lam * w).collect();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 1..x.len() - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        if (h0 - h1).abs() > 1e-9 * h1 || y[i] <= 0.0 {
            continue;
        }
        let lap = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h1 * h1) + d / x[i] * (y[i + 1] - y[i - 1]) / (2.0 * h1);
        let absorb = coef * y[i].powf(sol.sigma_prime);
        worst = worst.max((-lap + absorb).abs());
        scale = scale.max(absorb);
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeadCoreReport {
    pub ball_radius: f64,
    /// Sup of `u` over the balls around the y-vertices, and of `v` around the x-vertices.
    pub u_sup_near_y: f64,
    pub v_sup_near_x: f64,
    /// Largest radius around each folded vertex on which the field stays below the threshold.
    pub u_free_radius_y: Vec<f64>,
    pub v_free_radius_x: Vec<f64>,
    pub u_sup_outer: f64,
    pub v_sup_inner: f64,
    pub threshold: f64,
    pub envelope: f64,
    /// Area of `{u > threshold} ∩ {v > threshold}` over the plane.
    pub overlap_area: f64,
    pub pass_zero: bool,
    pub pass_envelope: bool,
}

/// Measures vanishing of `u` near the y-ring and of `v` near the x-ring.
pub fn detect_dead_cores(pb: &Problem, u: &[f64], v: &[f64], solver_tol: f64, c_tau: f64) -> Result<DeadCoreReport> {
    let c = &pb.config;
    let l = pb.ell();
    let ball = (c.m + c.tau) / 2.0 * l.ln();
    let shift = (c.m * c.tau / 2.0).sqrt() * l.ln();
    let reach = c.rho + ball;
    if reach > pb.grid.r_inf {
        return Err(Error::Grid(format!("detection radius {reach} exceeds grid extent {}", pb.grid.r_inf)));
    }
    let threshold = 10.0 * solver_tol;
    let (dx, dy) = pb.center_distances();
    let sup_where = |f: &[f64], pred: &dyn Fn(usize) -> bool| (0..pb.n()).filter(|&a| pred(a)).fold(0.0f64, |m, a| m.max(f[a].abs()));
    let u_sup_near_y = sup_where(u, &|a| dy[a] < ball);
    let v_sup_near_x = sup_where(v, &|a| dx[a] < ball);
    let u_sup_outer = sup_where(u, &|a| pb.grid.radius[a] > c.rho - shift);
    let v_sup_inner = sup_where(v, &|a| pb.grid.radius[a] < c.r + shift);
    let sector = fundamental_sector(c.ell);
    let reps = |centers: &[[f64; 2]]| {
        let mut out: Vec<[f64; 2]> = Vec::new();
        for &p in centers {
            let f = sector.fold(p);
            if !out.iter().any(|q| (q[0] - f[0]).hypot(q[1] - f[1]) < 1e-9) {
                out.push(f);
            }
        }
        out
    };
    let free_radius = |f: &[f64], centers: &[[f64; 2]]| -> Vec<f64> {
        reps(centers)
            .iter()
            .map(|q| {
                (0..pb.n())
                    .filter(|&a| f[a].abs() > threshold)
                    .map(|a| (pb.grid.x[a] - q[0]).hypot(pb.grid.y[a] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    let overlap_area = pb.grid.copies() * (0..pb.n()).filter(|&a| u[a] > threshold && v[a] > threshold).map(|a| pb.grid.weights[a]).sum::<f64>();
    let envelope = c_tau * envelope_scale(l, c.m, c.tau, c.sigma_prime);
    Ok(DeadCoreReport {
        ball_radius: ball,
        u_sup_near_y,
        v_sup_near_x,
        u_free_radius_y: free_radius(u, &pb.y_centers),
        v_free_radius_x: free_radius(v, &pb.x_centers),
        u_sup_outer,
        v_sup_inner,
        threshold,
        envelope,
        overlap_area,
        pass_zero: u_sup_near_y <= threshold && v_sup_near_x <= threshold,
        pass_envelope: u_sup_near_y <= threshold.max(envelope) && v_sup_near_x <= threshold.max(envelope),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_boundary_gives_zero() {
        let s = solve_radial_sublinear(0.0, 0.5, 2, 1e-10).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
        assert_eq!(s.core_radius, 1.0);
    }

    #[test]
    fn large_boundary_value_has_no_core() {
        let s = solve_radial_sublinear(10.0, 0.5, 2, 1e-10).unwrap();
        assert_eq!(s.core_radius, 0.0);
        assert!(s.values[0] > 1.0);
        // Independent shooting from the center.
        let w0 = s.values[0];
        let traj = ode::integrate(
            |r, y: &[f64; 2]| [y[1], y[0].max(0.0).sqrt() - y[1] / r],
            1e-6,
            [w0 + w0.sqrt() * 0.25e-12, w0.sqrt() * 0.5e-6],
            1.0,
            Tolerances::default(),
            |_, _| false,
        );
        assert!((traj.last().1[0] - 10.0).abs() < 1e-4, "{}", traj.last().1[0]);
    }

    #[test]
    fn solution_is_monotone_with_monotone_flux() {
        let s = solve_radial_sublinear(1e-4, 0.5, 2, 1e-10).unwrap();
        for w in s.values.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let flux: Vec<f64> = s
            .radii
            .windows(2)
            .zip(s.values.windows(2))
            .map(|(r, w)| 0.5 * (r[0] + r[1]) * (w[1] - w[0]) / (r[1] - r[0]))
            .collect();
        for f in flux.windows(2) {
            assert!(f[1] >= f[0] - 1e-12 * f[1].abs().max(1e-300));
        }
    }

    #[test]
    fn core_matches_shooting() {
        for c in [1e-6, 1e-4, 1e-3] {
            let s = solve_radial_sublinear(c, 0.5, 2, 1e-10).unwrap();
            assert!(s.core_radius > 0.0 && s.core_radius < 1.0);
            let back = shooting_boundary_value(s.core_radius, 0.5, 2);
            assert!((back / c - 1.0).abs() < 1e-3, "c={c} back={back}");
        }
    }

    #[test]
    fn core_radius_decreases_with_c() {
        let cores: Vec<f64> = [1e-8, 1e-6, 1e-4, 1e-2, 1.0]
            .iter()
            .map(|&c| solve_radial_sublinear(c, 0.5, 2, 1e-10).unwrap().core_radius)
            .collect();
        for w in cores.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn supersolution_threshold() {
        let a = core_target(2.0, 0.03);
        assert!(!certify_supersolution(a, 4.01, 0.5, 2).unwrap().pass);
        assert!(certify_supersolution(a, 8.0, 0.5, 2).unwrap().pass);
        assert!(certify_supersolution(a, 4.0, 0.5, 2).is_err());
        // Single crossing.
        let passes: Vec<bool> = (0..60).map(|i| certify_supersolution(a, 4.05 + 0.1 * i as f64, 0.5, 2).unwrap().pass).collect();
        let flips = passes.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1);
    }

    #[test]
    fn solution_lies_below_certified_supersolution() {
        let a = 0.9;
        let q = smallest_certified_q(a, 0.5, 2, 0.05).unwrap();
        let c = (1.0 - a).powf(q);
        let s = solve_radial_sublinear(c, 0.5, 2, 1e-10).unwrap();
        for (r, w) in s.radii.iter().zip(&s.values) {
            assert!(*w <= (r - a).max(0.0).powf(q) * (1.0 + 1e-9) + 1e-300);
        }
    }

    #[test]
    fn envelope_rescaling_is_a_solution() {
        let s = solve_radial_sublinear(1e-6, 0.5, 2, 1e-10).unwrap();
        assert!(scaling_residual(&s, 12.0, 2.0, 0.03) < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn solutions_are_nonnegative_and_hit_boundary(lc in -9.0f64..1.0, sp in 0.3f64..0.7) {
            let c = 10f64.powf(lc);
            let s = solve_radial_sublinear(c, sp, 2, 1e-9).unwrap();
            prop_assert!(s.values.iter().all(|v| *v >= 0.0));
            prop_assert_eq!(*s.values.last().unwrap(), c);
        }
    }
}
