//! Coupling nonlinearity `G`, its smoothed family `G_n`, and sampled checks of
//! the structural conditions both are required to satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fit, smoothstep, smoothstep_d1, smoothstep_integral};

/// A coupling `G(s1, s2)` together with its first and second partials.
pub trait Coupling {
    /// `(G, d1 G, d2 G)`.
    fn eval(&self, s1: f64, s2: f64) -> [f64; 3];
    /// `(d11 G, d12 G, d22 G)`; entries that blow up on an axis are reported as 0 there.
    fn hessian(&self, s1: f64, s2: f64) -> [f64; 3];
}

/// The power family `G(s1, s2) = |s1|^(sigma1+1) |s2|^(sigma2+1)` with coupling constant `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub sigma1: f64,
    pub sigma2: f64,
    pub beta: f64,
}

impl CouplingSpec {
    pub fn new(sigma1: f64, sigma2: f64, beta: f64) -> Result<Self> {
        for (name, s) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::config(name, format!("must lie in (0, 1), got {s}")));
            }
        }
        if !(beta < 0.0) {
            return Err(Error::config("beta", format!("must be negative, got {beta}")));
        }
        Ok(CouplingSpec { sigma1, sigma2, beta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma1.min(self.sigma2)
    }
}

impl Coupling for CouplingSpec {
    fn eval(&self, s1: f64, s2: f64) -> [f64; 3] {
        let (a, b) = (s1.abs(), s2.abs());
        if a == 0.0 || b == 0.0 {
            return [0.0; 3];
        }
        let ga = a.powf(self.sigma1 + 1.0);
        let gb = b.powf(self.sigma2 + 1.0);
        let d1 = (self.sigma1 + 1.0) * a.powf(self.sigma1) * gb * s1.signum();
        let d2 = (self.sigma2 + 1.0) * b.powf(self.sigma2) * ga * s2.signum();
        [ga * gb, d1, d2]
    }

    fn hessian(&self, s1: f64, s2: f64) -> [f64; 3] {
        let (a, b) = (s1.abs(), s2.abs());
        if a == 0.0 || b == 0.0 {
            return [0.0; 3];
        }
        let (p1, p2) = (self.sigma1, self.sigma2);
        let h11 = p1 * (p1 + 1.0) * a.powf(p1 - 1.0) * b.powf(p2 + 1.0);
        let h22 = p2 * (p2 + 1.0) * b.powf(p2 - 1.0) * a.powf(p1 + 1.0);
        let h12 = (p1 + 1.0) * (p2 + 1.0) * a.powf(p1) * b.powf(p2) * s1.signum() * s2.signum();
        [h11, h12, h22]
    }
}

/// `n_l = ceil(4 (ln l)^5) + 1`.
pub fn n_for_ell(ell: usize) -> usize {
    let l = (ell as f64).ln();
    (4.0 * l.powi(5)).max(0.0).ceil() as usize + 1
}

/// `alpha0 = 4 max(U(0), V(0)) + 1`.
pub fn alpha0_from_centers(u0: f64, v0: f64) -> f64 {
    4.0 * u0.max(v0) + 1.0
}

/// The cutoff `phi_n`: quintic ramp of `phi'` on `[0, 1/n]`, slope one up to
/// `alpha0`, quintic decay of `phi'` to zero on `[alpha0, 2 alpha0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub n: usize,
    pub alpha0: f64,
}

impl Cutoff {
    fn knot(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Value at `t >= 0`.
    pub fn value(&self, t: f64) -> f64 {
        let e = self.knot();
        let a = self.alpha0;
        if t <= 0.0 {
            0.0
        } else if t <= e {
            e * smoothstep_integral(t / e)
        } else if t <= a {
            0.5 * e + (t - e)
        } else {
            let x = ((t - a) / a).min(1.0);
            a - 0.5 * e + a * (x - smoothstep_integral(x))
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        let e = self.knot();
        let a = self.alpha0;
        if t <= 0.0 {
            0.0
        } else if t <= e {
            smoothstep(t / e)
        } else if t <= a {
            1.0
        } else if t < 2.0 * a {
            1.0 - smoothstep((t - a) / a)
        } else {
            0.0
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        let e = self.knot();
        let a = self.alpha0;
        if t <= 0.0 {
            0.0
        } else if t <= e {
            smoothstep_d1(t / e) / e
        } else if t <= a {
            0.0
        } else if t < 2.0 * a {
            -smoothstep_d1((t - a) / a) / a
        } else {
            0.0
        }
    }
}

/// `G_n(s1, s2) = G(phi_n(|s1|), phi_n(|s2|))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothedCoupling<C = CouplingSpec> {
    pub base: C,
    pub cutoff: Cutoff,
    /// Exponent used in the smallness conditions.
    pub sigma: f64,
    pub s0: f64,
}

pub fn build_smoothing(spec: CouplingSpec, n: usize, alpha0: f64) -> Result<SmoothedCoupling> {
    build_smoothing_with(spec, n, alpha0, spec.sigma())
}

/// Generic form; `sigma` is the exponent used when sampling for `s0`.
pub fn build_smoothing_with<C: Coupling>(base: C, n: usize, alpha0: f64, sigma: f64) -> Result<SmoothedCoupling<C>> {
    if n < 2 {
        return Err(Error::Domain(format!("smoothing index n={n} must be >= 2")));
    }
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::Domain(format!("alpha0={alpha0} must be positive")));
    }
    if 1.0 / n as f64 >= alpha0 {
        return Err(Error::Domain(format!(
            "ramp width 1/n={} does not fit below alpha0={alpha0}",
            1.0 / n as f64
        )));
    }
    let mut g = SmoothedCoupling { base, cutoff: Cutoff { n, alpha0 }, sigma, s0: 0.0 };
    g.s0 = g.sample_s0();
    Ok(g)
}

impl<C: Coupling> SmoothedCoupling<C> {
    pub fn n(&self) -> usize {
        self.cutoff.n
    }

    pub fn alpha0(&self) -> f64 {
        self.cutoff.alpha0
    }

    /// `(G_n, d1 G_n, d2 G_n)`.
    pub fn eval(&self, s1: f64, s2: f64) -> [f64; 3] {
        let (a, b) = (s1.abs(), s2.abs());
        let (f1, f2) = (self.cutoff.value(a), self.cutoff.value(b));
        if f1 == 0.0 || f2 == 0.0 {
            return [0.0; 3];
        }
        let [g, g1, g2] = self.base.eval(f1, f2);
        [g, g1 * self.cutoff.d1(a) * s1.signum(), g2 * self.cutoff.d1(b) * s2.signum()]
    }

    /// `(d11 G_n, d12 G_n, d22 G_n)`.
    pub fn hessian(&self, s1: f64, s2: f64) -> [f64; 3] {
        let (a, b) = (s1.abs(), s2.abs());
        let (f1, f2) = (self.cutoff.value(a), self.cutoff.value(b));
        if f1 == 0.0 || f2 == 0.0 {
            return [0.0; 3];
        }
        let [_, g1, g2] = self.base.eval(f1, f2);
        let [h11, h12, h22] = self.base.hessian(f1, f2);
        let (d1a, d1b) = (self.cutoff.d1(a), self.cutoff.d1(b));
        let (d2a, d2b) = (self.cutoff.d2(a), self.cutoff.d2(b));
        [
            h11 * d1a * d1a + g1 * d2a,
            h12 * d1a * d1b * s1.signum() * s2.signum(),
            h22 * d1b * d1b + g2 * d2b,
        ]
    }

    /// Largest sampled threshold for which `|d12 G_n| <= |s1 s2|^sigma` holds on
    /// the two strips, halved.
    fn sample_s0(&self) -> f64 {
        let sigma = self.sigma;
        let a0 = self.alpha0();
        let long = log_grid(1e-8 * a0, a0, 60);
        let candidates = log_grid(1e-8, a0, 120);
        let mut best = 0.0;
        for &s in &candidates {
            let short = log_grid(1e-8 * s, s, 30);
            let ok = long.iter().all(|&x| {
                short.iter().all(|&y| {
                    let h = self.hessian(x, y)[1].abs();
                    h <= (x * y).powf(sigma) * (1.0 + 1e-12)
                })
            });
            if ok {
                best = s;
            } else {
                break;
            }
        }
        0.5 * best
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub holds: bool,
    /// Worst sampled value of the quantity being checked.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub sigma: f64,
    pub sigma_prime: f64,
    pub n: usize,
    pub alpha0: f64,
    pub s0: f64,
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Samples every condition on `G` and `G_n` on log-spaced grids.
pub fn certify_conditions(g: &SmoothedCoupling, sigma_prime: f64) -> ConditionReport {
    let spec = g.base;
    let sigma = g.sigma;
    let a0 = g.alpha0();
    let mut checks = Vec::new();
    let near = log_grid(1e-8, 1e-1, 29);
    let wide = log_grid(1e-6, 2.5 * a0, 41);

    // G1: symmetry, axis annihilation, C^1 by finite differences.
    {
        let mut worst: f64 = 0.0;
        for &x in &wide {
            for &y in &wide {
                let v = spec.eval(x, y)[0];
                for (sx, sy) in [(-x, y), (x, -y), (-x, -y)] {
                    worst = worst.max((spec.eval(sx, sy)[0] - v).abs() / v.max(1e-300));
                }
            }
            worst = worst.max(spec.eval(0.0, x)[0].abs()).max(spec.eval(x, 0.0)[0].abs());
        }
        let fd = fd_gradient_error(|a, b| spec.eval(a, b), &wide);
        checks.push(ConditionCheck {
            name: "G1".into(),
            holds: worst < 1e-12 && fd < 1e-6,
            worst: worst.max(fd),
            detail: format!("symmetry/axis defect {worst:.3e}, gradient fd error {fd:.3e}"),
        });
    }
    // G2: d_i G increasing in s_i.
    {
        let worst = monotone_defect(|a, b| spec.eval(a, b), &wide, f64::INFINITY);
        checks.push(ConditionCheck {
            name: "G2".into(),
            holds: worst <= 0.0,
            worst,
            detail: "largest decrease of d_i G along s_i".into(),
        });
    }
    // G3: |s_i s_j d_ij G| / |s1 s2|^(sigma+1) along the diagonal and off-diagonal rays.
    {
        let (mut xs, mut ys, mut worst) = (Vec::new(), Vec::new(), 0.0f64);
        for &t in &near {
            for (x, y) in [(t, t), (t, 1.0), (1e-1, t)] {
                let [h11, h12, h22] = spec.hessian(x, y);
                let q = (x * y).powf(sigma + 1.0);
                let r = (x * x * h11).abs().max((x * y * h12).abs()).max((y * y * h22).abs()) / q;
                worst = worst.max(r);
                if x == y {
                    xs.push((x * y).ln());
                    ys.push(r.ln());
                }
            }
        }
        let trend = fit::line(&xs, &ys).slope;
        checks.push(ConditionCheck {
            name: "G3".into(),
            holds: trend > 1e-6,
            worst,
            detail: format!(
                "ratio bounded by {worst:.4}; log-log trend {trend:.3e} as |s1 s2| -> 0 (positive means o)"
            ),
        });
    }
    // G4: liminf of s_i d_i G / |s1 s2|^(sigma'+1).
    {
        let mut worst = f64::INFINITY;
        for &t in &near {
            for (x, y) in [(t, t), (t, 1.0), (1.0, t)] {
                let [_, g1, g2] = spec.eval(x, y);
                let q = (x * y).powf(sigma_prime + 1.0);
                worst = worst.min(x * g1 / q).min(y * g2 / q);
            }
        }
        checks.push(ConditionCheck {
            name: "G4".into(),
            holds: worst > 0.0,
            worst,
            detail: format!("smallest sampled ratio with sigma'={sigma_prime}"),
        });
    }
    // Gn1: exact axis annihilation, C^2 by finite differences of the gradient.
    {
        let mut worst: f64 = 0.0;
        for &x in &wide {
            for v in [g.eval(0.0, x), g.eval(x, 0.0), g.eval(0.0, -x)] {
                worst = worst.max(v.iter().fold(0.0, |m, e| m.max(e.abs())));
            }
        }
        let fd = fd_hessian_error(g, &wide);
        checks.push(ConditionCheck {
            name: "Gn1".into(),
            holds: worst == 0.0 && fd < 1e-5,
            worst: worst.max(fd),
            detail: format!("axis value {worst:.3e}, hessian fd error {fd:.3e}"),
        });
    }
    // Gn2: monotone up to alpha0, vanishing beyond 2 alpha0.
    {
        let inside = log_grid(1e-6, a0, 41);
        let dec = monotone_defect(|a, b| g.eval(a, b), &inside, a0);
        let mut tail: f64 = 0.0;
        for &y in &wide {
            for x in [2.0 * a0, 2.5 * a0, 10.0 * a0] {
                tail = tail.max(g.eval(x, y)[1].abs()).max(g.eval(y, x)[2].abs());
            }
        }
        checks.push(ConditionCheck {
            name: "Gn2".into(),
            holds: dec <= 0.0 && tail == 0.0,
            worst: dec.max(tail),
            detail: format!("largest decrease {dec:.3e}, partial beyond 2 alpha0 {tail:.3e}"),
        });
    }
    // Gn3: both inequalities on the strips of width s0.
    {
        let long = log_grid(1e-8 * a0, a0, 41);
        let short = log_grid(1e-8 * g.s0.max(1e-300), g.s0.max(1e-300), 21);
        let (mut w12, mut wii) = (0.0f64, 0.0f64);
        let e = 1.0 / g.n() as f64;
        for &x in &long {
            for &y in &short {
                let [h11, h12, _] = g.hessian(x, y);
                w12 = w12.max(h12.abs() / (x * y).powf(sigma));
                if x > e {
                    wii = wii.max(h11.abs() / ((x - e).powf(sigma - 1.0) * y.powf(sigma + 1.0)));
                }
            }
        }
        checks.push(ConditionCheck {
            name: "Gn3".into(),
            holds: g.s0 > 0.0 && w12 <= 1.0 + 1e-12 && wii <= 1.0 + 1e-12,
            worst: w12.max(wii),
            detail: format!("s0={:.4e}; mixed ratio {w12:.4}, diagonal ratio {wii:.4}", g.s0),
        });
    }
    // Gn4: uniform distance to G on [-alpha0, alpha0]^2 for n, 2n, 4n.
    {
        let box_grid: Vec<f64> = (0..=80).map(|k| a0 * k as f64 / 80.0).collect();
        let mut sups = Vec::new();
        for mult in [1, 2, 4] {
            let gm = SmoothedCoupling { base: spec, cutoff: Cutoff { n: g.n() * mult, alpha0: a0 }, sigma, s0: g.s0 };
            let mut s: f64 = 0.0;
            for &x in &box_grid {
                for &y in &box_grid {
                    let a = gm.eval(x, y);
                    let b = spec.eval(x, y);
                    s = s.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs()).max((a[2] - b[2]).abs());
                }
            }
            sups.push(s);
        }
        checks.push(ConditionCheck {
            name: "Gn4".into(),
            holds: sups[1] < sups[0] && sups[2] < sups[1],
            worst: sups[0],
            detail: format!("sup distance for n, 2n, 4n: {:.4e}, {:.4e}, {:.4e}", sups[0], sups[1], sups[2]),
        });
    }
    // Gn5: sign and domination, sampled on [-2 alpha0, 2 alpha0]^2 and beyond.
    {
        let pts: Vec<f64> = wide.iter().flat_map(|&v| [v, -v]).collect();
        let cap = spec.eval(2.0 * a0, 2.0 * a0)[0];
        let mut worst: f64 = 0.0;
        for &x in &pts {
            for &y in &pts {
                let a = g.eval(x, y);
                let b = spec.eval(x, y);
                let tol = 1e-13 * b[0].abs().max(1.0);
                worst = worst.max(-a[0]).max(a[0] - b[0].min(cap) - tol);
                worst = worst.max(-x * a[1]).max(x * a[1] - x * b[1] - tol);
                worst = worst.max(-y * a[2]).max(y * a[2] - y * b[2] - tol);
            }
        }
        checks.push(ConditionCheck {
            name: "Gn5".into(),
            holds: worst <= 0.0,
            worst,
            detail: "largest violation of the sign/domination bounds".into(),
        });
    }

    ConditionReport { sigma, sigma_prime, n: g.n(), alpha0: a0, s0: g.s0, checks }
}

fn fd_gradient_error(f: impl Fn(f64, f64) -> [f64; 3], pts: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in pts.iter().step_by(4) {
        for &y in pts.iter().step_by(4) {
            let h = 1e-6 * x.min(y);
            let v = f(x, y);
            let d1 = (f(x + h, y)[0] - f(x - h, y)[0]) / (2.0 * h);
            let d2 = (f(x, y + h)[0] - f(x, y - h)[0]) / (2.0 * h);
            let scale = v[1].abs().max(v[2].abs()).max(1e-300);
            worst = worst.max((d1 - v[1]).abs() / scale).max((d2 - v[2]).abs() / scale);
        }
    }
    worst
}

fn fd_hessian_error<C: Coupling>(g: &SmoothedCoupling<C>, pts: &[f64]) -> f64 {
    let e = 1.0 / g.n() as f64;
    let a0 = g.alpha0();
    let knots = [e, a0, 2.0 * a0];
    let mut worst: f64 = 0.0;
    for &x in pts.iter().step_by(3) {
        for &y in pts.iter().step_by(3) {
            let h = 1e-6 * x.min(y);
            if knots.iter().any(|k| (x - k).abs() < 10.0 * h || (y - k).abs() < 10.0 * h) {
                continue;
            }
            let hs = g.hessian(x, y);
            let d11 = (g.eval(x + h, y)[1] - g.eval(x - h, y)[1]) / (2.0 * h);
            let d12 = (g.eval(x, y + h)[1] - g.eval(x, y - h)[1]) / (2.0 * h);
            let d22 = (g.eval(x, y + h)[2] - g.eval(x, y - h)[2]) / (2.0 * h);
            let scale = hs.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            worst = worst
                .max((d11 - hs[0]).abs() / scale)
                .max((d12 - hs[1]).abs() / scale)
                .max((d22 - hs[2]).abs() / scale);
        }
    }
    worst
}

/// Largest decrease of `d_i G` along increasing `s_i <= limit`, relative to its size.
fn monotone_defect(f: impl Fn(f64, f64) -> [f64; 3], pts: &[f64], limit: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for &y in pts {
        let mut prev1 = f64::NEG_INFINITY;
        let mut prev2 = f64::NEG_INFINITY;
        for &x in pts.iter().filter(|&&x| x <= limit) {
            let a = f(x, y)[1];
            let b = f(y, x)[2];
            worst = worst.max((prev1 - a) / a.abs().max(1e-300)).max((prev2 - b) / b.abs().max(1e-300));
            prev1 = a;
            prev2 = b;
        }
    }
    worst.max(0.0) * if worst > 1e-14 { 1.0 } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_spec() -> CouplingSpec {
        CouplingSpec::new(0.5, 0.5, -1.0).unwrap()
    }

    fn default_smoothing() -> SmoothedCoupling {
        build_smoothing(default_spec(), n_for_ell(8), alpha0_from_centers(2.2062, 2.2062)).unwrap()
    }

    #[test]
    fn power_family_values() {
        let g = default_spec();
        assert_eq!(g.eval(0.0, 5.0), [0.0, 0.0, 0.0]);
        let v = g.eval(1.0, 1.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.5).abs() < 1e-15);
        assert!(CouplingSpec::new(0.5, 0.5, 1.0).is_err());
        assert!(CouplingSpec::new(1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn n_for_ell_values() {
        assert_eq!(n_for_ell(8), 157);
        assert_eq!(n_for_ell(12), 380);
        let mut prev = 0;
        for ell in 3..100 {
            let n = n_for_ell(ell);
            assert!(n as f64 > 4.0 * (ell as f64).ln().powi(5));
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff { n: 10, alpha0: 3.0 };
        assert_eq!(c.value(0.0), 0.0);
        assert_eq!(c.d1(0.0), 0.0);
        assert!((c.value(0.1) - 0.05).abs() < 1e-15);
        for t in [0.2, 1.0, 2.9] {
            assert!((c.d1(t) - 1.0).abs() < 1e-15);
            assert!((c.value(t) - (0.05 + t - 0.1)).abs() < 1e-14);
        }
        assert_eq!(c.d1(6.0), 0.0);
        assert!((c.value(7.0) - c.value(6.0)).abs() < 1e-15);
        for t in [0.01, 0.05, 0.09] {
            assert!(c.d2(t) > 0.0);
        }
        for t in [1e-3, 0.05, 0.5, 3.5, 5.9] {
            assert!(c.d1(t) > 0.0 && c.value(t) <= t);
        }
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let c = Cutoff { n: 7, alpha0: 2.0 };
        let h = 1e-6;
        for t in [0.03, 0.1, 1.0, 2.5, 3.3] {
            let fd = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            assert!((fd - c.d1(t)).abs() < 1e-8);
            let fd2 = (c.d1(t + h) - c.d1(t - h)) / (2.0 * h);
            assert!((fd2 - c.d2(t)).abs() < 1e-6);
        }
        // C^2 across the knots.
        for k in [1.0 / 7.0, 2.0, 4.0] {
            assert!((c.d2(k - 1e-12) - c.d2(k + 1e-12)).abs() < 1e-6);
            assert!((c.d1(k - 1e-12) - c.d1(k + 1e-12)).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothed_axis_annihilation() {
        let g = default_smoothing();
        for s in [1e-9, 0.3, 5.0, -2.0] {
            assert_eq!(g.eval(0.0, s), [0.0; 3]);
            assert_eq!(g.hessian(0.0, s), [0.0; 3]);
        }
    }

    #[test]
    fn smoothed_converges_to_power_family() {
        let spec = default_spec();
        let a0 = 9.8;
        let sup = |n: usize| {
            let g = build_smoothing(spec, n, a0).unwrap();
            let mut s: f64 = 0.0;
            for i in 0..=50 {
                for j in 0..=50 {
                    let (x, y) = (a0 * i as f64 / 50.0, a0 * j as f64 / 50.0);
                    s = s.max((g.eval(x, y)[1] - spec.eval(x, y)[1]).abs());
                }
            }
            s
        };
        let (a, b, c) = (sup(10), sup(100), sup(1000));
        assert!(b < a && c < b && c < 0.1);
    }

    #[test]
    fn certification_of_defaults() {
        let g = default_smoothing();
        let r = certify_conditions(&g, 0.5);
        for name in ["G1", "G2", "G4", "Gn1", "Gn2", "Gn3", "Gn4", "Gn5"] {
            let c = r.get(name).unwrap();
            assert!(c.holds, "{name}: {}", c.detail);
        }
        // With sigma = 1/2 the ratio in G3 is the constant (3/2)^2: bounded, not small.
        let g3 = r.get("G3").unwrap();
        assert!((g3.worst - 2.25).abs() < 1e-9, "{}", g3.detail);
        assert!(!g3.holds);
        // G4 witness along the diagonal is sigma1 + 1.
        assert!((r.get("G4").unwrap().worst - 1.5).abs() < 1e-9);
        assert!(r.s0 > 0.0 && r.s0 < r.alpha0);
    }

    #[test]
    fn g3_small_o_for_smaller_exponent() {
        let spec = CouplingSpec::new(0.5, 0.5, -1.0).unwrap();
        let g = build_smoothing_with(spec, 50, 5.0, 0.45).unwrap();
        let r = certify_conditions(&g, 0.5);
        let g3 = r.get("G3").unwrap();
        assert!(g3.holds, "{}", g3.detail);
        assert!(r.get("Gn3").unwrap().holds);
    }

    proptest! {
        #[test]
        fn gn_dominated_by_g(x in -20.0f64..20.0, y in -20.0f64..20.0) {
            let g = default_smoothing();
            let spec = default_spec();
            let a = g.eval(x, y);
            let b = spec.eval(x, y);
            let cap = spec.eval(2.0 * g.alpha0(), 2.0 * g.alpha0())[0];
            prop_assert!(a[0] >= 0.0 && a[0] <= b[0].min(cap) * (1.0 + 1e-12));
            prop_assert!(x * a[1] >= 0.0 && x * a[1] <= x * b[1] * (1.0 + 1e-12) + 1e-300);
            prop_assert!(y * a[2] >= 0.0 && y * a[2] <= y * b[2] * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn gradient_matches_differences(x in 0.02f64..9.0, y in 0.02f64..9.0) {
            let g = default_smoothing();
            let h = 1e-6;
            let v = g.eval(x, y);
            let d1 = (g.eval(x + h, y)[0] - g.eval(x - h, y)[0]) / (2.0 * h);
            let d2 = (g.eval(x, y + h)[0] - g.eval(x, y - h)[0]) / (2.0 * h);
            prop_assert!((d1 - v[1]).abs() < 1e-6 * (1.0 + v[1].abs()));
            prop_assert!((d2 - v[2]).abs() < 1e-6 * (1.0 + v[2].abs()));
        }

        #[test]
        fn smoothed_symmetric(x in -20.0f64..20.0, y in -20.0f64..20.0) {
            let g = default_smoothing();
            prop_assert_eq!(g.eval(x, y)[0], g.eval(x.abs(), y.abs())[0]);
            prop_assert_eq!(g.hessian(x, y)[0], g.hessian(-x, y)[0]);
        }
    }
}
