//! Reduced energy `J(r, rho)`, its asymptotic expansion, and the maximization
//! of the closed-form profile `F(s, t) = f(s) + h(t)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{parameter_box, BumpConfiguration};
use crate::grid::GridSpec;
use crate::groundstate::{interaction_integral, scale_profile, RadialProfile};
use crate::numerics::fit;
use crate::problem::Problem;
use crate::reduction::{fixed_point, FixedPointOptions, FixedPointResult, Reduction};

/// One constructed pair and its energy.
#[derive(Debug, Clone, Serialize)]
pub struct EnergySample {
    pub ell: usize,
    pub r: f64,
    pub rho: f64,
    pub j: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Builds the problem at `config`, runs the fixed point and returns `I_n` there.
pub fn construct(config: &BumpConfiguration, spec: &GridSpec, base: &RadialProfile, opts: &FixedPointOptions) -> Result<(Problem, FixedPointResult)> {
    config.validate()?;
    let pb = Problem::new(config, spec, base)?;
    let red = Reduction::new(&pb)?;
    let fp = fixed_point(&pb, &red, opts)?;
    Ok((pb, fp))
}

pub fn reduced_energy(config: &BumpConfiguration, spec: &GridSpec, base: &RadialProfile, opts: &FixedPointOptions) -> Result<EnergySample> {
    let (pb, fp) = construct(config, spec, base, opts)?;
    let u: Vec<f64> = pb.ur.iter().zip(&fp.phi).map(|(a, b)| a + b).collect();
    let v: Vec<f64> = pb.vr.iter().zip(&fp.psi).map(|(a, b)| a + b).collect();
    Ok(EnergySample {
        ell: config.ell,
        r: config.r,
        rho: config.rho,
        j: pb.energy(&u, &v),
        converged: fp.converged,
        iterations: fp.history.len(),
    })
}

/// Samples `J` on the tensor grid of box fractions; failed constructions are kept as non-converged.
pub fn energy_scan(
    config: &BumpConfiguration,
    spec: &GridSpec,
    base: &RadialProfile,
    r_fractions: &[f64],
    rho_fractions: &[f64],
    opts: &FixedPointOptions,
) -> Result<Vec<EnergySample>> {
    let (d1, d2) = parameter_box(config.ell, config.m)?;
    let points: Vec<(f64, f64)> = r_fractions.iter().flat_map(|&a| rho_fractions.iter().map(move |&b| (d1.at(a), d2.at(b)))).collect();
    Ok(points
        .par_iter()
        .map(|&(r, rho)| {
            let c = config.clone().with_radii(r, rho);
            reduced_energy(&c, spec, base, opts).unwrap_or_else(|e| {
                log::warn!("construction failed at r={r}, rho={rho}: {e}");
                EnergySample { ell: c.ell, r, rho, j: f64::NAN, converged: false, iterations: 0 }
            })
        })
        .collect())
}

/// Coefficients of `J / ell = A + B1 r^-m + B2 rho^-m - C1 (ell/r)^{(N-1)/2} e^{-2 pi r/ell} - C2 (ell/rho)^{(N-1)/2} e^{-pi rho/ell}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyExpansion {
    pub ell: usize,
    pub coefficients: Coefficients,
    /// RMS of the residual of `J / ell`.
    pub residual_rms: f64,
    pub samples: usize,
    pub condition: f64,
    pub s_ell: f64,
    pub t_ell: f64,
}

fn design_row(ell: f64, m: f64, r: f64, rho: f64) -> Vec<f64> {
    vec![
        1.0,
        r.powf(-m),
        rho.powf(-m),
        -(ell / r).sqrt() * (-2.0 * PI * r / ell).exp(),
        -(ell / rho).sqrt() * (-PI * rho / ell).exp(),
    ]
}

/// Least-squares fit of the expansion over converged samples of one `ell`.
pub fn expansion_fit(samples: &[EnergySample], m: f64) -> Result<EnergyExpansion> {
    let good: Vec<&EnergySample> = samples.iter().filter(|s| s.converged && s.j.is_finite()).collect();
    if good.len() < 12 {
        return Err(Error::Domain(format!("expansion fit needs at least 12 converged samples, got {}", good.len())));
    }
    let ell = good[0].ell;
    if good.iter().any(|s| s.ell != ell) {
        return Err(Error::Domain("expansion fit mixes different ell".into()));
    }
    let l = ell as f64;
    let rows: Vec<Vec<f64>> = good.iter().map(|s| design_row(l, m, s.r, s.rho)).collect();
    let b: Vec<f64> = good.iter().map(|s| s.j / l).collect();
    let f = fit::least_squares(&rows, &b).ok_or_else(|| Error::Domain("rank-deficient expansion design".into()))?;
    if !f.condition.is_finite() || f.condition > 1e14 {
        return Err(Error::Domain(format!("expansion design too clustered (condition {:.3e})", f.condition)));
    }
    let c = &f.coefficients;
    Ok(EnergyExpansion {
        ell,
        coefficients: Coefficients { a: c[0], b1: c[1], b2: c[2], c1: c[3], c2: c[4] },
        residual_rms: f.residual_rms,
        samples: good.len(),
        condition: f.condition,
        s_ell: s_ell(l, m, 2),
        t_ell: s_ell(l, m, 2) * 2.0,
    })
}

/// Coefficients from the ground-state profiles alone, at distances matching `config`.
pub fn quadrature_coefficients(config: &BumpConfiguration, base: &RadialProfile) -> Result<Coefficients> {
    let u = scale_profile(base, config.mu)?;
    let v = scale_profile(base, config.nu)?;
    let action = |w: &RadialProfile, mu: f64| (0.5 - 1.0 / config.p) * mu * w.power_integral(config.p);
    let l = config.ell as f64;
    let (r, rho) = (config.r, config.rho);
    let dx = 2.0 * r * (PI / l).sin();
    let dy = 2.0 * rho * (PI / (2.0 * l)).sin();
    let psi_x = config.mu * interaction_integral(&u, dx)?;
    let psi_y = config.nu * interaction_integral(&v, dy)?;
    Ok(Coefficients {
        a: action(&u, config.mu) + 2.0 * action(&v, config.nu),
        b1: 0.5 * config.a1 * u.power_integral(2.0),
        b2: config.a2 * v.power_integral(2.0),
        c1: psi_x / ((l / r).sqrt() * (-2.0 * PI * r / l).exp()),
        c2: 2.0 * psi_y / ((l / rho).sqrt() * (-PI * rho / l).exp()),
    })
}

/// `(m - (N+1)/2) ln ln ell / (2 pi ln ell)`.
pub fn s_ell(ell: f64, m: f64, n: usize) -> f64 {
    let l = ell.ln();
    (m - (n as f64 + 1.0) / 2.0) * l.ln() / (2.0 * PI * l)
}

/// The closed-form scalar profiles `f` and `h`; `h` uses `pi` and `m / pi` in place of `2 pi` and `m / 2 pi`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Profile1d {
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub n: usize,
    pub ln_ell: f64,
    /// `2 pi` for `f`, `pi` for `h`.
    pub k: f64,
}

impl Profile1d {
    pub fn f(ell: f64, m: f64, n: usize, b1: f64, c1: f64) -> Self {
        Profile1d { b: b1, c: c1, m, n, ln_ell: ell.ln(), k: 2.0 * PI }
    }

    pub fn h(ell: f64, m: f64, n: usize, b2: f64, c2: f64) -> Self {
        Profile1d { b: b2, c: c2, m, n, ln_ell: ell.ln(), k: PI }
    }

    fn shift(&self) -> f64 {
        self.m / self.k
    }

    fn half(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    /// Value, first and second derivative.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let x = s + self.shift();
        let (m, q, l) = (self.m, self.half(), self.ln_ell);
        let pref = self.c * l.powf(m - q);
        let e = (-self.k * s * l).exp();
        let a = self.b * x.powf(-m);
        let a1 = -m * self.b * x.powf(-m - 1.0);
        let a2 = m * (m + 1.0) * self.b * x.powf(-m - 2.0);
        // g = e x^{-q}; g' = e x^{-q} (-k l - q / x); g'' = e x^{-q} ((k l + q/x)^2 + q / x^2)
        let g = e * x.powf(-q);
        let kl = self.k * l;
        let g1 = g * (-kl - q / x);
        let g2 = g * ((kl + q / x).powi(2) + q / (x * x));
        [a - pref * g, a1 - pref * g1, a2 - pref * g2]
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }

    /// Largest-value interior local maximum on `-m/(2k) <= s <= m/k` by bracketing and safeguarded Newton.
    pub fn maximize(&self) -> Result<Maximum> {
        let (lo, hi) = (-self.m / (2.0 * self.k), self.m / self.k);
        let n = 6000;
        let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut best: Option<Maximum> = None;
        for pair in grid.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if !(self.eval(a)[1] > 0.0 && self.eval(b)[1] <= 0.0) {
                continue;
            }
            let s = self.newton_root(a, b)?;
            let [v, d1, d2] = self.eval(s);
            if best.as_ref().is_none_or(|m| v > m.value) {
                best = Some(Maximum { s, value: v, d1, d2 });
            }
        }
        best.ok_or_else(|| Error::Domain(format!("no interior critical point in [{lo:.4}, {hi:.4}] (ln ell = {:.3})", self.ln_ell)))
    }

    fn newton_root(&self, mut a: f64, mut b: f64) -> Result<f64> {
        let mut s = 0.5 * (a + b);
        for _ in 0..200 {
            let [_, d1, d2] = self.eval(s);
            if d1 > 0.0 {
                a = s;
            } else {
                b = s;
            }
            let newton = s - d1 / d2;
            s = if d2 < 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (b - a).abs() < 1e-15 * (1.0 + s.abs()) || d1 == 0.0 {
                return Ok(s);
            }
            if self.eval(s)[1].abs() < 1e-14 * (self.b + self.c) {
                return Ok(s);
            }
        }
        Err(Error::Convergence("safeguarded Newton on f' did not converge".into()))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Maximum {
    pub s: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximizerReport {
    pub ell: f64,
    pub s_star: Maximum,
    pub t_star: Maximum,
    pub s_ell: f64,
    pub t_ell: f64,
    /// `F(s*, t*)` against the boundary values at distance `ell^{-tau/2}`.
    pub boundary_drop: f64,
}

/// Maximizes `f(s) + h(t)` for the given coefficients.
pub fn maximize_f(ell: f64, m: f64, tau: f64, c: &Coefficients) -> Result<MaximizerReport> {
    for (name, v) in [("b1", c.b1), ("b2", c.b2), ("c1", c.c1), ("c2", c.c2)] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("coefficient {name}={v} must be positive")));
        }
    }
    let f = Profile1d::f(ell, m, 2, c.b1, c.c1);
    let h = Profile1d::h(ell, m, 2, c.b2, c.c2);
    let s = f.maximize()?;
    let t = h.maximize()?;
    let delta = ell.powf(-tau / 2.0);
    let top = s.value + t.value;
    let boundary = [
        f.value(s.s + delta) + t.value,
        f.value(s.s - delta) + t.value,
        s.value + h.value(t.s + delta),
        s.value + h.value(t.s - delta),
    ];
    let drop = boundary.iter().map(|b| top - b).fold(f64::INFINITY, f64::min);
    let se = s_ell(ell, m, 2);
    Ok(MaximizerReport { ell, s_star: s, t_star: t, s_ell: se, t_ell: 2.0 * se, boundary_drop: drop })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySurface {
    pub samples: Vec<EnergySample>,
    pub r_star: f64,
    pub rho_star: f64,
    pub j_star: f64,
    pub interior: bool,
    /// Second differences of `J` at the best grid node along `r` and `rho`.
    pub second_differences: (f64, f64),
}

/// Coarse scan over the box followed by a quadratic refinement around the best node.
pub fn locate_max(config: &BumpConfiguration, spec: &GridSpec, base: &RadialProfile, nodes: usize, opts: &FixedPointOptions) -> Result<EnergySurface> {
    let fr: Vec<f64> = (0..nodes).map(|i| 0.05 + 0.9 * i as f64 / (nodes - 1) as f64).collect();
    let samples = energy_scan(config, spec, base, &fr, &fr, opts)?;
    let at = |i: usize, j: usize| samples[i * nodes + j].j;
    let mut best: Option<(usize, usize)> = None;
    for i in 0..nodes {
        for j in 0..nodes {
            let v = at(i, j);
            if v.is_finite() && best.is_none_or(|(a, b)| v > at(a, b)) {
                best = Some((i, j));
            }
        }
    }
    let (i, j) = best.ok_or_else(|| Error::Convergence("every construction in the energy scan failed".into()))?;
    let interior = i > 0 && j > 0 && i + 1 < nodes && j + 1 < nodes;
    let (mut r_star, mut rho_star) = (samples[i * nodes + j].r, samples[i * nodes + j].rho);
    let mut second = (f64::NAN, f64::NAN);
    if interior {
        let c = at(i, j);
        let (rm, rp) = (at(i - 1, j), at(i + 1, j));
        let (tm, tp) = (at(i, j - 1), at(i, j + 1));
        second = (rm - 2.0 * c + rp, tm - 2.0 * c + tp);
        let hr = samples[(i + 1) * nodes + j].r - samples[i * nodes + j].r;
        let ht = samples[i * nodes + j + 1].rho - samples[i * nodes + j].rho;
        if second.0 < 0.0 {
            r_star -= hr * 0.5 * (rp - rm) / second.0;
        }
        if second.1 < 0.0 {
            rho_star -= ht * 0.5 * (tp - tm) / second.1;
        }
    }
    Ok(EnergySurface { j_star: at(i, j), samples, r_star, rho_star, interior, second_differences: second })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::solve_ground_state;
    use proptest::prelude::*;

    fn profile() -> Profile1d {
        Profile1d::f(100.0, 2.0, 2, 5.85, 12.0)
    }

    #[test]
    fn derivatives_match_central_differences() {
        for p in [profile(), Profile1d::h(100.0, 2.0, 2, 11.7, 20.0)] {
            for s in [-0.1, -0.02, 0.0, 0.05, 0.12] {
                let [_, d1, d2] = p.eval(s);
                let fd1 = richardson(|x| p.value(x), s);
                let fd2 = richardson(|x| p.eval(x)[1], s);
                assert!((fd1 - d1).abs() <= 1e-8 * d1.abs().max(1.0), "{fd1} {d1}");
                assert!((fd2 - d2).abs() <= 1e-8 * d2.abs().max(1.0), "{fd2} {d2}");
            }
        }
    }

    /// Central difference with one Richardson step.
    fn richardson(f: impl Fn(f64) -> f64, s: f64) -> f64 {
        let h = 2e-4;
        let d = |h: f64| (f(s + h) - f(s - h)) / (2.0 * h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn maximizer_is_a_strict_local_max() {
        let m = profile().maximize().unwrap();
        assert!(m.d1.abs() < 1e-9 * 12.0);
        assert!(m.d2 < 0.0);
        let p = profile();
        assert!(p.value(m.s + 1e-3) < m.value && p.value(m.s - 1e-3) < m.value);
    }

    #[test]
    fn small_interaction_has_no_interior_maximum() {
        // Without the attractive term f is monotone decreasing.
        let p = Profile1d::f(100.0, 2.0, 2, 5.85, 0.0);
        assert!(p.maximize().is_err());
    }

    #[test]
    fn s_ell_formula() {
        let l = 400f64.ln();
        assert!((s_ell(400.0, 2.0, 2) - 0.5 * l.ln() / (2.0 * PI * l)).abs() < 1e-16);
    }

    #[test]
    fn quadrature_coefficients_are_positive() {
        let base = solve_ground_state(4.0, 2, 1e-10).unwrap();
        let c = quadrature_coefficients(&BumpConfiguration::defaults(10), &base).unwrap();
        assert!(c.a > 0.0 && c.b1 > 0.0 && c.b2 > 0.0 && c.c1 > 0.0 && c.c2 > 0.0);
        // Three bumps per cell, each with (1/2 - 1/4) int W^4 = int W^2 / 2 by the Pohozaev identity in 2D.
        let w2 = base.power_integral(2.0);
        assert!((c.a - 1.5 * w2).abs() < 1e-6 * c.a, "{} {}", c.a, 1.5 * w2);
        assert!((c.b2 - 2.0 * c.b1).abs() < 1e-12 * c.b2);
    }

    #[test]
    fn fit_recovers_synthetic_coefficients() {
        let truth = Coefficients { a: 17.5, b1: 5.8, b2: 11.7, c1: 9.0, c2: 25.0 };
        let (d1, d2) = parameter_box(10, 2.0).unwrap();
        let mut samples = Vec::new();
        for a in [0.1, 0.35, 0.6, 0.85] {
            for b in [0.1, 0.4, 0.7, 0.95] {
                let (r, rho) = (d1.at(a), d2.at(b));
                let row = design_row(10.0, 2.0, r, rho);
                let j = 10.0 * (row[0] * truth.a + row[1] * truth.b1 + row[2] * truth.b2 + row[3] * truth.c1 + row[4] * truth.c2);
                samples.push(EnergySample { ell: 10, r, rho, j, converged: true, iterations: 1 });
            }
        }
        let e = expansion_fit(&samples, 2.0).unwrap();
        let c = e.coefficients;
        assert!((c.a - truth.a).abs() < 1e-8 && (c.b1 - truth.b1).abs() < 1e-5 && (c.c1 - truth.c1).abs() < 1e-4);
        samples.truncate(11);
        assert!(expansion_fit(&samples, 2.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn derivative_consistency(s in -0.15f64..0.15, b in 1.0f64..20.0, c in 1.0f64..40.0, ell in 20.0f64..500.0) {
            let p = Profile1d::f(ell, 2.0, 2, b, c);
            let h = 1e-6;
            let fd = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
            let d1 = p.eval(s)[1];
            prop_assert!((fd - d1).abs() <= 1e-6 * (d1.abs() + p.value(s).abs() + 1.0));
        }
    }
}
