//! Polygon vertices, admissible ring radii, inner balls and the symmetry sector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::n_for_ell;

/// Position of the default ring radii inside `D1` and `D2`, as a fraction of
/// each interval's length.
pub const DEFAULT_RING_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn at(&self, fraction: f64) -> f64 {
        self.lo + fraction * (self.hi - self.lo)
    }

    pub fn fraction_of(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// All scalar parameters of one construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpConfiguration {
    pub ell: usize,
    pub p: f64,
    pub mu: f64,
    pub nu: f64,
    pub beta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma_prime: f64,
    pub m: f64,
    pub a1: f64,
    pub a2: f64,
    pub theta: f64,
    pub tau: f64,
    pub n_smooth: usize,
    pub r: f64,
    pub rho: f64,
}

impl BumpConfiguration {
    /// Default parameter pack with ring radii at [`DEFAULT_RING_FRACTION`] of `D1`, `D2`.
    pub fn defaults(ell: usize) -> Self {
        let mut c = BumpConfiguration {
            ell,
            p: 4.0,
            mu: 1.0,
            nu: 1.0,
            beta: -1.0,
            sigma1: 0.5,
            sigma2: 0.5,
            sigma_prime: 0.5,
            m: 2.0,
            a1: 1.0,
            a2: 1.0,
            theta: 1.0,
            tau: 0.03,
            n_smooth: n_for_ell(ell.max(2)),
            r: 0.0,
            rho: 0.0,
        };
        if let Ok((d1, d2)) = parameter_box(ell, c.m) {
            c.r = d1.at(DEFAULT_RING_FRACTION);
            c.rho = d2.at(DEFAULT_RING_FRACTION);
        }
        c
    }

    pub fn with_radii(mut self, r: f64, rho: f64) -> Self {
        self.r = r;
        self.rho = rho;
        self
    }

    /// `sigma = min(sigma1, sigma2)`.
    pub fn sigma(&self) -> f64 {
        self.sigma1.min(self.sigma2)
    }

    /// Upper end of the open window for `tau`.
    pub fn tau_max(&self) -> f64 {
        (1.0f64 / 16.0).min((self.p - 2.0) / 16.0).min(self.sigma() / 16.0)
    }

    /// Checks every structural hypothesis and names the first violated field.
    pub fn validate(&self) -> Result<()> {
        if self.ell < 2 {
            return Err(Error::config("ell", format!("must be >= 2, got {}", self.ell)));
        }
        if !(self.p > 2.0) {
            return Err(Error::config("p", format!("must exceed 2, got {}", self.p)));
        }
        if !(self.mu > 0.0) {
            return Err(Error::config("mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.nu > 0.0) {
            return Err(Error::config("nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.beta < 0.0) {
            return Err(Error::config("beta", format!("must be negative, got {}", self.beta)));
        }
        for (name, v) in [("sigma1", self.sigma1), ("sigma2", self.sigma2), ("sigma_prime", self.sigma_prime)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.m > 1.0) {
            return Err(Error::config("m", format!("must exceed 1, got {}", self.m)));
        }
        if !(self.a1 > 0.0) {
            return Err(Error::config("a1", format!("must be positive, got {}", self.a1)));
        }
        if !(self.a2 > 0.0) {
            return Err(Error::config("a2", format!("must be positive, got {}", self.a2)));
        }
        if !(self.theta > 0.0) {
            return Err(Error::config("theta", format!("must be positive, got {}", self.theta)));
        }
        let tmax = self.tau_max();
        if !(self.tau > 0.0 && self.tau < tmax) {
            return Err(Error::config("tau", format!("must lie in (0, {tmax}), got {}", self.tau)));
        }
        let floor = 4.0 * (self.ell as f64).ln().powi(5);
        if !(self.n_smooth as f64 > floor) {
            return Err(Error::config(
                "n_smooth",
                format!("must exceed 4 (ln ell)^5 = {floor:.3}, got {}", self.n_smooth),
            ));
        }
        if !(self.r > 0.0 && self.rho > self.r) {
            return Err(Error::config("rho", format!("need 0 < r < rho, got r={} rho={}", self.r, self.rho)));
        }
        Ok(())
    }

    /// `r in D1` and `rho in D2`.
    pub fn admissible(&self) -> bool {
        match parameter_box(self.ell, self.m) {
            Ok((d1, d2)) => d1.contains(self.r) && d2.contains(self.rho),
            Err(_) => false,
        }
    }

    pub fn vertices(&self) -> VertexSet {
        make_vertices(self.ell, self.r, self.rho)
    }

    /// `K_1` evaluated at radius `s`.
    pub fn k1(&self, s: f64) -> f64 {
        potential(self.a1, self.m, s)
    }

    pub fn k2(&self, s: f64) -> f64 {
        potential(self.a2, self.m, s)
    }
}

/// `K(s) = 1 + a / (1 + s)^m`.
pub fn potential(a: f64, m: f64, s: f64) -> f64 {
    1.0 + a / (1.0 + s).powf(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub x_vertices: Vec<[f64; 2]>,
    pub y_vertices: Vec<[f64; 2]>,
}

pub fn make_vertices(ell: usize, r: f64, rho: f64) -> VertexSet {
    let l = ell as f64;
    let x_vertices = (0..ell)
        .map(|j| {
            let a = 2.0 * j as f64 * PI / l;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let y_vertices = (0..2 * ell)
        .map(|j| {
            let a = j as f64 * PI / l;
            [rho * a.cos(), rho * a.sin()]
        })
        .collect();
    VertexSet { x_vertices, y_vertices }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Admissible ring radii `D1 = (m/2pi) ell [ln(ell/2), ln(2 ell)]`, `D2 = 2 D1`.
pub fn parameter_box(ell: usize, m: f64) -> Result<(Interval, Interval)> {
    if ell < 3 {
        return Err(Error::Domain(format!("parameter box needs ell >= 3, got {ell}")));
    }
    let l = ell as f64;
    let c = m / (2.0 * PI) * l;
    let d1 = Interval { lo: c * (l / 2.0).ln(), hi: c * (2.0 * l).ln() };
    let d2 = Interval { lo: 2.0 * d1.lo, hi: 2.0 * d1.hi };
    Ok((d1, d2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        distance(self.center, p) < self.radius
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerRegions {
    pub k: usize,
    pub radius: f64,
    pub p_balls: Vec<Ball>,
    pub q_balls: Vec<Ball>,
    /// Some pair of balls (within or across families) intersects.
    pub overlapping: bool,
}

/// `P_k`, `Q_k`: balls of radius `k ln ln ell` about the x- and y-vertices.
pub fn inner_regions(config: &BumpConfiguration, k: usize) -> Result<InnerRegions> {
    if !(1..=4).contains(&k) {
        return Err(Error::Domain(format!("inner region index k={k} not in 1..=4")));
    }
    let lnln = (config.ell as f64).ln().ln();
    if !(lnln > 0.0) {
        return Err(Error::Domain(format!("ln ln ell = {lnln} is not positive")));
    }
    let radius = k as f64 * lnln;
    let v = config.vertices();
    let p_balls: Vec<Ball> = v.x_vertices.iter().map(|&c| Ball { center: c, radius }).collect();
    let q_balls: Vec<Ball> = v.y_vertices.iter().map(|&c| Ball { center: c, radius }).collect();
    let all: Vec<&Ball> = p_balls.iter().chain(&q_balls).collect();
    let mut overlapping = false;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if distance(all[i].center, all[j].center) < 2.0 * radius {
                overlapping = true;
            }
        }
    }
    if overlapping {
        log::warn!("inner balls of radius {radius:.4} overlap for ell={} r={} rho={}", config.ell, config.r, config.rho);
    }
    Ok(InnerRegions { k, radius, p_balls, q_balls, overlapping })
}

/// The wedge `0 <= theta <= pi/ell` with even reflection across both edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub ell: usize,
    pub opening: f64,
}

pub fn fundamental_sector(ell: usize) -> Sector {
    Sector { ell, opening: PI / ell as f64 }
}

impl Sector {
    /// Number of copies of the sector tiling the plane.
    pub fn copies(&self) -> usize {
        2 * self.ell
    }

    /// Maps an angle to its representative in `[0, opening]`.
    pub fn fold_angle(&self, theta: f64) -> f64 {
        let period = 2.0 * self.opening;
        let t = theta.rem_euclid(period);
        if t <= self.opening {
            t
        } else {
            period - t
        }
    }

    pub fn fold(&self, p: [f64; 2]) -> [f64; 2] {
        let r = p[0].hypot(p[1]);
        let t = self.fold_angle(p[1].atan2(p[0]));
        [r * t.cos(), r * t.sin()]
    }

    /// All images of `p` under the dihedral group generated by the two edge reflections.
    pub fn orbit(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let r = p[0].hypot(p[1]);
        let t = p[1].atan2(p[0]);
        let period = 2.0 * self.opening;
        let mut out = Vec::with_capacity(self.copies());
        for j in 0..self.ell {
            let shift = j as f64 * period;
            for a in [t + shift, -t + shift] {
                out.push([r * a.cos(), r * a.sin()]);
            }
        }
        out
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let t = p[1].atan2(p[0]);
        t >= -1e-12 && t <= self.opening + 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn square_vertices() {
        let v = make_vertices(4, 1.0, 2.0);
        assert!(distance(v.x_vertices[0], [1.0, 0.0]) < 1e-15);
        assert!(distance(v.x_vertices[1], [0.0, 1.0]) < 1e-15);
        let s = 2.0 * (PI / 4.0).cos();
        assert!(distance(v.y_vertices[1], [s, s]) < 1e-15);
        // y^1 sits on the same ray as x^1.
        assert_eq!(v.y_vertices[0], [2.0, 0.0]);
    }

    #[test]
    fn neighbour_chord() {
        for ell in [5, 8, 12] {
            let v = make_vertices(ell, 3.0, 6.0);
            let d = distance(v.x_vertices[0], v.x_vertices[1]);
            assert!((d - 2.0 * 3.0 * (PI / ell as f64).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn box_for_ell_eight() {
        let (d1, d2) = parameter_box(8, 2.0).unwrap();
        assert!((d1.lo - 8.0 / PI * 4f64.ln()).abs() < 1e-13);
        assert!((d1.hi - 8.0 / PI * 16f64.ln()).abs() < 1e-13);
        assert!((d2.midpoint() - 2.0 * d1.midpoint()).abs() < 1e-13);
        assert!(parameter_box(2, 2.0).is_err());
    }

    #[test]
    fn box_grows_with_ell() {
        let mut prev = parameter_box(3, 2.0).unwrap().0;
        for ell in 4..40 {
            let cur = parameter_box(ell, 2.0).unwrap().0;
            assert!(cur.lo > prev.lo && cur.hi > prev.hi && cur.width() > 0.0);
            prev = cur;
        }
    }

    #[test]
    fn inner_balls_nested() {
        let c = BumpConfiguration::defaults(8);
        let p1 = inner_regions(&c, 1).unwrap();
        assert_eq!(p1.p_balls.len(), 8);
        assert!((p1.radius - 8f64.ln().ln()).abs() < 1e-15);
        for k in 1..4 {
            let a = inner_regions(&c, k).unwrap();
            let b = inner_regions(&c, k + 1).unwrap();
            assert!(a.radius < b.radius);
        }
        assert!(inner_regions(&c, 0).is_err());
    }

    #[test]
    fn ball_disjointness_at_ell_eight() {
        // Balls about neighbouring x-vertices are disjoint iff k ln ln ell < r sin(pi/ell).
        let (d1, _) = parameter_box(8, 2.0).unwrap();
        let half_chord = |r: f64| r * (PI / 8.0).sin();
        let lnln = 8f64.ln().ln();
        for f in [0.0, 0.5, 1.0] {
            let c = BumpConfiguration::defaults(8).with_radii(d1.at(f), 2.0 * d1.at(f));
            assert!(lnln < half_chord(c.r));
            assert!(!inner_regions(&c, 1).unwrap().overlapping);
            // At desk scale the largest balls are too big for the ring.
            assert!(4.0 * lnln > half_chord(c.r));
            assert!(inner_regions(&c, 4).unwrap().overlapping);
        }
    }

    #[test]
    fn sector_angles() {
        let s = fundamental_sector(4);
        assert!((s.opening - PI / 4.0).abs() < 1e-15);
        let v = make_vertices(4, 1.0, 2.0);
        assert!(s.contains(v.x_vertices[0]));
        let y2 = v.y_vertices[1];
        assert!((y2[1].atan2(y2[0]) - s.opening).abs() < 1e-15);
    }

    #[test]
    fn defaults_validate() {
        for ell in [6, 8, 10, 12] {
            let c = BumpConfiguration::defaults(ell);
            c.validate().unwrap();
            assert!(c.admissible());
        }
    }

    #[test]
    fn validation_names_field() {
        let mut c = BumpConfiguration::defaults(8);
        c.beta = 0.5;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "beta"),
            other => panic!("{other:?}"),
        }
        let mut c = BumpConfiguration::defaults(8);
        c.tau = 0.04;
        assert!(matches!(c.validate(), Err(Error::Config { ref field, .. }) if field == "tau"));
        let mut c = BumpConfiguration::defaults(8);
        c.sigma1 = 1.0;
        assert!(matches!(c.validate(), Err(Error::Config { ref field, .. }) if field == "sigma1"));
    }

    proptest! {
        #[test]
        fn vertex_set_invariant_under_group(ell in 3usize..16, r in 0.5f64..20.0, k in 1.5f64..3.0) {
            let v = make_vertices(ell, r, k * r);
            let s = fundamental_sector(ell);
            for family in [&v.x_vertices, &v.y_vertices] {
                for p in family.iter() {
                    for img in s.orbit(*p) {
                        let hit = family.iter().any(|q| distance(*q, img) < 1e-9 * r.max(1.0));
                        prop_assert!(hit);
                    }
                }
            }
        }

        #[test]
        fn x_to_y_separation(ell in 3usize..30, f in 0.0f64..1.0, g in 0.0f64..1.0) {
            let (d1, d2) = parameter_box(ell, 2.0).unwrap();
            let (r, rho) = (d1.at(f), d2.at(g));
            let v = make_vertices(ell, r, rho);
            let min = v.y_vertices.iter().map(|y| distance(v.x_vertices[0], *y)).fold(f64::INFINITY, f64::min);
            prop_assert!(min >= (rho - r).abs() - 1e-9);
        }

        #[test]
        fn fold_is_idempotent_and_in_sector(ell in 2usize..20, t in -10.0f64..10.0, r in 0.1f64..10.0) {
            let s = fundamental_sector(ell);
            let p = [r * t.cos(), r * t.sin()];
            let f = s.fold(p);
            prop_assert!(s.contains(f));
            let ff = s.fold(f);
            prop_assert!(distance(f, ff) < 1e-9);
            prop_assert!(s.orbit(f).iter().any(|q| distance(*q, p) < 1e-9));
        }
    }
}
