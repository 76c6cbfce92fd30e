//! Finite-volume discretization of the plane reduced to one symmetry sector.
//!
//! Unknowns sit at a center node and on rings `r_1 < ... < r_M` at angles
//! `theta_k = (k + 1/2) dtheta`, `k < n_theta`, covering `0 <= theta <= pi/ell`.
//! Both radial edges carry zero-flux (even reflection) conditions; the field
//! vanishes on the circle `R_inf`. Cells are bounded by the mid-radii between
//! rings, so the stiffness matrix is the conservative five-point polar stencil
//! and the lumped mass matrix holds exact cell areas.

pub mod sparse;

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::BumpConfiguration;
use crate::groundstate::RadialProfile;
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::smoothstep;
pub use sparse::{CsrMatrix, LuPattern, LuSolver, PcgOutcome, Preconditioner};

/// Mesh-generation controls.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    /// Spacing near the rings carrying bumps.
    pub h: f64,
    /// Spacing far from the rings, as a multiple of `h`.
    pub coarse_ratio: f64,
    /// Half-width of the refined band around each ring.
    pub band: f64,
    /// Width of the smooth transition out of a band.
    pub transition: f64,
    /// `R_inf - rho`.
    pub margin: f64,
    pub node_cap: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { h: 0.05, coarse_ratio: 4.0, band: 7.0, transition: 3.0, margin: 20.0, node_cap: 2_000_000 }
    }
}

impl GridSpec {
    pub fn with_h(h: f64) -> Self {
        GridSpec { h, ..GridSpec::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SectorGrid {
    pub ell: usize,
    pub opening: f64,
    pub n_theta: usize,
    pub dtheta: f64,
    /// Ring radii `r_1 .. r_M`; the center node is index 0.
    pub rings: Vec<f64>,
    pub r_inf: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub radius: Vec<f64>,
    /// Lumped mass: sector cell areas.
    pub weights: Vec<f64>,
    /// Interior faces `(a, b, coefficient)`.
    pub faces: Vec<(usize, usize, f64)>,
    /// Links of the outermost ring to the Dirichlet circle.
    pub boundary: Vec<(usize, f64)>,
    pub stiffness: CsrMatrix,
}

/// Which potential sits in the zeroth-order term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PotentialTag {
    K1,
    K2,
    Constant(f64),
}

/// Sparse matrix of `int grad a . grad b + K a b` over the sector.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    pub matrix: CsrMatrix,
    pub tag: PotentialTag,
}

impl EllipticOperator {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.matvec(f)
    }

    pub fn form(&self, a: &[f64], b: &[f64]) -> f64 {
        self.matrix.form(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub h1: f64,
    pub l2: f64,
    pub lp: f64,
    pub sup: f64,
}

/// Grid for a configuration: refined around `r` and `rho`, with `R_inf = rho + margin`.
pub fn build_grid(config: &BumpConfiguration, spec: &GridSpec) -> Result<SectorGrid> {
    if !(spec.h > 0.0) {
        return Err(Error::Grid(format!("spacing h={} must be positive", spec.h)));
    }
    let r_inf = config.rho + spec.margin;
    SectorGrid::build(
        config.ell,
        r_inf,
        spec.h,
        spec.coarse_ratio,
        &[config.r, config.rho],
        spec.band,
        spec.transition,
        config.rho,
        spec.node_cap,
    )
}

impl SectorGrid {
    /// `theta_radius` is the radius at which the arc spacing equals `h`.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        ell: usize,
        r_inf: f64,
        h: f64,
        coarse_ratio: f64,
        centers: &[f64],
        band: f64,
        transition: f64,
        theta_radius: f64,
        node_cap: usize,
    ) -> Result<Self> {
        if ell < 2 {
            return Err(Error::Grid(format!("sector needs ell >= 2, got {ell}")));
        }
        if !(h > 0.0 && r_inf > h && coarse_ratio >= 1.0) {
            return Err(Error::Grid(format!("bad mesh controls h={h} r_inf={r_inf} ratio={coarse_ratio}")));
        }
        let opening = PI / ell as f64;
        let n_theta = ((theta_radius * opening / h).ceil() as usize).max(4);
        let rings = graded_rings(r_inf, h, coarse_ratio, centers, band, transition);
        let n_nodes = 1 + rings.len() * n_theta;
        if n_nodes > node_cap {
            return Err(Error::Grid(format!("{n_nodes} nodes exceed the cap of {node_cap}")));
        }
        let dtheta = opening / n_theta as f64;
        let m = rings.len();
        let r_at = |i: usize| if i == 0 { 0.0 } else if i <= m { rings[i - 1] } else { r_inf };
        let half = |i: usize| 0.5 * (r_at(i) + r_at(i + 1));
        let idx = |i: usize, k: usize| 1 + (i - 1) * n_theta + k;

        let mut x = vec![0.0; n_nodes];
        let mut y = vec![0.0; n_nodes];
        let mut radius = vec![0.0; n_nodes];
        let mut weights = vec![0.0; n_nodes];
        let mut faces = Vec::with_capacity(2 * n_nodes);
        let mut boundary = Vec::with_capacity(n_theta);
        weights[0] = 0.5 * half(0).powi(2) * opening;
        for i in 1..=m {
            let ri = r_at(i);
            let (lo, hi) = (half(i - 1), half(i));
            let area = 0.5 * (hi * hi - lo * lo) * dtheta;
            for k in 0..n_theta {
                let t = (k as f64 + 0.5) * dtheta;
                let a = idx(i, k);
                x[a] = ri * t.cos();
                y[a] = ri * t.sin();
                radius[a] = ri;
                weights[a] = area;
                let c_out = hi * dtheta / (r_at(i + 1) - ri);
                if i < m {
                    faces.push((a, idx(i + 1, k), c_out));
                } else {
                    boundary.push((a, c_out));
                }
                if i == 1 {
                    faces.push((0, a, half(0) * dtheta / ri));
                }
                if k + 1 < n_theta {
                    faces.push((a, idx(i, k + 1), (hi - lo) / (ri * dtheta)));
                }
            }
        }
        let mut trips = Vec::with_capacity(4 * faces.len() + boundary.len());
        for &(a, b, c) in &faces {
            trips.push((a, a, c));
            trips.push((b, b, c));
            trips.push((a, b, -c));
            trips.push((b, a, -c));
        }
        for &(a, c) in &boundary {
            trips.push((a, a, c));
        }
        let stiffness = CsrMatrix::from_triplets(n_nodes, n_nodes, &trips);
        Ok(SectorGrid {
            ell,
            opening,
            n_theta,
            dtheta,
            rings,
            r_inf,
            x,
            y,
            radius,
            weights,
            faces,
            boundary,
            stiffness,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, ring: usize, k: usize) -> usize {
        1 + (ring - 1) * self.n_theta + k
    }

    pub fn point(&self, a: usize) -> [f64; 2] {
        [self.x[a], self.y[a]]
    }

    pub fn theta(&self, a: usize) -> f64 {
        if a == 0 {
            0.0
        } else {
            ((a - 1) % self.n_theta) as f64 * self.dtheta + 0.5 * self.dtheta
        }
    }

    pub fn max_radial_spacing(&self) -> f64 {
        let mut prev = 0.0;
        let mut worst: f64 = 0.0;
        for &r in self.rings.iter().chain(std::iter::once(&self.r_inf)) {
            worst = worst.max(r - prev);
            prev = r;
        }
        worst
    }

    /// Largest radial spacing among rings within `width` of `center`.
    pub fn local_radial_spacing(&self, center: f64, width: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.rings.windows(2) {
            if (w[0] - center).abs() <= width || (w[1] - center).abs() <= width {
                worst = worst.max(w[1] - w[0]);
            }
        }
        worst
    }

    /// Copies of the sector that tile the plane.
    pub fn copies(&self) -> f64 {
        2.0 * self.ell as f64
    }

    /// Full-plane integral of a symmetric field.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.copies() * self.weights.iter().zip(f).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn integral_of(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.copies() * (0..self.n_nodes()).map(|a| self.weights[a] * f(a)).sum::<f64>()
    }

    /// Node-wise evaluation of a function of position.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
        (0..self.n_nodes()).into_par_iter().map(|a| f(self.x[a], self.y[a])).collect()
    }

    /// Sector Dirichlet form `sum c (f_a - f_b)^2` plus boundary links.
    pub fn dirichlet_form(&self, f: &[f64]) -> f64 {
        self.stiffness.form(f, f)
    }

    pub fn h1_sq(&self, f: &[f64]) -> f64 {
        let mass: f64 = self.weights.iter().zip(f).map(|(w, v)| w * v * v).sum();
        self.copies() * (self.dirichlet_form(f) + mass)
    }

    /// Full-plane `H^1` norm squared restricted to the nodes in `mask`
    /// (faces with both ends inside).
    pub fn h1_sq_on(&self, f: &[f64], mask: &[bool]) -> f64 {
        let mut s = 0.0;
        for &(a, b, c) in &self.faces {
            if mask[a] && mask[b] {
                s += c * (f[a] - f[b]).powi(2);
            }
        }
        for a in 0..f.len() {
            if mask[a] {
                s += self.weights[a] * f[a] * f[a];
            }
        }
        self.copies() * s
    }

    pub fn norms(&self, f: &[f64], p: f64) -> Norms {
        let l2 = self.integral_of(|a| f[a] * f[a]).sqrt();
        let lp = self.integral_of(|a| f[a].abs().powf(p)).powf(1.0 / p);
        Norms { h1: self.h1_sq(f).sqrt(), l2, lp, sup: sup_norm(f) }
    }

    /// `sqrt(||a||_{H^1}^2 + ||b||_{H^1}^2)`.
    pub fn pair_h1(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.h1_sq(a) + self.h1_sq(b)).sqrt()
    }

    /// CSV with columns `r, theta, x, y` followed by the named fields.
    pub fn write_csv(&self, path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "r,theta,x,y")?;
        for (name, _) in columns {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for a in 0..self.n_nodes() {
            write!(out, "{},{},{},{}", fmt17(self.radius[a]), fmt17(self.theta(a)), fmt17(self.x[a]), fmt17(self.y[a]))?;
            for (_, c) in columns {
                write!(out, ",{}", fmt17(c[a]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Structured `x y value` blocks, one per ring, separated by blank lines (gnuplot `splot`).
    pub fn write_gnuplot(&self, path: &Path, f: &[f64]) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# x y value; one block per ring")?;
        for i in 1..=self.rings.len() {
            for k in 0..self.n_theta {
                let a = self.node(i, k);
                writeln!(out, "{} {} {}", fmt17(self.x[a]), fmt17(self.y[a]), fmt17(f[a]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Radial nodes from a smooth spacing function: `h` inside the bands, `coarse_ratio * h` far away.
fn graded_rings(r_inf: f64, h: f64, coarse_ratio: f64, centers: &[f64], band: f64, transition: f64) -> Vec<f64> {
    let rel = |s: f64| {
        let mut w: f64 = 0.0;
        for &c in centers {
            let d = (s - c).abs();
            let t = if d <= band { 1.0 } else if transition > 0.0 { 1.0 - smoothstep((d - band) / transition) } else { 0.0 };
            w = w.max(t);
        }
        1.0 + (coarse_ratio - 1.0) * (1.0 - w)
    };
    // Cumulative `xi(s) = int_0^s ds / rel(s)`; nodes at equal steps in xi.
    let samples = 20_000;
    let ds = r_inf / samples as f64;
    let mut s_tab = Vec::with_capacity(samples + 1);
    let mut xi_tab = Vec::with_capacity(samples + 1);
    let mut acc = 0.0;
    for j in 0..=samples {
        let s = j as f64 * ds;
        if j > 0 {
            acc += 0.5 * ds * (1.0 / rel(s - ds) + 1.0 / rel(s));
        }
        s_tab.push(s);
        xi_tab.push(acc);
    }
    let n = (acc / h).ceil().max(2.0) as usize;
    let inverse = MonotoneCubic::from_points(xi_tab, s_tab);
    (1..n).map(|i| inverse.eval(acc * i as f64 / n as f64)).collect()
}

/// `stiffness + diag(weights * K)` for the selected potential.
pub fn assemble(tag: PotentialTag, config: &BumpConfiguration, grid: &SectorGrid) -> EllipticOperator {
    let k: Vec<f64> = grid
        .radius
        .iter()
        .map(|&s| match tag {
            PotentialTag::K1 => config.k1(s),
            PotentialTag::K2 => config.k2(s),
            PotentialTag::Constant(c) => c,
        })
        .collect();
    assemble_with(tag, &k, grid)
}

pub fn assemble_with(tag: PotentialTag, k: &[f64], grid: &SectorGrid) -> EllipticOperator {
    let d: Vec<f64> = grid.weights.iter().zip(k).map(|(w, k)| w * k).collect();
    EllipticOperator { matrix: grid.stiffness.plus_diagonal(&d), tag }
}

/// Solves `op x = rhs` by incomplete-Cholesky preconditioned conjugate gradients.
pub fn solve_spd(op: &EllipticOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let max_iter = 20 * rhs.len().max(100);
    let out = sparse::pcg(&op.matrix, rhs, tol, max_iter, Preconditioner::IncompleteCholesky)?;
    log::debug!("pcg: {} iterations, residual {:.3e}", out.iterations, out.relative_residual);
    Ok(out.solution)
}

/// Spectral condition estimate `lambda_max / lambda_min` by Lanczos.
pub fn condition_estimate(op: &EllipticOperator, steps: usize, seed: u64) -> f64 {
    let (lo, hi) = sparse::lanczos_extremes(&op.matrix, steps, seed);
    hi / lo
}

/// `sum_c U(|x - c|)` over all centers, evaluated at every node.
pub fn superpose_bumps(profile: &RadialProfile, centers: &[[f64; 2]], grid: &SectorGrid) -> Vec<f64> {
    grid.sample(|x, y| centers.iter().map(|c| profile.evaluate((x - c[0]).hypot(y - c[1]))).sum())
}

/// Nodes closer than `radius` to any of `centers`.
pub fn ball_mask(grid: &SectorGrid, centers: &[[f64; 2]], radius: f64) -> Vec<bool> {
    (0..grid.n_nodes())
        .map(|a| centers.iter().any(|c| (grid.x[a] - c[0]).hypot(grid.y[a] - c[1]) < radius))
        .collect()
}

/// Distance from each node to the nearest of `centers`.
pub fn nearest_distance(grid: &SectorGrid, centers: &[[f64; 2]]) -> Vec<f64> {
    grid.sample(|x, y| centers.iter().map(|c| (x - c[0]).hypot(y - c[1])).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fundamental_sector, make_vertices};
    use crate::groundstate::solve_ground_state;
    use crate::numerics::fit;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid(h: f64) -> SectorGrid {
        SectorGrid::build(8, 10.0, h, 1.0, &[], 0.0, 0.0, 3.0, 1_000_000).unwrap()
    }

    #[test]
    fn default_grid_builds_within_cap() {
        let mut c = BumpConfiguration::defaults(8);
        c.rho = 10.0;
        c.r = 5.0;
        let spec = GridSpec { margin: 20.0, ..GridSpec::with_h(0.05) };
        let g = build_grid(&c, &spec).unwrap();
        assert!(g.n_nodes() < spec.node_cap);
        assert!((g.r_inf - 30.0).abs() < 1e-12);
        assert!(g.local_radial_spacing(5.0, 2.0) <= 0.05 + 1e-12);
        assert!(g.local_radial_spacing(10.0, 2.0) <= 0.05 + 1e-12);
        assert!(g.weights.iter().all(|&w| w > 0.0));
        let tight = GridSpec { node_cap: 100, ..spec };
        assert!(matches!(build_grid(&c, &tight), Err(Error::Grid(_))));
    }

    #[test]
    fn halving_h_halves_spacing() {
        let a = SectorGrid::build(8, 30.0, 0.1, 4.0, &[5.0, 10.0], 5.0, 3.0, 10.0, 10_000_000).unwrap();
        let b = SectorGrid::build(8, 30.0, 0.05, 4.0, &[5.0, 10.0], 5.0, 3.0, 10.0, 10_000_000).unwrap();
        let ratio = b.max_radial_spacing() / a.max_radial_spacing();
        assert!((ratio - 0.5).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn cell_areas_tile_the_disk() {
        let g = small_grid(0.1);
        let outer = 0.5 * (g.rings.last().unwrap() + g.r_inf);
        let total: f64 = g.weights.iter().sum();
        assert_relative_eq!(total, 0.5 * outer * outer * g.opening, max_relative = 1e-13);
        // Constant field with K = 1: only the mass and the Dirichlet links contribute.
        let c = BumpConfiguration::defaults(8);
        let op = assemble(PotentialTag::Constant(1.0), &c, &g);
        let ones = vec![1.0; g.n_nodes()];
        let links: f64 = g.boundary.iter().map(|b| b.1).sum();
        assert_relative_eq!(op.form(&ones, &ones), total + links, max_relative = 1e-13);
    }

    #[test]
    fn form_is_symmetric() {
        let g = small_grid(0.2);
        let c = BumpConfiguration::defaults(8);
        let op = assemble(PotentialTag::K1, &c, &g);
        assert_eq!(op.matrix.max_asymmetry(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..g.n_nodes()).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..g.n_nodes()).map(|_| rng.random::<f64>()).collect();
        assert_relative_eq!(op.form(&a, &b), op.form(&b, &a), max_relative = 1e-13);
    }

    fn gaussian_orbit(ell: usize, center: [f64; 2]) -> Vec<[f64; 2]> {
        fundamental_sector(ell).orbit(center)
    }

    /// Manufactured solution: sum of Gaussians over the orbit of x^1.
    fn manufactured_error(h: f64) -> f64 {
        let ell = 8;
        let c = BumpConfiguration::defaults(ell);
        let g = SectorGrid::build(ell, 10.0, h, 1.0, &[], 0.0, 0.0, 4.0, 10_000_000).unwrap();
        let centers = gaussian_orbit(ell, [3.0, 0.0]);
        let exact = g.sample(|x, y| centers.iter().map(|q| (-((x - q[0]).powi(2) + (y - q[1]).powi(2))).exp()).sum());
        let f = g.sample(|x, y| {
            let s = x.hypot(y);
            centers
                .iter()
                .map(|q| {
                    let d2 = (x - q[0]).powi(2) + (y - q[1]).powi(2);
                    let e = (-d2).exp();
                    (4.0 - 4.0 * d2) * e + c.k1(s) * e
                })
                .sum()
        });
        let op = assemble(PotentialTag::K1, &c, &g);
        let rhs: Vec<f64> = f.iter().zip(&g.weights).map(|(v, w)| v * w).collect();
        let u = solve_spd(&op, &rhs, 1e-13).unwrap();
        u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    #[test]
    fn manufactured_solution_second_order() {
        let hs = [0.2, 0.1, 0.05];
        let errs: Vec<f64> = hs.iter().map(|&h| manufactured_error(h)).collect();
        let fitl = fit::line(&hs.map(f64::ln), &errs.iter().map(|e| e.ln()).collect::<Vec<_>>());
        assert!(fitl.slope > 1.8 && fitl.slope < 2.2, "errors {errs:?}, order {}", fitl.slope);
    }

    #[test]
    fn spd_solver_roundtrip() {
        let g = small_grid(0.2);
        let c = BumpConfiguration::defaults(8);
        let op = assemble(PotentialTag::Constant(1.0), &c, &g);
        assert!(solve_spd(&op, &vec![0.0; g.n_nodes()], 1e-12).unwrap().iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..g.n_nodes()).map(|_| rng.random::<f64>() - 0.5).collect();
        let b = op.apply(&x);
        let y = solve_spd(&op, &b, 1e-13).unwrap();
        let err = x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn condition_grows_under_refinement() {
        let c = BumpConfiguration::defaults(8);
        let k1 = condition_estimate(&assemble(PotentialTag::Constant(1.0), &c, &small_grid(0.4)), 60, 1);
        let k2 = condition_estimate(&assemble(PotentialTag::Constant(1.0), &c, &small_grid(0.2)), 60, 1);
        assert!(k2 > 2.0 * k1, "{k1} {k2}");
    }

    #[test]
    fn single_bump_superposition() {
        let prof = solve_ground_state(4.0, 2, 1e-10).unwrap();
        let g = small_grid(0.2);
        let u = superpose_bumps(&prof, &[[0.0, 0.0]], &g);
        for a in [0, 5, 100, g.n_nodes() - 1] {
            assert_relative_eq!(u[a], prof.evaluate(g.radius[a]), max_relative = 1e-14);
        }
        let n = g.norms(&u, 4.0);
        assert_relative_eq!(n.l2 * n.l2, prof.power_integral(2.0), max_relative = 1e-2);
        assert_relative_eq!(n.h1 * n.h1, prof.power_integral(2.0) + prof.gradient_integral(), max_relative = 2e-2);
        assert_eq!(g.norms(&vec![0.0; g.n_nodes()], 4.0), Norms { h1: 0.0, l2: 0.0, lp: 0.0, sup: 0.0 });
        assert_eq!(g.pair_h1(&u, &vec![0.0; g.n_nodes()]), n.h1);
    }

    #[test]
    fn vertex_value_is_own_bump_plus_tails() {
        let prof = solve_ground_state(4.0, 2, 1e-10).unwrap();
        let mut prev = f64::INFINITY;
        for f in [0.0, 0.5, 1.0] {
            let (d1, _) = crate::geometry::parameter_box(8, 2.0).unwrap();
            let r = d1.at(f);
            let v = make_vertices(8, r, 2.0 * r);
            let g = SectorGrid::build(8, 2.0 * r + 10.0, 0.1, 1.0, &[], 0.0, 0.0, r, 10_000_000).unwrap();
            let u = superpose_bumps(&prof, &v.x_vertices, &g);
            let a = (0..g.n_nodes())
                .min_by(|&a, &b| {
                    let da = (g.x[a] - r).hypot(g.y[a]);
                    let db = (g.x[b] - r).hypot(g.y[b]);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            // Independent tail sum over the other vertices, at the node itself.
            let tails: f64 = v.x_vertices[1..].iter().map(|q| prof.evaluate((g.x[a] - q[0]).hypot(g.y[a] - q[1]))).sum();
            let direct = prof.evaluate((g.x[a] - r).hypot(g.y[a]));
            assert_relative_eq!(u[a], direct + tails, max_relative = 1e-3);
            let ratio = tails / direct;
            assert!(ratio < 0.2 && ratio < prev, "{ratio}");
            prev = ratio;
        }
    }

    #[test]
    fn sector_norm_matches_full_plane_count() {
        let g = small_grid(0.2);
        let f = g.sample(|x, y| (-(x * x + y * y) / 4.0).exp());
        let sector: f64 = g.weights.iter().zip(&f).map(|(w, v)| w * v * v).sum();
        assert_relative_eq!(g.norms(&f, 2.0).l2.powi(2), 16.0 * sector, max_relative = 1e-14);
    }
}
