//! The discretized system at fixed ring radii: approximate solution
//! `(U_r, V_rho)`, elliptic operators, inner masks, the energy `I_n` with its
//! gradient and Hessian, and the norms used by the reduction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{distance, BumpConfiguration};
use crate::grid::{self, build_grid, EllipticOperator, GridSpec, PotentialTag, SectorGrid};
use crate::groundstate::{scale_profile, RadialProfile};
use crate::model::{alpha0_from_centers, build_smoothing, CouplingSpec, SmoothedCoupling};
use crate::reduction::{build_basis, Component, OrthoBasis};

#[derive(Debug, Clone)]
pub struct Problem {
    pub config: BumpConfiguration,
    pub grid: SectorGrid,
    pub u_profile: RadialProfile,
    pub v_profile: RadialProfile,
    pub coupling: SmoothedCoupling,
    pub x_centers: Vec<[f64; 2]>,
    pub y_centers: Vec<[f64; 2]>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub a1: EllipticOperator,
    pub a2: EllipticOperator,
    pub ur: Vec<f64>,
    pub vr: Vec<f64>,
    /// Nodes of `P_1` and `Q_1`.
    pub p_mask: Vec<bool>,
    pub q_mask: Vec<bool>,
    pub basis: OrthoBasis,
}

/// Energy split into its pieces (full plane).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyParts {
    pub quadratic: f64,
    pub power: f64,
    pub coupling: f64,
    pub total: f64,
}

impl Problem {
    /// Problem for the polygonal configuration in `config`.
    pub fn new(config: &BumpConfiguration, spec: &GridSpec, base: &RadialProfile) -> Result<Self> {
        let v = config.vertices();
        Self::with_centers(config, spec, base, v.x_vertices, v.y_vertices)
    }

    /// Problem with explicit bump centers; both sets must be invariant under the symmetry group.
    pub fn with_centers(
        config: &BumpConfiguration,
        spec: &GridSpec,
        base: &RadialProfile,
        x_centers: Vec<[f64; 2]>,
        y_centers: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let grid = build_grid(config, spec).map_err(|e| e.context("building sector grid"))?;
        Self::on_grid(config, grid, base, x_centers, y_centers)
    }

    pub fn on_grid(
        config: &BumpConfiguration,
        grid: SectorGrid,
        base: &RadialProfile,
        x_centers: Vec<[f64; 2]>,
        y_centers: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let reach = x_centers.iter().chain(&y_centers).map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
        if reach > grid.r_inf - 10.0 {
            return Err(Error::Grid(format!("bump at radius {reach} too close to R_inf = {}", grid.r_inf)));
        }
        let u_profile = scale_profile(base, config.mu)?;
        let v_profile = scale_profile(base, config.nu)?;
        let alpha0 = alpha0_from_centers(u_profile.center_value, v_profile.center_value);
        let spec = CouplingSpec { sigma1: config.sigma1, sigma2: config.sigma2, beta: config.beta };
        let coupling = build_smoothing(spec, config.n_smooth.max(2), alpha0)?;
        let k1: Vec<f64> = grid.radius.iter().map(|&s| config.k1(s)).collect();
        let k2: Vec<f64> = grid.radius.iter().map(|&s| config.k2(s)).collect();
        let a1 = grid::assemble_with(PotentialTag::K1, &k1, &grid);
        let a2 = grid::assemble_with(PotentialTag::K2, &k2, &grid);
        let ur = grid::superpose_bumps(&u_profile, &x_centers, &grid);
        let vr = grid::superpose_bumps(&v_profile, &y_centers, &grid);
        let lnln = (config.ell as f64).ln().ln();
        if !(lnln > 0.0) {
            return Err(Error::Domain(format!("inner radius ln ln ell is not positive for ell={}", config.ell)));
        }
        let p_mask = grid::ball_mask(&grid, &x_centers, lnln);
        let q_mask = grid::ball_mask(&grid, &y_centers, lnln);
        let mut basis = build_basis(&grid, &u_profile, &x_centers, Component::U);
        basis.extend(build_basis(&grid, &v_profile, &y_centers, Component::V));
        Ok(Problem {
            config: config.clone(),
            grid,
            u_profile,
            v_profile,
            coupling,
            x_centers,
            y_centers,
            k1,
            k2,
            a1,
            a2,
            ur,
            vr,
            p_mask,
            q_mask,
            basis,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n_nodes()
    }

    pub fn ell(&self) -> f64 {
        self.config.ell as f64
    }

    pub fn weights(&self) -> &[f64] {
        &self.grid.weights
    }

    /// Energy pieces of `I_n(u, v)` over the whole plane.
    pub fn energy_parts(&self, u: &[f64], v: &[f64]) -> EnergyParts {
        let c = &self.config;
        let w = &self.grid.weights;
        let quadratic = 0.5 * (self.a1.form(u, u) + self.a2.form(v, v));
        let mut power = 0.0;
        let mut coupling = 0.0;
        for a in 0..u.len() {
            power += w[a] * (c.mu * u[a].abs().powf(c.p) + c.nu * v[a].abs().powf(c.p)) / c.p;
            coupling += w[a] * self.coupling.eval(u[a], v[a])[0];
        }
        let s = self.grid.copies();
        let (quadratic, power, coupling) = (s * quadratic, s * power, s * c.beta * coupling);
        EnergyParts { quadratic, power, coupling, total: quadratic - power - coupling }
    }

    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        self.energy_parts(u, v).total
    }

    /// Sector-level gradient `(A1 u - M(mu |u|^{p-2} u + beta d1 G_n), ...)`.
    pub fn gradient(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = &self.config;
        let w = &self.grid.weights;
        let mut gu = self.a1.apply(u);
        let mut gv = self.a2.apply(v);
        for a in 0..u.len() {
            let [_, g1, g2] = self.coupling.eval(u[a], v[a]);
            gu[a] -= w[a] * (c.mu * u[a].abs().powf(c.p - 2.0) * u[a] + c.beta * g1);
            gv[a] -= w[a] * (c.nu * v[a].abs().powf(c.p - 2.0) * v[a] + c.beta * g2);
        }
        (gu, gv)
    }

    /// Weighted zeroth-order Hessian entries `(d_uu, d_vv, d_uv)` at each node.
    pub fn hessian_diagonals(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let c = &self.config;
        let w = &self.grid.weights;
        let n = u.len();
        let (mut duu, mut dvv, mut duv) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for a in 0..n {
            let [h11, h12, h22] = self.coupling.hessian(u[a], v[a]);
            duu[a] = -w[a] * (c.mu * (c.p - 1.0) * u[a].abs().powf(c.p - 2.0) + c.beta * h11);
            dvv[a] = -w[a] * (c.nu * (c.p - 1.0) * v[a].abs().powf(c.p - 2.0) + c.beta * h22);
            duv[a] = -w[a] * c.beta * h12;
        }
        (duu, dvv, duv)
    }

    /// Full-plane `H^1` pair norm.
    pub fn pair_h1(&self, phi: &[f64], psi: &[f64]) -> f64 {
        self.grid.pair_h1(phi, psi)
    }

    /// `||phi||_inf + ||psi||_inf`.
    pub fn pair_sup(&self, phi: &[f64], psi: &[f64]) -> f64 {
        grid::sup_norm(phi) + grid::sup_norm(psi)
    }

    /// `ell^{-1/2} ||(phi, psi)|| + ||(phi, psi)||_inf`.
    pub fn lambda_score(&self, phi: &[f64], psi: &[f64]) -> f64 {
        self.ell().powf(-0.5) * self.pair_h1(phi, psi) + self.pair_sup(phi, psi)
    }

    /// `ell^{-m/2 - tau}`.
    pub fn lambda_bound(&self) -> f64 {
        self.ell().powf(-self.config.m / 2.0 - self.config.tau)
    }

    /// `ell^{-1/2} ||xi||_{H^1(P_1)} + ||xi||_{L^inf(P_1)}`.
    pub fn p_norm(&self, xi: &[f64]) -> f64 {
        masked_norm(&self.grid, xi, &self.p_mask, self.ell())
    }

    pub fn q_norm(&self, eta: &[f64]) -> f64 {
        masked_norm(&self.grid, eta, &self.q_mask, self.ell())
    }

    /// Metric `d` between two pairs, through their inner restrictions.
    pub fn metric(&self, a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
        let du: Vec<f64> = a.0.iter().zip(b.0).map(|(x, y)| x - y).collect();
        let dv: Vec<f64> = a.1.iter().zip(b.1).map(|(x, y)| x - y).collect();
        self.p_norm(&du) + self.q_norm(&dv)
    }

    /// Distance from each node to the nearest x-center and y-center.
    pub fn center_distances(&self) -> (Vec<f64>, Vec<f64>) {
        (grid::nearest_distance(&self.grid, &self.x_centers), grid::nearest_distance(&self.grid, &self.y_centers))
    }

    /// Smallest distance between an x-center and a y-center.
    pub fn x_to_y_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for a in &self.x_centers {
            for b in &self.y_centers {
                gap = gap.min(distance(*a, *b));
            }
        }
        gap
    }
}

fn masked_norm(grid: &SectorGrid, f: &[f64], mask: &[bool], ell: f64) -> f64 {
    let sup = f.iter().zip(mask).filter(|(_, m)| **m).fold(0.0f64, |s, (v, _)| s.max(v.abs()));
    ell.powf(-0.5) * grid.h1_sq_on(f, mask).sqrt() + sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::solve_ground_state;
    use approx::assert_relative_eq;

    fn coarse(ell: usize) -> Problem {
        let base = solve_ground_state(4.0, 2, 1e-10).unwrap();
        let c = BumpConfiguration::defaults(ell);
        Problem::new(&c, &GridSpec::with_h(0.2), &base).unwrap()
    }

    #[test]
    fn gradient_matches_energy_differences() {
        let pb = coarse(6);
        let n = pb.n();
        let u: Vec<f64> = pb.ur.iter().enumerate().map(|(a, x)| x + 0.01 * ((a % 7) as f64 - 3.0)).collect();
        let v = pb.vr.clone();
        let (gu, gv) = pb.gradient(&u, &v);
        let s = pb.grid.copies();
        for a in [0, n / 3, n / 2, n - 5] {
            let h = 1e-6;
            let mut up = u.clone();
            up[a] += h;
            let mut um = u.clone();
            um[a] -= h;
            let fd = (pb.energy(&up, &v) - pb.energy(&um, &v)) / (2.0 * h) / s;
            assert!((fd - gu[a]).abs() < 1e-7 * (1.0 + gu[a].abs()), "{fd} {}", gu[a]);
            let mut vp = v.clone();
            vp[a] += h;
            let mut vm = v.clone();
            vm[a] -= h;
            let fd = (pb.energy(&u, &vp) - pb.energy(&u, &vm)) / (2.0 * h) / s;
            assert!((fd - gv[a]).abs() < 1e-7 * (1.0 + gv[a].abs()));
        }
    }

    #[test]
    fn hessian_diagonal_matches_gradient_differences() {
        let pb = coarse(6);
        let (d1, _) = pb.center_distances();
        let a = (0..pb.n()).find(|&a| d1[a] > 1.5 && d1[a] < 2.0 && pb.vr[a] > 1e-6).unwrap_or(pb.n() / 2);
        let u = pb.ur.clone();
        let v: Vec<f64> = pb.vr.iter().map(|x| x + 0.05).collect();
        let (duu, _, duv) = pb.hessian_diagonals(&u, &v);
        let h = 1e-6;
        let mut up = u.clone();
        up[a] += h;
        let mut um = u.clone();
        um[a] -= h;
        let fd_uu = (pb.gradient(&up, &v).0[a] - pb.gradient(&um, &v).0[a]) / (2.0 * h);
        let fd_vu = (pb.gradient(&up, &v).1[a] - pb.gradient(&um, &v).1[a]) / (2.0 * h);
        let diag = pb.a1.matrix.row(a).find(|(j, _)| *j == a).unwrap().1;
        assert_relative_eq!(fd_uu, diag + duu[a], max_relative = 1e-6);
        assert_relative_eq!(fd_vu, duv[a], max_relative = 1e-5, epsilon = 1e-12);
    }

    #[test]
    fn masks_and_basis_shapes() {
        let pb = coarse(8);
        assert!(pb.p_mask.iter().any(|&m| m));
        assert!(pb.q_mask.iter().any(|&m| m));
        assert!(!pb.p_mask.iter().zip(&pb.q_mask).any(|(a, b)| *a && *b));
        assert_eq!(pb.basis.constraints.len(), 3);
        assert!(pb.x_to_y_gap() >= pb.config.rho - pb.config.r - 1e-9);
    }

    #[test]
    fn metric_is_zero_on_identical_pairs() {
        let pb = coarse(6);
        let z = vec![0.1; pb.n()];
        assert_eq!(pb.metric((&z, &z), (&z, &z)), 0.0);
        let o = vec![0.0; pb.n()];
        assert!(pb.metric((&z, &o), (&o, &o)) > 0.1);
    }
}
