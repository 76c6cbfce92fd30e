//! Lyapunov-Schmidt reduction on the sector grid: orthogonality basis, the
//! linearized operator `L`, residuals, the map `T = L^{-1}(gamma + R + N_n)`
//! restricted to `E`, and the fixed-point driver for `S o T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::fundamental_sector;
use crate::grid::{sup_norm, CsrMatrix, LuSolver, SectorGrid};
use crate::groundstate::RadialProfile;
use crate::numerics::smoothstep;
use crate::outer::{minimize_outer, InnerData, OuterOptions, OuterSolution};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    U,
    V,
}

/// One orthogonality condition `int field * phi = 0` on one component.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub component: Component,
    /// Folded position of the orbit representative.
    pub representative: [f64; 2],
    pub field: Vec<f64>,
    /// Nonzeros of `weights * field`.
    pub row: Vec<(usize, f64)>,
}

impl Constraint {
    pub fn dot(&self, f: &[f64]) -> f64 {
        self.row.iter().map(|&(a, c)| c * f[a]).sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct OrthoBasis {
    pub constraints: Vec<Constraint>,
}

/// `chi_0(d)`: 1 on `d <= 1`, 0 on `d >= 2`, quintic in between.
pub fn chi0(d: f64) -> f64 {
    1.0 - smoothstep(d - 1.0)
}

/// Basis fields `sum_j chi_0(x - c_j) dU_{c_j}/d|c|` grouped by symmetry orbit.
pub fn build_basis(grid: &SectorGrid, profile: &RadialProfile, centers: &[[f64; 2]], component: Component) -> OrthoBasis {
    let sector = fundamental_sector(grid.ell);
    let mut groups: Vec<([f64; 2], Vec<[f64; 2]>)> = Vec::new();
    for &c in centers {
        if c[0].hypot(c[1]) < 1e-12 {
            continue;
        }
        let f = sector.fold(c);
        match groups.iter_mut().find(|g| (g.0[0] - f[0]).hypot(g.0[1] - f[1]) < 1e-9) {
            Some(g) => g.1.push(c),
            None => groups.push((f, vec![c])),
        }
    }
    let constraints = groups
        .into_iter()
        .map(|(rep, members)| {
            let field = grid.sample(|x, y| {
                members
                    .iter()
                    .map(|c| {
                        let (dx, dy) = (x - c[0], y - c[1]);
                        let d = dx.hypot(dy);
                        if d >= 2.0 || d == 0.0 {
                            return 0.0;
                        }
                        let e = c[0].hypot(c[1]);
                        let (_, du) = profile.evaluate_with_derivative(d);
                        chi0(d) * (-du) * (dx * c[0] + dy * c[1]) / (d * e)
                    })
                    .sum()
            });
            let row = field
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(a, v)| (a, v * grid.weights[a]))
                .collect();
            Constraint { component, representative: rep, field, row }
        })
        .collect();
    OrthoBasis { constraints }
}

impl OrthoBasis {
    pub fn extend(&mut self, other: OrthoBasis) {
        self.constraints.extend(other.constraints);
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Constraint values `<X_j, phi>`, `<Y_j, psi>` (sector integrals).
    pub fn values(&self, phi: &[f64], psi: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| match c.component {
                Component::U => c.dot(phi),
                Component::V => c.dot(psi),
            })
            .collect()
    }

    /// Gram matrix of the basis fields in the sector `L^2` product.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let k = self.len();
        let mut g = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                let (a, b) = (&self.constraints[i], &self.constraints[j]);
                if a.component == b.component {
                    g[i][j] = a.dot(&b.field);
                }
            }
        }
        g
    }

    /// Projects `(phi, psi)` onto `E` along the basis fields.
    pub fn project(&self, phi: &mut [f64], psi: &mut [f64]) {
        let g = self.gram();
        let rhs = self.values(phi, psi);
        let coef = solve_dense(&g, &rhs);
        for (c, x) in self.constraints.iter().zip(coef) {
            let target: &mut [f64] = match c.component {
                Component::U => phi,
                Component::V => psi,
            };
            for (t, f) in target.iter_mut().zip(&c.field) {
                *t -= x * f;
            }
        }
    }
}

/// Small dense solve by Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, v)| r.iter().copied().chain([*v]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        if p == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let f = m[row][col] / p;
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = if m[row][row] == 0.0 { 0.0 } else { (m[row][n] - s) / m[row][row] };
    }
    x
}

/// Residual fields at a pair: discrete `gamma`, `R`, `N_n`, all weighted (dual) vectors.
#[derive(Debug, Clone)]
pub struct Residuals {
    pub gamma: (Vec<f64>, Vec<f64>),
    pub r: (Vec<f64>, Vec<f64>),
    pub n: (Vec<f64>, Vec<f64>),
}

/// Linearized operator and its saddle-point inverse on `E`.
pub struct Reduction {
    pub l1: CsrMatrix,
    pub l2: CsrMatrix,
    kkt: LuSolver,
    n: usize,
    k: usize,
    constraints: Vec<Constraint>,
    /// Weighted `gamma_h = -(A U_r - M mu U_r^{p-1})`.
    pub gamma_h: (Vec<f64>, Vec<f64>),
}

impl Reduction {
    pub fn new(pb: &Problem) -> Result<Self> {
        let c = &pb.config;
        let w = pb.weights();
        let n = pb.n();
        let du: Vec<f64> = (0..n).map(|a| -w[a] * c.mu * (c.p - 1.0) * pb.ur[a].powf(c.p - 2.0)).collect();
        let dv: Vec<f64> = (0..n).map(|a| -w[a] * c.nu * (c.p - 1.0) * pb.vr[a].powf(c.p - 2.0)).collect();
        let l1 = pb.a1.matrix.plus_diagonal(&du);
        let l2 = pb.a2.matrix.plus_diagonal(&dv);
        let k = pb.basis.len();
        let mut t = Vec::with_capacity(l1.nnz() + l2.nnz() + 4 * n);
        for (i, j, v) in l1.triplets() {
            t.push((i, j, v));
        }
        for (i, j, v) in l2.triplets() {
            t.push((n + i, n + j, v));
        }
        for (q, con) in pb.basis.constraints.iter().enumerate() {
            let off = match con.component {
                Component::U => 0,
                Component::V => n,
            };
            for &(a, v) in &con.row {
                t.push((2 * n + q, off + a, v));
                t.push((off + a, 2 * n + q, v));
            }
        }
        let kkt_matrix = CsrMatrix::from_triplets(2 * n + k, 2 * n + k, &t);
        let kkt = LuSolver::factor(&kkt_matrix).map_err(|e| e.context("factoring the reduced saddle system"))?;
        let gu = pb.a1.apply(&pb.ur);
        let gv = pb.a2.apply(&pb.vr);
        let gamma_h = (
            (0..n).map(|a| -(gu[a] - w[a] * c.mu * pb.ur[a].powf(c.p - 1.0))).collect(),
            (0..n).map(|a| -(gv[a] - w[a] * c.nu * pb.vr[a].powf(c.p - 1.0))).collect(),
        );
        Ok(Reduction { l1, l2, kkt, n, k, constraints: pb.basis.constraints.clone(), gamma_h })
    }

    /// `(L_r phi, L_rho psi)` as weighted vectors.
    pub fn apply_l(&self, phi: &[f64], psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.l1.matvec(phi), self.l2.matvec(psi))
    }

    pub fn residuals(&self, pb: &Problem, phi: &[f64], psi: &[f64]) -> Residuals {
        let c = &pb.config;
        let w = pb.weights();
        let n = self.n;
        let (mut r1, mut r2, mut n1, mut n2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for a in 0..n {
            let (u0, v0) = (pb.ur[a], pb.vr[a]);
            let (u, v) = (u0 + phi[a], v0 + psi[a]);
            r1[a] = w[a] * remainder(c.mu, c.p, u0, phi[a]);
            r2[a] = w[a] * remainder(c.nu, c.p, v0, psi[a]);
            let [_, g1, g2] = pb.coupling.eval(u, v);
            n1[a] = w[a] * c.beta * g1;
            n2[a] = w[a] * c.beta * g2;
        }
        Residuals { gamma: self.gamma_h.clone(), r: (r1, r2), n: (n1, n2) }
    }

    /// Solves `L x + B^T lambda = rhs`, `B x = 0`; returns `(phi, psi, lambda)`.
    pub fn invert_on_e(&self, rhs_u: &[f64], rhs_v: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let mut b = Vec::with_capacity(2 * n + self.k);
        b.extend_from_slice(rhs_u);
        b.extend_from_slice(rhs_v);
        b.extend(std::iter::repeat_n(0.0, self.k));
        let x = self.kkt.solve(&b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Linear("saddle-point solve produced non-finite values".into()));
        }
        let phi = x[..n].to_vec();
        let psi = x[n..2 * n].to_vec();
        let lam = x[2 * n..].to_vec();
        // Reject near-singular solves through the residual of the full saddle system.
        let (mut ru, mut rv) = self.apply_l(&phi, &psi);
        let mut con = vec![0.0; self.k];
        for ((c, l), cv) in self.constraints.iter().zip(&lam).zip(con.iter_mut()) {
            let (target, x): (&mut Vec<f64>, &[f64]) = match c.component {
                Component::U => (&mut ru, &phi),
                Component::V => (&mut rv, &psi),
            };
            for &(a, b) in &c.row {
                target[a] += l * b;
                *cv += b * x[a];
            }
        }
        let scale = sup_norm(rhs_u).max(sup_norm(rhs_v)).max(f64::MIN_POSITIVE);
        let worst = (0..n)
            .map(|a| (ru[a] - rhs_u[a]).abs().max((rv[a] - rhs_v[a]).abs()))
            .chain(con.iter().map(|c| c.abs()))
            .fold(0.0f64, f64::max);
        if worst > 1e-8 * scale {
            return Err(Error::Linear(format!("saddle solve residual {worst:.3e} against rhs scale {scale:.3e}")));
        }
        Ok((phi, psi, lam))
    }

    /// `T(phi, psi) = L^{-1}(gamma + R + N_n)` on `E`.
    pub fn t_map(&self, pb: &Problem, phi: &[f64], psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let r = self.residuals(pb, phi, psi);
        let n = self.n;
        let ru: Vec<f64> = (0..n).map(|a| r.gamma.0[a] + r.r.0[a] + r.n.0[a]).collect();
        let rv: Vec<f64> = (0..n).map(|a| r.gamma.1[a] + r.r.1[a] + r.n.1[a]).collect();
        let (tp, ts, _) = self.invert_on_e(&ru, &rv)?;
        Ok((tp, ts))
    }
}

/// `mu (|U + phi|^{p-2}(U + phi) - U^{p-1} - (p-1) U^{p-2} phi)`.
pub fn remainder(mu: f64, p: f64, u0: f64, phi: f64) -> f64 {
    let u = u0 + phi;
    mu * (u.abs().powf(p - 2.0) * u - u0.powf(p - 1.0) - (p - 1.0) * u0.powf(p - 2.0) * phi)
}

/// Pointwise interaction residual
/// `gamma_1 = mu (U_r^{p-1} - sum_j U_{x^j}^{p-1}) + (1 - K_1) U_r` (unweighted).
pub fn gamma_analytic(pb: &Problem, component: Component) -> Vec<f64> {
    let c = &pb.config;
    let (profile, centers, total, k, coef) = match component {
        Component::U => (&pb.u_profile, &pb.x_centers, &pb.ur, &pb.k1, c.mu),
        Component::V => (&pb.v_profile, &pb.y_centers, &pb.vr, &pb.k2, c.nu),
    };
    let own = pb.grid.sample(|x, y| {
        centers.iter().map(|q| profile.evaluate((x - q[0]).hypot(y - q[1])).powf(c.p - 1.0)).sum()
    });
    (0..pb.n()).map(|a| coef * (total[a].powf(c.p - 1.0) - own[a]) + (1.0 - k[a]) * total[a]).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub outer: OuterOptions,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tol: 1e-10, max_iter: 60, outer: OuterOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationLog {
    pub k: usize,
    pub d: f64,
    pub q: Option<f64>,
    pub lambda_score: f64,
    pub energy: f64,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<f64>,
    #[serde(skip)]
    pub outer: OuterSolution,
    pub history: Vec<IterationLog>,
    pub converged: bool,
    pub diverged: bool,
    /// `d(T z, z)` at the final iterate.
    pub t_defect: f64,
    /// Sup over all nodes of `|T z - z|`.
    pub t_defect_sup: f64,
    pub lambda_score: f64,
    pub lambda_bound: f64,
    pub energy: f64,
}

impl FixedPointResult {
    pub fn median_q(&self) -> Option<f64> {
        let mut q: Vec<f64> = self.history.iter().filter_map(|h| h.q).filter(|v| v.is_finite()).collect();
        if q.is_empty() {
            return None;
        }
        q.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(q[q.len() / 2])
    }
}

/// Iterates `z_{k+1} = S(T(z_k))` from `z_0 = S(0, 0)`.
pub fn fixed_point(pb: &Problem, red: &Reduction, opts: &FixedPointOptions) -> Result<FixedPointResult> {
    let zero = InnerData::zeros(pb);
    let mut sol = minimize_outer(pb, &zero, None, &opts.outer).map_err(|e| e.context("outer solve S(0,0)"))?;
    fixed_point_from(pb, red, sol.phi.clone(), sol.psi.clone(), &mut sol, opts)
}

/// Same iteration started from an arbitrary pair (its inner restriction is used).
pub fn fixed_point_from(
    pb: &Problem,
    red: &Reduction,
    phi0: Vec<f64>,
    psi0: Vec<f64>,
    sol: &mut OuterSolution,
    opts: &FixedPointOptions,
) -> Result<FixedPointResult> {
    let (mut phi, mut psi) = (phi0, psi0);
    let mut history = Vec::new();
    let mut d_prev: Option<f64> = None;
    let mut growth = 0;
    let mut converged = false;
    let mut diverged = false;
    for k in 0..opts.max_iter {
        let (tp, ts) = red.t_map(pb, &phi, &psi)?;
        let inner = InnerData::from_pair(pb, &tp, &ts);
        let next = minimize_outer(pb, &inner, Some((&phi, &psi)), &opts.outer)
            .map_err(|e| e.context(format!("outer solve at fixed-point iteration {k}")))?;
        let d = pb.metric((&next.phi, &next.psi), (&phi, &psi));
        let q = d_prev.map(|p| d / p);
        let score = pb.lambda_score(&next.phi, &next.psi);
        history.push(IterationLog { k, d, q, lambda_score: score, energy: next.energy, outer_iterations: next.iterations });
        log::info!("fixed point k={k} d={d:.3e} q={:?} score={score:.3e}", q);
        phi = next.phi.clone();
        psi = next.psi.clone();
        *sol = next;
        if !d.is_finite() {
            diverged = true;
            break;
        }
        if d < opts.tol {
            converged = true;
            break;
        }
        growth = if q.is_some_and(|q| q >= 1.0) { growth + 1 } else { 0 };
        if growth >= 3 {
            diverged = true;
            break;
        }
        d_prev = Some(d);
    }
    let (tp, ts) = red.t_map(pb, &phi, &psi)?;
    let t_defect = pb.metric((&tp, &ts), (&phi, &psi));
    let t_defect_sup = tp.iter().zip(&phi).chain(ts.iter().zip(&psi)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(FixedPointResult {
        lambda_score: pb.lambda_score(&phi, &psi),
        lambda_bound: pb.lambda_bound(),
        energy: sol.energy,
        phi,
        psi,
        outer: sol.clone(),
        history,
        converged,
        diverged,
        t_defect,
        t_defect_sup,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub median_ratio: f64,
}

/// Randomized lower bound for `||L_r u||_{H^{-1}} / ||u||_{H^1}` over `u` in `E_r`.
pub fn coercivity_probe(pb: &Problem, red: &Reduction, samples: usize, seed: u64) -> Result<CoercivityReport> {
    let grid = &pb.grid;
    let ones = vec![1.0; pb.n()];
    let h1 = crate::grid::assemble_with(crate::grid::PotentialTag::Constant(1.0), &ones, grid).matrix;
    let lu = LuSolver::factor(&h1)?;
    let sector = fundamental_sector(pb.config.ell);
    let xcon = pb
        .basis
        .constraints
        .iter()
        .find(|c| c.component == Component::U)
        .ok_or_else(|| Error::Domain("no orthogonality field for the first component".into()))?;
    let r = pb.config.r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(samples);
    for s in 0..samples {
        let bumps: Vec<([f64; 2], f64, f64)> = (0..4)
            .map(|_| {
                let rad = r + rng.random_range(-3.0..3.0f64);
                let th = rng.random_range(0.0..sector.opening);
                let width = rng.random_range(0.5..3.0f64);
                let amp = rng.random_range(-1.0..1.0f64);
                ([rad * th.cos(), rad * th.sin()], width, amp)
            })
            .collect();
        let images: Vec<(Vec<[f64; 2]>, f64, f64)> = bumps.iter().map(|(c, w, a)| (sector.orbit(*c), *w, *a)).collect();
        let mix = if s % 2 == 1 { rng.random_range(-2.0..2.0f64) } else { 0.0 };
        let mut u = grid.sample(|x, y| {
            images
                .iter()
                .map(|(orb, w, a)| a * orb.iter().map(|c| (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (w * w)).exp()).sum::<f64>())
                .sum()
        });
        // Odd samples lean on the near-kernel direction before projection.
        for (ua, fa) in u.iter_mut().zip(&xcon.field) {
            *ua += mix * fa;
        }
        let alpha = xcon.dot(&u) / xcon.dot(&xcon.field);
        for (ua, fa) in u.iter_mut().zip(&xcon.field) {
            *ua -= alpha * fa;
        }
        let lu_u = red.l1.matvec(&u);
        let y = lu.solve(&lu_u);
        let dual: f64 = lu_u.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = h1.form(&u, &u);
        ratios.push((dual / norm).sqrt());
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(CoercivityReport { samples, min_ratio: sorted[0], median_ratio: sorted[sorted.len() / 2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BumpConfiguration;
    use crate::grid::GridSpec;
    use crate::groundstate::solve_ground_state;

    fn coarse(ell: usize) -> Problem {
        let base = solve_ground_state(4.0, 2, 1e-10).unwrap();
        let c = BumpConfiguration::defaults(ell);
        Problem::new(&c, &GridSpec::with_h(0.2), &base).unwrap()
    }

    #[test]
    fn basis_counts_and_supports() {
        let pb = coarse(8);
        let b = &pb.basis;
        assert_eq!(b.constraints.iter().filter(|c| c.component == Component::U).count(), 1);
        assert_eq!(b.constraints.iter().filter(|c| c.component == Component::V).count(), 2);
        for c in &b.constraints {
            let centers = if c.component == Component::U { &pb.x_centers } else { &pb.y_centers };
            for &(a, _) in &c.row {
                let d = centers.iter().map(|q| (pb.grid.x[a] - q[0]).hypot(pb.grid.y[a] - q[1])).fold(f64::INFINITY, f64::min);
                assert!(d < 2.0);
            }
        }
        // Distinct supports: the two V fields are orthogonal.
        let g = b.gram();
        assert_eq!(g[1][2], 0.0);
        assert!(g[0][0] > 0.0 && g[1][1] > 0.0 && g[2][2] > 0.0);
    }

    #[test]
    fn y_orbits_have_equal_strength() {
        let pb = coarse(8);
        let g = pb.basis.gram();
        assert!((g[1][1] - g[2][2]).abs() < 0.05 * g[1][1]);
    }

    #[test]
    fn projection_lands_in_e() {
        let pb = coarse(6);
        let mut phi = pb.ur.clone();
        let mut psi: Vec<f64> = pb.vr.iter().map(|v| v * v).collect();
        pb.basis.project(&mut phi, &mut psi);
        for v in pb.basis.values(&phi, &psi) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn l_is_symmetric() {
        let pb = coarse(6);
        let red = Reduction::new(&pb).unwrap();
        assert_eq!(red.l1.max_asymmetry(), 0.0);
        assert_eq!(red.l2.max_asymmetry(), 0.0);
    }

    #[test]
    fn inverse_recovers_field_in_e() {
        let pb = coarse(6);
        let red = Reduction::new(&pb).unwrap();
        let mut phi: Vec<f64> = pb.grid.sample(|x, y| (-(x - pb.config.r).powi(2) - y * y).exp());
        let mut psi: Vec<f64> = pb.vr.iter().map(|v| 0.1 * v).collect();
        pb.basis.project(&mut phi, &mut psi);
        let (lu, lv) = red.apply_l(&phi, &psi);
        let (p2, s2, lam) = red.invert_on_e(&lu, &lv).unwrap();
        let err = phi.iter().zip(&p2).chain(psi.iter().zip(&s2)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "{err}");
        assert!(lam.iter().all(|l| l.abs() < 1e-9));
    }

    #[test]
    fn remainder_is_quadratic() {
        let (u0, phi) = (1.3, 0.2);
        let r1 = remainder(1.0, 4.0, u0, phi);
        let r2 = remainder(1.0, 4.0, u0, phi / 2.0);
        assert!((r1 / r2 - 4.0).abs() < 0.5);
        assert!(remainder(1.0, 4.0, u0, 0.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_vanishes_for_single_free_bump() {
        let base = solve_ground_state(4.0, 2, 1e-10).unwrap();
        let mut c = BumpConfiguration::defaults(6);
        c.a1 = 0.0;
        c.a2 = 0.0;
        c.beta = 0.0;
        let pb = Problem::with_centers(&c, &GridSpec::with_h(0.2), &base, vec![[0.0, 0.0]], vec![]).unwrap();
        let g = gamma_analytic(&pb, Component::U);
        assert!(sup_norm(&g) < 1e-14);
    }

    #[test]
    fn dense_solver() {
        let a = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        let x = solve_dense(&a, &[4.0, 5.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_contracts_at_eight() {
        let pb = coarse(8);
        let red = Reduction::new(&pb).unwrap();
        let res = fixed_point(&pb, &red, &FixedPointOptions::default()).unwrap();
        assert!(res.converged && !res.diverged);
        assert!(res.median_q().unwrap() < 0.5);
        assert!(res.t_defect < 1e-9, "{}", res.t_defect);
        for c in pb.basis.values(&res.phi, &res.psi) {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn coercivity_floor_holds_at_eight() {
        let pb = coarse(8);
        let red = Reduction::new(&pb).unwrap();
        let c = coercivity_probe(&pb, &red, 10, 3).unwrap();
        assert!(c.min_ratio > 0.05, "{:?}", c);
    }
}
