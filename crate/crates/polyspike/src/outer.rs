//! Outer problem: minimize `I_n(U_r + phi, V_rho + psi)` with the inner values
//! of `(phi, psi)` pinned on `P_1`, `Q_1` and `(phi, psi)` in `E`.
//!
//! Newton on the saddle system with pinned rows replaced by identity rows, an
//! Armijo line search on the energy, and a Levenberg shift when the Newton
//! direction fails to descend.

use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::fundamental_sector;
use crate::grid::{fmt17, sup_norm, CsrMatrix, LuPattern, LuSolver};
use crate::numerics::fit;
use crate::problem::Problem;
use crate::reduction::{solve_dense, Component};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OuterOptions {
    /// Stop when the projected gradient drops below `grad_tol (1 + |I|)`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    /// Largest sup-norm change allowed in one step.
    pub max_step: f64,
    /// Abort once `||(phi, psi)||_inf` exceeds this.
    pub max_deviation: f64,
}

impl Default for OuterOptions {
    fn default() -> Self {
        OuterOptions { grad_tol: 1e-9, max_iter: 80, armijo: 1e-4, max_step: 0.5, max_deviation: 3.0 }
    }
}

/// Inner data `(phi_0, psi_0)`; only entries inside `P_1` and `Q_1` are used.
#[derive(Debug, Clone)]
pub struct InnerData {
    pub phi0: Vec<f64>,
    pub psi0: Vec<f64>,
}

impl InnerData {
    pub fn zeros(pb: &Problem) -> Self {
        InnerData { phi0: vec![0.0; pb.n()], psi0: vec![0.0; pb.n()] }
    }

    pub fn from_pair(pb: &Problem, phi: &[f64], psi: &[f64]) -> Self {
        let keep = |f: &[f64], m: &[bool]| f.iter().zip(m).map(|(v, &k)| if k { *v } else { 0.0 }).collect();
        InnerData { phi0: keep(phi, &pb.p_mask), psi0: keep(psi, &pb.q_mask) }
    }

    pub fn scaled(&self, s: f64) -> Self {
        InnerData { phi0: self.phi0.iter().map(|v| s * v).collect(), psi0: self.psi0.iter().map(|v| s * v).collect() }
    }

    /// `||phi_0||_{L^inf(P_1)} + ||psi_0||_{L^inf(Q_1)}`.
    pub fn sup(&self, pb: &Problem) -> f64 {
        let s = |f: &[f64], m: &[bool]| f.iter().zip(m).filter(|(_, k)| **k).fold(0.0f64, |a, (v, _)| a.max(v.abs()));
        s(&self.phi0, &pb.p_mask) + s(&self.psi0, &pb.q_mask)
    }
}

/// Sup of the solution outside the inner balls against `(ln ell)^{-1/2}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CapReport {
    pub u_sup_off_p: f64,
    pub v_sup_off_q: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OuterIter {
    pub k: usize,
    pub energy: f64,
    pub projected_gradient: f64,
    pub step_sup: f64,
    pub alpha: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OuterSolution {
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub projected_gradient: f64,
    pub converged: bool,
    pub cap: CapReport,
    pub log: Vec<OuterIter>,
}

impl OuterSolution {
    pub fn write_log(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "k,energy,projected_gradient,step_sup,alpha,shift")?;
        for r in &self.log {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.k,
                fmt17(r.energy),
                fmt17(r.projected_gradient),
                fmt17(r.step_sup),
                fmt17(r.alpha),
                fmt17(r.shift)
            )?;
        }
        Ok(())
    }

    pub fn min_values(&self) -> (f64, f64) {
        (self.u.iter().copied().fold(f64::INFINITY, f64::min), self.v.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Index bookkeeping for the stacked unknown `(phi, psi)`.
struct Layout {
    n: usize,
    pinned: Vec<bool>,
    /// Constraint rows over the stacked index, and the matching primal fields.
    rows: Vec<Vec<(usize, f64)>>,
    fields: Vec<Vec<(usize, f64)>>,
    /// Gram matrix of the constraints restricted to free nodes.
    gram: Vec<Vec<f64>>,
}

impl Layout {
    fn new(pb: &Problem) -> Self {
        let n = pb.n();
        let pinned: Vec<bool> = pb.p_mask.iter().chain(&pb.q_mask).copied().collect();
        let mut rows = Vec::new();
        let mut fields = Vec::new();
        for c in &pb.basis.constraints {
            let off = match c.component {
                Component::U => 0,
                Component::V => n,
            };
            rows.push(c.row.iter().map(|&(a, v)| (off + a, v)).collect::<Vec<_>>());
            fields.push(c.row.iter().map(|&(a, _)| (off + a, c.field[a])).collect::<Vec<_>>());
        }
        let k = rows.len();
        let mut dense_fields = vec![vec![0.0; 2 * n]; k];
        for (q, f) in fields.iter().enumerate() {
            for &(i, v) in f {
                if !pinned[i] {
                    dense_fields[q][i] = v;
                }
            }
        }
        let gram = (0..k)
            .map(|q| (0..k).map(|r| rows[q].iter().map(|&(i, v)| v * dense_fields[r][i]).sum()).collect())
            .collect();
        Layout { n, pinned, rows, fields, gram }
    }

    fn constraint_values(&self, z: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(i, v)| v * z[i]).sum()).collect()
    }

    /// Moves the free part of `z` along the constraint fields to satisfy `B z = 0`.
    fn project(&self, z: &mut [f64]) {
        if self.rows.is_empty() {
            return;
        }
        let c = self.constraint_values(z);
        let alpha = solve_dense(&self.gram, &c);
        for (f, a) in self.fields.iter().zip(alpha) {
            for &(i, v) in f {
                if !self.pinned[i] {
                    z[i] -= a * v;
                }
            }
        }
    }

    /// Dual norm of the gradient restricted to free nodes and projected on the tangent space.
    fn projected_gradient(&self, g: &[f64], w: &[f64], copies: f64) -> f64 {
        let n = self.n;
        let weight = |i: usize| w[i % n];
        let gf: Vec<f64> = g.iter().enumerate().map(|(i, v)| if self.pinned[i] { 0.0 } else { *v }).collect();
        let rhs: Vec<f64> = self.fields.iter().map(|f| f.iter().filter(|(i, _)| !self.pinned[*i]).map(|&(i, v)| v * gf[i]).sum()).collect();
        let beta = if rhs.is_empty() { vec![] } else { solve_dense(&self.gram, &rhs) };
        let mut gt = gf;
        for (r, b) in self.rows.iter().zip(beta) {
            for &(i, v) in r {
                if !self.pinned[i] {
                    gt[i] -= b * v;
                }
            }
        }
        (copies * gt.iter().enumerate().map(|(i, v)| v * v / weight(i)).sum::<f64>()).sqrt()
    }
}

/// Saddle matrix with the pattern fixed by the grid, couplings and constraints.
fn saddle_matrix(pb: &Problem, lay: &Layout, duu: &[f64], dvv: &[f64], duv: &[f64], shift: f64) -> CsrMatrix {
    let n = lay.n;
    let k = lay.rows.len();
    let w = pb.weights();
    let mut t = Vec::with_capacity(pb.a1.matrix.nnz() * 2 + 4 * n + 4 * k * 64);
    let pin = |i: usize, j: usize, v: f64| if lay.pinned[i] { if i == j { 1.0 } else { 0.0 } } else { v };
    for (off, op, d) in [(0, &pb.a1.matrix, duu), (n, &pb.a2.matrix, dvv)] {
        for (i, j, v) in op.triplets() {
            let val = if i == j { v + d[i] + shift * w[i] } else { v };
            t.push((off + i, off + j, pin(off + i, off + j, val)));
        }
    }
    for a in 0..n {
        t.push((a, n + a, pin(a, n + a, duv[a])));
        t.push((n + a, a, pin(n + a, a, duv[a])));
    }
    for (q, r) in lay.rows.iter().enumerate() {
        for &(i, v) in r {
            t.push((2 * n + q, i, v));
            t.push((i, 2 * n + q, pin(i, 2 * n + q, v)));
        }
    }
    CsrMatrix::from_triplets(2 * n + k, 2 * n + k, &t)
}

fn split(z: &[f64], n: usize) -> (&[f64], &[f64]) {
    (&z[..n], &z[n..2 * n])
}

/// The outer minimizer for the given inner data.
pub fn minimize_outer(pb: &Problem, inner: &InnerData, start: Option<(&[f64], &[f64])>, opts: &OuterOptions) -> Result<OuterSolution> {
    let n = pb.n();
    let lay = Layout::new(pb);
    let mut z = vec![0.0; 2 * n];
    if let Some((p, s)) = start {
        z[..n].copy_from_slice(p);
        z[n..].copy_from_slice(s);
    }
    for a in 0..n {
        if pb.p_mask[a] {
            z[a] = inner.phi0[a];
        }
        if pb.q_mask[a] {
            z[n + a] = inner.psi0[a];
        }
    }
    lay.project(&mut z);
    let full = |z: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let (p, s) = split(z, n);
        (pb.ur.iter().zip(p).map(|(a, b)| a + b).collect(), pb.vr.iter().zip(s).map(|(a, b)| a + b).collect())
    };
    let energy_of = |z: &[f64]| {
        let (u, v) = full(z);
        pb.energy(&u, &v)
    };
    let copies = pb.grid.copies();
    let w = pb.weights();
    let mut pattern: Option<LuPattern> = None;
    let mut energy = energy_of(&z);
    let mut log = Vec::new();
    let mut converged = false;
    let mut polish = 0;
    let mut pg = f64::INFINITY;
    let mut iterations = 0;
    for k in 0..opts.max_iter {
        iterations = k;
        let (u, v) = full(&z);
        let (gu, gv) = pb.gradient(&u, &v);
        let g: Vec<f64> = gu.into_iter().chain(gv).collect();
        pg = lay.projected_gradient(&g, w, copies);
        let tol = opts.grad_tol * (1.0 + energy.abs());
        if pg < tol {
            converged = true;
            if polish >= 2 {
                break;
            }
            polish += 1;
        }
        let (duu, dvv, duv) = pb.hessian_diagonals(&u, &v);
        let bz = lay.constraint_values(&z);
        let mut rhs: Vec<f64> = g.iter().enumerate().map(|(i, v)| if lay.pinned[i] { 0.0 } else { -v }).collect();
        rhs.extend(bz.iter().map(|c| -c));
        let mut shift = 0.0;
        let mut dir = None;
        for attempt in 0..10 {
            let m = saddle_matrix(pb, &lay, &duu, &dvv, &duv, shift);
            if pattern.is_none() {
                pattern = Some(LuPattern::analyze(&m)?);
            }
            if let Ok(lu) = LuSolver::factor_with(pattern.as_ref().unwrap(), &m) {
                let x = lu.solve(&rhs);
                let d = &x[..2 * n];
                let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
                if d.iter().all(|v| v.is_finite()) && slope < 0.0 {
                    dir = Some(d.to_vec());
                    break;
                }
                if slope == 0.0 && d.iter().all(|v| *v == 0.0) {
                    dir = Some(d.to_vec());
                    break;
                }
            }
            shift = if attempt == 0 { 1e-2 } else { shift * 10.0 };
        }
        let Some(mut d) = dir else {
            if converged {
                break;
            }
            return Err(Error::Convergence(format!("no descent direction at outer iteration {k} (projected gradient {pg:.3e})")));
        };
        let dsup = sup_norm(&d);
        if dsup > opts.max_step {
            let s = opts.max_step / dsup;
            d.iter_mut().for_each(|v| *v *= s);
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() * copies;
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let e = energy_of(&trial);
            let noise = 1e-13 * (1.0 + energy.abs());
            if e <= energy + opts.armijo * alpha * slope || (e - energy).abs() <= noise {
                accepted = Some((trial, e));
                break;
            }
            alpha *= 0.5;
        }
        let step_sup = alpha * sup_norm(&d);
        log.push(OuterIter { k, energy, projected_gradient: pg, step_sup, alpha, shift });
        let Some((trial, e)) = accepted else {
            log::warn!("outer line search failed at iteration {k}, projected gradient {pg:.3e}");
            break;
        };
        z = trial;
        lay.project(&mut z);
        for a in 0..n {
            if pb.p_mask[a] {
                z[a] = inner.phi0[a];
            }
            if pb.q_mask[a] {
                z[n + a] = inner.psi0[a];
            }
        }
        energy = energy_of(&z);
        if sup_norm(&z) > opts.max_deviation {
            return Err(Error::Convergence(format!(
                "outer iterate left the neighbourhood of the approximate solution (sup {:.3e}, energy {e:.6e})",
                sup_norm(&z)
            )));
        }
        if converged && step_sup < 1e-14 {
            break;
        }
    }
    let (u, v) = full(&z);
    let (phi, psi) = split(&z, n);
    let off = |f: &[f64], m: &[bool]| f.iter().zip(m).filter(|(_, k)| !**k).fold(0.0f64, |a, (x, _)| a.max(x.abs()));
    let bound = pb.ell().ln().powf(-0.5);
    let (us, vs) = (off(&u, &pb.p_mask), off(&v, &pb.q_mask));
    let cap = CapReport { u_sup_off_p: us, v_sup_off_q: vs, bound, satisfied: us <= bound && vs <= bound };
    Ok(OuterSolution {
        phi: phi.to_vec(),
        psi: psi.to_vec(),
        u,
        v,
        energy: energy_of(&z),
        iterations,
        projected_gradient: pg,
        converged,
        cap,
        log,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub shells: usize,
}

/// Fits `log max|f|` over distance shells from `centers`, for distances in `[d_lo, d_hi]`.
pub fn shell_decay(pb: &Problem, f: &[f64], centers: &[[f64; 2]], d_lo: f64, d_hi: f64, width: f64) -> Option<DecayFit> {
    let dist = crate::grid::nearest_distance(&pb.grid, centers);
    let bins = ((d_hi - d_lo) / width).floor() as usize;
    let mut env = vec![0.0f64; bins];
    for (d, v) in dist.iter().zip(f) {
        if *d >= d_lo && *d < d_lo + bins as f64 * width {
            let b = ((d - d_lo) / width) as usize;
            env[b] = env[b].max(v.abs());
        }
    }
    let pts: Vec<(f64, f64)> = env
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 1e-13)
        .map(|(b, e)| (d_lo + (b as f64 + 0.5) * width, e.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let l = fit::line(&x, &y);
    Some(DecayFit { slope: l.slope, intercept: l.intercept, r_squared: l.r_squared, shells: x.len() })
}

/// Exponential decay of `u` away from the x-centers, outside `P_1`.
pub fn check_decay(pb: &Problem, sol: &OuterSolution) -> Option<DecayFit> {
    let lo = pb.ell().ln().ln() + 0.5;
    shell_decay(pb, &sol.u, &pb.x_centers, lo, lo + 8.0, 0.5)
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub inner_sup: f64,
    pub outer_sup: f64,
    pub ratio: f64,
}

/// Compares outer solutions for `inner` and `inner / 2`.
pub fn lipschitz_probe(pb: &Problem, inner: &InnerData, opts: &OuterOptions) -> Result<LipschitzReport> {
    let half = inner.scaled(0.5);
    let a = minimize_outer(pb, inner, None, opts)?;
    let b = minimize_outer(pb, &half, Some((&a.phi, &a.psi)), opts)?;
    let diff = InnerData {
        phi0: inner.phi0.iter().zip(&half.phi0).map(|(x, y)| x - y).collect(),
        psi0: inner.psi0.iter().zip(&half.psi0).map(|(x, y)| x - y).collect(),
    };
    let inner_sup = diff.sup(pb);
    let dw: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect();
    let dz: Vec<f64> = a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect();
    let outer_sup = sup_norm(&dw) + sup_norm(&dz);
    Ok(LipschitzReport { inner_sup, outer_sup, ratio: outer_sup / inner_sup })
}

/// Smooth symmetric random perturbation supported off the inner balls, in `E`.
fn random_feasible_direction(pb: &Problem, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let sector = fundamental_sector(pb.config.ell);
    let mut make = |mask: &[bool], radius: f64| {
        let bumps: Vec<(Vec<[f64; 2]>, f64, f64)> = (0..3)
            .map(|_| {
                let rad = radius + rng.random_range(-2.0..2.0f64);
                let th = rng.random_range(0.0..sector.opening);
                (sector.orbit([rad * th.cos(), rad * th.sin()]), rng.random_range(0.7..2.0f64), rng.random_range(-1.0..1.0f64))
            })
            .collect();
        let f = pb.grid.sample(|x, y| {
            bumps
                .iter()
                .map(|(orb, wd, a)| a * orb.iter().map(|c| (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (wd * wd)).exp()).sum::<f64>())
                .sum()
        });
        f.into_iter().zip(mask).map(|(v, &m)| if m { 0.0 } else { v }).collect::<Vec<f64>>()
    };
    let p = make(&pb.p_mask, pb.config.r);
    let s = make(&pb.q_mask, pb.config.rho);
    let lay = Layout::new(pb);
    let mut z: Vec<f64> = p.into_iter().chain(s).collect();
    lay.project(&mut z);
    let n = pb.n();
    (z[..n].to_vec(), z[n..].to_vec())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub segments: usize,
    pub convex: usize,
    /// Largest `I(mid) - (I(a) + I(b)) / 2` seen.
    pub worst_gap: f64,
}

/// Midpoint convexity of `I_n` along random feasible segments through the minimizer.
pub fn convexity_probe(pb: &Problem, sol: &OuterSolution, segments: usize, amplitude: f64, seed: u64) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut convex = 0;
    let mut worst = f64::NEG_INFINITY;
    let at = |dp: &[f64], ds: &[f64], s: f64| {
        let u: Vec<f64> = sol.u.iter().zip(dp).map(|(a, b)| a + s * b).collect();
        let v: Vec<f64> = sol.v.iter().zip(ds).map(|(a, b)| a + s * b).collect();
        pb.energy(&u, &v)
    };
    for _ in 0..segments {
        let (a_p, a_s) = random_feasible_direction(pb, &mut rng);
        let (b_p, b_s) = random_feasible_direction(pb, &mut rng);
        let scale = amplitude / (sup_norm(&a_p) + sup_norm(&a_s)).max(sup_norm(&b_p) + sup_norm(&b_s)).max(1e-300);
        let dp: Vec<f64> = a_p.iter().zip(&b_p).map(|(x, y)| scale * (x - y)).collect();
        let ds: Vec<f64> = a_s.iter().zip(&b_s).map(|(x, y)| scale * (x - y)).collect();
        let mp: Vec<f64> = a_p.iter().zip(&b_p).map(|(x, y)| scale * (x + y) / 2.0).collect();
        let ms: Vec<f64> = a_s.iter().zip(&b_s).map(|(x, y)| scale * (x + y) / 2.0).collect();
        let shifted = |s: f64| {
            let p: Vec<f64> = mp.iter().zip(&dp).map(|(m, d)| m + s * d / 2.0).collect();
            let q: Vec<f64> = ms.iter().zip(&ds).map(|(m, d)| m + s * d / 2.0).collect();
            at(&p, &q, 1.0)
        };
        let (ea, eb, em) = (shifted(1.0), shifted(-1.0), shifted(0.0));
        let gap = em - 0.5 * (ea + eb);
        worst = worst.max(gap);
        if gap <= 1e-12 * (1.0 + em.abs()) {
            convex += 1;
        }
    }
    ConvexityReport { segments, convex, worst_gap: worst }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultistartReport {
    pub starts: usize,
    pub converged: usize,
    pub max_spread: f64,
    pub energies: Vec<f64>,
}

/// Solves from the default start and from `starts - 1` perturbed starts.
pub fn multistart(pb: &Problem, inner: &InnerData, starts: usize, amplitude: f64, seed: u64, opts: &OuterOptions) -> Result<MultistartReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = minimize_outer(pb, inner, None, opts)?;
    let mut energies = vec![base.energy];
    let mut spread: f64 = 0.0;
    let mut converged = usize::from(base.converged);
    for _ in 1..starts {
        let (dp, ds) = random_feasible_direction(pb, &mut rng);
        let s = amplitude / (sup_norm(&dp) + sup_norm(&ds)).max(1e-300);
        let p: Vec<f64> = base.phi.iter().zip(&dp).map(|(a, b)| a + s * b).collect();
        let q: Vec<f64> = base.psi.iter().zip(&ds).map(|(a, b)| a + s * b).collect();
        let sol = minimize_outer(pb, inner, Some((&p, &q)), opts)?;
        converged += usize::from(sol.converged);
        energies.push(sol.energy);
        let du = sol.u.iter().zip(&base.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let dv = sol.v.iter().zip(&base.v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        spread = spread.max(du.max(dv));
    }
    Ok(MultistartReport { starts, converged, max_spread: spread, energies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BumpConfiguration;
    use crate::grid::GridSpec;
    use crate::groundstate::solve_ground_state;

    fn coarse(ell: usize) -> Problem {
        let base = solve_ground_state(4.0, 2, 1e-10).unwrap();
        Problem::new(&BumpConfiguration::defaults(ell), &GridSpec::with_h(0.25), &base).unwrap()
    }

    #[test]
    fn tight_packing_is_reported_not_returned() {
        let pb = coarse(6);
        let out = minimize_outer(&pb, &InnerData::zeros(&pb), None, &OuterOptions::default());
        assert!(matches!(out, Err(Error::Convergence(_))));
    }

    #[test]
    fn minimizer_is_stationary_and_feasible() {
        let pb = coarse(8);
        let sol = minimize_outer(&pb, &InnerData::zeros(&pb), None, &OuterOptions::default()).unwrap();
        assert!(sol.converged, "{:?}", sol.log.last());
        for c in pb.basis.values(&sol.phi, &sol.psi) {
            assert!(c.abs() < 1e-12);
        }
        for a in 0..pb.n() {
            if pb.p_mask[a] {
                assert_eq!(sol.phi[a], 0.0);
            }
            if pb.q_mask[a] {
                assert_eq!(sol.psi[a], 0.0);
            }
        }
        let energies: Vec<f64> = sol.log.iter().map(|r| r.energy).collect();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn pinned_values_are_respected() {
        let pb = coarse(8);
        let phi0: Vec<f64> = pb.grid.sample(|x, _| 1e-3 * x.cos());
        let inner = InnerData::from_pair(&pb, &phi0, &vec![0.0; pb.n()]);
        let sol = minimize_outer(&pb, &inner, None, &OuterOptions::default()).unwrap();
        for a in 0..pb.n() {
            if pb.p_mask[a] {
                assert_eq!(sol.phi[a], phi0[a]);
            }
        }
    }

    #[test]
    fn log_is_written() {
        let pb = coarse(8);
        let sol = minimize_outer(&pb, &InnerData::zeros(&pb), None, &OuterOptions::default()).unwrap();
        let dir = std::env::temp_dir().join(format!("polyspike-outer-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("outer.csv");
        sol.write_log(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,energy"));
        assert_eq!(text.lines().count(), sol.log.len() + 1);
    }
}
