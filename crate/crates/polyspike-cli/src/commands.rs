use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use polyspike::config::{RunConfig, RunManifest};
use polyspike::deadcore::{
    certify_supersolution, core_target, detect_dead_cores, find_c_tau, front_exponent, smallest_certified_q, solve_radial_sublinear,
};
use polyspike::energy::{construct as build_pair, energy_scan as scan, expansion_fit, maximize_f, quadrature_coefficients};
use polyspike::geometry::parameter_box;
use polyspike::grid::{fmt17, GridSpec};
use polyspike::groundstate::{equation_residual, scale_profile, solve_ground_state};
use polyspike::model::{alpha0_from_centers, build_smoothing, certify_conditions, CouplingSpec};
use polyspike::verify::{verify_all as run_checks, VerifyOptions};

use crate::Common;

const QUICK_H: f64 = 0.2;

/// Output sink of one subcommand; every file goes through it so the manifest lists it.
pub struct Run {
    pub config: RunConfig,
    pub quick: bool,
    pub out: PathBuf,
    pub manifest: RunManifest,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.manifest.record(p.clone());
        p
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", p.display()))
    }

    fn csv(&mut self, name: &str, header: &[&str], columns: &[&[f64]]) -> Result<()> {
        let p = self.path(name);
        let mut f = std::io::BufWriter::new(fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?);
        writeln!(f, "{}", header.join(","))?;
        let n = columns.first().map_or(0, |c| c.len());
        for i in 0..n {
            let row: Vec<String> = columns.iter().map(|c| fmt17(c[i])).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    fn spec(&self) -> GridSpec {
        self.config.grid.clone()
    }
}

pub fn resolve(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::defaults(8),
    };
    if let Some(ell) = c.ell {
        cfg = cfg.with_ell(ell)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.threads {
        cfg.threads = t;
    }
    if c.quick {
        cfg.grid.h = QUICK_H;
    }
    Ok(cfg)
}

/// Resolves the configuration, runs `body` on a dedicated pool and writes the manifest.
/// Returns whether the subcommand's own checks passed.
pub fn run(name: &str, c: &Common, body: fn(&mut Run) -> Result<bool>) -> Result<bool> {
    let config = resolve(c)?;
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build()?;
    let mut run = Run { manifest: RunManifest::start(name, &config), config, quick: c.quick, out: c.out.clone() };
    let ok = pool.install(|| body(&mut run)).with_context(|| format!("{name} failed"))?;
    let m = run.manifest.finish(&run.out)?;
    log::info!("manifest written to {}", m.display());
    Ok(ok)
}

pub fn groundstate(run: &mut Run) -> Result<bool> {
    let b = &run.config.bump;
    let prof = solve_ground_state(b.p, 2, run.config.groundstate_tol)?;
    let residual = equation_residual(&prof);
    run.csv("profile.csv", &["r", "w", "dw"], &[&prof.radii, &prof.values, &prof.slopes])?;
    let mut header = serde_json::to_value(prof.header())?;
    header["equation_residual"] = json!(residual);
    run.json("profile.json", &header)?;
    println!("w(0) = {}  residual {:.2e}  tail rate {}", fmt17(prof.center_value), residual, fmt17(prof.tail_rate));
    Ok(true)
}

pub fn certify(run: &mut Run) -> Result<bool> {
    let b = &run.config.bump;
    let base = solve_ground_state(b.p, 2, run.config.groundstate_tol)?;
    let u0 = scale_profile(&base, b.mu)?.center_value;
    let v0 = scale_profile(&base, b.nu)?.center_value;
    let spec = CouplingSpec::new(b.sigma1, b.sigma2, b.beta)?;
    let g = build_smoothing(spec, b.n_smooth, alpha0_from_centers(u0, v0))?;
    let report = certify_conditions(&g, b.sigma_prime);
    for c in &report.checks {
        println!("{:<6} {:<5} worst {:>12.4e}  {}", c.name, if c.holds { "holds" } else { "FAILS" }, c.worst, c.detail);
    }
    let ok = report.checks.iter().all(|c| c.holds);
    run.json("conditions.json", &serde_json::to_value(&report)?)?;
    Ok(ok)
}

pub fn construct(run: &mut Run) -> Result<bool> {
    let cfg = run.config.clone();
    let base = solve_ground_state(cfg.bump.p, 2, cfg.groundstate_tol)?;
    let (pb, fp) = build_pair(&cfg.bump, &run.spec(), &base, &cfg.fixed_point)?;
    let (u, v) = (&fp.outer.u, &fp.outer.v);
    let energy = pb.energy(u, v);
    let mut log = serde_json::to_value(&fp)?;
    log["ell"] = json!(cfg.bump.ell);
    log["r"] = json!(cfg.bump.r);
    log["rho"] = json!(cfg.bump.rho);
    log["nodes"] = json!(pb.n());
    log["reduced_energy"] = json!(energy);
    log["median_q"] = json!(fp.median_q());
    run.json("fixed_point.json", &log)?;
    let p = run.path("fields.csv");
    pb.grid.write_csv(&p, &[("u", u), ("v", v), ("U_r", &pb.ur), ("V_r", &pb.vr), ("phi", &fp.phi), ("psi", &fp.psi)])?;
    let p = run.path("u.gnuplot");
    pb.grid.write_gnuplot(&p, u)?;
    let p = run.path("v.gnuplot");
    pb.grid.write_gnuplot(&p, v)?;
    let p = run.path("outer_log.csv");
    fp.outer.write_log(&p)?;
    println!(
        "ell={} converged={} iterations={} d={:.3e} J={}",
        cfg.bump.ell,
        fp.converged,
        fp.history.len(),
        fp.history.last().map_or(f64::NAN, |h| h.d),
        fmt17(energy)
    );
    Ok(fp.converged)
}

pub fn energy_scan(run: &mut Run) -> Result<bool> {
    let cfg = run.config.clone();
    let b = &cfg.bump;
    let base = solve_ground_state(b.p, 2, cfg.groundstate_tol)?;
    let (lo, hi) = VerifyOptions::quick().energy_window;
    let n = cfg.energy_nodes;
    let fr: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let samples = scan(b, &run.spec(), &base, &fr, &fr, &cfg.fixed_point)?;
    let col = |f: fn(&polyspike::energy::EnergySample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let (r, rho, j) = (col(|s| s.r), col(|s| s.rho), col(|s| s.j));
    let conv = col(|s| if s.converged { 1.0 } else { 0.0 });
    let iters = col(|s| s.iterations as f64);
    run.csv("samples.csv", &["r", "rho", "J", "converged", "iterations"], &[&r, &rho, &j, &conv, &iters])?;
    let (d1, d2) = parameter_box(b.ell, b.m)?;
    let quad = quadrature_coefficients(b, &base)?;
    let fit = expansion_fit(&samples, b.m);
    let maximizer = maximize_f(b.ell as f64, b.m, b.tau, &quad).map_err(|e| e.to_string());
    let good = samples.iter().filter(|s| s.converged).count();
    println!("{good}/{} samples converged", samples.len());
    let report = json!({
        "ell": b.ell,
        "box": {"d1": d1, "d2": d2},
        "fractions": fr,
        "quadrature": quad,
        "fit": fit.as_ref().map_err(|e| e.to_string()),
        "closed_form_maximizer": maximizer,
    });
    run.json("energy.json", &report)?;
    match &fit {
        Ok(f) => {
            let c = &f.coefficients;
            println!("fit A={} B1={} C1={} rms={:.3e}", fmt17(c.a), fmt17(c.b1), fmt17(c.c1), f.residual_rms);
            println!("quad A={} B1={} C1={}", fmt17(quad.a), fmt17(quad.b1), fmt17(quad.c1));
        }
        Err(e) => println!("no fit: {e}"),
    }
    Ok(fit.is_ok())
}

pub fn deadcore(run: &mut Run) -> Result<bool> {
    let cfg = run.config.clone();
    let b = &cfg.bump;
    let dim = cfg.deadcore_dimension;
    let ct = find_c_tau(b.tau, b.m, b.sigma_prime, dim)?;
    let sol = solve_radial_sublinear(ct.c_tau, b.sigma_prime, dim, 1e-10)?;
    run.csv("radial.csv", &["r", "w"], &[&sol.radii, &sol.values])?;
    let a = core_target(b.m, b.tau);
    let q0 = front_exponent(b.sigma_prime);
    let q = smallest_certified_q(a, b.sigma_prime, dim, 0.01)?;
    let cert = certify_supersolution(a, q, b.sigma_prime, dim)?;
    let near = certify_supersolution(a, q0 + 1e-3, b.sigma_prime, dim)?;
    println!("c_tau = {}  core radius {} (target {})", fmt17(ct.c_tau), fmt17(ct.core_at_c_tau), fmt17(ct.target));
    println!("supersolution: q={q:.2} pass={}  q0+1e-3 pass={}", cert.pass, near.pass);

    let base = solve_ground_state(b.p, 2, cfg.groundstate_tol)?;
    let planar = match build_pair(b, &run.spec(), &base, &cfg.fixed_point) {
        Ok((pb, fp)) => {
            let rep = detect_dead_cores(&pb, &fp.outer.u, &fp.outer.v, cfg.fixed_point.tol, ct.c_tau)?;
            println!("planar: sup u near y {:.3e}, envelope {:.3e}", rep.u_sup_near_y, rep.envelope);
            serde_json::to_value(&rep)?
        }
        Err(e) => {
            log::warn!("planar construction failed: {e}");
            json!({"error": e.to_string()})
        }
    };
    let report = json!({
        "c_tau": ct,
        "radial": sol,
        "certificate": cert,
        "certificate_near_front": near,
        "front_exponent": q0,
        "planar": planar,
    });
    run.json("deadcore.json", &report)?;
    Ok(cert.pass && !near.pass)
}

pub fn verify_all(run: &mut Run) -> Result<bool> {
    let opts = if run.quick { VerifyOptions::quick() } else { VerifyOptions::full(&run.config) };
    let report = run_checks(&run.config, opts)?;
    let table = report.table();
    print!("{table}");
    let p = run.path("acceptance.txt");
    fs::write(&p, &table)?;
    run.json("acceptance.json", &serde_json::to_value(&report)?)?;
    Ok(report.rows.iter().all(|r| r.pass))
}
