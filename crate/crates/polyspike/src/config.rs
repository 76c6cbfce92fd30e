//! Run configuration: a sectioned TOML file whose tables mirror the modules,
//! resolved against the defaults and validated before any solver runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{parameter_box, BumpConfiguration, DEFAULT_RING_FRACTION};
use crate::grid::GridSpec;
use crate::model::n_for_ell;
use crate::reduction::FixedPointOptions;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    groundstate: RawGroundState,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    outer: RawOuter,
    #[serde(default)]
    reduction: RawReduction,
    #[serde(default)]
    energy: RawEnergy,
    #[serde(default)]
    deadcore: RawDeadCore,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    ell: Option<usize>,
    r: Option<f64>,
    rho: Option<f64>,
    ring_fraction: Option<f64>,
    m: Option<f64>,
    a1: Option<f64>,
    a2: Option<f64>,
    theta: Option<f64>,
    tau: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    p: Option<f64>,
    mu: Option<f64>,
    nu: Option<f64>,
    beta: Option<f64>,
    sigma1: Option<f64>,
    sigma2: Option<f64>,
    sigma_prime: Option<f64>,
    n_smooth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroundState {
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    h: Option<f64>,
    coarse_ratio: Option<f64>,
    band: Option<f64>,
    transition: Option<f64>,
    margin: Option<f64>,
    node_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOuter {
    grad_tol: Option<f64>,
    max_iter: Option<usize>,
    armijo: Option<f64>,
    max_step: Option<f64>,
    max_deviation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReduction {
    tol: Option<f64>,
    max_iter: Option<usize>,
    coercivity_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    nodes: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeadCore {
    dimension: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    threads: Option<usize>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub bump: BumpConfiguration,
    pub ring_fraction: f64,
    pub groundstate_tol: f64,
    pub grid: GridSpec,
    pub fixed_point: FixedPointOptions,
    pub coercivity_samples: usize,
    /// Nodes per axis of the reduced-energy scan.
    pub energy_nodes: usize,
    pub deadcore_dimension: usize,
    pub seed: u64,
    pub threads: usize,
}

impl RunConfig {
    pub fn defaults(ell: usize) -> Self {
        RunConfig {
            bump: BumpConfiguration::defaults(ell),
            ring_fraction: DEFAULT_RING_FRACTION,
            groundstate_tol: 1e-10,
            grid: GridSpec::default(),
            fixed_point: FixedPointOptions::default(),
            coercivity_samples: 64,
            energy_nodes: 4,
            deadcore_dimension: 2,
            seed: 20240607,
            threads: 0,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        let ell = raw.geometry.ell.unwrap_or(8);
        let mut c = RunConfig::defaults(ell);
        let g = &raw.geometry;
        let b = &mut c.bump;
        set(&mut b.m, g.m);
        set(&mut b.a1, g.a1);
        set(&mut b.a2, g.a2);
        set(&mut b.theta, g.theta);
        set(&mut b.tau, g.tau);
        let md = &raw.model;
        set(&mut b.p, md.p);
        set(&mut b.mu, md.mu);
        set(&mut b.nu, md.nu);
        set(&mut b.beta, md.beta);
        set(&mut b.sigma1, md.sigma1);
        set(&mut b.sigma2, md.sigma2);
        set(&mut b.sigma_prime, md.sigma_prime);
        b.n_smooth = md.n_smooth.unwrap_or_else(|| n_for_ell(ell.max(2)));
        set(&mut c.ring_fraction, g.ring_fraction);
        if !(0.0..=1.0).contains(&c.ring_fraction) {
            return Err(Error::config("geometry.ring_fraction", format!("must lie in [0, 1], got {}", c.ring_fraction)));
        }
        if g.r.is_none() || g.rho.is_none() {
            let (d1, d2) = parameter_box(ell, c.bump.m).map_err(|e| e.context("geometry.ell"))?;
            c.bump.r = g.r.unwrap_or_else(|| d1.at(c.ring_fraction));
            c.bump.rho = g.rho.unwrap_or_else(|| d2.at(c.ring_fraction));
        } else {
            c.bump.r = g.r.unwrap_or_default();
            c.bump.rho = g.rho.unwrap_or_default();
        }
        set(&mut c.groundstate_tol, raw.groundstate.tol);
        let gr = &raw.grid;
        set(&mut c.grid.h, gr.h);
        set(&mut c.grid.coarse_ratio, gr.coarse_ratio);
        set(&mut c.grid.band, gr.band);
        set(&mut c.grid.transition, gr.transition);
        set(&mut c.grid.margin, gr.margin);
        set(&mut c.grid.node_cap, gr.node_cap);
        let o = &raw.outer;
        let oo = &mut c.fixed_point.outer;
        set(&mut oo.grad_tol, o.grad_tol);
        set(&mut oo.max_iter, o.max_iter);
        set(&mut oo.armijo, o.armijo);
        set(&mut oo.max_step, o.max_step);
        set(&mut oo.max_deviation, o.max_deviation);
        set(&mut c.fixed_point.tol, raw.reduction.tol);
        set(&mut c.fixed_point.max_iter, raw.reduction.max_iter);
        set(&mut c.coercivity_samples, raw.reduction.coercivity_samples);
        set(&mut c.energy_nodes, raw.energy.nodes);
        set(&mut c.deadcore_dimension, raw.deadcore.dimension);
        set(&mut c.seed, raw.run.seed);
        set(&mut c.threads, raw.run.threads);
        c.validate()?;
        Ok(c)
    }

    /// Rebuilds the ring radii and smoothing index for another `ell`.
    pub fn with_ell(&self, ell: usize) -> Result<Self> {
        let mut c = self.clone();
        c.bump.ell = ell;
        c.bump.n_smooth = n_for_ell(ell.max(2));
        let (d1, d2) = parameter_box(ell, c.bump.m)?;
        c.bump.r = d1.at(c.ring_fraction);
        c.bump.rho = d2.at(c.ring_fraction);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.bump.validate().map_err(qualify)?;
        if !(self.groundstate_tol > 0.0) {
            return Err(Error::config("groundstate.tol", "must be positive"));
        }
        if !(self.grid.h > 0.0 && self.grid.h < 1.0) {
            return Err(Error::config("grid.h", format!("must lie in (0, 1), got {}", self.grid.h)));
        }
        if !(self.grid.coarse_ratio >= 1.0) {
            return Err(Error::config("grid.coarse_ratio", "must be at least 1"));
        }
        let o = &self.fixed_point.outer;
        if !(o.grad_tol > 0.0 && o.max_step > 0.0 && o.armijo > 0.0 && o.armijo < 0.5 && o.max_deviation > 0.0) {
            return Err(Error::config("outer", "tolerances and step bounds must be positive, armijo in (0, 1/2)"));
        }
        if !(self.fixed_point.tol > 0.0) || self.fixed_point.max_iter == 0 {
            return Err(Error::config("reduction", "tol must be positive and max_iter nonzero"));
        }
        if self.energy_nodes < 4 {
            return Err(Error::config("energy.nodes", format!("need at least 4 per axis for a 12-sample fit, got {}", self.energy_nodes)));
        }
        if !(1..=3).contains(&self.deadcore_dimension) {
            return Err(Error::config("deadcore.dimension", format!("must be 1, 2 or 3, got {}", self.deadcore_dimension)));
        }
        Ok(())
    }

    /// Canonical TOML echo of the resolved configuration.
    pub fn to_toml(&self) -> String {
        let b = &self.bump;
        let g = &self.grid;
        let o = &self.fixed_point.outer;
        format!(
            "[geometry]\nell = {}\nr = {:?}\nrho = {:?}\nring_fraction = {:?}\nm = {:?}\na1 = {:?}\na2 = {:?}\ntheta = {:?}\ntau = {:?}\n\n\
             [model]\np = {:?}\nmu = {:?}\nnu = {:?}\nbeta = {:?}\nsigma1 = {:?}\nsigma2 = {:?}\nsigma_prime = {:?}\nn_smooth = {}\n\n\
             [groundstate]\ntol = {:?}\n\n\
             [grid]\nh = {:?}\ncoarse_ratio = {:?}\nband = {:?}\ntransition = {:?}\nmargin = {:?}\nnode_cap = {}\n\n\
             [outer]\ngrad_tol = {:?}\nmax_iter = {}\narmijo = {:?}\nmax_step = {:?}\nmax_deviation = {:?}\n\n\
             [reduction]\ntol = {:?}\nmax_iter = {}\ncoercivity_samples = {}\n\n\
             [energy]\nnodes = {}\n\n[deadcore]\ndimension = {}\n\n[run]\nseed = {}\nthreads = {}\n",
            b.ell, b.r, b.rho, self.ring_fraction, b.m, b.a1, b.a2, b.theta, b.tau,
            b.p, b.mu, b.nu, b.beta, b.sigma1, b.sigma2, b.sigma_prime, b.n_smooth,
            self.groundstate_tol,
            g.h, g.coarse_ratio, g.band, g.transition, g.margin, g.node_cap,
            o.grad_tol, o.max_iter, o.armijo, o.max_step, o.max_deviation,
            self.fixed_point.tol, self.fixed_point.max_iter, self.coercivity_samples,
            self.energy_nodes, self.deadcore_dimension, self.seed, self.threads,
        )
    }

    /// SHA-256 of the canonical echo, hex encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Prefixes a bare parameter name with its config section.
fn qualify(e: Error) -> Error {
    match e {
        Error::Config { field, message } if !field.contains('.') => {
            let section = match field.as_str() {
                "p" | "mu" | "nu" | "beta" | "sigma1" | "sigma2" | "sigma_prime" | "n_smooth" => "model",
                _ => "geometry",
            };
            Error::Config { field: format!("{section}.{field}"), message }
        }
        other => other,
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Record of one CLI invocation and everything it wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub artifacts: Vec<PathBuf>,
    pub version: String,
}

impl RunManifest {
    pub fn start(subcommand: &str, config: &RunConfig) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config_hash: config.content_hash(),
            config: config.clone(),
            started_unix: unix_now(),
            finished_unix: 0.0,
            artifacts: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn record(&mut self, path: impl Into<PathBuf>) {
        self.artifacts.push(path.into());
    }

    /// Writes `manifest.json` and the resolved `config.toml` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        let cfg = dir.join("config.toml");
        std::fs::write(&cfg, self.config.to_toml())?;
        self.record(cfg);
        let path = dir.join("manifest.json");
        self.record(path.clone());
        self.finished_unix = unix_now();
        std::fs::write(&path, serde_json::to_string_pretty(&self)?)?;
        Ok(path)
    }
}

fn unix_now() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        let d = RunConfig::defaults(8);
        assert_eq!(c.bump, d.bump);
        assert_eq!(c.seed, d.seed);
    }

    #[test]
    fn sections_override_fields() {
        let c = RunConfig::parse("[geometry]\nell = 10\n[model]\nbeta = -2.5\n[grid]\nh = 0.1\n[run]\nseed = 7\n").unwrap();
        assert_eq!(c.bump.ell, 10);
        assert_eq!(c.bump.beta, -2.5);
        assert_eq!(c.grid.h, 0.1);
        assert_eq!(c.seed, 7);
        assert_eq!(c.bump.n_smooth, n_for_ell(10));
        assert!(c.bump.admissible());
    }

    #[test]
    fn rejects_nonnegative_beta() {
        let e = RunConfig::parse("[model]\nbeta = 0.0\n").unwrap_err().to_string();
        assert!(e.contains("model.beta"), "{e}");
    }

    #[test]
    fn rejects_sigma_outside_unit_interval() {
        for s in ["1.0", "0.0", "1.5"] {
            let e = RunConfig::parse(&format!("[model]\nsigma1 = {s}\n")).unwrap_err().to_string();
            assert!(e.contains("model.sigma1"), "{e}");
        }
    }

    #[test]
    fn rejects_tau_outside_window() {
        let e = RunConfig::parse("[geometry]\ntau = 0.04\n").unwrap_err().to_string();
        assert!(e.contains("geometry.tau") && e.contains("0.03125"), "{e}");
        assert!(RunConfig::parse("[geometry]\ntau = 0.0\n").is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse("[model]\ngamma = 1.0\n").is_err());
        assert!(RunConfig::parse("[solver]\nx = 1\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::parse("[geometry]\nell = 12\nring_fraction = 0.4\n[model]\nsigma2 = 0.6\n").unwrap();
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c.to_toml(), back.to_toml());
        assert_eq!(c.content_hash(), back.content_hash());
        assert_eq!(c.content_hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::defaults(8);
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn with_ell_recomputes_radii() {
        let c = RunConfig::defaults(8).with_ell(12).unwrap();
        let d = RunConfig::defaults(12);
        assert_eq!(c.bump, d.bump);
    }
}
