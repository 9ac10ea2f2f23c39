//! Monte-Carlo risk engine, log-log rate fits and adaptivity ratios.
//!
//! Config files are flat `key = value` text; `#` starts a comment. Keys:
//!
//! ```text
//! method      = mp | bc | crl | lse-oracle | lse-brute | passthrough   (required)
//! grid        = d:n1, d:n1, ...                                        (required)
//! truth       = constant <value>
//!             | random-monotone <bound>
//!             | indifference <k1,k2,...> [scale]                       (required)
//! noise_sd    = <real >= 0>        default 1
//! reps        = <integer >= 1>     default 100
//! seed        = <u64>              default 0
//! bounded     = true | false       default false
//! box_radius  = <real > 0>         default: sup-norm bound of the truth family
//! permute     = true | false       default true
//! timing      = true | false       default false (seconds column is NA)
//! output      = <path>             optional
//! ```
//!
//! Replicate `r` of grid point `g` draws from seed
//! `derive_seed(derive_seed(seed, g), r)`, so results do not depend on the
//! number of worker threads.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    borda_count_estimate, crl_estimate, global_lse_bruteforce, mirsky_partition_estimate, perm_projection_lse,
};
use crate::iso::BoxBound;
use crate::numeric::mean_and_se;
use crate::rng::{derive_seed, stream};
use crate::synth::{base_indifference_tensor, make_instance, random_monotone_tensor, IndifferenceSpec, PermSource};
use crate::tensor::{empirical_sq_loss, format_value, LatticeShape, PermutationTuple, Tensor};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "ISOPERM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mp,
    Bc,
    Crl,
    /// Projection along the true permutations.
    LseOracle,
    LseBrute,
    /// Returns the observation unchanged.
    Passthrough,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mp => "mp",
            Method::Bc => "bc",
            Method::Crl => "crl",
            Method::LseOracle => "lse-oracle",
            Method::LseBrute => "lse-brute",
            Method::Passthrough => "passthrough",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mp" => Method::Mp,
            "bc" => Method::Bc,
            "crl" => Method::Crl,
            "lse-oracle" => Method::LseOracle,
            "lse-brute" => Method::LseBrute,
            "passthrough" => Method::Passthrough,
            _ => return Err(Error::Parse(format!("unknown method {s:?}"))),
        })
    }
}

/// Runs one estimator. `true_perms` is needed only by [`Method::LseOracle`];
/// `rng` only by [`Method::Crl`].
pub fn run_method<R: rand::Rng + ?Sized>(
    method: Method,
    y: &Tensor,
    bound: BoxBound,
    true_perms: Option<&PermutationTuple>,
    rng: &mut R,
) -> Result<Tensor> {
    Ok(match method {
        Method::Mp => mirsky_partition_estimate(y, bound)?.theta_hat,
        Method::Bc => borda_count_estimate(y, bound)?.theta_hat,
        Method::Crl => crl_estimate(y, bound, rng)?.theta_hat,
        Method::LseBrute => global_lse_bruteforce(y, bound)?.theta_hat,
        Method::LseOracle => {
            let p = true_perms
                .ok_or_else(|| Error::InvalidParameter("lse-oracle needs the true permutations".into()))?;
            perm_projection_lse(y, p, bound)?
        }
        Method::Passthrough => y.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthFamily {
    /// Base indifference tensor with the same block sizes on every axis,
    /// multiplied by `scale`.
    Indifference { sizes: Vec<usize>, scale: f64 },
    /// A fresh random monotone tensor in `[-bound, bound]` per replicate.
    RandomMonotone { bound: f64 },
    Constant { value: f64 },
}

impl TruthFamily {
    /// Largest possible `|theta*|` entry on `shape`.
    pub fn sup_bound(&self, shape: LatticeShape) -> Result<f64> {
        Ok(match self {
            TruthFamily::Indifference { sizes, scale } => {
                IndifferenceSpec::uniform(shape, sizes)?;
                // Base entries run from 0 to d (s_1 - 1).
                scale.abs() * (shape.d() * (sizes.len() - 1)) as f64
            }
            TruthFamily::RandomMonotone { bound } => *bound,
            TruthFamily::Constant { value } => value.abs(),
        })
    }

    /// `(s, k*)`: the number of constant hyper-rectangles and the smallest
    /// per-axis largest indifference set. Random monotone truths are treated
    /// as fully generic, `(n, 1)`.
    pub fn structure(&self, shape: LatticeShape) -> Result<(usize, usize)> {
        Ok(match self {
            TruthFamily::Indifference { sizes, .. } => {
                let spec = IndifferenceSpec::uniform(shape, sizes)?;
                (spec.total_blocks(), spec.k_star())
            }
            TruthFamily::RandomMonotone { .. } => (shape.n(), 1),
            TruthFamily::Constant { .. } => (1, shape.n1()),
        })
    }

    fn draw<R: rand::Rng + ?Sized>(&self, shape: LatticeShape, rng: &mut R) -> Result<Tensor> {
        match self {
            TruthFamily::Indifference { sizes, scale } => {
                let spec = IndifferenceSpec::uniform(shape, sizes)?;
                base_indifference_tensor(&spec, None)?.map(|v| v * scale)
            }
            TruthFamily::RandomMonotone { bound } => random_monotone_tensor(shape, *bound, rng),
            TruthFamily::Constant { value } => Ok(Tensor::filled(shape, *value)),
        }
    }
}

impl FromStr for TruthFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let real = |t: &str| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {t:?}: {e}")));
        match parts[..] {
            ["constant", v] => Ok(TruthFamily::Constant { value: real(v)? }),
            ["random-monotone", b] => Ok(TruthFamily::RandomMonotone { bound: real(b)? }),
            ["indifference", sizes] | ["indifference", sizes, _] => {
                let sizes = sizes
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad block size {t:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                let scale = parts.get(2).map(|t| real(t)).transpose()?.unwrap_or(1.0);
                Ok(TruthFamily::Indifference { sizes, scale })
            }
            _ => Err(Error::Parse(format!("unknown truth family {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    /// `(d, n1)` pairs.
    pub grid: Vec<(usize, usize)>,
    pub truth: TruthFamily,
    pub noise_sd: f64,
    pub reps: usize,
    pub seed: u64,
    pub bounded: bool,
    pub box_radius: Option<f64>,
    /// Apply fresh uniform permutations to the truth in every replicate.
    pub permute: bool,
    /// Record wall time per grid point (breaks byte-level reproducibility).
    pub timing: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(method: Method, grid: Vec<(usize, usize)>, truth: TruthFamily) -> Self {
        Self {
            method,
            grid,
            truth,
            noise_sd: 1.0,
            reps: 100,
            seed: 0,
            bounded: false,
            box_radius: None,
            permute: true,
            timing: false,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("grid is empty".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise_sd {} must be nonnegative", self.noise_sd)));
        }
        for &(d, n1) in &self.grid {
            let shape = LatticeShape::new(d, n1)?;
            self.truth.structure(shape)?;
        }
        match &self.truth {
            TruthFamily::RandomMonotone { bound } if !(bound.is_finite() && *bound >= 0.0) => {
                return Err(Error::InvalidParameter(format!("bound {bound} must be nonnegative")))
            }
            TruthFamily::Constant { value } | TruthFamily::Indifference { scale: value, .. } if !value.is_finite() => {
                return Err(Error::InvalidParameter("truth parameters must be finite".into()))
            }
            _ => {}
        }
        if let Some(r) = self.box_radius {
            BoxBound::radius(r)?;
        }
        Ok(())
    }

    fn bound_for(&self, shape: LatticeShape) -> Result<BoxBound> {
        if !self.bounded {
            return Ok(BoxBound::NONE);
        }
        let r = match self.box_radius {
            Some(r) => r,
            None => self.truth.sup_bound(shape)?,
        };
        // A zero radius would make the box degenerate; fall back to a tiny one.
        BoxBound::radius(r.max(f64::MIN_POSITIVE))
    }

    /// Parses the `key = value` format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut method = None;
        let mut grid = None;
        let mut truth = None;
        let mut rest: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "method" => method = Some(v.parse::<Method>()?),
                "grid" => grid = Some(parse_grid(v)?),
                "truth" => truth = Some(v.parse::<TruthFamily>()?),
                _ => rest.push((k.to_string(), v.to_string())),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing required key {k:?}"));
        let mut cfg = Self::new(
            method.ok_or_else(|| missing("method"))?,
            grid.ok_or_else(|| missing("grid"))?,
            truth.ok_or_else(|| missing("truth"))?,
        );
        for (k, v) in rest {
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("bad value for {k}: {v:?} ({e})"));
            match k.as_str() {
                "noise_sd" => cfg.noise_sd = v.parse().map_err(|e| bad(&e))?,
                "reps" => cfg.reps = v.parse().map_err(|e| bad(&e))?,
                "seed" => cfg.seed = v.parse().map_err(|e| bad(&e))?,
                "bounded" => cfg.bounded = v.parse().map_err(|e| bad(&e))?,
                "box_radius" => cfg.box_radius = Some(v.parse().map_err(|e| bad(&e))?),
                "permute" => cfg.permute = v.parse().map_err(|e| bad(&e))?,
                "timing" => cfg.timing = v.parse().map_err(|e| bad(&e))?,
                "output" => cfg.output = Some(PathBuf::from(v)),
                _ => return Err(Error::Parse(format!("unknown key {k:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_grid(v: &str) -> Result<Vec<(usize, usize)>> {
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (d, n1) = t
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("grid entry {t:?} is not d:n1")))?;
            let num = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad grid entry {t:?}: {e}")));
            Ok((num(d)?, num(n1)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskPoint {
    pub d: usize,
    pub n1: usize,
    pub n: usize,
    pub risk_mean: f64,
    pub risk_se: f64,
    pub reps: usize,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub method: Method,
    pub points: Vec<RiskPoint>,
}

pub const CSV_HEADER: &str = "method,d,n1,n,risk_mean,risk_se,reps,seconds";

impl RiskReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let secs = p.seconds.map_or_else(|| "NA".to_string(), |s| format!("{s:.3}"));
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.method.name(),
                p.d,
                p.n1,
                p.n,
                format_value(p.risk_mean),
                format_value(p.risk_se),
                p.reps,
                secs
            ));
        }
        out
    }

    /// `(n, risk_mean)` pairs for [`rate_fit`].
    pub fn rate_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.n as f64, p.risk_mean)).collect()
    }
}

/// Worker threads: `ISOPERM_WORKERS` if set to a positive integer, else the
/// machine's available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Seed of replicate `rep` at grid point `point`.
pub fn replicate_seed(base: u64, point: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(base, point as u64), rep as u64)
}

/// Loss `l_n^2(theta_hat, theta*)` of one replicate. Stream 0 of the
/// replicate seed drives the truth, permutations and noise; stream 1 drives
/// the estimator.
pub fn replicate_loss(cfg: &ExperimentConfig, shape: LatticeShape, seed: u64) -> Result<f64> {
    let mut data_rng = stream(seed, 0);
    let truth = cfg.truth.draw(shape, &mut data_rng)?;
    let perms = if cfg.permute { PermSource::Random } else { PermSource::Identity };
    let inst = make_instance(&truth, perms, cfg.noise_sd, &mut data_rng)?;
    let mut est_rng = stream(seed, 1);
    let theta_hat = run_method(cfg.method, &inst.y, cfg.bound_for(shape)?, Some(&inst.true_perms), &mut est_rng)?;
    empirical_sq_loss(&theta_hat, &inst.theta_star)
}

/// Monte-Carlo estimate of the risk at every grid point. A failing
/// replicate (for example a size-cap violation) aborts with an error naming
/// the grid point.
pub fn monte_carlo_risk(cfg: &ExperimentConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut points = Vec::with_capacity(cfg.grid.len());
    for (g, &(d, n1)) in cfg.grid.iter().enumerate() {
        let shape = LatticeShape::new(d, n1)?;
        let start = Instant::now();
        let losses: Vec<Result<f64>> = pool.install(|| {
            (0..cfg.reps)
                .into_par_iter()
                .map(|r| replicate_loss(cfg, shape, replicate_seed(cfg.seed, g, r)))
                .collect()
        });
        let losses = losses.into_iter().collect::<Result<Vec<f64>>>().map_err(|e| annotate(e, d, n1))?;
        let (risk_mean, risk_se) = mean_and_se(&losses);
        points.push(RiskPoint {
            d,
            n1,
            n: shape.n(),
            risk_mean,
            risk_se,
            reps: cfg.reps,
            seconds: cfg.timing.then(|| start.elapsed().as_secs_f64()),
        });
    }
    Ok(RiskReport { method: cfg.method, points })
}

fn annotate(e: Error, d: usize, n1: usize) -> Error {
    match e {
        Error::SizeCap(m) => Error::SizeCap(format!("grid point d = {d}, n1 = {n1}: {m}")),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(log n, log risk)`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("rate fit needs at least two points".into()));
    }
    if points.iter().any(|&(n, r)| !(n > 0.0 && r > 0.0 && n.is_finite() && r.is_finite())) {
        return Err(Error::InvalidParameter("rate fit needs positive finite points".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs at least two distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit { slope, intercept: my - slope * mx })
}

/// `(s + (n1 - k*) log n) / n`.
pub fn adaptation_scale(shape: LatticeShape, s: usize, k_star: usize) -> f64 {
    let n = shape.n() as f64;
    (s as f64 + shape.n1().saturating_sub(k_star) as f64 * n.ln()) / n
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivityRatios {
    pub per_point: Vec<f64>,
    pub max: f64,
}

/// Measured risk over the adaptation scale at each grid point, with the
/// structure `(s, k*)` of each point's truth. This is a Monte-Carlo
/// surrogate: it averages over sampled truths rather than taking the worst
/// case over the class.
pub fn adaptivity_ratio(report: &RiskReport, structure: &[(usize, usize)]) -> Result<AdaptivityRatios> {
    if structure.len() != report.points.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} structures for {} grid points",
            structure.len(),
            report.points.len()
        )));
    }
    let per_point = report
        .points
        .iter()
        .zip(structure)
        .map(|(p, &(s, k))| Ok(p.risk_mean / adaptation_scale(LatticeShape::new(p.d, p.n1)?, s, k)))
        .collect::<Result<Vec<f64>>>()?;
    let max = per_point.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AdaptivityRatios { per_point, max })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method, grid: Vec<(usize, usize)>, truth: TruthFamily) -> ExperimentConfig {
        ExperimentConfig::new(method, grid, truth)
    }

    #[test]
    fn rate_fit_examples() {
        let pts: Vec<(f64, f64)> = [4.0, 16.0, 64.0].iter().map(|&n: &f64| (n, n.powf(-0.5))).collect();
        assert!((rate_fit(&pts).unwrap().slope + 0.5).abs() < 1e-12);
        let flat = [(4.0, 2.0), (9.0, 2.0), (20.0, 2.0)];
        assert!(rate_fit(&flat).unwrap().slope.abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [8.0, 27.0, 1000.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-1.0 / 3.0))).collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope + 1.0 / 3.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(rate_fit(&[(4.0, 1.0)]).is_err());
        assert!(rate_fit(&[(4.0, 1.0), (8.0, 0.0)]).is_err());
    }

    #[test]
    fn config_parse() {
        let text = "# demo\nmethod = bc\ngrid = 2:8, 3:8\ntruth = indifference 4,4 2.5\nnoise_sd = 0.5\nreps = 7\nseed = 11 # trailing\nbounded = true\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.method, Method::Bc);
        assert_eq!(c.grid, vec![(2, 8), (3, 8)]);
        assert_eq!(c.truth, TruthFamily::Indifference { sizes: vec![4, 4], scale: 2.5 });
        assert_eq!((c.noise_sd, c.reps, c.seed, c.bounded), (0.5, 7, 11, true));
        assert!(ExperimentConfig::parse("grid = 2:4\ntruth = constant 0\n").is_err());
        assert!(ExperimentConfig::parse("method = mp\ngrid = \ntruth = constant 0\n").is_err());
        assert!(ExperimentConfig::parse("method = mp\ngrid = 2:4\ntruth = constant 0\nreps = 0\n").is_err());
        assert!(ExperimentConfig::parse("method = mp\ngrid = 2:4\ntruth = constant 0\ncolour = red\n").is_err());
        assert!(ExperimentConfig::parse("method = mp\ngrid = 2:5\ntruth = indifference 2,2\n").is_err());
        assert!(ExperimentConfig::parse("method = nope\ngrid = 2:4\ntruth = constant 0\n").is_err());
    }

    #[test]
    fn noiseless_monotone_bc_has_zero_risk() {
        let mut c = cfg(Method::Bc, vec![(2, 4), (2, 6), (3, 3)], TruthFamily::RandomMonotone { bound: 1.0 });
        c.noise_sd = 0.0;
        c.reps = 5;
        let r = monte_carlo_risk(&c).unwrap();
        assert!(r.points.iter().all(|p| p.risk_mean < 1e-12), "{r:?}");
    }

    #[test]
    fn passthrough_risk_is_noise_variance() {
        let mut c = cfg(Method::Passthrough, vec![(2, 8)], TruthFamily::Constant { value: 0.0 });
        c.reps = 200;
        let p = &monte_carlo_risk(&c).unwrap().points[0];
        assert!((p.risk_mean - 1.0).abs() <= 3.0 * p.risk_se, "{p:?}");
    }

    #[test]
    fn mp_beats_bc_on_constant_truth() {
        let base = cfg(Method::Mp, vec![(2, 8)], TruthFamily::Constant { value: 0.0 });
        let mut c = base.clone();
        c.reps = 100;
        let mp = monte_carlo_risk(&c).unwrap().points[0].risk_mean;
        c.method = Method::Bc;
        let bc = monte_carlo_risk(&c).unwrap().points[0].risk_mean;
        assert!(mp <= bc, "mp {mp} bc {bc}");
    }

    #[test]
    fn size_cap_surfaces() {
        let c = cfg(Method::LseBrute, vec![(2, 3), (2, 5)], TruthFamily::Constant { value: 0.0 });
        match monte_carlo_risk(&ExperimentConfig { reps: 1, ..c }) {
            Err(Error::SizeCap(m)) => assert!(m.contains("n1 = 5")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_is_deterministic_and_thread_independent() {
        let mut c = cfg(Method::Crl, vec![(2, 5), (3, 3)], TruthFamily::RandomMonotone { bound: 1.0 });
        c.reps = 12;
        let a = monte_carlo_risk(&c).unwrap().to_csv();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let per_rep: Vec<f64> = single.install(|| {
            (0..c.reps).map(|r| replicate_loss(&c, LatticeShape::new(2, 5).unwrap(), replicate_seed(0, 0, r)).unwrap()).collect()
        });
        let (m, _) = mean_and_se(&per_rep);
        let b = monte_carlo_risk(&c).unwrap();
        assert_eq!(a, b.to_csv());
        assert_eq!(m, b.points[0].risk_mean);
        assert!(a.starts_with(CSV_HEADER));
        assert!(a.lines().nth(1).unwrap().ends_with(",NA"));
    }

    #[test]
    fn se_shrinks_with_replicates() {
        let mut c = cfg(Method::Passthrough, vec![(2, 4)], TruthFamily::Constant { value: 0.0 });
        c.reps = 100;
        let se100 = monte_carlo_risk(&c).unwrap().points[0].risk_se;
        c.reps = 400;
        let se400 = monte_carlo_risk(&c).unwrap().points[0].risk_se;
        let ratio = se100 / se400;
        assert!((ratio - 2.0).abs() <= 0.6, "ratio {ratio}");
    }

    #[test]
    fn adaptivity_ratio_examples() {
        let shape = LatticeShape::new(2, 8).unwrap();
        let point = |risk| RiskPoint { d: 2, n1: 8, n: 64, risk_mean: risk, risk_se: 0.0, reps: 1, seconds: None };
        let zero = RiskReport { method: Method::LseOracle, points: vec![point(0.0)] };
        assert_eq!(adaptivity_ratio(&zero, &[(1, 8)]).unwrap().max, 0.0);
        let one = RiskReport { method: Method::Mp, points: vec![point(0.3), point(0.1)] };
        let two = RiskReport { method: Method::Mp, points: vec![point(0.6), point(0.2)] };
        let s = [(4, 4), (1, 8)];
        let (a, b) = (adaptivity_ratio(&one, &s).unwrap(), adaptivity_ratio(&two, &s).unwrap());
        for (x, y) in a.per_point.iter().zip(&b.per_point) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
        assert!((adaptation_scale(shape, 1, 8) - 1.0 / 64.0).abs() < 1e-15);
        assert!(adaptivity_ratio(&one, &[(1, 8)]).is_err());
    }
}
