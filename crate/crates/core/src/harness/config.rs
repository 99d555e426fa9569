//! Experiment configuration in flat `key = value` form.
//!
//! ```text
//! # comments start with '#'
//! model.d = 100
//! model.eigenvalues = geometric 15 0.3
//! model.kind = raw_gaussian
//! adversary.kind = gaussian_noise
//! adversary.eigenvalues = geometric 3 0.3
//! stream.n = 10000
//! learner.oga.kind = nonconvex_oga
//! learner.oga.eta = 4e-4
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::learners::LearnerKind;
use crate::stream_model::{geometric_spectrum, AdversaryKind, AdversarySpec, DistributionKind, SpikedModel};
use crate::symmat::{basis_vector, Vector};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisChoice {
    Identity,
    /// Haar-random rotation, redrawn for every replicate.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub eigenvalues: Vec<f64>,
    pub kind: DistributionKind,
    pub radius: Option<f64>,
    pub basis: BasisChoice,
}

impl ModelConfig {
    pub fn build(&self, basis_seed: u64) -> Result<SpikedModel> {
        let basis = match self.basis {
            BasisChoice::Identity => DMatrix::identity(self.d, self.d),
            BasisChoice::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(basis_seed);
                crate::stream_model::random_orthogonal(self.d, &mut rng)
            }
        };
        let model = SpikedModel::new(self.eigenvalues.clone(), basis, self.kind)?;
        match self.radius {
            Some(r) => model.with_radius(r),
            None => Ok(model),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    pub radius: f64,
}

impl AdversaryConfig {
    pub fn spec(&self, seed: u64) -> AdversarySpec {
        AdversarySpec {
            kind: self.kind.clone(),
            radius: self.radius,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperMode {
    Theorem1,
    Theorem2,
    Manual { eta: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    WarmStart,
    /// The model's true leading eigenvector (a reference oracle).
    Spike,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub name: String,
    pub kind: LearnerKind,
    /// Block length for manual mode; theorem modes derive their own.
    pub block: usize,
    pub mode: HyperMode,
    pub init: InitChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmSource {
    /// Unperturbed draws `q` from the stochastic part.
    Clean,
    /// Observed `x = q + v`.
    Perturbed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub adversary: AdversaryConfig,
    /// `N`, observations that count towards regret.
    pub n: usize,
    /// Held-out warm-start prefix length.
    pub warm_start_samples: usize,
    pub warm_source: WarmSource,
    pub replicates: usize,
    pub seed: u64,
    pub p: f64,
    pub learners: Vec<LearnerConfig>,
    /// Measure wall-clock per learner. Off makes reports byte-reproducible.
    pub timing: bool,
    /// Upper bound on the number of points in each reported curve.
    pub max_points: usize,
}

/// Seeds derived for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateSeeds {
    pub replicate: u64,
    pub basis: u64,
    pub stream: u64,
    pub adversary: u64,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn replicate_seeds(&self, r: usize) -> ReplicateSeeds {
        let replicate = self.seed.wrapping_add(r as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(replicate);
        ReplicateSeeds {
            replicate,
            basis: rng.next_u64(),
            stream: rng.next_u64(),
            adversary: rng.next_u64(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("experiment.replicates must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("stream.n must be at least 1".into()));
        }
        if self.warm_start_samples == 0 || self.warm_start_samples > self.n {
            return Err(Error::Config(format!(
                "warm-start sample count {} must lie in 1..={}",
                self.warm_start_samples, self.n
            )));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("experiment.p = {} must lie in (0, 1)", self.p)));
        }
        if self.learners.is_empty() {
            return Err(Error::Config("no learners configured".into()));
        }
        if self.max_points == 0 {
            return Err(Error::Config("report.max_points must be at least 1".into()));
        }
        for l in &self.learners {
            if l.block == 0 {
                return Err(Error::Config(format!("learner `{}` has block length 0", l.name)));
            }
        }
        self.model.build(0)?;
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

/// `geometric <top> <ratio>` or a comma/space separated list of `d` values.
fn parse_spectrum(key: &str, value: &str, d: usize) -> Result<Vec<f64>> {
    let mut words = value.split_whitespace();
    if value.starts_with("geometric") {
        words.next();
        let top = parse_num(key, words.next().unwrap_or(""))?;
        let ratio = parse_num(key, words.next().unwrap_or(""))?;
        if words.next().is_some() {
            return Err(Error::Config(format!("`{key}`: expected `geometric <top> <ratio>`")));
        }
        return Ok(geometric_spectrum(d, top, ratio));
    }
    let values = parse_list(key, value)?;
    if values.len() != d {
        return Err(Error::Config(format!("`{key}` lists {} values, model.d = {d}", values.len())));
    }
    Ok(values)
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// `e<k>` (1-based standard basis vector) or an explicit list.
fn parse_direction(key: &str, value: &str, d: usize) -> Result<Vector> {
    if let Some(k) = value.strip_prefix('e') {
        let k: usize = parse_num(key, k)?;
        if k == 0 || k > d {
            return Err(Error::Config(format!("`{key}`: e{k} is outside 1..={d}")));
        }
        return Ok(basis_vector(d, k - 1));
    }
    let values = parse_list(key, value)?;
    if values.len() != d {
        return Err(Error::Config(format!("`{key}` lists {} values, model.d = {d}", values.len())));
    }
    Ok(Vector::from_vec(values))
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    learner_order: Vec<String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut learner_order = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if let Some(rest) = key.strip_prefix("learner.") {
                let name = rest.split('.').next().unwrap_or("").to_string();
                if !learner_order.contains(&name) {
                    learner_order.push(name);
                }
            }
            if map.insert(key.clone(), (i + 1, value)).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Entries { map, learner_order })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn num_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            Some(v) => parse_num(key, &v),
            None => Ok(default),
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;

        let d: usize = parse_num("model.d", &e.require("model.d")?)?;
        let eigenvalues = parse_spectrum("model.eigenvalues", &e.require("model.eigenvalues")?, d)?;
        let kind = match e.take("model.kind") {
            Some(k) => k.parse()?,
            None => DistributionKind::TruncatedGaussian,
        };
        let radius = e.take("model.radius").map(|v| parse_num("model.radius", &v)).transpose()?;
        let basis = match e.take("model.basis").as_deref() {
            None | Some("random") => BasisChoice::Random,
            Some("identity") => BasisChoice::Identity,
            Some(other) => return Err(Error::Config(format!("unknown model.basis `{other}`"))),
        };
        let model = ModelConfig {
            d,
            eigenvalues,
            kind,
            radius,
            basis,
        };

        let adv_kind = e.take("adversary.kind").unwrap_or_else(|| "none".into());
        let adv_radius: f64 = e.num_or("adversary.radius", 0.0)?;
        let adv = match adv_kind.as_str() {
            "none" => AdversaryKind::None,
            "fixed_vector" => AdversaryKind::FixedVector {
                direction: parse_direction(
                    "adversary.direction",
                    &e.take("adversary.direction").unwrap_or_else(|| "e1".into()),
                    d,
                )?,
            },
            "rotating" => AdversaryKind::Rotating {
                period: e.num_or("adversary.period", 100)?,
            },
            "greedy_orthogonal" => AdversaryKind::GreedyOrthogonal {
                magnitude: e.num_or("adversary.magnitude", f64::INFINITY)?,
            },
            "gaussian_noise" => AdversaryKind::GaussianNoise {
                eigenvalues: parse_spectrum("adversary.eigenvalues", &e.require("adversary.eigenvalues")?, d)?,
                truncate: match e.take("adversary.truncate") {
                    Some(v) => parse_bool("adversary.truncate", &v)?,
                    None => false,
                },
            },
            other => return Err(Error::Config(format!("unknown adversary.kind `{other}`"))),
        };
        let adversary = AdversaryConfig {
            kind: adv,
            radius: adv_radius,
        };

        let n: usize = parse_num("stream.n", &e.require("stream.n")?)?;
        let warm_start_samples = match (e.take("warm_start.samples"), e.take("warm_start.fraction")) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set only one of warm_start.samples and warm_start.fraction".into(),
                ))
            }
            (Some(s), None) => parse_num("warm_start.samples", &s)?,
            (None, Some(f)) => {
                let f: f64 = parse_num("warm_start.fraction", &f)?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Config(format!("warm_start.fraction = {f} must lie in (0, 1]")));
                }
                ((f * n as f64).round() as usize).max(1)
            }
            (None, None) => (n / 100).max(1),
        };
        let warm_source = match e.take("warm_start.source").as_deref() {
            None | Some("clean") => WarmSource::Clean,
            Some("perturbed") => WarmSource::Perturbed,
            Some(other) => return Err(Error::Config(format!("unknown warm_start.source `{other}`"))),
        };

        let replicates = e.num_or("experiment.replicates", 1)?;
        let seed = e.num_or("experiment.seed", 0)?;
        let p = e.num_or("experiment.p", 0.05)?;
        let timing = match e.take("report.timing") {
            Some(v) => parse_bool("report.timing", &v)?,
            None => true,
        };
        let max_points = e.num_or("report.max_points", 1000)?;

        let mut learners = Vec::new();
        for name in e.learner_order.clone() {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!(
                    "learner name `{name}` must be non-empty ASCII letters, digits, `_` or `-`"
                )));
            }
            let key = |field: &str| format!("learner.{name}.{field}");
            let kind: LearnerKind = e.require(&key("kind"))?.parse()?;
            let block = e.num_or(&key("block"), 1)?;
            let mode = match e.take(&key("mode")).as_deref() {
                None | Some("manual") => HyperMode::Manual {
                    eta: e.num_or(&key("eta"), 0.0)?,
                    alpha: e.num_or(&key("alpha"), 0.0)?,
                },
                Some("theorem1") => HyperMode::Theorem1,
                Some("theorem2") => HyperMode::Theorem2,
                Some(other) => return Err(Error::Config(format!("`{}`: unknown mode `{other}`", key("mode")))),
            };
            if let HyperMode::Manual { eta, .. } = mode {
                if kind != LearnerKind::Fixed && !(eta > 0.0) {
                    return Err(Error::Config(format!("`{}` must be positive in manual mode", key("eta"))));
                }
            }
            let init = match e.take(&key("init")).as_deref() {
                None | Some("warm_start") => InitChoice::WarmStart,
                Some("spike") => InitChoice::Spike,
                Some(other) => return Err(Error::Config(format!("`{}`: unknown init `{other}`", key("init")))),
            };
            learners.push(LearnerConfig {
                name,
                kind,
                block,
                mode,
                init,
            });
        }

        if let Some((key, (line, _))) = e.map.iter().next() {
            return Err(Error::Config(format!("line {line}: unknown key `{key}`")));
        }

        let cfg = ExperimentConfig {
            model,
            adversary,
            n,
            warm_start_samples,
            warm_source,
            replicates,
            seed,
            p,
            learners,
            timing,
            max_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
