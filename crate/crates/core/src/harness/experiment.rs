//! Replicated runs of several learners over identical streams.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::evaluation::{alignment, BlockDiagnostics, RegretLedger};
use crate::harness::config::{ExperimentConfig, HyperMode, InitChoice, LearnerConfig, WarmSource};
use crate::learners::{
    derive_theorem1_params, derive_theorem2_params, good_proj_validate, theorem_epsilon, warm_start, GoodProjReport,
    HyperParams, LearnerKind, LearnerState,
};
use crate::stream_model::{validate_model, ModelCheckReport, ModelStats, SpikedModel, StreamGenerator, StreamRecord};
use crate::symmat::{self, SymMatrix, Vector};

/// Anything that predicts a unit vector and then learns from a block.
///
/// [`play`] reads [`predict`](Self::predict) before handing the block to
/// [`update`](Self::update), so a learner never sees the data it is scored on.
pub trait OnlineLearner {
    fn predict(&self) -> &Vector;

    /// Consumes one block; returns the rank-one certificate when the learner
    /// has one.
    fn update(&mut self, block: &[Vector]) -> Result<Option<bool>>;

    /// Learning rate the next update will use.
    fn eta(&self) -> f64 {
        0.0
    }
}

/// A [`LearnerState`] driven by a learning-rate schedule. Degenerate updates
/// keep the previous iterate and are counted.
#[derive(Debug, Clone)]
pub struct ScheduledLearner {
    state: LearnerState,
    hp: Option<HyperParams>,
    blocks_seen: usize,
    degenerate: usize,
}

impl ScheduledLearner {
    /// `hp` may be omitted only for the fixed learner.
    pub fn new(state: LearnerState, hp: Option<HyperParams>) -> Result<Self> {
        if hp.is_none() && state.kind() != LearnerKind::Fixed {
            return Err(Error::invalid(format!("{} learner needs hyperparameters", state.kind())));
        }
        Ok(ScheduledLearner {
            state,
            hp,
            blocks_seen: 0,
            degenerate: 0,
        })
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn degenerate_updates(&self) -> usize {
        self.degenerate
    }
}

impl OnlineLearner for ScheduledLearner {
    fn predict(&self) -> &Vector {
        self.state.w_hat()
    }

    fn update(&mut self, block: &[Vector]) -> Result<Option<bool>> {
        let eta = self.eta();
        let alpha = self.hp.as_ref().map_or(0.0, |h| h.alpha);
        self.blocks_seen += 1;
        match self.state.step(block, eta, alpha) {
            Ok((next, certificate)) => {
                self.state = next;
                Ok(certificate)
            }
            Err(Error::DegenerateUpdate(_)) => {
                self.degenerate += 1;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn eta(&self) -> f64 {
        self.hp.as_ref().map_or(0.0, |h| h.eta(self.blocks_seen + 1))
    }
}

/// Plays `learner` over `stream` in blocks of `block_len` (the last block may
/// be shorter). Returns the ledger and the time spent inside `update`.
pub fn play<L: OnlineLearner + ?Sized>(
    learner: &mut L,
    stream: &[Vector],
    block_len: usize,
    spike: Option<&Vector>,
    timing: bool,
) -> Result<(RegretLedger, Duration)> {
    if block_len == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    let d = learner.predict().len();
    let mut ledger = RegretLedger::without_prefix_tracking(d);
    let mut elapsed = Duration::ZERO;
    for block in stream.chunks(block_len) {
        let w = learner.predict().clone();
        let eta = learner.eta();
        let start = timing.then(Instant::now);
        let certificate = learner.update(block)?;
        if let Some(start) = start {
            elapsed += start.elapsed();
        }
        let diagnostics = BlockDiagnostics {
            alignment: spike.map(|s| alignment(&w, s)),
            rank_one_ok: certificate,
            eta,
        };
        ledger.record_block(&w, block, diagnostics)?;
    }
    Ok((ledger, elapsed))
}

/// One replicate's data: the warm-start prefix and the scored stream.
#[derive(Debug, Clone)]
pub struct ReplicateStream {
    pub model: SpikedModel,
    pub warm_prefix: Vec<StreamRecord>,
    pub stream: Vec<StreamRecord>,
}

impl ReplicateStream {
    pub fn all_records(&self) -> Vec<StreamRecord> {
        self.warm_prefix.iter().chain(&self.stream).cloned().collect()
    }
}

/// Draws the warm-start prefix, then the `N` scored records. A greedy
/// adversary plays against the warm-start vector.
pub fn generate_replicate(cfg: &ExperimentConfig, r: usize) -> Result<ReplicateStream> {
    let seeds = cfg.replicate_seeds(r);
    let model = cfg.model.build(seeds.basis)?;
    let d = model.dim();
    let mut generator = StreamGenerator::new(model.clone(), cfg.adversary.spec(seeds.adversary), seeds.stream)?;
    let m = cfg.warm_start_samples;
    let warm_prefix: Vec<StreamRecord> = match cfg.warm_source {
        WarmSource::Clean => generator
            .sample_clean(m)
            .into_iter()
            .map(|q| StreamRecord::from_parts(q, Vector::zeros(d)))
            .collect(),
        WarmSource::Perturbed => generator.records(m),
    };
    let xs: Vec<Vector> = warm_prefix.iter().map(|r| r.x().clone()).collect();
    generator.set_reference(Some(warm_start(&xs, m)?));
    let stream = generator.records(cfg.n);
    Ok(ReplicateStream {
        model,
        warm_prefix,
        stream,
    })
}

/// Splits a loaded stream file into warm-start prefix and scored stream.
pub fn replicate_from_records(cfg: &ExperimentConfig, d: usize, records: Vec<StreamRecord>) -> Result<ReplicateStream> {
    let model = cfg.model.build(cfg.replicate_seeds(0).basis)?;
    if d != model.dim() {
        return Err(Error::Config(format!("stream has d={d}, config has model.d={}", model.dim())));
    }
    let m = cfg.warm_start_samples;
    if records.len() != m + cfg.n {
        return Err(Error::Config(format!(
            "stream has {} records, config needs {} warm-start + {} scored",
            records.len(),
            m,
            cfg.n
        )));
    }
    let mut warm_prefix = records;
    let stream = warm_prefix.split_off(m);
    Ok(ReplicateStream {
        model,
        warm_prefix,
        stream,
    })
}

/// Shared block-boundary grid: multiples of a step that every learner's block
/// length divides, thinned to at most `max_points`, plus `N` itself.
pub fn curve_grid(n: usize, block_lengths: &[usize], max_points: usize) -> Vec<usize> {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let lcm = block_lengths
        .iter()
        .try_fold(1usize, |acc, &l| (acc / gcd(acc, l)).checked_mul(l))
        .unwrap_or(usize::MAX);
    let multiples = n / lcm;
    let mut grid = Vec::new();
    if multiples > 0 {
        let stride = multiples.div_ceil(max_points.max(1));
        let step = lcm * stride;
        grid.extend((1..=multiples / stride).map(|k| k * step));
    }
    if grid.last() != Some(&n) {
        if grid.len() == max_points {
            grid.pop();
        }
        grid.push(n);
    }
    grid
}

/// `λ₁(Σ_{i<n} x_i x_iᵀ)` at every grid point.
pub fn prefix_lambda1(stream: &[Vector], grid: &[usize]) -> Result<Vec<f64>> {
    let d = stream.first().map_or(0, |x| x.len());
    let mut acc = SymMatrix::zeros(d);
    let mut seen = 0;
    let mut out = Vec::with_capacity(grid.len());
    for &n in grid {
        for x in &stream[seen..n] {
            acc.add_outer(x, 1.0);
        }
        seen = n;
        out.push(symmat::eigenvalues_sym(&acc)?[0]);
    }
    Ok(out)
}

/// Per-learner outcome of one replicate, sampled on the shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerTrace {
    pub avg_regret: Vec<f64>,
    /// Alignment of the prediction scored on the block ending at each grid point.
    pub alignment: Vec<Option<f64>>,
    /// Cumulative fraction of certified blocks whose certificate held.
    pub rank_one_ok_rate: Vec<Option<f64>>,
    pub final_avg_regret: f64,
    pub rank_one_error_rate: Option<f64>,
    pub blocks: usize,
    pub elapsed: Duration,
    pub degenerate_updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub seed: u64,
    /// `(ŵ₁ᵀx)²` of the warm-start vector against the spike.
    pub warm_start_alignment: f64,
    /// One trace per configured learner, in configuration order.
    pub learners: Vec<LearnerTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub avg_regret: f64,
    pub avg_regret_stderr: Option<f64>,
    pub alignment: Option<f64>,
    pub rank_one_ok_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSummary {
    pub name: String,
    pub kind: LearnerKind,
    pub hyper_params: Option<HyperParams>,
    /// Condition check on the first replicate, for learners with a derivable `ε`.
    pub good_proj: Option<GoodProjReport>,
    pub curve: Vec<CurvePoint>,
    pub final_avg_regret: f64,
    pub final_stderr: Option<f64>,
    pub rank_one_error_rate: Option<f64>,
    pub steps_per_sec: Option<f64>,
    pub degenerate_updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub grid: Vec<usize>,
    pub learners: Vec<LearnerSummary>,
    pub replicates: Vec<ReplicateResult>,
    pub model_check: ModelCheckReport,
    pub warnings: Vec<String>,
}

fn resolve_params(l: &LearnerConfig, stats: &ModelStats, cfg: &ExperimentConfig) -> Result<Option<HyperParams>> {
    let named = |e: Error| match e {
        Error::ModelViolation(m) => Error::ModelViolation(format!("learner `{}`: {m}", l.name)),
        Error::InsufficientData(m) => Error::InsufficientData(format!("learner `{}`: {m}", l.name)),
        other => other,
    };
    match l.mode {
        HyperMode::Manual { .. } if l.kind == LearnerKind::Fixed => Ok(None),
        HyperMode::Manual { eta, alpha } => HyperParams::manual(l.block, eta, alpha).map(Some),
        HyperMode::Theorem1 => derive_theorem1_params(stats, cfg.n, cfg.model.d, cfg.p).map(Some).map_err(named),
        HyperMode::Theorem2 => derive_theorem2_params(stats, cfg.n, cfg.model.d, cfg.p).map(Some).map_err(named),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; absent for a single replicate.
fn stderr(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((var / xs.len() as f64).sqrt())
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(&v))
}

/// Runs every replicate of `cfg`. With `loaded`, that single stream is used
/// instead of generated ones and `cfg.replicates` must be 1.
pub fn run_experiment_on(cfg: &ExperimentConfig, loaded: Option<ReplicateStream>) -> Result<RunResult> {
    cfg.validate()?;
    if loaded.is_some() && cfg.replicates != 1 {
        return Err(Error::Config("a loaded stream supports exactly one replicate".into()));
    }
    let reference_model = cfg.model.build(cfg.replicate_seeds(0).basis)?;
    let adversary = cfg.adversary.spec(0);
    let model_check = validate_model(&reference_model, &adversary);
    let stats = reference_model.stats(adversary.bound());
    let mut warnings: Vec<String> = Vec::new();
    if !model_check.gap_condition_ok {
        warnings.extend(model_check.messages.iter().cloned());
    }

    let params: Vec<Option<HyperParams>> = cfg
        .learners
        .iter()
        .map(|l| resolve_params(l, &stats, cfg))
        .collect::<Result<_>>()?;
    let block_lengths: Vec<usize> = cfg
        .learners
        .iter()
        .zip(&params)
        .map(|(l, hp)| hp.as_ref().map_or(l.block, |h| h.block_length))
        .collect();
    let grid = curve_grid(cfg.n, &block_lengths, cfg.max_points);
    let epsilon = theorem_epsilon(&stats).ok();

    let mut good_proj: Vec<Option<GoodProjReport>> = vec![None; cfg.learners.len()];
    let mut replicates = Vec::with_capacity(cfg.replicates);
    let mut loaded = loaded;
    for r in 0..cfg.replicates {
        let data = match loaded.take() {
            Some(s) => s,
            None => generate_replicate(cfg, r)?,
        };
        let spike = data.model.spike();
        let warm_xs: Vec<Vector> = data.warm_prefix.iter().map(|r| r.x().clone()).collect();
        let w1 = warm_start(&warm_xs, warm_xs.len())?;
        let xs: Vec<Vector> = data.stream.iter().map(|r| r.x().clone()).collect();
        let lambda1 = prefix_lambda1(&xs, &grid)?;

        let mut traces = Vec::with_capacity(cfg.learners.len());
        for (i, (l, hp)) in cfg.learners.iter().zip(&params).enumerate() {
            let init = match l.init {
                InitChoice::WarmStart => w1.clone(),
                InitChoice::Spike => spike.clone(),
            };
            if let (Some(hp), Some(eps)) = (hp, epsilon) {
                if l.kind != LearnerKind::Fixed {
                    let report = good_proj_validate(hp, &stats, eps, alignment(&init, &spike));
                    if !report.overall_ok {
                        let failed = report.failures().join(", ");
                        if !matches!(l.mode, HyperMode::Manual { .. }) {
                            return Err(Error::ModelViolation(format!(
                                "learner `{}` (replicate {r}): derived parameters violate the {failed} condition(s)",
                                l.name
                            )));
                        }
                        if r == 0 {
                            warnings.push(format!(
                                "learner `{}`: manual parameters violate the {failed} condition(s)",
                                l.name
                            ));
                        }
                    }
                    if r == 0 {
                        good_proj[i] = Some(report);
                    }
                }
            }
            let block_len = block_lengths[i];
            let mut learner = ScheduledLearner::new(LearnerState::new(l.kind, &init)?, hp.clone())?;
            let (ledger, elapsed) = play(&mut learner, &xs, block_len, Some(&spike), cfg.timing)?;
            traces.push(trace_on_grid(&ledger, &grid, &lambda1, elapsed, learner.degenerate_updates())?);
        }
        replicates.push(ReplicateResult {
            seed: cfg.replicate_seeds(r).replicate,
            warm_start_alignment: alignment(&w1, &spike),
            learners: traces,
        });
    }

    let learners = cfg
        .learners
        .iter()
        .enumerate()
        .map(|(i, l)| summarize(cfg, l, params[i].clone(), good_proj[i], &grid, &replicates, i))
        .collect();
    Ok(RunResult {
        grid,
        learners,
        replicates,
        model_check,
        warnings,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_experiment_on(cfg, None)
}

fn trace_on_grid(
    ledger: &RegretLedger,
    grid: &[usize],
    lambda1: &[f64],
    elapsed: Duration,
    degenerate_updates: usize,
) -> Result<LearnerTrace> {
    let records = ledger.per_block();
    let mut avg_regret = Vec::with_capacity(grid.len());
    let mut align = Vec::with_capacity(grid.len());
    let mut ok_rate = Vec::with_capacity(grid.len());
    let (mut flagged, mut ok) = (0usize, 0usize);
    let mut next = 0;
    for (&n, &l1) in grid.iter().zip(lambda1) {
        while next < records.len() && records[next].n_end <= n {
            if let Some(flag) = records[next].rank_one_ok {
                flagged += 1;
                ok += usize::from(flag);
            }
            next += 1;
        }
        let last = &records[next - 1];
        if last.n_end != n {
            return Err(Error::invalid(format!("grid point {n} is not a block boundary")));
        }
        avg_regret.push((l1 - last.cumulative_payoff) / n as f64);
        align.push(last.alignment);
        ok_rate.push((flagged > 0).then(|| ok as f64 / flagged as f64));
    }
    Ok(LearnerTrace {
        final_avg_regret: *avg_regret.last().expect("grid ends at N"),
        avg_regret,
        alignment: align,
        rank_one_ok_rate: ok_rate,
        rank_one_error_rate: ledger.rank_one_error_rate().ok(),
        blocks: records.len(),
        elapsed,
        degenerate_updates,
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    l: &LearnerConfig,
    hyper_params: Option<HyperParams>,
    good_proj: Option<GoodProjReport>,
    grid: &[usize],
    replicates: &[ReplicateResult],
    i: usize,
) -> LearnerSummary {
    let traces: Vec<&LearnerTrace> = replicates.iter().map(|r| &r.learners[i]).collect();
    let curve = grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let values: Vec<f64> = traces.iter().map(|t| t.avg_regret[k]).collect();
            CurvePoint {
                n,
                avg_regret: mean(&values),
                avg_regret_stderr: stderr(&values),
                alignment: mean_opt(traces.iter().map(|t| t.alignment[k])),
                rank_one_ok_rate: mean_opt(traces.iter().map(|t| t.rank_one_ok_rate[k])),
            }
        })
        .collect();
    let finals: Vec<f64> = traces.iter().map(|t| t.final_avg_regret).collect();
    let blocks: usize = traces.iter().map(|t| t.blocks).sum();
    let secs: f64 = traces.iter().map(|t| t.elapsed.as_secs_f64()).sum();
    LearnerSummary {
        name: l.name.clone(),
        kind: l.kind,
        hyper_params,
        good_proj,
        curve,
        final_avg_regret: mean(&finals),
        final_stderr: stderr(&finals),
        rank_one_error_rate: mean_opt(traces.iter().map(|t| t.rank_one_error_rate)),
        steps_per_sec: (cfg.timing && secs > 0.0).then(|| blocks as f64 / secs),
        degenerate_updates: traces.iter().map(|t| t.degenerate_updates).sum(),
    }
}
