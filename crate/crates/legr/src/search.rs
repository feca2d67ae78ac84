//! Regularized evolutionary search over affine pairs.
//!
//! A fixed-capacity FIFO pool holds recent candidates; each iteration samples
//! a subset, mutates the fittest member (the identity pair during warm-up),
//! evaluates its fitness — validation accuracy after pruning to the lowest
//! FLOP target and fine-tuning a few steps — and replaces the oldest pool
//! record. The loop is inherently sequential; everything is driven by the
//! `search` substream of the seed, so a fixed seed fixes the entire
//! trajectory.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::engine::{evaluate, train_steps, Model, TrainConfig};
use crate::error::{Error, Result};
use crate::ranking::{filter_norms, legr_prune, AffinePair, LayerNorms};
use crate::rng::substream;

/// Search hyperparameters. Defaults follow the published protocol: 400
/// explored architectures, 200 fine-tune steps per fitness evaluation,
/// mutation rate 10%.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Lowest FLOP ratio considered; the budget fitness is evaluated at.
    pub zeta_hat_low: f64,
    /// Log-normal random-walk size for alpha mutations.
    pub sigma: f64,
    /// Total search iterations (E). One fitness evaluation per iteration.
    pub total_iters: usize,
    /// Pool sample size per iteration (S).
    pub sample_size: usize,
    /// Percentage of layers mutated per step (u).
    pub mutation_percent: f64,
    /// Pool capacity (P).
    pub pool_size: usize,
    /// Fine-tune steps inside each fitness evaluation (tau-hat).
    pub finetune_steps: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            zeta_hat_low: 0.2,
            sigma: 0.1,
            total_iters: 400,
            sample_size: 16,
            mutation_percent: 10.0,
            pool_size: 64,
            finetune_steps: 200,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_hat_low > 0.0 && self.zeta_hat_low <= 1.0) {
            return Err(Error::Config(format!(
                "zeta_hat_low {} outside (0, 1]",
                self.zeta_hat_low
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        if self.total_iters == 0 {
            return Err(Error::Config("total_iters must be at least 1".into()));
        }
        if self.sample_size == 0 || self.sample_size > self.pool_size {
            return Err(Error::Config(format!(
                "sample_size {} must be in 1..=pool_size {}",
                self.sample_size, self.pool_size
            )));
        }
        if !(self.mutation_percent > 0.0 && self.mutation_percent <= 100.0) {
            return Err(Error::Config(format!(
                "mutation_percent {} outside (0, 100]",
                self.mutation_percent
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PoolRecord {
    pub pair: AffinePair,
    pub fitness: f64,
    /// Insertion index; the minimum age is always the eviction victim.
    pub age: usize,
}

/// Fixed-capacity FIFO of scored candidates.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    records: VecDeque<PoolRecord>,
    capacity: usize,
    next_age: usize,
}

impl CandidatePool {
    pub fn new(capacity: usize) -> Self {
        Self {
            records: VecDeque::with_capacity(capacity),
            capacity,
            next_age: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn records(&self) -> impl Iterator<Item = &PoolRecord> {
        self.records.iter()
    }

    /// Append; once full, evict the oldest record.
    pub fn push(&mut self, pair: AffinePair, fitness: f64) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(PoolRecord {
            pair,
            fitness,
            age: self.next_age,
        });
        self.next_age += 1;
    }

    /// Sample `amount` distinct records (without replacement).
    pub fn sample(&self, amount: usize, rng: &mut ChaCha8Rng) -> Vec<&PoolRecord> {
        let idxs = rand::seq::index::sample(rng, self.records.len(), amount);
        idxs.iter().map(|i| &self.records[i]).collect()
    }
}

/// Population standard deviation of the squared filter norms of one layer.
pub fn layer_norm_std(norms: &LayerNorms, layer_pos: usize) -> f64 {
    let values = &norms[layer_pos];
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Per-layer norm spreads, fixed across a search.
pub fn all_layer_stds(norms: &LayerNorms) -> Vec<f64> {
    (0..norms.len()).map(|l| layer_norm_std(norms, l)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct MutateConfig {
    pub sigma: f64,
    pub mutation_percent: f64,
}

/// Random-walk mutation: a uniformly random u% of layers (at least one) gets
/// a log-normal multiplicative step on alpha and an additive Gaussian step on
/// kappa scaled by that layer's norm spread.
pub fn mutate(
    pair: &AffinePair,
    config: &MutateConfig,
    stds: &[f64],
    rng: &mut ChaCha8Rng,
) -> AffinePair {
    let layer_count = pair.len();
    let picks = ((layer_count as f64 * config.mutation_percent / 100.0).round() as usize)
        .clamp(1, layer_count);
    let mut selected: Vec<usize> = rand::seq::index::sample(rng, layer_count, picks).into_vec();
    selected.sort_unstable();

    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut out = pair.clone();
    for l in selected {
        let alpha_step: f64 = (config.sigma * unit.sample(rng)).exp();
        out.alpha[l] *= alpha_step;
        let kappa_step: f64 = stds[l] * unit.sample(rng);
        out.kappa[l] += kappa_step;
    }
    out
}

/// Everything a fitness evaluation needs. The pretrained model is never
/// modified; each evaluation prunes a fresh copy.
pub struct FitnessContext<'a> {
    pub pretrained: &'a Model,
    pub train: &'a Dataset,
    pub val: &'a Dataset,
    pub finetune: TrainConfig,
    pub zeta_hat: f64,
    pub finetune_steps: usize,
}

/// Prune at the lowest FLOP target, materialize, fine-tune tau-hat steps,
/// return validation accuracy.
pub fn fitness(pair: &AffinePair, ctx: &FitnessContext) -> Result<f64> {
    let mask = legr_prune(ctx.pretrained, pair, ctx.zeta_hat)?;
    let mut pruned = ctx.pretrained.apply_mask(&mask)?;
    if ctx.finetune_steps > 0 {
        train_steps(
            &mut pruned,
            ctx.train.images(),
            ctx.train.labels(),
            &ctx.finetune,
            ctx.finetune_steps,
        )?;
    }
    evaluate(&pruned, ctx.val.images(), ctx.val.labels())
}

/// One row per iteration. `seconds_elapsed` is wall clock and is the one
/// column excluded from bit-identical determinism comparisons.
#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub iteration: usize,
    pub candidate_fitness: f64,
    pub best_so_far: f64,
    pub seconds_elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_pair: AffinePair,
    pub best_fitness: f64,
    pub history: Vec<HistoryRow>,
}

pub const HISTORY_HEADER: &str = "iteration,candidate_fitness,best_so_far,seconds_elapsed";

pub fn history_to_csv(history: &[HistoryRow]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for row in history {
        out.push_str(&format!(
            "{},{},{},{:.3}\n",
            row.iteration, row.candidate_fitness, row.best_so_far, row.seconds_elapsed
        ));
    }
    out
}

static SEARCH_INVOCATIONS: AtomicUsize = AtomicUsize::new(0);

/// Process-wide count of `search` invocations. Instrumentation for the
/// one-search-many-targets economics check.
pub fn search_invocations() -> usize {
    SEARCH_INVOCATIONS.load(Ordering::SeqCst)
}

/// Run the evolutionary search; returns the fittest pair ever evaluated and
/// the per-iteration history.
pub fn search(
    pretrained: &Model,
    train: &Dataset,
    val: &Dataset,
    finetune: &TrainConfig,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    config.validate()?;
    SEARCH_INVOCATIONS.fetch_add(1, Ordering::SeqCst);
    let started = Instant::now();

    let layer_count = pretrained.graph().prunable_layers().len();
    let norms = filter_norms(pretrained);
    let stds = all_layer_stds(&norms);
    let mutate_config = MutateConfig {
        sigma: config.sigma,
        mutation_percent: config.mutation_percent,
    };
    let ctx = FitnessContext {
        pretrained,
        train,
        val,
        finetune: finetune.clone(),
        zeta_hat: config.zeta_hat_low,
        finetune_steps: config.finetune_steps,
    };

    let mut rng = substream(config.seed, "search");
    let mut pool = CandidatePool::new(config.pool_size);
    let mut best_pair = AffinePair::identity(layer_count);
    let mut best_fitness = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(config.total_iters);

    for iteration in 1..=config.total_iters {
        let mut parent = AffinePair::identity(layer_count);
        if pool.len() >= config.sample_size {
            let sampled = pool.sample(config.sample_size, &mut rng);
            let fittest = sampled
                .into_iter()
                .max_by(|a, b| a.fitness.total_cmp(&b.fitness).then(a.age.cmp(&b.age)))
                .expect("sample is nonempty");
            parent = fittest.pair.clone();
        }
        let candidate = mutate(&parent, &mutate_config, &stds, &mut rng);
        let fit = fitness(&candidate, &ctx)?;
        pool.push(candidate.clone(), fit);
        if fit > best_fitness {
            best_fitness = fit;
            best_pair = candidate;
        }
        history.push(HistoryRow {
            iteration,
            candidate_fitness: fit,
            best_so_far: best_fitness,
            seconds_elapsed: started.elapsed().as_secs_f64(),
        });
    }

    Ok(SearchOutcome {
        best_pair,
        best_fitness,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_protocol() {
        let config = SearchConfig::default();
        assert_eq!(config.total_iters, 400);
        assert_eq!(config.finetune_steps, 200);
        assert_eq!(config.mutation_percent, 10.0);
    }

    #[test]
    fn pool_evicts_oldest_once_full() {
        let mut pool = CandidatePool::new(3);
        for i in 0..5 {
            pool.push(AffinePair::identity(2), i as f64);
        }
        assert_eq!(pool.len(), 3);
        let ages: Vec<usize> = pool.records().map(|r| r.age).collect();
        assert_eq!(ages, vec![2, 3, 4]);
        let fits: Vec<f64> = pool.records().map(|r| r.fitness).collect();
        assert_eq!(fits, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_point_std_is_one() {
        let norms: LayerNorms = vec![vec![1.0, 3.0]];
        assert_eq!(layer_norm_std(&norms, 0), 1.0);
        let flat: LayerNorms = vec![vec![2.5; 7]];
        assert_eq!(layer_norm_std(&flat, 0), 0.0);
    }

    #[test]
    fn degenerate_noise_leaves_pair_unchanged() {
        let pair = AffinePair {
            alpha: vec![1.5, 0.5, 2.0],
            kappa: vec![0.1, -0.2, 0.3],
        };
        let config = MutateConfig {
            sigma: 0.0,
            mutation_percent: 100.0,
        };
        let stds = vec![0.0; 3];
        let mut rng = substream(5, "search");
        let out = mutate(&pair, &config, &stds, &mut rng);
        assert_eq!(out, pair);
    }

    #[test]
    fn full_mutation_is_deterministic_per_seed() {
        let pair = AffinePair::identity(4);
        let config = MutateConfig {
            sigma: 0.2,
            mutation_percent: 100.0,
        };
        let stds = vec![1.0; 4];
        let a = mutate(&pair, &config, &stds, &mut substream(9, "search"));
        let b = mutate(&pair, &config, &stds, &mut substream(9, "search"));
        assert_eq!(a, b);
        assert!(a.alpha.iter().all(|&v| v != 1.0), "every layer perturbed");
        assert!(a.kappa.iter().all(|&v| v != 0.0));
    }

    #[test]
    fn mutation_moments_match_the_log_normal_spec() {
        // 10k full mutations with sigma = 0.1: mean of log alpha-steps within
        // +-0.01 of 0, std within 10% of 0.1.
        let config = MutateConfig {
            sigma: 0.1,
            mutation_percent: 100.0,
        };
        let stds = vec![0.0; 2];
        let mut rng = substream(123, "search");
        let base = AffinePair::identity(2);
        let mut logs = Vec::with_capacity(20_000);
        for _ in 0..10_000 {
            let out = mutate(&base, &config, &stds, &mut rng);
            for l in 0..2 {
                logs.push((out.alpha[l] / base.alpha[l]).ln());
            }
        }
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let std = (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.01, "sample mean {mean}");
        assert!((std - 0.1).abs() < 0.01, "sample std {std}");
    }

    #[test]
    fn partial_mutation_touches_at_least_one_layer() {
        let pair = AffinePair::identity(8);
        let config = MutateConfig {
            sigma: 0.1,
            mutation_percent: 10.0, // 0.8 layers, rounds to 1
        };
        let stds = vec![1.0; 8];
        let mut rng = substream(77, "search");
        let out = mutate(&pair, &config, &stds, &mut rng);
        let touched = out
            .alpha
            .iter()
            .zip(&pair.alpha)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(touched, 1);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let ok = SearchConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SearchConfig {
            total_iters: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            sample_size: 100,
            pool_size: 10,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            mutation_percent: 0.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            zeta_hat_low: 0.0,
            ..ok
        }
        .validate()
        .is_err());
    }
}
