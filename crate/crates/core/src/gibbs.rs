//! Single-site Gibbs sampling over the factors of one solver stage.
//!
//! The chain runs over the free variables of a [`StageContext`] with the
//! dependency set and the stage decision held fixed, and estimates the
//! conditional expectation of the value table by the sample mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{IridError, Result};
use crate::factors::{Assignment, Config, DenseState, Factor, VarId};
use crate::graph_ops::{FactorRole, StageContext};
use crate::model::{IridModel, NodeKind};

/// Number of batches used for the batch-means standard error.
pub const BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub samples: usize,
    pub thinning: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            burn_in: 1_000,
            samples: 20_000,
            thinning: 1,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(IridError::InvalidSamplerConfig(
                "samples must be at least 1".into(),
            ));
        }
        if self.thinning == 0 {
            return Err(IridError::InvalidSamplerConfig(
                "thinning must be at least 1".into(),
            ));
        }
        if self.samples < self.thinning {
            return Err(IridError::InvalidSamplerConfig(format!(
                "samples ({}) must be at least thinning ({})",
                self.samples, self.thinning
            )));
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn kept(&self) -> usize {
        self.samples / self.thinning
    }
}

/// Sample mean with its batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and batch-means standard error of a series.
    pub fn from_draws(draws: &[f64]) -> Estimate {
        let n = draws.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            draws.iter().sum::<f64>() / n as f64
        };
        Estimate {
            mean,
            std_error: batch_means_se(draws),
            n,
        }
    }
}

fn batch_means_se(draws: &[f64]) -> f64 {
    let n = draws.len();
    if n < 2 {
        return 0.0;
    }
    let nb = BATCHES.min(n);
    let means: Vec<f64> = (0..nb)
        .map(|b| {
            let batch = &draws[b * n / nb..(b + 1) * n / nb];
            batch.iter().sum::<f64>() / batch.len() as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / nb as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (nb - 1) as f64;
    (var / nb as f64).sqrt()
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell seed. With `alternative = None` every alternative of a cell shares
/// one stream (common random numbers).
pub fn derive_seed(base: u64, stage: usize, cell: usize, alternative: Option<usize>) -> u64 {
    let mut h = mix(base);
    h = mix(h ^ stage as u64);
    h = mix(h ^ cell as u64);
    if let Some(a) = alternative {
        h = mix(h ^ (a as u64).wrapping_add(0xA5A5_A5A5));
    }
    h
}

/// Current chain state: the free variables plus the fixed configuration.
#[derive(Clone, Debug)]
pub struct ChainState {
    state: DenseState,
    free: Vec<VarId>,
    fixed: Config,
}

impl ChainState {
    /// Values of the free variables.
    pub fn assignment(&self) -> Config {
        self.free
            .iter()
            .map(|&v| (v, self.state.get(v).expect("free variables are assigned")))
            .collect()
    }

    pub fn fixed(&self) -> &Config {
        &self.fixed
    }

    /// Free and fixed values together.
    pub fn full(&self) -> Config {
        self.assignment().merged(&self.fixed)
    }
}

impl Assignment for ChainState {
    fn value_of(&self, var: VarId) -> Option<usize> {
        self.state.get(var)
    }
}

/// Precomputed per-variable factor lists for one stage.
struct Kernel<'c> {
    ctx: &'c StageContext,
    probs: Vec<&'c Factor>,
    /// Factors mentioning each free variable (same order as `ctx.free`).
    touching: Vec<Vec<&'c Factor>>,
}

impl<'c> Kernel<'c> {
    fn new(ctx: &'c StageContext) -> Self {
        let probs: Vec<&Factor> = ctx.probability_factors().map(|f| &f.factor).collect();
        let touching = ctx
            .free
            .iter()
            .map(|&v| probs.iter().copied().filter(|f| f.contains(v)).collect())
            .collect();
        Kernel {
            ctx,
            probs,
            touching,
        }
    }

    fn positive(&self, state: &DenseState) -> bool {
        self.probs.iter().all(|f| f.evaluate_total(state) > 0.0)
    }

    fn sweep(&self, state: &mut DenseState, rng: &mut ChaCha8Rng) -> Result<()> {
        let mut weights = Vec::new();
        for (i, &v) in self.ctx.free.iter().enumerate() {
            let card = self.ctx.card(v);
            weights.clear();
            for x in 0..card {
                state.set(v, x);
                let mut w = 1.0;
                for f in &self.touching[i] {
                    w *= f.evaluate_total(state);
                    if w == 0.0 {
                        break;
                    }
                }
                weights.push(w);
            }
            let x = draw(&weights, rng).ok_or_else(|| IridError::AllZeroSupport(v.to_string()))?;
            state.set(v, x);
        }
        debug_assert!(self.positive(state));
        Ok(())
    }
}

/// Index drawn proportionally to `weights`; `None` if all are zero.
fn draw(weights: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return Some(i);
            }
            u -= w;
            last = Some(i);
        }
    }
    last
}

/// Free variables with parents before children, ties by variable id.
fn sampling_order(ctx: &StageContext) -> Vec<VarId> {
    let mut order = Vec::with_capacity(ctx.free.len());
    let mut left: Vec<VarId> = ctx.free.clone();
    while !left.is_empty() {
        let pos = left
            .iter()
            .position(|&v| {
                ctx.factors.iter().all(|f| {
                    f.role != FactorRole::Chance(v) || f.parents.iter().all(|p| !left.contains(p))
                })
            })
            .unwrap_or(0);
        order.push(left.remove(pos));
    }
    order
}

fn check_fixed(ctx: &StageContext, fixed: &Config) -> Result<()> {
    for v in ctx.fixed_vars() {
        if !fixed.contains(v) {
            return Err(IridError::IncompleteConfig(v.to_string()));
        }
    }
    Ok(())
}

/// Draws a positive-probability starting state consistent with `fixed`.
pub fn init_state(ctx: &StageContext, fixed: &Config, rng: &mut ChaCha8Rng) -> Result<ChainState> {
    check_fixed(ctx, fixed)?;
    let kernel = Kernel::new(ctx);
    let order = sampling_order(ctx);
    let mut state = DenseState::from_config(ctx.capacity, fixed);

    // factors that become fully assigned when order[i] is set
    let mut completes: Vec<Vec<&Factor>> = vec![Vec::new(); order.len()];
    for f in &kernel.probs {
        let last = f
            .scope()
            .iter()
            .filter_map(|v| order.iter().position(|o| o == v))
            .max();
        match last {
            Some(i) => completes[i].push(f),
            None => {
                if f.evaluate_total(&state) <= 0.0 {
                    return Err(IridError::NoPositiveState {
                        config: ctx.describe(fixed),
                    });
                }
            }
        }
    }

    fn extend(
        i: usize,
        order: &[VarId],
        completes: &[Vec<&Factor>],
        ctx: &StageContext,
        state: &mut DenseState,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let Some(&v) = order.get(i) else {
            return true;
        };
        let mut weights: Vec<f64> = (0..ctx.card(v))
            .map(|x| {
                state.set(v, x);
                completes[i]
                    .iter()
                    .map(|f| f.evaluate_total(state))
                    .product()
            })
            .collect();
        while let Some(x) = draw(&weights, rng) {
            state.set(v, x);
            if extend(i + 1, order, completes, ctx, state, rng) {
                return true;
            }
            weights[x] = 0.0;
        }
        state.unset(v);
        false
    }

    if !extend(0, &order, &completes, ctx, &mut state, rng) {
        return Err(IridError::NoPositiveState {
            config: ctx.describe(fixed),
        });
    }
    Ok(ChainState {
        state,
        free: ctx.free.clone(),
        fixed: fixed.clone(),
    })
}

/// One systematic-scan sweep: every free variable resampled once from its
/// full conditional, in variable order.
pub fn sweep(state: &mut ChainState, ctx: &StageContext, rng: &mut ChaCha8Rng) -> Result<()> {
    Kernel::new(ctx).sweep(&mut state.state, rng)
}

/// Conditional expectation of `value` given `fixed`, estimated by the sample
/// mean of a single chain.
pub fn estimate_expectation(
    ctx: &StageContext,
    fixed: &Config,
    value: &Factor,
    config: &SamplerConfig,
) -> Result<Estimate> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chain = init_state(ctx, fixed, &mut rng)?;
    let n = config.kept();
    if ctx.free.is_empty() {
        let v = value.evaluate(&chain)?;
        return Ok(Estimate {
            mean: v,
            std_error: 0.0,
            n,
        });
    }
    let kernel = Kernel::new(ctx);
    for _ in 0..config.burn_in {
        kernel.sweep(&mut chain.state, &mut rng)?;
    }
    let mut draws = Vec::with_capacity(n);
    for s in 1..=config.samples {
        kernel.sweep(&mut chain.state, &mut rng)?;
        if s % config.thinning == 0 {
            draws.push(value.evaluate(&chain)?);
        }
    }
    Ok(Estimate::from_draws(&draws))
}

/// Expected value of V in a decision-free model from independent forward
/// draws. A single Gibbs chain over the whole network can be reducible
/// (structural zeros may freeze a root), so the terminal value uses ancestral
/// sampling instead.
pub fn ancestral_expectation(model: &IridModel, config: &SamplerConfig) -> Result<Estimate> {
    config.validate()?;
    if let Some(&d) = model.decisions().first() {
        return Err(IridError::MissingPolicy(model.name(d).into()));
    }
    let order: Vec<VarId> = model
        .topological_order()
        .into_iter()
        .filter(|&v| model.kind(v) == NodeKind::Chance)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = DenseState::new(model.capacity());
    let mut weights = Vec::new();
    let value = model.value_table().factor();
    let mut draws = Vec::with_capacity(config.samples);
    for _ in 0..config.samples {
        for &v in &order {
            let f = model.cpt(v).expect("validated").factor();
            weights.clear();
            for x in 0..model.card(v) {
                state.set(v, x);
                weights.push(f.evaluate_total(&state));
            }
            let x = draw(&weights, &mut rng)
                .ok_or_else(|| IridError::AllZeroSupport(model.name(v).into()))?;
            state.set(v, x);
        }
        draws.push(value.evaluate_total(&state));
    }
    Ok(Estimate::from_draws(&draws))
}
