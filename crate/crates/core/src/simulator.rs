//! Agent-based simulation of repeated skip pricing.
//!
//! Each round the designer posts a price (or, for known types, one price per
//! agent), agents buy when their marginal value covers it, revenue is
//! discounted by `β^k`, and agents whose round utility falls below their
//! retention draw leave. Survivors may recruit new agents, who start playing
//! the following round.
//!
//! Agents are kept sorted by type. Buyers are then a prefix, and round utility
//! `max(γ v, v - p)` is non-decreasing in `γ`, so a shared retention draw
//! removes a prefix too.
//!
//! When the population outgrows `max_particles` it is thinned by halves and
//! every survivor carries twice the weight; totals stay unbiased.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repeat_pricing::retention_threshold_price;
use crate::stream::{mix, token, Purpose, RoundStream};
use crate::{Distribution, Retention, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetentionMode {
    /// One threshold per round, shared by every agent.
    Shared,
    /// Every agent draws its own threshold each round.
    Independent,
}

impl RetentionMode {
    pub fn name(self) -> &'static str {
        match self {
            RetentionMode::Shared => "shared",
            RetentionMode::Independent => "independent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_initial: usize,
    pub type_dist: Distribution,
    pub value: f64,
    pub retention: Retention,
    pub scheme: Scheme,
    pub retention_mode: RetentionMode,
    /// Per-round probability that a surviving agent recruits one new agent.
    pub growth_rate: f64,
    pub seed: u64,
    pub max_rounds: usize,
    /// Stop once `β^k · alive · v` drops below this; defaults to `1e-9 · n · v`.
    pub revenue_eps: Option<f64>,
    /// Population size that triggers thinning; defaults to `max(n, 1000)`.
    pub max_particles: Option<usize>,
    /// Whether recruits face the retention draw of the round they join in.
    pub test_recruits_on_arrival: bool,
}

pub const DEFAULT_MAX_ROUNDS: usize = 5000;

impl SimConfig {
    pub fn new(n_initial: usize, type_dist: Distribution, value: f64, retention: Retention, scheme: Scheme) -> Self {
        Self {
            n_initial,
            type_dist,
            value,
            retention,
            scheme,
            retention_mode: RetentionMode::Shared,
            growth_rate: 0.0,
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
            revenue_eps: None,
            max_particles: None,
            test_recruits_on_arrival: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::ConfigInvalid(m));
        if self.n_initial == 0 {
            return fail("n_initial must be at least 1".into());
        }
        if !(self.value > 0.0) || !self.value.is_finite() {
            return fail(format!("value must be positive, got {}", self.value));
        }
        if !(0.0..1.0).contains(&self.growth_rate) {
            return fail(format!("growth_rate must lie in [0, 1), got {}", self.growth_rate));
        }
        if self.max_rounds == 0 {
            return fail("max_rounds must be at least 1".into());
        }
        if let Some(eps) = self.revenue_eps {
            if !(eps > 0.0) {
                return fail(format!("revenue_eps must be positive, got {eps}"));
            }
        }
        if matches!(self.max_particles, Some(m) if m < 2) {
            return fail("max_particles must be at least 2".into());
        }
        let (lo, hi) = self.type_dist.support();
        if lo < 0.0 || hi > 1.0 {
            return fail("type distribution must be supported on [0, 1]".into());
        }
        self.scheme.validate(self.value).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    fn eps(&self) -> f64 {
        self.revenue_eps.unwrap_or(1e-9 * self.n_initial as f64 * self.value)
    }

    fn cap(&self) -> usize {
        self.max_particles.unwrap_or(self.n_initial.max(1000))
    }

    fn needs_threshold(&self) -> bool {
        !matches!(self.scheme, Scheme::MyersonOnly | Scheme::FixedPrice { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Discounted revenue divided by `n_initial`.
    pub discounted_revenue: f64,
    pub rounds_run: usize,
    /// Posted price per round; for known types, the mean price paid.
    pub price_trajectory: Vec<f64>,
    /// Weighted number of agents at the start of each round.
    pub alive_trajectory: Vec<f64>,
    pub buyer_trajectory: Vec<f64>,
    pub seed_echo: u64,
    /// True when `max_rounds` ended the run while revenue was still material.
    pub horizon_truncated: bool,
    pub thinning_events: usize,
}

impl SimResult {
    pub fn write_trajectories(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["round", "price", "alive", "buyers"])?;
        for k in 0..self.rounds_run {
            w.write_record([
                k.to_string(),
                self.price_trajectory[k].to_string(),
                self.alive_trajectory[k].to_string(),
                self.buyer_trajectory[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Alive agents as parallel arrays sorted by `(γ, token)`.
#[derive(Default)]
struct Population {
    gamma: Vec<f64>,
    /// Hashed agent id; every random draw for the agent is keyed by it.
    token: Vec<u64>,
    /// `F_r(γ v)`, the survival chance when not buying; independent mode only.
    wait_keep: Vec<f64>,
}

impl Population {
    fn len(&self) -> usize {
        self.gamma.len()
    }

    fn from_unsorted(mut agents: Vec<(f64, u64)>, keep: impl Fn(f64) -> f64, track_keep: bool) -> Self {
        agents.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let wait_keep = if track_keep { agents.iter().map(|a| keep(a.0)).collect() } else { Vec::new() };
        let (gamma, token) = agents.into_iter().unzip();
        Self { gamma, token, wait_keep }
    }

    fn drop_prefix(&mut self, k: usize) {
        self.gamma.drain(..k);
        self.token.drain(..k);
        if !self.wait_keep.is_empty() {
            self.wait_keep.drain(..k);
        }
    }

    /// Keeps agent `i` when `keep(i, token, wait_keep)` holds, preserving order.
    fn retain(&mut self, mut keep: impl FnMut(usize, u64, f64) -> bool) {
        let track = !self.wait_keep.is_empty();
        let mut w = 0;
        for r in 0..self.gamma.len() {
            let wk = if track { self.wait_keep[r] } else { 0.0 };
            if keep(r, self.token[r], wk) {
                self.gamma[w] = self.gamma[r];
                self.token[w] = self.token[r];
                if track {
                    self.wait_keep[w] = wk;
                }
                w += 1;
            }
        }
        self.gamma.truncate(w);
        self.token.truncate(w);
        if track {
            self.wait_keep.truncate(w);
        }
    }

    /// Merges sorted `other` in, using `scratch` as the output buffer.
    fn merge(&mut self, other: &Population, scratch: &mut Population) {
        if other.len() == 0 {
            return;
        }
        let track = !self.wait_keep.is_empty() || !other.wait_keep.is_empty();
        scratch.gamma.clear();
        scratch.token.clear();
        scratch.wait_keep.clear();
        // Recruits are few; copy the runs of existing agents between them in bulk.
        let mut i = 0;
        for j in 0..other.len() {
            let key = (other.gamma[j], other.token[j]);
            let (mut lo, mut hi) = (i, self.len());
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if (self.gamma[mid], self.token[mid]) <= key {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            let run = lo - i;
            scratch.gamma.extend_from_slice(&self.gamma[i..i + run]);
            scratch.token.extend_from_slice(&self.token[i..i + run]);
            if track {
                scratch.wait_keep.extend_from_slice(&self.wait_keep[i..i + run]);
                scratch.wait_keep.push(other.wait_keep[j]);
            }
            scratch.gamma.push(key.0);
            scratch.token.push(key.1);
            i += run;
        }
        scratch.gamma.extend_from_slice(&self.gamma[i..]);
        scratch.token.extend_from_slice(&self.token[i..]);
        if track {
            scratch.wait_keep.extend_from_slice(&self.wait_keep[i..]);
        }
        std::mem::swap(self, scratch);
    }
}

/// Myerson price of the alive agents' marginal values `(1 - γ) v`, scanning
/// types in ascending order; ties favour the higher price.
pub fn empirical_myerson_from_types(sorted_gammas: &[f64], value: f64) -> f64 {
    // Equal types share a price and the later index sells to more agents, so
    // duplicates never need special handling.
    let mut best = (1.0, f64::NEG_INFINITY);
    let mut count = 0.0;
    for g in sorted_gammas {
        count += 1.0;
        let rev = (1.0 - g) * count;
        if rev > best.1 {
            best = (1.0 - g, rev);
        }
    }
    best.0 * value
}

/// Empirical distribution of marginal values `(1 - γ) v` over the given agents.
pub fn empirical_marginal(gammas: &[f64], value: f64) -> Result<Distribution> {
    if gammas.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    Distribution::empirical(gammas.iter().map(|g| (1.0 - g) * value).collect())
}

pub fn run(config: &SimConfig) -> Result<SimResult> {
    run_observed(config, |_, _| {})
}

/// As [`run`], calling `observe(round, alive types)` at the start of every round.
pub fn run_observed(config: &SimConfig, mut observe: impl FnMut(usize, &[f64])) -> Result<SimResult> {
    config.validate()?;
    let v = config.value;
    let beta = config.retention.beta();
    let rdist = config.retention.dist();
    let q = if config.needs_threshold() { retention_threshold_price(&config.retention, v)?.price } else { v };
    let independent = config.retention_mode == RetentionMode::Independent;
    let eps = config.eps();
    let cap = config.cap();
    let seed = config.seed;
    let wait_keep = |g: f64| rdist.cdf(g * v);

    let init = RoundStream::new(seed, 0, Purpose::InitialType);
    let agents = (0..config.n_initial as u64)
        .map(|i| {
            let t = token(i);
            (config.type_dist.quantile(init.open_uniform_keyed(t)), t)
        })
        .collect();
    let mut pop = Population::from_unsorted(agents, wait_keep, independent);
    let mut scratch = Population::default();

    let mut result = SimResult {
        discounted_revenue: 0.0,
        rounds_run: 0,
        price_trajectory: Vec::new(),
        alive_trajectory: Vec::new(),
        buyer_trajectory: Vec::new(),
        seed_echo: seed,
        horizon_truncated: false,
        thinning_events: 0,
    };
    let mut weight = 1.0;
    let mut discount = 1.0;
    let mut revenue = 0.0;

    for k in 0..config.max_rounds {
        if pop.len() == 0 {
            break;
        }
        observe(k, &pop.gamma);
        let n_alive = pop.len();
        // Effective anonymous price: for known types, agents below the cut
        // pay q and everyone else pays exactly their marginal value, which
        // leaves them with the same utility as not buying at price q.
        let posted = config.scheme.anonymous_price(q, || empirical_myerson_from_types(&pop.gamma, v));
        let p_eff = posted.unwrap_or(q);
        let buy_cut = pop.gamma.partition_point(|g| (1.0 - g) * v >= p_eff);
        let (payments, buyers, price) = match posted {
            Some(p) => (p * buy_cut as f64, buy_cut as f64, p),
            None => {
                let rest: f64 = pop.gamma[buy_cut..].iter().map(|g| (1.0 - g) * v).sum();
                let total = q * buy_cut as f64 + rest;
                (total, n_alive as f64, total / n_alive as f64)
            }
        };
        revenue += discount * weight * payments;
        result.price_trajectory.push(price);
        result.alive_trajectory.push(weight * n_alive as f64);
        result.buyer_trajectory.push(weight * buyers);

        let buyer_utility = v - p_eff;
        let stream = RoundStream::new(seed, k as u64, Purpose::Retention);
        let shared_r = if independent { 0.0 } else { rdist.quantile(stream.open_uniform(u64::MAX)) };
        let utility = |g: f64| if (1.0 - g) * v >= p_eff { buyer_utility } else { g * v };
        if independent {
            let keep_buyer = rdist.cdf(buyer_utility);
            pop.retain(|i, t, wait| stream.uniform_keyed(t) < if i < buy_cut { keep_buyer } else { wait });
        } else {
            let churned = pop.gamma.partition_point(|g| utility(*g) < shared_r);
            pop.drop_prefix(churned);
        }

        if config.growth_rate > 0.0 && pop.len() > 0 {
            let recruit = RoundStream::new(seed, k as u64, Purpose::Recruit);
            let child_id = RoundStream::new(seed, k as u64, Purpose::RecruitId);
            let child_type = RoundStream::new(seed, k as u64, Purpose::RecruitType);
            let mut recruits: Vec<(f64, u64)> = pop
                .token
                .iter()
                .filter(|t| recruit.uniform_keyed(**t) < config.growth_rate)
                .map(|t| {
                    let child = token(child_id.keyed(*t));
                    (config.type_dist.quantile(child_type.open_uniform_keyed(child)), child)
                })
                .collect();
            if config.test_recruits_on_arrival {
                recruits.retain(|(g, t)| {
                    let u = utility(*g);
                    if independent {
                        stream.uniform_keyed(*t) < rdist.cdf(u)
                    } else {
                        u >= shared_r
                    }
                });
            }
            pop.merge(&Population::from_unsorted(recruits, wait_keep, independent), &mut scratch);
        }

        let mut pass = 0u64;
        while pop.len() > cap {
            let thin = RoundStream::new(mix(seed) ^ pass, k as u64, Purpose::Thinning);
            pop.retain(|_, t, _| thin.uniform_keyed(t) < 0.5);
            weight *= 2.0;
            pass += 1;
            result.thinning_events += 1;
        }

        discount *= beta;
        result.rounds_run = k + 1;
        if pop.len() == 0 || discount * weight * pop.len() as f64 * v < eps {
            break;
        }
        if k + 1 == config.max_rounds {
            result.horizon_truncated = true;
        }
    }
    result.discounted_revenue = revenue / config.n_initial as f64;
    Ok(result)
}

/// Runs configs that differ only in their pricing scheme on common random
/// numbers. Results come back in input order.
pub fn run_pair(configs: &[SimConfig]) -> Result<Vec<SimResult>> {
    if let Some(first) = configs.first() {
        for c in &configs[1..] {
            let mut probe = c.clone();
            probe.scheme = first.scheme;
            if probe != *first {
                return Err(Error::MismatchedConfigs);
            }
        }
    }
    configs.par_iter().map(run).collect()
}
