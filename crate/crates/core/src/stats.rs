//! Verification statistics: TV estimation against exact tables, mixing
//! curves, marginal concentration under random deletion, and explicit
//! one-round transition matrices for checking the walk algebra exactly.

use crate::error::{Error, Result};
use crate::isotropy::{
    build_copy_map, collapse_sample, lift_sample, subdivide_overestimates, MarginalOverestimates,
};
use crate::model::{
    enumerate_distribution, exact_marginals, k_subsets, tv_distance, ExactTable, Model,
    SubsetSample, DEFAULT_ENUMERATION_CAP,
};
use crate::scalar::{from_f64, from_usize, Real};
use crate::sparsifier::{down_up_round, exchange_round, ChainState, SparsifierConfig, WalkMode};
use num_traits::Float;
use rand::{Rng, RngCore};
use std::fmt::Write as _;

/// Empirical TV distance against an exact table, with the plugin standard
/// error sqrt(|support| / N) / 2.
#[derive(Debug, Clone, PartialEq)]
pub struct TvEstimate<R: Real> {
    pub tv: R,
    pub std_error: R,
    pub num_samples: usize,
}

impl<R: Real> TvEstimate<R> {
    /// `name=value` lines for reports.
    pub fn render(&self) -> String {
        format!(
            "samples={}\ntv={}\nse={}\n",
            self.num_samples, self.tv, self.std_error
        )
    }
}

/// Estimates TV(empirical, exact) from `num_samples` draws of `stream`.
///
/// # Errors
/// `InvalidInput` below 1000 samples (the plugin estimate is meaningless
/// there); any error the stream itself produces.
pub fn estimate_tv<R: Real>(
    mut stream: impl FnMut() -> Result<SubsetSample>,
    oracle: &ExactTable<R>,
    num_samples: usize,
) -> Result<TvEstimate<R>> {
    if num_samples < 1000 {
        return Err(Error::InvalidInput(format!(
            "need at least 1000 samples for a TV estimate, got {num_samples}"
        )));
    }
    let mut samples = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        samples.push(stream()?);
    }
    let empirical = ExactTable::from_samples(samples, oracle.n())?;
    let tv = tv_distance(&empirical, oracle)?;
    let support = from_usize::<R>(oracle.support_size());
    let std_error = (support / from_usize(num_samples)).sqrt() * from_f64(0.5);
    Ok(TvEstimate {
        tv,
        std_error,
        num_samples,
    })
}

/// TV to the target law as a function of walk rounds, each point estimated
/// from fresh chains started at one shared initial set.
#[derive(Debug, Clone)]
pub struct MixingCurve<R: Real> {
    pub rounds_grid: Vec<usize>,
    pub tv_values: Vec<R>,
    pub samples_per_point: usize,
}

impl<R: Real> MixingCurve<R> {
    /// `name=value` header followed by a `rounds,tv` CSV body.
    pub fn render(&self) -> String {
        let mut out = format!("samples_per_point={}\n", self.samples_per_point);
        out.push_str("rounds,tv\n");
        for (r, tv) in self.rounds_grid.iter().zip(&self.tv_values) {
            let _ = writeln!(out, "{r},{tv}");
        }
        out
    }
}

/// Measures how fast the sparsified walk approaches its target: for every
/// grid entry r, run `samples_per_point` fresh chains for exactly r rounds
/// from the same exact starting set and compare with the enumerated law.
/// r = 0 therefore reports the TV of the start's point mass.
///
/// # Errors
/// `CapExceeded` when the model is too large to enumerate; `EmptySupport`
/// and friends from sampling.
pub fn mixing_curve<R: Real, M: Model<R>>(
    model: &M,
    q: &MarginalOverestimates<R>,
    config: &SparsifierConfig<R>,
    rounds_grid: &[usize],
    samples_per_point: usize,
    rng: &mut dyn RngCore,
) -> Result<MixingCurve<R>> {
    let oracle = enumerate_distribution(model, DEFAULT_ENUMERATION_CAP)?;
    let map = build_copy_map(q)?;
    let sub = model.subdivide(&map);
    let q_sub = subdivide_overestimates(q, &map);
    let t = config.resolve_t(sub.ground_size(), sub.cardinality(), q_sub.sum());

    let start = model.sample_full(rng)?;
    let start = lift_sample(&start, &map, rng);

    let mut tv_values = Vec::with_capacity(rounds_grid.len());
    for &rounds in rounds_grid {
        let mut samples = Vec::with_capacity(samples_per_point);
        for _ in 0..samples_per_point {
            let mut state = ChainState::from_start(&sub, start.clone(), t, config.mode)?;
            for _ in 0..rounds {
                match config.mode {
                    WalkMode::DownUp => down_up_round(&mut state, rng)?,
                    WalkMode::Exchange => exchange_round(&mut state, rng)?,
                }
            }
            samples.push(collapse_sample(state.current(), &map)?);
        }
        let empirical = ExactTable::from_samples(samples, model.ground_size())?;
        tv_values.push(tv_distance(&empirical, &oracle)?);
    }
    Ok(MixingCurve {
        rounds_grid: rounds_grid.to_vec(),
        tv_values,
        samples_per_point,
    })
}

/// Outcome of the random-deletion concentration experiment.
#[derive(Debug, Clone)]
pub struct ConcentrationReport<R: Real> {
    /// Retained ground-set size per trial.
    pub s: usize,
    pub trials: usize,
    /// Fraction of non-degenerate trials whose restricted marginal maximum
    /// exceeded the threshold.
    pub exceed_fraction: R,
    /// 2 * p_max * n / s, with p_max the largest unrestricted marginal.
    pub threshold: R,
    /// Trials whose restriction had empty support; excluded from the
    /// fraction above.
    pub empty_support: usize,
}

impl<R: Real> ConcentrationReport<R> {
    pub fn render(&self) -> String {
        format!(
            "s={}\ntrials={}\nthreshold={}\nexceed_fraction={}\nempty_support={}\n",
            self.s, self.trials, self.threshold, self.exceed_fraction, self.empty_support
        )
    }
}

/// Deletes a uniform (n-s)-subset of the ground set `trials` times and
/// checks how often the restricted distribution has a marginal above
/// 2 * p_max * n / s. Exact restricted marginals come from enumeration, so
/// this needs a small model.
///
/// # Errors
/// `CapExceeded` when the model is too large to enumerate; `InvalidInput`
/// when s is not within [1, n].
pub fn concentration_experiment<R: Real, M: Model<R>>(
    model: &M,
    s: usize,
    trials: usize,
    rng: &mut dyn RngCore,
) -> Result<ConcentrationReport<R>> {
    let n = model.ground_size();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!(
            "retained size s = {s} must lie in [1, {n}]"
        )));
    }
    let full = enumerate_distribution(model, DEFAULT_ENUMERATION_CAP)?;
    let p_max = exact_marginals(&full)
        .into_iter()
        .fold(R::zero(), Float::max);
    let threshold = from_f64::<R>(2.0) * p_max * from_usize(n) / from_usize(s);

    let mut exceeded = 0usize;
    let mut empty = 0usize;
    for _ in 0..trials {
        let domain = uniform_subset(n, s, rng);
        let restricted = match model.restrict(&domain) {
            Ok(m) => m,
            Err(_) => {
                empty += 1;
                continue;
            }
        };
        let table = match enumerate_distribution(&restricted, DEFAULT_ENUMERATION_CAP) {
            Ok(t) => t,
            Err(Error::ZeroMass) => {
                empty += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let max_marginal = exact_marginals(&table)
            .into_iter()
            .fold(R::zero(), Float::max);
        if max_marginal > threshold {
            exceeded += 1;
        }
    }
    let valid = trials - empty;
    let exceed_fraction = if valid == 0 {
        R::zero()
    } else {
        from_usize::<R>(exceeded) / from_usize(valid)
    };
    Ok(ConcentrationReport {
        s,
        trials,
        exceed_fraction,
        threshold,
        empty_support: empty,
    })
}

/// Uniform s-subset of [0, n), ascending: partial Fisher-Yates.
fn uniform_subset(n: usize, s: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for j in 0..s {
        let r = rng.random_range(j..n);
        pool.swap(j, r);
    }
    let mut out = pool[..s].to_vec();
    out.sort_unstable();
    out
}

/// The walk written out exactly: support states, stationary law, and the
/// one-round transition matrix. Small models only; this is the oracle the
/// sampled implementation is checked against.
#[derive(Debug, Clone)]
pub struct ChainLaw<R: Real> {
    /// Support of mu, ascending.
    pub states: Vec<SubsetSample>,
    /// mu restricted to `states`, normalized.
    pub stationary: Vec<R>,
    /// Row-major |states| x |states|; row a is the law after one round
    /// from states[a].
    pub transition: Vec<R>,
}

impl<R: Real> ChainLaw<R> {
    /// l1 norm of mu P - mu.
    pub fn stationarity_defect(&self) -> R {
        let m = self.states.len();
        let mut defect = R::zero();
        for b in 0..m {
            let mut mass = R::zero();
            for a in 0..m {
                mass += self.stationary[a] * self.transition[a * m + b];
            }
            defect += (mass - self.stationary[b]).abs();
        }
        defect
    }

    /// max over pairs of |mu_a P_ab - mu_b P_ba|.
    pub fn detailed_balance_defect(&self) -> R {
        let m = self.states.len();
        let mut worst = R::zero();
        for a in 0..m {
            for b in 0..m {
                let fwd = self.stationary[a] * self.transition[a * m + b];
                let bwd = self.stationary[b] * self.transition[b * m + a];
                worst = worst.max((fwd - bwd).abs());
            }
        }
        worst
    }
}

/// Builds the explicit one-round transition matrix of the walk on `model`
/// with domain size t. Down-up rounds average the restricted law over all
/// uniform t-supersets; exchange rounds (t = k+1) add a uniform outside
/// element and drop a candidate proportionally to the weight left behind.
///
/// # Errors
/// `CapExceeded` when the state space is larger than `cap`; `InvalidInput`
/// for a t outside [k+1, n]; `ZeroMass` for an empty support.
pub fn transition_matrix<R: Real, M: Model<R>>(
    model: &M,
    t: usize,
    mode: WalkMode,
    cap: u128,
) -> Result<ChainLaw<R>> {
    let n = model.ground_size();
    let k = model.cardinality();
    if t <= k || t > n {
        return Err(Error::InvalidInput(format!(
            "domain size t = {t} must lie in ({k}, {n}]"
        )));
    }
    if mode == WalkMode::Exchange && t != k + 1 {
        return Err(Error::InvalidInput(format!(
            "exchange rounds use t = k+1 = {}, got {t}",
            k + 1
        )));
    }
    let table = enumerate_distribution(model, cap)?;
    let states: Vec<SubsetSample> = table.entries().iter().map(|(s, _)| s.clone()).collect();
    let stationary: Vec<R> = table.entries().iter().map(|&(_, p)| p).collect();
    let index_of = |indices: &[usize]| -> Option<usize> {
        states
            .binary_search_by(|s| s.indices().cmp(indices))
            .ok()
    };

    let m = states.len();
    let mut transition = vec![R::zero(); m * m];
    for (a, state) in states.iter().enumerate() {
        let row = &mut transition[a * m..(a + 1) * m];
        let complement: Vec<usize> = (0..n).filter(|i| !state.contains(*i)).collect();
        match mode {
            WalkMode::DownUp => {
                // Average mu_T over all supersets T of size t.
                let mut supersets = 0usize;
                for extra in k_subsets(complement.len(), t - k) {
                    supersets += 1;
                    let mut domain: Vec<usize> = state.indices().to_vec();
                    domain.extend(extra.iter().map(|&e| complement[e]));
                    domain.sort_unstable();
                    // Conditional law inside T over member states.
                    let mut members = Vec::new();
                    let mut total = R::zero();
                    for sub in k_subsets(t, k) {
                        let candidate: Vec<usize> = sub.iter().map(|&i| domain[i]).collect();
                        if let Some(b) = index_of(&candidate) {
                            members.push(b);
                            total += stationary[b];
                        }
                    }
                    for b in members {
                        row[b] += stationary[b] / total;
                    }
                }
                let scale = R::one() / from_usize(supersets);
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
            WalkMode::Exchange => {
                let outside = from_usize::<R>(complement.len());
                for &j in &complement {
                    let mut domain: Vec<usize> = state.indices().to_vec();
                    let pos = domain.binary_search(&j).unwrap_err();
                    domain.insert(pos, j);
                    let mut drops = Vec::with_capacity(domain.len());
                    let mut total = R::zero();
                    for d in 0..domain.len() {
                        let mut candidate = domain.clone();
                        candidate.remove(d);
                        if let Some(b) = index_of(&candidate) {
                            drops.push(b);
                            total += stationary[b];
                        }
                    }
                    for b in drops {
                        row[b] += stationary[b] / (total * outside);
                    }
                }
            }
        }
    }
    Ok(ChainLaw {
        states,
        stationary,
        transition,
    })
}
