//! The down-up domain-sparsification walk and its single-exchange special
//! case.
//!
//! One round lifts the current k-set to a uniformly random t-superset T and
//! replaces it by a fresh baseline sample of the restriction to T. The
//! current set is always contained in T, so the restriction has mass and the
//! chain never leaves the support; the walk is reversible with the model's
//! law as its stationary distribution. After isotropic subdivision t can be
//! taken as a small multiple of the overestimate mass K, which is the whole
//! point: restricted sampling touches t elements instead of n.

use crate::error::{Error, Result};
use crate::isotropy::{
    build_copy_map, collapse_sample, lift_sample, subdivide_overestimates, MarginalOverestimates,
};
use crate::model::{normalize_log_weights, pick_weighted, Model, SubsetSample};
use crate::scalar::{from_f64, Real};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::marker::PhantomData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMode {
    /// Resample inside a uniform t-superset each round.
    DownUp,
    /// Add one uniform outside element, drop one by the conditional law.
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounds {
    /// 10 * ceil(log2(n+1)) rounds for DownUp, 10 * ceil(K * log2(n+1)) for
    /// Exchange, with n the ground size the chain actually walks on.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct SparsifierConfig<R: Real> {
    /// Sparsified domain size as a multiple of K: t = clamp(ceil(t_multiplier * K), k+1, n).
    pub t_multiplier: R,
    /// Rounds between successive outputs.
    pub rounds: Rounds,
    pub seed: u64,
    pub mode: WalkMode,
}

impl<R: Real> Default for SparsifierConfig<R> {
    fn default() -> Self {
        SparsifierConfig {
            t_multiplier: from_f64(4.0),
            rounds: Rounds::Auto,
            seed: 0,
            mode: WalkMode::DownUp,
        }
    }
}

impl<R: Real> SparsifierConfig<R> {
    /// Domain size for one round on a ground set of size n with overestimate
    /// mass K. Exchange mode always uses t = k+1.
    pub fn resolve_t(&self, n: usize, k: usize, mass: R) -> usize {
        if n <= k + 1 {
            return n;
        }
        match self.mode {
            WalkMode::Exchange => k + 1,
            WalkMode::DownUp => {
                let raw = (self.t_multiplier * mass).ceil().to_usize().unwrap_or(n);
                raw.clamp(k + 1, n)
            }
        }
    }

    /// Rounds between outputs on a ground set of size n with mass K.
    pub fn resolve_rounds(&self, n: usize, mass: R) -> usize {
        match self.rounds {
            Rounds::Fixed(r) => r,
            Rounds::Auto => {
                let log2n = ((n + 1) as f64).log2();
                match self.mode {
                    WalkMode::DownUp => 10 * log2n.ceil() as usize,
                    WalkMode::Exchange => {
                        let mass = mass.to_f64().unwrap_or(1.0).max(1.0);
                        10 * (mass * log2n).ceil() as usize
                    }
                }
            }
        }
    }
}

/// A single walk: the current set, the domain size t, and the round counter.
/// The current set always has finite log-weight.
#[derive(Debug)]
pub struct ChainState<'a, R: Real, M: Model<R>> {
    model: &'a M,
    current: SubsetSample,
    t: usize,
    mode: WalkMode,
    rounds_done: usize,
    _scalar: PhantomData<fn() -> R>,
}

impl<'a, R: Real, M: Model<R>> ChainState<'a, R, M> {
    /// Wraps an exact sample as the chain start.
    pub fn from_start(model: &'a M, start: SubsetSample, t: usize, mode: WalkMode) -> Result<Self> {
        let n = model.ground_size();
        if start.n() != n || start.k() != model.cardinality() {
            return Err(Error::InvalidInput(format!(
                "start set has shape ({}, {}), model expects ({}, {})",
                start.n(),
                start.k(),
                n,
                model.cardinality()
            )));
        }
        if !model.log_weight(start.indices()).is_finite() {
            return Err(Error::InvalidInput("start set outside the support".into()));
        }
        debug_assert!(t <= n && t >= start.k());
        Ok(ChainState {
            model,
            current: start,
            t,
            mode,
            rounds_done: 0,
            _scalar: PhantomData,
        })
    }

    pub fn current(&self) -> &SubsetSample {
        &self.current
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn mode(&self) -> WalkMode {
        self.mode
    }

    pub fn rounds_done(&self) -> usize {
        self.rounds_done
    }
}

fn as_empty_support(e: Error) -> Error {
    match e {
        Error::InfeasibleK { .. } | Error::ZeroMass | Error::Disconnected => Error::EmptySupport,
        other => other,
    }
}

/// Starts a chain from one full baseline sample (T = the whole ground set).
///
/// # Errors
/// `EmptySupport` when the model has nothing to sample.
pub fn init_state<'a, R: Real, M: Model<R>>(
    model: &'a M,
    q: &MarginalOverestimates<R>,
    config: &SparsifierConfig<R>,
    rng: &mut dyn RngCore,
) -> Result<ChainState<'a, R, M>> {
    assert_eq!(q.len(), model.ground_size(), "overestimate length mismatch");
    let t = config.resolve_t(model.ground_size(), model.cardinality(), q.sum());
    let start = model.sample_full(rng).map_err(as_empty_support)?;
    ChainState::from_start(model, start, t, config.mode)
}

/// One down-up round: T = current plus a uniform (t-k)-subset of the
/// complement, then current = baseline sample of the restriction to T.
/// Cannot drift off the support since current is in T every round.
pub fn down_up_round<R: Real, M: Model<R>>(
    state: &mut ChainState<'_, R, M>,
    rng: &mut dyn RngCore,
) -> Result<()> {
    let n = state.model.ground_size();
    let (k, t) = (state.current.k(), state.t);
    debug_assert!(k < t && t <= n, "down-up round needs k < t <= n");
    let superset = uniform_superset(state.current.indices(), n, t, rng);
    let next = state.model.sample_restricted(&superset, rng)?;
    debug_assert!(state.model.log_weight(next.indices()).is_finite());
    state.current = next;
    state.rounds_done += 1;
    Ok(())
}

/// One exchange round (t = k+1): add one uniform outside element, then drop
/// one of the k+1 candidates with probability proportional to the weight of
/// the set it leaves behind.
pub fn exchange_round<R: Real, M: Model<R>>(
    state: &mut ChainState<'_, R, M>,
    rng: &mut dyn RngCore,
) -> Result<()> {
    let n = state.model.ground_size();
    let k = state.current.k();
    debug_assert!(n >= k + 1, "exchange round needs n > k");
    let added = uniform_outside(state.current.indices(), n, rng);
    let mut superset = state.current.indices().to_vec();
    let pos = superset.binary_search(&added).unwrap_err();
    superset.insert(pos, added);

    let mut logs = Vec::with_capacity(superset.len());
    let mut candidates = Vec::with_capacity(superset.len());
    for drop in 0..superset.len() {
        let mut cand = superset.clone();
        cand.remove(drop);
        logs.push(state.model.log_weight(&cand));
        candidates.push(cand);
    }
    // The current set is one of the candidates, so mass is never zero.
    normalize_log_weights(&mut logs)?;
    let pick = pick_weighted(&logs, rng);
    state.current = SubsetSample::new(candidates.swap_remove(pick), n)?;
    state.rounds_done += 1;
    Ok(())
}

/// The end-to-end sparsified sampler: subdivide by the copy map built from
/// q, lift one exact baseline sample of the original model as the start
/// (exact for the subdivided law too, so no subdivided decomposition is
/// needed), then emit `count` samples spaced `rounds` rounds apart,
/// collapsing each back to the original ground set.
///
/// Outputs come from one continuing chain, so successive samples are
/// approximately independent rather than exactly so; the spacing equals the
/// full single-sample round budget. Deterministic given `config.seed`.
///
/// # Errors
/// `EmptySupport` when the model cannot be sampled at all; `ZeroMass` when q
/// sums to zero.
pub fn draw_samples<R: Real, M: Model<R>>(
    model: &M,
    q: &MarginalOverestimates<R>,
    config: &SparsifierConfig<R>,
    count: usize,
) -> Result<Vec<SubsetSample>> {
    assert_eq!(q.len(), model.ground_size(), "overestimate length mismatch");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let map = build_copy_map(q)?;
    let sub = model.subdivide(&map);
    let q_sub = subdivide_overestimates(q, &map);

    let start = model.sample_full(&mut rng).map_err(as_empty_support)?;
    let lifted = lift_sample(&start, &map, &mut rng);
    let n_sub = sub.ground_size();
    let k = sub.cardinality();
    let t = config.resolve_t(n_sub, k, q_sub.sum());
    let mut state = ChainState::from_start(&sub, lifted, t, config.mode)?;
    // A ground set of size k holds a single set; the walk has nowhere to go.
    // And when the superset is the whole domain, the up step is already an
    // exact resample, so one round per output is enough.
    let rounds = if n_sub <= k {
        0
    } else if config.mode == WalkMode::DownUp && t == n_sub {
        1
    } else {
        config.resolve_rounds(n_sub, q_sub.sum())
    };

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..rounds {
            match config.mode {
                WalkMode::DownUp => down_up_round(&mut state, &mut rng)?,
                WalkMode::Exchange => exchange_round(&mut state, &mut rng)?,
            }
        }
        out.push(collapse_sample(state.current(), &map)?);
    }
    Ok(out)
}

/// Uniform t-superset of `current`. Rejection sampling keeps the expected
/// cost O(t) when t is well below n; otherwise the complement is
/// materialized and partially Fisher-Yates shuffled.
fn uniform_superset(
    current: &[usize],
    n: usize,
    t: usize,
    rng: &mut dyn RngCore,
) -> Vec<usize> {
    let k = current.len();
    let extra = t - k;
    if extra == 0 {
        return current.to_vec();
    }
    let mut additions: Vec<usize>;
    if 4 * t >= n {
        let mut complement = Vec::with_capacity(n - k);
        let mut held = current.iter().copied().peekable();
        for v in 0..n {
            if held.peek() == Some(&v) {
                held.next();
            } else {
                complement.push(v);
            }
        }
        for j in 0..extra {
            let r = rng.random_range(j..complement.len());
            complement.swap(j, r);
        }
        additions = complement[..extra].to_vec();
        additions.sort_unstable();
    } else {
        additions = Vec::with_capacity(extra);
        while additions.len() < extra {
            let c = rng.random_range(0..n);
            if current.binary_search(&c).is_ok() {
                continue;
            }
            if let Err(pos) = additions.binary_search(&c) {
                additions.insert(pos, c);
            }
        }
    }
    merge_sorted(current, &additions)
}

/// One uniform element outside `current`.
fn uniform_outside(current: &[usize], n: usize, rng: &mut dyn RngCore) -> usize {
    let k = current.len();
    debug_assert!(k < n);
    if 2 * k >= n {
        let slot = rng.random_range(0..n - k);
        let mut seen = 0;
        let mut held = current.iter().copied().peekable();
        for v in 0..n {
            if held.peek() == Some(&v) {
                held.next();
            } else {
                if seen == slot {
                    return v;
                }
                seen += 1;
            }
        }
        unreachable!("slot within complement size");
    }
    loop {
        let c = rng.random_range(0..n);
        if current.binary_search(&c).is_err() {
            return c;
        }
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
