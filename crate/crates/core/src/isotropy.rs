//! Isotropic subdivision of the ground set and the recursive estimator for
//! marginal overestimates.
//!
//! Subdividing element i into t_i interchangeable copies pushes every copy's
//! marginal below K/n, which is what lets the down-up walk get away with
//! uniformly chosen supersets of size O(K). Lifting and collapsing translate
//! samples between the original and subdivided ground sets; the pushforward
//! of the subdivided law under collapse is exactly the original law.

use crate::error::{Error, Result};
use crate::model::{Model, SubsetSample};
use crate::scalar::{from_f64, from_usize, Real};
use crate::sparsifier::{draw_samples, SparsifierConfig};
use rand::{Rng, RngCore};
use std::ops::Range;

/// Default `sample_constant` for [`estimate_overestimates`]. The miss
/// probability of one element is at most exp(-s p / 8) <= n^(-c/8), so
/// c = 24 keeps even a union bound over all elements deep below one percent
/// per run while the draw count stays O(n log n / k).
pub const DEFAULT_SAMPLE_CONSTANT: f64 = 24.0;

/// Per-element upper bounds q_i on the marginals, each in [0, 1]. Their sum
/// K controls the sparsified domain size. Validity (q_i >= p_i) is a
/// statistical property of how q was produced, checked against exact
/// marginals by [`validate_overestimates`] on small instances.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalOverestimates<R: Real> {
    q: Vec<R>,
}

impl<R: Real> MarginalOverestimates<R> {
    pub fn new(q: Vec<R>) -> Result<Self> {
        for (i, &qi) in q.iter().enumerate() {
            if !(qi >= R::zero() && qi <= R::one()) {
                return Err(Error::InvalidInput(format!(
                    "overestimate {i} must lie in [0, 1], got {qi}"
                )));
            }
        }
        Ok(MarginalOverestimates { q })
    }

    /// The trivially valid all-ones vector.
    pub fn ones(n: usize) -> Self {
        MarginalOverestimates { q: vec![R::one(); n] }
    }

    pub fn values(&self) -> &[R] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Total mass K.
    pub fn sum(&self) -> R {
        self.q.iter().fold(R::zero(), |acc, &x| acc + x)
    }
}

/// Bookkeeping for the subdivision: element i of the original ground set
/// becomes copies `offsets[i]..offsets[i+1]` of the subdivided set U.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyMap {
    t: Vec<usize>,
    offsets: Vec<usize>,
}

impl CopyMap {
    /// Copy counts t_i per original element.
    pub fn copies(&self) -> &[usize] {
        &self.t
    }

    /// Original ground-set size n.
    pub fn n(&self) -> usize {
        self.t.len()
    }

    /// Subdivided ground-set size |U|.
    pub fn u_size(&self) -> usize {
        *self.offsets.last().expect("offsets never empty")
    }

    /// The copies of original element i.
    pub fn copy_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// The original element a copy belongs to.
    pub fn original_of(&self, copy: usize) -> usize {
        debug_assert!(copy < self.u_size());
        match self.offsets.binary_search(&copy) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// True when every element has exactly one copy.
    pub fn is_identity(&self) -> bool {
        self.u_size() == self.n()
    }
}

/// Builds the copy map with t_i = ceil(n * q_i / K) copies per element
/// (at least one each). The subdivided size never exceeds 2n.
///
/// # Errors
/// `ZeroMass` when K = 0.
pub fn build_copy_map<R: Real>(q: &MarginalOverestimates<R>) -> Result<CopyMap> {
    let n = q.len();
    let mass = q.sum();
    if !(mass > R::zero()) {
        return Err(Error::ZeroMass);
    }
    // Guard the ceil so fp noise cannot push an exactly integral ratio up a
    // step (e.g. uniform q = k/n must give t_i = 1, not 2).
    let guard: R = from_f64(1e-9);
    let mut t = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for &qi in q.values() {
        let ratio = from_usize::<R>(n) * qi / mass;
        let ti = (ratio - guard)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .clamp(1, 2 * n);
        t.push(ti);
        offsets.push(offsets.last().unwrap() + ti);
    }
    let map = CopyMap { t, offsets };
    // Sum of ceil(n q_i / K) <= sum (n q_i / K + 1) = 2n.
    assert!(map.u_size() <= 2 * n, "subdivided ground set exceeded 2n");
    Ok(map)
}

/// Lifts an original sample to the subdivided ground set by replacing each
/// element with a uniformly random one of its copies. Lifting an exact
/// sample of the original law yields an exact sample of the subdivided law.
pub fn lift_sample(s: &SubsetSample, map: &CopyMap, rng: &mut dyn RngCore) -> SubsetSample {
    debug_assert_eq!(s.n(), map.n());
    let indices: Vec<usize> = s
        .indices()
        .iter()
        .map(|&i| {
            let range = map.copy_range(i);
            rng.random_range(range)
        })
        .collect();
    SubsetSample::new(indices, map.u_size()).expect("copy ranges are disjoint and increasing")
}

/// Maps a subdivided sample back to original elements.
///
/// # Errors
/// `DuplicateOriginal` when two copies of one element are present; the
/// subdivided law never produces that, so it signals a caller bug.
pub fn collapse_sample(s: &SubsetSample, map: &CopyMap) -> Result<SubsetSample> {
    let mut out = Vec::with_capacity(s.k());
    for &copy in s.indices() {
        let original = map.original_of(copy);
        if out.last() == Some(&original) {
            return Err(Error::DuplicateOriginal { original });
        }
        out.push(original);
    }
    SubsetSample::new(out, map.n())
}

/// Overestimates for the subdivided model: copy j of element i inherits
/// q_i / t_i, since its marginal is exactly p_i / t_i. The total mass K is
/// unchanged.
pub fn subdivide_overestimates<R: Real>(
    q: &MarginalOverestimates<R>,
    map: &CopyMap,
) -> MarginalOverestimates<R> {
    let mut values = Vec::with_capacity(map.u_size());
    for (i, &qi) in q.values().iter().enumerate() {
        let ti = from_usize::<R>(map.copies()[i]);
        for _ in map.copy_range(i) {
            values.push(qi / ti);
        }
    }
    MarginalOverestimates { q: values }
}

/// Estimates marginal overestimates by divide and conquer: ground sets of
/// size at most 4k get all-ones; larger ones recurse on the two natural
/// halves (restrictions only increase marginals, so the halves' bounds
/// remain valid), then sharpen by counting element frequencies over
/// s = ceil(c * |S| * ln(max(n, 3)) / k) sparsified samples drawn with the
/// concatenated bounds: q_i = min(1, max(k / |S|, 2 * count_i / s)).
///
/// The result sums to at most 4k; if a run lands above that (not expected
/// mathematically), it retries with doubled s up to three times. A half
/// whose restriction cannot be sampled (disconnected subgraph,
/// rank-deficient kernel) falls back to all-ones bounds: valid, just loose.
///
/// # Errors
/// `EmptySupport` when the model itself cannot be sampled.
pub fn estimate_overestimates<R: Real, M: Model<R>>(
    model: &M,
    sample_constant: R,
    rng: &mut dyn RngCore,
) -> Result<MarginalOverestimates<R>> {
    let n = model.ground_size();
    let k = model.cardinality();
    assert!(k >= 1, "degenerate model with k = 0");
    let budget: R = from_usize::<R>(4 * k) + from_f64(1e-9);
    let mut last = None;
    for attempt in 0..3u32 {
        let q = estimate_recursive(model, n, sample_constant, attempt, rng)?;
        let total = q.iter().fold(R::zero(), |acc, &x| acc + x);
        if total <= budget {
            return MarginalOverestimates::new(q);
        }
        last = Some(total);
    }
    Err(Error::InvalidInput(format!(
        "overestimate mass {} stayed above 4k = {} after three attempts",
        last.unwrap(),
        4 * k
    )))
}

fn estimate_recursive<R: Real, M: Model<R>>(
    model: &M,
    n_top: usize,
    sample_constant: R,
    attempt: u32,
    rng: &mut dyn RngCore,
) -> Result<Vec<R>> {
    let size = model.ground_size();
    let k = model.cardinality();
    if size <= 4 * k {
        return Ok(vec![R::one(); size]);
    }

    let half = size / 2;
    let mut joined = Vec::with_capacity(size);
    for domain in [
        (0..half).collect::<Vec<usize>>(),
        (half..size).collect::<Vec<usize>>(),
    ] {
        let q_half = match model.restrict(&domain) {
            Ok(sub) => estimate_recursive(&sub, n_top, sample_constant, attempt, rng)
                .unwrap_or_else(|_| vec![R::one(); domain.len()]),
            Err(_) => vec![R::one(); domain.len()],
        };
        joined.extend(q_half);
    }

    let log_n = from_usize::<R>(n_top.max(3)).ln();
    let s_real = sample_constant * from_usize::<R>(size) * log_n / from_usize::<R>(k);
    let s = s_real.ceil().to_usize().unwrap_or(usize::MAX / 8) << attempt;

    let loose = MarginalOverestimates::new(joined)?;
    let config = SparsifierConfig {
        seed: rng.next_u64(),
        ..SparsifierConfig::default()
    };
    let samples = draw_samples(model, &loose, &config, s)?;
    let mut counts = vec![0usize; size];
    for sample in &samples {
        for &i in sample.indices() {
            counts[i] += 1;
        }
    }
    let floor = from_usize::<R>(k) / from_usize::<R>(size);
    let draws = from_usize::<R>(s);
    Ok(counts
        .iter()
        .map(|&c| {
            let freq2 = from_f64::<R>(2.0) * from_usize::<R>(c) / draws;
            freq2.max(floor).min(R::one())
        })
        .collect())
}

/// Elements whose overestimate undercuts the exact marginal.
#[derive(Debug, Clone)]
pub struct ValidityReport<R: Real> {
    /// Pairs (i, p_i - q_i) for every i with q_i < p_i - 1e-9.
    pub violations: Vec<(usize, R)>,
    /// Total mass K of the checked overestimates.
    pub sum: R,
    pub valid: bool,
}

/// Checks q against exact marginals computed from an enumeration table.
pub fn validate_overestimates<R: Real>(
    q: &MarginalOverestimates<R>,
    marginals: &[R],
) -> ValidityReport<R> {
    assert_eq!(q.len(), marginals.len(), "ground-set size mismatch");
    let slack: R = from_f64(1e-9);
    let violations: Vec<(usize, R)> = q
        .values()
        .iter()
        .zip(marginals)
        .enumerate()
        .filter(|(_, (&qi, &pi))| qi < pi - slack)
        .map(|(i, (&qi, &pi))| (i, pi - qi))
        .collect();
    ValidityReport {
        valid: violations.is_empty(),
        sum: q.sum(),
        violations,
    }
}
