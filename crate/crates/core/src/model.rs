//! Abstract k-homogeneous subset distributions and the exact oracles used to
//! verify every sampler in this crate.
//!
//! A model assigns an unnormalized log-weight to each size-k subset of a
//! ground set `[0, n)` and knows how to draw one exact sample from any
//! restriction of itself. Everything else (enumeration, marginals, total
//! variation, negative-correlation checks) is derived here.

use crate::error::{Error, Result};
use crate::isotropy::CopyMap;
use crate::scalar::{from_f64, Real};
use rand::RngCore;

/// Default cap on the number of subsets the enumeration oracle will visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

/// A sorted subset of the ground set `[0, n)`; the unit of sampler output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetSample {
    indices: Vec<usize>,
    n: usize,
}

impl SubsetSample {
    /// Builds a sample from strictly increasing indices below `n`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let sorted = indices.windows(2).all(|w| w[0] < w[1]);
        let in_range = indices.last().map_or(true, |&last| last < n);
        if !sorted || !in_range {
            return Err(Error::InvalidInput(format!(
                "subset indices must be strictly increasing and below {n}, got {indices:?}"
            )));
        }
        Ok(SubsetSample { indices, n })
    }

    /// Like [`SubsetSample::new`] but sorts first.
    pub fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        SubsetSample::new(indices, n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }
}

/// A k-homogeneous distribution over subsets of `[0, n)`.
///
/// The two concrete realizations are the kernel k-DPP
/// ([`crate::dpp::KdppModel`]) and the weighted spanning-tree distribution
/// ([`crate::spanning_tree::WeightedGraph`]).
pub trait Model<R: Real>: Send + Sync + Sized {
    /// Ground-set size n.
    fn ground_size(&self) -> usize;

    /// Homogeneity degree k.
    fn cardinality(&self) -> usize;

    /// Unnormalized log-weight of a subset; `-inf` exactly outside the
    /// support. `indices` must be strictly increasing and within `[0, n)`.
    fn log_weight(&self, indices: &[usize]) -> R;

    /// Baseline sampler for the restriction to `domain` (sorted, distinct):
    /// one exact draw from mu conditioned on the sample being inside
    /// `domain`, indices reported in the original ground set.
    ///
    /// # Errors
    /// Fails when the restricted support is empty.
    fn sample_restricted(&self, domain: &[usize], rng: &mut dyn RngCore) -> Result<SubsetSample>;

    /// The restriction mu_domain as a standalone model over `[0, |domain|)`;
    /// position j of `domain` becomes element j.
    ///
    /// # Errors
    /// Fails when the restriction visibly has empty support (for example a
    /// disconnected subgraph). Rank-deficient kernel restrictions are only
    /// discovered when sampled.
    fn restrict(&self, domain: &[usize]) -> Result<Self>;

    /// The isotropic subdivision of this model under a copy map (element i
    /// becomes `t_i` interchangeable copies).
    fn subdivide(&self, map: &CopyMap) -> Self;

    /// One baseline sample with no restriction (T = the full ground set).
    fn sample_full(&self, rng: &mut dyn RngCore) -> Result<SubsetSample> {
        let full: Vec<usize> = (0..self.ground_size()).collect();
        self.sample_restricted(&full, rng)
    }
}

/// Full enumeration of a distribution's support with normalized
/// probabilities; the verification oracle.
#[derive(Debug, Clone)]
pub struct ExactTable<R: Real> {
    entries: Vec<(SubsetSample, R)>,
    n: usize,
}

impl<R: Real> ExactTable<R> {
    /// Table from explicit probabilities; entries are sorted and the
    /// probabilities normalized (total must be positive).
    pub fn from_probs(mut entries: Vec<(SubsetSample, R)>, n: usize) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("duplicate table entry".into()));
        }
        if entries.iter().any(|(s, p)| s.n() != n || *p < R::zero()) {
            return Err(Error::InvalidInput(
                "table entries must share the ground size and be nonnegative".into(),
            ));
        }
        let total = entries.iter().fold(R::zero(), |acc, (_, p)| acc + *p);
        if !(total > R::zero()) {
            return Err(Error::ZeroMass);
        }
        for (_, p) in &mut entries {
            *p = *p / total;
        }
        Ok(ExactTable { entries, n })
    }

    /// Table from unnormalized log-weights: max-shift, exponentiate,
    /// normalize. Entries with zero mass are dropped.
    pub fn from_log_weights(items: Vec<(SubsetSample, R)>, n: usize) -> Result<Self> {
        let max = items
            .iter()
            .map(|(_, lw)| *lw)
            .filter(|lw| lw.is_finite())
            .fold(R::neg_infinity(), R::max);
        if !max.is_finite() {
            return Err(Error::ZeroMass);
        }
        let entries: Vec<(SubsetSample, R)> = items
            .into_iter()
            .filter(|(_, lw)| lw.is_finite())
            .map(|(s, lw)| (s, (lw - max).exp()))
            .collect();
        ExactTable::from_probs(entries, n)
    }

    /// Empirical frequency table from a stream of samples.
    pub fn from_samples<I: IntoIterator<Item = SubsetSample>>(samples: I, n: usize) -> Result<Self> {
        let mut sorted: Vec<SubsetSample> = samples.into_iter().collect();
        sorted.sort();
        let mut entries: Vec<(SubsetSample, R)> = Vec::new();
        for s in sorted {
            match entries.last_mut() {
                Some((prev, c)) if *prev == s => *c = *c + R::one(),
                _ => entries.push((s, R::one())),
            }
        }
        ExactTable::from_probs(entries, n)
    }

    pub fn entries(&self) -> &[(SubsetSample, R)] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of support points.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// Probability of a subset, zero if absent.
    pub fn prob(&self, indices: &[usize]) -> R {
        match self
            .entries
            .binary_search_by(|(s, _)| s.indices().cmp(indices))
        {
            Ok(pos) => self.entries[pos].1,
            Err(_) => R::zero(),
        }
    }
}

/// Counts how many subsets enumeration would visit; saturates at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        let factor = (n - k + i) as u128;
        acc = match acc.checked_mul(factor) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Iterator over all k-subsets of `[0, n)` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> KSubsets {
    let state = if k <= n { Some((0..k).collect()) } else { None };
    KSubsets { state, n, k }
}

pub struct KSubsets {
    state: Option<Vec<usize>>,
    n: usize,
    k: usize,
}

impl Iterator for KSubsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.as_ref()?.clone();
        // Advance: bump the rightmost index that still has room.
        let next = self.state.as_mut().unwrap();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - self.k + i {
                next[i] += 1;
                for j in i + 1..self.k {
                    next[j] = next[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

/// Enumerates the full support of a model into a normalized table.
///
/// # Errors
/// `CapExceeded` when `C(n, k) > cap`; `ZeroMass` when every weight is `-inf`.
pub fn enumerate_distribution<R: Real, M: Model<R>>(model: &M, cap: u128) -> Result<ExactTable<R>> {
    let (n, k) = (model.ground_size(), model.cardinality());
    let needed = binomial(n, k);
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    let items: Vec<(SubsetSample, R)> = k_subsets(n, k)
        .map(|s| {
            let lw = model.log_weight(&s);
            (SubsetSample { indices: s, n }, lw)
        })
        .collect();
    ExactTable::from_log_weights(items, n)
}

/// Per-element inclusion probabilities; for a k-homogeneous table they sum
/// to k.
pub fn exact_marginals<R: Real>(table: &ExactTable<R>) -> Vec<R> {
    let mut marginals = vec![R::zero(); table.n()];
    for (s, p) in table.entries() {
        for &i in s.indices() {
            marginals[i] = marginals[i] + *p;
        }
    }
    marginals
}

/// Total variation distance: half the L1 difference, missing entries
/// counting as zero.
///
/// # Errors
/// `DimensionMismatch` when the tables live on different ground sets.
pub fn tv_distance<R: Real>(a: &ExactTable<R>, b: &ExactTable<R>) -> Result<R> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    let (mut i, mut j) = (0, 0);
    let (ea, eb) = (a.entries(), b.entries());
    let mut l1 = R::zero();
    while i < ea.len() || j < eb.len() {
        let ord = match (ea.get(i), eb.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => unreachable!(),
        };
        match ord {
            std::cmp::Ordering::Less => {
                l1 = l1 + ea[i].1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                l1 = l1 + eb[j].1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                l1 = l1 + (ea[i].1 - eb[j].1).abs();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(l1 / from_f64(2.0))
}

/// Outcome of the pairwise negative-correlation check.
#[derive(Debug, Clone)]
pub struct NegativeCorrelationReport<R: Real> {
    /// Max over i < j of `P[i, j in S] - p_i * p_j`.
    pub max_violation: R,
    /// Pair attaining the max, when n >= 2.
    pub worst_pair: Option<(usize, usize)>,
    pub passed: bool,
}

/// Checks the pairwise negative-correlation consequence of the strong
/// Rayleigh property: `P[i, j in S] <= p_i * p_j` for all pairs. Necessary,
/// not sufficient; there is no computable certificate of the full property,
/// so this is the strongest check the oracle runs.
pub fn check_negative_correlation<R: Real>(
    table: &ExactTable<R>,
    tol: R,
) -> NegativeCorrelationReport<R> {
    let n = table.n();
    let marginals = exact_marginals(table);
    let mut pair = vec![R::zero(); n * n];
    for (s, p) in table.entries() {
        let idx = s.indices();
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                pair[i * n + j] = pair[i * n + j] + *p;
            }
        }
    }
    let mut max_violation = R::neg_infinity();
    let mut worst_pair = None;
    for i in 0..n {
        for j in i + 1..n {
            let violation = pair[i * n + j] - marginals[i] * marginals[j];
            if violation > max_violation {
                max_violation = violation;
                worst_pair = Some((i, j));
            }
        }
    }
    if worst_pair.is_none() {
        max_violation = R::zero();
    }
    NegativeCorrelationReport {
        max_violation,
        worst_pair,
        passed: max_violation <= tol,
    }
}

/// Normalizes log-weights in place into probabilities (max-shift first).
///
/// # Errors
/// `ZeroMass` when every entry is `-inf`.
pub(crate) fn normalize_log_weights<R: Real>(logs: &mut [R]) -> Result<()> {
    let max = logs
        .iter()
        .copied()
        .filter(|lw| lw.is_finite())
        .fold(R::neg_infinity(), R::max);
    if !max.is_finite() {
        return Err(Error::ZeroMass);
    }
    let mut total = R::zero();
    for lw in logs.iter_mut() {
        *lw = if lw.is_finite() {
            (*lw - max).exp()
        } else {
            R::zero()
        };
        total = total + *lw;
    }
    for lw in logs.iter_mut() {
        *lw = *lw / total;
    }
    Ok(())
}

/// Draws an index proportionally to nonnegative weights (linear CDF scan).
pub(crate) fn pick_weighted<R: Real>(weights: &[R], rng: &mut dyn RngCore) -> usize {
    let total = weights.iter().fold(R::zero(), |acc, &w| acc + w);
    debug_assert!(total > R::zero(), "pick_weighted needs positive mass");
    let mut target = R::unit_uniform(rng) * total;
    let mut fallback = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > R::zero() {
            fallback = i;
            if target < w {
                return i;
            }
            target = target - w;
        }
    }
    fallback
}
