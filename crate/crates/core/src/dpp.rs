//! Dense-kernel k-DPPs: mu(S) proportional to det(L_{S,S}).
//!
//! The baseline sampler is the elementary-DPP mixture: pick k eigenvectors
//! with probability proportional to the product of their eigenvalues (via a
//! table of elementary symmetric polynomials), then sample a projection DPP
//! from the chosen orthonormal columns by the chain rule. Restriction and
//! subdivision are index/scale views over a shared kernel, so neither copies
//! the matrix; the full-ground decomposition is computed once on demand and
//! cached, which is what makes repeated full-domain resampling cheap.

use crate::error::{Error, Result};
use crate::isotropy::CopyMap;
use crate::model::{pick_weighted, Model, SubsetSample};
use crate::scalar::{tolerance, Real};
use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use rand::RngCore;
use std::sync::{Arc, OnceLock};

/// Default relative eigenvalue tolerance: eigenvalues in [-tol*norm, 0) are
/// clamped to zero, anything lower is rejected as not PSD.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Pivot threshold (relative to the largest entry) below which a principal
/// submatrix counts as singular and its set gets log-weight -inf.
const SINGULAR_PIVOT_TOL: f64 = 1e-12;

/// A dense symmetric PSD kernel. Symmetry is checked at construction;
/// positive semidefiniteness when decomposed.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<R: Real> {
    n: usize,
    entries: Vec<R>, // row-major
}

impl<R: Real> KernelMatrix<R> {
    /// Builds a kernel from row-major entries, requiring symmetry within
    /// 1e-10 relative to the largest entry.
    pub fn from_flat(n: usize, entries: Vec<R>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "kernel needs {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        let scale = entries
            .iter()
            .fold(R::zero(), |acc, &x| acc.max(x.abs()))
            .max(R::one());
        let tol = scale * tolerance(1e-10, 16.0);
        let mut max_dev = R::zero();
        for i in 0..n {
            for j in i + 1..n {
                let dev = (entries[i * n + j] - entries[j * n + i]).abs();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > tol {
            return Err(Error::NotSymmetric {
                max_dev: max_dev.to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(KernelMatrix { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("kernel rows must form a square".into()));
        }
        KernelMatrix::from_flat(n, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![R::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = R::one();
        }
        KernelMatrix { n, entries }
    }

    pub fn from_diagonal(diag: &[R]) -> Self {
        let n = diag.len();
        let mut entries = vec![R::zero(); n * n];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * n + i] = d;
        }
        KernelMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.entries[i * self.n + j]
    }

    fn is_diagonal(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            for (j, &v) in row.iter().enumerate() {
                if j != i && v != R::zero() {
                    return false;
                }
            }
        }
        true
    }
}

/// Eigenvectors, stored densely or as the permutation a diagonal kernel
/// induces (dense vectors would waste quadratic memory there).
#[derive(Debug, Clone)]
enum Vectors<R: Real> {
    /// Row-major n x n; column j is the eigenvector for eigenvalue j.
    Dense(Vec<R>),
    /// Eigenvector j is the standard basis vector with this index.
    Permutation(Vec<usize>),
}

/// Eigendecomposition with eigenvalues ascending and clamped to be
/// nonnegative.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<R: Real> {
    n: usize,
    eigenvalues: Vec<R>,
    vectors: Vectors<R>,
    clamp_count: usize,
}

impl<R: Real> SpectralDecomposition<R> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ascending, nonnegative.
    pub fn eigenvalues(&self) -> &[R] {
        &self.eigenvalues
    }

    /// How many small negative eigenvalues were clamped to zero.
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    /// Number of strictly positive eigenvalues.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > R::zero()).count()
    }

    /// Component i of eigenvector j.
    pub fn vector_entry(&self, i: usize, j: usize) -> R {
        match &self.vectors {
            Vectors::Dense(v) => v[i * self.n + j],
            Vectors::Permutation(p) => {
                if p[j] == i {
                    R::one()
                } else {
                    R::zero()
                }
            }
        }
    }

    /// Row-major n x |cols| copy of the selected eigenvector columns.
    fn gather_columns(&self, cols: &[usize]) -> Vec<R> {
        let width = cols.len();
        let mut out = vec![R::zero(); self.n * width];
        match &self.vectors {
            Vectors::Dense(v) => {
                for i in 0..self.n {
                    for (c, &j) in cols.iter().enumerate() {
                        out[i * width + c] = v[i * self.n + j];
                    }
                }
            }
            Vectors::Permutation(p) => {
                for (c, &j) in cols.iter().enumerate() {
                    out[p[j] * width + c] = R::one();
                }
            }
        }
        out
    }
}

/// Spectral decomposition with eigenvalue clamping. Exactly diagonal kernels
/// (the identity, anything from [`KernelMatrix::from_diagonal`]) take a sort
/// instead of an O(n^3) eigensolve and store their eigenvectors as a
/// permutation.
///
/// # Errors
/// `NotPsd` when an eigenvalue sits below -tol * spectral norm.
pub fn decompose_kernel<R: Real + RealField>(
    kernel: &KernelMatrix<R>,
    tol: R,
) -> Result<SpectralDecomposition<R>> {
    let n = kernel.n();
    let (mut eigenvalues, vectors) = if kernel.is_diagonal() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            kernel
                .get(a, a)
                .partial_cmp(&kernel.get(b, b))
                .expect("kernel entries are ordered")
        });
        let eigenvalues: Vec<R> = order.iter().map(|&i| kernel.get(i, i)).collect();
        (eigenvalues, Vectors::Permutation(order))
    } else {
        let m = DMatrix::<R>::from_fn(n, n, |i, j| kernel.get(i, j));
        let eigen = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[a]
                .partial_cmp(&eigen.eigenvalues[b])
                .expect("eigenvalues are ordered")
        });
        let eigenvalues: Vec<R> = order.iter().map(|&j| eigen.eigenvalues[j]).collect();
        let mut dense = vec![R::zero(); n * n];
        for (c, &j) in order.iter().enumerate() {
            for i in 0..n {
                dense[i * n + c] = eigen.eigenvectors[(i, j)];
            }
        }
        (eigenvalues, Vectors::Dense(dense))
    };

    let norm = eigenvalues
        .iter()
        .fold(R::zero(), |acc, &l| Float::max(acc, Float::abs(l)));
    let floor = -tol * norm;
    let mut clamp_count = 0;
    for l in eigenvalues.iter_mut() {
        if *l < floor {
            return Err(Error::NotPsd {
                eigenvalue: l.to_f64().unwrap_or(f64::NAN),
                tol: (tol * norm).to_f64().unwrap_or(f64::NAN),
            });
        }
        if *l < R::zero() {
            *l = R::zero();
            clamp_count += 1;
        }
    }
    Ok(SpectralDecomposition {
        n,
        eigenvalues,
        vectors,
        clamp_count,
    })
}

/// Elementary symmetric polynomials E[j][m] = e_j(lambda_1..lambda_m) for
/// j <= k, kept as mantissas with one log-scale per column m so the values
/// survive n ~ 10^4 with eigenvalues spanning many orders of magnitude.
/// Always built in f64: the dynamic range inside a single column exceeds
/// what f32 can hold regardless of scaling.
#[derive(Debug, Clone)]
pub struct ElementarySymmetricTable {
    n: usize,
    k: usize,
    lambda: Vec<f64>,
    values: Vec<f64>, // (k+1) x (n+1), row-major by j
    scales: Vec<f64>, // per-column natural-log scale
}

impl ElementarySymmetricTable {
    pub fn new<R: Real>(eigenvalues: &[R], k: usize) -> Self {
        let lambda: Vec<f64> = eigenvalues
            .iter()
            .map(|l| l.to_f64().expect("eigenvalue fits f64"))
            .collect();
        let n = lambda.len();
        let width = n + 1;
        let mut values = vec![0.0; (k + 1) * width];
        let mut scales = vec![0.0; width];
        values[0] = 1.0; // e_0 of zero variables
        let mut raw = vec![0.0; k + 1];
        for m in 1..=n {
            let lam = lambda[m - 1];
            raw[0] = values[m - 1];
            for j in 1..=k {
                raw[j] = values[j * width + m - 1] + lam * values[(j - 1) * width + m - 1];
            }
            let max = raw.iter().cloned().fold(0.0, f64::max);
            let rescale = if max > 0.0 { max } else { 1.0 };
            scales[m] = scales[m - 1] + rescale.ln();
            for j in 0..=k {
                values[j * width + m] = raw[j] / rescale;
            }
        }
        ElementarySymmetricTable {
            n,
            k,
            lambda,
            values,
            scales,
        }
    }

    /// log e_j(lambda_1..lambda_m); -inf when the polynomial is zero.
    pub fn log_e(&self, j: usize, m: usize) -> f64 {
        debug_assert!(j <= self.k && m <= self.n);
        let v = self.values[j * (self.n + 1) + m];
        if v > 0.0 {
            v.ln() + self.scales[m]
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Draws an index set J of size k with P(J) proportional to the product
    /// of the selected eigenvalues, by backward traversal of the table.
    /// Returns ascending indices into the eigenvalue array.
    pub fn select(&self, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        let (n, k) = (self.n, self.k);
        if !self.log_e(k, n).is_finite() {
            let rank = self.lambda.iter().filter(|&&l| l > 0.0).count();
            return Err(Error::InfeasibleK { rank, k });
        }
        let mut out = Vec::with_capacity(k);
        let mut j = k;
        for m in (1..=n).rev() {
            if j == 0 {
                break;
            }
            if j == m {
                // Everything that remains is forced in.
                for r in (0..m).rev() {
                    out.push(r);
                }
                j = 0;
                break;
            }
            let log_p = self.lambda[m - 1].ln() + self.log_e(j - 1, m - 1) - self.log_e(j, m);
            let p = log_p.exp();
            if f64::unit_uniform(rng) < p {
                out.push(m - 1);
                j -= 1;
            }
        }
        debug_assert_eq!(j, 0, "traversal must place all k selections");
        out.reverse();
        Ok(out)
    }
}

/// Samples S with law proportional to det(L_{S,S}) from a decomposition of
/// L: eigenvector subset selection followed by a projection-DPP chain rule
/// (pick row i with probability |row|^2 / remaining, deflate, and
/// re-orthonormalize the columns every k/8 picks to bound drift).
///
/// # Errors
/// `InfeasibleK` when fewer than k eigenvalues are strictly positive.
pub fn sample_kdpp<R: Real + RealField>(
    decomp: &SpectralDecomposition<R>,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<SubsetSample> {
    let table = ElementarySymmetricTable::new(decomp.eigenvalues(), k);
    sample_decomposed(decomp, &table, rng)
}

fn sample_decomposed<R: Real>(
    decomp: &SpectralDecomposition<R>,
    table: &ElementarySymmetricTable,
    rng: &mut dyn RngCore,
) -> Result<SubsetSample> {
    let k = table.k;
    let n = decomp.n();
    if decomp.rank() < k {
        return Err(Error::InfeasibleK {
            rank: decomp.rank(),
            k,
        });
    }
    if k == 0 {
        return SubsetSample::new(Vec::new(), n);
    }
    let chosen = table.select(rng)?;
    let mut basis = decomp.gather_columns(&chosen); // n x width, row-major
    let mut width = k;
    let mut norms: Vec<R> = (0..n)
        .map(|i| row_norm_sq(&basis, i, width))
        .collect();
    let mut picked = Vec::with_capacity(k);
    let reorth_period = (k / 8).max(1);
    let mut direction = vec![R::zero(); k];

    for step in 0..k {
        let i = pick_weighted(&norms, rng);
        picked.push(i);
        if step + 1 == k {
            break;
        }
        // Unit direction of the picked row; deflate every row against it.
        let scale = Float::sqrt(norms[i]);
        for c in 0..width {
            direction[c] = basis[i * width + c] / scale;
        }
        for r in 0..n {
            let row = &mut basis[r * width..r * width + width];
            let mut dot = R::zero();
            for c in 0..width {
                dot += row[c] * direction[c];
            }
            for c in 0..width {
                row[c] -= dot * direction[c];
            }
            norms[r] = Float::max(norms[r] - dot * dot, R::zero());
        }
        for &p in &picked {
            norms[p] = R::zero();
        }
        if (step + 1) % reorth_period == 0 {
            width = reorthonormalize(&mut basis, n, width, k - step - 1);
            for r in 0..n {
                norms[r] = row_norm_sq(&basis, r, width);
            }
            for &p in &picked {
                norms[p] = R::zero();
            }
        }
    }
    SubsetSample::from_unsorted(picked, n)
}

fn row_norm_sq<R: Real>(basis: &[R], row: usize, width: usize) -> R {
    let slice = &basis[row * width..row * width + width];
    slice.iter().fold(R::zero(), |acc, &x| acc + x * x)
}

/// Column-pivoted modified Gram-Schmidt down to a known target rank; the
/// trailing near-null columns are dropped. Returns the new width and leaves
/// the retained columns packed at the front of each row.
fn reorthonormalize<R: Real>(basis: &mut [R], n: usize, width: usize, target: usize) -> usize {
    debug_assert!(target <= width);
    let col_dot = |basis: &[R], a: usize, b: usize| {
        let mut acc = R::zero();
        for r in 0..n {
            acc += basis[r * width + a] * basis[r * width + b];
        }
        acc
    };
    let mut col_norms: Vec<R> = (0..width).map(|c| col_dot(basis, c, c)).collect();
    let mut order: Vec<usize> = (0..width).collect();
    for pos in 0..target {
        // Pivot: bring the largest remaining column forward.
        let best = (pos..width)
            .max_by(|&a, &b| {
                col_norms[order[a]]
                    .partial_cmp(&col_norms[order[b]])
                    .expect("column norms are ordered")
            })
            .expect("nonempty");
        order.swap(pos, best);
        let c = order[pos];
        let norm = Float::sqrt(col_dot(basis, c, c));
        for r in 0..n {
            basis[r * width + c] /= norm;
        }
        for &other in &order[pos + 1..width] {
            let d = col_dot(basis, c, other);
            for r in 0..n {
                let v = basis[r * width + c];
                basis[r * width + other] -= d * v;
            }
            col_norms[other] -= d * d;
        }
    }
    // Pack the retained columns into rows of the new width.
    let keep = &order[..target];
    let mut packed = vec![R::zero(); n * target];
    for r in 0..n {
        for (c_new, &c_old) in keep.iter().enumerate() {
            packed[r * target + c_new] = basis[r * width + c_old];
        }
    }
    basis[..n * target].copy_from_slice(&packed);
    target
}

/// Samples the k-DPP of L conditioned on S being inside T: decompose the
/// principal submatrix L_{T,T} and translate indices back.
///
/// # Errors
/// `InfeasibleK` when the submatrix has rank below k.
pub fn sample_kdpp_restricted<R: Real + RealField>(
    kernel: &KernelMatrix<R>,
    k: usize,
    domain: &[usize],
    rng: &mut dyn RngCore,
) -> Result<SubsetSample> {
    let local = sample_gathered(
        |a, b| kernel.get(domain[a], domain[b]),
        domain.len(),
        k,
        rng,
    )?;
    let global: Vec<usize> = local.indices().iter().map(|&a| domain[a]).collect();
    SubsetSample::new(global, kernel.n())
}

/// Restricted sampling over an implicitly gathered t x t principal
/// submatrix, local indices.
fn sample_gathered<R: Real + RealField>(
    entry: impl Fn(usize, usize) -> R,
    t: usize,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<SubsetSample> {
    if t < k {
        return Err(Error::InfeasibleK { rank: t, k });
    }
    if k == 1 {
        // det of a 1x1 submatrix is its diagonal entry; no eigensolve needed.
        let weights: Vec<R> = (0..t).map(|a| Float::max(entry(a, a), R::zero())).collect();
        let total = weights.iter().fold(R::zero(), |acc, &w| acc + w);
        if !(total > R::zero()) {
            return Err(Error::InfeasibleK { rank: 0, k });
        }
        let a = pick_weighted(&weights, rng);
        return SubsetSample::new(vec![a], t);
    }
    let mut entries = vec![R::zero(); t * t];
    for a in 0..t {
        for b in 0..t {
            entries[a * t + b] = entry(a, b);
        }
    }
    let sub = KernelMatrix { n: t, entries };
    // The floor keeps the f32 lane usable: eigensolve backward error there
    // is around n * epsilon, far above the f64-calibrated default.
    let decomp = decompose_kernel(&sub, tolerance(DEFAULT_PSD_TOL, 256.0))?;
    sample_kdpp(&decomp, k, rng)
}

/// log det(L_{S,S}) by partial-pivoted elimination; -inf when a pivot falls
/// below the singularity threshold or the determinant goes nonpositive
/// (which for a PSD kernel only fp noise can produce).
pub fn log_weight_dpp<R: Real>(kernel: &KernelMatrix<R>, s: &SubsetSample) -> R {
    log_det_gathered(|a, b| kernel.get(s.indices()[a], s.indices()[b]), s.k())
}

fn log_det_gathered<R: Real>(entry: impl Fn(usize, usize) -> R, k: usize) -> R {
    if k == 0 {
        return R::zero();
    }
    let mut m = vec![R::zero(); k * k];
    let mut scale = R::zero();
    for a in 0..k {
        for b in 0..k {
            let v = entry(a, b);
            m[a * k + b] = v;
            scale = scale.max(v.abs());
        }
    }
    let threshold = scale.max(R::one()) * tolerance(SINGULAR_PIVOT_TOL, 16.0);
    let mut log_det = R::zero();
    let mut negative = false;
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| {
                m[a * k + col]
                    .abs()
                    .partial_cmp(&m[b * k + col].abs())
                    .expect("pivots are ordered")
            })
            .expect("nonempty");
        let pivot = m[pivot_row * k + col];
        if pivot.abs() <= threshold {
            return R::neg_infinity();
        }
        if pivot_row != col {
            for b in 0..k {
                m.swap(col * k + b, pivot_row * k + b);
            }
            negative = !negative;
        }
        if pivot < R::zero() {
            negative = !negative;
        }
        log_det += pivot.abs().ln();
        for a in col + 1..k {
            let factor = m[a * k + col] / pivot;
            for b in col..k {
                let sub = factor * m[col * k + b];
                m[a * k + b] -= sub;
            }
        }
    }
    if negative {
        R::neg_infinity()
    } else {
        log_det
    }
}

struct FullSampler<R: Real> {
    decomp: SpectralDecomposition<R>,
    table: ElementarySymmetricTable,
}

/// The k-DPP as a [`Model`]: a shared kernel plus an index/scale view, so
/// restriction and subdivision are O(ground size) and the matrix itself is
/// never copied. Entry (a, b) of the effective kernel is
/// `scale_a * scale_b * L[origin_a, origin_b]`; two copies of one original
/// make the submatrix singular, which zeroes exactly the right sets.
pub struct KdppModel<R: Real> {
    kernel: Arc<KernelMatrix<R>>,
    k: usize,
    origins: Vec<usize>,
    scales: Vec<R>,
    full: OnceLock<Result<FullSampler<R>>>,
}

impl<R: Real> Clone for KdppModel<R> {
    fn clone(&self) -> Self {
        KdppModel {
            kernel: Arc::clone(&self.kernel),
            k: self.k,
            origins: self.origins.clone(),
            scales: self.scales.clone(),
            full: OnceLock::new(),
        }
    }
}

impl<R: Real> std::fmt::Debug for KdppModel<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KdppModel")
            .field("n", &self.origins.len())
            .field("k", &self.k)
            .field("kernel_n", &self.kernel.n())
            .finish()
    }
}

impl<R: Real> KdppModel<R> {
    pub fn new(kernel: KernelMatrix<R>, k: usize) -> Result<Self> {
        if k > kernel.n() {
            return Err(Error::InfeasibleK { rank: kernel.n(), k });
        }
        let n = kernel.n();
        Ok(KdppModel {
            kernel: Arc::new(kernel),
            k,
            origins: (0..n).collect(),
            scales: vec![R::one(); n],
            full: OnceLock::new(),
        })
    }

    pub fn kernel(&self) -> &KernelMatrix<R> {
        &self.kernel
    }

    #[inline]
    fn entry(&self, a: usize, b: usize) -> R {
        self.scales[a] * self.scales[b] * self.kernel.get(self.origins[a], self.origins[b])
    }

    fn is_plain(&self) -> bool {
        self.origins.len() == self.kernel.n()
            && self.scales.iter().all(|&s| s == R::one())
            && self.origins.iter().enumerate().all(|(i, &o)| i == o)
    }
}

impl<R: Real + RealField> KdppModel<R> {
    fn build_full_sampler(&self) -> Result<FullSampler<R>> {
        let tol = tolerance(DEFAULT_PSD_TOL, 256.0);
        let decomp = if self.is_plain() {
            decompose_kernel(&self.kernel, tol)?
        } else {
            let n = self.origins.len();
            let mut entries = vec![R::zero(); n * n];
            for a in 0..n {
                for b in 0..n {
                    entries[a * n + b] = self.entry(a, b);
                }
            }
            decompose_kernel(&KernelMatrix { n, entries }, tol)?
        };
        if decomp.rank() < self.k {
            return Err(Error::InfeasibleK {
                rank: decomp.rank(),
                k: self.k,
            });
        }
        let table = ElementarySymmetricTable::new(decomp.eigenvalues(), self.k);
        Ok(FullSampler { decomp, table })
    }

    /// Forces the cached full-domain preprocessing, surfacing `NotPsd` or
    /// `InfeasibleK` eagerly instead of at the first sample.
    pub fn validate(&self) -> Result<()> {
        self.full
            .get_or_init(|| self.build_full_sampler())
            .as_ref()
            .map(|_| ())
            .map_err(Clone::clone)
    }
}

impl<R: Real + RealField> Model<R> for KdppModel<R> {
    fn ground_size(&self) -> usize {
        self.origins.len()
    }

    fn cardinality(&self) -> usize {
        self.k
    }

    fn log_weight(&self, indices: &[usize]) -> R {
        debug_assert_eq!(indices.len(), self.k);
        log_det_gathered(|a, b| self.entry(indices[a], indices[b]), indices.len())
    }

    fn sample_restricted(&self, domain: &[usize], rng: &mut dyn RngCore) -> Result<SubsetSample> {
        let n = self.ground_size();
        if domain.len() == n {
            // Full-domain draws share one cached decomposition.
            let sampler = self
                .full
                .get_or_init(|| self.build_full_sampler())
                .as_ref()
                .map_err(Clone::clone)?;
            return sample_decomposed(&sampler.decomp, &sampler.table, rng);
        }
        let local = sample_gathered(
            |a, b| self.entry(domain[a], domain[b]),
            domain.len(),
            self.k,
            rng,
        )?;
        let global: Vec<usize> = local.indices().iter().map(|&a| domain[a]).collect();
        SubsetSample::new(global, n)
    }

    fn restrict(&self, domain: &[usize]) -> Result<Self> {
        Ok(KdppModel {
            kernel: Arc::clone(&self.kernel),
            k: self.k,
            origins: domain.iter().map(|&i| self.origins[i]).collect(),
            scales: domain.iter().map(|&i| self.scales[i]).collect(),
            full: OnceLock::new(),
        })
    }

    fn subdivide(&self, map: &CopyMap) -> Self {
        let mut origins = Vec::with_capacity(map.u_size());
        let mut scales = Vec::with_capacity(map.u_size());
        for (i, &t) in map.copies().iter().enumerate() {
            let damp = R::one() / Float::sqrt(crate::scalar::from_usize::<R>(t));
            for _ in 0..t {
                origins.push(self.origins[i]);
                scales.push(self.scales[i] * damp);
            }
        }
        KdppModel {
            kernel: Arc::clone(&self.kernel),
            k: self.k,
            origins,
            scales,
            full: OnceLock::new(),
        }
    }
}
