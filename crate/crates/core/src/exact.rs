//! Exact transient and stationary analysis on the full `2^N` state space.
//!
//! Eigenvalues come from faer's dense nonsymmetric solver, built without its
//! rayon feature so the spectrum does not depend on the thread count.
//!
//! State `i` encodes the configuration whose vertex `x` is occupied iff bit `x`
//! of `i` is set.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::schur::SchurParams;
use faer::linalg::evd::{evd_real, evd_scratch, ComputeEigenvectors, EvdParams};
use faer::diag::Diag;
use faer::{Auto, Mat, MatRef, Par};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rates::RateTable;

/// Largest vertex count the full generator is built for.
pub const MAX_EXACT_VERTICES: usize = 20;

/// Largest state-space dimension handed to the dense eigensolver and to GTH.
pub const MAX_DENSE_DIMENSION: usize = 4096;

/// Poisson tail mass discarded by uniformization.
pub const TAIL_MASS: f64 = 1e-12;

/// Uniformization gives up beyond this many expected jumps.
pub const MAX_UNIFORMIZATION_JUMPS: f64 = 1e6;

const CHUNK: usize = 1024;

/// The generator of the spin-flip chain, stored as one rate per (state, vertex).
#[derive(Debug, Clone)]
pub struct FullGenerator {
    n: usize,
    rates: Vec<f64>,
    exit: Vec<f64>,
}

pub fn build_full_generator(g: &Graph, r: &RateTable) -> Result<FullGenerator> {
    let n = g.vertex_count();
    if r.degree() != g.degree() {
        return Err(Error::DegreeMismatch {
            rates: r.degree(),
            graph: g.degree(),
        });
    }
    if n > MAX_EXACT_VERTICES {
        return Err(Error::Resource(format!(
            "{n} vertices exceeds the exact-solver bound of {MAX_EXACT_VERTICES}"
        )));
    }
    let masks: Vec<u32> = (0..n)
        .map(|x| g.neighbors(x).iter().fold(0u32, |m, &y| m | (1 << y)))
        .collect();
    let dim = 1usize << n;
    let mut rates = vec![0.0; dim * n];
    rates.par_chunks_mut(n).enumerate().for_each(|(state, row)| {
        let state = state as u32;
        for (x, slot) in row.iter_mut().enumerate() {
            let k = (state & masks[x]).count_ones() as usize;
            *slot = r.rate(k, (state >> x) & 1 == 1);
        }
    });
    // Row sums in fixed vertex order so the diagonal does not depend on threading.
    let exit = rates.par_chunks(n).map(|row| row.iter().sum()).collect();
    Ok(FullGenerator { n, rates, exit })
}

impl FullGenerator {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.exit.len()
    }

    /// Rate of the transition `state -> state ^ (1 << x)`.
    pub fn rate(&self, state: usize, x: usize) -> f64 {
        self.rates[state * self.n + x]
    }

    /// Total rate of leaving `state`, i.e. minus the diagonal entry.
    pub fn exit_rate(&self, state: usize) -> f64 {
        self.exit[state]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// Entry `(i, j)` of the generator matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return -self.exit[i];
        }
        let diff = i ^ j;
        if diff.is_power_of_two() {
            self.rate(i, diff.trailing_zeros() as usize)
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Result<Mat<f64>> {
        let dim = self.dimension();
        if dim > MAX_DENSE_DIMENSION {
            return Err(Error::Resource(format!(
                "dense generator of dimension {dim} exceeds {MAX_DENSE_DIMENSION}"
            )));
        }
        Ok(Mat::from_fn(dim, dim, |i, j| self.entry(i, j)))
    }

    /// Row vector times generator, `pQ`.
    pub fn left_multiply(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.dimension());
        (0..self.dimension())
            .into_par_iter()
            .map(|j| {
                let inflow: f64 = (0..self.n)
                    .map(|x| {
                        let i = j ^ (1 << x);
                        p[i] * self.rate(i, x)
                    })
                    .sum();
                inflow - p[j] * self.exit[j]
            })
            .collect()
    }

    /// One step of the uniformized kernel `P = I + Q / rate`.
    fn uniformized_step(&self, p: &[f64], rate: f64) -> Vec<f64> {
        (0..self.dimension())
            .into_par_iter()
            .map(|j| {
                let inflow: f64 = (0..self.n)
                    .map(|x| {
                        let i = j ^ (1 << x);
                        p[i] * self.rate(i, x)
                    })
                    .sum();
                p[j] * (1.0 - self.exit[j] / rate) + inflow / rate
            })
            .collect()
    }

    /// Strong connectivity of the positive-rate transition digraph.
    pub fn is_irreducible(&self) -> bool {
        let forward = self.reach_all(|i, x| self.rate(i, x) > 0.0);
        forward && self.reach_all(|j, x| self.rate(j ^ (1 << x), x) > 0.0)
    }

    fn reach_all(&self, edge: impl Fn(usize, usize) -> bool) -> bool {
        let dim = self.dimension();
        let mut seen = vec![false; dim];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for x in 0..self.n {
                let j = i ^ (1 << x);
                if !seen[j] && edge(i, x) {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == dim
    }
}

/// A probability vector over the `2^N` states.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector {
    probabilities: Vec<f64>,
}

impl DistributionVector {
    /// Accepts nonnegative entries summing to 1 within `1e-12`.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if !probabilities.len().is_power_of_two() {
            return Err(Error::InvalidSize(format!(
                "distribution length {} is not a power of two",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("probabilities must be finite and nonnegative".into()));
        }
        let total = fixed_order_sum(&probabilities);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DistributionVector { probabilities })
    }

    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if n > MAX_EXACT_VERTICES {
            return Err(Error::Resource(format!("{n} vertices exceeds {MAX_EXACT_VERTICES}")));
        }
        let dim = 1usize << n;
        if state >= dim {
            return Err(Error::Domain(format!("state {state} out of range for {n} vertices")));
        }
        let mut probabilities = vec![0.0; dim];
        probabilities[state] = 1.0;
        Ok(DistributionVector { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dimension(&self) -> usize {
        self.probabilities.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.probabilities.len().trailing_zeros() as usize
    }

    pub fn total(&self) -> f64 {
        fixed_order_sum(&self.probabilities)
    }

    pub fn expectation(&self, f: &[f64]) -> f64 {
        dot(&self.probabilities, f)
    }

    /// `E|η| / N`.
    pub fn mean_density(&self) -> f64 {
        let n = self.vertex_count();
        self.expectation(&coverage_observable(n)) / n as f64
    }
}

/// Product measure with occupation probability `p` at every site.
pub fn bernoulli_distribution(n: usize, p: f64) -> Result<DistributionVector> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("bernoulli parameter {p} not in [0, 1]")));
    }
    if n > MAX_EXACT_VERTICES {
        return Err(Error::Resource(format!("{n} vertices exceeds {MAX_EXACT_VERTICES}")));
    }
    let weights: Vec<f64> = (0..=n)
        .map(|m| p.powi(m as i32) * (1.0 - p).powi((n - m) as i32))
        .collect();
    let probabilities = (0..1usize << n)
        .map(|i| weights[i.count_ones() as usize])
        .collect();
    Ok(DistributionVector { probabilities })
}

/// `|η|` as a state function.
pub fn coverage_observable(n: usize) -> Vec<f64> {
    (0..1usize << n).map(|i| i.count_ones() as f64).collect()
}

fn fixed_order_sum(v: &[f64]) -> f64 {
    v.par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

/// Poisson(`mean`) probabilities for `0..=k` where `k` is the first index past
/// the mode with remaining tail below [`TAIL_MASS`].
fn poisson_weights(mean: f64) -> Vec<f64> {
    if mean == 0.0 {
        return vec![1.0];
    }
    let ln_mean = mean.ln();
    let mut weights = Vec::new();
    let mut ln_w = -mean;
    let mut cumulative = 0.0;
    let mut k = 0usize;
    loop {
        let w = ln_w.exp();
        weights.push(w);
        cumulative += w;
        if k as f64 >= mean && 1.0 - cumulative < TAIL_MASS {
            break;
        }
        // Beyond this the tail is far below f64 resolution regardless of rounding.
        if k as f64 > mean + 40.0 * mean.sqrt() + 100.0 {
            break;
        }
        k += 1;
        ln_w += ln_mean - (k as f64).ln();
    }
    weights
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Domain("time grid must be finite and nonnegative".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be sorted".into()));
    }
    Ok(())
}

/// Runs the uniformized chain for as many jumps as the largest grid time needs,
/// handing every power `p P^k` to `visit` together with its Poisson weights.
fn uniformize(
    q: &FullGenerator,
    init: &DistributionVector,
    t_grid: &[f64],
    mut visit: impl FnMut(&[f64], &[f64]),
) -> Result<()> {
    check_grid(t_grid)?;
    if init.dimension() != q.dimension() {
        return Err(Error::InvalidSize(format!(
            "distribution of dimension {} for a generator of dimension {}",
            init.dimension(),
            q.dimension()
        )));
    }
    let rate = q.max_exit_rate();
    let t_max = t_grid.last().copied().unwrap_or(0.0);
    if !(rate * t_max).is_finite() || rate * t_max > MAX_UNIFORMIZATION_JUMPS {
        return Err(Error::Resource(format!(
            "uniformization needs about {} jumps",
            rate * t_max
        )));
    }
    let weights: Vec<Vec<f64>> = t_grid.iter().map(|&t| poisson_weights(rate * t)).collect();
    let steps = weights.iter().map(Vec::len).max().unwrap_or(1);
    let mut p = init.probabilities.clone();
    let mut column = vec![0.0; t_grid.len()];
    for k in 0..steps {
        for (c, w) in column.iter_mut().zip(&weights) {
            *c = w.get(k).copied().unwrap_or(0.0);
        }
        visit(&p, &column);
        if k + 1 < steps {
            p = q.uniformized_step(&p, rate);
        }
    }
    Ok(())
}

/// `E f(φ_t)` at every grid time.
pub fn transient_expectation(
    q: &FullGenerator,
    init: &DistributionVector,
    f: &[f64],
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if f.len() != q.dimension() {
        return Err(Error::InvalidSize(format!(
            "observable of length {} for a generator of dimension {}",
            f.len(),
            q.dimension()
        )));
    }
    let mut out = vec![0.0; t_grid.len()];
    uniformize(q, init, t_grid, |p, weights| {
        let value = dot(p, f);
        for (o, w) in out.iter_mut().zip(weights) {
            *o += w * value;
        }
    })?;
    Ok(out)
}

/// The law of `φ_t` at every grid time.
pub fn transient_distributions(
    q: &FullGenerator,
    init: &DistributionVector,
    t_grid: &[f64],
) -> Result<Vec<DistributionVector>> {
    let mut out = vec![vec![0.0; q.dimension()]; t_grid.len()];
    uniformize(q, init, t_grid, |p, weights| {
        for (o, &w) in out.iter_mut().zip(weights) {
            if w > 0.0 {
                o.par_iter_mut().zip(p).for_each(|(a, b)| *a += w * b);
            }
        }
    })?;
    Ok(out
        .into_iter()
        .map(|probabilities| DistributionVector { probabilities })
        .collect())
}

/// `N⁻¹ E|φ_t|` at every grid time.
pub fn mean_density(q: &FullGenerator, init: &DistributionVector, t_grid: &[f64]) -> Result<Vec<f64>> {
    let n = q.vertex_count() as f64;
    let m = transient_expectation(q, init, &coverage_observable(q.vertex_count()), t_grid)?;
    Ok(m.into_iter().map(|v| v / n).collect())
}

fn require_ergodic(q: &FullGenerator) -> Result<()> {
    if q.is_irreducible() {
        Ok(())
    } else {
        Err(Error::NonErgodic(
            "positive-rate transitions do not connect every pair of states".into(),
        ))
    }
}

/// Minus the largest real part among the eigenvalues of `Q` other than the
/// stationary zero.
pub fn spectral_gap_exact(q: &FullGenerator) -> Result<f64> {
    let dense = q.to_dense()?;
    require_ergodic(q)?;
    let mut re = real_parts_of_eigenvalues(dense.as_ref())?;
    re.sort_by(|a, b| b.total_cmp(a));
    Ok(-re[1])
}

/// Real parts of a dense spectrum, via Hessenberg reduction and the
/// unblocked double-shift QR. faer's default blocked path, with aggressive
/// early deflation, looped without end on some generators, so the blocking
/// threshold is raised above the dimension.
fn real_parts_of_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut params: EvdParams = Auto::<f64>::auto();
    params.schur = SchurParams {
        blocking_threshold: n + 1,
        ..Auto::<f64>::auto()
    };
    let mut s_re = Diag::<f64>::zeros(n);
    let mut s_im = Diag::<f64>::zeros(n);
    let scratch = evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::No,
        Par::Seq,
        params.into(),
    );
    evd_real(
        a,
        s_re.as_mut(),
        s_im.as_mut(),
        None,
        None,
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        params.into(),
    )
    .map_err(|e| Error::Resource(format!("eigensolver failed: {e:?}")))?;
    Ok(s_re.column_vector().iter().copied().collect())
}

/// The invariant law, by Grassmann–Taksar–Heyman elimination.
pub fn stationary_distribution(q: &FullGenerator) -> Result<DistributionVector> {
    let dim = q.dimension();
    if dim > MAX_DENSE_DIMENSION {
        return Err(Error::Resource(format!(
            "stationary solve of dimension {dim} exceeds {MAX_DENSE_DIMENSION}"
        )));
    }
    require_ergodic(q)?;
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        for x in 0..q.n {
            a[i * dim + (i ^ (1 << x))] = q.rate(i, x);
        }
    }
    for m in (1..dim).rev() {
        let (upper, lower) = a.split_at_mut(m * dim);
        let pivot_row = &lower[..dim];
        let s: f64 = pivot_row[..m].iter().sum();
        upper.par_chunks_mut(dim).for_each(|row| {
            let factor = row[m] / s;
            row[m] = factor;
            if factor != 0.0 {
                for (r, p) in row[..m].iter_mut().zip(&pivot_row[..m]) {
                    *r += factor * p;
                }
            }
        });
    }
    let mut pi = vec![0.0; dim];
    pi[0] = 1.0;
    for j in 1..dim {
        pi[j] = (0..j).map(|i| pi[i] * a[i * dim + j]).sum();
    }
    let total = fixed_order_sum(&pi);
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(DistributionVector { probabilities: pi })
}

/// `‖νQ‖∞`.
pub fn stationary_residual(q: &FullGenerator, nu: &DistributionVector) -> f64 {
    q.left_multiply(nu.probabilities())
        .into_iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}
