//! The Markov generator `Ωf(η) = Σ_x c(x,η) (f(η_x) - f(η))`, its iterates on
//! the coverage observable, and least-squares fitting of the second-order
//! closure `g2 = A1 g1 + A0 |η| + B`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rates::RateTable;
use crate::stats::{occupied_neighbors, stats};

/// Largest order accepted by [`g_iterate`]; cost grows like `N^order`.
pub const MAX_ORDER: usize = 4;

/// Largest graph for which [`ConfigSample::auto`] enumerates every configuration.
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Hard bound for explicitly requested exhaustive enumeration.
pub const ENUMERATION_BOUND: usize = 20;

pub const DEFAULT_SAMPLE_SIZE: usize = 4096;

fn check_degree(g: &Graph, r: &RateTable) -> Result<()> {
    if g.degree() != r.degree() {
        return Err(Error::DegreeMismatch {
            rates: r.degree(),
            graph: g.degree(),
        });
    }
    Ok(())
}

/// `c(x, η)`.
#[inline]
pub fn site_rate(g: &Graph, r: &RateTable, c: &Configuration, x: usize) -> f64 {
    r.rate(occupied_neighbors(g, c, x), c.get(x))
}

/// `g1` summed site by site: `Σ_x c(x,η)(1 - 2η(x))`.
pub fn g1_sitewise(g: &Graph, r: &RateTable, c: &Configuration) -> f64 {
    (0..g.vertex_count())
        .map(|x| {
            let rate = site_rate(g, r, c, x);
            if c.get(x) {
                -rate
            } else {
                rate
            }
        })
        .sum()
}

/// `g1 = Σ_k (λ_k n_k^(0) - μ_k n_k^(1))`.
pub fn g1(g: &Graph, r: &RateTable, c: &Configuration) -> Result<f64> {
    check_degree(g, r)?;
    Ok(g1_from_counts(r, c, g))
}

fn g1_from_counts(r: &RateTable, c: &Configuration, g: &Graph) -> f64 {
    let t = stats(g, c);
    (0..=r.degree())
        .map(|k| r.birth()[k] * t.n0[k] as f64 - r.death()[k] * t.n1[k] as f64)
        .sum()
}

/// `Ωf(η)`, summed over the `N` single-flip neighbors of `η`.
pub fn apply_generator<F>(g: &Graph, r: &RateTable, f: F, c: &Configuration) -> f64
where
    F: Fn(&Configuration) -> f64,
{
    let base = f(c);
    let mut flipped = c.clone();
    let mut total = 0.0;
    for x in 0..g.vertex_count() {
        let rate = site_rate(g, r, c, x);
        if rate == 0.0 {
            continue;
        }
        flipped.flip(x);
        total += rate * (f(&flipped) - base);
        flipped.flip(x);
    }
    total
}

/// `Δ_x Δ_y f(η)`.
pub fn second_difference<F>(f: F, c: &Configuration, x: usize, y: usize) -> f64
where
    F: Fn(&Configuration) -> f64,
{
    let cx = c.flipped(x);
    let cy = c.flipped(y);
    let cxy = cx.flipped(y);
    f(&cxy) - f(&cx) - f(&cy) + f(c)
}

/// `g_order(η) = Ω^order |η|` by literal nested application of the generator.
pub fn g_iterate(g: &Graph, r: &RateTable, c: &Configuration, order: usize) -> Result<f64> {
    check_degree(g, r)?;
    if order == 0 || order > MAX_ORDER {
        return Err(Error::Resource(format!(
            "generator iterate order {order} outside 1..={MAX_ORDER}"
        )));
    }
    Ok(nested(g, r, c, order))
}

fn nested(g: &Graph, r: &RateTable, c: &Configuration, order: usize) -> f64 {
    if order == 1 {
        return g1_from_counts(r, c, g);
    }
    apply_generator(g, r, |eta| nested(g, r, eta, order - 1), c)
}

/// Which configurations a closure fit is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigSample {
    /// All `2^N` configurations.
    Exhaustive,
    /// `count` independent uniform configurations from a seeded ChaCha8 stream.
    Random { count: usize, seed: u64 },
    Explicit(Vec<Configuration>),
}

impl ConfigSample {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] vertices, otherwise
    /// [`DEFAULT_SAMPLE_SIZE`] random configurations.
    pub fn auto(n: usize, seed: u64) -> Self {
        if n <= EXHAUSTIVE_LIMIT {
            ConfigSample::Exhaustive
        } else {
            ConfigSample::Random {
                count: DEFAULT_SAMPLE_SIZE,
                seed,
            }
        }
    }

    pub fn configurations(&self, n: usize) -> Result<Vec<Configuration>> {
        match self {
            ConfigSample::Exhaustive => {
                if n > ENUMERATION_BOUND {
                    return Err(Error::Resource(format!(
                        "cannot enumerate 2^{n} configurations"
                    )));
                }
                Ok((0..1u64 << n)
                    .map(|i| Configuration::from_index(n, i))
                    .collect())
            }
            ConfigSample::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count)
                    .map(|_| Configuration::random(n, 0.5, &mut rng))
                    .collect())
            }
            ConfigSample::Explicit(list) => {
                if let Some(bad) = list.iter().find(|c| c.len() != n) {
                    return Err(Error::Precondition(format!(
                        "configuration of length {} on a graph with {n} vertices",
                        bad.len()
                    )));
                }
                Ok(list.clone())
            }
        }
    }
}

/// Fitted `g2 ≈ A1 g1 + A0 |η| + B`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClosureCoefficients {
    pub a1: f64,
    pub a0: f64,
    pub b: f64,
    pub residual_max: f64,
    pub residual_rms: f64,
    /// `max |g2|` over the sample.
    pub g2_scale: f64,
    pub sample_size: usize,
    /// 3 for a full fit; 2 when `g1` is affine in `|η|` (first-order closure,
    /// `A0 = 0`) or identically zero (`A1 = 0`).
    pub design_rank: usize,
}

impl ClosureCoefficients {
    /// Default acceptance policy: `residual_max <= 1e-6 * max(1, max|g2|)`.
    pub fn closure_holds(&self) -> bool {
        self.residual_max <= 1e-6 * self.g2_scale.max(1.0)
    }
}

/// Solves the least-squares problem on the given columns; `None` if the
/// column-normalized design is rank deficient.
fn least_squares(columns: &[&[f64]], target: &[f64]) -> Option<Vec<f64>> {
    let m = target.len();
    let norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.contains(&0.0) {
        return None;
    }
    let design = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i] / norms[j]);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.iter().any(|&sv| sv <= 1e-10 * smax) {
        return None;
    }
    let rhs = DVector::from_column_slice(target);
    let scaled = svd.solve(&rhs, 0.0).ok()?;
    Some(scaled.iter().zip(&norms).map(|(x, n)| x / n).collect())
}

pub fn fit_closure(g: &Graph, r: &RateTable, sample: &ConfigSample) -> Result<ClosureCoefficients> {
    check_degree(g, r)?;
    let configs = sample.configurations(g.vertex_count())?;
    if configs.len() < 4 {
        return Err(Error::FitDegenerate(format!(
            "need at least 4 configurations, got {}",
            configs.len()
        )));
    }
    let rows: Vec<(f64, f64, f64)> = configs
        .par_iter()
        .map(|c| {
            (
                g1_from_counts(r, c, g),
                c.coverage() as f64,
                nested(g, r, c, 2),
            )
        })
        .collect();
    let g1s: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let covs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let g2s: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ones = vec![1.0; rows.len()];

    let (a1, a0, b, design_rank) =
        if let Some(x) = least_squares(&[&g1s, &covs, &ones], &g2s) {
            (x[0], x[1], x[2], 3)
        } else if let Some(x) = least_squares(&[&g1s, &ones], &g2s) {
            (x[0], 0.0, x[1], 2)
        } else if let Some(x) = least_squares(&[&covs, &ones], &g2s) {
            (0.0, x[0], x[1], 2)
        } else {
            return Err(Error::FitDegenerate(
                "sample does not span two independent design columns".into(),
            ));
        };

    let residuals: Vec<f64> = rows
        .iter()
        .map(|&(g1v, cov, g2v)| g2v - (a1 * g1v + a0 * cov + b))
        .collect();
    let residual_max = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let residual_rms =
        (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let g2_scale = g2s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(ClosureCoefficients {
        a1,
        a0,
        b,
        residual_max,
        residual_rms,
        g2_scale,
        sample_size: rows.len(),
        design_rank,
    })
}
