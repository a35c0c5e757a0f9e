//! Exact per-configuration counting statistics and the identities between them.
//!
//! Everything here is integer arithmetic. `n_k^(i)` is the number of sites with
//! spin `i` that have exactly `k` occupied neighbors.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::graph::Graph;

pub fn occupied_neighbors(g: &Graph, c: &Configuration, x: usize) -> usize {
    g.neighbors(x).iter().filter(|&&y| c.get(y)).count()
}

/// Counts `n_k^(0)` and `n_k^(1)` for `k = 0..=s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsTable {
    pub n0: Vec<i64>,
    pub n1: Vec<i64>,
}

impl StatsTable {
    pub fn degree(&self) -> usize {
        self.n0.len() - 1
    }

    /// `n_k^(spin)`.
    pub fn get(&self, spin: u8, k: usize) -> i64 {
        if spin == 0 {
            self.n0[k]
        } else {
            self.n1[k]
        }
    }

    fn diff(&self, other: &StatsTable) -> StatsTable {
        StatsTable {
            n0: self.n0.iter().zip(&other.n0).map(|(a, b)| a - b).collect(),
            n1: self.n1.iter().zip(&other.n1).map(|(a, b)| a - b).collect(),
        }
    }
}

pub fn stats(g: &Graph, c: &Configuration) -> StatsTable {
    let s = g.degree();
    let mut table = StatsTable {
        n0: vec![0; s + 1],
        n1: vec![0; s + 1],
    };
    for x in 0..g.vertex_count() {
        let k = occupied_neighbors(g, c, x);
        if c.get(x) {
            table.n1[k] += 1;
        } else {
            table.n0[k] += 1;
        }
    }
    table
}

/// Occupied-neighbor counts `k(x, η)` for every site, updated in `O(s)` per flip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborCounts {
    counts: Vec<usize>,
}

impl NeighborCounts {
    pub fn new(g: &Graph, c: &Configuration) -> Self {
        NeighborCounts {
            counts: (0..g.vertex_count())
                .map(|x| occupied_neighbors(g, c, x))
                .collect(),
        }
    }

    pub fn get(&self, x: usize) -> usize {
        self.counts[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.counts
    }

    /// Records that site `x` now holds `new_spin`.
    pub fn apply_flip(&mut self, g: &Graph, x: usize, new_spin: bool) {
        for &y in g.neighbors(x) {
            if new_spin {
                self.counts[y] += 1;
            } else {
                self.counts[y] -= 1;
            }
        }
    }
}

/// Residuals of every identity checked by [`identity_report`]; all must be zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Residuals {
    /// The two sums defining `P` against each other.
    pub p_symmetry: i64,
    /// `Q0 - (n_{s-1}^(0) - n_s^(0))`.
    pub q0: i64,
    /// `Q1 - (n_s^(1) - s n_s^(0))`.
    pub q1: i64,
    /// `Σ_{x ∈ n_s^(0)} Δ_x n_s^(0) + n_s^(0)`.
    pub absorb_ns0: i64,
    /// `Σ_{x ∈ n_0^(1)} Δ_x n_0^(1) + n_0^(1)`.
    pub absorb_n01: i64,
    /// `R0(η) - Q1(η̄)`.
    pub r0_duality: i64,
    /// `R1(η) - Q0(η̄)`.
    pub r1_duality: i64,
    /// `Σ_k k (n_k^(0) + n_k^(1)) - s|η|`.
    pub degree_sum: i64,
    /// `2(n_2^(0) - n_0^(1)) - (n_1^(1) - n_1^(0))`; only for `s = 2`.
    pub two_regular: Option<i64>,
}

impl Residuals {
    pub fn all_zero(&self) -> bool {
        self.named().iter().all(|(_, r)| *r == 0)
    }

    pub fn named(&self) -> Vec<(&'static str, i64)> {
        let mut out = vec![
            ("p_symmetry", self.p_symmetry),
            ("q0", self.q0),
            ("q1", self.q1),
            ("absorb_ns0", self.absorb_ns0),
            ("absorb_n01", self.absorb_n01),
            ("r0_duality", self.r0_duality),
            ("r1_duality", self.r1_duality),
            ("degree_sum", self.degree_sum),
        ];
        if let Some(r) = self.two_regular {
            out.push(("two_regular", r));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub p: i64,
    pub q0: i64,
    pub q1: i64,
    pub r0: i64,
    pub r1: i64,
    pub residuals: Residuals,
}

/// `Δ_x n_k^(i)` for every site `x`, by full recount of `η_x`.
fn flip_deltas(g: &Graph, c: &Configuration) -> (StatsTable, Vec<StatsTable>) {
    let base = stats(g, c);
    let deltas = (0..g.vertex_count())
        .map(|x| stats(g, &c.flipped(x)).diff(&base))
        .collect();
    (base, deltas)
}

/// The defining sums `Q0, Q1, R0, R1` and the two sides of `P`, plus the
/// self-absorption sums, evaluated literally over single-site flips.
struct FlipSums {
    q: [i64; 2],
    r: [i64; 2],
    p_left: i64,
    p_right: i64,
    absorb_ns0: i64,
    absorb_n01: i64,
}

fn flip_sums(g: &Graph, c: &Configuration) -> (StatsTable, FlipSums) {
    let s = g.degree();
    let (base, deltas) = flip_deltas(g, c);
    let mut sums = FlipSums {
        q: [0; 2],
        r: [0; 2],
        p_left: 0,
        p_right: 0,
        absorb_ns0: 0,
        absorb_n01: 0,
    };
    for (x, delta) in deltas.iter().enumerate() {
        let spin = c.spin(x) as usize;
        let k = occupied_neighbors(g, c, x);
        let d_ns0 = delta.n0[s];
        let d_n01 = delta.n1[0];
        sums.q[spin] += d_ns0;
        sums.r[spin] += d_n01;
        if spin == 0 && k == s {
            sums.p_left += d_n01;
            sums.absorb_ns0 += d_ns0;
        }
        if spin == 1 && k == 0 {
            sums.p_right += d_ns0;
            sums.absorb_n01 += d_n01;
        }
    }
    (base, sums)
}

pub fn identity_report(g: &Graph, c: &Configuration) -> IdentityReport {
    let s = g.degree();
    let (t, sums) = flip_sums(g, c);
    let (_, dual) = flip_sums(g, &c.complement());
    let coverage = c.coverage() as i64;

    let degree_total: i64 = (0..=s).map(|k| k as i64 * (t.n0[k] + t.n1[k])).sum();
    let residuals = Residuals {
        p_symmetry: sums.p_left - sums.p_right,
        q0: sums.q[0] - (t.n0[s - 1] - t.n0[s]),
        q1: sums.q[1] - (t.n1[s] - s as i64 * t.n0[s]),
        absorb_ns0: sums.absorb_ns0 + t.n0[s],
        absorb_n01: sums.absorb_n01 + t.n1[0],
        r0_duality: sums.r[0] - dual.q[1],
        r1_duality: sums.r[1] - dual.q[0],
        degree_sum: degree_total - s as i64 * coverage,
        two_regular: (s == 2).then(|| 2 * (t.n0[2] - t.n1[0]) - (t.n1[1] - t.n0[1])),
    };
    IdentityReport {
        p: sums.p_left,
        q0: sums.q[0],
        q1: sums.q[1],
        r0: sums.r[0],
        r1: sums.r[1],
        residuals,
    }
}

/// The coefficient `F1` of the second-order counting identity.
///
/// `-3` for `s = 2` and `-2` for `s = 3`. For larger `s` this returns the value
/// forced by the single-occupied-site configuration, `1 - s`; the identity
/// then fails on adjacent occupied pairs.
pub fn lemma_f1(s: usize) -> Result<i64> {
    match s {
        0 | 1 => Err(Error::Precondition(format!(
            "counting identity needs s >= 2, got {s}"
        ))),
        2 => Ok(-3),
        _ => Ok(1 - s as i64),
    }
}

/// `[n_s^(1) + n_{s-1}^(0) - n_1^(1) - n_0^(0)] - [(n_s^(0) - n_0^(1)) F1 + 2|η| - N]`.
pub fn lemma_residual_with(g: &Graph, c: &Configuration, f1: i64) -> i64 {
    let s = g.degree();
    let t = stats(g, c);
    let n = g.vertex_count() as i64;
    let lhs = t.n1[s] + t.n0[s - 1] - t.n1[1] - t.n0[0];
    let rhs = (t.n0[s] - t.n1[0]) * f1 + 2 * c.coverage() as i64 - n;
    lhs - rhs
}

/// Residual of the counting identity with the calibrated `F1`; identically
/// zero on triangle-free graphs with `s ∈ {2, 3}`.
pub fn lemma_check(g: &Graph, c: &Configuration) -> Result<i64> {
    if !g.is_triangle_free() {
        return Err(Error::Precondition("graph contains a triangle".into()));
    }
    let f1 = lemma_f1(g.degree())?;
    Ok(lemma_residual_with(g, c, f1))
}
