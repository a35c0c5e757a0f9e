//! Flip-rate tables and the four model families with a second-order mean
//! coverage equation.
//!
//! A site with spin 0 and `k` occupied neighbors becomes occupied at rate
//! `λ_k`; an occupied site with `k` occupied neighbors empties at rate `μ_k`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateTableRepr", into = "RateTableRepr")]
pub struct RateTable {
    s: usize,
    birth: Vec<f64>,
    death: Vec<f64>,
}

/// JSON form `{ "s": int, "lambda": [..], "mu": [..] }`.
#[derive(Serialize, Deserialize)]
struct RateTableRepr {
    s: usize,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl TryFrom<RateTableRepr> for RateTable {
    type Error = Error;

    fn try_from(r: RateTableRepr) -> Result<Self> {
        if r.lambda.len() != r.s + 1 {
            return Err(Error::Domain(format!(
                "lambda has {} entries, expected s+1 = {}",
                r.lambda.len(),
                r.s + 1
            )));
        }
        RateTable::new(r.lambda, r.mu)
    }
}

impl From<RateTable> for RateTableRepr {
    fn from(t: RateTable) -> Self {
        RateTableRepr {
            s: t.s,
            lambda: t.birth,
            mu: t.death,
        }
    }
}

fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and >= 0, got {value}")))
    }
}

fn check_threshold(s: usize, q: usize) -> Result<()> {
    if s == 0 || q == 0 || q > s {
        return Err(Error::Domain(format!("threshold q={q} outside 1..={s}")));
    }
    Ok(())
}

impl RateTable {
    pub fn new(birth: Vec<f64>, death: Vec<f64>) -> Result<Self> {
        if birth.is_empty() || birth.len() != death.len() {
            return Err(Error::Domain(format!(
                "rate arrays must both have s+1 entries (got {} and {})",
                birth.len(),
                death.len()
            )));
        }
        for (k, (&l, &m)) in birth.iter().zip(&death).enumerate() {
            check_nonnegative(&format!("lambda_{k}"), l)?;
            check_nonnegative(&format!("mu_{k}"), m)?;
        }
        Ok(RateTable {
            s: birth.len() - 1,
            birth,
            death,
        })
    }

    /// `λ_k = h1 + k d`, `μ_k = h2 + (s - k) d`.
    pub fn noisy_voter(s: usize, d: f64, h1: f64, h2: f64) -> Result<Self> {
        check_nonnegative("d", d)?;
        check_nonnegative("h1", h1)?;
        check_nonnegative("h2", h2)?;
        let birth = (0..=s).map(|k| h1 + k as f64 * d).collect();
        let death = (0..=s).map(|k| h2 + (s - k) as f64 * d).collect();
        Self::new(birth, death)
    }

    /// Threshold-`q` voter rates with noise `h`: an empty site flips at `h + a`
    /// once at least `q` neighbors are occupied, an occupied site at `h + a`
    /// once at least `q` neighbors are empty, and both at `h` otherwise.
    pub fn threshold_noisy(s: usize, q: usize, h: f64, a: f64) -> Result<Self> {
        Self::generalized_threshold(s, q, h, a, a)
    }

    /// As [`RateTable::threshold_noisy`] but with jump `a` on births and `b` on deaths.
    pub fn generalized_threshold(s: usize, q: usize, h: f64, a: f64, b: f64) -> Result<Self> {
        check_threshold(s, q)?;
        check_nonnegative("h", h)?;
        check_nonnegative("h+a", h + a)?;
        check_nonnegative("h+b", h + b)?;
        let birth = (0..=s).map(|k| if k < q { h } else { h + a }).collect();
        let death = (0..=s).map(|k| if k <= s - q { h + b } else { h }).collect();
        Self::new(birth, death)
    }

    /// Rebuilds the table described by classified model parameters.
    pub fn from_params(s: usize, params: &ModelParams) -> Result<Self> {
        match *params {
            ModelParams::NoisyVoter { d, h1, h2 } => Self::noisy_voter(s, d, h1, h2),
            ModelParams::Degenerate { a, b } => Self::generalized_threshold(s, s, 0.0, a, b),
            ModelParams::ThresholdNoisy { h, a } => Self::threshold_noisy(s, s, h, a),
            ModelParams::GeneralizedThreshold { h, a, b } => {
                Self::generalized_threshold(s, s, h, a, b)
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.s
    }

    /// `λ_0..λ_s`.
    pub fn birth(&self) -> &[f64] {
        &self.birth
    }

    /// `μ_0..μ_s`.
    pub fn death(&self) -> &[f64] {
        &self.death
    }

    /// `c(x, η)` for a site with the given spin and `k` occupied neighbors.
    pub fn flip_rate(&self, k: usize, spin: u8) -> Result<f64> {
        if k > self.s {
            return Err(Error::Domain(format!("k={k} exceeds s={}", self.s)));
        }
        Ok(self.rate(k, spin != 0))
    }

    /// Unchecked variant of [`RateTable::flip_rate`] for hot loops.
    #[inline]
    pub fn rate(&self, k: usize, occupied: bool) -> f64 {
        if occupied {
            self.death[k]
        } else {
            self.birth[k]
        }
    }

    pub fn max_rate(&self) -> f64 {
        self.birth
            .iter()
            .chain(&self.death)
            .fold(0.0_f64, |m, &r| m.max(r))
    }

    pub fn is_frozen(&self) -> bool {
        self.max_rate() == 0.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.birth.iter().map(|r| r * factor).collect(),
            self.death.iter().map(|r| r * factor).collect(),
        )
    }
}

impl fmt::Display for RateTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={} lambda={:?} mu={:?}", self.s, self.birth, self.death)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelLabel {
    C1,
    C2,
    C3,
    C4,
}

impl fmt::Display for ModelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Parameters extracted for one model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    /// C1: `λ_k = h1 + k d`, `μ_k = h2 + (s-k) d`; `h2 = μ_s`.
    NoisyVoter { d: f64, h1: f64, h2: f64 },
    /// C2: threshold-`s` rates with `h = 0` and `ab = 0` or `a = b`.
    Degenerate { a: f64, b: f64 },
    /// C3: symmetric threshold-`s` rates, `s ∈ {2, 3}`.
    ThresholdNoisy { h: f64, a: f64 },
    /// C4: threshold-2 rates on `s = 2` with `h(a+b) = ab`.
    GeneralizedThreshold { h: f64, a: f64, b: f64 },
}

impl ModelParams {
    pub fn label(&self) -> ModelLabel {
        match self {
            ModelParams::NoisyVoter { .. } => ModelLabel::C1,
            ModelParams::Degenerate { .. } => ModelLabel::C2,
            ModelParams::ThresholdNoisy { .. } => ModelLabel::C3,
            ModelParams::GeneralizedThreshold { .. } => ModelLabel::C4,
        }
    }
}

/// Result of [`classify`]: every matching family plus per-condition residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelClass {
    pub matches: Vec<ModelParams>,
    /// Residual for C1..C4 in that order, in the same units as the rates.
    /// `inf` where the condition does not apply to the degree.
    pub residuals: [f64; 4],
    /// Absolute tolerance the residuals were compared against.
    pub tolerance: f64,
}

impl ModelClass {
    pub fn labels(&self) -> Vec<ModelLabel> {
        self.matches.iter().map(ModelParams::label).collect()
    }

    pub fn contains(&self, label: ModelLabel) -> bool {
        self.get(label).is_some()
    }

    pub fn get(&self, label: ModelLabel) -> Option<&ModelParams> {
        self.matches.iter().find(|p| p.label() == label)
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// The family used for closed-form evaluation: C1 > C3 > C4 > C2.
    pub fn primary(&self) -> Option<&ModelParams> {
        [ModelLabel::C1, ModelLabel::C3, ModelLabel::C4, ModelLabel::C2]
            .into_iter()
            .find_map(|l| self.get(l))
    }
}

struct ThresholdShape {
    h: f64,
    a: f64,
    b: f64,
    residual: f64,
}

/// Fits the threshold-`s` shape: `λ_0..λ_{s-1} = μ_1..μ_s = h`.
fn threshold_shape(r: &RateTable) -> ThresholdShape {
    let s = r.s;
    let flat: Vec<f64> = r.birth[..s].iter().chain(&r.death[1..]).copied().collect();
    let h = flat.iter().sum::<f64>() / flat.len() as f64;
    let residual = flat.iter().map(|v| (v - h).abs()).fold(0.0, f64::max);
    ThresholdShape {
        h,
        a: r.birth[s] - h,
        b: r.death[0] - h,
        residual,
    }
}

/// Tests `r` against C1..C4. `tol` is relative to the largest rate.
pub fn classify(r: &RateTable, tol: f64) -> ModelClass {
    let s = r.s;
    let scale = if r.is_frozen() { 1.0 } else { r.max_rate() };
    let abs_tol = tol * scale;
    let mut matches = Vec::new();
    let mut residuals = [f64::INFINITY; 4];

    if s >= 1 {
        let increments: Vec<f64> = (1..=s)
            .map(|k| r.birth[k] - r.birth[k - 1])
            .chain((1..=s).map(|k| r.death[k - 1] - r.death[k]))
            .collect();
        let d = increments.iter().sum::<f64>() / increments.len() as f64;
        let spread = increments.iter().map(|x| (x - d).abs()).fold(0.0, f64::max);
        residuals[0] = spread.max(-d);
        if residuals[0] <= abs_tol {
            // rounding can leave d slightly negative; the constructor rejects that
            let d = d.max(0.0);
            matches.push(ModelParams::NoisyVoter {
                d,
                h1: r.birth[0],
                h2: r.death[0] - s as f64 * d,
            });
        }

        let shape = threshold_shape(r);
        let (h, a, b) = (shape.h, shape.a, shape.b);

        let c2_split = a.abs().min(b.abs()).min((a - b).abs());
        residuals[1] = shape.residual.max(h.abs()).max(c2_split);
        if residuals[1] <= abs_tol {
            matches.push(ModelParams::Degenerate { a, b });
        }

        if s == 2 || s == 3 {
            residuals[2] = shape.residual.max((a - b).abs());
            if residuals[2] <= abs_tol {
                matches.push(ModelParams::ThresholdNoisy { h, a: 0.5 * (a + b) });
            }
        }

        if s == 2 {
            residuals[3] = shape.residual.max((h * (a + b) - a * b).abs() / scale);
            if residuals[3] <= abs_tol {
                matches.push(ModelParams::GeneralizedThreshold { h, a, b });
            }
        }
    }

    ModelClass {
        matches,
        residuals,
        tolerance: abs_tol,
    }
}
