//! Closed-form mean coverage functions for the four solvable families, their
//! decay rates and stationary densities, and the `ε - M` ergodicity margin.
//!
//! Each family satisfies `g2 = A1 g1 + A0 |η| + B` for every configuration, so
//! the mean coverage `M(t)` solves `M'' = A1 M' + A0 M + B` with `M(0) = |η|`
//! and `M'(0) = g1(η)`. The solutions are (at most) two exponentials on top of
//! a constant.

use serde::Serialize;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::generator;
use crate::graph::Graph;
use crate::rates::{ModelParams, RateTable};
use crate::stats::stats;

/// The statistics of the initial configuration that the closed forms need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialStats {
    pub coverage: f64,
    pub g1: f64,
    /// `n_s^(0)`: empty sites with every neighbor occupied.
    pub ns0: f64,
    /// `n_0^(1)`: occupied sites with no occupied neighbor.
    pub n01: f64,
}

impl InitialStats {
    pub fn from_configuration(g: &Graph, r: &RateTable, c: &Configuration) -> Result<Self> {
        let t = stats(g, c);
        Ok(InitialStats {
            coverage: c.coverage() as f64,
            g1: generator::g1(g, r, c)?,
            ns0: t.n0[g.degree()] as f64,
            n01: t.n1[0] as f64,
        })
    }

    /// Expected statistics under independent occupation with probability `p`
    /// on an `s`-regular graph with `n` vertices. The closed forms are linear
    /// in these, so they give the mean coverage started from that product law.
    pub fn bernoulli(r: &RateTable, n: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("bernoulli parameter {p} not in [0, 1]")));
        }
        let s = r.degree();
        let nf = n as f64;
        let q = 1.0 - p;
        // P(k of s neighbors occupied)
        let mut binom = 1.0;
        let mut g1 = 0.0;
        for k in 0..=s {
            if k > 0 {
                binom = binom * (s + 1 - k) as f64 / k as f64;
            }
            let weight = binom * p.powi(k as i32) * q.powi((s - k) as i32);
            g1 += nf * weight * (q * r.birth()[k] - p * r.death()[k]);
        }
        Ok(InitialStats {
            coverage: nf * p,
            g1,
            ns0: nf * q * p.powi(s as i32),
            n01: nf * p * q.powi(s as i32),
        })
    }
}

/// Which single-exponential form a C2 model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateForm {
    /// `b = 0`: `M = -n_s^(0) e^{-at} + |η| + n_s^(0)`.
    Birth,
    /// `a = 0`: `M = n_0^(1) e^{-bt} + |η| - n_0^(1)`.
    Death,
    /// `a = b > 0`: both amplitudes decay together at rate `a`.
    Symmetric,
    /// `a = b = 0`: nothing ever flips.
    Frozen,
}

/// `M(t) = c1 e^{-α1 t} + c2 e^{-α2 t} + asymptote`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormMCF {
    pub model: ModelParams,
    pub n: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub c1: f64,
    pub c2: f64,
    pub asymptote: f64,
    pub variant: Option<DegenerateForm>,
}

impl ClosedFormMCF {
    pub fn evaluate(&self, t: f64) -> f64 {
        self.c1 * (-self.alpha1 * t).exp() + self.c2 * (-self.alpha2 * t).exp() + self.asymptote
    }

    pub fn derivative(&self, t: f64) -> f64 {
        -self.alpha1 * self.c1 * (-self.alpha1 * t).exp()
            - self.alpha2 * self.c2 * (-self.alpha2 * t).exp()
    }

    /// `lim_{t→∞} M(t)`, including a non-decaying mode when `α2 = 0`.
    pub fn limit(&self) -> f64 {
        let mut limit = self.asymptote;
        if self.alpha1 == 0.0 {
            limit += self.c1;
        }
        if self.alpha2 == 0.0 {
            limit += self.c2;
        }
        limit
    }
}

/// Decay rates of the mean coverage; `alpha2` is absent for the
/// single-exponential families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRates {
    pub alpha1: f64,
    pub alpha2: Option<f64>,
}

impl DecayRates {
    pub fn max(&self) -> f64 {
        self.alpha2.map_or(self.alpha1, |a2| a2.max(self.alpha1))
    }

    pub fn min(&self) -> f64 {
        self.alpha2.map_or(self.alpha1, |a2| a2.min(self.alpha1))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must be finite and >= 0")))
    }
}

const RELATION_TOL: f64 = 1e-9;

fn check_params(params: &ModelParams) -> Result<()> {
    match *params {
        ModelParams::NoisyVoter { d, h1, h2 } => {
            nonneg("d", d)?;
            nonneg("h1", h1)?;
            nonneg("h2", h2)
        }
        ModelParams::Degenerate { a, b } => {
            nonneg("a", a)?;
            nonneg("b", b)?;
            let scale = a.max(b).max(1.0);
            if a.min(b) > RELATION_TOL * scale && (a - b).abs() > RELATION_TOL * scale {
                return Err(Error::Domain(format!(
                    "degenerate threshold model needs ab = 0 or a = b (a={a}, b={b})"
                )));
            }
            Ok(())
        }
        ModelParams::ThresholdNoisy { h, a } => {
            nonneg("h", h)?;
            nonneg("h+a", h + a)
        }
        ModelParams::GeneralizedThreshold { h, a, b } => {
            nonneg("h", h)?;
            nonneg("h+a", h + a)?;
            nonneg("h+b", h + b)?;
            let scale = h.max(a.abs()).max(b.abs()).max(1.0);
            if (h * (a + b) - a * b).abs() > RELATION_TOL * scale * scale {
                return Err(Error::Domain(format!(
                    "generalized threshold model needs h(a+b) = ab (h={h}, a={a}, b={b})"
                )));
            }
            Ok(())
        }
    }
}

/// The two roots `(trace ± sqrt(disc)) / 2`, larger first.
fn root_pair(trace: f64, disc: f64) -> Result<(f64, f64)> {
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "negative discriminant {disc}: decay rates are complex"
        )));
    }
    let root = disc.sqrt();
    Ok(((trace + root) / 2.0, (trace - root) / 2.0))
}

pub fn decay_rates(params: &ModelParams) -> Result<DecayRates> {
    check_params(params)?;
    match *params {
        ModelParams::NoisyVoter { h1, h2, .. } => Ok(DecayRates {
            alpha1: h1 + h2,
            alpha2: None,
        }),
        ModelParams::Degenerate { a, b } => Ok(DecayRates {
            alpha1: if b == 0.0 { a } else { b },
            alpha2: None,
        }),
        ModelParams::ThresholdNoisy { h, a } => {
            let trace = 8.0 * h + a;
            let (a1, a2) = root_pair(trace, trace * trace - 48.0 * h * h)?;
            Ok(DecayRates {
                alpha1: a1,
                alpha2: Some(a2.max(0.0)),
            })
        }
        ModelParams::GeneralizedThreshold { h, a, b } => {
            let sum = a + b;
            let disc = 4.0 * h * h + sum * sum + 8.0 * h * sum;
            let (a1, a2) = root_pair(6.0 * h + sum, disc)?;
            Ok(DecayRates {
                alpha1: a1,
                alpha2: Some(a2.max(0.0)),
            })
        }
    }
}

/// Long-time occupation density `lim w(t)` for the ergodic families.
pub fn density_limit(params: &ModelParams) -> Result<f64> {
    check_params(params)?;
    match *params {
        ModelParams::NoisyVoter { h1, h2, .. } => {
            if h1 + h2 > 0.0 {
                Ok(h1 / (h1 + h2))
            } else {
                Err(Error::NonErgodic("noisy voter model without noise".into()))
            }
        }
        ModelParams::Degenerate { .. } => Err(Error::NonErgodic(
            "degenerate threshold model has no unique limit".into(),
        )),
        ModelParams::ThresholdNoisy { h, .. } => {
            if h > 0.0 {
                Ok(0.5)
            } else {
                Err(Error::NonErgodic("threshold model without noise".into()))
            }
        }
        ModelParams::GeneralizedThreshold { h, a, b } => {
            if h > 0.0 {
                Ok((4.0 * h + a) / (8.0 * h + a + b))
            } else {
                Err(Error::NonErgodic("threshold model without noise".into()))
            }
        }
    }
}

/// Amplitudes of the two-exponential solution approaching `limit`.
fn two_mode(
    model: ModelParams,
    n: usize,
    rates: (f64, f64),
    limit: f64,
    init: &InitialStats,
) -> Result<ClosedFormMCF> {
    let (alpha1, alpha2) = rates;
    if (alpha1 - alpha2).abs() <= 1e-12 * alpha1.abs().max(1.0) {
        return Err(Error::DegenerateSpectrum(alpha1));
    }
    let offset = init.coverage - limit;
    let c1 = (alpha2 * offset + init.g1) / (alpha2 - alpha1);
    Ok(ClosedFormMCF {
        model,
        n,
        alpha1,
        alpha2,
        c1,
        c2: offset - c1,
        asymptote: limit,
        variant: None,
    })
}

pub fn build_mcf(params: &ModelParams, n: usize, init: &InitialStats) -> Result<ClosedFormMCF> {
    check_params(params)?;
    let nf = n as f64;
    if !(0.0..=nf).contains(&init.coverage) {
        return Err(Error::Domain(format!(
            "initial coverage {} outside [0, {n}]",
            init.coverage
        )));
    }
    let single = |alpha: f64, amplitude: f64, variant| ClosedFormMCF {
        model: *params,
        n,
        alpha1: alpha,
        alpha2: 0.0,
        c1: amplitude,
        c2: 0.0,
        asymptote: init.coverage - amplitude,
        variant,
    };
    match *params {
        ModelParams::NoisyVoter { h1, h2, .. } => {
            let rate = h1 + h2;
            if rate == 0.0 {
                return Ok(single(0.0, 0.0, None));
            }
            Ok(single(rate, init.coverage - h1 * nf / rate, None))
        }
        ModelParams::Degenerate { a, b } => {
            let (form, rate, amplitude) = if a == 0.0 && b == 0.0 {
                (DegenerateForm::Frozen, 0.0, 0.0)
            } else if b == 0.0 {
                (DegenerateForm::Birth, a, -init.ns0)
            } else if a == 0.0 {
                (DegenerateForm::Death, b, init.n01)
            } else {
                (DegenerateForm::Symmetric, a, init.n01 - init.ns0)
            };
            Ok(single(rate, amplitude, Some(form)))
        }
        ModelParams::ThresholdNoisy { .. } => {
            let r = decay_rates(params)?;
            two_mode(*params, n, (r.alpha1, r.alpha2.unwrap()), 0.5 * nf, init)
        }
        ModelParams::GeneralizedThreshold { h, a, b } => {
            let r = decay_rates(params)?;
            let denom = 8.0 * h + a + b;
            if denom == 0.0 {
                return Err(Error::DegenerateSpectrum(0.0));
            }
            let limit = nf * (4.0 * h + a) / denom;
            two_mode(*params, n, (r.alpha1, r.alpha2.unwrap()), limit, init)
        }
    }
}

/// `(A1, A0, B)` of the exact closure `g2 = A1 g1 + A0 |η| + B` on `n` sites.
pub fn e_coeffs(params: &ModelParams, n: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    match *params {
        ModelParams::NoisyVoter { h1, h2, .. } => (-(h1 + h2), 0.0, 0.0),
        ModelParams::Degenerate { a, b } => {
            if b == 0.0 {
                (-a, 0.0, 0.0)
            } else if a == 0.0 {
                (-b, 0.0, 0.0)
            } else {
                (-0.5 * (a + b), 0.0, 0.0)
            }
        }
        ModelParams::ThresholdNoisy { h, a } => {
            (-(a + 8.0 * h), -12.0 * h * h, 6.0 * h * h * nf)
        }
        ModelParams::GeneralizedThreshold { h, a, b } => (
            -(6.0 * h + a + b),
            -h * (8.0 * h + a + b),
            h * nf * (4.0 * h + a),
        ),
    }
}

/// `ε - M` with `ε = min_k (λ_k + μ_k)` and
/// `M = s · max_k max(|λ_k - λ_{k-1}|, |μ_k - μ_{k-1}|)`.
pub fn epsilon_m(r: &RateTable) -> f64 {
    let (birth, death) = (r.birth(), r.death());
    let eps = birth
        .iter()
        .zip(death)
        .map(|(l, m)| l + m)
        .fold(f64::INFINITY, f64::min);
    let jump = (1..birth.len())
        .map(|k| {
            (birth[k] - birth[k - 1])
                .abs()
                .max((death[k] - death[k - 1]).abs())
        })
        .fold(0.0, f64::max);
    eps - r.degree() as f64 * jump
}
