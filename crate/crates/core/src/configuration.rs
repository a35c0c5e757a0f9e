//! Spin configurations `η ∈ {0,1}^V`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{ConditionIIWitness, Graph};

/// A {0,1} assignment to the vertices of a graph, with its coverage `|η|` cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    bits: Vec<bool>,
    coverage: usize,
}

impl Configuration {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let coverage = bits.iter().filter(|&&b| b).count();
        Configuration { bits, coverage }
    }

    /// The all-empty configuration `∅`.
    pub fn empty(n: usize) -> Self {
        Configuration {
            bits: vec![false; n],
            coverage: 0,
        }
    }

    /// The all-occupied configuration `∅̄`.
    pub fn full(n: usize) -> Self {
        Configuration {
            bits: vec![true; n],
            coverage: n,
        }
    }

    /// `∅` with the given sites occupied.
    pub fn with_occupied(n: usize, sites: &[usize]) -> Self {
        let mut c = Self::empty(n);
        for &x in sites {
            if !c.get(x) {
                c.flip(x);
            }
        }
        c
    }

    /// Vertex `i` is bit `i` of `index`.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= 64, "state index only covers up to 64 vertices");
        Self::from_bits((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.len() <= 64, "state index only covers up to 64 vertices");
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    /// Independent Bernoulli(`p`) spins.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        Self::from_bits((0..n).map(|_| rng.gen::<f64>() < p).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn coverage(&self) -> usize {
        self.coverage
    }

    pub fn get(&self, x: usize) -> bool {
        self.bits[x]
    }

    pub fn spin(&self, x: usize) -> u8 {
        u8::from(self.bits[x])
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn flip(&mut self, x: usize) {
        self.bits[x] = !self.bits[x];
        if self.bits[x] {
            self.coverage += 1;
        } else {
            self.coverage -= 1;
        }
    }

    /// `η_x`.
    pub fn flipped(&self, x: usize) -> Self {
        let mut c = self.clone();
        c.flip(x);
        c
    }

    /// `η̄`.
    pub fn complement(&self) -> Self {
        Configuration {
            bits: self.bits.iter().map(|b| !b).collect(),
            coverage: self.len() - self.coverage,
        }
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// `η₁`: `y` and its neighbor `u1` empty, every other site occupied.
    pub fn eta1(g: &Graph, y: usize, u1: usize) -> Result<Self> {
        let n = g.vertex_count();
        if y >= n || u1 >= n {
            return Err(Error::InvalidVertex { vertex: y.max(u1), n });
        }
        if !g.are_adjacent(y, u1) {
            return Err(Error::Precondition(format!(
                "fixture sites {y} and {u1} are not neighbors"
            )));
        }
        let mut c = Self::full(n);
        c.flip(y);
        c.flip(u1);
        Ok(c)
    }

    pub fn eta1_from_witness(g: &Graph, w: &ConditionIIWitness) -> Result<Self> {
        Self::eta1(g, w.y, w.u1)
    }

    /// `η₂ = (η₁)_{u2}`.
    pub fn eta2_from_witness(g: &Graph, w: &ConditionIIWitness) -> Result<Self> {
        Ok(Self::eta1_from_witness(g, w)?.flipped(w.u2))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: 1,
                    message: format!("invalid spin character `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(bits))
    }
}
