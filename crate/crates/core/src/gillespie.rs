//! Event-driven simulation of the spin-flip process.
//!
//! Rates depend only on a site's spin and its occupied-neighbor count, so sites
//! are kept in `2(s+1)` category lists. Sampling an event picks a category by
//! weight and then a uniform member; a flip moves at most `s + 1` sites between
//! lists.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` pinned to 0.3.1). A run with
//! seed `σ` draws from `ChaCha8Rng::seed_from_u64(σ)`; replica `i` of an
//! ensemble uses stream `i` of that generator, so replica 0 reproduces
//! [`simulate`] and results do not depend on the thread count.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rates::RateTable;
use crate::stats::NeighborCounts;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub vertex: usize,
    pub new_spin: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub t_end: f64,
    /// Time at which an absorbing configuration was reached, if any.
    pub absorbed_at: Option<f64>,
}

impl Trajectory {
    pub fn is_absorbed(&self) -> bool {
        self.absorbed_at.is_some()
    }

    pub fn configuration_at(&self, t: f64) -> Configuration {
        let mut c = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            c.flip(e.vertex);
        }
        c
    }

    pub fn final_configuration(&self) -> Configuration {
        self.configuration_at(f64::INFINITY)
    }

    /// `|φ_t|` at each time of a sorted grid.
    pub fn coverage_on_grid(&self, t_grid: &[f64]) -> Vec<usize> {
        let mut coverage = self.initial.coverage();
        let mut events = self.events.iter().peekable();
        t_grid
            .iter()
            .map(|&t| {
                while let Some(e) = events.next_if(|e| e.time <= t) {
                    if e.new_spin == 1 {
                        coverage += 1;
                    } else {
                        coverage -= 1;
                    }
                }
                coverage
            })
            .collect()
    }

    /// CSV with header `time,vertex,new_spin`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,vertex,new_spin")?;
        for e in &self.events {
            writeln!(w, "{:.16e},{},{}", e.time, e.vertex, e.new_spin)?;
        }
        Ok(())
    }
}

/// Running state of one realization.
struct Simulator<'a> {
    g: &'a Graph,
    config: Configuration,
    counts: NeighborCounts,
    members: Vec<Vec<usize>>,
    slot: Vec<usize>,
    category_rate: Vec<f64>,
    time: f64,
    compensation: f64,
}

impl<'a> Simulator<'a> {
    fn new(g: &'a Graph, r: &RateTable, init: Configuration) -> Self {
        let s = g.degree();
        let counts = NeighborCounts::new(g, &init);
        let category_rate: Vec<f64> = (0..2 * (s + 1))
            .map(|c| r.rate(c % (s + 1), c > s))
            .collect();
        let mut members = vec![Vec::new(); 2 * (s + 1)];
        let mut slot = vec![0; g.vertex_count()];
        for x in 0..g.vertex_count() {
            let c = Self::category(s, init.get(x), counts.get(x));
            slot[x] = members[c].len();
            members[c].push(x);
        }
        Simulator {
            g,
            config: init,
            counts,
            members,
            slot,
            category_rate,
            time: 0.0,
            compensation: 0.0,
        }
    }

    fn category(s: usize, occupied: bool, k: usize) -> usize {
        usize::from(occupied) * (s + 1) + k
    }

    fn site_category(&self, x: usize) -> usize {
        Self::category(self.g.degree(), self.config.get(x), self.counts.get(x))
    }

    fn total_rate(&self) -> f64 {
        self.members
            .iter()
            .zip(&self.category_rate)
            .map(|(m, r)| m.len() as f64 * r)
            .sum()
    }

    fn remove(&mut self, x: usize, c: usize) {
        let i = self.slot[x];
        self.members[c].swap_remove(i);
        if let Some(&moved) = self.members[c].get(i) {
            self.slot[moved] = i;
        }
    }

    fn insert(&mut self, x: usize, c: usize) {
        self.slot[x] = self.members[c].len();
        self.members[c].push(x);
    }

    /// Advances the clock with compensated summation.
    fn advance(&mut self, dt: f64) {
        let y = dt - self.compensation;
        let t = self.time + y;
        self.compensation = (t - self.time) - y;
        self.time = t;
    }

    fn flip(&mut self, x: usize) {
        let before: Vec<(usize, usize)> = std::iter::once(x)
            .chain(self.g.neighbors(x).iter().copied())
            .map(|y| (y, self.site_category(y)))
            .collect();
        self.config.flip(x);
        self.counts.apply_flip(self.g, x, self.config.get(x));
        for (y, old) in before {
            let new = self.site_category(y);
            if new != old {
                self.remove(y, old);
                self.insert(y, new);
            }
        }
        debug_assert_eq!(
            self.counts,
            NeighborCounts::new(self.g, &self.config),
            "incremental neighbor counts diverged from a full recount"
        );
    }

    /// Draws the next event before `t_max`. `Err(())` signals absorption.
    fn step<R: Rng>(&mut self, rng: &mut R, t_max: f64) -> std::result::Result<Option<Event>, ()> {
        let total = self.total_rate();
        if total <= 0.0 {
            return Err(());
        }
        let u: f64 = rng.gen();
        let dt = -(1.0 - u).ln() / total;
        if self.time + dt > t_max {
            return Ok(None);
        }
        self.advance(dt);
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = None;
        for (c, (m, &rate)) in self.members.iter().zip(&self.category_rate).enumerate() {
            let weight = m.len() as f64 * rate;
            if weight <= 0.0 {
                continue;
            }
            chosen = Some(c);
            if target < weight {
                break;
            }
            target -= weight;
        }
        // `chosen` is the last positive category if rounding overshot.
        let c = chosen.expect("positive total rate has a positive category");
        let list = &self.members[c];
        let x = list[rng.gen_range(0..list.len())];
        self.flip(x);
        Ok(Some(Event {
            time: self.time,
            vertex: x,
            new_spin: self.config.spin(x),
        }))
    }
}

fn check_inputs(g: &Graph, r: &RateTable, init: &Configuration) -> Result<()> {
    if r.degree() != g.degree() {
        return Err(Error::DegreeMismatch {
            rates: r.degree(),
            graph: g.degree(),
        });
    }
    if init.len() != g.vertex_count() {
        return Err(Error::InvalidSize(format!(
            "configuration of length {} on a graph with {} vertices",
            init.len(),
            g.vertex_count()
        )));
    }
    Ok(())
}

fn run<R: Rng>(
    g: &Graph,
    r: &RateTable,
    init: Configuration,
    t_max: f64,
    rng: &mut R,
    mut on_event: impl FnMut(Event),
) -> Option<f64> {
    let mut sim = Simulator::new(g, r, init);
    loop {
        match sim.step(rng, t_max) {
            Ok(Some(e)) => on_event(e),
            Ok(None) => return None,
            Err(()) => return Some(sim.time),
        }
    }
}

/// One realization on `[0, t_max]`.
pub fn simulate(g: &Graph, r: &RateTable, init: &Configuration, t_max: f64, seed: u64) -> Result<Trajectory> {
    check_inputs(g, r, init)?;
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Domain(format!("t_max must be positive and finite, got {t_max}")));
    }
    let mut rng = replica_rng(seed, 0);
    let mut events = Vec::new();
    let absorbed_at = run(g, r, init.clone(), t_max, &mut rng, |e| events.push(e));
    Ok(Trajectory {
        initial: init.clone(),
        events,
        t_end: t_max,
        absorbed_at,
    })
}

/// The generator for replica `index` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// How each replica's initial configuration is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    PointMass(Configuration),
    /// Independent occupation with probability `p`, drawn per replica.
    Bernoulli(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub t_grid: Vec<f64>,
    /// Sample mean of `|φ_t|`.
    pub mean: Vec<f64>,
    /// Standard error of the mean.
    pub stderr: Vec<f64>,
    pub n_replicas: usize,
    pub seed: u64,
}

impl EnsembleEstimate {
    /// Mean and standard error divided by `n`.
    pub fn density(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let n = n as f64;
        (
            self.mean.iter().map(|m| m / n).collect(),
            self.stderr.iter().map(|e| e / n).collect(),
        )
    }
}

/// Mean coverage and its standard error over independent replicas.
pub fn ensemble_mcf(
    g: &Graph,
    r: &RateTable,
    init: &InitSpec,
    t_grid: &[f64],
    n_replicas: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    if n_replicas < 2 {
        return Err(Error::Domain("an ensemble needs at least two replicas".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be finite, nonnegative and sorted".into()));
    }
    match init {
        InitSpec::PointMass(c) => check_inputs(g, r, c)?,
        InitSpec::Bernoulli(p) => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Domain(format!("bernoulli parameter {p} not in [0, 1]")));
            }
            check_inputs(g, r, &Configuration::empty(g.vertex_count()))?;
        }
    }
    let t_max = t_grid.last().copied().unwrap_or(0.0);
    let samples: Vec<Vec<f64>> = (0..n_replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            let start = match init {
                InitSpec::PointMass(c) => c.clone(),
                InitSpec::Bernoulli(p) => Configuration::random(g.vertex_count(), *p, &mut rng),
            };
            let mut coverage = start.coverage();
            let mut out = Vec::with_capacity(t_grid.len());
            let mut next = 0;
            if t_max > 0.0 {
                run(g, r, start, t_max, &mut rng, |e| {
                    while next < t_grid.len() && t_grid[next] < e.time {
                        out.push(coverage as f64);
                        next += 1;
                    }
                    if e.new_spin == 1 {
                        coverage += 1;
                    } else {
                        coverage -= 1;
                    }
                });
            }
            out.resize(t_grid.len(), coverage as f64);
            out
        })
        .collect();
    let count = n_replicas as f64;
    let mut mean = vec![0.0; t_grid.len()];
    for s in &samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; t_grid.len()];
    for s in &samples {
        for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let stderr = var
        .into_iter()
        .map(|v| (v / (count - 1.0) / count).sqrt())
        .collect();
    Ok(EnsembleEstimate {
        t_grid: t_grid.to_vec(),
        mean,
        stderr,
        n_replicas,
        seed,
    })
}
