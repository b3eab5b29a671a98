//! Coreset selection from frequency-distance scores.
//!
//! The adaptive strategy keeps the furthest samples when the coreset is
//! small (`(1 - r) N <= size_threshold`) and samples evenly across score
//! strata otherwise. The furthest, closest, stratified and random strategies
//! can also be forced directly.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_indices, stage_rng, StageRng};
use crate::scoring::ScoreSet;

/// Name of the random stream used for all pruning draws.
pub const PRUNE_STREAM: &str = "prune";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Adaptive,
    Stratified,
    Furthest,
    Closest,
    Random,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Adaptive => "adaptive",
            Strategy::Stratified => "stratified",
            Strategy::Furthest => "furthest",
            Strategy::Closest => "closest",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adaptive" => Ok(Strategy::Adaptive),
            "stratified" => Ok(Strategy::Stratified),
            "furthest" => Ok(Strategy::Furthest),
            "closest" => Ok(Strategy::Closest),
            "random" => Ok(Strategy::Random),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Fraction of samples removed, in (0, 1).
    pub rate: f64,
    pub strata: usize,
    pub size_threshold: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            rate: 0.5,
            strata: 100,
            size_threshold: 1500,
            strategy: Strategy::Adaptive,
            seed: 0,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::Config(format!(
                "pruning rate must satisfy 0 < r < 1, got {}",
                self.rate
            )));
        }
        if self.strata == 0 {
            return Err(Error::Config("number of strata must be >= 1".into()));
        }
        if self.size_threshold == 0 {
            return Err(Error::Config("size threshold must be >= 1".into()));
        }
        Ok(())
    }
}

/// Target coreset size `(1 - r) N`, and the integer budget `floor` of it.
///
/// Products within 1e-9 (relative) of an integer are snapped to it first, so
/// that e.g. `r = 0.7, N = 5000` gives exactly 1500 rather than 1500.0000000000002.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub target: f64,
    pub size: usize,
}

pub fn coreset_budget(rate: f64, n: usize) -> Result<Budget> {
    let raw = (1.0 - rate) * n as f64;
    let nearest = raw.round();
    let target = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        raw
    };
    let size = target.floor() as usize;
    if size == 0 {
        return Err(Error::EmptyBudget { rate, n });
    }
    Ok(Budget { target, size })
}

/// The branch the adaptive strategy takes for a given rate and corpus size.
pub fn adaptive_branch(rate: f64, n: usize, size_threshold: usize) -> Result<Strategy> {
    let budget = coreset_budget(rate, n)?;
    Ok(if budget.target > size_threshold as f64 {
        Strategy::Stratified
    } else {
        Strategy::Furthest
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Member doc ids, ascending.
    pub members: Vec<usize>,
}

/// Per-stratum accounting of a stratified selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StratumReport {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub population: usize,
    /// Quota assigned by the main allocation loop (`m_B`).
    pub quota: usize,
    /// Final count including any leftover top-up.
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetSelection {
    /// Kept doc ids, ascending.
    pub kept: Vec<usize>,
    pub strategy_used: Strategy,
    pub budget: usize,
    /// Present for stratified selections; one entry per stratum, empty ones included.
    pub strata: Option<Vec<StratumReport>>,
}

impl CoresetSelection {
    fn new(
        mut kept: Vec<usize>,
        strategy_used: Strategy,
        strata: Option<Vec<StratumReport>>,
    ) -> Self {
        kept.sort_unstable();
        CoresetSelection {
            budget: kept.len(),
            kept,
            strategy_used,
            strata,
        }
    }

    pub fn write_coreset<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for id in &self.kept {
            writeln!(out, "{id}")?;
        }
        Ok(())
    }

    pub fn write_strata_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "stratum,lo,hi,population,selected")?;
        for s in self.strata.iter().flatten() {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.index, s.lo, s.hi, s.population, s.selected
            )?;
        }
        Ok(())
    }
}

pub fn prune(scores: &ScoreSet, cfg: &PruneConfig) -> Result<CoresetSelection> {
    cfg.validate()?;
    let n = scores.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let budget = coreset_budget(cfg.rate, n)?.size;
    let strategy = match cfg.strategy {
        Strategy::Adaptive => adaptive_branch(cfg.rate, n, cfg.size_threshold)?,
        s => s,
    };
    match strategy {
        Strategy::Furthest => prune_furthest(scores, budget),
        Strategy::Closest => prune_closest(scores, budget),
        Strategy::Stratified => prune_stratified(scores, budget, cfg.strata, cfg.seed),
        Strategy::Random => prune_random(scores, budget, cfg.seed),
        Strategy::Adaptive => unreachable!("adaptive resolves to a concrete branch"),
    }
}

fn check_budget(budget: usize, n: usize) -> Result<()> {
    if budget == 0 || budget > n {
        return Err(Error::BudgetOutOfRange { budget, n });
    }
    Ok(())
}

/// Doc ids ordered by score descending, ties by doc id ascending.
fn ranked_descending(scores: &ScoreSet) -> Vec<usize> {
    let fd = scores.scores();
    let mut ids: Vec<usize> = (0..fd.len()).collect();
    ids.sort_by(|&a, &b| fd[b].total_cmp(&fd[a]).then(a.cmp(&b)));
    ids
}

pub fn prune_furthest(scores: &ScoreSet, budget: usize) -> Result<CoresetSelection> {
    check_budget(budget, scores.len())?;
    let mut ids = ranked_descending(scores);
    ids.truncate(budget);
    Ok(CoresetSelection::new(ids, Strategy::Furthest, None))
}

pub fn prune_closest(scores: &ScoreSet, budget: usize) -> Result<CoresetSelection> {
    check_budget(budget, scores.len())?;
    let fd = scores.scores();
    let mut ids: Vec<usize> = (0..fd.len()).collect();
    ids.sort_by(|&a, &b| fd[a].total_cmp(&fd[b]).then(a.cmp(&b)));
    ids.truncate(budget);
    Ok(CoresetSelection::new(ids, Strategy::Closest, None))
}

pub fn prune_random(scores: &ScoreSet, budget: usize, seed: u64) -> Result<CoresetSelection> {
    check_budget(budget, scores.len())?;
    let mut rng = stage_rng(seed, PRUNE_STREAM);
    let kept = sample_indices(&mut rng, scores.len(), budget);
    Ok(CoresetSelection::new(kept, Strategy::Random, None))
}

/// Splits `[min, max]` into `k` equal-width strata. A score's stratum is
/// `floor((fd - min) / width)`, clamped to `k - 1` so `max` lands in the top
/// stratum. When all scores are equal everything falls in stratum 0.
pub fn build_strata(scores: &ScoreSet, k: usize) -> Vec<Stratum> {
    assert!(k >= 1);
    let (min, max) = (scores.min, scores.max);
    let width = (max - min) / k as f64;
    let mut strata: Vec<Stratum> = (0..k)
        .map(|i| Stratum {
            index: i,
            lo: min + i as f64 * width,
            hi: if i + 1 == k {
                max
            } else {
                min + (i + 1) as f64 * width
            },
            members: Vec::new(),
        })
        .collect();
    for (id, fd) in scores.iter() {
        strata[stratum_of(fd, min, width, k)].members.push(id);
    }
    strata
}

pub fn stratum_of(fd: f64, min: f64, width: f64, k: usize) -> usize {
    if width > 0.0 {
        (((fd - min) / width).floor() as usize).min(k - 1)
    } else {
        0
    }
}

pub fn prune_stratified(
    scores: &ScoreSet,
    budget: usize,
    k: usize,
    seed: u64,
) -> Result<CoresetSelection> {
    check_budget(budget, scores.len())?;
    if k == 0 {
        return Err(Error::Config("number of strata must be >= 1".into()));
    }
    let strata = build_strata(scores, k);
    let mut rng = stage_rng(seed, PRUNE_STREAM);
    let alloc = allocate(&strata, budget, &mut rng);

    let mut kept = Vec::with_capacity(budget);
    let mut reports = Vec::with_capacity(k);
    for (s, a) in strata.iter().zip(&alloc) {
        kept.extend_from_slice(&a.chosen);
        reports.push(StratumReport {
            index: s.index,
            lo: s.lo,
            hi: s.hi,
            population: s.members.len(),
            quota: a.quota,
            selected: a.chosen.len(),
        });
    }
    debug_assert_eq!(kept.len(), budget);
    Ok(CoresetSelection::new(
        kept,
        Strategy::Stratified,
        Some(reports),
    ))
}

#[derive(Default)]
struct Allocation {
    quota: usize,
    chosen: Vec<usize>,
    remaining: Vec<usize>,
}

fn allocate(strata: &[Stratum], budget: usize, rng: &mut StageRng) -> Vec<Allocation> {
    let mut alloc: Vec<Allocation> = strata
        .iter()
        .map(|s| Allocation {
            remaining: s.members.clone(),
            ..Allocation::default()
        })
        .collect();

    // Working set: non-empty strata only.
    let mut open: Vec<usize> = strata
        .iter()
        .filter(|s| !s.members.is_empty())
        .map(|s| s.index)
        .collect();
    let mut left = budget;
    while !open.is_empty() {
        // Smallest population first; `min_by_key` keeps the lowest index on ties.
        let (pos, &b) = open
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| strata[i].members.len())
            .expect("non-empty");
        let population = strata[b].members.len();
        let quota = population.min(left / open.len());
        take(&mut alloc[b], quota, rng);
        alloc[b].quota = quota;
        open.remove(pos);
        left -= quota;
    }

    // Flooring can leave part of the budget unspent: hand out one more
    // sample per stratum, largest population first, until it is used up.
    while left > 0 {
        let mut order: Vec<usize> = (0..strata.len())
            .filter(|&i| !alloc[i].remaining.is_empty())
            .collect();
        assert!(!order.is_empty(), "budget exceeds population");
        order.sort_by(|&a, &b| {
            strata[b]
                .members
                .len()
                .cmp(&strata[a].members.len())
                .then(a.cmp(&b))
        });
        for i in order {
            if left == 0 {
                break;
            }
            take(&mut alloc[i], 1, rng);
            left -= 1;
        }
    }
    alloc
}

/// Moves `count` uniformly drawn members from `remaining` to `chosen`.
fn take(a: &mut Allocation, count: usize, rng: &mut StageRng) {
    if count == 0 {
        return;
    }
    let picks = sample_indices(rng, a.remaining.len(), count);
    let mut picked = vec![false; a.remaining.len()];
    for p in picks {
        picked[p] = true;
        a.chosen.push(a.remaining[p]);
    }
    let mut flags = picked.into_iter();
    a.remaining.retain(|_| !flags.next().unwrap());
}
