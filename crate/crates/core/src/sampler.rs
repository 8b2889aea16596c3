//! Three-phase stratified sampling of refactoring observations.
//!
//! Phase 1 greedily covers every refactoring type and project up to the
//! configured minima, phase 2 tops up under-sampled projects by reservoir
//! sampling and phase 3 fills the remainder uniformly at random.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::refactoring::{RefactoringInstance, RefactoringType};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SampleError {
    #[error("confidence and margin must lie strictly between 0 and 1 (got {confidence}, {margin})")]
    DomainError { confidence: f64, margin: f64 },
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("cannot draw {wanted} more observations from a pool of {available}")]
    InsufficientPool { wanted: usize, available: usize },
    #[error("coverage minima already select {selected} observations, above the target of {target}")]
    CoverageExceedsTarget { selected: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplePlan {
    /// Explicit sample size; when absent it is derived with [`cochran_n`].
    pub target_n: Option<usize>,
    pub confidence: f64,
    pub margin: f64,
    pub min_per_project: usize,
    pub min_per_type: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self { target_n: None, confidence: 0.95, margin: 0.05, min_per_project: 3, min_per_type: 3, seed: 42 }
    }
}

/// Cochran's sample size for a proportion at p = 0.5.
///
/// With a finite population the correction `n / (1 + (n - 1) / N)` is applied
/// before rounding up.
pub fn cochran_n(confidence: f64, margin: f64, population: Option<u64>) -> Result<u64, SampleError> {
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if !inside(confidence) || !inside(margin) {
        return Err(SampleError::DomainError { confidence, margin });
    }
    let z = Normal::standard().inverse_cdf((1.0 + confidence) / 2.0);
    let n0 = z * z * 0.25 / (margin * margin);
    let n = match population {
        None => n0,
        Some(0) => return Err(SampleError::EmptyPopulation),
        Some(big_n) => n0 / (1.0 + (n0 - 1.0) / big_n as f64),
    };
    let n = n.ceil() as u64;
    Ok(match population {
        Some(big_n) => n.min(big_n),
        None => n,
    })
}

/// Anything that can be stratified by project and refactoring type.
pub trait Stratified {
    fn project(&self) -> &str;
    fn refactoring_type(&self) -> RefactoringType;
}

impl Stratified for RefactoringInstance {
    fn project(&self) -> &str {
        &self.project
    }
    fn refactoring_type(&self) -> RefactoringType {
        self.refactoring_type
    }
}

impl Stratified for (String, RefactoringType) {
    fn project(&self) -> &str {
        &self.0
    }
    fn refactoring_type(&self) -> RefactoringType {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stratum {
    Project(String),
    Type(RefactoringType),
}

/// A minimum the population could not satisfy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub stratum: Stratum,
    pub wanted: usize,
    pub selected: usize,
}

impl Shortfall {
    pub fn missing(&self) -> usize {
        self.wanted - self.selected
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Phase1 {
    /// Population indices in selection order.
    pub selected: Vec<usize>,
    pub shortfalls: Vec<Shortfall>,
}

fn phase_rng(seed: u64, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase);
    rng
}

/// Greedy coverage: first every refactoring type, then every project, each up
/// to its minimum. Within a stratum, choice is uniform; while covering types,
/// candidates from projects still under their minimum are preferred.
pub fn phase1_greedy<T: Stratified>(
    population: &[T],
    min_per_project: usize,
    min_per_type: usize,
    seed: u64,
) -> Phase1 {
    let mut rng = phase_rng(seed, 1);
    let mut taken = vec![false; population.len()];
    let mut out = Phase1::default();
    let mut per_project: BTreeMap<&str, usize> = BTreeMap::new();

    let mut by_type: BTreeMap<RefactoringType, Vec<usize>> = BTreeMap::new();
    let mut by_project: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, u) in population.iter().enumerate() {
        by_type.entry(u.refactoring_type()).or_default().push(i);
        by_project.entry(u.project()).or_default().push(i);
    }

    for (ty, members) in &by_type {
        let mut cands = members.clone();
        cands.shuffle(&mut rng);
        // stable: keeps the shuffled order within each preference class
        cands.sort_by_key(|&i| per_project.get(population[i].project()).copied().unwrap_or(0) >= min_per_project);
        let take = min_per_type.min(cands.len());
        for &i in &cands[..take] {
            taken[i] = true;
            *per_project.entry(population[i].project()).or_default() += 1;
            out.selected.push(i);
        }
        if take < min_per_type {
            out.shortfalls.push(Shortfall { stratum: Stratum::Type(*ty), wanted: min_per_type, selected: take });
        }
    }

    for (project, members) in &by_project {
        let have = per_project.get(project).copied().unwrap_or(0);
        if have >= min_per_project {
            continue;
        }
        let mut cands: Vec<usize> = members.iter().copied().filter(|&i| !taken[i]).collect();
        cands.shuffle(&mut rng);
        let take = (min_per_project - have).min(cands.len());
        for &i in &cands[..take] {
            taken[i] = true;
            out.selected.push(i);
        }
        if have + take < min_per_project {
            out.shortfalls.push(Shortfall {
                stratum: Stratum::Project(project.to_string()),
                wanted: min_per_project,
                selected: have + take,
            });
        }
    }
    out
}

/// Algorithm R: a uniform sample of `min(k, n)` items from a stream of
/// unknown length `n`, each item kept with probability `k / n`.
pub fn phase2_reservoir<T, I: IntoIterator<Item = T>, R: Rng>(stream: I, k: usize, rng: &mut R) -> Vec<T> {
    let mut reservoir = Vec::with_capacity(k);
    if k == 0 {
        return reservoir;
    }
    for (seen, item) in stream.into_iter().enumerate() {
        if seen < k {
            reservoir.push(item);
        } else {
            let j = rng.random_range(0..=seen);
            if j < k {
                reservoir[j] = item;
            }
        }
    }
    reservoir
}

/// Uniform sample without replacement of exactly `remaining` pool items.
pub fn phase3_random_fill<T: Clone, R: Rng>(pool: &[T], remaining: usize, rng: &mut R) -> Result<Vec<T>, SampleError> {
    if remaining > pool.len() {
        return Err(SampleError::InsufficientPool { wanted: remaining, available: pool.len() });
    }
    Ok(rand::seq::index::sample(rng, pool.len(), remaining).into_iter().map(|i| pool[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub target: usize,
    /// `(population index, phase)` in selection order.
    pub selected: Vec<(usize, u8)>,
    pub shortfalls: Vec<Shortfall>,
}

impl Sample {
    pub fn phase_count(&self, phase: u8) -> usize {
        self.selected.iter().filter(|(_, p)| *p == phase).count()
    }
}

/// Resolves the target size of a plan for a population of `n` units.
pub fn target_size(plan: &SamplePlan, n: usize) -> Result<usize, SampleError> {
    match plan.target_n {
        Some(t) => Ok(t),
        None => Ok(cochran_n(plan.confidence, plan.margin, Some(n.max(1) as u64))? as usize),
    }
}

/// Runs all three phases.
pub fn draw_sample<T: Stratified>(population: &[T], plan: &SamplePlan) -> Result<Sample, SampleError> {
    let target = target_size(plan, population.len())?;
    let p1 = phase1_greedy(population, plan.min_per_project, plan.min_per_type, plan.seed);
    if p1.selected.len() > target {
        return Err(SampleError::CoverageExceedsTarget { selected: p1.selected.len(), target });
    }
    let mut taken: BTreeSet<usize> = p1.selected.iter().copied().collect();
    let mut selected: Vec<(usize, u8)> = p1.selected.iter().map(|&i| (i, 1)).collect();

    let mut rng2 = phase_rng(plan.seed, 2);
    for s in &p1.shortfalls {
        let Stratum::Project(project) = &s.stratum else { continue };
        let room = target - selected.len();
        let k = s.missing().min(room);
        let stream = (0..population.len()).filter(|i| !taken.contains(i) && population[*i].project() == project);
        for i in phase2_reservoir(stream, k, &mut rng2) {
            taken.insert(i);
            selected.push((i, 2));
        }
    }

    let pool: Vec<usize> = (0..population.len()).filter(|i| !taken.contains(i)).collect();
    let mut rng3 = phase_rng(plan.seed, 3);
    for i in phase3_random_fill(&pool, target - selected.len(), &mut rng3)? {
        selected.push((i, 3));
    }
    Ok(Sample { target, selected, shortfalls: p1.shortfalls })
}

/// Writes the sample manifest: instance id, commit, project, type, phase.
pub fn write_manifest<W: Write>(out: W, population: &[RefactoringInstance], sample: &Sample) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance_id", "commit", "project", "type", "phase"])?;
    for &(i, phase) in &sample.selected {
        let inst = &population[i];
        w.write_record([
            inst.id.as_str(),
            inst.commit_id.as_str(),
            inst.project.as_str(),
            inst.refactoring_type.name(),
            &phase.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads manifest rows back as `(instance id, phase)`.
pub fn read_manifest<R: std::io::Read>(input: R) -> csv::Result<Vec<(String, u8)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<(String, String, String, String, u8)>() {
        let (id, _, _, _, phase) = rec?;
        out.push((id, phase));
    }
    Ok(out)
}
