//! Real-coded genetic algorithm: binary-tournament selection, scattered
//! crossover, Gaussian mutation clamped to the bounds, and elitism.
//!
//! Every child slot draws from its own ChaCha stream keyed by
//! `(seed, generation, slot)`, so results do not depend on how fitness
//! evaluation is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_fraction: f64,
    pub elite_count: usize,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_scale: f64,
    /// Linear shrink of the mutation scale over the run (0 keeps it fixed,
    /// 1 shrinks it to zero by the last generation).
    pub mutation_shrink: f64,
    /// Largest constraint margin still counted as feasible.
    pub constraint_tolerance: f64,
    /// Extra draws allowed per initial individual whose cost is not finite.
    pub init_redraws: usize,
    /// Not part of serialized configs; callers supply it explicitly.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 50,
            crossover_fraction: 0.8,
            elite_count: 5,
            mutation_scale: 0.1,
            mutation_shrink: 1.0,
            constraint_tolerance: 1e-3,
            init_redraws: 20,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 2 {
            return bad(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.generations == 0 {
            return bad("generations must be >= 1".into());
        }
        if self.elite_count >= self.population_size {
            return bad(format!(
                "elite_count {} must be below population_size {}",
                self.elite_count, self.population_size
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return bad(format!("crossover_fraction must be in [0, 1], got {}", self.crossover_fraction));
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return bad(format!("mutation_scale must be >= 0, got {}", self.mutation_scale));
        }
        if !(0.0..=1.0).contains(&self.mutation_shrink) {
            return bad(format!("mutation_shrink must be in [0, 1], got {}", self.mutation_shrink));
        }
        if !(self.constraint_tolerance >= 0.0) {
            return bad("constraint_tolerance must be >= 0".into());
        }
        Ok(())
    }
}

/// Box bounds of the decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension(format!(
                "bounds have {} lower and {} upper entries",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidConfig(format!("gene {i}: bounds [{l}, {u}] are not a valid interval")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }
}

/// Fitness of one candidate: the cost to minimize and its largest
/// constraint margin (≤ 0 means every constraint holds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub cost: f64,
    pub max_margin: f64,
}

impl Evaluation {
    /// Score for a candidate whose simulation failed.
    pub const FAILED: Evaluation = Evaluation {
        cost: f64::INFINITY,
        max_margin: f64::INFINITY,
    };
}

pub struct GaProblem<F> {
    pub gene_names: Vec<String>,
    pub bounds: Bounds,
    pub fitness: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_cost: f64,
    /// Mean over the finite costs of the generation.
    pub mean_cost: f64,
    pub feasible_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub best_margin: f64,
    pub feasible: bool,
    pub history: Vec<GenerationStats>,
}

/// A population snapshot handed to observers.
pub struct GenerationView<'a> {
    pub generation: usize,
    pub population: &'a [Vec<f64>],
    pub evaluations: &'a [Evaluation],
}

fn slot_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

/// Binary tournament: two uniform draws, the lower cost wins, ties go to
/// the lower index.
pub fn select_parent(costs: &[f64], rng: &mut impl Rng) -> usize {
    let i = rng.random_range(0..costs.len());
    let j = rng.random_range(0..costs.len());
    let (lo, hi) = (i.min(j), i.max(j));
    if costs[hi] < costs[lo] {
        hi
    } else {
        lo
    }
}

/// Scattered crossover: each gene comes from either parent with equal odds.
pub fn crossover_scattered(a: &[f64], b: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("parents of length {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y }).collect())
}

/// Gaussian mutation of every gene with standard deviation
/// `scale·(upper − lower)·(1 − shrink·generation_frac)`, clamped back into
/// the bounds.
pub fn mutate_gaussian(
    parent: &[f64],
    bounds: &Bounds,
    scale: f64,
    shrink: f64,
    generation_frac: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let scale = scale * (1.0 - shrink * generation_frac).max(0.0);
    parent
        .iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&x, (&l, &u))| {
            let z: f64 = rng.sample(StandardNormal);
            (x + z * scale * (u - l)).clamp(l, u)
        })
        .collect()
}

fn evaluate_all<F>(fitness: &F, population: &[Vec<f64>]) -> Vec<Evaluation>
where
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    population.par_iter().map(|x| sanitize(fitness(x))).collect()
}

fn sanitize(e: Evaluation) -> Evaluation {
    Evaluation {
        cost: if e.cost.is_nan() { f64::INFINITY } else { e.cost },
        max_margin: if e.max_margin.is_nan() { f64::INFINITY } else { e.max_margin },
    }
}

fn ranking(evals: &[Evaluation]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..evals.len()).collect();
    order.sort_by(|&i, &j| evals[i].cost.total_cmp(&evals[j].cost).then(i.cmp(&j)));
    order
}

fn stats(generation: usize, evals: &[Evaluation], tol: f64) -> GenerationStats {
    let finite: Vec<f64> = evals.iter().map(|e| e.cost).filter(|c| c.is_finite()).collect();
    GenerationStats {
        generation,
        best_cost: evals.iter().map(|e| e.cost).fold(f64::INFINITY, f64::min),
        mean_cost: if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        feasible_count: evals.iter().filter(|e| e.max_margin <= tol).count(),
    }
}

pub fn run_ga<F>(problem: &GaProblem<F>, config: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    run_ga_observed(problem, config, |_| {})
}

/// Run the GA, calling `observer` with the initial population and with
/// every subsequent generation.
pub fn run_ga_observed<F, O>(problem: &GaProblem<F>, config: &GaConfig, mut observer: O) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Evaluation + Sync,
    O: FnMut(&GenerationView<'_>),
{
    config.validate()?;
    let bounds = &problem.bounds;
    if !problem.gene_names.is_empty() && problem.gene_names.len() != bounds.len() {
        return Err(Error::Dimension(format!(
            "{} gene names for {} bounds",
            problem.gene_names.len(),
            bounds.len()
        )));
    }
    let n = config.population_size;
    // Each slot redraws from its own stream until it lands on a finite cost
    // or runs out of redraws, so unstable regions do not fill generation 0.
    let (mut population, mut evals): (Vec<Vec<f64>>, Vec<Evaluation>) = (0..n)
        .into_par_iter()
        .map(|slot| {
            let mut rng = slot_rng(config.seed, 0, slot);
            let mut attempt = 0;
            loop {
                let x: Vec<f64> = bounds
                    .lower
                    .iter()
                    .zip(&bounds.upper)
                    .map(|(&l, &u)| rng.random_range(l..=u))
                    .collect();
                let e = sanitize((problem.fitness)(&x));
                if e.cost.is_finite() || attempt >= config.init_redraws {
                    return (x, e);
                }
                attempt += 1;
            }
        })
        .unzip();
    observer(&GenerationView {
        generation: 0,
        population: &population,
        evaluations: &evals,
    });

    let n_children = n - config.elite_count;
    let n_crossover = (config.crossover_fraction * n_children as f64).round() as usize;
    let mut history = Vec::with_capacity(config.generations);

    for generation in 1..=config.generations {
        let order = ranking(&evals);
        let costs: Vec<f64> = evals.iter().map(|e| e.cost).collect();
        let progress = (generation - 1) as f64 / config.generations as f64;

        let children: Vec<Vec<f64>> = (0..n_children)
            .map(|slot| {
                let mut rng = slot_rng(config.seed, generation, slot);
                let a = select_parent(&costs, &mut rng);
                if slot < n_crossover {
                    let b = select_parent(&costs, &mut rng);
                    crossover_scattered(&population[a], &population[b], &mut rng).expect("equal-length parents")
                } else {
                    mutate_gaussian(
                        &population[a],
                        bounds,
                        config.mutation_scale,
                        config.mutation_shrink,
                        progress,
                        &mut rng,
                    )
                }
            })
            .collect();
        let child_evals = evaluate_all(&problem.fitness, &children);

        let mut next = Vec::with_capacity(n);
        let mut next_evals = Vec::with_capacity(n);
        for &i in &order[..config.elite_count] {
            next.push(population[i].clone());
            next_evals.push(evals[i]);
        }
        next.extend(children);
        next_evals.extend(child_evals);
        population = next;
        evals = next_evals;

        observer(&GenerationView {
            generation,
            population: &population,
            evaluations: &evals,
        });
        history.push(stats(generation, &evals, config.constraint_tolerance));
    }

    let best = ranking(&evals)[0];
    Ok(GaResult {
        best: population[best].clone(),
        best_cost: evals[best].cost,
        best_margin: evals[best].max_margin,
        feasible: evals[best].max_margin <= config.constraint_tolerance,
        history,
    })
}
