use super::fitness::{fitness_with, References};
use super::mutation::{apply_mutation, MutationKind};
use super::{FitnessSpec, GaConfig, LengthMismatch};
use crate::notation::{Code, HarmonicContext, NoteSeq, HOLD, REST};
use crate::rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Seed-path tags keeping the initialization and breeding streams apart.
const INIT_STREAM: u64 = 0x1;
const BREED_STREAM: u64 = 0x2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

/// Result of a run: the fittest individual and the per-generation curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub best: NoteSeq,
    pub best_fitness: f64,
    /// Entry 0 describes the initial population.
    pub history: Vec<GenerationStats>,
}

/// One-point crossover: children swap suffixes at a uniform cut in `0..=len`.
pub fn crossover<R: Rng + ?Sized>(
    a: &NoteSeq,
    b: &NoteSeq,
    rng: &mut R,
) -> Result<(NoteSeq, NoteSeq), LengthMismatch> {
    if a.len() != b.len() {
        return Err(LengthMismatch(a.len(), b.len()));
    }
    let cut = rng.gen_range(0..=a.len());
    Ok(crossover_at(a, b, cut))
}

pub(crate) fn crossover_at(a: &NoteSeq, b: &NoteSeq, cut: usize) -> (NoteSeq, NoteSeq) {
    let spm = a.steps_per_measure();
    let join = |x: &NoteSeq, y: &NoteSeq| {
        let mut codes = x.codes()[..cut].to_vec();
        codes.extend_from_slice(&y.codes()[cut..]);
        NoteSeq::repaired(codes, spm)
    };
    (join(a, b), join(b, a))
}

/// Random individual: scale notes from the register (80%), rests (10%),
/// extensions (10%).
fn random_individual<R: Rng + ?Sized>(pool: &[u8], len: usize, spm: usize, rng: &mut R) -> NoteSeq {
    let codes: Vec<Code> = (0..len)
        .map(|_| {
            let roll: f64 = rng.gen();
            if roll < 0.8 && !pool.is_empty() {
                pool[rng.gen_range(0..pool.len())] as Code
            } else if roll < 0.9 {
                REST
            } else {
                HOLD
            }
        })
        .collect();
    NoteSeq::repaired(codes, spm)
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| {
        fitness[b]
            .partial_cmp(&fitness[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn stats(generation: usize, fitness: &[f64]) -> GenerationStats {
    GenerationStats {
        generation,
        best: fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: fitness.iter().sum::<f64>() / fitness.len() as f64,
    }
}

/// Evolves a track of `measures` measures from a random population.
///
/// The step count per measure is taken from `ctx`, which must span exactly
/// `measures` measures; `refs` are the tracks it is harmonized against.
pub fn evolve(
    spec: &FitnessSpec,
    cfg: &GaConfig,
    ctx: &HarmonicContext,
    refs: &[NoteSeq],
    measures: usize,
) -> Evolution {
    assert!(
        measures > 0 && ctx.len().is_multiple_of(measures),
        "context does not cover {measures} measures"
    );
    let spm = ctx.len() / measures;
    let pool = ctx.scale.pitches_in(spec.register.low, spec.register.high);
    let population: Vec<NoteSeq> = (0..cfg.population_size)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(cfg.rng_seed, &[INIT_STREAM, i as u64]);
            random_individual(&pool, ctx.len(), spm, &mut r)
        })
        .collect();
    run(spec, cfg, ctx, refs, population)
}

/// Evolves from seed individuals: the population is filled by cycling the
/// seeds, every copy after the first of each being mutated once.
pub fn evolve_from(
    spec: &FitnessSpec,
    cfg: &GaConfig,
    ctx: &HarmonicContext,
    refs: &[NoteSeq],
    seeds: &[NoteSeq],
) -> Evolution {
    assert!(!seeds.is_empty(), "need at least one seed individual");
    let population: Vec<NoteSeq> = (0..cfg.population_size)
        .into_par_iter()
        .map(|i| {
            let seed = &seeds[i % seeds.len()];
            assert_eq!(seed.len(), ctx.len(), "seed length differs from context");
            if i < seeds.len() {
                seed.clone()
            } else {
                let mut r = rng::stream(cfg.rng_seed, &[INIT_STREAM, i as u64]);
                let kind = MutationKind::ALL[r.gen_range(0..MutationKind::ALL.len())];
                apply_mutation(kind, seed, &mut r)
            }
        })
        .collect();
    run(spec, cfg, ctx, refs, population)
}

fn run(
    spec: &FitnessSpec,
    cfg: &GaConfig,
    ctx: &HarmonicContext,
    refs: &[NoteSeq],
    mut population: Vec<NoteSeq>,
) -> Evolution {
    let references = References::new(refs);
    let evaluate = |pop: &[NoteSeq]| -> Vec<f64> {
        pop.par_iter()
            .map(|s| fitness_with(s, spec, ctx, &references))
            .collect()
    };
    let n = population.len();
    let mut scores = evaluate(&population);
    let mut history = vec![stats(0, &scores)];

    for generation in 1..=cfg.generations {
        let order = ranking(&scores);
        let elites = cfg.elitism_count.min(n);
        let mut next: Vec<NoteSeq> = order[..elites]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let mut next_scores: Vec<f64> = order[..elites].iter().map(|&i| scores[i]).collect();

        let wanted = n - elites;
        let pairs = wanted.div_ceil(2);
        let children: Vec<NoteSeq> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|k| {
                let mut r = rng::stream(cfg.rng_seed, &[BREED_STREAM, generation as u64, k as u64]);
                let a = &population[tournament(&scores, cfg.tournament_size, &mut r)];
                let b = &population[tournament(&scores, cfg.tournament_size, &mut r)];
                let (mut c1, mut c2) = if r.gen_bool(cfg.crossover_rate) {
                    let cut = r.gen_range(0..=a.len());
                    crossover_at(a, b, cut)
                } else {
                    (a.clone(), b.clone())
                };
                for child in [&mut c1, &mut c2] {
                    if r.gen_bool(cfg.mutation_rate) {
                        let kind = MutationKind::ALL[r.gen_range(0..MutationKind::ALL.len())];
                        *child = apply_mutation(kind, child, &mut r);
                    }
                }
                [c1, c2]
            })
            .collect();
        let children: Vec<NoteSeq> = children.into_iter().take(wanted).collect();
        next_scores.extend(evaluate(&children));
        next.extend(children);

        population = next;
        scores = next_scores;
        history.push(stats(generation, &scores));
    }

    let best = ranking(&scores)[0];
    Evolution {
        best: population.swap_remove(best),
        best_fitness: scores[best],
        history,
    }
}
