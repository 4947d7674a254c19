//! Genetic algorithm for melodic tracks.
//!
//! Individuals are [`NoteSeq`]s. Each generation is evaluated, parents are
//! picked by tournament, recombined by one-point crossover, mutated by one of
//! the musically meaningful operators, and the best individuals are carried
//! over unchanged.

mod fitness;
mod ga;
mod mutation;

pub use fitness::{
    feature_fitness, fitness, harmony_of_sounding, harmony_score, interval_score, LengthMismatch,
    References,
};
pub use ga::{crossover, evolve, evolve_from, Evolution, GenerationStats};
pub use mutation::{
    apply_mutation, sample as sample_mutation, Mutation, MutationKind, NORMAL_NOTE_STEPS,
};

use crate::notation::Feature;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("no feature has a positive weight")]
    NoWeights,
    #[error("feature {feature}: {message}")]
    Target {
        feature: &'static str,
        message: String,
    },
    #[error("harmony weight must be finite and non-negative")]
    HarmonyWeight,
    #[error("{0}")]
    Config(String),
}

/// Desired value of one feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTarget {
    pub mean: f64,
    pub deviation: f64,
    pub weight: f64,
}

impl FeatureTarget {
    pub const UNUSED: FeatureTarget = FeatureTarget {
        mean: 0.0,
        deviation: 1.0,
        weight: 0.0,
    };

    pub fn new(mean: f64, deviation: f64, weight: f64) -> Self {
        FeatureTarget {
            mean,
            deviation,
            weight,
        }
    }
}

/// Inclusive MIDI pitch band a track may sound in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchBand {
    pub low: u8,
    pub high: u8,
}

impl PitchBand {
    pub const FULL: PitchBand = PitchBand { low: 0, high: 127 };

    pub fn new(low: u8, high: u8) -> Self {
        assert!(
            low <= high && high <= 127 && high - low >= 11,
            "band must span an octave"
        );
        PitchBand { low, high }
    }

    /// Moves `pitch` by whole octaves into the band.
    pub fn fold(&self, pitch: i32) -> u8 {
        let mut p = pitch;
        while p > self.high as i32 {
            p -= 12;
        }
        while p < self.low as i32 {
            p += 12;
        }
        p as u8
    }

    pub fn contains(&self, pitch: u8) -> bool {
        (self.low..=self.high).contains(&pitch)
    }
}

/// Targets for every feature plus the weight of the cross-track harmony term.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessSpec {
    pub targets: [FeatureTarget; Feature::COUNT],
    pub harmony_weight: f64,
    /// Register random individuals are drawn from.
    pub register: PitchBand,
}

impl FitnessSpec {
    /// All features disabled; callers switch on what they need.
    pub fn unused() -> Self {
        FitnessSpec {
            targets: [FeatureTarget::UNUSED; Feature::COUNT],
            harmony_weight: 0.0,
            register: PitchBand::FULL,
        }
    }

    /// A spec driven by a single feature.
    pub fn single(feature: Feature, target: FeatureTarget) -> Self {
        let mut spec = FitnessSpec::unused();
        spec.targets[feature.index()] = target;
        spec
    }

    pub fn target(&self, feature: Feature) -> &FeatureTarget {
        &self.targets[feature.index()]
    }

    pub fn target_mut(&mut self, feature: Feature) -> &mut FeatureTarget {
        &mut self.targets[feature.index()]
    }

    pub fn total_weight(&self) -> f64 {
        self.targets.iter().map(|t| t.weight).sum()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.targets.iter().any(|t| t.weight > 0.0) {
            return Err(SpecError::NoWeights);
        }
        for f in Feature::ALL {
            let t = self.target(f);
            let bad = |message: String| SpecError::Target {
                feature: f.name(),
                message,
            };
            if !(0.0..=1.0).contains(&t.mean) {
                return Err(bad(format!("mean {} outside [0, 1]", t.mean)));
            }
            if !t.deviation.is_finite() || t.deviation < 0.01 {
                return Err(bad(format!("deviation {} below 0.01", t.deviation)));
            }
            if !t.weight.is_finite() || t.weight < 0.0 {
                return Err(bad(format!("weight {} is negative", t.weight)));
            }
        }
        if !self.harmony_weight.is_finite() || self.harmony_weight < 0.0 {
            return Err(SpecError::HarmonyWeight);
        }
        Ok(())
    }
}

/// Genetic algorithm hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Probability that a child is mutated (once) in a generation.
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub rng_seed: u64,
    pub elitism_count: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 256,
            generations: 100,
            tournament_size: 4,
            mutation_rate: 0.3,
            crossover_rate: 0.9,
            rng_seed: 0,
            elitism_count: 2,
        }
    }
}

impl GaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let err = |m: &str| Err(SpecError::Config(m.to_string()));
        if self.population_size == 0 {
            return err("population_size must be positive");
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return err("tournament_size must be in 1..=population_size");
        }
        if self.elitism_count > self.population_size {
            return err("elitism_count exceeds population_size");
        }
        for (name, r) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SpecError::Config(format!("{name} {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}
