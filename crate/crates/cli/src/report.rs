use cadenza_core::pipeline::{GenerationConfig, Rendering, TrackContent};
use cadenza_core::schema::Composition;
use serde::Serialize;
use std::fmt::Write;
use std::path::Path;

#[derive(Serialize)]
pub struct TrackReport {
    pub index: usize,
    pub role: &'static str,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_fitness: Option<f64>,
}

#[derive(Serialize)]
pub struct PassReport {
    pub section: String,
    pub occurrence: usize,
    pub repeat: u32,
    pub valence: f64,
    pub arousal: f64,
    pub tracks: Vec<TrackReport>,
}

#[derive(Serialize)]
pub struct GenerationReport<'a> {
    pub name: &'a str,
    pub seed: u64,
    pub output: String,
    pub midi_bytes: usize,
    pub config: &'a GenerationConfig,
    pub regenerated: &'a [(String, usize)],
    pub passes: Vec<PassReport>,
}

impl<'a> GenerationReport<'a> {
    pub fn new(
        composition: &'a Composition,
        seed: u64,
        config: &'a GenerationConfig,
        output: &Path,
        rendering: &'a Rendering,
    ) -> Self {
        let passes = rendering
            .passes
            .iter()
            .map(|p| {
                let section = &composition.sections[&p.section_id];
                PassReport {
                    section: p.section_id.clone(),
                    occurrence: p.occurrence,
                    repeat: p.repeat,
                    valence: p.emotion.valence,
                    arousal: p.emotion.arousal,
                    tracks: section
                        .tracks
                        .iter()
                        .zip(&p.tracks)
                        .enumerate()
                        .map(|(index, (spec, content))| TrackReport {
                            index,
                            role: spec.role.token(),
                            mode: spec.mode.token(),
                            best_fitness: match content {
                                TrackContent::Melodic { best_fitness, .. } => Some(*best_fitness),
                                _ => None,
                            },
                        })
                        .collect(),
                }
            })
            .collect();
        GenerationReport {
            name: &composition.name,
            seed,
            output: output.display().to_string(),
            midi_bytes: rendering.midi.len(),
            config,
            regenerated: &rendering.regenerated,
            passes,
        }
    }
}

/// Per-generation best and mean fitness of every evolved track.
pub fn fitness_csv(composition: &Composition, rendering: &Rendering) -> String {
    let mut out = String::from("section,occurrence,repeat,track,role,mode,generation,best,mean\n");
    for p in &rendering.passes {
        let section = &composition.sections[&p.section_id];
        for (i, (spec, content)) in section.tracks.iter().zip(&p.tracks).enumerate() {
            if let TrackContent::Melodic { history, .. } = content {
                for g in history {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        p.section_id,
                        p.occurrence,
                        p.repeat,
                        i,
                        spec.role.token(),
                        spec.mode.token(),
                        g.generation,
                        g.best,
                        g.mean
                    );
                }
            }
        }
    }
    out
}
