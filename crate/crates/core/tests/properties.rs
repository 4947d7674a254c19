use cadenza_core::assembler::{
    assemble, merge_voices, Part, TrackSet, MELODIC_VELOCITY, TICKS_PER_STEP,
};
use cadenza_core::evaluation::{
    focused_composition, groove_consistency, pitch_class_entropy, randomized_composition,
    scale_consistency,
};
use cadenza_core::evolution::{apply_mutation, crossover, harmony_score, GaConfig, MutationKind};
use cadenza_core::harmony_tracks::{chord_track, size_voicing, ChordParams};
use cadenza_core::melodic_tracks::{build_fitness_spec, generate_track, Direction, TargetTable};
use cadenza_core::notation::{
    extract_features, sounded_notes, Feature, HarmonicContext, NoteSeq, HOLD, REST,
};
use cadenza_core::percussion::{decompose_signature, DrumParams, DrumTables, Drummer, TOM_COUNT};
use cadenza_core::rng;
use cadenza_core::schema::{
    parse_composition, ChordMode, ChordQuality, ChordSymbol, DrumMode, Emotion, MelodicMode,
    PitchClass, Scale, ScaleKind, TimeSignature,
};
use midly::{MidiMessage, Smf, TrackEventKind};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn codes(len: usize) -> impl Strategy<Value = Vec<i16>> {
    prop::collection::vec(
        prop_oneof![3 => 30i16..100, 2 => Just(HOLD), 1 => Just(REST)],
        len,
    )
    .prop_map(|mut c| {
        if c[0] == HOLD {
            c[0] = REST;
        }
        c
    })
}

fn seq(spm: usize, measures: usize) -> impl Strategy<Value = NoteSeq> {
    codes(spm * measures).prop_map(move |c| NoteSeq::new(c, spm).unwrap())
}

fn emotion() -> impl Strategy<Value = Emotion> {
    (-1.0f64..=1.0, 0.0f64..=1.0).prop_map(|(v, a)| Emotion::new(v, a))
}

fn signature() -> impl Strategy<Value = TimeSignature> {
    (2u8..=32, prop::sample::select(vec![1u8, 2, 4, 8, 16]))
        .prop_filter_map("valid meter", |(n, d)| TimeSignature::new(n, d).ok())
}

fn c_major(len: usize) -> HarmonicContext {
    HarmonicContext::new(
        Scale::new(PitchClass::C, ScaleKind::Major),
        vec![ChordSymbol::new(PitchClass::C, ChordQuality::Maj); len],
        vec![0, 8],
    )
}

fn small_ga(seed: u64) -> GaConfig {
    GaConfig {
        population_size: 16,
        generations: 3,
        ..GaConfig::default()
    }
    .with_seed(seed)
}

fn sign(d: Direction) -> f64 {
    match d {
        Direction::Up => 1.0,
        Direction::Down => -1.0,
        Direction::Flat => 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_json_round_trips(seed in any::<u64>()) {
        let mut r = rng::stream(seed, &[1]);
        let c = randomized_composition(&mut r);
        let back = parse_composition(&c.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn steps_per_measure_fill_the_meter(ts in signature()) {
        prop_assert_eq!(ts.steps_per_measure() * ts.denominator as usize, 16 * ts.numerator as usize);
    }

    #[test]
    fn scale_sizes(root in 0i32..12, kind in prop::sample::select(ScaleKind::ALL.to_vec())) {
        let n = Scale::new(PitchClass::new(root), kind).pitch_classes().len();
        prop_assert!((5..=7).contains(&n));
    }

    #[test]
    fn durations_and_rests_cover_the_sequence(c in codes(48)) {
        let sounded: usize = sounded_notes(&c).iter().map(|n| n.duration).sum();
        let mut silent = 0;
        let mut resting = false;
        for &x in &c {
            match x {
                REST => { resting = true; silent += 1; }
                HOLD if resting => silent += 1,
                HOLD => {}
                _ => resting = false,
            }
        }
        prop_assert_eq!(sounded + silent, c.len());
    }

    #[test]
    fn features_are_deterministic_and_bounded(s in seq(16, 2)) {
        let ctx = c_major(32);
        let a = extract_features(&s, &ctx);
        let b = extract_features(&s, &ctx);
        prop_assert_eq!(a, b);
        for (_, v) in a.iter() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn scale_only_sequences_are_fully_in_scale(
        picks in prop::collection::vec((0usize..7, 2i16..8, any::<bool>()), 16)
    ) {
        const MAJOR: [i16; 7] = [0, 2, 4, 5, 7, 9, 11];
        let c: Vec<i16> = picks
            .iter()
            .enumerate()
            .map(|(i, &(d, oct, hold))| if hold && i > 0 { HOLD } else { MAJOR[d] + 12 * oct })
            .collect();
        let fv = extract_features(&NoteSeq::new(c, 16).unwrap(), &c_major(16));
        prop_assert_eq!(fv[Feature::InScaleRatio], 1.0);
    }

    #[test]
    fn operators_keep_length_and_alphabet(
        s in seq(16, 2),
        kind in prop::sample::select(MutationKind::ALL.to_vec()),
        seed in any::<u64>(),
    ) {
        let mut r = rng::stream(seed, &[2]);
        let m = apply_mutation(kind, &s, &mut r);
        prop_assert_eq!(m.len(), s.len());
        prop_assert_eq!(m.steps_per_measure(), 16);
        prop_assert!(m.codes().iter().all(|c| (HOLD..=127).contains(c)));
        prop_assert_ne!(m.codes()[0], HOLD);
    }

    #[test]
    fn crossover_takes_each_step_from_a_parent(a in seq(8, 2), b in seq(8, 2), seed in any::<u64>()) {
        let mut r = rng::stream(seed, &[3]);
        let (x, y) = crossover(&a, &b, &mut r).unwrap();
        for i in 0..a.len() {
            let pair = [x.codes()[i], y.codes()[i]];
            prop_assert!(pair == [a.codes()[i], b.codes()[i]] || pair == [b.codes()[i], a.codes()[i]]);
        }
    }

    #[test]
    fn harmony_is_symmetric_and_bounded(a in seq(16, 1), b in seq(16, 1)) {
        let ab = harmony_score(&a, &b).unwrap();
        let ba = harmony_score(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn targets_bounded_and_monotone(
        mode in prop::sample::select(MelodicMode::ALL.to_vec()),
        v1 in -1.0f64..=1.0, v2 in -1.0f64..=1.0,
        a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0,
    ) {
        let (vl, vh) = (v1.min(v2), v1.max(v2));
        let (al, ah) = (a1.min(a2), a1.max(a2));
        let base = build_fitness_spec(mode, Emotion::new(vl, al));
        let more_v = build_fitness_spec(mode, Emotion::new(vh, al));
        let more_a = build_fitness_spec(mode, Emotion::new(vl, ah));
        let table = TargetTable::shipped();
        for f in Feature::ALL {
            let t = base.target(f);
            if t.weight == 0.0 {
                continue;
            }
            prop_assert!((0.0..=1.0).contains(&t.mean));
            let row = table.row(f);
            prop_assert!(sign(row.valence) * (more_v.target(f).mean - t.mean) >= -1e-12, "{:?}", f);
            prop_assert!(sign(row.arousal) * (more_a.target(f).mean - t.mean) >= -1e-12, "{:?}", f);
        }
    }

    #[test]
    fn size_voicing_between_two_and_six(
        q in prop::sample::select(ChordQuality::ALL.to_vec()),
        root in 0i32..12,
        arousal in 0.0f64..=1.0,
    ) {
        let n = size_voicing(&ChordSymbol::new(PitchClass::new(root), q), arousal).len();
        prop_assert!((2..=6).contains(&n));
    }

    #[test]
    fn chord_voices_span_the_progression(
        chords in prop::collection::vec((0i32..12, prop::sample::select(ChordQuality::ALL.to_vec())), 1..6),
        e in emotion(),
        mode in prop::sample::select(vec![ChordMode::Continuous, ChordMode::Arpeggio, ChordMode::Repeated]),
        seed in any::<u64>(),
    ) {
        let chords: Vec<ChordSymbol> = chords.into_iter().map(|(r, q)| ChordSymbol::new(PitchClass::new(r), q)).collect();
        let mut r = rng::stream(seed, &[4]);
        let track = chord_track(&chords, e, mode, 12, &ChordParams::default(), &mut r);
        prop_assert!(!track.voices.is_empty());
        for v in &track.voices {
            prop_assert_eq!(v.len(), chords.len() * 12);
        }
    }

    #[test]
    fn meters_decompose_into_table_rows(ts in signature()) {
        let groups = decompose_signature(ts).unwrap();
        prop_assert_eq!(groups.iter().map(|g| g.beats as u32).sum::<u32>(), ts.numerator as u32);
        prop_assert!(groups.iter().all(|g| (2..=9).contains(&g.beats)));
    }

    #[test]
    fn drum_grids_fit_and_use_two_hands(
        ts in signature(),
        e in emotion(),
        mode in prop::sample::select(vec![DrumMode::OnlyBeat, DrumMode::DrumSolo, DrumMode::Standard]),
        measures in 1usize..5,
        seed in any::<u64>(),
    ) {
        let params = DrumParams::default();
        let drummer = Drummer { tables: DrumTables::shipped(), params: &params, time_signature: ts, emotion: e, mode };
        let grid = drummer.track(measures, &mut rng::stream(seed, &[5]));
        prop_assert_eq!(grid.states.len(), measures * ts.steps_per_measure());
        prop_assert!(grid.states.iter().all(|s| s.hand_count() <= 2));
        let again = drummer.track(measures, &mut rng::stream(seed, &[5]));
        prop_assert_eq!(grid, again);
    }

    #[test]
    fn entropy_and_scale_ignore_transposition(
        pitches in prop::collection::vec(24u8..100, 1..64),
        shift in 0u8..12,
    ) {
        let moved: Vec<u8> = pitches.iter().map(|p| p + shift).collect();
        prop_assert!((pitch_class_entropy(&pitches).unwrap() - pitch_class_entropy(&moved).unwrap()).abs() < 1e-9);
        prop_assert!((scale_consistency(&pitches).unwrap() - scale_consistency(&moved).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn metrics_match_brute_force(
        pitches in prop::collection::vec(0u8..128, 1..40),
        onsets in prop::collection::btree_set(0u64..24, 1..20),
    ) {
        let mut counts = BTreeMap::new();
        for p in &pitches {
            *counts.entry(p % 12).or_insert(0usize) += 1;
        }
        let n = pitches.len() as f64;
        let h: f64 = counts.values().map(|&c| c as f64 / n).map(|q| -q * q.log2()).sum();
        prop_assert!((pitch_class_entropy(&pitches).unwrap() - h).abs() < 1e-9);

        let mut best = 0.0f64;
        for steps in [[0, 2, 4, 5, 7, 9, 11], [0, 2, 3, 5, 7, 8, 10]] {
            for root in 0..12u8 {
                let inside = pitches.iter().filter(|p| steps.iter().any(|s| (root + s) % 12 == *p % 12)).count();
                best = best.max(100.0 * inside as f64 / n);
            }
        }
        prop_assert!((scale_consistency(&pitches).unwrap() - best).abs() < 1e-9);

        // Two measures of twelve slots.
        let onsets: Vec<u64> = onsets.into_iter().collect();
        let got = groove_consistency(&onsets, 12);
        if onsets.iter().all(|&t| t < 12) {
            prop_assert!(got.is_err());
        } else {
            let first: Vec<bool> = (0..12).map(|t| onsets.contains(&t)).collect();
            let second: Vec<bool> = (12..24).map(|t| onsets.contains(&t)).collect();
            let same = first.iter().zip(&second).filter(|(x, y)| x == y).count();
            prop_assert!((got.unwrap() - 100.0 * same as f64 / 12.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bass_stays_low_and_motif_high(
        mode in prop::sample::select(MelodicMode::ALL.to_vec()),
        e in emotion(),
        seed in any::<u64>(),
    ) {
        let ctx = c_major(32);
        let spec = build_fitness_spec(mode, e);
        let t = generate_track(mode, &spec, e, &ctx, &[], 16, &small_ga(seed));
        prop_assert_eq!(t.seq.len(), 32);
        let pitches = t.seq.codes().iter().filter(|&&c| c >= 0).map(|&c| c as u8);
        match mode.role() {
            cadenza_core::schema::Role::Bass => for p in pitches { prop_assert!(p <= 60, "{}", p) },
            cadenza_core::schema::Role::Motif => for p in pitches { prop_assert!(p >= 60, "{}", p) },
            _ => {}
        }
    }

    #[test]
    fn short_riff_repeats_its_measure(e in emotion(), seed in any::<u64>()) {
        let ctx = c_major(64);
        let spec = build_fitness_spec(MelodicMode::ShortRiff, e);
        let t = generate_track(MelodicMode::ShortRiff, &spec, e, &ctx, &[], 16, &small_ga(seed));
        let c = t.seq.codes();
        let shape = |m: usize| c[m * 16..(m + 1) * 16].iter().map(|&x| x < 0).collect::<Vec<_>>();
        for m in 1..4 {
            prop_assert_eq!(shape(m), shape(0));
            let first = c[..16].iter().zip(&c[m * 16..(m + 1) * 16]).find(|(a, _)| **a >= 0);
            if let Some((&a, &b)) = first {
                let d = b - a;
                for (x, y) in c[..16].iter().zip(&c[m * 16..(m + 1) * 16]) {
                    if *x >= 0 {
                        prop_assert_eq!(*y - *x, d);
                    }
                }
            }
        }
    }

    #[test]
    fn assembled_notes_read_back(voices in prop::collection::vec(seq(16, 2), 1..4), bpm in 40.0f64..200.0) {
        let mut set = TrackSet::new("main", bpm, TimeSignature::new(4, 4).unwrap(), 32);
        set.parts.push(Part { name: "lead".into(), channel: 0, program: Some(0), events: merge_voices(&voices, 0, MELODIC_VELOCITY) });
        let bytes = assemble(&focused_composition(), &[set]).unwrap();
        let smf = Smf::parse(&bytes).unwrap();
        let mut open: BTreeMap<u8, Vec<u64>> = BTreeMap::new();
        let mut heard = Vec::new();
        for track in &smf.tracks {
            let mut tick = 0u64;
            for ev in track {
                tick += ev.delta.as_int() as u64;
                if let TrackEventKind::Midi { message, .. } = ev.kind {
                    match message {
                        MidiMessage::NoteOn { key, vel } if vel > 0 => open.entry(key.as_int()).or_default().push(tick),
                        MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                            let on = open.get_mut(&key.as_int()).and_then(|v| v.pop());
                            prop_assert!(on.is_some(), "note-off without note-on");
                            heard.push((on.unwrap(), tick, key.as_int()));
                        }
                        _ => {}
                    }
                }
            }
        }
        prop_assert!(open.values().all(|v| v.is_empty()), "unterminated notes");
        let mut expected: Vec<(u64, u64, u8)> = voices
            .iter()
            .flat_map(|v| v.notes())
            .map(|n| (n.onset as u64 * TICKS_PER_STEP, (n.onset + n.duration) as u64 * TICKS_PER_STEP, n.pitch))
            .collect();
        expected.sort();
        heard.sort();
        prop_assert_eq!(heard.len(), expected.len());
        // Unison overlaps between voices can pair differently; onsets and keys still match.
        let on = |v: &[(u64, u64, u8)]| v.iter().map(|&(a, _, k)| (a, k)).collect::<Vec<_>>();
        prop_assert_eq!(on(&heard), on(&expected));
    }
}

#[test]
fn fill_chain_transitions_follow_the_matrix() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let chain = &DrumTables::shipped().fills;
    let mut r = rng::stream(99, &[6]);
    // The most likely opening state gets the most samples.
    let from = (0..chain.start.len())
        .max_by(|&a, &b| chain.start[a].total_cmp(&chain.start[b]))
        .unwrap();
    let trials = 20_000;
    let mut counts = vec![0usize; 1 << TOM_COUNT];
    for _ in 0..trials {
        counts[chain.next(from, &mut r)] += 1;
    }
    let row = &chain.matrix[from];
    let mut stat = 0.0;
    let mut cells = 0;
    for (s, &p) in row.iter().enumerate() {
        if p > 0.0 {
            let e = p * trials as f64;
            stat += (counts[s] as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(counts[s], 0, "state {s} has zero probability");
        }
    }
    if cells > 1 {
        let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "chi-square {stat} over {cells} cells, p = {p}");
    }
}
