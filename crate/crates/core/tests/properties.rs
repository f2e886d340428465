use std::collections::{BTreeMap, BTreeSet};

use choralforge::audio::{encode_wav_f32, resample_linear};
use choralforge::dataset::{mix, split, MixPolicy, Split, SplitConfig, SplitSizes};
use choralforge::evalkit::{istft, quantile, sdr, si_sdr, stft, StftConfig};
use choralforge::range_transform::{fit_pitch, transpose, PitchRange, RangePreset};
use choralforge::score_io::{parse_midi, parse_text_score, to_text_score, write_midi, Note, PartName, Score, VoicePart};
use proptest::prelude::*;

fn part_strategy(name: PartName) -> impl Strategy<Value = VoicePart> {
    prop::collection::vec((0u32..4, 1u32..8, 30u8..90, 1u8..=127), 0..24).prop_map(move |steps| {
        let mut t = 0;
        let notes = steps
            .into_iter()
            .map(|(rest, dur, pitch, vel)| {
                t += rest * 120;
                let n = Note::new(t, dur * 120, pitch, vel);
                t += dur * 120;
                n
            })
            .collect();
        VoicePart::new(name.clone(), notes)
    })
}

fn score_strategy() -> impl Strategy<Value = Score> {
    let parts: Vec<_> = PartName::SATB.into_iter().map(part_strategy).collect();
    (parts, prop::sample::select(vec![60.0, 75.0, 100.0, 120.0, 125.0]))
        .prop_map(|(parts, bpm)| Score::new(parts, 480, bpm).unwrap())
}

fn range_strategy() -> impl Strategy<Value = PitchRange> {
    (0u8..=115, 12u8..=60).prop_map(|(low, width)| PitchRange::new(low, low.saturating_add(width).min(127)).unwrap())
}

fn signal(len: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1.0f32..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_score_round_trips(score in score_strategy()) {
        let back = parse_text_score(&to_text_score(&score)).unwrap();
        prop_assert_eq!(back, score);
    }

    #[test]
    fn midi_round_trips_notes(score in score_strategy()) {
        let back = parse_midi(&write_midi(&score).unwrap()).unwrap();
        prop_assert_eq!(back.ticks_per_quarter, score.ticks_per_quarter);
        prop_assert!((back.tempo_bpm - score.tempo_bpm).abs() < 1e-9);
        for part in score.parts.iter().filter(|p| !p.notes.is_empty()) {
            let got = back.part(&part.name).expect("part survives");
            prop_assert_eq!(&got.notes, &part.notes);
        }
    }

    #[test]
    fn transpose_is_invertible(score in score_strategy(), offset in -12i32..=12) {
        let there = transpose(&score, offset).unwrap();
        let back = transpose(&there, -offset).unwrap();
        prop_assert_eq!(back, score);
    }

    #[test]
    fn fit_pitch_lands_in_range_by_octaves(pitch in 0u8..=127, range in range_strategy()) {
        if let Some(q) = fit_pitch(pitch, range) {
            prop_assert!(range.contains(q));
            prop_assert_eq!(pitch % 12, q % 12);
            prop_assert_eq!(fit_pitch(q, range), Some(q));
        }
    }

    #[test]
    fn preset_ranges_always_fit(pitch in 0u8..=127, preset in prop::sample::select(RangePreset::ALL.to_vec())) {
        for part in PartName::SATB {
            prop_assert!(fit_pitch(pitch, preset.range_for(&part)).is_some());
        }
    }

    #[test]
    fn mixture_is_the_sum_of_scaled_stems(
        stems in prop::collection::vec(prop::collection::vec(-1.5f32..1.5, 64), 1..5),
        target in 0.1f32..1.0,
    ) {
        let map: BTreeMap<PartName, Vec<f32>> = PartName::SATB.into_iter().zip(stems).collect();
        let m = mix(map, &MixPolicy { normalize: true, peak_target: target }).unwrap();
        prop_assert!(m.gain > 0.0 && m.gain <= 1.0);
        let peak = m.mixture.iter().fold(0f32, |a, v| a.max(v.abs()));
        prop_assert!(peak <= target * (1.0 + 1e-6));
        for n in 0..64 {
            let sum: f32 = m.stems.values().map(|s| s[n]).sum();
            prop_assert!((m.mixture[n] - sum).abs() < 1e-6);
        }
    }

    #[test]
    fn split_partitions_every_id(n in 1usize..200, seed in any::<u64>(), train in 0.0f64..1.0) {
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let valid = (1.0 - train) / 2.0;
        let cfg = SplitConfig { seed, sizes: SplitSizes::Ratios { train, valid, test: 1.0 - train - valid } };
        let got = split(&ids, &cfg).unwrap();
        prop_assert_eq!(got.len(), n);
        let sizes = cfg.sizes.sizes(n).unwrap();
        for (k, s) in Split::ALL.into_iter().enumerate() {
            prop_assert_eq!(got.values().filter(|&&v| v == s).count(), sizes[k]);
        }
        prop_assert_eq!(split(&ids, &cfg).unwrap(), got);
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(mut v in prop::collection::vec(-100.0f64..100.0, 1..40), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = (p.min(q), p.max(q));
        let (a, b) = (quantile(&v, lo).unwrap(), quantile(&v, hi).unwrap());
        prop_assert!(a <= b);
        prop_assert!(v[0] <= a && b <= v[v.len() - 1]);
    }

    #[test]
    fn sdr_is_invariant_to_joint_scaling(r in signal(256), e in signal(256), k in 0.1f32..4.0) {
        prop_assume!(r.iter().map(|x| x * x).sum::<f32>() > 1.0);
        let rk: Vec<f32> = r.iter().map(|x| x * k).collect();
        let ek: Vec<f32> = e.iter().map(|x| x * k).collect();
        prop_assert!((sdr(&r, &e).unwrap() - sdr(&rk, &ek).unwrap()).abs() < 1e-4);
        prop_assert!((si_sdr(&r, &e).unwrap() - si_sdr(&r, &ek).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn stft_round_trip_any_length(len in 2048usize..6000, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f32> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = StftConfig::default();
        let y = istft(&stft(&x, &cfg).unwrap());
        prop_assert_eq!(y.len(), len);
        for n in cfg.interior(len) {
            prop_assert!((x[n] - y[n]).abs() < 1e-5);
        }
    }

    #[test]
    fn resampling_scales_length(len in 1usize..5000, from in prop::sample::select(vec![16000.0, 22050.0, 44100.0, 48000.0])) {
        let x = vec![0.25f32; len];
        let y = resample_linear(&x, from, 22050.0);
        let want = (len as f64 * 22050.0 / from).round() as i64;
        prop_assert!((y.len() as i64 - want).abs() <= 1);
        prop_assert!(y.iter().all(|&v| (v - 0.25).abs() < 1e-6));
    }

    #[test]
    fn wav_encoding_is_deterministic(x in signal(100)) {
        prop_assert_eq!(encode_wav_f32(&x, 22050), encode_wav_f32(&x, 22050));
    }
}

#[test]
fn split_is_independent_of_input_order() {
    let ids: Vec<String> = (0..50).map(|i| format!("id{i}")).collect();
    let mut reversed = ids.clone();
    reversed.reverse();
    let cfg = SplitConfig::default();
    assert_eq!(split(&ids, &cfg).unwrap(), split(&reversed, &cfg).unwrap());
    let distinct: BTreeSet<Split> = split(&ids, &cfg).unwrap().into_values().collect();
    assert_eq!(distinct.len(), 3);
}
