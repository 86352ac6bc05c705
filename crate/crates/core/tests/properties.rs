use fcgs_core::chaos_game::{cell_index, cgr_map, compute_fcgr};
use fcgs_core::cwt_engine::{cwt, MorletParams, ScaleGrid, Scalogram};
use fcgs_core::intron_scan::{call_regions, evaluate, BandEnergyProfile, Threshold};
use fcgs_core::sequence_io::{
    parse_annotations, write_annotations, Annotation, AnnotationTrack, NucleotideSequence,
    RegionLabel,
};
use proptest::prelude::*;

fn seq(s: &str) -> NucleotideSequence {
    NucleotideSequence::new("p", s).unwrap()
}

/// Grid cell of a point of the unit square at resolution 2^k, row 0 on top.
fn quantize(x: f64, y: f64, k: usize) -> (usize, usize) {
    let side = 1usize << k;
    let col = ((x * side as f64).floor() as usize).min(side - 1);
    let row = side - 1 - ((y * side as f64).floor() as usize).min(side - 1);
    (row, col)
}

fn small_grid() -> ScaleGrid {
    ScaleGrid::log(1.0, 16.0, 6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_point_sits_in_its_word_cell(s in "[ACGT]{12,60}", k in 1usize..=12) {
        let sq = seq(&s);
        let traj = cgr_map(&sq).unwrap();
        for i in (k - 1)..sq.len() {
            let word = &sq.residues()[i + 1 - k..=i];
            let p = traj.points[i];
            prop_assert_eq!(cell_index(word).unwrap(), quantize(p.x, p.y, k));
        }
    }

    #[test]
    fn cells_nest_when_the_oldest_base_is_dropped(w in "[ACGT]{2,12}") {
        let (r, c) = cell_index(w.as_bytes()).unwrap();
        let (r1, c1) = cell_index(&w.as_bytes()[1..]).unwrap();
        prop_assert_eq!((r >> 1, c >> 1), (r1, c1));
    }

    #[test]
    fn fcgr_is_a_distribution_of_whole_counts(s in "[ACGTN]{8,300}", k in 1usize..5) {
        let sq = seq(&s);
        if let Ok(m) = compute_fcgr(&sq, k) {
            prop_assert!((m.total() - 1.0).abs() < 1e-9);
            let n = m.counted_words() as f64;
            for v in m.cells() {
                prop_assert!((v * n - (v * n).round()).abs() < 1e-6);
            }
            let csv = m.to_csv_string();
            let back = fcgs_core::FcgrMatrix::from_csv(csv.as_bytes()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn cwt_is_linear(
        x in prop::collection::vec(-1.0f64..1.0, 64..200),
        alpha in -3.0f64..3.0,
    ) {
        let p = MorletParams::default();
        let g = small_grid();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (i as f64 * 0.37).sin() - v).collect();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
        let (sx, sy, ss) = (cwt(&x, &g, &p).unwrap(), cwt(&y, &g, &p).unwrap(), cwt(&sum, &g, &p).unwrap());
        let scale = ss.coefficients().iter().map(|c| c.norm()).fold(1.0, f64::max);
        for ((a, b), s) in sx.coefficients().iter().zip(sy.coefficients()).zip(ss.coefficients()) {
            prop_assert!((a * alpha + b - s).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn modulus_scales_with_the_signal(x in prop::collection::vec(-1.0f64..1.0, 32..120), alpha in 0.1f64..10.0) {
        let p = MorletParams::default();
        let g = small_grid();
        let a = cwt(&x, &g, &p).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * alpha).collect();
        let b = cwt(&scaled, &g, &p).unwrap();
        for (m, n) in a.modulus().iter().zip(b.modulus()) {
            prop_assert!(*m >= 0.0);
            prop_assert!((m * alpha - n).abs() <= 1e-9 * (1.0 + n));
        }
    }

    #[test]
    fn scalogram_binary_round_trips(x in prop::collection::vec(-1.0f64..1.0, 16..80), start in 1u64..1_000_000) {
        let mut s = cwt(&x, &small_grid(), &MorletParams::default()).unwrap();
        s.start_coordinate = start;
        s.source_id = "chrX".into();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        prop_assert_eq!(Scalogram::read_binary(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn calls_are_sorted_disjoint_and_long_enough(
        values in prop::collection::vec(0.0f64..1.0, 1..600),
        min_len in 1usize..60,
        smoothing in 0usize..30,
        fixed in prop::option::of(0.0f64..1.0),
    ) {
        let p = BandEnergyProfile { values, band: (0.1, 0.2), start_coordinate: 101, seq_id: "c".into() };
        let th = fixed.map_or(Threshold::Auto, Threshold::Fixed);
        let call = call_regions(&p, th, min_len, smoothing).unwrap();
        for iv in &call.intervals {
            prop_assert!(iv.end - iv.start + 1 >= min_len as u64);
            prop_assert!(iv.start >= 101 && iv.end < 101 + p.values.len() as u64);
        }
        for w in call.intervals.windows(2) {
            prop_assert!(w[0].end < w[1].start);
        }
    }

    #[test]
    fn evaluating_truth_against_itself_is_perfect(cuts in prop::collection::btree_set(1u64..5000, 2..20)) {
        let cuts: Vec<u64> = cuts.into_iter().collect();
        let entries: Vec<Annotation> = cuts
            .chunks_exact(2)
            .map(|c| Annotation { seq_id: "c".into(), start: c[0], end: c[1], label: RegionLabel::Intron })
            .collect();
        let track = AnnotationTrack::from_entries(entries.clone()).unwrap();
        let calls = fcgs_core::RegionCall {
            seq_id: "c".into(),
            intervals: entries
                .iter()
                .map(|a| fcgs_core::intron_scan::CalledInterval { start: a.start, end: a.end, mean_energy: 1.0 })
                .collect(),
            threshold_used: 0.0,
            min_len: 1,
            smoothing: 0,
        };
        let m = evaluate(&calls, &track, RegionLabel::Intron).unwrap();
        prop_assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        prop_assert_eq!(m.mean_boundary_offset, Some(0.0));

        let mut text = Vec::new();
        write_annotations(&track, &mut text).unwrap();
        prop_assert_eq!(parse_annotations(std::str::from_utf8(&text).unwrap()).unwrap(), track);
    }
}
