use std::path::{Path, PathBuf};

use sentic_core::graph::{normalize_concept, EmotionCategory};
use sentic_core::hourglass::{polarity, quantize_vector};
use sentic_core::lexicon::{
    export_lexicon, render_lexicon, run_pipeline, EmotionSource, PipelineConfig, PipelineError,
    LEXICON_HEADER,
};
use sentic_core::predictor::PredictorError;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn fixture_config() -> PipelineConfig {
    PipelineConfig::new(
        data("conceptnet.tsv"),
        data("affectnet_labels.tsv"),
        data("singlish_labels.tsv"),
        data("benchmark.tsv"),
    )
}

#[test]
fn entries_are_consistent_with_the_hourglass() {
    let cfg = fixture_config();
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.entries.len(), 30);
    assert_eq!(out.training.skipped.len(), 0);
    for e in &out.entries {
        assert_eq!(
            e.polarity.to_bits(),
            polarity(&[e.sentic]).unwrap().to_bits()
        );
        assert_eq!(
            e.levels,
            quantize_vector(e.sentic, cfg.neutral_delta).unwrap()
        );
    }
    let sorted = out.entries.windows(2).all(|w| w[0].concept < w[1].concept);
    assert!(sorted);

    let by_name = |s: &str| {
        out.entries
            .iter()
            .find(|e| e.concept.as_str() == s)
            .unwrap()
    };
    assert_eq!(by_name("tu_lan").emotion, Some(EmotionCategory::Anger));
    assert_eq!(by_name("tu_lan").emotion_source, EmotionSource::Manual);
    // two labels in the file: the rule decides
    assert_eq!(by_name("sian").emotion_source, EmotionSource::Rule);
}

#[test]
fn export_is_byte_stable_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    export_lexicon(&run_pipeline(&fixture_config()).unwrap().entries, &p1).unwrap();
    export_lexicon(&run_pipeline(&fixture_config()).unwrap().entries, &p2).unwrap();
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LEXICON_HEADER));
    for line in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 11, "{line}");
        for f in fields[1..5].iter().chain([&fields[10]]) {
            assert_eq!(f.split_once('.').unwrap().1.len(), 6, "{f}");
        }
    }
}

#[test]
fn empty_and_unwritable_exports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.tsv");
    export_lexicon(&[], &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        format!("{LEXICON_HEADER}\n")
    );
    let bad = dir.path().join("missing-dir").join("x.tsv");
    assert!(matches!(
        export_lexicon(&[], &bad),
        Err(PipelineError::Export { .. })
    ));
    assert_eq!(render_lexicon(&[]), format!("{LEXICON_HEADER}\n"));
}

#[test]
fn benchmark_without_overlap_fails_at_training() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.tsv");
    std::fs::write(&bench, "unknown_concept\t0.1\t0.2\t0.3\t0.4\n").unwrap();
    let mut cfg = fixture_config();
    cfg.benchmark = bench;
    assert!(matches!(
        run_pipeline(&cfg),
        Err(PipelineError::Train(PredictorError::NoOverlap))
    ));
}

#[test]
fn small_k_and_inferences() {
    let mut cfg = fixture_config();
    cfg.k = 3;
    cfg.tau = 0.1;
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.space.dim(), 3);
    assert_eq!(out.entries.len(), 30);
    assert!(out.inferences.windows(2).all(|w| w[0].score >= w[1].score));
    let gei_yan = normalize_concept("gei_yan").unwrap();
    let near: Vec<_> = out
        .space
        .nearest_neighbors(&gei_yan, 2)
        .unwrap()
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    assert!(near.iter().any(|c| c.as_str() == "see_buay"));
}
