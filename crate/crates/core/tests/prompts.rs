use std::path::{Path, PathBuf};
use std::sync::Arc;

use fsbench_core::data::{load_csv_str, sample_for_prompt, stratified_split, DatasetManifest, LoadOptions};
use fsbench_core::llm::{
    build_hybrid_prompt, call_provider, llm_feature_scores, parse_scores, ChatProvider, LlmSelector, MockBehavior,
    MockProvider, ProviderConfig, HYBRID_RESPONSE_FORMAT, HYBRID_SYSTEM_PROMPT,
};
use fsbench_core::{Dataset, ForestParams, Pipeline};

fn here(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn golden(name: &str) -> String {
    let text = std::fs::read_to_string(here(&format!("tests/golden/{name}"))).unwrap();
    text.strip_suffix('\n').unwrap_or(&text).to_string()
}

fn pima() -> Dataset {
    let manifest = DatasetManifest {
        name: "pima".into(),
        path: here("../../data/pima.csv"),
        options: LoadOptions::new("Outcome"),
    };
    manifest.load().unwrap()
}

#[test]
fn hybrid_prompt_embeds_both_blocks_verbatim() {
    let ds = pima();
    let split = stratified_split(&ds, 0.2, 7).unwrap();
    let csv = sample_for_prompt(&ds, &split, 200, 7).unwrap();
    let spec = build_hybrid_prompt(&ds, &csv, "Context.").unwrap();

    let system = golden("system_prompt_block.txt");
    let format = golden("response_format_block.txt");
    assert!(spec.rendered.contains(&system));
    assert!(spec.rendered.contains(&format));
    assert_eq!(HYBRID_SYSTEM_PROMPT.trim_end(), system);
    assert_eq!(HYBRID_RESPONSE_FORMAT.trim_end(), format);
    assert!(spec
        .rendered
        .contains("The score range is [0.0, 1.0], and the score of each feature should be different"));
    for name in [
        "*random forest*",
        "*forward sequential selection*",
        "*backward sequential selection*",
        "*recursive feature elimination (RFE)*",
        "*minimum redundancy maximum relevance (MRMR)*",
        "*mutual information (MI)*",
    ] {
        assert!(spec.rendered.contains(name), "{name}");
    }
    let sample = spec.sample_csv.as_deref().unwrap();
    assert!(spec.rendered.ends_with(sample));
    assert_eq!(sample.lines().count(), 201);
    assert!(sample.lines().next().unwrap().ends_with(",Class"));
    assert!(spec.description.is_none() && spec.examples.is_none() && spec.cot.is_none());
}

#[test]
fn hybrid_rendering_matches_golden_file() {
    let csv = "Glucose,BMI,Class\n148,33.6,1\n85,26.6,0\n";
    let ds = load_csv_str(csv, &LoadOptions { name: Some("tiny".into()), ..LoadOptions::new("Class") }).unwrap();
    let spec = build_hybrid_prompt(&ds, csv, "Task context for the tiny dataset.").unwrap();
    assert_eq!(spec.rendered, golden("hybrid_tiny.txt"));
    let again = build_hybrid_prompt(&ds, csv, "Task context for the tiny dataset.").unwrap();
    assert_eq!(spec.rendered, again.rendered);
}

#[test]
fn one_row_sample_still_renders() {
    let csv = "Glucose,BMI,Class\n148,33.6,1\n";
    let ds = load_csv_str("Glucose,BMI,Class\n148,33.6,1\n85,26.6,0\n", &LoadOptions::new("Class")).unwrap();
    assert!(build_hybrid_prompt(&ds, csv, "C").is_ok());
}

#[test]
fn echo_fixture_replays_the_sample_payload() {
    let ds = pima();
    let split = stratified_split(&ds, 0.2, 7).unwrap();
    let fixture = here("tests/fixtures/sample_response.txt");
    let mock = MockProvider::new(MockBehavior::EchoFixture { path: fixture.clone() }, &ds, &split, ForestParams::default())
        .unwrap();
    let raw = mock.complete("system", "user", 0.1).unwrap();
    let entries = parse_scores(&raw, &["Glucose".to_string()]).unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].concept, "Glucose");
    assert_eq!(entries[0].score, 0.95);

    let csv = sample_for_prompt(&ds, &split, 20, 7).unwrap();
    let spec = build_hybrid_prompt(&ds, &csv, "C").unwrap();
    let config = ProviderConfig::mock(MockBehavior::EchoFixture { path: fixture });
    let ex = call_provider(&spec, &mock, &config, None, &["Glucose".to_string()]).unwrap();
    assert!(ex.valid);
    assert_eq!(ex.raw_response, raw);
}

#[test]
fn oracle_mock_matches_forest_on_the_sent_sample() {
    let ds = pima();
    let split = stratified_split(&ds, 0.2, 7).unwrap();
    let params = ForestParams { n_trees: 50, seed: 7, ..ForestParams::default() };
    let mock = MockProvider::new(MockBehavior::RfOracle, &ds, &split, params).unwrap();
    let sel = LlmSelector::new(ProviderConfig::mock(MockBehavior::RfOracle), Arc::new(mock), None);
    let run = llm_feature_scores(&sel, &ds, &split, Pipeline::Hybrid, 7).unwrap();

    let csv = run.exchanges[0].prompt.sample_csv.clone().unwrap();
    let kinds = ds.features().iter().map(|f| (f.name.clone(), f.kind)).collect();
    let sample = load_csv_str(&csv, &LoadOptions { kinds, ..LoadOptions::new("Class") }).unwrap();
    let all = fsbench_core::Split {
        train_indices: (0..sample.n_samples()).collect(),
        test_indices: vec![],
        seed: 0,
    };
    let direct = fsbench_core::forest::rf_feature_scores(&sample, &all, &params).unwrap();
    assert_eq!(run.scores.ranking, direct.ranking);
    for (name, s) in &direct.scores {
        assert!((run.scores.scores[name] - s).abs() <= 1e-6, "{name}");
    }
}
