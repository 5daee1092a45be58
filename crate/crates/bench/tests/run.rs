mod common;

use std::path::Path;

use common::*;
use unisim_bench::report::{RADAR_FILE, REPORT_FILE, RESULTS_FILE};
use unisim_bench::{run_and_write, run_benchmark, BenchmarkReport, RunConfig, RunFilter};
use unisim_core::{TaskFamily, TaskKind};

fn load(path: &Path) -> RunConfig {
    RunConfig::load(path).unwrap()
}

#[test]
fn reruns_produce_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(&standard_suite(dir.path()));
    let a = run_benchmark(&cfg, &RunFilter::default()).unwrap();
    let b = run_benchmark(&cfg, &RunFilter::default()).unwrap();
    assert_eq!(
        a.without_timestamps().to_json(),
        b.without_timestamps().to_json()
    );
    assert!(a.errors.is_empty(), "{:?}", a.errors);
    assert_eq!(a.results.len(), 6);
    assert_eq!(a.meta.config_hash, cfg.config_hash);
    assert_eq!(a.meta.seed, 5);
}

#[test]
fn radar_has_one_axis_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&load(&standard_suite(dir.path())), &RunFilter::default()).unwrap();
    let radar = report.radar();
    assert_eq!(radar.len(), 2);
    for axes in radar.values() {
        let keys: Vec<_> = axes.keys().copied().collect();
        assert_eq!(
            keys,
            vec![TaskFamily::Img2Afc, TaskFamily::Iqa, TaskFamily::Ooo]
        );
    }
}

#[test]
fn counts_match_manifests_and_accuracies_are_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&load(&standard_suite(dir.path())), &RunFilter::default()).unwrap();
    for backend in ["hash", "coin"] {
        let total: usize = report
            .results
            .iter()
            .filter(|r| r.backend == backend)
            .map(|r| r.count)
            .sum();
        assert_eq!(total, 60 + 80 + 45);
    }
    for r in &report.results {
        assert!((0.0..=1.0).contains(&r.accuracy));
        assert_eq!(r.unparseable_rate.is_some(), r.backend == "coin");
    }
}

#[test]
fn iqa_mode_is_selected_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&load(&standard_suite(dir.path())), &RunFilter::default()).unwrap();
    let [choice] = report.mode_selection.as_slice() else {
        panic!("{:?}", report.mode_selection)
    };
    assert_eq!(
        (choice.backend.as_str(), choice.task),
        ("hash", TaskFamily::Iqa)
    );
    assert_eq!(choice.shard_accuracy.len(), 2);
    let best = choice
        .shard_accuracy
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(choice.shard_accuracy[&choice.mode] >= *best.1);
    let iqa = report
        .results
        .iter()
        .find(|r| r.backend == "hash" && r.dataset == "iqa")
        .unwrap();
    assert_eq!(iqa.iqa_mode.as_deref(), Some(choice.mode.as_str()));
}

#[test]
fn fixed_mode_policy_skips_selection() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_dataset(dir.path(), "paa", &paa("paa", 30));
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        config_text(&[("paa", &p)], "iqa_mode = \"prompt_pair\""),
    )
    .unwrap();
    let report = run_benchmark(&load(&cfg_path), &RunFilter::default()).unwrap();
    assert!(report.mode_selection[0].shard_accuracy.is_empty());
    let r = report.results.iter().find(|r| r.backend == "hash").unwrap();
    assert_eq!(
        (r.task, r.iqa_mode.as_deref()),
        (
            TaskKind::Paa(unisim_core::PerceptualAttribute::Contrast),
            Some("prompt_pair")
        )
    );
}

#[test]
fn retrieval_reports_mean_of_medium_and_hard() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_dataset(dir.path(), "ret", &retrieval("ret"));
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, config_text(&[("ret", &p)], "")).unwrap();
    let report = run_benchmark(&load(&cfg_path), &RunFilter::default()).unwrap();
    let [r] = report.results.as_slice() else {
        panic!("{:?}", report.results)
    };
    assert_eq!(
        (r.backend.as_str(), r.metric.as_str(), r.count),
        ("hash", "map", 1)
    );
    assert_eq!(
        r.accuracy,
        (r.detail["map_medium"] + r.detail["map_hard"]) / 2.0
    );
    assert!(report.errors.is_empty());
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].backend.as_deref(), Some("coin"));
    assert!(report.meta.retrieval_metric.contains("average precision"));
}

#[test]
fn unreadable_media_is_quarantined_per_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_dataset(dir.path(), "img", &img2afc("img", 10));
    let broken: Vec<_> = img2afc("broken", 4)
        .into_iter()
        .map(|s| {
            let mut t = s.as_triplet().unwrap().clone();
            t.reference =
                unisim_core::MediaItem::image(dir.path().join("missing.png").to_str().unwrap());
            t.into()
        })
        .collect();
    let bad = write_dataset(dir.path(), "broken", &broken);
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        config_text(&[("img", &good), ("broken", &bad)], ""),
    )
    .unwrap();
    let report = run_benchmark(
        &load(&cfg_path),
        &RunFilter {
            backend: Some("hash".into()),
            task: None,
        },
    )
    .unwrap();
    assert_eq!(report.results.len(), 1);
    assert_eq!(report.errors.len(), 1);
    assert_eq!(report.errors[0].dataset, "broken");
    assert_eq!(report.summaries.len(), 1);
}

#[test]
fn un_ingested_dataset_fails_before_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_dataset(dir.path(), "img", &img2afc("img", 10));
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        config_text(
            &[("img", &good), ("nights", &dir.path().join("nights.jsonl"))],
            "",
        ),
    )
    .unwrap();
    let cfg = load(&cfg_path);
    let err = run_and_write(&cfg, &RunFilter::default()).unwrap_err();
    assert!(err.is_config(), "{err}");
    assert!(err.to_string().contains("nights"));
    assert!(!cfg.out.exists());
}

#[test]
fn manifest_count_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_dataset(dir.path(), "img", &img2afc("img", 10));
    std::fs::write(
        &p,
        std::fs::read_to_string(&p)
            .unwrap()
            .lines()
            .take(9)
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, config_text(&[("img", &p)], "")).unwrap();
    assert!(run_benchmark(&load(&cfg_path), &RunFilter::default())
        .unwrap_err()
        .is_config());
}

#[test]
fn filters_restrict_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(&standard_suite(dir.path()));
    let r = run_benchmark(
        &cfg,
        &RunFilter {
            backend: None,
            task: Some("ooo".into()),
        },
    )
    .unwrap();
    assert!(r.results.iter().all(|x| x.task == TaskKind::Ooo));
    assert_eq!(r.results.len(), 2);
    for bad in [
        RunFilter {
            backend: Some("clip".into()),
            task: None,
        },
        RunFilter {
            backend: None,
            task: Some("sorting".into()),
        },
    ] {
        assert!(run_benchmark(&cfg, &bad).unwrap_err().is_config());
    }
}

#[test]
fn artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(&standard_suite(dir.path()));
    let report = run_and_write(&cfg, &RunFilter::default()).unwrap();
    for f in [REPORT_FILE, RESULTS_FILE, RADAR_FILE] {
        assert!(cfg.out.join(f).is_file(), "{f}");
    }
    assert_eq!(BenchmarkReport::read(&cfg.out).unwrap(), report);
    let csv = std::fs::read_to_string(cfg.out.join(RESULTS_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1 + report.results.len());
}
