use unisim_bench::{aggregate, display};
use unisim_core::TaskFamily;

/// Per-dataset accuracies of one published row (zero-shot CLIP ViT-B/32).
fn published_row() -> Vec<(TaskFamily, f64)> {
    let mut rows = Vec::new();
    for (task, accs) in [
        (TaskFamily::Img2Afc, &[85.1, 68.6, 80.2][..]),
        (TaskFamily::It2Afc, &[65.8, 63.3, 66.1, 72.4, 85.2][..]),
        (TaskFamily::Text2Afc, &[61.4, 78.9, 84.6][..]),
        (TaskFamily::Iqa, &[59.8, 51.8, 80.5, 68.3, 74.4][..]),
    ] {
        rows.extend(accs.iter().map(|a| (task, *a)));
    }
    rows
}

#[test]
fn published_row_reproduces_task_and_overall_means() {
    let s = aggregate(&published_row()).unwrap();
    let shown: Vec<String> = s.tasks.values().map(|v| display(*v)).collect();
    assert_eq!(shown, ["78.0", "70.6", "75.0", "67.0"]);
    assert_eq!(display(s.overall), "72.6");
    // unrounded: 233.9/3, 352.8/5, 224.9/3, 334.8/5
    for (task, want) in [
        (TaskFamily::Img2Afc, 77.9667),
        (TaskFamily::It2Afc, 70.56),
        (TaskFamily::Text2Afc, 74.9667),
        (TaskFamily::Iqa, 66.96),
    ] {
        assert!((s.tasks[&task] - want).abs() < 1e-4, "{task}");
    }
    assert!((s.overall - 72.6133).abs() < 1e-4);
}

#[test]
fn rounding_before_averaging_would_differ() {
    // averaging displayed task means gives (78.0 + 70.6 + 75.0 + 67.0) / 4 = 72.65
    let s = aggregate(&published_row()).unwrap();
    let from_rounded: f64 = s
        .tasks
        .values()
        .map(|v| display(*v).parse::<f64>().unwrap())
        .sum::<f64>()
        / 4.0;
    assert!((from_rounded - 72.65).abs() < 1e-9);
    assert!(s.overall < 72.65);
}
