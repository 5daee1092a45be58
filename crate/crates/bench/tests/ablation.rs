use std::path::Path;

use unisim_bench::{run_ablation, AblationConfig};

/// A small image-image set and a large text-image set labelled by one
/// teacher, so both carry signal about the same image projection.
fn config(variants: &str, steps: usize, seed: u64) -> AblationConfig {
    let text = format!(
        r#"
data_seed = {seed}
[train]
max_lr = 0.01
weight_decay = 0.0
warmup_steps = {warm}
total_steps = {steps}
seed = 11

[[datasets]]
name = "small"
reference = "image"
candidates = "image"
train = 24
test = 1000

[[datasets]]
name = "large"
reference = "text"
candidates = "image"
train = 2000
test = 500
{variants}
"#,
        warm = steps / 10
    );
    AblationConfig::from_toml(&text, Path::new("/")).unwrap()
}

const TWO: &str = r#"
[[variants]]
name = "small only"
train_on = ["small"]

[[variants]]
name = "small + large"
train_on = ["small", "large"]
"#;

#[test]
fn two_variants_give_two_rows_with_held_out_flags() {
    let r = run_ablation(&config(TWO, 30, 0)).unwrap();
    assert_eq!(r.datasets, ["small", "large"]);
    assert_eq!(r.rows.len(), 2);
    let flags: Vec<Vec<bool>> = r
        .rows
        .iter()
        .map(|row| row.cells.iter().map(|c| c.held_out).collect())
        .collect();
    assert_eq!(flags, [vec![false, true], vec![false, false]]);
    let md = r.to_markdown();
    assert_eq!(md.lines().count(), 2 + 1 + 2);
    let lines: Vec<&str> = md.lines().collect();
    assert!(
        lines[3].contains("* | ") && !lines[3].ends_with("* |"),
        "{md}"
    );
    assert!(lines[4].ends_with("* |"), "{md}");
}

#[test]
fn identical_variants_give_identical_rows() {
    let same = r#"
[[variants]]
name = "x"
train_on = ["small"]
[[variants]]
name = "x"
train_on = ["small"]
"#;
    let r = run_ablation(&config(same, 30, 0)).unwrap();
    assert_eq!(r.rows[0], r.rows[1]);
    assert_eq!(r, run_ablation(&config(same, 30, 0)).unwrap());
}

#[test]
fn empty_variant_list_is_rejected() {
    let text = "variants = []\n[[datasets]]\nname = \"a\"\nreference = \"image\"\ncandidates = \"image\"\ntrain = 2\ntest = 2\n";
    assert!(AblationConfig::from_toml(text, Path::new("/"))
        .unwrap_err()
        .is_config());
}

#[test]
fn correlated_task_helps_the_small_one() {
    for seed in 0..3 {
        let r = run_ablation(&config(TWO, 300, seed)).unwrap();
        let alone = r.cell("small only", "small").unwrap().accuracy;
        let joint = r.cell("small + large", "small").unwrap().accuracy;
        eprintln!(
            "seed {seed}: base {:.4} alone {alone:.4} joint {joint:.4}",
            r.baseline[0]
        );
        assert!(joint >= alone, "seed {seed}: {joint} < {alone}");
    }
}
