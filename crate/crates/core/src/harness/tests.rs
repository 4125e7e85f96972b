use std::fs;

use super::*;

const TWO: &str = r#"
[[scenario]]
id = "iid-small"
kind = "deviation_scan"
seed = 11
marginal = "centered(pareto(alpha=2, scale=1))"
n_list = [10]
samples = 20000

[[scenario]]
id = "ruin-small"
kind = "ruin"
seed = 12
t_list = [20]
samples = 5000
lambda_replications = 2000
[scenario.risk]
claim = "pareto(alpha=2, scale=1)"
arrivals = "poisson(rate=1)"
premium_rate = 2.2
"#;

fn info(text: &str, threads: usize) -> RunInfo {
    RunInfo {
        config_sha256: config_hash(text),
        seed_override: None,
        samples_scale: 1.0,
        threads,
    }
}

fn run_into(text: &str, threads: usize, dir: &std::path::Path) -> Vec<ScenarioOutcome> {
    let configs = parse_config(text).unwrap();
    let outcomes = run_scenarios(&configs, threads).unwrap();
    emit_outputs(&outcomes, &info(text, threads), dir).unwrap();
    outcomes
}

fn listing(dir: &std::path::Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn thread_count_does_not_change_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_into(TWO, 1, a.path());
    run_into(TWO, 4, b.path());
    assert_eq!(listing(a.path()), listing(b.path()));
    for name in listing(a.path()) {
        if name == "timings.json" {
            continue;
        }
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn two_scenarios_give_two_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let outcomes = run_into(TWO, 1, dir.path());
    assert_eq!(
        listing(dir.path()),
        [
            "iid-small.deviation_scan.csv",
            "manifest.json",
            "ratio_curves.csv",
            "ruin-small.ruin.csv",
            "summary.json",
            "timings.json"
        ]
    );
    assert!(outcomes.iter().all(|o| o.result.is_ok()));
    let csv = fs::read_to_string(dir.path().join("ruin-small.ruin.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("schema_version,scenario_id,seed,samples,"));
    for l in lines {
        assert!(l.starts_with("1,ruin-small,12,5000,"), "{l}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["scenarios"].as_array().unwrap().len(), 2);
}

#[test]
fn rerun_into_same_dir_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    run_into(TWO, 1, dir.path());
    let first = fs::read(dir.path().join("iid-small.deviation_scan.csv")).unwrap();
    let manifest = fs::read(dir.path().join("manifest.json")).unwrap();
    run_into(TWO, 1, dir.path());
    assert_eq!(first, fs::read(dir.path().join("iid-small.deviation_scan.csv")).unwrap());
    assert_eq!(manifest, fs::read(dir.path().join("manifest.json")).unwrap());
}

#[test]
fn empty_run_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&[], &info("", 1), dir.path()).unwrap();
    assert_eq!(listing(dir.path()), ["manifest.json"]);
}

#[test]
fn failing_scenario_does_not_stop_the_others() {
    // A net loss has no closed-form tail, so the ratio scan refuses it.
    let text = format!(
        "{TWO}{}",
        r#"
[[scenario]]
id = "broken"
kind = "deviation_scan"
seed = 1
marginal = "net_loss(pareto(alpha=2, scale=1), exponential(rate=1), c=1)"
n_list = [10]
samples = 1000
"#
    );
    let dir = tempfile::tempdir().unwrap();
    let outcomes = run_into(&text, 1, dir.path());
    assert_eq!(outcomes[2].verdict(), "Error");
    assert!(outcomes[0].result.is_ok() && outcomes[1].result.is_ok());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenarios"][2]["verdict"], "Error");
    assert!(manifest["scenarios"][2]["error"].as_str().unwrap().contains("closed-form"));
}

#[test]
fn scenario_order_does_not_matter() {
    let configs = parse_config(TWO).unwrap();
    let reversed: Vec<ScenarioConfig> = configs.iter().rev().cloned().collect();
    let a = run_scenarios(&configs, 1).unwrap();
    let b = run_scenarios(&reversed, 1).unwrap();
    assert_eq!(a[0].result, b[1].result);
    assert_eq!(a[1].result, b[0].result);
}

#[test]
fn cookbook_deviation_scan_passes() {
    let text = r#"
[[scenario]]
id = "iid-pareto"
kind = "deviation_scan"
seed = 2024
marginal = "centered(pareto(alpha=2, scale=1))"
n_list = [20]
samples = 200000
"#;
    let out = run_scenarios(&parse_config(text).unwrap(), 1).unwrap();
    assert_eq!(out[0].verdict(), "SandwichPass", "{:?}", out[0].result);
}

#[test]
fn every_kind_runs() {
    let text = r#"
[[scenario]]
id = "rs"
kind = "random_sum_scan"
seed = 1
marginal = "pareto(alpha=2, scale=1)"
counting = "poisson(rate=1)"
t_list = [20]
samples = 5000
lambda_replications = 2000

[[scenario]]
id = "re"
kind = "reinsurance_scan"
seed = 1
functional = "R21"
t_list = [20]
samples = 5000
lambda_replications = 2000
[scenario.risk]
claim = "pareto(alpha=2, scale=1)"
arrivals = "poisson(rate=1)"
premium_rate = 2.2
retention = 5

[[scenario]]
id = "rt"
kind = "random_time_ruin"
seed = 1
tau = "exponential(rate=0.1)"
samples = 5000
lambda_replications = 2000
[scenario.risk]
claim = "pareto(alpha=2, scale=1)"
arrivals = "poisson(rate=1)"
premium_rate = 2.2

[[scenario]]
id = "dg"
kind = "diagnostics"
seed = 1
marginal = "shifted(pareto(alpha=2, scale=1), offset=2)"
x_list = [1, 10, 100]

[[scenario]]
id = "dom"
kind = "dominating_estimate"
seed = 1
marginal = "pareto(alpha=2, scale=1)"
dependence = "fgm_pair(theta=0.5)"
n_list = [2]
x_list = [1.5, 3]
samples = 20000

[[scenario]]
id = "cc"
kind = "condition_check"
check = "counting"
seed = 1
counting = "poisson(rate=1)"
t_list = [10, 40, 160]
samples = 2000
lambda_replications = 2000

[[scenario]]
id = "gr"
kind = "condition_check"
check = "growth"
seed = 1
marginal = "pareto(alpha=2, scale=1)"
n_list = [10, 100, 1000]
"#;
    let dir = tempfile::tempdir().unwrap();
    let outcomes = run_into(text, 1, dir.path());
    for o in &outcomes {
        assert!(o.result.is_ok(), "{}: {:?}", o.config.id, o.result);
    }
    assert_eq!(outcomes[1].verdict(), "Inconclusive");
    assert_eq!(outcomes[3].verdict(), "Pass");
    assert_eq!(outcomes[6].verdict(), "Pass");
    let re = fs::read_to_string(dir.path().join("re.reinsurance_scan.csv")).unwrap();
    assert!(re.contains("R21 (heuristic, no theorem)"));
}
