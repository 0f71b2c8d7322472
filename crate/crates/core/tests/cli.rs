use std::process::{Command, Output};

use serde_json::Value;

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vertex-sheaf"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn param_degenerate_point() {
    let out = run(&["param", "--k", "0.5", "--lambda", "0.7", "--mu", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["a"].as_f64().unwrap().abs() < 1e-15);
    assert!(v["d"].as_f64().unwrap().abs() < 1e-15);
}

#[test]
fn param_invariants_agree_across_mu() {
    let a = json(&run(&["param", "--k", "0.5", "--lambda", "0.7", "--mu", "0.3"]));
    let b = json(&run(&["param", "--k", "0.5", "--lambda", "0.7", "--mu", "0.5"]));
    for key in ["gamma", "delta"] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        assert!((x - y).abs() < 1e-10 * x.abs(), "{key}: {x} vs {y}");
    }
}

#[test]
fn param_guard_violation_emits_error_json() {
    let out = run(&["param", "--k", "0.5", "--lambda", "0.7", "--mu", "50"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["command"], "param");
    assert_eq!(v["error"]["kind"], "convergence_guard");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["param", "--k", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["partition", "--model", "sideways"]).status.code(), Some(2));
}

#[test]
fn ybe_headline_triple_and_sweep() {
    let out = run(&["ybe", "--mu1", "0.21", "--mu2", "0.34", "--parities", "od,od,ev"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["records"][0]["residual"].as_f64().unwrap() < 1e-10);

    let out = run(&["ybe", "--mu1", "0.21", "--mu2", "0.34", "--parities", "all"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["records"].as_array().unwrap().len(), 8);
}

#[test]
fn ybe_detuned_control() {
    let out = run(&["ybe", "--mu1", "0.21", "--mu2", "0.34", "--detune", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["check"], "control");
    assert!(v["records"][0]["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn solve_r_on_and_off_curve() {
    let out = run(&["solve-r", "--k", "0.5", "--lambda", "0.7", "--mu1", "0.3", "--mu2", "-0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kernel_dim"], 1);
    assert!(v["candidates"][0]["sheaf_diff"].as_f64().unwrap() < 1e-8);

    let out = run(&["solve-r", "--w1", "1,2,3,4", "--w2", "0.5,1.5,0.7,1.1", "--expect-kernel", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kernel_dim"], 0);

    // Demanding a kernel off the curve is a check failure, not an error.
    let out = run(&["solve-r", "--w1", "1,2,3,4", "--w2", "0.5,1.5,0.7,1.1", "--expect-kernel", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn commute_on_manifold_passes() {
    let out = run(&["commute", "--mu", "0.1,0.3,0.5", "--sites", "6", "--kinds", "even,odd", "--control-lambda", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_norm"].as_f64().unwrap() < 1e-10);
    assert!(v["control"]["norm"].as_f64().unwrap() > 1e-3);
}

#[test]
fn commute_staggered_products() {
    let out = run(&["commute", "--krinsky-seed", "5", "--sites", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["mode"], "krinsky");
    assert!(v["product_commutator"].as_f64().unwrap() < 1e-9);
}

#[test]
fn partition_odd_three_by_three_vanishes() {
    let out = run(&["partition", "--model", "odd", "--rows", "3", "--cols", "3", "--backend", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for record in v["values"].as_array().unwrap() {
        assert_eq!(record["z_re"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn partition_rejects_odd_staggered_lattice() {
    let out = run(&["partition", "--model", "even", "--staggered", "--rows", "3", "--cols", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "lattice_shape");
}

#[test]
fn wukunz_seed_42() {
    let out = run(&["wukunz", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["seed"], 42);
    assert!(v["rel_diff"].as_f64().unwrap() < 1e-12);
    for key in ["lhs", "rhs", "rel_diff", "lattice", "model"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn sample_krinsky_passes() {
    let out = run(&["sample-krinsky", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["invariant_rel_diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let cases: [&[&str]; 3] = [
        &["wukunz", "--seed", "7", "--rows", "2", "--cols", "4"],
        &["commute", "--mu", "0.1,0.2,0.4", "--sites", "5"],
        &["sample-krinsky", "--seed", "3"],
    ];
    for args in cases {
        let first = run_with_env(args, &[("VERTEX_SHEAF_THREADS", "1")]).stdout;
        let second = run_with_env(args, &[("VERTEX_SHEAF_THREADS", "4")]).stdout;
        let third = run(args).stdout;
        assert_eq!(first, second, "{args:?}");
        assert_eq!(first, third, "{args:?}");
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = run_with_env(&["sample-krinsky"], &[("VERTEX_SHEAF_THREADS", "many")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "invalid_input");
}

#[test]
fn pretty_and_output_file() {
    let compact = run(&["sample-krinsky", "--seed", "2"]);
    let pretty = run(&["sample-krinsky", "--seed", "2", "--pretty"]);
    let a: Value = json(&compact);
    let b: Value = json(&pretty);
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&pretty.stdout).contains("\n  \""));

    let path = std::env::temp_dir().join(format!("vertex-sheaf-cli-{}.json", std::process::id()));
    let out = run(&["sample-krinsky", "--seed", "2", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(written, compact.stdout);
}
