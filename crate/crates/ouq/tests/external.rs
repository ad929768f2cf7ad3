use std::path::PathBuf;

use ouq::CommandModel;
use ouq_core::{min_pof_with, Decoder, Model, MomentSpec, OptimizerConfig, Sequential};
use ouq::RayonExecutor;
use tempfile::TempDir;

fn script(dir: &TempDir, name: &str, body: &str) -> Vec<String> {
    let path: PathBuf = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    vec!["python3".into(), path.to_str().unwrap().into()]
}

const PRODUCT: &str = "import sys\nfor line in sys.stdin:\n    a, b = (float(v) for v in line.split())\n    print(repr(a * b), flush=True)\n";

#[test]
fn protocol_round_trip() {
    let dir = TempDir::new().unwrap();
    let model = CommandModel::serial(script(&dir, "p.py", PRODUCT), 2);
    assert!(!model.is_concurrent());
    let mut out = Vec::new();
    model.evaluate_batch(&[0.5, 4.0, 1e-300, 1e300, -3.0, 0.1], &mut out).unwrap();
    assert_eq!(out, vec![2.0, 1.0, -3.0 * 0.1]);
    // the same child serves later batches
    assert_eq!(model.evaluate(&[2.0, 3.0]).unwrap(), 6.0);
}

#[test]
fn malformed_output_and_exit_are_model_failures() {
    let dir = TempDir::new().unwrap();
    let garbage = CommandModel::serial(script(&dir, "g.py", "import sys\nsys.stdin.readline()\nprint('nope', flush=True)\nsys.stdin.readline()\n"), 1);
    let err = garbage.evaluate(&[1.0]).unwrap_err();
    assert!(err.message.contains("malformed"), "{}", err.message);
    assert_eq!(err.point, vec![1.0]);

    let dies = CommandModel::serial(script(&dir, "d.py", "import sys\nsys.stdin.readline()\nsys.exit(5)\n"), 1);
    let err = dies.evaluate(&[2.0]).unwrap_err();
    assert!(err.message.contains("exit status: 5") || err.message.contains("failed"), "{}", err.message);

    let missing = CommandModel::serial(vec!["/nonexistent/model".into()], 1);
    assert!(missing.evaluate(&[0.0]).unwrap_err().message.contains("cannot start"));
    // a failed worker is replaced on the next call
    assert!(missing.evaluate(&[0.0]).is_err());
}

#[test]
fn concurrent_pool_matches_serial() {
    let dir = TempDir::new().unwrap();
    let argv = script(&dir, "p.py", PRODUCT);
    let serial = CommandModel::serial(argv.clone(), 2);
    let pool = CommandModel::concurrent(argv, 2, 3);
    assert!(pool.is_concurrent());
    let specs = vec![MomentSpec::equality(0.0, 1.0, vec![0.5]).unwrap(); 2];
    let decoder = Decoder::new(&specs).unwrap();
    let config = OptimizerConfig {
        max_iterations: 10,
        ..OptimizerConfig::default()
    };
    let a = min_pof_with(&decoder, &serial, 0.3, &config, &Sequential, &[]).unwrap();
    let b = min_pof_with(&decoder, &pool, 0.3, &config, &RayonExecutor::new(3).unwrap(), &[]).unwrap();
    assert_eq!(a, b);
}
