use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ddf-curriculum");

const SMALL: &str = r#"
[experiment]
total_env_steps = 1000
eval_every = 500
eval_goal_count = 5
seeds = [4]

[env]
width = 8
height = 8
door_y = 3
start = [1, 3]
horizon = 30

[ddf]
hidden = [8]
pairs_per_retrain = 200
retrain_interval = 400
recent_steps = 500

[goalgen]
min_buffer_steps = 200
candidate_batch_size = 16

[agent]
hidden = [8]
learning_starts = 100
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("c.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn version_and_help() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
    let out = run(&["--help"]);
    assert!(out.status.success());
    let help = String::from_utf8_lossy(&out.stdout);
    for cmd in ["train", "suite", "inspect-goals"] {
        assert!(help.contains(cmd), "{help}");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[replay]\nbogus = 1\n");
    assert_eq!(run(&["train", "--config", &bad]).status.code(), Some(2));
    let bad = write_config(dir.path(), "[experiment]\neval_every = 0\n");
    assert_eq!(
        run(&["suite", "--config", &bad, "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--config", "/no/such/file.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "inspect-goals",
        "--checkpoint",
        dir.path().to_str().unwrap(),
        "--n",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn train_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "train",
        "--config",
        &config,
        "--method",
        "curriculum",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("run_curriculum_4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out_dir.join("manifest.toml").exists());

    let ck = out_dir.join("checkpoint_curriculum_4");
    let out = run(&[
        "inspect-goals",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--n",
        "7",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,source,predicted_bin,candidates,goal_0,goal_1,distance"
    );
    assert_eq!(lines.count(), 7);
}

#[test]
fn repeated_train_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "train",
            "--config",
            &config,
            "--seed",
            "9",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        files.push(std::fs::read(out_dir.join("run_curriculum_9.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}
