//! End-to-end checks of the `itas` binary: exit codes, determinism, and the
//! synth → run → eval → dump-replay flow through real processes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn itas(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itas"))
        .args(args)
        .env("ITAS_OUT_ROOT", out_root)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Small desk-scale settings shared by the process tests.
fn desk_args() -> Vec<String> {
    [
        ("synth.tasks", "2"),
        ("synth.actions_per_task", "3"),
        ("synth.videos_per_task", "5"),
        ("synth.feature_dim", "6"),
        ("synth.segments_min", "2"),
        ("synth.segments_max", "3"),
        ("synth.len_min", "3"),
        ("synth.len_max", "6"),
        ("run.replay_budget", "3"),
        ("seg.channels", "8"),
        ("seg.layers", "2"),
        ("seg.epochs", "3"),
        ("tca.latent", "3"),
        ("tca.hidden", "8"),
        ("tca.epochs", "8"),
    ]
    .iter()
    .flat_map(|(k, v)| ["--set".to_string(), format!("{k}={v}")])
    .collect()
}

#[test]
fn synth_run_eval_dump_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let desk = desk_args();
    let desk: Vec<&str> = desk.iter().map(|s| s.as_str()).collect();

    // synth
    let data = root.join("data");
    let mut args = vec!["synth", "--out", data.to_str().unwrap(), "--seed", "5"];
    args.extend(&desk);
    assert_success(&itas(&args, root));
    assert!(data.join("mapping.txt").exists());

    // run from the directory
    let run_dir = root.join("run");
    let dir_set = format!("dataset.dir={}", data.display());
    let mut args = vec![
        "run",
        "--out",
        run_dir.to_str().unwrap(),
        "--seed",
        "5",
        "--set",
        "dataset.source=dir",
        "--set",
        dir_set.as_str(),
    ];
    args.extend(&desk);
    let out = itas(&args, root);
    assert_success(&out);
    assert!(run_dir.join("history.tsv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("final task-averaged"));

    // rerun without --force refuses with the config exit code
    let out = itas(&args, root);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // eval ground truth against itself
    let pred = root.join("pred");
    fs::create_dir_all(&pred).unwrap();
    for entry in fs::read_dir(data.join("labels")).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, pred.join(p.file_name().unwrap())).unwrap();
    }
    let mapping = data.join("mapping.txt");
    let out = itas(
        &[
            "eval",
            "--pred",
            pred.to_str().unwrap(),
            "--gt",
            data.to_str().unwrap(),
            "--mapping",
            mapping.to_str().unwrap(),
        ],
        root,
    );
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("aggregate\t100.0000"), "{stdout}");

    // dump-replay from the finished run
    let dump = root.join("dump");
    let out = itas(
        &[
            "dump-replay",
            "--run",
            run_dir.to_str().unwrap(),
            "--stage",
            "2",
            "--count",
            "3",
            "--out",
            dump.to_str().unwrap(),
        ],
        root,
    );
    assert_success(&out);
    assert_eq!(
        fs::read_dir(&dump).unwrap().filter(|e| e
            .as_ref()
            .unwrap()
            .path()
            .extension()
            .map(|x| x == "fseq")
            .unwrap_or(false)).count(),
        3
    );
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let desk = desk_args();
    let desk: Vec<&str> = desk.iter().map(|s| s.as_str()).collect();

    for name in ["a", "b"] {
        let dir = root.join(name);
        let mut args = vec!["run", "--out", dir.to_str().unwrap(), "--seed", "9"];
        args.extend(&desk);
        assert_success(&itas(&args, root));
    }
    assert_eq!(
        fs::read(root.join("a/history.tsv")).unwrap(),
        fs::read(root.join("b/history.tsv")).unwrap()
    );
    assert_eq!(
        fs::read(root.join("a/config.txt")).unwrap(),
        fs::read(root.join("b/config.txt")).unwrap()
    );
}

#[test]
fn gradcheck_passes_for_both_components() {
    let tmp = tempfile::tempdir().unwrap();
    for component in ["seg", "tca"] {
        let out = itas(&["gradcheck", "--component", component, "--seed", "3"], tmp.path());
        assert_success(&out);
        assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    }
}

#[test]
fn distinct_exit_codes_per_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    // Unknown config key -> 2.
    let out = itas(&["run", "--set", "bogus.key=1"], root);
    assert_eq!(out.status.code(), Some(2));

    // Missing dataset directory -> data-class error 3.
    let out = itas(
        &[
            "run",
            "--set",
            "dataset.source=dir",
            "--set",
            "dataset.dir=/nonexistent/place",
            "--out",
            root.join("x").to_str().unwrap(),
        ],
        root,
    );
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));

    // Infeasible replay budget -> 4.
    let desk = desk_args();
    let desk: Vec<&str> = desk.iter().map(|s| s.as_str()).collect();
    let y_dir = root.join("y");
    let mut args = vec!["run", "--out", y_dir.to_str().unwrap()];
    args.extend(&desk);
    // Later --set wins, so the axis overrides go after the desk settings.
    args.extend(["--set", "synth.tasks=3", "--set", "run.replay_budget=1"]);
    let out = itas(&args, root);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
