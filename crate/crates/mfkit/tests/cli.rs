use std::path::Path;
use std::process::{Command, Output};

fn mfkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfkit"))
        .current_dir(dir)
        .env_remove(mfkit::cli::OUT_DIR_ENV)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lebesgue_tau_is_q_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = mfkit(
        dir.path(),
        &["generate", "--spec", "lebesgue d=1 J=10", "-o", "leb.mfm"],
    );
    assert_eq!(g.status.code(), Some(0));
    let t = mfkit(
        dir.path(),
        &["tau", "-i", "leb.mfm", "--q", "-2:2:0.5", "--j", "4:10"],
    );
    assert_eq!(t.status.code(), Some(0));
    let text = stdout(&t);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# kind=tau-of-q j=4:10 q=-2:2:0.5 method=min"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    for (q, tau) in rows {
        assert!((tau - (q - 1.0)).abs() < 1e-12, "{q} {tau}");
    }
}

#[test]
fn verify_mun_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfkit(
        dir.path(),
        &[
            "verify-mun",
            "--d",
            "1",
            "--jn",
            "1",
            "--n",
            "1",
            "--weights",
            "1/3,2/3",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("PASS floor inequality"));
    assert!(text.contains("PASS distance identity"));
    assert!(text.contains("PASS distance bound"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn cantor_desk_example_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfkit(
        dir.path(),
        &[
            "cantor",
            "verify-bounds",
            "--theta",
            "2",
            "--levels",
            "2,6",
            "--d",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("desk-mode"));
    assert!(text.contains("not guaranteed"));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        mfkit(dir.path(), &["tau", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(mfkit(dir.path(), &["frobnicate"]).status.code(), Some(2));
    std::fs::write(
        dir.path().join("bad.mfm"),
        "mfm v1\ndim 1\nkind atomic\natom 1/2 1/2\natom 3/2 1/2\n",
    )
    .unwrap();
    let o = mfkit(dir.path(), &["distance", "-a", "bad.mfm", "-b", "bad.mfm"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 5"), "{err}");
    let o = mfkit(
        dir.path(),
        &["generate", "--spec", "lebesgue d=1", "-o", "x.mfm"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mfkit"))
        .current_dir(dir.path())
        .env(mfkit::cli::OUT_DIR_ENV, out.path())
        .args(["generate", "--spec", "pi j=2 d=1", "-o", "pi.mfm"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.path().join("pi.mfm").exists());
    assert!(!dir.path().join("pi.mfm").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path();
            let mut all = Vec::new();
            for args in [
                vec!["generate", "--spec", "cascade m0=1/3 J=9", "-o", "c.mfm"],
                vec![
                    "legendre",
                    "-i",
                    "c.mfm",
                    "--j",
                    "3:9",
                    "--q",
                    "-3:3:0.25",
                    "--h",
                    "0.3:1.7:0.1",
                    "-o",
                    "l.csv",
                ],
                vec![
                    "exponent", "-i", "c.mfm", "--j", "1:9", "--point", "random", "--seed", "7",
                ],
                vec![
                    "cantor",
                    "verify-borel",
                    "--theta",
                    "2",
                    "--levels",
                    "2,6",
                    "--random",
                    "20",
                    "--seed",
                    "3",
                ],
            ] {
                let o = mfkit(p, &args);
                assert_eq!(o.status.code(), Some(0), "{args:?}");
                all.extend(o.stdout);
            }
            all.extend(std::fs::read(p.join("c.mfm")).unwrap());
            all.extend(std::fs::read(p.join("l.csv")).unwrap());
            all
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}
