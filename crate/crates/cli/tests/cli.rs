use std::path::Path;
use std::process::{Command, Output};

fn tracekit(args: &[&str], env_model: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tracekit"));
    cmd.args(args).env_remove("TRACEKIT_MODEL");
    if let Some(m) = env_model {
        cmd.env("TRACEKIT_MODEL", m);
    }
    cmd.output().expect("spawn tracekit")
}

fn ok(args: &[&str]) -> String {
    let out = tracekit(args, None);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn single_image_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", s(d), "--n", "1", "--side", "64", "--seed", "2"]);
    let img = d.join("synth_0000.pgm");
    assert!(img.exists());

    let filtered = d.join("f.png");
    ok(&["filter", "--kind", "sobel", "--variant", "inverse", s(&img), s(&filtered)]);
    ok(&["filter", "--kind", "canny", "--variant", "direct", "--low", "30", "--high", "90", s(&img), s(&d.join("c.pgm"))]);

    let svg = d.join("t.svg");
    ok(&["trace", "--turdsize", "4", "--turnpolicy", "black", s(&img), s(&svg)]);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));

    let back = d.join("r.pgm");
    ok(&["rasterize", s(&svg), "--size", "64x64", s(&back)]);
    let auto = d.join("r2.pgm");
    ok(&["rasterize", s(&svg), s(&auto)]);
    assert_eq!(std::fs::read(&back).unwrap(), std::fs::read(&auto).unwrap());

    let m = ok(&["metrics", s(&img), s(&img)]);
    assert_eq!(m.trim(), "mse=0.000000 ssim=1.000000");
    let m = ok(&["metrics", s(&img), s(&back), "--ssim-window", "11"]);
    assert!(m.starts_with("mse=") && m.contains(" ssim="));

    let bad = tracekit(&["rasterize", s(&svg), "--size", "64", s(&back)], None);
    assert!(!bad.status.success());
    let bad = tracekit(&["filter", "--kind", "blur", s(&img), s(&back)], None);
    assert!(!bad.status.success());
    let bad = tracekit(&["trace", s(&d.join("missing.pgm")), s(&svg)], None);
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}

#[test]
fn train_autoencode_and_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    ok(&["synth", "--out", s(&data), "--n", "4", "--side", "32", "--seed", "5"]);
    let model = d.join("m.tkae");
    let losses = d.join("loss.csv");
    let out = ok(&[
        "train", "--data", s(&data), "--epochs", "3", "--seed", "1", "--side", "32", "--batch-size", "2", "--out",
        s(&model), "--loss-csv", s(&losses),
    ]);
    assert!(out.starts_with("epochs=3 "));
    assert_eq!(std::fs::read_to_string(&losses).unwrap().lines().count(), 4);
    let again = d.join("m2.tkae");
    ok(&["train", "--data", s(&data), "--epochs", "3", "--seed", "1", "--side", "32", "--batch-size", "2", "--out", s(&again)]);
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());
    assert!(!tracekit(&["train", "--data", s(&data), "--epochs", "0", "--out", s(&again)], None).status.success());

    let img = data.join("synth_0000.pgm");
    let rec = d.join("rec.pgm");
    assert!(!tracekit(&["autoencode", s(&img), s(&rec)], None).status.success());
    let via_env = tracekit(&["autoencode", s(&img), s(&rec)], Some(&model));
    assert!(via_env.status.success());
    ok(&["autoencode", "--model", s(&model), s(&img), s(&d.join("rec2.pgm"))]);
    assert_eq!(std::fs::read(&rec).unwrap(), std::fs::read(d.join("rec2.pgm")).unwrap());

    let specs = d.join("specs.txt");
    std::fs::write(&specs, "default-vect\ndefault-dec-sobel-vect\n").unwrap();
    let config = d.join("run.conf");
    std::fs::write(&config, "side=32\nn=2\nturdsize=0\n").unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        let out_dir = d.join(format!("out{k}"));
        let stdout = ok(&[
            "pipeline", "run", "--specs", s(&specs), "--data", s(&data), "--out", s(&out_dir), "--config", s(&config),
            "--n", "3", "--seed", "9", "--model", s(&model),
        ]);
        assert!(stdout.contains("rows=6"), "{stdout}");
        runs.push(out_dir);
    }
    let strip = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p.join("report.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&runs[0]), strip(&runs[1]));
    assert!(runs[0].join("ranking.csv").exists());

    let rep = d.join("rep");
    let listed = ok(&["pipeline", "report", "--csv", s(&runs[0].join("report.csv")), "--out", s(&rep)]);
    assert_eq!(listed.lines().count(), 3);

    let no_model = tracekit(
        &["pipeline", "run", "--specs", s(&specs), "--data", s(&data), "--out", s(&d.join("x")), "--side", "32"],
        None,
    );
    assert!(!no_model.status.success());
}
