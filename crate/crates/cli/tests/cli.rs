use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sentic_core::lexicon::{render_lexicon, run_pipeline, PipelineConfig};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn sentic(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentic"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = sentic(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn chained_stages_match_the_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (cn, an, sg, bench) = (
        data("conceptnet.tsv"),
        data("affectnet_labels.tsv"),
        data("singlish_labels.tsv"),
        data("benchmark.tsv"),
    );
    ok(&["ingest", "--assertions", s(&cn), "--out", "cn.tsv"], d);
    ok(&["ingest", "--labels", s(&an), "--out", "an.tsv"], d);
    ok(&["ingest", "--labels", s(&sg), "--out", "sg.tsv"], d);
    ok(
        &[
            "blend",
            "--matrix",
            "cn.tsv",
            "--matrix",
            "an.tsv",
            "--matrix",
            "sg.tsv",
            "--out",
            "blend.tsv",
        ],
        d,
    );
    ok(
        &[
            "embed",
            "--matrix",
            "blend.tsv",
            "--k",
            "100",
            "--out",
            "space.tsv",
        ],
        d,
    );
    ok(
        &[
            "train",
            "--space",
            "space.tsv",
            "--benchmark",
            s(&bench),
            "--out",
            "model.txt",
        ],
        d,
    );
    ok(
        &[
            "predict",
            "--space",
            "space.tsv",
            "--model",
            "model.txt",
            "--labels",
            s(&sg),
            "--out",
            "preds.tsv",
        ],
        d,
    );
    ok(
        &[
            "export",
            "--predictions",
            "preds.tsv",
            "--labels",
            s(&sg),
            "--out",
            "lexicon.tsv",
        ],
        d,
    );

    let cfg = PipelineConfig::new(&cn, &an, &sg, &bench);
    let expected = render_lexicon(&run_pipeline(&cfg).unwrap().entries);
    assert_eq!(
        std::fs::read_to_string(d.join("lexicon.tsv")).unwrap(),
        expected
    );
    assert_eq!(expected.lines().count(), 31);

    // embedding straight from the raw inputs gives the same space file
    ok(
        &[
            "embed",
            "--conceptnet",
            s(&cn),
            "--affectnet",
            s(&an),
            "--singlish",
            s(&sg),
            "--out",
            "space2.tsv",
        ],
        d,
    );
    assert_eq!(
        std::fs::read(d.join("space.tsv")).unwrap(),
        std::fs::read(d.join("space2.tsv")).unwrap()
    );

    let near = ok(
        &[
            "neighbors",
            "--space",
            "space.tsv",
            "--concept",
            "gei_yan",
            "--n",
            "2",
        ],
        d,
    );
    let names: Vec<&str> = near
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(names, ["cham_sheung", "see_buay"]);

    let projected = ok(
        &["project", "--space", "space.tsv", "--x", "0", "--y", "0"],
        d,
    );
    assert!(projected.lines().all(|l| {
        let f: Vec<&str> = l.split('\t').collect();
        f.len() == 3 && f[1] == f[2]
    }));
    let out = sentic(
        &["project", "--space", "space.tsv", "--x", "0", "--y", "500"],
        d,
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("axis 500"));
}

#[test]
fn analogy_inference_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "ingest",
            "--assertions",
            s(&data("analogy.tsv")),
            "--out",
            "a.tsv",
        ],
        dir.path(),
    );
    let text = ok(
        &["infer", "--matrix", "a.tsv", "--k", "2", "--tau", "0.3"],
        dir.path(),
    );
    let forward: Vec<&str> = text
        .lines()
        .filter(|l| {
            !l.split('\t')
                .nth(1)
                .unwrap()
                .starts_with(char::is_lowercase)
        })
        .collect();
    assert_eq!(forward.len(), 1, "{text}");
    assert!(forward[0].starts_with("special_occasion\tCauses>shiok\t"));
}

#[test]
fn polarity_of_vectors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        ok(&["polarity", "--vector", "0.9,0,0,0.2"], dir.path()),
        "0.366667\n"
    );
    assert_eq!(
        ok(
            &["polarity", "--vector", "1,1,0,1", "--vector", "0,0,1,0"],
            dir.path()
        ),
        "0.333333\n"
    );
    assert_eq!(
        code(&sentic(&["polarity", "--vector", "2,0,0,0"], dir.path())),
        1
    );
    assert_eq!(code(&sentic(&["polarity"], dir.path())), 1);
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let neg = sentic(&["embed", "--k", "-5", "--out", "space.tsv"], d);
    assert_eq!(code(&neg), 1);
    assert!(neg.stdout.is_empty() && !neg.stderr.is_empty());
    assert_eq!(code(&sentic(&["embed", "--k", "0", "--matrix", "x"], d)), 1);
    assert_eq!(code(&sentic(&["frobnicate"], d)), 1);
    assert_eq!(
        code(&sentic(&["ingest", "--assertions", "a", "--bogus"], d)),
        1
    );
    assert_eq!(code(&sentic(&["ingest"], d)), 1);
    assert_eq!(code(&sentic(&["embed"], d)), 1);
    assert_eq!(
        code(&sentic(
            &["blend", "--matrix", "a", "--weight", "auto", "--weight", "1"],
            d
        )),
        1
    );

    let missing = sentic(&["ingest", "--assertions", "does-not-exist.tsv"], d);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));

    std::fs::write(d.join("bad.tsv"), "spoon\tUsedFor\teating\n").unwrap();
    let bad = sentic(&["ingest", "--assertions", "bad.tsv"], d);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));

    let help = sentic(&["--help"], d);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("neighbors"));
}

#[test]
fn in_process_entry_point() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = sentic_cli::run_with(
        ["sentic", "polarity", "--vector", "0,0,0,0"],
        &mut out,
        &mut err,
    );
    assert_eq!(
        (status, out.as_slice(), err.as_slice()),
        (0, &b"0.000000\n"[..], &b""[..])
    );
    let status = sentic_cli::run_with(
        [
            "sentic",
            "export",
            "--predictions",
            "p",
            "--labels",
            "l",
            "--delta",
            "0.5",
        ],
        &mut out,
        &mut err,
    );
    assert_eq!(status, sentic_cli::EXIT_USAGE);
}
