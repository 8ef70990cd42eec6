use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use texscat::image_io::save_grayscale;
use texscat::synth;

fn texscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texscat"))
        .args(args)
        .env_remove("TEXSCAT_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Four grating orientations, two 64x64 images each, cut into 32x32 tiles.
fn separable(dir: &Path) -> std::path::PathBuf {
    let root = dir.join("sep");
    synth::write_dataset(&root, &synth::separable(4, 2, 64, 3)).unwrap();
    root
}

#[test]
fn index_evaluate_query_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let root = separable(dir.path());
    let db = dir.path().join("sep.db");
    let out = texscat(&[
        "index",
        "--root",
        s(&root),
        "-o",
        s(&db),
        "--patch-size",
        "32",
        "--layout",
        "tiles",
        "-q",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("32 records"), "{}", stdout(&out));

    let eval = texscat(&["evaluate", "--db", s(&db)]);
    assert_eq!(code(&eval), 0);
    assert!(stdout(&eval).contains("overall   100.00%"), "{}", stdout(&eval));

    let json = texscat(&["evaluate", "--db", s(&db), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["records"], 32);
    assert_eq!(v["per_class"].as_array().unwrap().len(), 4);
    assert_eq!(v["config"]["method"], "nwst-weibull");

    // a file that is exactly one indexed patch comes back first at distance 0
    let ds = texscat::dataset::Dataset::load(&root, 32, texscat::config::Layout::Tiles, false).unwrap();
    let patch = &ds.patches()[5];
    let q = dir.path().join("q.pgm");
    save_grayscale(&patch.grid, &q).unwrap();
    let query = texscat(&["query", "--db", s(&db), "--image", s(&q), "-n", "3"]);
    assert_eq!(code(&query), 0, "{}", stderr(&query));
    let first = stdout(&query).lines().nth(1).unwrap().to_owned();
    let fields: Vec<&str> = first.split_whitespace().collect();
    assert_eq!(fields[1..3], [patch.class.as_str(), &patch.patch_id.to_string()]);
    assert_eq!(fields[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(stdout(&query).lines().count(), 4);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let root = separable(dir.path());
    let db = dir.path().join("x.db");

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = texscat(&["index", "--root", s(&empty), "-o", s(&db)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no classes found"));

    let out = texscat(&[
        "index",
        "--root",
        s(&root),
        "-o",
        s(&db),
        "--patch-size",
        "100",
        "-J",
        "3",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("divisible"), "{}", stderr(&out));

    let out = texscat(&["index", "--root", s(&root), "-o", s(&db), "-M", "4"]);
    assert_eq!(code(&out), 2);
    let out = texscat(&["index", "--root", s(&root), "-o", s(&db), "--workers", "0"]);
    assert_eq!(code(&out), 2);
    let out = texscat(&["index", "--root", s(&root)]);
    assert_eq!(code(&out), 2, "missing output path");
    let out = texscat(&["frobnicate"]);
    assert_eq!(code(&out), 2);

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "scales = three\n").unwrap();
    let out = texscat(&["index", "--config", s(&cfg), "--root", s(&root), "-o", s(&db)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));

    let out = texscat(&[
        "query",
        "--db",
        s(&db),
        "--image",
        s(&root.join("orient0/img000.pgm")),
        "-n",
        "0",
    ]);
    assert_eq!(code(&out), 2);
    assert!(!db.exists());
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.db");
    let out = texscat(&["evaluate", "--db", s(&missing)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("file not found"));

    let junk = dir.path().join("junk.db");
    fs::write(&junk, b"SCRT\x07\x00").unwrap();
    assert_eq!(code(&texscat(&["evaluate", "--db", s(&junk)])), 1);

    // database built for one method, query asks for another
    let root = separable(dir.path());
    let db = dir.path().join("wst.db");
    let args = [
        "index",
        "--root",
        s(&root),
        "-o",
        s(&db),
        "--patch-size",
        "32",
        "--method",
        "wst-weibull",
        "-q",
    ];
    assert_eq!(code(&texscat(&args)), 0);
    let img = root.join("orient1/img001.pgm");
    let out = texscat(&["query", "--db", s(&db), "--image", s(&img), "--method", "fwt-ggd"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("fwt-ggd"), "{}", stderr(&out));
    // unequal class sizes cannot be evaluated
    fs::remove_file(root.join("orient3/img001.pgm")).unwrap();
    let uneven = dir.path().join("uneven.db");
    let args = [
        "index",
        "--root",
        s(&root),
        "-o",
        s(&uneven),
        "--patch-size",
        "32",
        "-q",
    ];
    assert_eq!(code(&texscat(&args)), 0);
    assert_eq!(code(&texscat(&["evaluate", "--db", s(&uneven)])), 1);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let root = separable(dir.path());
    let db = dir.path().join("cfg.db");
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# fwt baseline\nmethod = fwt-ggd\ndwt_levels = 2\npatch_size = 32\nroot = {}\ndb = {}\n",
            s(&root),
            s(&db)
        ),
    )
    .unwrap();
    assert_eq!(code(&texscat(&["index", "--config", s(&cfg), "-q"])), 0);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&texscat(&["evaluate", "--db", s(&db), "--format", "json"]))).unwrap();
    assert_eq!(v["config"]["method"], "fwt-ggd");
    assert_eq!(v["config"]["scales"], 2);

    assert_eq!(
        code(&texscat(&[
            "index",
            "--config",
            s(&cfg),
            "--method",
            "wst-weibull",
            "-M",
            "1",
            "-q"
        ])),
        0
    );
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&texscat(&["evaluate", "--db", s(&db), "--format", "json"]))).unwrap();
    assert_eq!(v["config"]["method"], "wst-weibull");
    assert_eq!(v["config"]["order"], 1);
}

#[test]
fn blur_sweep_rows_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let root = separable(dir.path());
    let db = dir.path().join("b.db");
    let common = ["--root", s(&root), "--patch-size", "32", "--method", "wst-weibull"];
    let mut index = vec!["index", "-o", s(&db), "-q"];
    index.extend_from_slice(&common);
    assert_eq!(code(&texscat(&index)), 0);
    let eval: serde_json::Value =
        serde_json::from_str(&stdout(&texscat(&["evaluate", "--db", s(&db), "--format", "json"]))).unwrap();

    let mut sweep = vec!["blur-sweep", "--sigmas", "0,3,1", "--format", "json"];
    sweep.extend_from_slice(&common);
    let out = texscat(&sweep);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let sigmas: Vec<f64> = rows.iter().map(|r| r["sigma"].as_f64().unwrap()).collect();
    assert_eq!(sigmas, [0.0, 3.0, 1.0]);
    assert_eq!(rows[0]["overall"], eval["overall"]);
    assert_eq!(rows[0]["per_class"], eval["per_class"]);

    let mut text = vec!["blur-sweep", "--sigmas", "0,2"];
    text.extend_from_slice(&common);
    let out = stdout(&texscat(&text));
    assert_eq!(out.lines().filter(|l| l.trim_end().ends_with('%')).count(), 2, "{out}");

    let mut negative = vec!["blur-sweep", "--sigmas", "0,-1"];
    negative.extend_from_slice(&common);
    assert_eq!(code(&texscat(&negative)), 2);
}

#[test]
fn output_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let root = separable(dir.path());
    let mut dbs = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let db = dir.path().join(format!("w{i}.db"));
        let out = texscat(&[
            "index",
            "--root",
            s(&root),
            "-o",
            s(&db),
            "--patch-size",
            "32",
            "--workers",
            workers,
            "-q",
        ]);
        assert_eq!(code(&out), 0);
        dbs.push(db);
    }
    // worker count from the environment
    let env_db = dir.path().join("env.db");
    let out = Command::new(env!("CARGO_BIN_EXE_texscat"))
        .args(["index", "--root", s(&root), "-o", s(&env_db), "--patch-size", "32"])
        .env("TEXSCAT_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("on 2 workers"), "{}", stderr(&out));
    assert!(stderr(&out).contains("extracted 32/32"));
    dbs.push(env_db);

    let bytes: Vec<Vec<u8>> = dbs.iter().map(|p| fs::read(p).unwrap()).collect();
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
    let reports: Vec<String> = dbs
        .iter()
        .map(|p| stdout(&texscat(&["evaluate", "--db", s(p)])))
        .collect();
    assert!(reports.windows(2).all(|w| w[0] == w[1]));

    let bad = Command::new(env!("CARGO_BIN_EXE_texscat"))
        .args(["index", "--root", s(&root), "-o", s(&dbs[0])])
        .env("TEXSCAT_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn fit_inspect_on_narrowband_noise_is_near_rayleigh() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("nb.pgm");
    // matched to the scale-1 wavelet at orientation 0
    save_grayscale(&synth::narrowband(256, 3.0 * std::f64::consts::PI / 8.0, 0.06, 1), &img).unwrap();
    let out = texscat(&[
        "fit-inspect",
        "--image",
        s(&img),
        "--path",
        "1:0",
        "--method",
        "wst-weibull",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let k = v["p2"].as_f64().unwrap();
    assert!((1.5..=2.5).contains(&k), "k = {k}");
    let counts: u64 = v["histogram"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(counts, v["samples"].as_u64().unwrap() - v["floored"].as_u64().unwrap());
    assert_eq!(v["histogram"]["counts"].as_array().unwrap().len(), 64);

    let out = texscat(&["fit-inspect", "--image", s(&img), "--path", "7:0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn dump_and_synth() {
    let dir = tempfile::tempdir().unwrap();
    let out = texscat(&[
        "synth",
        "--kind",
        "fine-coarse",
        "-o",
        s(&dir.path().join("fc")),
        "--classes",
        "2",
        "--images",
        "1",
        "--size",
        "64",
    ]);
    assert_eq!(code(&out), 0);
    let img = dir.path().join("fc/fine1/img000.pgm");
    assert!(img.exists());
    let bin = dir.path().join("d.bin");
    let out = texscat(&["dump", "--image", s(&img), "-o", s(&bin), "-M", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let paths = texscat::dump::decode(&fs::read(&bin).unwrap()).unwrap();
    assert_eq!(paths.len(), 61);
    assert_eq!(paths[0].0.layer(), 0);
    assert_eq!((paths[0].1.width(), paths[0].1.height()), (8, 8));

    let out = texscat(&["dump", "--image", s(&img), "-o", s(&bin), "--method", "fwt-ggd"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&texscat(&["--help"])), 0);
}
