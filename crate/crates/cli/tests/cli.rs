//! End-to-end tests of the `laguerre` binary: exit codes, artifact
//! contents, determinism across thread counts, and the full
//! generate -> report chain.

use std::path::Path;
use std::process::{Command, Output};

use laguerre_cli::export::DiagramExport;

fn laguerre() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_laguerre"));
    cmd.env_remove("LAGUERRE_THREADS");
    cmd
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

/// Failures must print exactly one machine-readable JSON record on stderr.
fn error_record(output: &Output) -> (String, String) {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().next().unwrap_or_else(|| {
        panic!("no stderr record, stdout: {}", String::from_utf8_lossy(&output.stdout))
    });
    let value: serde_json::Value = serde_json::from_str(line)
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {line}"));
    (
        value["error"].as_str().unwrap().to_string(),
        value["message"].as_str().unwrap().to_string(),
    )
}

fn assert_fails(output: &Output, code: i32, kind: &str) {
    assert_eq!(output.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let (got_kind, message) = error_record(output);
    assert_eq!(got_kind, kind, "message: {message}");
    assert!(!message.is_empty());
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}, stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Small generate run shared by several tests.
fn generate_config(seed: u64) -> String {
    format!(
        r#"
schema = "laguerre-run/1"
mode = "generate"
rng_seed = {seed}

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[targets]
source = "bimodal"
small = 35
large = 15
ratio = 10.0

[solver]
tolerance = 0.01

[lloyd]
iterations = 100
"#
    )
}

#[test]
fn config_rejections_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");

    // Config file does not exist at all.
    let out = laguerre().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert_fails(&out, 2, "config");

    // Unsupported schema tag.
    write(&config, &generate_config(1).replace("laguerre-run/1", "laguerre-run/99"));
    let out = laguerre().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert_fails(&out, 2, "config");

    // Typo in a block: unknown keys are rejected, not ignored.
    write(&config, &generate_config(1).replace("tolerance = 0.01", "tolerance = 0.01\ndampng = 0.5"));
    let out = laguerre().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert_fails(&out, 2, "config");

    // Extraneous field for the chosen target source.
    write(&config, &generate_config(1).replace("ratio = 10.0", "ratio = 10.0\ncount = 7"));
    let out = laguerre().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert_fails(&out, 2, "config");

    // Referenced seeds file is missing.
    write(
        &config,
        r#"
schema = "laguerre-run/1"
mode = "diagram"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[seeds]
source = "file"
path = "no-such-seeds.csv"
"#,
    );
    let out = laguerre().args(["diagram", "--config"]).arg(&config).output().unwrap();
    assert_fails(&out, 2, "config");

    // Subcommand and config mode must agree.
    write(&config, &generate_config(1));
    let out = laguerre().args(["fit", "--config"]).arg(&config).output().unwrap();
    assert_fails(&out, 2, "config");

    // Zero worker threads is meaningless.
    let out = laguerre()
        .args(["generate", "--threads", "0", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_fails(&out, 2, "config");

    // Garbage LAGUERRE_THREADS is an error, not silently ignored.
    let out = laguerre()
        .env("LAGUERRE_THREADS", "three")
        .args(["generate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_fails(&out, 2, "config");
}

#[test]
fn unconverged_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(
        &config,
        r#"
schema = "laguerre-run/1"
mode = "fit"
rng_seed = 3

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[targets]
source = "uniform-ratio"
count = 30
max_ratio = 3.0

[solver]
tolerance = 1e-9
max_iterations = 1
"#,
    );
    let out = laguerre()
        .args(["fit", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_fails(&out, 3, "solver");
    // A failed run leaves no partial artifacts behind.
    assert!(!dir.path().join("diagram.json").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let seeds = dir.path().join("seeds.csv");
    write(&seeds, "id,x,y\n0,0.25,0.5\n1,0.75,0.5\n");
    write(
        &config,
        r#"
schema = "laguerre-run/1"
mode = "diagram"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[seeds]
source = "file"
path = "seeds.csv"
"#,
    );
    // Output directory path descends through a regular file.
    let blocker = dir.path().join("blocker");
    write(&blocker, "not a directory");
    let out = laguerre()
        .current_dir(dir.path())
        .args(["diagram", "--output-dir"])
        .arg(blocker.join("sub"))
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_fails(&out, 4, "io");
}

#[test]
fn diagram_mode_symmetric_pair() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let seeds = dir.path().join("seeds.csv");
    // Equal weights, mirrored seeds: the bisector splits the box in half.
    write(&seeds, "id,x,y,w,m\n7,0.25,0.5,0.0,0.5\n9,0.75,0.5,0.0,0.5\n");
    write(
        &config,
        &format!(
            r#"
schema = "laguerre-run/1"
mode = "diagram"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[seeds]
source = "file"
path = "{}"

[output]
vtk = "cells.vtk"
"#,
            seeds.display()
        ),
    );
    let out = laguerre()
        .args(["diagram", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);

    let path = dir.path().join("diagram.json");
    let export = DiagramExport::read(&path).unwrap();
    assert_eq!(export.n, 2);
    assert_eq!(export.d, 2);
    assert!(!export.periodic);
    let ids: Vec<u64> = export.cells.iter().map(|c| c.id).collect();
    assert_eq!(ids, [7, 9]);
    for cell in &export.cells {
        assert!((cell.volume - 0.5).abs() < 1e-12);
        assert!(!cell.empty);
        // Masses from the CSV annotate the volume error.
        assert!(cell.rel_error.unwrap().abs() < 1e-12);
        let other = if cell.id == 7 { 9 } else { 7 };
        let shared: Vec<_> = cell.faces.iter().filter(|f| f.neighbor == Some(other)).collect();
        assert_eq!(shared.len(), 1);
        assert!((shared[0].area - 1.0).abs() < 1e-12);
        for face in &cell.faces {
            assert!(face.neighbor.is_some() ^ face.wall.is_some());
            for &v in &face.vertices {
                assert!((v as usize) < export.vertices.len());
            }
        }
    }

    // Reading the artifact back and reserialising reproduces it bit for bit.
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(export.to_json_bytes(), bytes);

    let vtk = std::fs::read_to_string(dir.path().join("cells.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    assert!(vtk.contains("DATASET POLYDATA"));
    assert!(vtk.contains("SCALARS volume double 1"));
}

#[test]
fn empty_cell_is_flagged_not_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let seeds = dir.path().join("seeds.csv");
    // The middle seed's weight is so low its cell vanishes.
    write(
        &seeds,
        "id,x,y,w\n0,0.25,0.5,0.0\n1,0.5,0.5,-10.0\n2,0.75,0.5,0.0\n",
    );
    write(
        &config,
        &format!(
            r#"
schema = "laguerre-run/1"
mode = "diagram"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[seeds]
source = "file"
path = "{}"
"#,
            seeds.display()
        ),
    );
    let out = laguerre()
        .args(["diagram", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);

    let export = DiagramExport::read(&dir.path().join("diagram.json")).unwrap();
    assert_eq!(export.n, 3);
    let empty = &export.cells[1];
    assert!(empty.empty);
    assert_eq!(empty.volume, 0.0);
    assert!(empty.faces.is_empty());
    assert!(empty.centroid.is_none());
    let total: f64 = export.cells.iter().map(|c| c.volume).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn generate_meets_volume_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(&config, &generate_config(12));
    let out = laguerre()
        .args(["generate", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);

    let path = dir.path().join("diagram.json");
    let export = DiagramExport::read(&path).unwrap();
    assert_eq!(export.n, 50);
    for cell in &export.cells {
        assert!(!cell.empty);
        let rel = cell.rel_error.unwrap().abs();
        assert!(rel < 0.01, "cell {} off by {rel}", cell.id);
    }
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(export.to_json_bytes(), bytes);

    let trace = read_json(&dir.path().join("report.json"));
    assert_eq!(trace["schema"], "laguerre-lloyd-trace/1");
    assert_eq!(trace["stop"], "iteration-cap");
    assert_eq!(trace["iterations"].as_array().unwrap().len(), 100);
    assert!(trace["initial_energy"].as_f64().unwrap() > 0.0);
}

#[test]
fn thread_count_does_not_change_artifact_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(&config, &generate_config(4));

    let mut artifacts: Vec<Vec<u8>> = Vec::new();
    for (label, threads, env) in [
        ("one", Some("1"), None),
        ("two", Some("2"), None),
        ("env", None, Some("2")),
    ] {
        let out_dir = dir.path().join(label);
        let mut cmd = laguerre();
        cmd.args(["generate", "--output-dir"]).arg(&out_dir);
        if let Some(t) = threads {
            cmd.args(["--threads", t]);
        }
        if let Some(e) = env {
            cmd.env("LAGUERRE_THREADS", e);
        }
        let out = cmd.args(["--config"]).arg(&config).output().unwrap();
        assert_ok(&out);
        artifacts.push(std::fs::read(out_dir.join("diagram.json")).unwrap());
    }
    assert_eq!(artifacts[0], artifacts[1], "1 vs 2 threads");
    assert_eq!(artifacts[0], artifacts[2], "flag vs environment");

    // Different rng seed, different diagram: the seed override is live.
    let reseeded = dir.path().join("reseeded");
    let out = laguerre()
        .args(["generate", "--rng-seed", "5", "--output-dir"])
        .arg(&reseeded)
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);
    let other = std::fs::read(reseeded.join("diagram.json")).unwrap();
    assert_ne!(artifacts[0], other);
}

#[test]
fn banded_seeding_keeps_small_class_in_bands() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    // Small cells start in two horizontal slabs, large cells in the
    // complement; a short Lloyd run must not wash the layout out.
    write(
        &config,
        r#"
schema = "laguerre-run/1"
mode = "generate"
rng_seed = 20

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
periodic = true

[targets]
source = "bimodal"
small = 400
large = 100
ratio = 20.0

[seeds]
source = "banded"
axis = 1
thresholds = [0.002]
bands = [
    [[0.0, 0.25], [0.5, 0.75]],
    [[0.25, 0.5], [0.75, 1.0]],
]

[solver]
tolerance = 0.01

[lloyd]
iterations = 10
"#,
    );
    let out = laguerre()
        .args(["generate", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);

    let export = DiagramExport::read(&dir.path().join("diagram.json")).unwrap();
    assert_eq!(export.n, 500);
    let small_in_band = |y: f64| (0.0..0.25).contains(&y) || (0.5..0.75).contains(&y);
    let mut small = 0usize;
    let mut inside = 0usize;
    for cell in &export.cells {
        assert!(cell.rel_error.unwrap().abs() < 0.01);
        if cell.target.unwrap() < 0.002 {
            small += 1;
            let y = cell.centroid.as_ref().unwrap()[1].rem_euclid(1.0);
            if small_in_band(y) {
                inside += 1;
            }
        }
    }
    assert_eq!(small, 400);
    let fraction = inside as f64 / small as f64;
    assert!(fraction >= 0.9, "only {fraction} of small cells stayed in their bands");
}

#[test]
fn fit_solves_with_packing_and_file_inits() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let base = r#"
schema = "laguerre-run/1"
mode = "fit"
rng_seed = 7

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[targets]
source = "uniform-ratio"
count = 40
max_ratio = 4.0

[solver]
tolerance = 0.01
"#;
    write(&config, &format!("{base}w_init = \"sphere-packing\"\n"));
    let out = laguerre()
        .args(["fit", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);

    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["schema"], "laguerre-solve-report/1");
    assert_eq!(report["method"], "newton");
    assert_eq!(report["converged"], true);
    assert!(report["max_rel_volume_error"].as_f64().unwrap() < 0.01);
    assert!(report["outer_iterations"].as_u64().unwrap() >= 1);
    assert_eq!(report["rel_volume_errors"].as_array().unwrap().len(), 40);

    let export = DiagramExport::read(&dir.path().join("diagram.json")).unwrap();
    for cell in &export.cells {
        assert!(cell.rel_error.unwrap().abs() < 0.01);
    }

    // Same fit from explicit per-seed starting weights.
    let winit = dir.path().join("winit.csv");
    let mut csv = String::from("id,x,y,w\n");
    for i in 0..40 {
        csv.push_str(&format!("{i},0.0,0.0,0.0\n"));
    }
    write(&winit, &csv);
    write(
        &config,
        &format!("{base}w_init = \"file\"\nw_init_path = \"{}\"\n", winit.display()),
    );
    let file_dir = dir.path().join("file-init");
    let out = laguerre()
        .args(["fit", "--output-dir"])
        .arg(&file_dir)
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);
    let report = read_json(&file_dir.join("report.json"));
    assert_eq!(report["converged"], true);

    // Quasi-newton reaches the same tolerance on this instance.
    write(&config, &format!("{base}method = \"quasi-newton\"\n"));
    let qn_dir = dir.path().join("quasi-newton");
    let out = laguerre()
        .args(["fit", "--output-dir"])
        .arg(&qn_dir)
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);
    let report = read_json(&qn_dir.join("report.json"));
    assert_eq!(report["method"], "quasi-newton");
    assert_eq!(report["converged"], true);
    assert!(report["max_rel_volume_error"].as_f64().unwrap() < 0.01);
}

#[test]
fn report_chain_summarizes_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gen_config = dir.path().join("gen.toml");
    write(
        &gen_config,
        r#"
schema = "laguerre-run/1"
mode = "generate"
rng_seed = 5

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[targets]
source = "bimodal"
small = 14
large = 6
ratio = 5.0

[solver]
tolerance = 0.01

[lloyd]
iterations = 5

[output]
report = "trace.json"
"#,
    );
    let out = laguerre()
        .args(["generate", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&gen_config)
        .output()
        .unwrap();
    assert_ok(&out);

    let diagram_path = dir.path().join("diagram.json");
    let export = DiagramExport::read(&diagram_path).unwrap();

    // Reference = the export's own centroids, so every error is exactly 0.
    let reference = dir.path().join("reference.csv");
    let mut csv = String::from("id,x,y\n");
    for cell in &export.cells {
        let c = cell.centroid.as_ref().unwrap();
        csv.push_str(&format!("{},{},{}\n", cell.id, c[0], c[1]));
    }
    write(&reference, &csv);

    let report_config = dir.path().join("report.toml");
    write(
        &report_config,
        &format!(
            r#"
schema = "laguerre-run/1"
mode = "report"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[report]
diagram = "{}"
reference = "{}"
"#,
            diagram_path.display(),
            reference.display()
        ),
    );
    let out = laguerre()
        .args(["report", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&report_config)
        .output()
        .unwrap();
    assert_ok(&out);

    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["schema"], "laguerre-report/1");
    assert_eq!(report["n"], 20);
    let volume = &report["volume_percent_error"];
    assert_eq!(volume["count"], 20);
    assert!(volume["max"].as_f64().unwrap() < 1.0);
    assert!(volume["median"].as_f64().unwrap() <= volume["q90"].as_f64().unwrap());
    assert!(volume["q90"].as_f64().unwrap() <= volume["q99"].as_f64().unwrap());
    let xs = volume["ccdf_x"].as_array().unwrap();
    let fr = volume["ccdf_fraction"].as_array().unwrap();
    assert_eq!(xs.len(), fr.len());
    assert!(!xs.is_empty());
    assert_eq!(report["centroid_relative_error"]["max"], 0.0);
    assert_eq!(report["fraction_centroid_error_below_one"], 1.0);

    // Without a reference the centroid statistics are absent.
    let no_ref_config = dir.path().join("report-noref.toml");
    write(
        &no_ref_config,
        &format!(
            r#"
schema = "laguerre-run/1"
mode = "report"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[report]
diagram = "{}"

[output]
report = "stats-noref.json"
"#,
            diagram_path.display()
        ),
    );
    let out = laguerre()
        .args(["report", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&no_ref_config)
        .output()
        .unwrap();
    assert_ok(&out);
    let report = read_json(&dir.path().join("stats-noref.json"));
    assert!(report.get("centroid_relative_error").is_none());
    assert!(report.get("fraction_centroid_error_below_one").is_none());

    // Reference ids that do not match the export are rejected.
    let bad_reference = dir.path().join("bad-reference.csv");
    write(&bad_reference, &csv.replace("0,", "1000,"));
    let bad_config = dir.path().join("report-bad.toml");
    write(
        &bad_config,
        &format!(
            r#"
schema = "laguerre-run/1"
mode = "report"

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[report]
diagram = "{}"
reference = "{}"
"#,
            diagram_path.display(),
            bad_reference.display()
        ),
    );
    let out = laguerre()
        .args(["report", "--config"])
        .arg(&bad_config)
        .output()
        .unwrap();
    assert_fails(&out, 2, "config");

    // A 3D domain cannot report on a 2D export.
    let dim_config = dir.path().join("report-3d.toml");
    write(
        &dim_config,
        &format!(
            r#"
schema = "laguerre-run/1"
mode = "report"

[domain]
lower = [0.0, 0.0, 0.0]
upper = [1.0, 1.0, 1.0]

[report]
diagram = "{}"
"#,
            diagram_path.display()
        ),
    );
    let out = laguerre()
        .args(["report", "--config"])
        .arg(&dim_config)
        .output()
        .unwrap();
    assert_fails(&out, 2, "config");
}

#[test]
fn periodic_generate_writes_wrapped_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(
        &config,
        r#"
schema = "laguerre-run/1"
mode = "generate"
rng_seed = 6

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
periodic = true

[targets]
source = "lognormal"
count = 30
mean = 1.0
sd = 0.3

[solver]
tolerance = 0.01

[lloyd]
iterations = 3

[output]
vtk = "wrapped.vtk"
wrap = true
"#,
    );
    let out = laguerre()
        .args(["generate", "--output-dir"])
        .arg(dir.path())
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_ok(&out);

    let vtk = std::fs::read_to_string(dir.path().join("wrapped.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    // Wrapped fragments must sit inside the box.
    let mut lines = vtk.lines();
    let points: usize = lines
        .by_ref()
        .find(|l| l.starts_with("POINTS"))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    for _ in 0..points {
        let line = lines.next().unwrap();
        let mut coords = line.split_whitespace().map(|c| c.parse::<f64>().unwrap());
        let (x, y) = (coords.next().unwrap(), coords.next().unwrap());
        assert!((-1e-9..=1.0 + 1e-9).contains(&x), "{line}");
        assert!((-1e-9..=1.0 + 1e-9).contains(&y), "{line}");
    }
}
