use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glassmesh::capture::{read_corr, Tag};
use glassmesh::mesh::io::load_mesh;
use glassmesh::rig::{monitor_in_world, TurntableRig};
use glassmesh::{CorrespondenceMap64, TriMesh64};

fn glassmesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glassmesh")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = glassmesh(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    glassmesh(args).status.code().unwrap()
}

/// A sphere scene in `dir` with the given config body merged after the mesh.
fn setup(dir: &Path, extra: &str) -> PathBuf {
    let gt = dir.join("gt.obj");
    ok(&["make-shape", "--shape", "sphere", "--subdiv", "3", "--out", gt.to_str().unwrap()]);
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, format!(r#"{{"scene": {{"mesh": "gt.obj", "rig": {{"views": 8}}{extra}}}, "carve": {{"resolution": 64}}, "seed": 7}}"#))
        .unwrap();
    cfg
}

fn read_map(path: &Path) -> CorrespondenceMap64 {
    read_corr(&mut fs::File::open(path).unwrap()).unwrap()
}

fn signed_volume(m: &TriMesh64) -> f64 {
    m.triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| m.vertices[i as usize]);
            a.dot(b.cross(c)) / 6.0
        })
        .sum()
}

#[test]
fn simulate_writes_one_file_pair_per_view() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&["simulate", "--config", c]);
    let out = dir.path().join("out");
    let rig = TurntableRig::<f64>::default();
    for u in 0..8 {
        let map = read_map(&out.join(format!("view_{u:03}.corr")));
        assert_eq!(map.view as usize, u);
        assert_eq!((map.width, map.height), (rig.width, rig.height));
        assert_eq!(map.res, rig.monitor_res);
        assert!(out.join(format!("view_{u:03}.pgm")).exists());
    }
    assert!(!out.join("view_008.corr").exists());
    assert!(out.join("scene.json").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let c = cfg.to_str().unwrap();
    let snapshot = |name: &str| -> Vec<(String, Vec<u8>)> {
        let d = dir.path().join(name);
        let mut files: Vec<_> = fs::read_dir(&d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    for name in ["a", "b"] {
        let o = dir.path().join(name);
        let o = o.to_str().unwrap();
        ok(&["simulate", "--config", c, "--output", o]);
        ok(&["carve", "--config", c, "--output", o]);
    }
    let (a, b) = (snapshot("a"), snapshot("b"));
    assert_eq!(a.len(), 8 * 2 + 2);
    assert_eq!(a, b);
}

#[test]
fn matched_media_pass_straight_through() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), r#", "eta": 1.0"#);
    ok(&["simulate", "--config", cfg.to_str().unwrap()]);
    let rig = TurntableRig::<f64>::default();
    let cams = TurntableRig { views: 8, ..rig.clone() }.cameras();
    let monitor = rig.monitor();
    let mut object = 0;
    for (u, cam) in cams.iter().enumerate() {
        let map = read_map(&dir.path().join(format!("out/view_{u:03}.corr")));
        let world = monitor_in_world(cam, &monitor);
        for idx in 0..map.tags.len() {
            let (i, j) = map.pixel(idx);
            let Some(q) = map.q[idx] else { continue };
            let direct = world.intersect(&cam.pixel_ray(i, j)).unwrap();
            assert!((q - direct).norm() < 1e-9, "view {u} pixel ({i},{j})");
            if map.tags[idx] == Tag::TwoRefraction {
                object += 1;
            }
        }
    }
    assert!(object > 0);
}

#[test]
fn carved_sphere_hull_is_tight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&["simulate", "--config", c]);
    let printed = ok(&["carve", "--config", c]);
    assert!(printed.contains("voxels kept"));
    let hull: TriMesh64 = load_mesh(dir.path().join("out/hull.ply")).unwrap();
    let gt: TriMesh64 = load_mesh(dir.path().join("gt.obj")).unwrap();
    let ratio = signed_volume(&hull) / signed_volume(&gt);
    assert!((1.0..=1.35).contains(&ratio), "hull/gt volume {ratio}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&["carve", "--config", c]), 1);
    ok(&["simulate", "--config", c]);
    fs::remove_file(dir.path().join("out/view_003.pgm")).unwrap();
    assert_eq!(code(&["carve", "--config", c]), 1);

    ok(&["simulate", "--config", c]);
    for u in 0..8 {
        let p = dir.path().join(format!("out/view_{u:03}.pgm"));
        let mut bytes = fs::read(&p).unwrap();
        let n = bytes.len() - 64 * 64;
        bytes[n..].fill(0);
        fs::write(&p, bytes).unwrap();
    }
    assert_eq!(code(&["carve", "--config", c]), 2);

    assert_eq!(code(&["simulate", "--config", "missing.json"]), 1);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"scene": {"mesh": "gt.obj"}, "learning_rate": 1}"#).unwrap();
    assert_eq!(code(&["simulate", "--config", bad.to_str().unwrap()]), 1);
    fs::write(&bad, r#"{"scene": {"mesh": "nope.obj"}}"#).unwrap();
    assert_eq!(code(&["simulate", "--config", bad.to_str().unwrap()]), 1);
}

#[test]
fn help_documents_config_keys() {
    let help = ok(&["reconstruct", "--help"]);
    for key in ["scene.rig.monitor_res", "schedule.step_fraction", "weights.gamma", "paths.output", "units", "--weights.alpha"] {
        assert!(help.contains(key), "{key}");
    }
}

#[test]
fn evaluate_reports_mean_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let c = cfg.to_str().unwrap();
    let gt = dir.path().join("gt.obj");
    let mean = |recon: &Path| -> f64 {
        let s = ok(&["evaluate", "--config", c, "--recon", recon.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
        s.lines().find_map(|l| l.strip_prefix("mean ")).unwrap().trim().parse().unwrap()
    };
    assert_eq!(mean(&gt), 0.0);
    assert!(dir.path().join("out/error.csv").exists() && dir.path().join("out/error.ply").exists());
    let fine = dir.path().join("big.ply");
    ok(&["make-shape", "--shape", "sphere", "--subdiv", "3", "--size", "0.51", "--out", fine.to_str().unwrap()]);
    let m = mean(&fine);
    assert!((m - 0.01).abs() < 0.0005, "{m}");
    assert_eq!(code(&["evaluate", "--config", c, "--recon", "missing.ply"]), 1);
}

#[test]
fn reconstruct_ablations_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let c = cfg.to_str().unwrap();
    fs::write(
        &cfg,
        r#"{"scene": {"mesh": "gt.obj", "rig": {"views": 9}}, "carve": {"resolution": 32}, "schedule": {"stages": 3, "iters_per_stage": 2}}"#,
    )
    .unwrap();
    ok(&["simulate", "--config", c]);
    ok(&["carve", "--config", c]);
    ok(&["reconstruct", "--config", c, "--stages", "1", "--weights.alpha", "0"]);
    let out = dir.path().join("out");
    let log = fs::read_to_string(out.join("loss.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 2);
    assert!(log.starts_with(glassmesh::losses::LOSS_CSV_HEADER));
    assert!(out.join("stage_1.ply").exists() && out.join("final.ply").exists());
    assert!(!out.join("stage_2.ply").exists());
    ok(&["reconstruct", "--config", c, "--iters", "1"]);
    assert_eq!(fs::read_to_string(out.join("loss.csv")).unwrap().lines().count(), 1 + 3);
    assert!(out.join("stage_3.ply").exists());
    assert_eq!(code(&["reconstruct", "--config", c, "--views", "4"]), 1);
}
