use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use glassmesh::capture::{matting_pipeline, read_corr, read_pgm, write_corr, write_pgm, Scene, SceneTracer};
use glassmesh::carve::{carve_hull, extract_surface};
use glassmesh::eval::{hausdorff, per_vertex_error, write_error_csv, write_error_ply};
use glassmesh::losses::LOSS_CSV_HEADER;
use glassmesh::mesh::io::{load_mesh, save_mesh};
use glassmesh::mesh::shapes;
use glassmesh::optim::{reconstruct as run_reconstruction, Observations};
use glassmesh::rig::TurntableRig;
use glassmesh::{Scene64, TriMesh64, Vec3f64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Units, Weight};
use crate::{Common, Shape};

const SCENE_FILE: &str = "scene.json";
const HULL_FILE: &str = "hull.ply";
const FINAL_FILE: &str = "final.ply";

/// What `simulate` leaves behind for the later stages.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    units: Units,
    gt_mesh: PathBuf,
    rig: TurntableRig<f64>,
    scene: Scene64,
}

fn corr_path(dir: &Path, u: usize) -> PathBuf {
    dir.join(format!("view_{u:03}.corr"))
}

fn mask_path(dir: &Path, u: usize) -> PathBuf {
    dir.join(format!("view_{u:03}.pgm"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_config(common: &Common) -> Result<Config> {
    let mut cfg = Config::load(&common.config)?;
    if let Some(out) = &common.output {
        cfg.paths.output = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Evenly spaced `n` of `total` views.
fn pick_views(total: usize, n: Option<usize>) -> Result<Vec<usize>> {
    match n {
        None => Ok((0..total).collect()),
        Some(n) if n == 0 || n > total => bail!("--views {n} must be between 1 and the {total} simulated views"),
        Some(n) => Ok((0..n).map(|k| k * total / n).collect()),
    }
}

fn load_snapshot(dir: &Path) -> Result<Snapshot> {
    let path = dir.join(SCENE_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let snap: Snapshot = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    snap.scene.validate()?;
    Ok(snap)
}

fn load_masks(dir: &Path, views: &[usize]) -> Result<Vec<glassmesh::geom::Mask>> {
    views.iter().map(|&u| Ok(read_pgm(&mut open(&mask_path(dir, u))?)?)).collect()
}

fn load_observations(dir: &Path, snap: &Snapshot, views: &[usize]) -> Result<Observations<f64>> {
    let corr = views.iter().map(|&u| Ok(read_corr(&mut open(&corr_path(dir, u))?)?)).collect::<Result<Vec<_>>>()?;
    let obs = Observations {
        eta: snap.scene.eta,
        cameras: views.iter().map(|&u| snap.scene.cameras[u].clone()).collect(),
        monitor: snap.scene.monitor.clone(),
        corr,
        masks: load_masks(dir, views)?,
    };
    obs.validate()?;
    Ok(obs)
}

pub fn simulate(common: &Common, matting: bool) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(v) = common.views {
        cfg.scene.rig.views = v;
    }
    let rig = cfg.scene.rig.clone();
    rig.validate()?;
    let gt: TriMesh64 =
        load_mesh(&cfg.scene.mesh).with_context(|| format!("loading {}", cfg.scene.mesh.display()))?;
    gt.validate()?;
    let scene = Scene { gt_mesh: gt, eta: cfg.scene.eta, cameras: rig.cameras(), monitor: rig.monitor() };
    scene.validate()?;
    let dir = &cfg.paths.output;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tracer = SceneTracer::new(&scene)?;
    let views = (0..scene.view_count())
        .into_par_iter()
        .map(|u| {
            let (mut corr, mask) = glassmesh::capture::simulate_with(&tracer, u)?;
            if matting {
                corr = matting_pipeline(&scene, u, 0.5)?;
            }
            Ok((corr, mask))
        })
        .collect::<glassmesh::Result<Vec<_>>>()?;
    for (u, (corr, mask)) in views.iter().enumerate() {
        let mut w = create(&corr_path(dir, u))?;
        write_corr(corr, &mut w)?;
        w.flush()?;
        let mut w = create(&mask_path(dir, u))?;
        write_pgm(mask, &mut w)?;
        w.flush()?;
        log::info!(
            "view {u}: {} two-refraction pixels, {} object pixels",
            corr.count(glassmesh::capture::Tag::TwoRefraction),
            mask.values.iter().filter(|&&m| m != glassmesh::geom::MaskValue::Outside).count()
        );
    }
    let snap = Snapshot { units: cfg.units, gt_mesh: cfg.scene.mesh.clone(), rig, scene };
    let mut w = create(&dir.join(SCENE_FILE))?;
    serde_json::to_writer_pretty(&mut w, &snap)?;
    writeln!(w)?;
    w.flush()?;
    println!("wrote {} views to {}", views.len(), dir.display());
    Ok(())
}

pub fn carve(common: &Common, resolution: Option<usize>) -> Result<()> {
    let cfg = load_config(common)?;
    let dir = &cfg.paths.output;
    let snap = load_snapshot(dir)?;
    let views = pick_views(snap.scene.view_count(), common.views)?;
    let masks = load_masks(dir, &views)?;
    let cams: Vec<_> = views.iter().map(|&u| snap.scene.cameras[u].clone()).collect();
    let res = resolution.unwrap_or(cfg.carve.resolution);
    ensure!(res >= 2, "carve resolution must be at least 2");
    let grid = carve_hull(&masks, &cams, res)?;
    log::info!("carved {} of {} voxels kept", grid.count(), grid.spec.len());
    let hull = extract_surface(&grid)?;
    save_mesh(&hull, dir.join(HULL_FILE))?;
    println!(
        "hull: {} voxels kept of {}, {} vertices, {} faces",
        grid.count(),
        grid.spec.len(),
        hull.vertices.len(),
        hull.triangles.len()
    );
    Ok(())
}

pub fn reconstruct(
    common: &Common,
    stages: Option<usize>,
    iters: Option<usize>,
    weights: [Option<f64>; 3],
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(l) = stages {
        cfg.schedule.stages = l;
    }
    if let Some(n) = iters {
        cfg.schedule.iters_per_stage = n;
    }
    for (slot, w) in [&mut cfg.weights.alpha, &mut cfg.weights.beta, &mut cfg.weights.gamma].into_iter().zip(weights) {
        if let Some(w) = w {
            *slot = Weight::Value(w);
        }
    }
    cfg.validate()?;
    let dir = &cfg.paths.output;
    let snap = load_snapshot(dir)?;
    let views = pick_views(snap.scene.view_count(), common.views)?;
    let obs = load_observations(dir, &snap, &views)?;
    let hull: TriMesh64 = load_mesh(dir.join(HULL_FILE)).context("loading the carved hull (run carve first)")?;
    let schedule = cfg.schedule.for_diaglen(hull.diaglen());
    let result = run_reconstruction(&hull, &obs, &schedule, &cfg.weights.spec(), cfg.seed, Some(dir))?;
    save_mesh(&result.mesh, dir.join(FINAL_FILE))?;
    let mut w = create(&dir.join("loss.csv"))?;
    writeln!(w, "{LOSS_CSV_HEADER}")?;
    for rec in &result.log {
        rec.write_csv(&mut w)?;
    }
    w.flush()?;
    if let Some(last) = result.log.last() {
        println!(
            "final: {} vertices, loss {:e} (refraction {:e}, {} paths)",
            result.mesh.vertices.len(),
            last.total,
            last.refraction,
            last.valid_paths
        );
    }
    Ok(())
}

pub fn evaluate(
    common: &Common,
    recon: Option<PathBuf>,
    gt: Option<PathBuf>,
    align: Option<usize>,
    with_hausdorff: bool,
) -> Result<()> {
    let cfg = load_config(common)?;
    let dir = &cfg.paths.output;
    let recon_path = recon.unwrap_or_else(|| dir.join(FINAL_FILE));
    let gt_path = gt.unwrap_or_else(|| cfg.scene.mesh.clone());
    let recon: TriMesh64 = load_mesh(&recon_path).with_context(|| format!("loading {}", recon_path.display()))?;
    let gt: TriMesh64 = load_mesh(&gt_path).with_context(|| format!("loading {}", gt_path.display()))?;
    let report = per_vertex_error(&recon, &gt, align)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = create(&dir.join("error.csv"))?;
    write_error_csv(&report, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("error.ply"))?;
    write_error_ply(&recon, &report, &mut w)?;
    w.flush()?;
    let unit = match cfg.units {
        Units::Mm => " mm",
        Units::Normalized => "",
    };
    println!("mean {:.6e}{unit}", report.mean);
    println!("normalized {:.6e}", report.mean_normalized);
    if with_hausdorff {
        println!("hausdorff {:.6e}{unit}", hausdorff(&report.transform.apply_mesh(&recon), &gt)?);
    }
    Ok(())
}

pub fn make_shape(shape: Shape, out: &Path, subdiv: u32, size: f64) -> Result<()> {
    ensure!(size > 0.0, "--size must be positive");
    let mesh: TriMesh64 = match shape {
        Shape::Sphere => shapes::icosphere(subdiv, size),
        Shape::Blob => shapes::blob(subdiv, size),
        Shape::Cube => shapes::cube(size),
        Shape::LBlock => shapes::l_block(size),
    };
    save_mesh(&mesh, out).with_context(|| format!("writing {}", out.display()))?;
    let (lo, hi) = mesh.bbox().map_or((Vec3f64::zero(), Vec3f64::zero()), |b| b);
    println!("{} vertices, {} faces, bbox {:?} .. {:?}", mesh.vertices.len(), mesh.triangles.len(), lo, hi);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_subsets_are_even() {
        assert_eq!(pick_views(36, Some(4)).unwrap(), vec![0, 9, 18, 27]);
        assert_eq!(pick_views(8, Some(3)).unwrap(), vec![0, 2, 5]);
        assert_eq!(pick_views(3, None).unwrap(), vec![0, 1, 2]);
        assert!(pick_views(3, Some(4)).is_err());
        assert!(pick_views(3, Some(0)).is_err());
    }
}
