use std::path::{Path, PathBuf};
use std::time::Instant;

use proxmag::export::{mag_db_gray, phase_difference, phase_rgb, psnr, psnr_gain_matched};
use proxmag::operator::LinearOperator;
use proxmag::regularizers::build;
use proxmag::sar::{
    geometry_path, multi_channel_operator, noise_sigma_for_snr, phase_history_path, read_channel, simulate_scene,
    write_channel, FreqOperator, GeometryFile, SceneGrid, TimeOperator,
};
use proxmag::solvers::{backprojection_start, reconstruct, LiftStats, Problem};
use proxmag::suites;
use proxmag::{cimg, Complex64, ComplexImage, Error, Shape};
use serde::Serialize;

use crate::config::{ExperimentConfig, OperatorKind};
use crate::output::{write_gray, write_json, write_rgb};
use crate::CliError;

pub const TRUTH_FILE: &str = "truth.cimg";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let grid = cfg.scene.grid()?;
    let phantom = cfg.scene.phantom_spec();
    let k = cfg.scene.channels;
    let mut truth = Vec::with_capacity(k * grid.len());
    let mut written = Vec::new();
    for c in 0..k {
        let geometry = cfg.channel_geometry(c).build([0.0; 3])?;
        let op = FreqOperator::new(geometry.clone(), grid)?;
        let seed = cfg.seed.wrapping_add(c as u64);
        let sigma = match (cfg.scene.noise_sigma, cfg.scene.snr_db) {
            (Some(s), _) => s,
            (None, Some(snr)) => {
                let (_, clean) = simulate_scene(&op, &phantom, 0.0, seed)?;
                noise_sigma_for_snr(clean.data(), snr)
            }
            (None, None) => 0.0,
        };
        let (scene, history) = simulate_scene(&op, &phantom, sigma, seed)?;
        truth.extend_from_slice(scene.reflectivity.data());
        write_channel(dir, c, &history, &GeometryFile { geometry, grid })?;
        written.push(phase_history_path(dir, c));
        written.push(geometry_path(dir, c));
    }
    let truth = ComplexImage::new(Shape::new(k, grid.height, grid.width), truth)?;
    let path = dir.join(TRUTH_FILE);
    cimg::write(&path, &truth)?;
    written.push(path);

    let [lo, hi] = cfg.render.db_window;
    let preview = dir.join("truth_mag_db.pgm");
    write_gray(&preview, grid.width, k * grid.height, &mag_db_gray(truth.data(), (lo, hi))?)?;
    written.push(preview);

    let resolved = dir.join("experiment.json");
    write_json(&resolved, cfg)?;
    written.push(resolved);
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct Metrics {
    pub regularizer: String,
    pub lambda: f64,
    pub channels: usize,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_misfit: f64,
    pub final_reg: f64,
    pub operator_norm: f64,
    /// Magnitude PSNR against the ground truth, when available.
    pub psnr_db: Option<f64>,
    /// Backprojection PSNR after the least-squares gain fit.
    pub psnr_backprojection_db: Option<f64>,
    /// Backprojection PSNR at its `Aᴴd/‖A‖²` scale.
    pub psnr_backprojection_raw_db: Option<f64>,
    pub lift: LiftStats,
    pub seconds: f64,
}

fn count_channels(dir: &Path) -> usize {
    (0..).take_while(|&c| phase_history_path(dir, c).exists()).count()
}

fn channel_operator(cfg: &ExperimentConfig, geom: GeometryFile) -> Result<Box<dyn LinearOperator<Complex64>>, CliError> {
    Ok(match cfg.operator.kind {
        OperatorKind::Freq => Box::new(FreqOperator::new(geom.geometry, geom.grid)?),
        OperatorKind::Time => Box::new(TimeOperator::new(geom.geometry, geom.grid, cfg.operator.upsample)?),
    })
}

pub fn reconstruct_cmd(cfg: &ExperimentConfig, data_dir: &Path) -> Result<Metrics, CliError> {
    let start = Instant::now();
    let k = count_channels(data_dir);
    if k == 0 {
        return Err(CliError::Runtime(format!(
            "no phase history found: {}",
            phase_history_path(data_dir, 0).display()
        )));
    }
    let mut grid: Option<SceneGrid> = None;
    let mut data = Vec::new();
    let mut ops = Vec::with_capacity(k);
    for c in 0..k {
        let (history, geom) = read_channel(data_dir, c)?;
        match grid {
            None => grid = Some(geom.grid),
            Some(g) if g != geom.grid => {
                return Err(CliError::Runtime(format!("channel {c} uses a different scene grid")));
            }
            _ => {}
        }
        data.extend_from_slice(history.data());
        ops.push(channel_operator(cfg, geom)?);
    }
    let grid = grid.expect("at least one channel");
    let shape = Shape::new(k, grid.height, grid.width);
    let op: Box<dyn LinearOperator<Complex64>> = if k == 1 {
        ops.pop().expect("one operator")
    } else {
        Box::new(multi_channel_operator(ops)?)
    };
    let reg = build(&cfg.regularizer, shape).map_err(CliError::usage)?;
    let problem = Problem {
        operator: op.as_ref(),
        data: &data,
        shape,
        regularizer: reg.as_ref(),
    };

    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let trace_path = dir.join("recon_trace.csv");
    let rec = match reconstruct(&problem, &cfg.solver) {
        Ok(r) => r,
        Err(Error::Solver {
            iteration,
            message,
            trace,
        }) => {
            trace.write_csv(&trace_path)?;
            return Err(CliError::Runtime(format!(
                "solver failed at iteration {iteration}: {message} (trace in {})",
                trace_path.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    rec.trace.write_csv(&trace_path)?;

    let [lo, hi] = cfg.render.db_window;
    let h = k * grid.height;
    cimg::write(dir.join("recon.cimg"), &rec.image)?;
    cimg::write(dir.join("backprojection.cimg"), &rec.initial)?;
    let gray = mag_db_gray(rec.image.data(), (lo, hi))?;
    write_gray(&dir.join("recon_mag_db.pgm"), grid.width, h, &gray)?;
    write_gray(&dir.join("recon_mag_db.png"), grid.width, h, &gray)?;
    write_rgb(&dir.join("recon_phase.png"), grid.width, h, &phase_rgb(rec.image.data()))?;

    let truth_path = data_dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        let t = cimg::read(&truth_path)?;
        (t.shape() == shape).then(|| t.magnitudes())
    } else {
        None
    };
    let bp = backprojection_start(op.as_ref(), &data);
    let bp_mag: Vec<f64> = bp.iter().map(|v| v.norm()).collect();
    let last = rec.trace.last().copied();
    let metrics = Metrics {
        regularizer: cfg.regularizer.name.clone(),
        lambda: cfg.regularizer.lambda,
        channels: k,
        iterations: last.map_or(0, |r| r.iteration),
        final_objective: last.map_or(f64::NAN, |r| r.objective),
        final_misfit: last.map_or(f64::NAN, |r| r.misfit),
        final_reg: last.map_or(f64::NAN, |r| r.reg),
        operator_norm: op.norm_estimate(),
        psnr_db: truth.as_ref().map(|t| psnr(&rec.image.magnitudes(), t)),
        psnr_backprojection_db: truth.as_ref().map(|t| psnr_gain_matched(&bp_mag, t)),
        psnr_backprojection_raw_db: truth.as_ref().map(|t| psnr(&bp_mag, t)),
        lift: rec.lift,
        seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("recon_metrics.json"), &metrics)?;
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RenderMode {
    MagDb,
    Phase,
    PhaseDiff,
}

pub struct RenderRequest<'a> {
    pub mode: RenderMode,
    pub input: &'a Path,
    pub other: Option<&'a Path>,
    pub output: &'a Path,
    pub window: (f64, f64),
    pub channel: Option<usize>,
}

fn select_channel(img: ComplexImage, channel: Option<usize>) -> Result<ComplexImage, CliError> {
    let s = img.shape();
    match channel {
        None => Ok(img),
        Some(c) if c < s.channels => Ok(ComplexImage::new(Shape::single(s.height, s.width), img.channel(c).to_vec())?),
        Some(c) => Err(CliError::Usage(format!("channel {c} out of range for shape {s}"))),
    }
}

/// Channels are stacked vertically in the output image.
pub fn render(req: &RenderRequest<'_>) -> Result<(), CliError> {
    let img = select_channel(cimg::read(req.input)?, req.channel)?;
    let s = img.shape();
    let (w, h) = (s.width, s.channels * s.height);
    match req.mode {
        RenderMode::MagDb => write_gray(req.output, w, h, &mag_db_gray(img.data(), req.window)?),
        RenderMode::Phase => write_rgb(req.output, w, h, &phase_rgb(img.data())),
        RenderMode::PhaseDiff => {
            let other = req
                .other
                .ok_or_else(|| CliError::usage("phase-diff needs a second input (--other)"))?;
            let b = select_channel(cimg::read(other)?, req.channel)?;
            let d = phase_difference(&img, &b).map_err(CliError::usage)?;
            if req.output.extension().is_some_and(|e| e == "cimg") {
                let unit: Vec<Complex64> = d
                    .data()
                    .iter()
                    .map(|v| if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(0.0, 0.0) })
                    .collect();
                Ok(cimg::write(req.output, &ComplexImage::new(d.shape(), unit)?)?)
            } else {
                write_rgb(req.output, w, h, &phase_rgb(d.data()))
            }
        }
    }
}

/// Runs a verification suite; `Ok(true)` when every property passed.
pub fn prox_test(suite: &str, seed: u64, json: bool) -> Result<bool, CliError> {
    if !suites::SUITES.contains(&suite) {
        return Err(CliError::Usage(format!(
            "unknown suite '{suite}', expected one of {}",
            suites::SUITES.join(", ")
        )));
    }
    let report = suites::run_suite(suite, seed)?;
    if json {
        let s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("{s}");
    } else {
        print!("{}", report.render());
    }
    Ok(report.passed())
}
