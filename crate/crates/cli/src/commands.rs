use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use qpic_core::eval::{
    compare_error_series, default_velocity_range, energy_distance, growth_summary, summarize_errors,
    velocity_histogram, ErrorSummary, MRAE_DEFINITION,
};
use qpic_core::hybrid::{calibrate_scale, prediction_errors, run_hybrid, Rescale, SurrogateSolver};
use qpic_core::io::{
    read_diagnostics_csv, read_frames_csv, read_paired_csv, read_phase_csv, write_diagnostics_csv, write_frames_csv,
    write_histogram_csv, write_json, write_loss_csv, write_paired_csv, write_phase_csv, Checkpoint,
};
use qpic_core::nn::{Model, ModelKind, ModelSpec};
use qpic_core::pic::{run_simulation, PhaseSnapshot, PoissonSolver, RecordOptions, SimulationResult, SpectralPoisson};
use qpic_core::training::{baseline_frames, dataset_from_frames, train_parallel, Dataset};

use crate::config::{Config, RescaleMode};
use crate::manifest::{artifact, RunManifest};
use crate::UsageError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverArg {
    Baseline,
    Model(PathBuf),
}

pub fn parse_solver(s: &str) -> Result<SolverArg, String> {
    match s {
        "baseline" => Ok(SolverArg::Baseline),
        _ => match s.strip_prefix("model:") {
            Some(p) if !p.is_empty() => Ok(SolverArg::Model(PathBuf::from(p))),
            _ => Err(format!("expected `baseline` or `model:PATH`, got `{s}`")),
        },
    }
}

fn out_dir(config: &Config) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating output directory {}", config.out_dir.display()))?;
    Ok(config.out_dir.clone())
}

/// One frame file of a dataset, in pooling order.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct FrameFile {
    velocity: f64,
    file: String,
}

const DATASET_MANIFEST: &str = "dataset.json";

pub fn generate(config: &Config) -> anyhow::Result<()> {
    if config.velocities.is_empty() {
        bail!(UsageError("the velocity list is empty".into()));
    }
    let dir = config.dataset_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating dataset directory {}", dir.display()))?;
    let base = config.sim_for(config.velocities[0]);
    let runs = baseline_frames(&base, &config.velocities)?;
    let mut manifest = RunManifest::new("generate", config);
    let mut files = Vec::new();
    for (v, frames) in config.velocities.iter().zip(&runs) {
        let name = format!("frames_{}.csv", v);
        let path = dir.join(&name);
        write_frames_csv(&path, frames)?;
        manifest.output(&path)?;
        files.push(FrameFile {
            velocity: *v,
            file: name,
        });
    }
    let ds = dataset_from_frames(&base, &config.velocities, &runs, config.samples)?;
    manifest.note("frame_files", &files)?;
    manifest.note("frames_total", ds.provenance.frames_total)?;
    manifest.note("samples", ds.len())?;
    manifest.note("selected", &ds.provenance.selected)?;
    manifest.note("warnings", &ds.provenance.warnings)?;
    manifest.write(&dir.join(DATASET_MANIFEST))?;
    println!(
        "wrote {} frame files and a {}-sample dataset manifest to {}",
        files.len(),
        ds.len(),
        dir.display()
    );
    Ok(())
}

/// Rebuilds the dataset described by a generation manifest.
fn load_dataset(dir: &Path) -> anyhow::Result<(Dataset, RunManifest)> {
    let mpath = dir.join(DATASET_MANIFEST);
    if !mpath.exists() {
        bail!("dataset manifest {} not found", mpath.display());
    }
    let manifest = RunManifest::read(&mpath)?;
    let files: Vec<FrameFile> = serde_json::from_value(
        manifest
            .notes
            .get("frame_files")
            .cloned()
            .ok_or_else(|| anyhow!("dataset manifest lists no frame files"))?,
    )?;
    let mut runs = Vec::new();
    let mut velocities = Vec::new();
    for f in &files {
        let path = dir.join(&f.file);
        let recorded = manifest
            .outputs
            .iter()
            .find(|a| a.path.file_name() == path.file_name())
            .ok_or_else(|| anyhow!("{} is not listed in the dataset manifest", f.file))?;
        if artifact(&path)?.sha256 != recorded.sha256 {
            bail!("{} does not match the hash recorded at generation", path.display());
        }
        runs.push(read_frames_csv(&path)?);
        velocities.push(f.velocity);
    }
    let gen = &manifest.config;
    let base = gen.sim_for(velocities[0]);
    let ds = dataset_from_frames(&base, &velocities, &runs, gen.samples)?;
    Ok((ds, manifest))
}

pub fn train(config: &Config) -> anyhow::Result<()> {
    let spec = config.model_spec()?;
    let (ds, dmanifest) = load_dataset(&config.dataset_dir)?;
    if dmanifest.config.n_cells != spec.width {
        bail!(
            "dataset grid has {} cells but the model expects {}",
            dmanifest.config.n_cells,
            spec.width
        );
    }
    let dir = out_dir(config)?;
    let tc = config.train_config();
    let outcome = train_parallel(&spec, &ds, &tc)?;
    let ckpt = Checkpoint {
        spec,
        seed: config.seed,
        params: outcome.params,
        scale_calibration: Some(calibrate_scale(&ds)?),
        train: Some(tc),
    };
    let ckpt_path = dir.join("model.json");
    ckpt.save(&ckpt_path)?;
    let loss_path = dir.join("loss.csv");
    write_loss_csv(&loss_path, &outcome.history)?;

    let mut manifest = RunManifest::new("train", config);
    manifest.input(&config.dataset_dir.join(DATASET_MANIFEST))?;
    manifest.output(&ckpt_path)?;
    manifest.timing_output(&loss_path)?;
    manifest.note("param_count", spec.param_count())?;
    manifest.note("final_loss", outcome.history.last().map(|r| r.loss))?;
    manifest.write(&dir.join("manifest.json"))?;
    println!(
        "trained {} ({} parameters) for {} epochs; checkpoint {}",
        spec.kind,
        spec.param_count(),
        config.epochs,
        ckpt_path.display()
    );
    Ok(())
}

fn load_checkpoint(path: &Path, config: &Config) -> anyhow::Result<Checkpoint> {
    if !path.exists() {
        bail!("checkpoint {} not found", path.display());
    }
    let ckpt = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if ckpt.spec.width != config.n_cells {
        bail!(
            "checkpoint expects a {}-cell grid but the configuration has {}",
            ckpt.spec.width,
            config.n_cells
        );
    }
    Ok(ckpt)
}

fn surrogate(
    ckpt: &Checkpoint,
    config: &Config,
    baseline: Option<&SimulationResult>,
) -> anyhow::Result<SurrogateSolver> {
    let rescale = match config.rescale {
        RescaleMode::Calibrated => Rescale::Calibrated(
            ckpt.scale_calibration
                .ok_or_else(|| anyhow!("checkpoint has no scale calibration; use rescale=oracle"))?,
        ),
        RescaleMode::Oracle => {
            let b = baseline.ok_or_else(|| anyhow!("oracle rescaling needs a baseline run"))?;
            Rescale::oracle_from_frames(&b.frames)?
        }
    };
    Ok(SurrogateSolver::new(ckpt.model()?, rescale)?)
}

fn snapshot_of(result: &SimulationResult, step: usize) -> PhaseSnapshot {
    PhaseSnapshot {
        step,
        positions: result.particles.positions.clone(),
        velocities: result.particles.velocities.clone(),
        beam: result.particles.beam.clone(),
    }
}

pub fn simulate(config: &Config, solver: &SolverArg, pair_baseline: bool) -> anyhow::Result<()> {
    let sim = config.sim_for(config.velocity);
    let dir = out_dir(config)?;
    let record = RecordOptions {
        frames: true,
        snapshot_every: config.snapshot_every,
    };
    let mut manifest = RunManifest::new("simulate", config);
    let ckpt = match solver {
        SolverArg::Model(p) => {
            let c = load_checkpoint(p, config)?;
            manifest.input(p)?;
            Some(c)
        }
        SolverArg::Baseline => None,
    };
    let need_baseline = pair_baseline || (ckpt.is_some() && config.rescale == RescaleMode::Oracle);
    let baseline = if need_baseline {
        Some(run_simulation(
            &sim,
            &mut SpectralPoisson::new(sim.n_cells, sim.dx()),
            RecordOptions::frames(),
        )?)
    } else {
        None
    };
    let mut solver: Box<dyn PoissonSolver> = match &ckpt {
        Some(c) => {
            let s = surrogate(c, config, baseline.as_ref())?;
            manifest.note("rescale", s.rescale.mode_name())?;
            Box::new(s)
        }
        None => Box::new(SpectralPoisson::new(sim.n_cells, sim.dx())),
    };
    let paired_base = if pair_baseline { baseline.as_ref() } else { None };
    let hybrid = run_hybrid(&sim, &mut solver, record, paired_base)?;
    let result = &hybrid.result;

    let diag = dir.join("diagnostics.csv");
    write_diagnostics_csv(&diag, &result.diagnostics)?;
    manifest.output(&diag)?;
    let frames = dir.join("frames.csv");
    write_frames_csv(&frames, &result.frames)?;
    manifest.output(&frames)?;
    let phase = dir.join("phase_final.csv");
    write_phase_csv(&phase, &snapshot_of(result, sim.n_steps))?;
    manifest.output(&phase)?;
    for snap in &result.snapshots {
        let p = dir.join(format!("phase_{:05}.csv", snap.step));
        write_phase_csv(&p, snap)?;
        manifest.output(&p)?;
    }
    let hist = velocity_histogram(&result.particles.velocities, config.bins, default_velocity_range(&sim))?;
    let hpath = dir.join("velocity_histogram.csv");
    write_histogram_csv(&hpath, &hist)?;
    manifest.output(&hpath)?;
    if let Some(rows) = &hybrid.paired {
        let p = dir.join("paired.csv");
        write_paired_csv(&p, rows)?;
        manifest.output(&p)?;
        let errors: Vec<f64> = rows.iter().map(|r| r.mrae_e).collect();
        manifest.note("mrae_definition", MRAE_DEFINITION)?;
        manifest.note("mrae_summary", summarize_errors(&errors)?)?;
        if let Some(b) = &baseline {
            manifest.note(
                "velocity_energy_distance",
                energy_distance(&result.particles.velocities, &b.particles.velocities)?,
            )?;
        }
    }
    manifest.note("initial_total_energy", result.diagnostics.rows.first().map(|r| r.total))?;
    manifest.note("relative_energy_drift", result.diagnostics.relative_energy_drift())?;
    manifest.write(&dir.join("manifest.json"))?;
    println!(
        "simulated {} steps; initial total energy {:.6}; outputs in {}",
        sim.n_steps,
        result.diagnostics.rows.first().map_or(f64::NAN, |r| r.total),
        dir.display()
    );
    Ok(())
}

fn require(path: &Path) -> anyhow::Result<()> {
    if !path.exists() {
        bail!("input {} not found", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareReport {
    inputs: [PathBuf; 2],
    comparison: qpic_core::eval::PairedComparison,
    velocity_energy_distance: Option<f64>,
}

pub fn compare(config: &Config, a: &Path, b: &Path, phases: Option<(&Path, &Path)>) -> anyhow::Result<()> {
    require(a)?;
    require(b)?;
    let ea: Vec<f64> = read_paired_csv(a)?.iter().map(|r| r.mrae_e).collect();
    let eb: Vec<f64> = read_paired_csv(b)?.iter().map(|r| r.mrae_e).collect();
    let comparison = compare_error_series(&ea, &eb)?;
    let distance = match phases {
        Some((pa, pb)) => {
            require(pa)?;
            require(pb)?;
            Some(energy_distance(
                &read_phase_csv(pa)?.velocities,
                &read_phase_csv(pb)?.velocities,
            )?)
        }
        None => None,
    };
    let dir = out_dir(config)?;
    let report = CompareReport {
        inputs: [a.to_path_buf(), b.to_path_buf()],
        comparison,
        velocity_energy_distance: distance,
    };
    let path = dir.join("compare.json");
    write_json(&path, &report)?;
    println!(
        "median MRAE {:.4} vs {:.4}; Wilcoxon p = {:.3e}",
        report.comparison.a.median, report.comparison.b.median, report.comparison.wilcoxon.p_value
    );
    Ok(())
}

#[derive(Serialize)]
struct PhaseReport {
    inputs: [PathBuf; 2],
    velocity_energy_distance: f64,
    bins: usize,
    range: (f64, f64),
}

pub fn phase(config: &Config, a: &Path, b: &Path) -> anyhow::Result<()> {
    require(a)?;
    require(b)?;
    let (pa, pb) = (read_phase_csv(a)?, read_phase_csv(b)?);
    let dir = out_dir(config)?;
    let range = default_velocity_range(&config.sim_for(config.velocity));
    for (name, snap) in [("histogram_a.csv", &pa), ("histogram_b.csv", &pb)] {
        write_histogram_csv(
            &dir.join(name),
            &velocity_histogram(&snap.velocities, config.bins, range)?,
        )?;
    }
    let report = PhaseReport {
        inputs: [a.to_path_buf(), b.to_path_buf()],
        velocity_energy_distance: energy_distance(&pa.velocities, &pb.velocities)?,
        bins: config.bins,
        range,
    };
    write_json(&dir.join("phase.json"), &report)?;
    println!("velocity energy distance {:.6}", report.velocity_energy_distance);
    Ok(())
}

pub fn growth(config: &Config, diagnostics: &Path) -> anyhow::Result<()> {
    require(diagnostics)?;
    let g = growth_summary(&read_diagnostics_csv(diagnostics)?)?;
    write_json(&out_dir(config)?.join("growth.json"), &g)?;
    println!(
        "growth rate {:.4}; saturation {:.4e} ({:.1}x initial)",
        g.growth_rate,
        g.saturation_level,
        g.saturation_level / g.initial_level
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    ansatz: String,
    nl: usize,
    params: usize,
    median: f64,
    q1: f64,
    q3: f64,
    final_loss: f64,
}

/// Median held-out field error of a model in oracle rescaling.
fn heldout_summary(model: Model, held_out: &SimulationResult, dx: f64) -> anyhow::Result<ErrorSummary> {
    let solver = SurrogateSolver::new(model, Rescale::oracle_from_frames(&held_out.frames)?)?;
    Ok(summarize_errors(&prediction_errors(&solver, &held_out.frames, dx)?)?)
}

pub fn sweep(config: &Config) -> anyhow::Result<()> {
    if config.sweep_nl.is_empty() || config.sweep_ansatz.is_empty() {
        bail!(UsageError("sweep needs at least one layer count and one ansatz".into()));
    }
    let (ds, _) = load_dataset(&config.dataset_dir)?;
    let sim = config.sim_for(config.velocity);
    let held_out = run_simulation(
        &sim,
        &mut SpectralPoisson::new(sim.n_cells, sim.dx()),
        RecordOptions::frames(),
    )?;
    let cqc = Config {
        model: ModelKind::Cqc,
        ..config.clone()
    };
    let dir = out_dir(config)?;
    let path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut rows = 0;
    for &kind in &config.sweep_ansatz {
        for &nl in &config.sweep_nl {
            let spec: ModelSpec = cqc.spec_with(kind, nl)?;
            let out = train_parallel(&spec, &ds, &config.train_config())?;
            let final_loss = out.history.last().map_or(f64::NAN, |r| r.loss);
            let s = heldout_summary(Model::new(spec, out.params)?, &held_out, sim.dx())?;
            w.serialize(SweepRow {
                ansatz: kind.short_name().to_string(),
                nl,
                params: spec.param_count(),
                median: s.median,
                q1: s.q1,
                q3: s.q3,
                final_loss,
            })?;
            rows += 1;
            log::info!("sweep {} NL={nl}: median {:.4}", kind.short_name(), s.median);
        }
    }
    w.flush()?;
    let mut manifest = RunManifest::new("evaluate sweep", config);
    manifest.input(&config.dataset_dir.join(DATASET_MANIFEST))?;
    manifest.output(&path)?;
    manifest.note("rows", rows)?;
    manifest.note("rescale", "oracle")?;
    manifest.note("mrae_definition", MRAE_DEFINITION)?;
    manifest.write(&dir.join("manifest.json"))?;
    println!("wrote {rows}-row sweep table to {}", path.display());
    Ok(())
}
