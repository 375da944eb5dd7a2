//! Plot-ready CSV files and JSON checkpoints.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Histogram;
use crate::hybrid::PairedRow;
use crate::nn::{Model, ModelSpec};
use crate::pic::{DiagnosticsRow, DiagnosticsSeries, Frame, PhaseSnapshot};
use crate::training::{EpochRecord, TrainConfig};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    Ok(csv::Reader::from_reader(BufReader::new(File::open(path)?)))
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {what} from `{field}`")))
}

/// `step,rho_0..rho_{n-1},phi_0..phi_{n-1}`.
pub fn write_frames_csv(path: &Path, frames: &[Frame]) -> Result<()> {
    let n = frames.first().map_or(0, |f| f.rho.len());
    let mut w = writer(path)?;
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("rho_{i}")));
    header.extend((0..n).map(|i| format!("phi_{i}")));
    w.write_record(&header)?;
    for f in frames {
        if f.rho.len() != n || f.phi.len() != n {
            return Err(Error::Dimension {
                context: "frame width",
                expected: n,
                got: f.rho.len().max(f.phi.len()),
            });
        }
        let mut rec = vec![f.step.to_string()];
        rec.extend(f.rho.iter().chain(&f.phi).map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frames_csv(path: &Path) -> Result<Vec<Frame>> {
    let mut r = reader(path)?;
    let cols = r.headers()?.len();
    if cols < 3 || (cols - 1) % 2 != 0 {
        return Err(Error::Format(format!(
            "frame file {} has {cols} columns",
            path.display()
        )));
    }
    let n = (cols - 1) / 2;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let values: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|v| parse(v, "field value"))
            .collect::<Result<_>>()?;
        out.push(Frame {
            step: parse(&rec[0], "step")?,
            rho: values[..n].to_vec(),
            phi: values[n..].to_vec(),
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct DiagRecord {
    step: usize,
    time: f64,
    kinetic: f64,
    field: f64,
    total: f64,
    #[serde(rename = "max_abs_E")]
    max_abs_e: f64,
}

/// `step,time,kinetic,field,total,max_abs_E`.
pub fn write_diagnostics_csv(path: &Path, series: &DiagnosticsSeries) -> Result<()> {
    let mut w = writer(path)?;
    for r in &series.rows {
        w.serialize(DiagRecord {
            step: r.step,
            time: r.time,
            kinetic: r.kinetic,
            field: r.field,
            total: r.total,
            max_abs_e: r.max_abs_e,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics_csv(path: &Path) -> Result<DiagnosticsSeries> {
    let rows = reader(path)?
        .deserialize::<DiagRecord>()
        .map(|r| {
            r.map(|r| DiagnosticsRow {
                step: r.step,
                time: r.time,
                kinetic: r.kinetic,
                field: r.field,
                total: r.total,
                max_abs_e: r.max_abs_e,
            })
            .map_err(Error::from)
        })
        .collect::<Result<_>>()?;
    Ok(DiagnosticsSeries { rows })
}

#[derive(Serialize, Deserialize)]
struct PhaseRecord {
    x: f64,
    v: f64,
    beam_id: u8,
}

/// `x,v,beam_id`.
pub fn write_phase_csv(path: &Path, snapshot: &PhaseSnapshot) -> Result<()> {
    let mut w = writer(path)?;
    for ((x, v), b) in snapshot.positions.iter().zip(&snapshot.velocities).zip(&snapshot.beam) {
        w.serialize(PhaseRecord {
            x: *x,
            v: *v,
            beam_id: *b,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a phase-space file back; the step is not stored and is set to 0.
pub fn read_phase_csv(path: &Path) -> Result<PhaseSnapshot> {
    let mut snap = PhaseSnapshot {
        step: 0,
        positions: Vec::new(),
        velocities: Vec::new(),
        beam: Vec::new(),
    };
    for rec in reader(path)?.deserialize::<PhaseRecord>() {
        let rec = rec?;
        snap.positions.push(rec.x);
        snap.velocities.push(rec.v);
        snap.beam.push(rec.beam_id);
    }
    Ok(snap)
}

/// `epoch,loss,wall_ms`.
pub fn write_loss_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = writer(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<EpochRecord>> {
    reader(path)?.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Serialize, Deserialize)]
struct PairedRecord {
    step: usize,
    #[serde(rename = "mrae_E")]
    mrae_e: f64,
    #[serde(rename = "baseline_maxE")]
    baseline_max_e: f64,
    #[serde(rename = "hybrid_maxE")]
    hybrid_max_e: f64,
}

/// `step,mrae_E,baseline_maxE,hybrid_maxE`.
pub fn write_paired_csv(path: &Path, rows: &[PairedRow]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(PairedRecord {
            step: r.step,
            mrae_e: r.mrae_e,
            baseline_max_e: r.baseline_max_e,
            hybrid_max_e: r.hybrid_max_e,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_paired_csv(path: &Path) -> Result<Vec<PairedRow>> {
    reader(path)?
        .deserialize::<PairedRecord>()
        .map(|r| {
            r.map(|r| PairedRow {
                step: r.step,
                mrae_e: r.mrae_e,
                baseline_max_e: r.baseline_max_e,
                hybrid_max_e: r.hybrid_max_e,
            })
            .map_err(Error::from)
        })
        .collect()
}

/// `bin_lo,bin_hi,count,density`.
pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bin_lo", "bin_hi", "count", "density"])?;
    for (k, (c, d)) in h.counts.iter().zip(&h.density).enumerate() {
        w.write_record([
            h.edges[k].to_string(),
            h.edges[k + 1].to_string(),
            c.to_string(),
            d.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A trained model with everything needed to use it as a solver.
///
/// `params` follows the stack order of the spec: for each linear layer the
/// row-major `[out][in]` weights then the bias, and the circuit angles in
/// ansatz order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub seed: u64,
    pub params: Vec<f64>,
    /// Mean `s_phi / s_rho` of the training set.
    #[serde(default)]
    pub scale_calibration: Option<f64>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

impl Checkpoint {
    pub fn model(&self) -> Result<Model> {
        Model::new(self.spec, self.params.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: Checkpoint = read_json(path)?;
        ckpt.spec.validate()?;
        if ckpt.params.len() != ckpt.spec.param_count() {
            return Err(Error::Dimension {
                context: "checkpoint parameters",
                expected: ckpt.spec.param_count(),
                got: ckpt.params.len(),
            });
        }
        Ok(ckpt)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;
    use crate::qsim::{AnsatzKind, AnsatzSpec};

    #[test]
    fn frames_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("frames.csv");
        let frames = vec![
            Frame {
                step: 0,
                rho: vec![0.1, -1.0 / 3.0, 1e-300],
                phi: vec![2.0, f64::MIN_POSITIVE, -7.25],
            },
            Frame {
                step: 1,
                rho: vec![0.0, 1.0, 2.0],
                phi: vec![3.0, 4.0, 5.0],
            },
        ];
        write_frames_csv(&p, &frames).unwrap();
        assert_eq!(read_frames_csv(&p).unwrap(), frames);
        let header = std::fs::read_to_string(&p).unwrap();
        assert!(header.starts_with("step,rho_0,rho_1,rho_2,phi_0,phi_1,phi_2\n"));
    }

    #[test]
    fn diagnostics_and_paired_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let series = DiagnosticsSeries {
            rows: vec![DiagnosticsRow {
                step: 3,
                time: 0.15,
                kinetic: 1.0 / 7.0,
                field: 2e-9,
                total: 1.0 / 7.0 + 2e-9,
                max_abs_e: 0.003,
            }],
        };
        let p = dir.path().join("diag.csv");
        write_diagnostics_csv(&p, &series).unwrap();
        assert_eq!(read_diagnostics_csv(&p).unwrap(), series);
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("step,time,kinetic,field,total,max_abs_E\n"));

        let rows = vec![PairedRow {
            step: 1,
            mrae_e: 0.2,
            baseline_max_e: 0.01,
            hybrid_max_e: 0.011,
        }];
        let p = dir.path().join("paired.csv");
        write_paired_csv(&p, &rows).unwrap();
        assert_eq!(read_paired_csv(&p).unwrap(), rows);
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("step,mrae_E,baseline_maxE,hybrid_maxE\n"));
    }

    #[test]
    fn phase_and_loss_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let snap = PhaseSnapshot {
            step: 0,
            positions: vec![0.1, 0.9],
            velocities: vec![-0.07, 0.07],
            beam: vec![0, 1],
        };
        let p = dir.path().join("phase.csv");
        write_phase_csv(&p, &snap).unwrap();
        assert_eq!(read_phase_csv(&p).unwrap(), snap);
        let hist = vec![EpochRecord {
            epoch: 0,
            loss: 0.5,
            wall_ms: 1.25,
        }];
        let p = dir.path().join("loss.csv");
        write_loss_csv(&p, &hist).unwrap();
        assert_eq!(read_loss_csv(&p).unwrap(), hist);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ModelSpec::cqc(AnsatzSpec::new(AnsatzKind::SimplifiedTwoDesign, 6, 2));
        let ckpt = Checkpoint {
            spec,
            seed: 9,
            params: init_params(&spec, 9),
            scale_calibration: Some(0.0135),
            train: Some(TrainConfig::default()),
        };
        let p = dir.path().join("model.json");
        ckpt.save(&p).unwrap();
        let back = Checkpoint::load(&p).unwrap();
        assert_eq!(back, ckpt);
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.1).cos()).collect();
        let a = ckpt.model().unwrap().forward(&x).unwrap();
        let b = back.model().unwrap().forward(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn checkpoint_with_wrong_length_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        let ckpt = Checkpoint {
            spec: ModelSpec::default_ccc(),
            seed: 0,
            params: vec![0.0; 10],
            scale_calibration: None,
            train: None,
        };
        write_json(&p, &ckpt).unwrap();
        assert!(Checkpoint::load(&p).is_err());
    }
}
