//! Delimited-text outputs, field serialization, and run manifests.
//!
//! Floats are written with 17 significant digits, which round-trips binary64
//! exactly. Every run directory carries a `manifest.json` with the resolved
//! configuration, seed, tool version and output checksums; re-running the
//! same manifest on the same build reproduces every numeric output
//! byte-for-byte.

use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::{Trajectory, VortexState};
use crate::error::{CoreError, Result};
use crate::spectral::{NoiseFamily, SpectralField};
use crate::torus::TorusVec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Lossless float formatting (17 significant digits).
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory + diagnostics as delimited text: columns
/// `t, x1, y1, ..., xn, yn, min_dist, H, g_delta` (2n + 4 columns).
pub fn trajectory_text(traj: &Trajectory, records: &[DiagnosticsRecord]) -> Result<String> {
    if records.len() != traj.states.len() {
        return Err(CoreError::Precondition(
            "diagnostics records must match trajectory states".into(),
        ));
    }
    let n = traj.states[0].n();
    let mut out = String::new();
    out.push('t');
    for i in 1..=n {
        write!(out, "\tx{i}\ty{i}").unwrap();
    }
    out.push_str("\tmin_dist\tH\tg_delta\n");
    for (state, rec) in traj.states.iter().zip(records.iter()) {
        out.push_str(&fmt(rec.t));
        for p in state.positions() {
            write!(out, "\t{}\t{}", fmt(p.c1()), fmt(p.c2())).unwrap();
        }
        write!(
            out,
            "\t{}\t{}\t{}\n",
            fmt(rec.min_pair_dist),
            fmt(rec.hamiltonian),
            fmt(rec.g_delta)
        )
        .unwrap();
    }
    Ok(out)
}

/// A trajectory read back from disk. Lifts are reconstructed by unwrapping
/// position increments, which is exact whenever no vortex moves farther than
/// pi in one step.
#[derive(Debug)]
pub struct ReadTrajectory {
    pub times: Vec<f64>,
    /// Position columns exactly as stored in the file.
    pub positions: Vec<Vec<[f64; 2]>>,
    /// States with lifts reconstructed by incremental unwrapping.
    pub states: Vec<VortexState>,
    pub min_dist: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub g_delta: Vec<f64>,
}

pub fn parse_trajectory(text: &str, intensities: &[f64]) -> Result<ReadTrajectory> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Format("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 6 || (cols.len() - 4) % 2 != 0 {
        return Err(CoreError::Format(format!(
            "unexpected column count {}",
            cols.len()
        )));
    }
    let n = (cols.len() - 4) / 2;
    if intensities.len() != n {
        return Err(CoreError::Format(format!(
            "{} intensities for {n} vortices in file",
            intensities.len()
        )));
    }
    let mut out = ReadTrajectory {
        times: Vec::new(),
        positions: Vec::new(),
        states: Vec::new(),
        min_dist: Vec::new(),
        hamiltonian: Vec::new(),
        g_delta: Vec::new(),
    };
    let mut lifts_prev: Option<Vec<[f64; 2]>> = None;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split('\t')
            .map(|s| {
                s.parse::<f64>().map_err(|e| {
                    CoreError::Format(format!("line {}: bad float {s:?}: {e}", lineno + 2))
                })
            })
            .collect::<Result<_>>()?;
        if f.len() != cols.len() {
            return Err(CoreError::Format(format!(
                "line {}: {} fields, expected {}",
                lineno + 2,
                f.len(),
                cols.len()
            )));
        }
        out.times.push(f[0]);
        let positions: Vec<[f64; 2]> = (0..n).map(|i| [f[1 + 2 * i], f[2 + 2 * i]]).collect();
        let lifts = match &lifts_prev {
            None => positions.clone(),
            Some(prev) => positions
                .iter()
                .zip(prev.iter())
                .map(|(p, l)| {
                    let step = TorusVec::displacement(*p, [l[0], l[1]])?;
                    Ok([l[0] + step.c1(), l[1] + step.c2()])
                })
                .collect::<Result<Vec<_>>>()?,
        };
        lifts_prev = Some(lifts.clone());
        out.positions.push(positions);
        out.states
            .push(VortexState::new(lifts, intensities.to_vec())?);
        out.min_dist.push(f[2 * n + 1]);
        out.hamiltonian.push(f[2 * n + 2]);
        out.g_delta.push(f[2 * n + 3]);
    }
    if out.states.is_empty() {
        return Err(CoreError::Format("trajectory file has no rows".into()));
    }
    Ok(out)
}

/// Serialize a field: a comment header carrying the degree and mean, then
/// `(k1, k2, Re, Im)` rows over the full mode square.
pub fn field_text(field: &SpectralField) -> String {
    let mean = field.mean();
    let mut out = format!(
        "# degree {} mean {} {}\nk1\tk2\tre\tim\n",
        field.degree(),
        fmt(mean[0]),
        fmt(mean[1])
    );
    for (k1, k2, c) in field.all_modes() {
        writeln!(out, "{k1}\t{k2}\t{}\t{}", fmt(c.re), fmt(c.im)).unwrap();
    }
    out
}

pub fn parse_field(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Format("empty field file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != "#" || parts[1] != "degree" || parts[3] != "mean" {
        return Err(CoreError::Format(format!("bad field header: {header:?}")));
    }
    let degree: u32 = parts[2]
        .parse()
        .map_err(|e| CoreError::Format(format!("bad degree: {e}")))?;
    let mean = [
        parts[4]
            .parse::<f64>()
            .map_err(|e| CoreError::Format(format!("bad mean: {e}")))?,
        parts[5]
            .parse::<f64>()
            .map_err(|e| CoreError::Format(format!("bad mean: {e}")))?,
    ];
    let mut field = if degree == 0 {
        SpectralField::constant(mean)
    } else {
        SpectralField::zero(degree).with_constant_part(mean)
    };
    for line in lines.skip(1) {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(CoreError::Format(format!("bad field row: {line:?}")));
        }
        let k1: i32 = parts[0]
            .parse()
            .map_err(|e| CoreError::Format(format!("bad k1: {e}")))?;
        let k2: i32 = parts[1]
            .parse()
            .map_err(|e| CoreError::Format(format!("bad k2: {e}")))?;
        let re: f64 = parts[2]
            .parse()
            .map_err(|e| CoreError::Format(format!("bad re: {e}")))?;
        let im: f64 = parts[3]
            .parse()
            .map_err(|e| CoreError::Format(format!("bad im: {e}")))?;
        let c = Complex64::new(re, im);
        // rows come in conjugate pairs; writing either representative is fine,
        // but a contradictory pair is a format error
        let existing = field.coeff([k1, k2]);
        if existing != Complex64::new(0.0, 0.0) && (existing - c).norm() > 1e-12 {
            return Err(CoreError::Format(format!(
                "mode ({k1}, {k2}) violates the reality constraint"
            )));
        }
        if k1 > 0 || (k1 == 0 && k2 > 0) {
            field.set_mode([k1, k2], c)?;
        }
    }
    Ok(field)
}

/// Noise-family manifest stored next to the field files.
#[derive(Debug, Serialize, Deserialize)]
pub struct NoiseManifest {
    pub count: usize,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Write a noise family as one file per field plus a manifest.
pub fn write_noise_dir(
    dir: &Path,
    family: &NoiseFamily,
    seed: Option<u64>,
    degree: Option<u32>,
    gamma: Option<f64>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, f) in family.fields().iter().enumerate() {
        fs::write(dir.join(format!("field_{i:03}.tsv")), field_text(f))?;
    }
    let manifest = NoiseManifest {
        count: family.len(),
        amplitude: family.amplitude(),
        seed,
        degree,
        gamma,
    };
    fs::write(
        dir.join("noise_manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(())
}

pub fn read_noise_dir(dir: &Path) -> Result<NoiseFamily> {
    let manifest: NoiseManifest = serde_json::from_str(
        &fs::read_to_string(dir.join("noise_manifest.json"))
            .map_err(|e| CoreError::Format(format!("missing noise manifest: {e}")))?,
    )
    .map_err(|e| CoreError::Format(format!("bad noise manifest: {e}")))?;
    let mut fields = Vec::with_capacity(manifest.count);
    for i in 0..manifest.count {
        let path = dir.join(format!("field_{i:03}.tsv"));
        let text = fs::read_to_string(&path)
            .map_err(|e| CoreError::Format(format!("missing field file {path:?}: {e}")))?;
        fields.push(parse_field(&text)?);
    }
    NoiseFamily::new(fields, manifest.amplitude)
}

/// Provenance record for a run directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub created_unix: u64,
    pub seed: Option<u64>,
    /// The fully resolved configuration document, verbatim TOML.
    pub config_toml: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped_at: Option<(f64, (usize, usize))>,
    /// SHA-256 of every numeric output file in the run directory.
    pub output_sha256: BTreeMap<String, String>,
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(data);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, config_toml: String) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
            config_toml,
            stopped_at: None,
            output_sha256: BTreeMap::new(),
            extra: serde_json::Value::Null,
        }
    }

    /// Record a named output file's checksum.
    pub fn add_output(&mut self, dir: &Path, name: &str) -> Result<()> {
        let data = fs::read(dir.join(name))?;
        self.output_sha256.insert(name.to_string(), sha256_hex(&data));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(self).expect("serializable"),
        )?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<RunManifest> {
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)
            .map_err(|e| CoreError::Format(format!("bad manifest: {e}")))
    }
}
