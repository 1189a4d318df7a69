//! Rank verification for lifted noise families: direct span checks, bracket
//! closures, and the genericity sampling experiment.
//!
//! A base field `f` on the torus lifts to `A_f(x^1, ..., x^n) =
//! (f(x^1), ..., f(x^n))` on the n-fold product. Brackets commute with
//! lifting, `[A_f, A_g] = A_{[f, g]}`, because every lift applies the same
//! field componentwise; closures are therefore computed on the torus and
//! lifted afterwards. That identity is validated numerically below and in the
//! acceptance suite.

use crate::error::{CoreError, Result};
use crate::rng::{domain, substream};
use crate::spectral::{sample_field, NoiseFamily, SpectralField};
use crate::torus::TorusVec;
use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// A noise family viewed on the configuration space of `n` vortices.
#[derive(Debug, Clone)]
pub struct LiftedFamily {
    pub base: NoiseFamily,
    pub n: usize,
}

impl LiftedFamily {
    pub fn new(base: NoiseFamily, n: usize) -> Result<LiftedFamily> {
        if n == 0 {
            return Err(CoreError::Precondition("n must be at least 1".into()));
        }
        Ok(LiftedFamily { base, n })
    }
}

/// Stack field evaluations into the `2n x F` matrix with one column per field.
pub fn lift_matrix(fields: &[&SpectralField], points: &[TorusVec]) -> DMatrix<f64> {
    let n = points.len();
    let mut m = DMatrix::zeros(2 * n, fields.len());
    for (col, f) in fields.iter().enumerate() {
        for (i, &p) in points.iter().enumerate() {
            let v = f.eval(p);
            m[(2 * i, col)] = v[0];
            m[(2 * i + 1, col)] = v[1];
        }
    }
    m
}

/// Lifted evaluation of the family itself (amplitude included): column `k` is
/// `amplitude * (sigma_k(x^1), ..., sigma_k(x^n))`.
pub fn lift_eval(family: &LiftedFamily, points: &[TorusVec]) -> Result<DMatrix<f64>> {
    if points.len() != family.n {
        return Err(CoreError::Precondition(format!(
            "expected {} points, got {}",
            family.n,
            points.len()
        )));
    }
    let refs: Vec<&SpectralField> = family.base.fields().iter().collect();
    let mut m = lift_matrix(&refs, points);
    m *= family.base.amplitude();
    Ok(m)
}

/// Iterated brackets of the generators up to a depth, with depth tags.
#[derive(Debug)]
pub struct BracketBasis {
    /// `(field, depth)`; depth-1 entries are the generators themselves.
    pub entries: Vec<(SpectralField, u32)>,
}

impl BracketBasis {
    pub fn fields(&self) -> Vec<&SpectralField> {
        self.entries.iter().map(|(f, _)| f).collect()
    }

    pub fn max_depth(&self) -> u32 {
        self.entries.iter().map(|&(_, d)| d).max().unwrap_or(0)
    }
}

/// All iterated brackets `[g_i, [g_j, [...]]]` up to `depth`, computed exactly
/// on the torus. Identically-zero brackets are dropped. Errors with a partial
/// result count if the closure would exceed `cap` entries.
pub fn bracket_closure(family: &NoiseFamily, depth: u32, cap: usize) -> Result<BracketBasis> {
    if depth < 1 {
        return Err(CoreError::Precondition("closure depth must be >= 1".into()));
    }
    let mut entries: Vec<(SpectralField, u32)> = family
        .fields()
        .iter()
        .map(|f| (f.clone(), 1u32))
        .collect();
    let mut frontier: Vec<usize> = (0..entries.len()).collect();
    for level in 2..=depth {
        let mut next = Vec::new();
        for gi in 0..family.len() {
            for &fi in &frontier {
                let br = family.fields()[gi].lie_bracket(&entries[fi].0);
                if br.max_coeff() == 0.0 {
                    continue;
                }
                if entries.len() >= cap {
                    return Err(CoreError::Resource(format!(
                        "bracket closure exceeded cap {cap} at depth {level} \
                         ({} entries so far)",
                        entries.len()
                    )));
                }
                next.push(entries.len());
                entries.push((br, level));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(BracketBasis { entries })
}

/// Uniform grid specification over configurations `delta`-away from the
/// diagonals (the set `G_delta`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpanGrid {
    /// Points per coordinate axis; total candidate configurations are
    /// `per_axis^(2n)`.
    pub per_axis: usize,
    /// Pairwise-distance floor; candidates inside the diagonal neighborhood
    /// are skipped.
    pub delta: f64,
    pub n: usize,
}

impl SpanGrid {
    pub fn total(&self) -> usize {
        self.per_axis.pow(2 * self.n as u32)
    }

    /// Decode a flat index into an n-point configuration (cell-centered).
    pub fn point(&self, flat: usize) -> Vec<TorusVec> {
        let m = self.per_axis;
        let h = 2.0 * PI / m as f64;
        let mut rest = flat;
        let mut coords = vec![0.0f64; 2 * self.n];
        for c in coords.iter_mut() {
            *c = -PI + ((rest % m) as f64 + 0.5) * h;
            rest /= m;
        }
        (0..self.n)
            .map(|i| TorusVec::wrap([coords[2 * i], coords[2 * i + 1]]).expect("finite"))
            .collect()
    }

    fn admits(&self, pts: &[TorusVec]) -> bool {
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if TorusVec::distance(pts[i], pts[j]) <= self.delta {
                    return false;
                }
            }
        }
        true
    }
}

/// Result of a grid span check.
#[derive(Debug, Clone, Serialize)]
pub struct SpanReport {
    pub pass: bool,
    pub required_rank: usize,
    pub min_rank: usize,
    /// Smallest relative margin `sigma_{2n} / sigma_1` over the grid.
    pub min_margin: f64,
    pub worst_point: Vec<[f64; 2]>,
    pub points_checked: usize,
    pub points_skipped: usize,
    pub tol: f64,
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().singular_values().iter().copied().collect()
}

fn rank_and_margin(m: &DMatrix<f64>, required: usize, tol: f64) -> (usize, f64) {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return (0, 0.0);
    }
    let rank = sv.iter().filter(|&&s| s > tol * top).count();
    let margin = if sv.len() >= required {
        sv[required - 1] / top
    } else {
        0.0
    };
    (rank, margin)
}

/// Check that the basis fields span R^{2n} at every grid configuration in
/// `G_delta`. The verdict is data; an error means the grid itself is unusable
/// (every candidate inside the diagonal neighborhood).
pub fn check_span(
    family: &LiftedFamily,
    basis: &BracketBasis,
    grid: &SpanGrid,
    tol: f64,
) -> Result<SpanReport> {
    if grid.n != family.n {
        return Err(CoreError::Precondition(format!(
            "grid is for n = {}, family for n = {}",
            grid.n, family.n
        )));
    }
    let required = 2 * family.n;
    let fields = basis.fields();
    // Field values repeat over the per-axis 2D grid; evaluate once.
    let m = grid.per_axis;
    let h = 2.0 * PI / m as f64;
    let mut table = vec![[0.0f64; 2]; m * m * fields.len()];
    for (fi, f) in fields.iter().enumerate() {
        for a in 0..m {
            for b in 0..m {
                let x = TorusVec::wrap([
                    -PI + (a as f64 + 0.5) * h,
                    -PI + (b as f64 + 0.5) * h,
                ])?;
                table[(fi * m + a) * m + b] = f.eval(x);
            }
        }
    }
    let total = grid.total();
    let results: Vec<(usize, f64, usize)> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let pts = grid.point(flat);
            if !grid.admits(&pts) {
                return None;
            }
            // decode the 2D cell indices again to read the table
            let mut cells = Vec::with_capacity(grid.n);
            let mut rest = flat;
            for _ in 0..grid.n {
                let a = rest % m;
                rest /= m;
                let b = rest % m;
                rest /= m;
                cells.push((a, b));
            }
            let mut mat = DMatrix::zeros(required, fields.len());
            for (col, _) in fields.iter().enumerate() {
                for (i, &(a, b)) in cells.iter().enumerate() {
                    let v = table[(col * m + a) * m + b];
                    mat[(2 * i, col)] = v[0];
                    mat[(2 * i + 1, col)] = v[1];
                }
            }
            let (rank, margin) = rank_and_margin(&mat, required, tol);
            Some((rank, margin, flat))
        })
        .collect();
    if results.is_empty() {
        return Err(CoreError::Precondition(
            "every grid candidate lies inside the diagonal neighborhood".into(),
        ));
    }
    let points_checked = results.len();
    let points_skipped = total - points_checked;
    let worst = results
        .iter()
        .copied()
        .min_by(|a, b| {
            (a.1, a.2)
                .partial_cmp(&(b.1, b.2))
                .expect("margins are finite")
        })
        .unwrap();
    let min_rank = results.iter().map(|r| r.0).min().unwrap();
    let worst_point = grid
        .point(worst.2)
        .iter()
        .map(|p| p.components())
        .collect();
    Ok(SpanReport {
        pass: min_rank == required,
        required_rank: required,
        min_rank,
        min_margin: worst.1,
        worst_point,
        points_checked,
        points_skipped,
        tol,
    })
}

/// Span check at explicit configurations (each must be off-diagonal by
/// `delta`).
pub fn check_span_at(
    family: &LiftedFamily,
    basis: &BracketBasis,
    configs: &[Vec<TorusVec>],
    delta: f64,
    tol: f64,
) -> Result<SpanReport> {
    let required = 2 * family.n;
    let fields = basis.fields();
    let mut min_rank = usize::MAX;
    let mut min_margin = f64::INFINITY;
    let mut worst_point = Vec::new();
    for pts in configs {
        if pts.len() != family.n {
            return Err(CoreError::Precondition("configuration size mismatch".into()));
        }
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let d = TorusVec::distance(pts[i], pts[j]);
                if d <= delta {
                    return Err(CoreError::Precondition(format!(
                        "configuration point pair ({i}, {j}) at distance {d} <= delta"
                    )));
                }
            }
        }
        let mat = lift_matrix(&fields, pts);
        let (rank, margin) = rank_and_margin(&mat, required, tol);
        if margin < min_margin {
            min_margin = margin;
            worst_point = pts.iter().map(|p| p.components()).collect();
        }
        min_rank = min_rank.min(rank);
    }
    Ok(SpanReport {
        pass: min_rank == required,
        required_rank: required,
        min_rank,
        min_margin,
        worst_point,
        points_checked: configs.len(),
        points_skipped: 0,
        tol,
    })
}

/// Hormander-style check at one configuration: grow the bracket closure until
/// the lifted fields reach full rank or the depth cap is hit.
#[derive(Debug, Clone, Serialize)]
pub struct HormanderReport {
    pub pass: bool,
    /// First depth at which the rank reached `2n`, if any.
    pub achieved_depth: Option<u32>,
    /// Rank after incorporating each depth level.
    pub ranks: Vec<(u32, usize)>,
}

pub fn check_hormander(
    family: &LiftedFamily,
    points: &[TorusVec],
    depth_cap: u32,
    tol: f64,
    closure_cap: usize,
) -> Result<HormanderReport> {
    if points.len() != family.n {
        return Err(CoreError::Precondition("configuration size mismatch".into()));
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if TorusVec::distance(points[i], points[j]) == 0.0 {
                return Err(CoreError::Precondition(
                    "configuration lies on the diagonal".into(),
                ));
            }
        }
    }
    let required = 2 * family.n;
    let mut ranks = Vec::new();
    let mut achieved = None;
    for depth in 1..=depth_cap {
        let closure = bracket_closure(&family.base, depth, closure_cap)?;
        let mat = lift_matrix(&closure.fields(), points);
        let (rank, _) = rank_and_margin(&mat, required, tol);
        ranks.push((depth, rank));
        if rank == required {
            achieved = Some(depth);
            break;
        }
    }
    Ok(HormanderReport {
        pass: achieved.is_some(),
        achieved_depth: achieved,
        ranks,
    })
}

/// Aggregate statistics of repeated random span checks.
#[derive(Debug, Clone, Serialize)]
pub struct GenericityStats {
    pub trials: usize,
    pub passes: usize,
    pub pass_rate: f64,
    /// Smallest margin seen across all trials, with its trial index.
    pub min_margin: f64,
    pub min_margin_trial: usize,
    pub rank_histogram: BTreeMap<usize, usize>,
    pub worst_point: Vec<[f64; 2]>,
}

/// Draw `2 n M` fields per trial and run depth-1 span checks over the grid.
/// Requires `M > 2n` (the regime where the span is expected generically).
pub fn genericity_trial(
    n: usize,
    d: u32,
    m_families: usize,
    grid: &SpanGrid,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<GenericityStats> {
    if m_families <= 2 * n {
        return Err(CoreError::Precondition(format!(
            "need M > 2n, got M = {m_families}, n = {n}"
        )));
    }
    let mut passes = 0;
    let mut min_margin = f64::INFINITY;
    let mut min_margin_trial = 0;
    let mut worst_point = Vec::new();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for trial in 0..trials {
        let mut key = substream(seed, domain::GENERICITY_TRIAL, trial as u64);
        let family_seed = key.next_u64();
        let count = 2 * n * m_families;
        let fields: Vec<SpectralField> = (0..count)
            .map(|i| {
                let mut rng = substream(family_seed, domain::FIELD_SAMPLING, i as u64);
                sample_field(d, 0.0, &mut rng)
            })
            .collect();
        let family = LiftedFamily::new(NoiseFamily::new(fields, 1.0)?, n)?;
        let basis = bracket_closure(&family.base, 1, usize::MAX)?;
        let report = check_span(&family, &basis, grid, tol)?;
        if report.pass {
            passes += 1;
        }
        *histogram.entry(report.min_rank).or_insert(0) += 1;
        if report.min_margin < min_margin {
            min_margin = report.min_margin;
            min_margin_trial = trial;
            worst_point = report.worst_point.clone();
        }
    }
    Ok(GenericityStats {
        trials,
        passes,
        pass_rate: passes as f64 / trials.max(1) as f64,
        min_margin,
        min_margin_trial,
        rank_histogram: histogram,
        worst_point,
    })
}
