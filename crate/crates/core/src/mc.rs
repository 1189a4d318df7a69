//! Ensemble experiments: collision-probability tables, the running-maximum
//! bound on the coalescence functional, and the three-vortex collapse
//! demonstration with and without noise.

use crate::diagnostics::g_delta;
use crate::dynamics::{drift, SDEConfig, Scheme, Simulator, VortexState};
use crate::error::{CoreError, Result};
use crate::kernel::{Kernel, KernelSpec};
use crate::rng::{domain, substream};
use crate::special::compensated_total;
use crate::spectral::NoiseFamily;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Initial-condition law for ensembles.
#[derive(Debug, Clone)]
pub enum InitialLaw {
    Fixed(VortexState),
    /// Uniform positions on the torus, rejected until every pair is farther
    /// than `margin` apart.
    UniformOffDiagonal {
        margin: f64,
        intensities: Vec<f64>,
    },
}

/// Ensemble description: a base run configuration repeated over seeds.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub config: SDEConfig,
    pub trajectories: usize,
    pub law: InitialLaw,
    /// Strictly decreasing collision thresholds.
    pub epsilon_ladder: Vec<f64>,
    pub base_seed: u64,
    pub seed_stride: u64,
}

impl EnsembleSpec {
    fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(CoreError::Precondition("need at least one trajectory".into()));
        }
        if self.seed_stride == 0 {
            return Err(CoreError::Precondition("seed stride must be nonzero".into()));
        }
        for w in self.epsilon_ladder.windows(2) {
            if w[1] >= w[0] {
                return Err(CoreError::Precondition(
                    "epsilon ladder must be strictly decreasing".into(),
                ));
            }
        }
        if let Some(&eps_max) = self.epsilon_ladder.first() {
            if let InitialLaw::UniformOffDiagonal { margin, .. } = &self.law {
                if *margin <= eps_max {
                    return Err(CoreError::Precondition(format!(
                        "sampling margin {margin} must exceed the largest epsilon {eps_max}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn delta(&self) -> Option<f64> {
        self.config.kernel.delta()
    }
}

/// Per-trajectory summary; errors are recorded, never propagated.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub seed: u64,
    pub min_pair_distance: f64,
    pub sup_g_delta: Option<f64>,
    pub stopped_at: Option<(f64, (usize, usize))>,
    pub error: Option<String>,
}

fn draw_initial(law: &InitialLaw, base_seed: u64, index: usize) -> Result<VortexState> {
    match law {
        InitialLaw::Fixed(state) => Ok(state.clone()),
        InitialLaw::UniformOffDiagonal { margin, intensities } => {
            let n = intensities.len();
            let mut rng = substream(base_seed, domain::INITIAL_CONDITION, index as u64);
            for _attempt in 0..10_000 {
                let pts: Vec<[f64; 2]> = (0..n)
                    .map(|_| {
                        [
                            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                        ]
                    })
                    .collect();
                let state = VortexState::new(pts, intensities.clone())?;
                match state.min_pair_distance() {
                    Some((d, _)) if d <= *margin => continue,
                    _ => return Ok(state),
                }
            }
            Err(CoreError::Resource(format!(
                "rejection sampler failed to clear margin {margin} in 10000 attempts"
            )))
        }
    }
}

/// Run the ensemble; trajectory `i` uses seed `base + i * stride`. Summaries
/// are deterministic for any worker count.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Vec<TrajectorySummary>> {
    spec.validate()?;
    let sim = Simulator::new(spec.config.clone())?;
    let delta = spec.delta();
    let summaries: Vec<TrajectorySummary> = (0..spec.trajectories)
        .into_par_iter()
        .map(|i| {
            let seed = spec.base_seed.wrapping_add(spec.seed_stride.wrapping_mul(i as u64));
            let run = || -> Result<TrajectorySummary> {
                let x0 = draw_initial(&spec.law, spec.base_seed, i)?;
                let traj = sim.simulate_seeded(&x0, seed)?;
                let min_dist = traj.min_pair_distance();
                let sup_g = match delta {
                    Some(d) => {
                        let mut sup = f64::NEG_INFINITY;
                        for s in &traj.states {
                            sup = sup.max(g_delta(s, d, sim.kernel())?);
                        }
                        Some(sup)
                    }
                    None => None,
                };
                Ok(TrajectorySummary {
                    index: i,
                    seed,
                    min_pair_distance: min_dist,
                    sup_g_delta: sup_g,
                    stopped_at: traj.stopped_at,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| TrajectorySummary {
                index: i,
                seed,
                min_pair_distance: f64::NAN,
                sup_g_delta: None,
                stopped_at: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(summaries)
}

/// One row of the collision-probability table.
#[derive(Debug, Clone, Serialize)]
pub struct CollisionRow {
    pub epsilon: f64,
    pub count: usize,
    pub p_hat: f64,
    pub std_err: f64,
}

/// Collision probabilities over the epsilon ladder with the `a / |ln eps|`
/// companion fit.
#[derive(Debug, Clone, Serialize)]
pub struct CollisionTable {
    pub rows: Vec<CollisionRow>,
    pub trajectories: usize,
    pub failed: usize,
    /// Least-squares coefficient of `p ~ a / |ln eps|`.
    pub fit_a: f64,
    /// Root-mean-square fit residual.
    pub fit_rms: f64,
    /// True when `a / |ln eps|` upper-bounds every `p_hat - 2 se`.
    pub fit_upper_bounds_within_2se: bool,
}

/// Estimate `P(min distance <= eps)` over the ensemble for each ladder entry.
pub fn collision_prob(spec: &EnsembleSpec) -> Result<CollisionTable> {
    if spec.epsilon_ladder.is_empty() {
        return Err(CoreError::Precondition("epsilon ladder is empty".into()));
    }
    let summaries = run_ensemble(spec)?;
    let ok: Vec<&TrajectorySummary> = summaries.iter().filter(|s| s.error.is_none()).collect();
    let failed = summaries.len() - ok.len();
    let e = ok.len();
    if e == 0 {
        return Err(CoreError::Resource("every trajectory failed".into()));
    }
    let mut rows = Vec::new();
    for &eps in &spec.epsilon_ladder {
        let count = ok.iter().filter(|s| s.min_pair_distance <= eps).count();
        let p = count as f64 / e as f64;
        let se = (p * (1.0 - p) / e as f64).sqrt();
        rows.push(CollisionRow {
            epsilon: eps,
            count,
            p_hat: p,
            std_err: se,
        });
    }
    // single-coefficient least squares p ~ a x, x = 1/|ln eps|
    let mut sxx = 0.0;
    let mut sxp = 0.0;
    for r in &rows {
        let x = 1.0 / r.epsilon.ln().abs();
        sxx += x * x;
        sxp += x * r.p_hat;
    }
    let a = if sxx > 0.0 { sxp / sxx } else { 0.0 };
    let mut ss = 0.0;
    let mut bounds = true;
    for r in &rows {
        let x = 1.0 / r.epsilon.ln().abs();
        let resid = r.p_hat - a * x;
        ss += resid * resid;
        if a * x < r.p_hat - 2.0 * r.std_err {
            bounds = false;
        }
    }
    Ok(CollisionTable {
        rows,
        trajectories: e,
        failed,
        fit_a: a,
        fit_rms: (ss / spec.epsilon_ladder.len() as f64).sqrt(),
        fit_upper_bounds_within_2se: bounds,
    })
}

/// Frozen linear-growth rate for the running-maximum bound on `g^delta`,
/// calibrated once with `calibrate_sup_g_rate` on the configuration returned
/// by `sup_g_calibration_spec` and kept fixed thereafter. The frozen value is
/// the measured rate times a 1.25 safety factor, rounded up.
pub const SUP_G_RATE: f64 = 6.0;

/// The pinned calibration run behind `SUP_G_RATE`: 200 paths of the reference
/// three-vortex configuration under a degree-2 noise family.
pub fn sup_g_calibration_spec() -> Result<EnsembleSpec> {
    let noise = NoiseFamily::sample(2, 0.0, 8, 0.4, 7)?;
    let x0 = VortexState::new(
        vec![[0.0, 0.0], [2.0, 0.5], [-1.5, -1.5]],
        vec![2.0, 2.0, -1.0],
    )?;
    Ok(EnsembleSpec {
        config: SDEConfig {
            scheme: Scheme::EulerHeunStrat,
            dt: 1e-3,
            t_final: 1.0,
            kernel: KernelSpec::regularized(0.05),
            noise: Some(noise),
            stop_delta: 0.0,
            seed: 2024,
        },
        trajectories: 200,
        law: InitialLaw::Fixed(x0),
        epsilon_ladder: vec![0.1],
        base_seed: 500,
        seed_stride: 1,
    })
}

/// Monte Carlo verdict on `mean sup_t g^delta <= g^delta(X0) + C T`.
#[derive(Debug, Clone, Serialize)]
pub struct SupGBoundReport {
    pub lhs_mean: f64,
    pub rhs_bound: f64,
    pub std_err: f64,
    pub rate_constant: f64,
    pub paths: usize,
    pub pass: bool,
}

/// Check the expected running maximum of `g^delta` against the linear bound
/// with the frozen rate constant. Requires a fixed initial condition and a
/// regularized kernel.
pub fn sup_g_bound(spec: &EnsembleSpec) -> Result<SupGBoundReport> {
    let delta = spec.delta().ok_or_else(|| {
        CoreError::Precondition("sup_g_bound requires a regularized kernel".into())
    })?;
    let x0 = match &spec.law {
        InitialLaw::Fixed(state) => state.clone(),
        _ => {
            return Err(CoreError::Precondition(
                "sup_g_bound requires a fixed initial condition".into(),
            ))
        }
    };
    let summaries = run_ensemble(spec)?;
    let sups: Vec<f64> = summaries
        .iter()
        .filter_map(|s| s.sup_g_delta)
        .collect();
    if sups.is_empty() {
        return Err(CoreError::Resource("no successful paths".into()));
    }
    let n = sups.len() as f64;
    let mean = compensated_total(&sups) / n;
    let var = sups.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let se = (var / n).sqrt();
    let kernel = Kernel::new(spec.config.kernel)?;
    let g0 = g_delta(&x0, delta, &kernel)?;
    let rhs = g0 + SUP_G_RATE * spec.config.t_final;
    Ok(SupGBoundReport {
        lhs_mean: mean,
        rhs_bound: rhs,
        std_err: se,
        rate_constant: SUP_G_RATE,
        paths: sups.len(),
        pass: mean <= rhs + 3.0 * se,
    })
}

/// The observed growth rate `(mean sup g^delta - g^delta(X0)) / T`; the frozen
/// `SUP_G_RATE` was set from this on the calibration configuration.
pub fn calibrate_sup_g_rate(spec: &EnsembleSpec) -> Result<f64> {
    let report = sup_g_bound(spec)?;
    let delta = spec.delta().expect("validated by sup_g_bound");
    let x0 = match &spec.law {
        InitialLaw::Fixed(state) => state.clone(),
        _ => unreachable!("validated by sup_g_bound"),
    };
    let kernel = Kernel::new(spec.config.kernel)?;
    let g0 = g_delta(&x0, delta, &kernel)?;
    Ok(((report.lhs_mean - g0) / spec.config.t_final).max(0.0))
}

/// A planar self-similar collapse configuration for intensities `(2, 2, -1)`.
#[derive(Debug, Clone, Serialize)]
pub struct CollapseConfig {
    pub positions: [[f64; 2]; 3],
    pub intensities: [f64; 3],
    /// Real part of the self-similarity constant (negative: contraction).
    pub scale_rate: f64,
    /// Imaginary part (rotation).
    pub rotation_rate: f64,
    /// Predicted collapse time `-1 / (2 scale_rate)`.
    pub collapse_time: f64,
    /// `sum_{i<j} w_i w_j |x_i - x_j|^2`, which must vanish for self-similar
    /// collapse; reported as an oracle self-check.
    pub virial: f64,
    /// Final Newton residual.
    pub residual: f64,
}

impl CollapseConfig {
    /// Mirror image (y -> -y): reverses the sense of rotation, turning the
    /// contracting configuration into an expanding one and vice versa.
    pub fn reflected(&self) -> CollapseConfig {
        let mut out = self.clone();
        for p in out.positions.iter_mut() {
            p[1] = -p[1];
        }
        out.scale_rate = -self.scale_rate;
        out.rotation_rate = -self.rotation_rate;
        out.collapse_time = -1.0 / (2.0 * out.scale_rate);
        out
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = (self.positions[i][0] - self.positions[j][0])
                    .hypot(self.positions[i][1] - self.positions[j][1]);
                best = best.min(d);
            }
        }
        best
    }
}

const COLLAPSE_INTENSITIES: [f64; 3] = [2.0, 2.0, -1.0];

type C = num_complex::Complex64;

/// Velocity field of the planar three-vortex system in complex form, using
/// the fixed perpendicular convention (`K(z) ~ -i / (2 pi conj(z))`).
fn planar_velocity(z: &[C; 3], w: &[f64; 3]) -> [C; 3] {
    let mut v = [C::new(0.0, 0.0); 3];
    for j in 0..3 {
        let mut s = C::new(0.0, 0.0);
        for k in 0..3 {
            if k != j {
                s += w[k] / (z[j] - z[k]).conj();
            }
        }
        v[j] = C::new(0.0, -1.0) / (2.0 * std::f64::consts::PI) * s;
    }
    v
}

fn self_similar_residual(u: &[f64; 4], w: &[f64; 3]) -> [f64; 4] {
    let z = [C::new(1.0, 0.0), C::new(u[0], u[1]), C::new(u[2], u[3])];
    let v = planar_velocity(&z, w);
    let c = v[0] / z[0];
    let f1 = v[1] - c * z[1];
    let f2 = v[2] - c * z[2];
    [f1.re, f1.im, f2.re, f2.im]
}

/// Solve the planar self-similar collapse conditions for intensities
/// `(2, 2, -1)` by Newton iteration from seeded multistart, then rescale so
/// the collapse time equals `t_c_target`.
///
/// Independent of the trajectory integrators; the demo verifies the
/// configuration by actually integrating it.
pub fn collapse_configuration(seed: u64, t_c_target: f64) -> Result<CollapseConfig> {
    let w = COLLAPSE_INTENSITIES;
    // the intensity precondition: sum of pairwise products must vanish
    let pair_sum = w[0] * w[1] + w[0] * w[2] + w[1] * w[2];
    assert!(pair_sum.abs() < 1e-14, "intensities violate the collapse precondition");
    if !(t_c_target > 0.0) {
        return Err(CoreError::Precondition("collapse time target must be positive".into()));
    }
    let mut rng = substream(seed, domain::COLLAPSE_ORACLE, 0);
    for _attempt in 0..500 {
        let mut u = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let mut converged = false;
        for _it in 0..80 {
            let f = self_similar_residual(&u, &w);
            let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-13 {
                converged = true;
                break;
            }
            // numerical Jacobian
            let mut jac = [[0.0f64; 4]; 4];
            let h = 1e-7;
            for c in 0..4 {
                let mut up = u;
                let mut um = u;
                up[c] += h;
                um[c] -= h;
                let fp = self_similar_residual(&up, &w);
                let fm = self_similar_residual(&um, &w);
                for r in 0..4 {
                    jac[r][c] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
            let m = nalgebra::Matrix4::from_fn(|r, c| jac[r][c]);
            let rhs = nalgebra::Vector4::from_row_slice(&f);
            let Some(du) = m.lu().solve(&rhs) else { break };
            if !du.iter().all(|v| v.is_finite()) || du.norm() > 1e3 {
                break;
            }
            for c in 0..4 {
                u[c] -= du[c];
            }
        }
        if !converged {
            continue;
        }
        let z = [C::new(1.0, 0.0), C::new(u[0], u[1]), C::new(u[2], u[3])];
        let dmin = (z[0] - z[1])
            .norm()
            .min((z[0] - z[2]).norm())
            .min((z[1] - z[2]).norm());
        if dmin < 0.2 {
            continue;
        }
        let v = planar_velocity(&z, &w);
        let mut c = v[0] / z[0];
        if c.norm() < 1e-8 {
            continue;
        }
        // choose the contracting orientation
        let mut z = z;
        if c.re > 0.0 {
            for zi in z.iter_mut() {
                *zi = zi.conj();
            }
            let v = planar_velocity(&z, &w);
            c = v[0] / z[0];
        }
        if c.re >= -1e-10 {
            continue;
        }
        // rescale so the collapse time hits the target: t_c = -1/(2 Re c),
        // and scaling z by lambda scales c by lambda^{-2}
        let lambda = (2.0 * c.re.abs() * t_c_target).sqrt();
        for zi in z.iter_mut() {
            *zi *= lambda;
        }
        let v = planar_velocity(&z, &w);
        let c = v[0] / z[0];
        // recentre on the vorticity centroid (already ~0 by construction)
        let wsum: f64 = w.iter().sum();
        let centroid = (z[0] * w[0] + z[1] * w[1] + z[2] * w[2]) / wsum;
        let z = [z[0] - centroid, z[1] - centroid, z[2] - centroid];
        let mut virial = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                virial += w[i] * w[j] * (z[i] - z[j]).norm_sqr();
            }
        }
        let resid = {
            let v = planar_velocity(&z, &w);
            let c0 = v[0] / z[0];
            ((v[1] - c0 * z[1]).norm_sqr() + (v[2] - c0 * z[2]).norm_sqr()).sqrt()
        };
        return Ok(CollapseConfig {
            positions: [[z[0].re, z[0].im], [z[1].re, z[1].im], [z[2].re, z[2].im]],
            intensities: w,
            scale_rate: c.re,
            rotation_rate: c.im,
            collapse_time: -1.0 / (2.0 * c.re),
            virial,
            residual: resid,
        });
    }
    Err(CoreError::Setup(
        "collapse oracle found no contracting self-similar configuration".into(),
    ))
}

/// Demo mode.
#[derive(Debug)]
pub enum CollapseMode {
    Deterministic,
    Noisy {
        family: NoiseFamily,
        trajectories: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterministicCollapse {
    pub reached: bool,
    pub time: f64,
    pub final_min_distance: f64,
    pub steps: usize,
    /// Sampled `(t, min distance)` pairs (thinned).
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoisyCollapse {
    pub hits: usize,
    pub total: usize,
    pub fraction: f64,
    /// 95% Wilson interval for the hit fraction.
    pub ci95: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct CollapseReport {
    pub config: CollapseConfig,
    pub stop_delta: f64,
    pub horizon: f64,
    pub deterministic: Option<DeterministicCollapse>,
    pub noisy: Option<NoisyCollapse>,
}

fn wilson_interval(hits: usize, total: usize) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n = total as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((centre - half) / denom).max(0.0),
        ((centre + half) / denom).min(1.0),
    )
}

/// Deterministic planar collapse run with a geometric step controller
/// (`dt ~ min distance / max speed`), confined to this demo; the SDE
/// integrators keep their fixed step.
fn run_planar_collapse(
    config: &CollapseConfig,
    stop_delta: f64,
    horizon: f64,
) -> Result<DeterministicCollapse> {
    let sim = Simulator::new(SDEConfig {
        scheme: Scheme::Rk4Deterministic,
        dt: 1.0, // per-step dt is supplied explicitly below
        t_final: 1.0,
        kernel: KernelSpec::planar(),
        noise: None,
        stop_delta: 0.0,
        seed: 0,
    })?;
    let mut state = VortexState::new(
        config.positions.to_vec(),
        config.intensities.to_vec(),
    )?;
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut series = Vec::new();
    let dt_cap = 1e-3f64;
    let frac = 0.05;
    let max_steps = 2_000_000usize;
    let mut dmin = state.min_pair_distance().expect("three vortices").0;
    series.push((t, dmin));
    while t < horizon && dmin > stop_delta && steps < max_steps {
        let v = drift(&state, sim.kernel())?;
        let vmax = v
            .iter()
            .map(|u| u[0].hypot(u[1]))
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let dt = dt_cap.min(frac * dmin / vmax);
        state = sim.rk4_step(&state, dt)?;
        t += dt;
        steps += 1;
        dmin = state.min_pair_distance().expect("three vortices").0;
        if steps % 64 == 0 {
            series.push((t, dmin));
        }
    }
    series.push((t, dmin));
    Ok(DeterministicCollapse {
        reached: dmin <= stop_delta,
        time: t,
        final_min_distance: dmin,
        steps,
        series,
    })
}

/// Run the collapse demonstration.
///
/// Deterministic mode integrates the oracle configuration under the planar
/// kernel until the minimum distance crosses `stop_delta`. Noisy mode places
/// the mirrored configuration on the torus (the torus kernel reverses the
/// planar orientation near the singularity) and reports how many of the
/// perturbed paths ever reach `stop_delta`.
pub fn collapse_demo(mode: CollapseMode, seed: u64) -> Result<CollapseReport> {
    let stop_delta = 1e-4;
    let horizon = 10.0;
    match mode {
        CollapseMode::Deterministic => {
            let config = collapse_configuration(seed, 2.0)?;
            let det = run_planar_collapse(&config, stop_delta, horizon)?;
            Ok(CollapseReport {
                config,
                stop_delta,
                horizon,
                deterministic: Some(det),
                noisy: None,
            })
        }
        CollapseMode::Noisy {
            family,
            trajectories,
        } => {
            // Near the singularity the torus kernel equals -(2 pi)^2 times the
            // planar one, so the mirrored configuration is the contracting one
            // and its collapse runs (2 pi)^2 faster: rescale the planar target
            // so the torus-side collapse time is about 1.
            let tc_torus = 1.0;
            let planar_target = tc_torus * (2.0 * std::f64::consts::PI).powi(2);
            let config = collapse_configuration(seed, planar_target)?.reflected();
            let sde = SDEConfig {
                scheme: Scheme::EulerHeunStrat,
                dt: 1e-3,
                t_final: 2.0 * tc_torus,
                kernel: KernelSpec::regularized(1e-3),
                noise: Some(family),
                stop_delta,
                seed,
            };
            let x0 = VortexState::new(config.positions.to_vec(), config.intensities.to_vec())?;
            let spec = EnsembleSpec {
                config: sde,
                trajectories,
                law: InitialLaw::Fixed(x0),
                epsilon_ladder: vec![stop_delta],
                base_seed: seed,
                seed_stride: 1,
            };
            let summaries = run_ensemble(&spec)?;
            let total = summaries.iter().filter(|s| s.error.is_none()).count();
            let hits = summaries
                .iter()
                .filter(|s| s.error.is_none() && s.stopped_at.is_some())
                .count();
            if total == 0 {
                return Err(CoreError::Resource("every noisy path failed".into()));
            }
            Ok(CollapseReport {
                config,
                stop_delta,
                horizon,
                deterministic: None,
                noisy: Some(NoisyCollapse {
                    hits,
                    total,
                    fraction: hits as f64 / total as f64,
                    ci95: wilson_interval(hits, total),
                }),
            })
        }
    }
}
