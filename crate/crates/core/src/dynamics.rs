//! Point-vortex dynamics: the deterministic interaction ODE and its
//! stochastic perturbation by shared multiplicative noise.
//!
//! Every vortex sees the same Brownian increments; the noise enters through
//! the field values at each vortex position. Increments come from a
//! counter-based stream keyed by `(seed, step)`, so trajectories replay
//! bit-identically regardless of worker count or execution order.

use crate::error::{CoreError, Result};
use crate::kernel::{planar_kernel, Kernel, KernelMode, KernelSpec};
use crate::rng::step_normals;
use crate::spectral::NoiseFamily;
use crate::torus::TorusVec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Positions, their continuous lifts in R^2, and the vortex intensities.
///
/// The lifts carry conserved-quantity bookkeeping (the torus itself has no
/// global linear structure); `wrap(lift_i) == position_i` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexState {
    positions: Vec<TorusVec>,
    lifts: Vec<[f64; 2]>,
    intensities: Vec<f64>,
}

impl VortexState {
    /// Build a state from raw points (used both as initial lifts and, after
    /// wrapping, as positions).
    pub fn new(points: Vec<[f64; 2]>, intensities: Vec<f64>) -> Result<VortexState> {
        if points.is_empty() {
            return Err(CoreError::Precondition("need at least one vortex".into()));
        }
        if points.len() != intensities.len() {
            return Err(CoreError::Precondition(format!(
                "{} positions but {} intensities",
                points.len(),
                intensities.len()
            )));
        }
        if intensities.iter().any(|w| !w.is_finite()) {
            return Err(CoreError::InvalidInput("intensities must be finite".into()));
        }
        let positions = points
            .iter()
            .map(|&p| TorusVec::wrap(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(VortexState {
            positions,
            lifts: points,
            intensities,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[TorusVec] {
        &self.positions
    }

    pub fn lifts(&self) -> &[[f64; 2]] {
        &self.lifts
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    /// Canonical displacement `x_i - x_j`.
    pub fn displacement(&self, i: usize, j: usize) -> Result<TorusVec> {
        TorusVec::displacement(self.lifts[i], self.lifts[j])
    }

    /// Smallest pairwise torus distance and the realizing pair; `None` for a
    /// single vortex.
    pub fn min_pair_distance(&self) -> Option<(f64, (usize, usize))> {
        let n = self.n();
        let mut best: Option<(f64, (usize, usize))> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = TorusVec::distance(self.positions[i], self.positions[j]);
                if best.map_or(true, |(b, _)| d < b) {
                    best = Some((d, (i, j)));
                }
            }
        }
        best
    }

    /// Replace the lifts (positions are re-wrapped).
    pub fn with_lifts(&self, lifts: Vec<[f64; 2]>) -> Result<VortexState> {
        VortexState::new(lifts, self.intensities.clone())
    }

    /// Apply a permutation to vortices: entry `i` of the result is vortex
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<VortexState> {
        if perm.len() != self.n() {
            return Err(CoreError::Precondition("permutation length mismatch".into()));
        }
        let points = perm.iter().map(|&p| self.lifts[p]).collect();
        let intens = perm.iter().map(|&p| self.intensities[p]).collect();
        VortexState::new(points, intens)
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Classical RK4 on the drift alone (noise must be absent or silent).
    Rk4Deterministic,
    /// Stratonovich predictor-corrector (stochastic Heun).
    EulerHeunStrat,
    /// Euler-Maruyama on the Ito form, with the exact spectral correction.
    EulerMaruyamaItoCorrected,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "rk4-deterministic" => Some(Scheme::Rk4Deterministic),
            "euler-heun-strat" => Some(Scheme::EulerHeunStrat),
            "euler-maruyama-ito-corrected" => Some(Scheme::EulerMaruyamaItoCorrected),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rk4Deterministic => "rk4-deterministic",
            Scheme::EulerHeunStrat => "euler-heun-strat",
            Scheme::EulerMaruyamaItoCorrected => "euler-maruyama-ito-corrected",
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone)]
pub struct SDEConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub kernel: KernelSpec,
    pub noise: Option<NoiseFamily>,
    /// Collision stopping threshold; 0 disables stopping.
    pub stop_delta: f64,
    pub seed: u64,
}

impl SDEConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CoreError::Precondition(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(CoreError::Precondition(format!(
                "T must be non-negative, got {}",
                self.t_final
            )));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(CoreError::Precondition(format!(
                "dt = {} exceeds T = {}",
                self.dt, self.t_final
            )));
        }
        if self.stop_delta < 0.0 {
            return Err(CoreError::Precondition("stop_delta must be >= 0".into()));
        }
        if self.scheme == Scheme::Rk4Deterministic {
            if let Some(noise) = &self.noise {
                if noise.amplitude() > 0.0 {
                    return Err(CoreError::Precondition(
                        "rk4-deterministic cannot carry active noise".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// A simulated path on the time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VortexState>,
    /// Brownian increments per step (already scaled by sqrt(dt)); empty for
    /// deterministic runs.
    pub increments: Vec<Vec<f64>>,
    /// First recorded crossing of the stopping threshold, if any.
    pub stopped_at: Option<(f64, (usize, usize))>,
    pub seed: u64,
    pub dt: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &VortexState {
        self.states.last().expect("trajectory has at least the IC")
    }

    /// Smallest pairwise distance seen at any grid time.
    pub fn min_pair_distance(&self) -> f64 {
        self.states
            .iter()
            .filter_map(|s| s.min_pair_distance().map(|(d, _)| d))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Interaction drift: component `i` is `sum_{j != i} w_j K(x_i - x_j)`.
///
/// The pair kernel is evaluated once per unordered pair and reused with the
/// opposite sign, which realizes the oddness of `K` exactly. In planar mode
/// the displacement is the raw lift difference; otherwise it is wrapped.
pub fn drift(state: &VortexState, kernel: &Kernel) -> Result<Vec<[f64; 2]>> {
    let n = state.n();
    let planar = matches!(kernel.spec().mode, KernelMode::Planar);
    let exact = matches!(kernel.spec().mode, KernelMode::Exact);
    let mut out = vec![[0.0; 2]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let k = if planar {
                let d = [
                    state.lifts[i][0] - state.lifts[j][0],
                    state.lifts[i][1] - state.lifts[j][1],
                ];
                planar_kernel(d).map_err(|_| {
                    CoreError::Singularity(format!("vortices {i} and {j} coincide"))
                })?
            } else {
                let d = state.displacement(i, j)?;
                if exact && d.is_zero() {
                    return Err(CoreError::Singularity(format!(
                        "vortices {i} and {j} coincide in exact mode"
                    )));
                }
                kernel.biot_savart(d)?
            };
            let wi = state.intensities[i];
            let wj = state.intensities[j];
            out[i][0] += wj * k[0];
            out[i][1] += wj * k[1];
            out[j][0] -= wi * k[0];
            out[j][1] -= wi * k[1];
        }
    }
    Ok(out)
}

/// The `2n x N` diffusion matrix: column `k` stacks `amplitude * sigma_k(x_i)`
/// over the vortices. Coincident vortices are allowed here.
pub fn diffusion_matrix(state: &VortexState, noise: &NoiseFamily) -> DMatrix<f64> {
    let n = state.n();
    let nf = noise.len();
    let mut m = DMatrix::zeros(2 * n, nf);
    for k in 0..nf {
        for i in 0..n {
            let v = noise.eval_field(k, state.positions[i]);
            m[(2 * i, k)] = v[0];
            m[(2 * i + 1, k)] = v[1];
        }
    }
    m
}

/// Per-vortex noise increment `sum_k dw_k * amplitude * sigma_k(x_i)`.
fn noise_increment(state: &VortexState, noise: &NoiseFamily, dw: &[f64]) -> Vec<[f64; 2]> {
    let n = state.n();
    let mut out = vec![[0.0; 2]; n];
    for (k, &w) in dw.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            let v = noise.eval_field(k, state.positions[i]);
            out[i][0] += w * v[0];
            out[i][1] += w * v[1];
        }
    }
    out
}

/// A validated simulation context; build once, run many trajectories.
pub struct Simulator {
    config: SDEConfig,
    kernel: Kernel,
}

impl Simulator {
    pub fn new(config: SDEConfig) -> Result<Simulator> {
        config.validate()?;
        let kernel = Kernel::new(config.kernel)?;
        Ok(Simulator { config, kernel })
    }

    pub fn config(&self) -> &SDEConfig {
        &self.config
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    fn noise_len(&self) -> usize {
        self.config.noise.as_ref().map_or(0, |f| f.len())
    }

    /// One step of the configured scheme. `dw` must hold one increment per
    /// noise field (already scaled by sqrt(dt)); empty for deterministic runs.
    pub fn step(&self, state: &VortexState, dw: &[f64]) -> Result<VortexState> {
        let expect = if self.config.scheme == Scheme::Rk4Deterministic {
            0
        } else {
            self.noise_len()
        };
        if dw.len() != expect {
            return Err(CoreError::Precondition(format!(
                "expected {expect} Brownian increments, got {}",
                dw.len()
            )));
        }
        let dt = self.config.dt;
        match self.config.scheme {
            Scheme::Rk4Deterministic => self.rk4_step(state, dt),
            Scheme::EulerHeunStrat => self.heun_step(state, dt, dw),
            Scheme::EulerMaruyamaItoCorrected => self.ito_step(state, dt, dw),
        }
    }

    /// Classical RK4 step on the lifts, exposed for reuse by harness code.
    pub fn rk4_step(&self, state: &VortexState, dt: f64) -> Result<VortexState> {
        let n = state.n();
        let k1 = drift(state, &self.kernel)?;
        let s2 = advance(state, &k1, 0.5 * dt)?;
        let k2 = drift(&s2, &self.kernel)?;
        let s3 = advance(state, &k2, 0.5 * dt)?;
        let k3 = drift(&s3, &self.kernel)?;
        let s4 = advance(state, &k3, dt)?;
        let k4 = drift(&s4, &self.kernel)?;
        let mut lifts = state.lifts.clone();
        for i in 0..n {
            for a in 0..2 {
                lifts[i][a] += dt / 6.0
                    * (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a]);
            }
        }
        state.with_lifts(lifts)
    }

    fn heun_step(&self, state: &VortexState, dt: f64, dw: &[f64]) -> Result<VortexState> {
        let n = state.n();
        let a0 = drift(state, &self.kernel)?;
        let g0 = match &self.config.noise {
            Some(noise) => noise_increment(state, noise, dw),
            None => vec![[0.0; 2]; n],
        };
        // predictor
        let mut pred = state.lifts.clone();
        for i in 0..n {
            for c in 0..2 {
                pred[i][c] += a0[i][c] * dt + g0[i][c];
            }
        }
        let pred_state = state.with_lifts(pred)?;
        let a1 = drift(&pred_state, &self.kernel)?;
        let g1 = match &self.config.noise {
            Some(noise) => noise_increment(&pred_state, noise, dw),
            None => vec![[0.0; 2]; n],
        };
        // corrector
        let mut lifts = state.lifts.clone();
        for i in 0..n {
            for c in 0..2 {
                lifts[i][c] += 0.5 * (a0[i][c] + a1[i][c]) * dt + 0.5 * (g0[i][c] + g1[i][c]);
            }
        }
        state.with_lifts(lifts)
    }

    fn ito_step(&self, state: &VortexState, dt: f64, dw: &[f64]) -> Result<VortexState> {
        let n = state.n();
        let a0 = drift(state, &self.kernel)?;
        let mut lifts = state.lifts.clone();
        match &self.config.noise {
            Some(noise) => {
                let g0 = noise_increment(state, noise, dw);
                for i in 0..n {
                    let corr = noise.strat_correction(state.positions[i]);
                    for c in 0..2 {
                        lifts[i][c] += (a0[i][c] + corr[c]) * dt + g0[i][c];
                    }
                }
            }
            None => {
                for i in 0..n {
                    for c in 0..2 {
                        lifts[i][c] += a0[i][c] * dt;
                    }
                }
            }
        }
        state.with_lifts(lifts)
    }

    /// Integrate from `x0` with the configured seed.
    pub fn simulate(&self, x0: &VortexState) -> Result<Trajectory> {
        self.simulate_seeded(x0, self.config.seed)
    }

    /// Integrate from `x0` with an explicit seed (for ensembles).
    pub fn simulate_seeded(&self, x0: &VortexState, seed: u64) -> Result<Trajectory> {
        let steps = self.config.steps();
        let n_noise = if self.config.scheme == Scheme::Rk4Deterministic {
            0
        } else {
            self.noise_len()
        };
        let sqrt_dt = self.config.dt.sqrt();
        let increments = (0..steps).map(|m| {
            let mut v = step_normals(seed, m as u64, n_noise);
            for w in v.iter_mut() {
                *w *= sqrt_dt;
            }
            v
        });
        self.run(x0, seed, increments.collect())
    }

    /// Integrate with externally supplied increments (one vector per step,
    /// already scaled); used for cross-scheme comparisons on a common
    /// Brownian path.
    pub fn simulate_with_increments(
        &self,
        x0: &VortexState,
        increments: Vec<Vec<f64>>,
    ) -> Result<Trajectory> {
        self.run(x0, self.config.seed, increments)
    }

    fn run(&self, x0: &VortexState, seed: u64, increments: Vec<Vec<f64>>) -> Result<Trajectory> {
        if x0.n() >= 2 && self.config.stop_delta > 0.0 {
            let (d, pair) = x0.min_pair_distance().expect("n >= 2");
            if d <= self.config.stop_delta {
                return Err(CoreError::Precondition(format!(
                    "initial pair {pair:?} at distance {d} is inside stop_delta = {}",
                    self.config.stop_delta
                )));
            }
        }
        let dt = self.config.dt;
        let mut states = Vec::with_capacity(increments.len() + 1);
        let mut times = Vec::with_capacity(increments.len() + 1);
        let mut used = Vec::with_capacity(increments.len());
        states.push(x0.clone());
        times.push(0.0);
        let mut stopped_at = None;
        let mut any_noise = false;
        for (m, dw) in increments.into_iter().enumerate() {
            let next = self.step(states.last().unwrap(), &dw)?;
            let t = (m + 1) as f64 * dt;
            any_noise |= !dw.is_empty();
            used.push(dw);
            times.push(t);
            if self.config.stop_delta > 0.0 {
                if let Some((d, pair)) = next.min_pair_distance() {
                    if d <= self.config.stop_delta {
                        stopped_at = Some((t, pair));
                    }
                }
            }
            states.push(next);
            if stopped_at.is_some() {
                break;
            }
        }
        if !any_noise {
            used.clear();
        }
        Ok(Trajectory {
            times,
            states,
            increments: used,
            stopped_at,
            seed,
            dt,
        })
    }
}

fn advance(state: &VortexState, rate: &[[f64; 2]], dt: f64) -> Result<VortexState> {
    let mut lifts = state.lifts.clone();
    for (l, r) in lifts.iter_mut().zip(rate.iter()) {
        l[0] += dt * r[0];
        l[1] += dt * r[1];
    }
    state.with_lifts(lifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample_field, SpectralField};
    use num_complex::Complex64;

    fn exact_sim(scheme: Scheme, dt: f64, t: f64, noise: Option<NoiseFamily>) -> Simulator {
        Simulator::new(SDEConfig {
            scheme,
            dt,
            t_final: t,
            kernel: KernelSpec::exact(),
            noise,
            stop_delta: 0.0,
            seed: 42,
        })
        .unwrap()
    }

    #[test]
    fn single_vortex_has_zero_drift() {
        let sim = exact_sim(Scheme::Rk4Deterministic, 1e-2, 1.0, None);
        let st = VortexState::new(vec![[0.3, -0.4]], vec![1.5]).unwrap();
        assert_eq!(drift(&st, sim.kernel()).unwrap(), vec![[0.0, 0.0]]);
    }

    #[test]
    fn dipole_translates_rigidly() {
        let sim = exact_sim(Scheme::Rk4Deterministic, 1e-2, 1.0, None);
        let gamma = 0.7;
        let st = VortexState::new(vec![[0.0, 0.0], [0.9, 0.2]], vec![gamma, -gamma]).unwrap();
        let d = drift(&st, sim.kernel()).unwrap();
        // both vortices move with velocity -gamma K(x1 - x2)
        let k = sim
            .kernel()
            .biot_savart(st.displacement(0, 1).unwrap())
            .unwrap();
        for i in 0..2 {
            assert!((d[i][0] + gamma * k[0]).abs() < 1e-15);
            assert!((d[i][1] + gamma * k[1]).abs() < 1e-15);
        }
        assert_eq!(d[0], d[1]);
    }

    #[test]
    fn equal_pair_drifts_oppositely() {
        let sim = exact_sim(Scheme::Rk4Deterministic, 1e-2, 1.0, None);
        let st = VortexState::new(vec![[0.0, 0.0], [0.5, 0.5]], vec![1.0, 1.0]).unwrap();
        let d = drift(&st, sim.kernel()).unwrap();
        assert_eq!(d[0][0], -d[1][0]);
        assert_eq!(d[0][1], -d[1][1]);
    }

    #[test]
    fn coincident_vortices_error_in_exact_mode_only() {
        let exact = exact_sim(Scheme::Rk4Deterministic, 1e-2, 1.0, None);
        let st = VortexState::new(vec![[0.1, 0.1], [0.1, 0.1]], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            drift(&st, exact.kernel()),
            Err(CoreError::Singularity(_))
        ));
        let reg = Simulator::new(SDEConfig {
            scheme: Scheme::Rk4Deterministic,
            dt: 1e-2,
            t_final: 1.0,
            kernel: KernelSpec::regularized(0.1),
            noise: None,
            stop_delta: 0.0,
            seed: 0,
        })
        .unwrap();
        assert!(drift(&st, reg.kernel()).is_ok());
    }

    #[test]
    fn diffusion_columns_are_stacked_field_evaluations() {
        let mut rng = crate::rng::substream(3, crate::rng::domain::FIELD_SAMPLING, 0);
        let fields: Vec<_> = (0..3).map(|_| sample_field(2, 0.0, &mut rng)).collect();
        let fam = NoiseFamily::new(fields, 1.7).unwrap();
        let st = VortexState::new(vec![[0.2, 0.3], [-1.0, 2.0]], vec![1.0, -1.0]).unwrap();
        let m = diffusion_matrix(&st, &fam);
        assert_eq!(m.shape(), (4, 3));
        for k in 0..3 {
            for i in 0..2 {
                let v = fam.eval_field(k, st.positions()[i]);
                assert_eq!(m[(2 * i, k)], v[0]);
                assert_eq!(m[(2 * i + 1, k)], v[1]);
            }
        }
        // coincident points give identical blocks
        let co = VortexState::new(vec![[0.4, -0.2], [0.4, -0.2]], vec![1.0, 1.0]).unwrap();
        let mc = diffusion_matrix(&co, &fam);
        for k in 0..3 {
            assert_eq!(mc[(0, k)], mc[(2, k)]);
            assert_eq!(mc[(1, k)], mc[(3, k)]);
        }
    }

    #[test]
    fn single_mode_diffusion_column_is_a_cosine() {
        let mut f = SpectralField::zero(1);
        f.set_mode([1, 0], Complex64::new(0.0, -0.5)).unwrap();
        let amp = 2.5;
        let fam = NoiseFamily::new(vec![f], amp).unwrap();
        let st = VortexState::new(vec![[0.3, 0.0], [1.2, -0.7]], vec![1.0, 1.0]).unwrap();
        let m = diffusion_matrix(&st, &fam);
        for i in 0..2 {
            let x1 = st.positions()[i].c1();
            assert!((m[(2 * i, 0)] - 0.0).abs() < 1e-14);
            assert!((m[(2 * i + 1, 0)] + amp * x1.cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_noise_heun_equals_hand_computed_deterministic_heun() {
        let sim = exact_sim(Scheme::EulerHeunStrat, 1e-3, 1.0, None);
        let st = VortexState::new(vec![[0.0, 0.0], [0.8, -0.3]], vec![1.0, -0.5]).unwrap();
        let stepped = sim.step(&st, &[]).unwrap();
        // hand-composed two-stage Heun using the same drift evaluations
        let dt = 1e-3;
        let a0 = drift(&st, sim.kernel()).unwrap();
        let mut pred = st.lifts().to_vec();
        for i in 0..2 {
            for c in 0..2 {
                pred[i][c] += dt * a0[i][c];
            }
        }
        let pred_state = st.with_lifts(pred).unwrap();
        let a1 = drift(&pred_state, sim.kernel()).unwrap();
        let mut want = st.lifts().to_vec();
        for i in 0..2 {
            for c in 0..2 {
                want[i][c] += 0.5 * dt * (a0[i][c] + a1[i][c]);
            }
        }
        for i in 0..2 {
            for c in 0..2 {
                assert!(
                    (stepped.lifts()[i][c] - want[i][c]).abs() < 1e-15,
                    "vortex {i} component {c}"
                );
            }
        }
    }

    #[test]
    fn silent_dynamics_leaves_the_state_fixed() {
        // zero intensities and zero amplitude: nothing moves
        let fam = NoiseFamily::sample(2, 0.0, 3, 0.0, 9).unwrap();
        let sim = exact_sim(Scheme::EulerHeunStrat, 1e-2, 0.1, Some(fam));
        let st = VortexState::new(vec![[0.1, 0.2], [1.0, 1.0]], vec![0.0, 0.0]).unwrap();
        let traj = sim.simulate(&st).unwrap();
        assert_eq!(traj.final_state().lifts(), st.lifts());
    }

    #[test]
    fn constant_noise_shifts_all_vortices_identically() {
        let fam = NoiseFamily::new(
            vec![
                SpectralField::constant([1.0, 0.0]),
                SpectralField::constant([0.0, 1.0]),
            ],
            0.8,
        )
        .unwrap();
        let sim = exact_sim(Scheme::EulerHeunStrat, 1e-3, 1.0, Some(fam));
        let st =
            VortexState::new(vec![[0.0, 0.0], [1.0, 0.4], [-2.0, 0.3]], vec![0.0, 0.0, 0.0])
                .unwrap();
        let dw = [0.03, -0.02];
        let next = sim.step(&st, &dw).unwrap();
        let shift = [
            next.lifts()[0][0] - st.lifts()[0][0],
            next.lifts()[0][1] - st.lifts()[0][1],
        ];
        for i in 1..3 {
            for c in 0..2 {
                assert!(
                    (next.lifts()[i][c] - st.lifts()[i][c] - shift[c]).abs() < 1e-15,
                    "vortex {i} moved differently"
                );
            }
        }
        // pairwise displacements unchanged
        for i in 0..3 {
            for j in (i + 1)..3 {
                let before = st.displacement(i, j).unwrap();
                let after = next.displacement(i, j).unwrap();
                assert!(
                    (before.c1() - after.c1()).abs() < 1e-15
                        && (before.c2() - after.c2()).abs() < 1e-15
                );
            }
        }
    }

    #[test]
    fn same_seed_replays_bit_identically() {
        let fam = NoiseFamily::sample(2, 0.0, 4, 0.5, 11).unwrap();
        let sim = exact_sim(Scheme::EulerHeunStrat, 1e-3, 0.2, Some(fam));
        let st = VortexState::new(vec![[0.0, 0.0], [1.5, 0.7]], vec![1.0, -1.0]).unwrap();
        let a = sim.simulate(&st).unwrap();
        let b = sim.simulate(&st).unwrap();
        assert_eq!(a.states.len(), b.states.len());
        for (sa, sb) in a.states.iter().zip(b.states.iter()) {
            assert_eq!(sa.lifts(), sb.lifts());
        }
    }

    #[test]
    fn trajectories_are_permutation_equivariant() {
        let fam = NoiseFamily::sample(2, 0.0, 3, 0.4, 21).unwrap();
        let sim = exact_sim(Scheme::EulerHeunStrat, 1e-3, 0.1, Some(fam));
        let st = VortexState::new(
            vec![[0.0, 0.0], [1.5, 0.7], [-1.0, 2.0]],
            vec![1.0, -0.5, 0.25],
        )
        .unwrap();
        let perm = [2usize, 0, 1];
        let t1 = sim.simulate(&st).unwrap();
        let t2 = sim.simulate(&st.permuted(&perm).unwrap()).unwrap();
        let last1 = t1.final_state();
        let last2 = t2.final_state();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(last2.lifts()[i], last1.lifts()[p]);
        }
    }

    #[test]
    fn stopping_records_the_first_crossing() {
        // strong shared noise makes the pair distance diffuse through the
        // threshold quickly; the record must be the first grid crossing
        let fam = NoiseFamily::sample(2, 0.0, 6, 1.5, 33).unwrap();
        let sim = Simulator::new(SDEConfig {
            scheme: Scheme::EulerHeunStrat,
            dt: 1e-3,
            t_final: 5.0,
            kernel: KernelSpec::regularized(0.05),
            noise: Some(fam),
            stop_delta: 0.19,
            seed: 4,
        })
        .unwrap();
        let st = VortexState::new(vec![[0.0, 0.0], [0.25, 0.0]], vec![0.0, 0.0]).unwrap();
        let traj = sim.simulate(&st).unwrap();
        let (t, pair) = traj.stopped_at.expect("diffusing pair should cross 0.19");
        assert_eq!(pair, (0, 1));
        assert_eq!(traj.states.len(), traj.times.len());
        // trajectory truncated at the crossing, and it is the first one
        assert!((traj.times.last().unwrap() - t).abs() < 1e-12);
        for (i, s) in traj.states.iter().enumerate() {
            let (d, _) = s.min_pair_distance().unwrap();
            if i + 1 < traj.states.len() {
                assert!(d > 0.19, "crossing before the recorded stop at index {i}");
            } else {
                assert!(d <= 0.19, "final state not inside the threshold");
            }
        }
        // starting inside stop_delta is a precondition error
        let bad = VortexState::new(vec![[0.0, 0.0], [0.1, 0.0]], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            sim.simulate(&bad),
            Err(CoreError::Precondition(_))
        ));
    }

    #[test]
    fn rk4_self_convergence_order_is_at_least_3_9() {
        let st = VortexState::new(vec![[-0.05, 0.0], [0.05, 0.0]], vec![0.02, 0.02]).unwrap();
        let run = |dt: f64| {
            let sim = exact_sim(Scheme::Rk4Deterministic, dt, 0.5, None);
            let t = sim.simulate(&st).unwrap();
            t.final_state().lifts().to_vec()
        };
        let reference = run(1e-3 / 16.0);
        let err = |dt: f64| {
            let got = run(dt);
            got.iter()
                .zip(reference.iter())
                .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
                .fold(0.0f64, f64::max)
        };
        let e1 = err(1e-3);
        let e2 = err(5e-4);
        let order = (e1 / e2).log2();
        assert!(order >= 3.9, "RK4 order measured {order} (e1={e1:e}, e2={e2:e})");
    }
}
