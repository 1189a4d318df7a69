//! Monitoring functionals along trajectories: the coalescence functional
//! `g^delta`, conserved quantities, flow-volume and covariation checks.

use crate::dynamics::{Simulator, Trajectory, VortexState};
use crate::error::{CoreError, Result};
use crate::kernel::{Kernel, KernelMode};
use crate::spectral::NoiseFamily;
use nalgebra::DMatrix;

/// Scalar diagnostics at one trajectory time.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub g_delta: f64,
    pub hamiltonian: f64,
    pub moment: [f64; 2],
    pub min_pair_dist: f64,
}

/// Coalescence functional `g^delta(X) = - sum_{i != j} G^delta(x_i - x_j)`;
/// the sum runs over ordered pairs, so each unordered pair counts twice.
pub fn g_delta(state: &VortexState, delta: f64, kernel: &Kernel) -> Result<f64> {
    let n = state.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum -= 2.0 * kernel.green_reg(state.displacement(i, j)?, delta)?;
        }
    }
    Ok(sum)
}

/// Interaction energy `H = sum_{i < j} w_i w_j G(x_i - x_j)` (regularized
/// kernel in regularized mode). A sharp conservation oracle for the
/// deterministic integrator.
pub fn hamiltonian(state: &VortexState, kernel: &Kernel) -> Result<f64> {
    let n = state.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = state.displacement(i, j)?;
            sum += state.intensities()[i] * state.intensities()[j] * kernel.potential(d)?;
        }
    }
    Ok(sum)
}

/// Linear impulse `sum_i w_i lift_i`, conserved deterministically because the
/// kernel is odd.
pub fn moment(state: &VortexState) -> [f64; 2] {
    let mut out = [0.0, 0.0];
    for (l, w) in state.lifts().iter().zip(state.intensities()) {
        out[0] += w * l[0];
        out[1] += w * l[1];
    }
    out
}

/// Diagnostics for every recorded state of a trajectory. `delta` controls the
/// `g^delta` column; in exact mode pass the value used for reporting.
pub fn records_for(
    traj: &Trajectory,
    kernel: &Kernel,
    delta: f64,
) -> Result<Vec<DiagnosticsRecord>> {
    traj.times
        .iter()
        .zip(traj.states.iter())
        .map(|(&t, s)| {
            Ok(DiagnosticsRecord {
                t,
                g_delta: g_delta(s, delta, kernel)?,
                hamiltonian: hamiltonian(s, kernel)?,
                moment: moment(s),
                min_pair_dist: s
                    .min_pair_distance()
                    .map(|(d, _)| d)
                    .unwrap_or(f64::INFINITY),
            })
        })
        .collect()
}

/// Finite-difference Jacobian determinant of the time-T flow map around `x0`,
/// probing every lift coordinate with step `h` under a common noise path.
/// Returns `|det - 1|`.
pub fn volume_check(sim: &Simulator, x0: &VortexState, h: f64) -> Result<f64> {
    if matches!(sim.kernel().spec().mode, KernelMode::Exact) {
        return Err(CoreError::Precondition(
            "volume_check requires the regularized (or planar) kernel".into(),
        ));
    }
    let n = x0.n();
    let dim = 2 * n;
    let mut jac = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let mut finals = [[0.0f64; 2]; 2]; // [side][component] placeholder
        let mut cols = Vec::with_capacity(2);
        for side in [1.0, -1.0] {
            let mut lifts = x0.lifts().to_vec();
            lifts[b / 2][b % 2] += side * h;
            let probe = x0.with_lifts(lifts)?;
            let traj = sim.simulate(&probe)?;
            if traj.stopped_at.is_some() {
                return Err(CoreError::Inconclusive(format!(
                    "probe {b} ({}h) stopped before T",
                    if side > 0.0 { "+" } else { "-" }
                )));
            }
            cols.push(traj.final_state().lifts().to_vec());
        }
        let _ = &mut finals;
        for a in 0..dim {
            let plus = cols[0][a / 2][a % 2];
            let minus = cols[1][a / 2][a % 2];
            jac[(a, b)] = (plus - minus) / (2.0 * h);
        }
    }
    Ok((jac.determinant() - 1.0).abs())
}

/// Realized and predicted quadratic covariation of `x_i - x_j` along a
/// stochastic trajectory.
#[derive(Debug, Clone)]
pub struct CovariationSeries {
    pub times: Vec<f64>,
    pub realized: Vec<[[f64; 2]; 2]>,
    pub predicted: Vec<[[f64; 2]; 2]>,
}

impl CovariationSeries {
    /// Frobenius distance between realized and predicted at the final time.
    pub fn final_gap(&self) -> f64 {
        let r = self.realized.last().unwrap();
        let p = self.predicted.last().unwrap();
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let d = r[a][b] - p[a][b];
                s += d * d;
            }
        }
        s.sqrt()
    }
}

/// Estimate the covariation of `x_i - x_j`: realized from summed squared path
/// increments, predicted from `sum_k int (s_k(x_i)-s_k(x_j)) (x) ds` along the
/// same path.
pub fn estimate_covariation(
    traj: &Trajectory,
    i: usize,
    j: usize,
    noise: &NoiseFamily,
) -> Result<CovariationSeries> {
    if traj.increments.is_empty() {
        return Err(CoreError::EmptyCovariation);
    }
    let steps = traj.increments.len();
    let dt = traj.dt;
    let mut realized = Vec::with_capacity(steps + 1);
    let mut predicted = Vec::with_capacity(steps + 1);
    let mut acc_r = [[0.0; 2]; 2];
    let mut acc_p = [[0.0; 2]; 2];
    realized.push(acc_r);
    predicted.push(acc_p);
    for m in 0..steps {
        let s0 = &traj.states[m];
        let s1 = &traj.states[m + 1];
        let dv = [
            (s1.lifts()[i][0] - s0.lifts()[i][0]) - (s1.lifts()[j][0] - s0.lifts()[j][0]),
            (s1.lifts()[i][1] - s0.lifts()[i][1]) - (s1.lifts()[j][1] - s0.lifts()[j][1]),
        ];
        for a in 0..2 {
            for b in 0..2 {
                acc_r[a][b] += dv[a] * dv[b];
            }
        }
        if i != j {
            for k in 0..noise.len() {
                let vi = noise.eval_field(k, s0.positions()[i]);
                let vj = noise.eval_field(k, s0.positions()[j]);
                let v = [vi[0] - vj[0], vi[1] - vj[1]];
                for a in 0..2 {
                    for b in 0..2 {
                        acc_p[a][b] += v[a] * v[b] * dt;
                    }
                }
            }
        }
        realized.push(acc_r);
        predicted.push(acc_p);
    }
    Ok(CovariationSeries {
        times: traj.times[..=steps].to_vec(),
        realized,
        predicted,
    })
}
