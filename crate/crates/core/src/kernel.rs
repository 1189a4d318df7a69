//! Periodic Green function of `-Delta` on the torus, its Biot-Savart kernel,
//! and their delta-regularizations.
//!
//! The Green function is the zero-mean series `G(x) = sum_{k != 0} |k|^{-2}
//! e^{i k.x}`, which behaves like `-2 pi ln|x|` near the lattice. Direct
//! summation converges only conditionally, so evaluation splits the sum
//! Ewald-style: a Gaussian-damped spectral part plus exponential-integral
//! image terms,
//!
//! `G(x) = sum_{k != 0} e^{-eta |k|^2} |k|^{-2} e^{i k.x}
//!         + pi sum_m E1(|x - 2 pi m|^2 / (4 eta)) - eta`.
//!
//! The identity holds for every `eta > 0`, which doubles as a self-test.
//! The Biot-Savart kernel is `K = grad_perp G` with the fixed convention
//! `v_perp = (v2, -v1)`.

use crate::error::{CoreError, Result};
use crate::special::{exp1, exp1_entire, one_minus_exp_over, EULER_GAMMA};
use crate::torus::{perp, TorusVec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;
/// Real-space image shells included in the Ewald sum.
const IMAGE_RANGE: i32 = 2;
/// Splitting parameter used for the smooth grid table; small enough that the
/// table function is smooth across the half-cell lines to below 1e-15.
const TABLE_ETA: f64 = 0.08;

/// Kernel selection: the exact periodic kernel, its delta-regularization, or
/// the whole-plane kernel used by the collapse demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelMode {
    Exact,
    Regularized { delta: f64 },
    Planar,
}

/// Evaluation path: direct Ewald summation (reference) or a precomputed grid
/// with high-order interpolation (production).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvalPath {
    ReferenceSeries {
        k_max: u32,
        eta: f64,
        tolerance: f64,
    },
    GridInterp {
        grid_size: u32,
        order: u32,
        tolerance: f64,
    },
}

impl Default for EvalPath {
    fn default() -> Self {
        EvalPath::ReferenceSeries {
            k_max: 8,
            eta: 1.0,
            tolerance: 1e-10,
        }
    }
}

/// Full kernel specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub mode: KernelMode,
    pub eval: EvalPath,
}

impl KernelSpec {
    pub fn exact() -> Self {
        KernelSpec {
            mode: KernelMode::Exact,
            eval: EvalPath::default(),
        }
    }

    pub fn regularized(delta: f64) -> Self {
        KernelSpec {
            mode: KernelMode::Regularized { delta },
            eval: EvalPath::default(),
        }
    }

    pub fn planar() -> Self {
        KernelSpec {
            mode: KernelMode::Planar,
            eval: EvalPath::default(),
        }
    }

    pub fn with_grid(mut self, grid_size: u32, order: u32) -> Self {
        self.eval = EvalPath::GridInterp {
            grid_size,
            order,
            tolerance: 1e-6,
        };
        self
    }

    pub fn delta(&self) -> Option<f64> {
        match self.mode {
            KernelMode::Regularized { delta } => Some(delta),
            _ => None,
        }
    }
}

/// The whole-plane Biot-Savart kernel `x_perp / (2 pi |x|^2)`.
pub fn planar_kernel(x: [f64; 2]) -> Result<[f64; 2]> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(CoreError::Singularity(
            "planar kernel evaluated at x = 0".into(),
        ));
    }
    let p = perp(x);
    let s = 1.0 / (TWO_PI * r2);
    Ok([p[0] * s, p[1] * s])
}

struct SeriesParams {
    eta: f64,
    /// Half-lattice modes `(k1, k2, 2 e^{-eta|k|^2}/|k|^2)`.
    modes: Vec<(f64, f64, f64)>,
}

impl SeriesParams {
    fn new(k_max: u32, eta: f64) -> Self {
        let k_max = k_max as i32;
        let mut modes = Vec::new();
        for k1 in 0..=k_max {
            for k2 in -k_max..=k_max {
                // half lattice: k1 > 0, or k1 == 0 and k2 > 0
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let k2n = (k1 * k1 + k2 * k2) as f64;
                let w = 2.0 * (-eta * k2n).exp() / k2n;
                modes.push((k1 as f64, k2 as f64, w));
            }
        }
        SeriesParams { eta, modes }
    }

    /// Spectral part and its gradient at the canonical representative.
    fn spectral(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let mut s = 0.0;
        let mut g = [0.0, 0.0];
        for &(k1, k2, w) in &self.modes {
            let phase = k1 * x[0] + k2 * x[1];
            let (sin, cos) = phase.sin_cos();
            s += w * cos;
            g[0] -= w * sin * k1;
            g[1] -= w * sin * k2;
        }
        (s, g)
    }

    /// Real-space image sum and gradient, every image in range (including m = 0).
    /// Requires `x != 0`.
    fn images(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let mut s = 0.0;
        let mut g = [0.0, 0.0];
        for m1 in -IMAGE_RANGE..=IMAGE_RANGE {
            for m2 in -IMAGE_RANGE..=IMAGE_RANGE {
                let y = [x[0] - TWO_PI * m1 as f64, x[1] - TWO_PI * m2 as f64];
                let r2 = y[0] * y[0] + y[1] * y[1];
                let u = r2 / (4.0 * self.eta);
                s += PI * exp1(u);
                let f = -TWO_PI * (-u).exp() / r2;
                g[0] += f * y[0];
                g[1] += f * y[1];
            }
        }
        (s, g)
    }

    /// Image sum excluding m = 0; finite at x = 0.
    fn images_far(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let mut s = 0.0;
        let mut g = [0.0, 0.0];
        for m1 in -IMAGE_RANGE..=IMAGE_RANGE {
            for m2 in -IMAGE_RANGE..=IMAGE_RANGE {
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let y = [x[0] - TWO_PI * m1 as f64, x[1] - TWO_PI * m2 as f64];
                let r2 = y[0] * y[0] + y[1] * y[1];
                let u = r2 / (4.0 * self.eta);
                s += PI * exp1(u);
                let f = -TWO_PI * (-u).exp() / r2;
                g[0] += f * y[0];
                g[1] += f * y[1];
            }
        }
        (s, g)
    }

    fn green(&self, x: [f64; 2]) -> f64 {
        let (sk, _) = self.spectral_value_only(x);
        let (sr, _) = self.images(x);
        sk + sr - self.eta
    }

    fn spectral_value_only(&self, x: [f64; 2]) -> (f64, ()) {
        let mut s = 0.0;
        for &(k1, k2, w) in &self.modes {
            s += w * (k1 * x[0] + k2 * x[1]).cos();
        }
        (s, ())
    }

    fn green_and_grad(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let (sk, gk) = self.spectral(x);
        let (sr, gr) = self.images(x);
        (sk + sr - self.eta, [gk[0] + gr[0], gk[1] + gr[1]])
    }

    /// Smooth remainder `R(x) = G(x) + 2 pi ln|x|` and its gradient, valid for
    /// `|x| < 2` (canonical representative); finite at the origin.
    fn remainder_and_grad(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let (sk, gk) = self.spectral(x);
        let (sf, gf) = self.images_far(x);
        let r2 = x[0] * x[0] + x[1] * x[1];
        let u0 = r2 / (4.0 * self.eta);
        let value = sk + sf - self.eta
            + PI * ((4.0 * self.eta).ln() - EULER_GAMMA)
            + PI * exp1_entire(u0);
        let c = PI * one_minus_exp_over(u0) / (2.0 * self.eta);
        let grad = [gk[0] + gf[0] + c * x[0], gk[1] + gf[1] + c * x[1]];
        (value, grad)
    }

    /// Achievable truncation error (conservative overestimate).
    fn accuracy_estimate(&self, k_max: u32) -> f64 {
        let k = k_max as f64;
        let tail_k = 4.0 * PI * exp1(self.eta * k * k);
        let mut tail_r = 0.0;
        for shell in (IMAGE_RANGE + 1)..(IMAGE_RANGE + 20) {
            let d = TWO_PI * shell as f64 - PI * std::f64::consts::SQRT_2;
            let u = d * d / (4.0 * self.eta);
            if u > 700.0 {
                break;
            }
            tail_r += 8.0 * shell as f64 * PI * exp1(u);
        }
        tail_k + tail_r + 1e-14
    }
}

struct GridTable {
    n: usize,
    h: f64,
    order: usize,
    /// Smooth part `W(x) = G(x) - pi E1(|x|^2 / (4 eta_t))`, finite everywhere.
    w: Vec<f64>,
    /// Components of `grad_perp W`.
    v1: Vec<f64>,
    v2: Vec<f64>,
}

impl GridTable {
    fn build(series: &SeriesParams, n: usize, order: usize) -> GridTable {
        let h = TWO_PI / n as f64;
        let mut w = vec![0.0; n * n];
        let mut v1 = vec![0.0; n * n];
        let mut v2 = vec![0.0; n * n];
        let origin = n / 2;
        for i in 0..n {
            for j in 0..n {
                let x = [-PI + i as f64 * h, -PI + j as f64 * h];
                let idx = i * n + j;
                if i == origin && j == origin {
                    let (r0, _) = series.remainder_and_grad([0.0, 0.0]);
                    w[idx] = r0 + PI * (EULER_GAMMA - (4.0 * TABLE_ETA).ln());
                    v1[idx] = 0.0;
                    v2[idx] = 0.0;
                    continue;
                }
                let (g, grad) = series.green_and_grad(x);
                let r2 = x[0] * x[0] + x[1] * x[1];
                let u = r2 / (4.0 * TABLE_ETA);
                w[idx] = g - PI * exp1(u);
                // grad_perp of (G - pi E1(u)): K + 2 pi e^{-u} x_perp / r^2
                let k = perp(grad);
                let f = TWO_PI * (-u).exp() / r2;
                let xp = perp(x);
                v1[idx] = k[0] + f * xp[0];
                v2[idx] = k[1] + f * xp[1];
            }
        }
        GridTable {
            n,
            h,
            order,
            w,
            v1,
            v2,
        }
    }

    /// Tensor-product Lagrange interpolation of one table.
    fn interp(&self, table: &[f64], x: [f64; 2]) -> f64 {
        let p = self.order;
        let half = (p / 2) as isize;
        let n = self.n as isize;
        let mut weights = [[0.0f64; 9]; 2];
        let mut base = [0isize; 2];
        for axis in 0..2 {
            let s = (x[axis] + PI) / self.h;
            let i0 = s.floor() as isize;
            let t = s - i0 as f64;
            base[axis] = i0 - half;
            // Lagrange basis on integer nodes -half..=half+? (p+1 nodes at
            // offsets 0..=p relative to base), evaluated at t + half.
            let tt = t + half as f64;
            for j in 0..=p {
                let mut l = 1.0;
                for m in 0..=p {
                    if m != j {
                        l *= (tt - m as f64) / (j as f64 - m as f64);
                    }
                }
                weights[axis][j] = l;
            }
        }
        let mut acc = 0.0;
        for j in 0..=p {
            let gi = (base[0] + j as isize).rem_euclid(n) as usize;
            let wj = weights[0][j];
            if wj == 0.0 {
                continue;
            }
            let row = gi * self.n;
            let mut inner = 0.0;
            for l in 0..=p {
                let gl = (base[1] + l as isize).rem_euclid(n) as usize;
                inner += weights[1][l] * table[row + gl];
            }
            acc += wj * inner;
        }
        acc
    }

    fn smooth_value(&self, x: [f64; 2]) -> f64 {
        self.interp(&self.w, x)
    }

    fn smooth_perp_grad(&self, x: [f64; 2]) -> [f64; 2] {
        [self.interp(&self.v1, x), self.interp(&self.v2, x)]
    }
}

/// A built kernel: validated spec plus precomputed summation tables.
///
/// Construction does all the heavy lifting; evaluation afterwards is pure and
/// safe to call from any number of threads.
pub struct Kernel {
    spec: KernelSpec,
    series: SeriesParams,
    table: Option<GridTable>,
}

impl Kernel {
    pub fn new(spec: KernelSpec) -> Result<Kernel> {
        if let KernelMode::Regularized { delta } = spec.mode {
            if !(delta > 0.0 && delta < PI / 4.0) {
                return Err(CoreError::Precondition(format!(
                    "regularization delta must lie in (0, pi/4), got {delta}"
                )));
            }
        }
        let (series, table) = match spec.eval {
            EvalPath::ReferenceSeries {
                k_max,
                eta,
                tolerance,
            } => {
                if tolerance <= 0.0 {
                    return Err(CoreError::Precondition(
                        "reference-series tolerance must be positive".into(),
                    ));
                }
                if !(eta > 0.0 && eta <= 4.0) {
                    return Err(CoreError::Precondition(format!(
                        "Ewald parameter eta must lie in (0, 4], got {eta}"
                    )));
                }
                if k_max < 2 {
                    return Err(CoreError::Precondition(
                        "reference-series k_max must be at least 2".into(),
                    ));
                }
                let series = SeriesParams::new(k_max, eta);
                let achievable = series.accuracy_estimate(k_max);
                if achievable > tolerance {
                    return Err(CoreError::Accuracy {
                        requested: tolerance,
                        achievable,
                        detail: format!("k_max = {k_max}, eta = {eta}"),
                    });
                }
                (series, None)
            }
            EvalPath::GridInterp {
                grid_size,
                order,
                tolerance,
            } => {
                if !grid_size.is_power_of_two() || grid_size < 64 {
                    return Err(CoreError::Precondition(format!(
                        "grid size must be a power of two >= 64, got {grid_size}"
                    )));
                }
                if !(2..=8).contains(&order) || order % 2 != 0 {
                    return Err(CoreError::Precondition(format!(
                        "interpolation order must be even and in 2..=8, got {order}"
                    )));
                }
                if tolerance <= 0.0 {
                    return Err(CoreError::Precondition(
                        "interpolation tolerance must be positive".into(),
                    ));
                }
                // Build the table from a reference series tight enough that
                // interpolation error dominates.
                let series = SeriesParams::new(10, 1.0);
                let table = GridTable::build(&series, grid_size as usize, order as usize);
                (series, Some(table))
            }
        };
        Ok(Kernel {
            spec,
            series,
            table,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Conservative truncation-error estimate of the active evaluation path.
    pub fn accuracy_estimate(&self) -> f64 {
        match self.spec.eval {
            EvalPath::ReferenceSeries { k_max, .. } => self.series.accuracy_estimate(k_max),
            EvalPath::GridInterp { tolerance, .. } => tolerance,
        }
    }

    fn check_not_planar(&self, what: &str) -> Result<()> {
        if matches!(self.spec.mode, KernelMode::Planar) {
            return Err(CoreError::InvalidInput(format!(
                "{what} is not defined in planar mode"
            )));
        }
        Ok(())
    }

    /// Exact periodic Green function `G(x)`.
    pub fn green(&self, x: TorusVec) -> Result<f64> {
        self.check_not_planar("green")?;
        if x.is_zero() {
            return Err(CoreError::Singularity(
                "exact Green function evaluated at a lattice point".into(),
            ));
        }
        let c = x.components();
        match &self.table {
            None => Ok(self.series.green(c)),
            Some(t) => {
                let r2 = c[0] * c[0] + c[1] * c[1];
                let u = r2 / (4.0 * TABLE_ETA);
                Ok(t.smooth_value(c) + PI * exp1(u))
            }
        }
    }

    /// Gradient of the exact Green function.
    pub fn grad_green(&self, x: TorusVec) -> Result<[f64; 2]> {
        self.check_not_planar("grad_green")?;
        if x.is_zero() {
            return Err(CoreError::Singularity(
                "exact Green gradient evaluated at a lattice point".into(),
            ));
        }
        let c = x.components();
        match &self.table {
            None => Ok(self.series.green_and_grad(c).1),
            Some(t) => {
                let v = t.smooth_perp_grad(c);
                let r2 = c[0] * c[0] + c[1] * c[1];
                let u = r2 / (4.0 * TABLE_ETA);
                let f = TWO_PI * (-u).exp() / r2;
                let xp = perp(c);
                // v = perp(grad W); K = v - f * x_perp, so grad = unperp(K).
                let k = [v[0] - f * xp[0], v[1] - f * xp[1]];
                Ok([-k[1], k[0]])
            }
        }
    }

    /// The smooth remainder `R(x) = G(x) + 2 pi ln |x|` and gradient, for
    /// `|x|` below pi/2 (only needed inside regularization disks).
    fn remainder(&self, c: [f64; 2]) -> (f64, [f64; 2]) {
        match &self.table {
            None => self.series.remainder_and_grad(c),
            Some(t) => {
                let r2 = c[0] * c[0] + c[1] * c[1];
                let u = r2 / (4.0 * TABLE_ETA);
                let value = t.smooth_value(c) - PI * (EULER_GAMMA - (4.0 * TABLE_ETA).ln())
                    + PI * exp1_entire(u);
                let vperp = t.smooth_perp_grad(c);
                let grad_w = [-vperp[1], vperp[0]];
                let cgrad = PI * one_minus_exp_over(u) / (2.0 * TABLE_ETA);
                (
                    value,
                    [grad_w[0] + cgrad * c[0], grad_w[1] + cgrad * c[1]],
                )
            }
        }
    }

    /// Delta-regularized Green function `G^delta(x)`.
    ///
    /// Equals `green(x)` exactly (same code path) for `|x| > delta`; inside
    /// the disk the radial log profile is replaced by its cubic Taylor
    /// polynomial in `|x|^2` at `|x| = delta`, so the junction is C^3 and the
    /// value at the origin is `-2 pi ln delta + 11 pi / 6 + R(0)`.
    pub fn green_reg(&self, x: TorusVec, delta: f64) -> Result<f64> {
        self.check_not_planar("green_reg")?;
        validate_delta(delta)?;
        if x.norm() > delta {
            return self.green(x);
        }
        let c = x.components();
        let (rem, _) = self.remainder(c);
        Ok(radial_profile(c[0] * c[0] + c[1] * c[1], delta) + rem)
    }

    /// Gradient of `G^delta`.
    pub fn grad_green_reg(&self, x: TorusVec, delta: f64) -> Result<[f64; 2]> {
        self.check_not_planar("grad_green_reg")?;
        validate_delta(delta)?;
        if x.norm() > delta {
            return self.grad_green(x);
        }
        let c = x.components();
        let (_, grad_rem) = self.remainder(c);
        let dp = radial_profile_deriv(c[0] * c[0] + c[1] * c[1], delta);
        Ok([
            2.0 * dp * c[0] + grad_rem[0],
            2.0 * dp * c[1] + grad_rem[1],
        ])
    }

    /// Biot-Savart kernel honoring the spec mode: `K = grad_perp G` in exact
    /// mode, `K^delta` in regularized mode, and the whole-plane kernel of the
    /// canonical representative in planar mode.
    pub fn biot_savart(&self, x: TorusVec) -> Result<[f64; 2]> {
        match self.spec.mode {
            KernelMode::Exact => Ok(perp(self.grad_green(x)?)),
            KernelMode::Regularized { delta } => Ok(perp(self.grad_green_reg(x, delta)?)),
            KernelMode::Planar => planar_kernel(x.components()),
        }
    }

    /// Scalar potential honoring the spec mode (used by diagnostics).
    pub fn potential(&self, x: TorusVec) -> Result<f64> {
        match self.spec.mode {
            KernelMode::Exact => self.green(x),
            KernelMode::Regularized { delta } => self.green_reg(x, delta),
            KernelMode::Planar => Err(CoreError::InvalidInput(
                "potential is not defined in planar mode".into(),
            )),
        }
    }
}

fn validate_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < PI / 4.0) {
        return Err(CoreError::Precondition(format!(
            "regularization delta must lie in (0, pi/4), got {delta}"
        )));
    }
    Ok(())
}

/// Interior radial profile: the cubic Taylor polynomial of `-pi ln s` in
/// `s = r^2` at `s0 = delta^2`. Matches value and first three derivatives of
/// the log profile at the junction.
fn radial_profile(s: f64, delta: f64) -> f64 {
    let s0 = delta * delta;
    let d = s - s0;
    let c0 = -PI * s0.ln();
    let c1 = -PI / s0;
    let c2 = PI / (2.0 * s0 * s0);
    let c3 = -PI / (3.0 * s0 * s0 * s0);
    c0 + d * (c1 + d * (c2 + d * c3))
}

/// d/ds of the interior radial profile.
fn radial_profile_deriv(s: f64, delta: f64) -> f64 {
    let s0 = delta * delta;
    let d = s - s0;
    let c1 = -PI / s0;
    let c2 = PI / (2.0 * s0 * s0);
    let c3 = -PI / (3.0 * s0 * s0 * s0);
    c1 + d * (2.0 * c2 + d * 3.0 * c3)
}

/// Empirically fitted constants for the logarithmic bounds
/// `C1 |ln r| - C3 <= G(x) <= C2 |ln r| + C3` (with `r` replaced by
/// `r v delta` for the regularized kernel) and the derivative bounds
/// `|DG| <= C3 / r`, `|D^2 G| <= C3 / r^2`.
///
/// The slope of `G` against `|ln r|` is fitted by least squares on a radial
/// sample, bracketed by +-5%, and `C3` absorbs the worst residual over the
/// fitting sample with a 10% + 0.5 margin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Fitted coefficient of |ln r| (close to 2 pi).
    pub log_slope: f64,
    /// Largest lower-bound residual on the fitting sample (negative = slack).
    pub worst_lower_residual: f64,
    /// Largest upper-bound residual on the fitting sample (negative = slack).
    pub worst_upper_residual: f64,
    pub samples: usize,
}

impl BoundConstants {
    /// Fit the constants on a deterministic radial + grid sample.
    pub fn fit(kernel: &Kernel) -> Result<BoundConstants> {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let radii = 320;
        for i in 0..radii {
            let t = i as f64 / (radii - 1) as f64;
            let r = 1e-6 * (4.2e6f64).powf(t);
            for a in 0..24 {
                let th = (a as f64 + 0.5) * PI / 12.0;
                let p = [r * th.cos(), r * th.sin()];
                if p[0].abs() <= PI && p[1].abs() <= PI {
                    pts.push(p);
                }
            }
        }
        let m = 48;
        for i in 0..m {
            for j in 0..m {
                let p = [
                    -PI + (i as f64 + 0.5) * TWO_PI / m as f64,
                    -PI + (j as f64 + 0.5) * TWO_PI / m as f64,
                ];
                pts.push(p);
            }
        }

        // Least squares of G against |ln r| on the small-radius subset.
        let mut sxx = 0.0;
        let mut sx = 0.0;
        let mut sxy = 0.0;
        let mut sy = 0.0;
        let mut nfit = 0.0;
        let mut evals: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for &p in &pts {
            let x = TorusVec::wrap(p)?;
            let r = x.norm();
            let g = kernel.green(x)?;
            evals.push((r, g));
            if r <= 0.5 {
                let l = r.ln().abs();
                sxx += l * l;
                sx += l;
                sxy += l * g;
                sy += g;
                nfit += 1.0;
            }
        }
        let slope = (nfit * sxy - sx * sy) / (nfit * sxx - sx * sx);
        let c1 = 0.95 * slope;
        let c2 = 1.05 * slope;

        let mut worst_lower = f64::NEG_INFINITY;
        let mut worst_upper = f64::NEG_INFINITY;
        for &(r, g) in &evals {
            let l = r.ln().abs();
            worst_lower = worst_lower.max(c1 * l - g);
            worst_upper = worst_upper.max(g - c2 * l);
        }

        // Derivative residuals |DG| r and |D^2 G| r^2 on a radial subsample.
        let mut worst_deriv = f64::NEG_INFINITY;
        for &p in pts.iter().step_by(7) {
            let x = TorusVec::wrap(p)?;
            let r = x.norm();
            let grad = kernel.grad_green(x)?;
            let gnorm = grad[0].hypot(grad[1]);
            worst_deriv = worst_deriv.max(gnorm * r);
            // Frobenius norm of the Hessian by central differences of the
            // analytic gradient.
            let h = (1e-3 * r).clamp(1e-8, 1e-5);
            let mut frob2 = 0.0;
            for axis in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[axis] += h;
                pm[axis] -= h;
                let gp = kernel.grad_green(TorusVec::wrap(pp)?)?;
                let gm = kernel.grad_green(TorusVec::wrap(pm)?)?;
                for comp in 0..2 {
                    let d = (gp[comp] - gm[comp]) / (2.0 * h);
                    frob2 += d * d;
                }
            }
            worst_deriv = worst_deriv.max(frob2.sqrt() * r * r);
        }

        let c3 = 1.1 * worst_lower.max(worst_upper).max(worst_deriv).max(0.0) + 0.5;
        Ok(BoundConstants {
            c1,
            c2,
            c3,
            log_slope: slope,
            worst_lower_residual: worst_lower - c3,
            worst_upper_residual: worst_upper - c3,
            samples: evals.len(),
        })
    }

    /// Two-sided log bound for the exact Green function at radius `r`.
    pub fn check_green(&self, g: f64, r: f64) -> bool {
        let l = r.ln().abs();
        self.c1 * l - self.c3 <= g && g <= self.c2 * l + self.c3
    }

    /// Two-sided log bound for the regularized Green function: the radius is
    /// floored at delta.
    pub fn check_green_reg(&self, g: f64, r: f64, delta: f64) -> bool {
        self.check_green(g, r.max(delta))
    }

    /// Gradient bound `|DG^delta| <= C3 / (r v delta)`.
    pub fn check_grad(&self, grad_norm: f64, r: f64, delta: f64) -> bool {
        grad_norm <= self.c3 / r.max(delta)
    }
}
