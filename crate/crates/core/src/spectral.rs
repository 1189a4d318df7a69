//! Solenoidal trigonometric vector fields on the torus.
//!
//! A field of degree `d` is
//!
//! `f(x) = mean + sum_{0 < |k|_inf <= d} i k_perp e^{i<k,x>} fhat(k)`
//!
//! with complex coefficients satisfying the reality constraint
//! `fhat(-k) = conj(fhat(k))`; the `i k_perp` convention makes the symmetric
//! sum real and keeps the coefficients of `grad_perp`-type kernels real. The
//! optional constant `mean` is the degree-0 extension used for additive-noise
//! experiments. Every field is divergence free by construction since
//! `k . k_perp = 0`.
//!
//! Closure under the Lie bracket is exact: with `p x q = p1 q2 - p2 q1`,
//!
//! `[f, g]^(s) = sum_{p+q=s} (p x q) fhat(p) ghat(q)
//!               + i (mean_f . s) ghat(s) - i (mean_g . s) fhat(s)`.

use crate::error::{CoreError, Result};
use crate::rng::{domain, substream};
use crate::torus::{perp, TorusVec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// One solenoidal trigonometric field.
#[derive(Debug, Clone)]
pub struct SpectralField {
    degree: u32,
    mean: [f64; 2],
    /// Coefficients of the half lattice `k1 > 0 || (k1 == 0 && k2 > 0)`,
    /// ordered `k1`-major; the mirrored modes are implied by conjugation.
    half: Vec<Complex64>,
}

/// Count of half-lattice modes for degree `d`.
fn half_len(d: u32) -> usize {
    let d = d as usize;
    ((2 * d + 1) * (2 * d + 1) - 1) / 2
}

/// Real dimension of the degree-`d` coefficient space: the `(2d+1)^2 - 1`
/// nonzero modes pair up under conjugation, and each pair carries one free
/// complex coefficient, so there are `(2d+1)^2 - 1` real parameters.
pub fn coefficient_dimension(d: u32) -> usize {
    2 * half_len(d)
}

fn half_index(d: i32, k1: i32, k2: i32) -> usize {
    // modes enumerated: k1 = 0 -> k2 in 1..=d; k1 in 1..=d -> k2 in -d..=d
    debug_assert!(k1 > 0 || (k1 == 0 && k2 > 0));
    if k1 == 0 {
        (k2 - 1) as usize
    } else {
        d as usize + ((k1 - 1) as usize) * (2 * d as usize + 1) + (k2 + d) as usize
    }
}

fn half_mode_at(d: i32, idx: usize) -> (i32, i32) {
    if idx < d as usize {
        (0, idx as i32 + 1)
    } else {
        let rest = idx - d as usize;
        let w = 2 * d as usize + 1;
        let k1 = (rest / w) as i32 + 1;
        let k2 = (rest % w) as i32 - d;
        (k1, k2)
    }
}

impl SpectralField {
    /// The zero field of the given degree.
    pub fn zero(degree: u32) -> SpectralField {
        SpectralField {
            degree,
            mean: [0.0, 0.0],
            half: vec![Complex64::new(0.0, 0.0); half_len(degree)],
        }
    }

    /// A constant field (degree-0 extension; no oscillatory modes).
    pub fn constant(v: [f64; 2]) -> SpectralField {
        SpectralField {
            degree: 0,
            mean: v,
            half: Vec::new(),
        }
    }

    /// Replace the constant part.
    pub fn with_constant_part(mut self, mean: [f64; 2]) -> SpectralField {
        self.mean = mean;
        self
    }

    /// Set the coefficient of mode `k` (and of `-k`, by conjugation).
    pub fn set_mode(&mut self, k: [i32; 2], c: Complex64) -> Result<()> {
        let d = self.degree as i32;
        let (k1, k2) = (k[0], k[1]);
        if k1 == 0 && k2 == 0 {
            return Err(CoreError::InvalidInput("the zero mode is excluded".into()));
        }
        if k1.abs() > d || k2.abs() > d {
            return Err(CoreError::InvalidInput(format!(
                "mode ({k1}, {k2}) outside degree {d}"
            )));
        }
        if k1 > 0 || (k1 == 0 && k2 > 0) {
            self.half[half_index(d, k1, k2)] = c;
        } else {
            self.half[half_index(d, -k1, -k2)] = c.conj();
        }
        Ok(())
    }

    /// Coefficient of an arbitrary mode (0 outside the square).
    pub fn coeff(&self, k: [i32; 2]) -> Complex64 {
        let d = self.degree as i32;
        let (k1, k2) = (k[0], k[1]);
        if (k1 == 0 && k2 == 0) || k1.abs() > d || k2.abs() > d {
            return Complex64::new(0.0, 0.0);
        }
        if k1 > 0 || (k1 == 0 && k2 > 0) {
            self.half[half_index(d, k1, k2)]
        } else {
            self.half[half_index(d, -k1, -k2)].conj()
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    /// Iterate `(k1, k2, coeff)` over stored half-lattice modes.
    pub fn half_modes(&self) -> impl Iterator<Item = (i32, i32, Complex64)> + '_ {
        let d = self.degree as i32;
        self.half
            .iter()
            .enumerate()
            .map(move |(i, &c)| {
                let (k1, k2) = half_mode_at(d, i);
                (k1, k2, c)
            })
    }

    /// Largest coefficient magnitude (including the mean).
    pub fn max_coeff(&self) -> f64 {
        self.half
            .iter()
            .map(|c| c.norm())
            .fold(self.mean[0].abs().max(self.mean[1].abs()), f64::max)
    }

    /// Evaluate the field at a point.
    pub fn eval(&self, x: TorusVec) -> [f64; 2] {
        let c = x.components();
        let mut out = self.mean;
        for (k1, k2, fh) in self.half_modes() {
            if fh.re == 0.0 && fh.im == 0.0 {
                continue;
            }
            let phase = k1 as f64 * c[0] + k2 as f64 * c[1];
            let (s, co) = phase.sin_cos();
            // the +-k pair contributes -2 Im(e^{i k x} fhat(k)) k_perp
            let t = -2.0 * (s * fh.re + co * fh.im);
            out[0] += t * k2 as f64;
            out[1] -= t * k1 as f64;
        }
        out
    }

    /// Jacobian `J[a][b] = d f_a / d x_b`.
    pub fn jacobian(&self, x: TorusVec) -> [[f64; 2]; 2] {
        let c = x.components();
        let mut j = [[0.0; 2]; 2];
        for (k1, k2, fh) in self.half_modes() {
            if fh.re == 0.0 && fh.im == 0.0 {
                continue;
            }
            let kf = [k1 as f64, k2 as f64];
            let kp = perp(kf);
            let phase = kf[0] * c[0] + kf[1] * c[1];
            let (s, co) = phase.sin_cos();
            // the pair contributes -2 Re(e^{i k x} fhat) k_b kperp_a
            let t = -2.0 * (co * fh.re - s * fh.im);
            for a in 0..2 {
                for b in 0..2 {
                    j[a][b] += t * kf[b] * kp[a];
                }
            }
        }
        j
    }

    /// `self + factor * other`, degrees must match.
    pub fn add_scaled(&self, other: &SpectralField, factor: f64) -> Result<SpectralField> {
        if self.degree != other.degree {
            return Err(CoreError::InvalidInput(format!(
                "degree mismatch: {} vs {}",
                self.degree, other.degree
            )));
        }
        let mut out = self.clone();
        for (c, o) in out.half.iter_mut().zip(other.half.iter()) {
            *c += factor * o;
        }
        out.mean[0] += factor * other.mean[0];
        out.mean[1] += factor * other.mean[1];
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        for c in out.half.iter_mut() {
            *c *= factor;
        }
        out.mean[0] *= factor;
        out.mean[1] *= factor;
        out
    }

    /// Translate the field by `shift`: `f(. - shift)`.
    pub fn translated(&self, shift: TorusVec) -> SpectralField {
        let sc = shift.components();
        let mut out = SpectralField::zero(self.degree);
        out.mean = self.mean;
        let d = self.degree as i32;
        for (k1, k2, fh) in self.half_modes() {
            let phase = -(k1 as f64 * sc[0] + k2 as f64 * sc[1]);
            let rot = Complex64::new(phase.cos(), phase.sin());
            out.half[half_index(d, k1, k2)] = fh * rot;
        }
        out
    }

    /// Exact Lie bracket `[f, g] = (f . grad) g - (g . grad) f`, a field of
    /// degree `d_f + d_g`, computed by coefficient convolution.
    pub fn lie_bracket(&self, other: &SpectralField) -> SpectralField {
        let dr = self.degree + other.degree;
        let w = (2 * dr + 1) as usize;
        let dri = dr as i32;
        let mut acc = vec![Complex64::new(0.0, 0.0); w * w];
        let slot = |s1: i32, s2: i32| ((s1 + dri) as usize) * w + (s2 + dri) as usize;

        let modes_f: Vec<(i32, i32, Complex64)> = self.all_modes().collect();
        let modes_g: Vec<(i32, i32, Complex64)> = other.all_modes().collect();
        for &(p1, p2, fp) in &modes_f {
            for &(q1, q2, gq) in &modes_g {
                let cross = (p1 * q2 - p2 * q1) as f64;
                if cross == 0.0 {
                    continue;
                }
                acc[slot(p1 + q1, p2 + q2)] += cross * fp * gq;
            }
        }
        // constant-part transport terms
        let i = Complex64::new(0.0, 1.0);
        for &(q1, q2, gq) in &modes_g {
            let dot = self.mean[0] * q1 as f64 + self.mean[1] * q2 as f64;
            acc[slot(q1, q2)] += i * dot * gq;
        }
        for &(p1, p2, fp) in &modes_f {
            let dot = other.mean[0] * p1 as f64 + other.mean[1] * p2 as f64;
            acc[slot(p1, p2)] -= i * dot * fp;
        }

        let mut out = SpectralField::zero(dr);
        for idx in 0..half_len(dr) {
            let (k1, k2) = half_mode_at(dri, idx);
            out.half[idx] = acc[slot(k1, k2)];
        }
        out
    }

    /// Iterate all nonzero-mode coefficients (both half lattices).
    pub fn all_modes(&self) -> impl Iterator<Item = (i32, i32, Complex64)> + '_ {
        self.half_modes().flat_map(|(k1, k2, c)| {
            [(k1, k2, c), (-k1, -k2, c.conj())].into_iter()
        })
    }
}

/// Draw a field of degree `d` with independent complex Gaussian coefficients
/// of variance `(1 + |k|^2)^{-gamma}`.
pub fn sample_field<R: Rng>(d: u32, gamma: f64, rng: &mut R) -> SpectralField {
    let mut f = SpectralField::zero(d);
    let di = d as i32;
    for idx in 0..half_len(d) {
        let (k1, k2) = half_mode_at(di, idx);
        let k2n = (k1 * k1 + k2 * k2) as f64;
        let sigma = (1.0 + k2n).powf(-gamma / 2.0) / std::f64::consts::SQRT_2;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        f.half[idx] = Complex64::new(re * sigma, im * sigma);
    }
    f
}

/// A real trigonometric vector polynomial `v(x) = sum_s vhat(s) e^{i<s,x>}`
/// with Hermitian vector coefficients. Not solenoidal in general; used for
/// the self-advection term of the Ito correction.
#[derive(Debug, Clone)]
pub struct TrigVectorPoly {
    degree: u32,
    /// Dense over the full square, index `(s1+d)*(2d+1) + (s2+d)`.
    coeffs: Vec<[Complex64; 2]>,
}

impl TrigVectorPoly {
    fn zero(degree: u32) -> Self {
        let w = (2 * degree + 1) as usize;
        TrigVectorPoly {
            degree,
            coeffs: vec![[Complex64::new(0.0, 0.0); 2]; w * w],
        }
    }

    fn slot(&self, s1: i32, s2: i32) -> usize {
        let d = self.degree as i32;
        ((s1 + d) as usize) * (2 * self.degree + 1) as usize + (s2 + d) as usize
    }

    /// Add the coefficients of `(f . grad) g`.
    fn accumulate_advection(&mut self, f: &SpectralField, g: &SpectralField) {
        // vector coefficients a_p of f: a_0 = mean, a_p = i p_perp fhat(p)
        let i = Complex64::new(0.0, 1.0);
        let a_modes: Vec<(i32, i32, [Complex64; 2])> = std::iter::once((
            0,
            0,
            [Complex64::new(f.mean[0], 0.0), Complex64::new(f.mean[1], 0.0)],
        ))
        .chain(f.all_modes().map(|(p1, p2, c)| {
            let kp = perp([p1 as f64, p2 as f64]);
            (p1, p2, [i * kp[0] * c, i * kp[1] * c])
        }))
        .collect();
        let b_modes: Vec<(i32, i32, [Complex64; 2])> = g
            .all_modes()
            .map(|(q1, q2, c)| {
                let kp = perp([q1 as f64, q2 as f64]);
                (q1, q2, [i * kp[0] * c, i * kp[1] * c])
            })
            .collect();
        for &(p1, p2, a) in &a_modes {
            for &(q1, q2, b) in &b_modes {
                // i (a_p . q) b_q at mode p + q
                let dot = i * (a[0] * q1 as f64 + a[1] * q2 as f64);
                let s = self.slot(p1 + q1, p2 + q2);
                self.coeffs[s][0] += dot * b[0];
                self.coeffs[s][1] += dot * b[1];
            }
        }
    }

    pub fn eval(&self, x: TorusVec) -> [f64; 2] {
        let c = x.components();
        let d = self.degree as i32;
        let mut out = [0.0, 0.0];
        // zero mode
        let z = &self.coeffs[self.slot(0, 0)];
        out[0] += z[0].re;
        out[1] += z[1].re;
        for s1 in 0..=d {
            for s2 in -d..=d {
                if s1 == 0 && s2 <= 0 {
                    continue;
                }
                let v = &self.coeffs[self.slot(s1, s2)];
                if v[0].norm_sqr() + v[1].norm_sqr() == 0.0 {
                    continue;
                }
                let phase = s1 as f64 * c[0] + s2 as f64 * c[1];
                let (sn, cs) = phase.sin_cos();
                // pair contributes 2 Re(vhat e^{i phase})
                out[0] += 2.0 * (v[0].re * cs - v[0].im * sn);
                out[1] += 2.0 * (v[1].re * cs - v[1].im * sn);
            }
        }
        out
    }
}

/// An ordered family of noise fields with a common amplitude.
#[derive(Debug)]
pub struct NoiseFamily {
    fields: Vec<SpectralField>,
    amplitude: f64,
    correction: OnceLock<TrigVectorPoly>,
}

impl Clone for NoiseFamily {
    fn clone(&self) -> Self {
        NoiseFamily {
            fields: self.fields.clone(),
            amplitude: self.amplitude,
            correction: OnceLock::new(),
        }
    }
}

impl NoiseFamily {
    pub fn new(fields: Vec<SpectralField>, amplitude: f64) -> Result<NoiseFamily> {
        if fields.is_empty() {
            return Err(CoreError::Precondition(
                "a noise family needs at least one field".into(),
            ));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(CoreError::Precondition(format!(
                "amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        Ok(NoiseFamily {
            fields,
            amplitude,
            correction: OnceLock::new(),
        })
    }

    /// Draw `n` independent degree-`d` fields from the seeded stream.
    pub fn sample(d: u32, gamma: f64, n: usize, amplitude: f64, seed: u64) -> Result<NoiseFamily> {
        let fields = (0..n)
            .map(|i| {
                let mut rng = substream(seed, domain::FIELD_SAMPLING, i as u64);
                sample_field(d, gamma, &mut rng)
            })
            .collect();
        NoiseFamily::new(fields, amplitude)
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<NoiseFamily> {
        NoiseFamily::new(self.fields.clone(), amplitude)
    }

    /// `amplitude * sigma_k(x)`.
    pub fn eval_field(&self, k: usize, x: TorusVec) -> [f64; 2] {
        let v = self.fields[k].eval(x);
        [v[0] * self.amplitude, v[1] * self.amplitude]
    }

    fn correction_poly(&self) -> &TrigVectorPoly {
        self.correction.get_or_init(|| {
            let dmax = self.fields.iter().map(|f| f.degree()).max().unwrap_or(0);
            let mut poly = TrigVectorPoly::zero(2 * dmax);
            for f in &self.fields {
                poly.accumulate_advection(f, f);
            }
            poly
        })
    }

    /// The Stratonovich-to-Ito drift correction
    /// `1/2 sum_k (sigma_k . grad) sigma_k (x)` including the amplitude
    /// squared, evaluated exactly from the spectral representation.
    pub fn strat_correction(&self, x: TorusVec) -> [f64; 2] {
        let v = self.correction_poly().eval(x);
        let a2 = 0.5 * self.amplitude * self.amplitude;
        [v[0] * a2, v[1] * a2]
    }
}

/// Result of the local bump-basis construction.
#[derive(Debug)]
pub struct LocalBasis {
    pub fields: Vec<SpectralField>,
    pub degree: u32,
    pub achieved_error: f64,
}

/// Divergence-free bump `c * phi(|x - x0|^2 / rho^2) (x - x0)_perp` with
/// `phi(u) = (1 - u)^3` on `[0, 1]`.
fn bump_eval(x: [f64; 2], x0: [f64; 2], rho: f64, c: f64) -> [f64; 2] {
    let y = [x[0] - x0[0], x[1] - x0[1]];
    let u = (y[0] * y[0] + y[1] * y[1]) / (rho * rho);
    if u >= 1.0 {
        return [0.0, 0.0];
    }
    let phi = (1.0 - u).powi(3);
    let p = perp(y);
    [c * phi * p[0], c * phi * p[1]]
}

/// Project a bump onto degree-`d` trigonometric fields by FFT quadrature.
fn project_bump(x0: [f64; 2], rho: f64, c: f64, d: u32) -> SpectralField {
    let n = (8 * d as usize).next_power_of_two().max(64);
    let mut gx = vec![Complex64::new(0.0, 0.0); n * n];
    let mut gy = vec![Complex64::new(0.0, 0.0); n * n];
    let h = 2.0 * PI / n as f64;
    for i in 0..n {
        for j in 0..n {
            let x = [-PI + i as f64 * h, -PI + j as f64 * h];
            let v = bump_eval(x, x0, rho, c);
            gx[i * n + j] = Complex64::new(v[0], 0.0);
            gy[i * n + j] = Complex64::new(v[1], 0.0);
        }
    }
    fft2(&mut gx, n);
    fft2(&mut gy, n);
    // DFT coefficient for mode k: sum_j g(x_j) e^{-i k x_j} / n^2; grid starts
    // at -pi, so multiply by the phase e^{+i k . pi (1,1)}.
    let norm = 1.0 / (n * n) as f64;
    let mut f = SpectralField::zero(d);
    let di = d as i32;
    for idx in 0..half_len(d) {
        let (k1, k2) = half_mode_at(di, idx);
        let i1 = (k1.rem_euclid(n as i32)) as usize;
        let i2 = (k2.rem_euclid(n as i32)) as usize;
        let phase = PI * (k1 + k2) as f64;
        let rot = Complex64::new(phase.cos(), phase.sin());
        let vx = gx[i1 * n + i2] * norm * rot;
        let vy = gy[i1 * n + i2] * norm * rot;
        // scalar coefficient: fhat = -i (vhat . k_perp)/|k|^2
        let kp = perp([k1 as f64, k2 as f64]);
        let k2n = (k1 * k1 + k2 * k2) as f64;
        let dot = vx * kp[0] + vy * kp[1];
        f.half[idx] = Complex64::new(0.0, -1.0) * dot / k2n;
    }
    f
}

/// In-place 2D forward FFT of an `n x n` row-major array.
fn fft2(data: &mut [Complex64], n: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

/// Build `2n` fields whose lifted evaluations at the given centers
/// approximate the canonical basis of R^{2n} within `epsilon`.
///
/// Centers must be pairwise farther than `delta` apart on the torus. The
/// returned degree is chosen adaptively; if the cap is reached the error
/// reports the best achieved accuracy.
pub fn local_basis(
    centers: &[TorusVec],
    delta: f64,
    epsilon: f64,
) -> Result<LocalBasis> {
    if centers.is_empty() {
        return Err(CoreError::Precondition("need at least one center".into()));
    }
    if !(epsilon > 0.0) {
        return Err(CoreError::Precondition("epsilon must be positive".into()));
    }
    if !(delta > 0.0 && delta < PI) {
        return Err(CoreError::Precondition(format!(
            "delta must lie in (0, pi), got {delta}"
        )));
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let dist = TorusVec::distance(centers[i], centers[j]);
            if dist <= delta {
                return Err(CoreError::Precondition(format!(
                    "centers {i} and {j} are {dist:.4} apart, need > delta = {delta}"
                )));
            }
        }
    }

    let rho = delta / 4.0;
    let offset = delta / 8.0;
    let u0 = (offset * offset) / (rho * rho); // = 1/4
    let c = 1.0 / (offset * (1.0 - u0).powi(3));
    // profile 1 peaks at the origin with value (1, 0), profile 2 with (0, 1)
    let x0_1 = [0.0, -offset];
    let x0_2 = [offset, 0.0];

    const DEGREE_CAP: u32 = 64;
    let mut d = ((6.0 / delta).ceil() as u32).max(4);
    let mut best: Option<(SpectralField, SpectralField, u32, f64)> = None;
    loop {
        let g1 = project_bump(x0_1, rho, c, d);
        let g2 = project_bump(x0_2, rho, c, d);
        // measure sup error on an offset grid plus the center itself
        let mut err = 0.0f64;
        let m = 48;
        for i in 0..m {
            for j in 0..m {
                let p = [
                    -PI + (i as f64 + 0.37) * 2.0 * PI / m as f64,
                    -PI + (j as f64 + 0.61) * 2.0 * PI / m as f64,
                ];
                let x = TorusVec::wrap(p)?;
                for (g, x0) in [(&g1, x0_1), (&g2, x0_2)] {
                    let approx = g.eval(x);
                    let exact = bump_eval(p, x0, rho, c);
                    err = err
                        .max((approx[0] - exact[0]).abs())
                        .max((approx[1] - exact[1]).abs());
                }
            }
        }
        let origin = TorusVec::wrap([0.0, 0.0])?;
        let e1 = g1.eval(origin);
        let e2 = g2.eval(origin);
        err = err
            .max((e1[0] - 1.0).abs())
            .max(e1[1].abs())
            .max(e2[0].abs())
            .max((e2[1] - 1.0).abs());

        if best.as_ref().map_or(true, |b| err < b.3) {
            best = Some((g1, g2, d, err));
        }
        if err <= 0.8 * epsilon {
            break;
        }
        if d >= DEGREE_CAP {
            let achieved = best.as_ref().map(|b| b.3).unwrap_or(f64::INFINITY);
            return Err(CoreError::Accuracy {
                requested: epsilon,
                achievable: achieved,
                detail: format!("local basis degree cap {DEGREE_CAP} reached"),
            });
        }
        d = ((d as f64 * 1.4).ceil() as u32).min(DEGREE_CAP);
    }

    let (g1, g2, degree, achieved) = best.unwrap();
    let mut fields = Vec::with_capacity(2 * centers.len());
    for &center in centers {
        fields.push(g1.translated(center));
        fields.push(g2.translated(center));
    }
    Ok(LocalBasis {
        fields,
        degree,
        achieved_error: achieved,
    })
}
