//! Small numerics toolbox: the exponential integral E1 and compensated sums.

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below the switch point, modified Lentz continued fraction
/// above it; both branches are accurate to ~1e-15 relative.
pub fn exp1(x: f64) -> f64 {
    assert!(x > 0.0, "exp1 requires a positive argument, got {x}");
    if x <= 1.0 {
        // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=40 {
            let kf = k as f64;
            term *= -x / kf;
            let contrib = -term / kf;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // E1(x) = e^{-x} / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = a * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x).exp() * h
    }
}

/// `E1(x) + gamma + ln x = sum_{k>=1} (-1)^{k+1} x^k/(k*k!)`, the entire part
/// of the exponential integral. Finite at `x = 0`.
pub fn exp1_entire(x: f64) -> f64 {
    assert!(x >= 0.0 && x < 2.0, "exp1_entire is for small arguments, got {x}");
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..=40 {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = -term / kf;
        sum += contrib;
        if contrib.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// `(1 - e^{-u})/u`, stable near `u = 0`.
pub fn one_minus_exp_over(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        // series 1 - u/2 + u^2/6 - u^3/24
        1.0 + u * (-0.5 + u * (1.0 / 6.0 - u / 24.0))
    } else {
        -(-u).exp_m1() / u
    }
}

/// Neumaier compensated accumulator; order-stable summation for ensemble
/// statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn compensated_total(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}
