//! Points and displacements on the flat torus `[-pi, pi)^2`.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// A point (or displacement) on the 2-torus, stored as its canonical
/// representative in `[-pi, pi) x [-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusVec {
    c1: f64,
    c2: f64,
}

fn wrap_scalar(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        // Already canonical; returning unchanged keeps wrap exactly idempotent
        // and preserves tiny displacements that `rem_euclid` would absorb.
        return x;
    }
    let w = (x + PI).rem_euclid(TWO_PI) - PI;
    // rem_euclid can return exactly 2*pi for inputs just below a lattice point.
    if w >= PI {
        w - TWO_PI
    } else {
        w
    }
}

impl TorusVec {
    /// Reduce a raw vector componentwise mod 2*pi into `[-pi, pi)`.
    pub fn wrap(v: [f64; 2]) -> Result<TorusVec> {
        if !v[0].is_finite() || !v[1].is_finite() {
            return Err(CoreError::InvalidInput(format!(
                "wrap requires finite components, got ({}, {})",
                v[0], v[1]
            )));
        }
        Ok(TorusVec {
            c1: wrap_scalar(v[0]),
            c2: wrap_scalar(v[1]),
        })
    }

    /// Canonical components.
    pub fn components(&self) -> [f64; 2] {
        [self.c1, self.c2]
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Euclidean norm of the canonical representative; this is the geodesic
    /// distance to the lattice only when both components lie in `[-pi, pi)`,
    /// which the type guarantees.
    pub fn norm(&self) -> f64 {
        self.c1.hypot(self.c2)
    }

    pub fn is_zero(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0
    }

    /// Canonical displacement from `b` to `a` given as raw lifts in R^2.
    pub fn displacement(a: [f64; 2], b: [f64; 2]) -> Result<TorusVec> {
        TorusVec::wrap([a[0] - b[0], a[1] - b[1]])
    }

    /// Geodesic distance between two torus points.
    pub fn distance(a: TorusVec, b: TorusVec) -> f64 {
        TorusVec::wrap([a.c1 - b.c1, a.c2 - b.c2])
            .expect("canonical components are finite")
            .norm()
    }

    pub fn negate(&self) -> TorusVec {
        TorusVec::wrap([-self.c1, -self.c2]).expect("canonical components are finite")
    }
}

/// The fixed perpendicular convention used throughout: `v_perp = (v2, -v1)`.
pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [v[1], -v[0]]
}
