//! Eigenvalues of 3x3 real matrices via the characteristic cubic, and the
//! Routh-Hurwitz test for that cubic.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients `(s11, s12, s13)` of `det(lambda I - M) = lambda^3 + s11 lambda^2 + s12 lambda + s13`.
pub fn characteristic_cubic(m: &Matrix3<f64>) -> [f64; 3] {
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    [-m.trace(), minors, -m.determinant()]
}

fn eval_monic(coef: [f64; 3], z: Complex64) -> (Complex64, Complex64) {
    let [b, c, d] = coef;
    let value = ((z + b) * z + c) * z + d;
    let slope = (3.0 * z + 2.0 * b) * z + c;
    (value, slope)
}

fn polish(coef: [f64; 3], mut z: Complex64) -> Complex64 {
    let mut best = eval_monic(coef, z).0.norm();
    for _ in 0..8 {
        let (value, slope) = eval_monic(coef, z);
        if slope.norm() == 0.0 || value.norm() == 0.0 {
            break;
        }
        let next = z - value / slope;
        let residual = eval_monic(coef, next).0.norm();
        if !(residual < best) {
            break;
        }
        best = residual;
        z = next;
    }
    z
}

fn one_real_root(b: f64, c: f64, d: f64) -> f64 {
    let shift = b / 3.0;
    let p = c - b * shift;
    let q = 2.0 * shift.powi(3) - c * shift + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if disc >= 0.0 {
        let big = -(q.signum()) * (q.abs() / 2.0 + disc.sqrt()).cbrt();
        let small = if big == 0.0 { 0.0 } else { -p / (3.0 * big) };
        big + small
    } else {
        let r = (-p / 3.0).sqrt();
        let cos_theta = (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0);
        2.0 * r * (cos_theta.acos() / 3.0).cos()
    };
    t - shift
}

/// Roots of `lambda^3 + b lambda^2 + c lambda + d`, ordered by decreasing
/// real part, then decreasing imaginary part.
pub fn cubic_roots(coef: [f64; 3]) -> [Complex64; 3] {
    let [b, c, d] = coef;
    let shift = b / 3.0;
    let p = c - b * shift;
    let q = 2.0 * shift.powi(3) - c * shift + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let mut roots = if disc < 0.0 {
        let r = (-p / 3.0).sqrt();
        let theta = (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0).acos();
        [0.0, 1.0, 2.0].map(|k| Complex64::new(2.0 * r * ((theta - 2.0 * PI * k) / 3.0).cos() - shift, 0.0))
    } else {
        let real = polish(coef, Complex64::new(one_real_root(b, c, d), 0.0)).re;
        // deflate: remaining quadratic z^2 + b1 z + c1
        let b1 = b + real;
        let c1 = c + real * b1;
        let half = -b1 / 2.0;
        let quad_disc = half * half - c1;
        let pair = if quad_disc >= 0.0 {
            let big = half + half.signum() * quad_disc.sqrt();
            let other = if big == 0.0 { 0.0 } else { c1 / big };
            [Complex64::new(big, 0.0), Complex64::new(other, 0.0)]
        } else {
            let im = (-quad_disc).sqrt();
            [Complex64::new(half, im), Complex64::new(half, -im)]
        };
        [Complex64::new(real, 0.0), pair[0], pair[1]]
    };
    for z in roots.iter_mut() {
        let is_real = z.im == 0.0;
        *z = polish(coef, *z);
        if is_real {
            z.im = 0.0;
        }
    }
    roots.sort_by(|l, r| r.re.total_cmp(&l.re).then(r.im.total_cmp(&l.im)));
    roots
}

pub fn eigenvalues_3x3(m: &Matrix3<f64>) -> [Complex64; 3] {
    cubic_roots(characteristic_cubic(m))
}

/// Routh-Hurwitz conditions for `lambda^3 + s11 lambda^2 + s12 lambda + s13`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouthHurwitz {
    pub s11: f64,
    pub s12: f64,
    pub s13: f64,
    /// `s11 s12 - s13`
    pub hurwitz: f64,
    pub stable: bool,
}

pub fn routh_hurwitz_cubic(s11: f64, s12: f64, s13: f64) -> RouthHurwitz {
    let hurwitz = s11 * s12 - s13;
    RouthHurwitz {
        s11,
        s12,
        s13,
        hurwitz,
        stable: s11 > 0.0 && s12 > 0.0 && s13 > 0.0 && hurwitz > 0.0,
    }
}
