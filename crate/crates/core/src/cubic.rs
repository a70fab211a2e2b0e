//! Real roots of polynomials up to degree three.
//!
//! The cubic case uses the trigonometric / Cardano closed form followed by
//! Newton polishing of each root on the original coefficients.

use std::f64::consts::PI;

const POLISH_STEPS: usize = 4;

/// Evaluates `c[0] + c[1] x + c[2] x^2 + c[3] x^3`.
pub fn eval_cubic(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

fn eval_derivative(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1]
}

/// Newton steps that are kept only while they shrink `|p(x)|`.
pub fn polish(c: &[f64; 4], mut x: f64) -> f64 {
    let mut fx = eval_cubic(c, x).abs();
    for _ in 0..POLISH_STEPS {
        if fx == 0.0 {
            break;
        }
        let d = eval_derivative(c, x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - eval_cubic(c, x) / d;
        let fnext = eval_cubic(c, next).abs();
        if !(fnext < fx) {
            break;
        }
        x = next;
        fx = fnext;
    }
    x
}

/// Real roots of `c[0] + c[1] x + c[2] x^2 + c[3] x^3`, ascending, with
/// repeated roots reported once. Returns an empty list for the zero
/// polynomial.
pub fn real_roots(c: [f64; 4]) -> Vec<f64> {
    let mut roots = if c[3] != 0.0 {
        monic_cubic(c[2] / c[3], c[1] / c[3], c[0] / c[3])
    } else if c[2] != 0.0 {
        quadratic(c[2], c[1], c[0])
    } else if c[1] != 0.0 {
        vec![-c[0] / c[1]]
    } else {
        Vec::new()
    };
    for r in roots.iter_mut() {
        *r = polish(&c, *r);
    }
    roots.retain(|r| r.is_finite());
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    roots
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-0.5 * b / a];
    }
    // Avoids cancellation between -b and sqrt(disc).
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Roots of `x^3 + a x^2 + b x + c`.
fn monic_cubic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let q = a * a - 3.0 * b;
    let r = 2.0 * a * a * a - 9.0 * a * b + 27.0 * c;
    let big_q = q / 9.0;
    let big_r = r / 54.0;
    let q3 = big_q * big_q * big_q;
    let r2 = big_r * big_r;
    let shift = a / 3.0;

    if big_r == 0.0 && big_q == 0.0 {
        return vec![-shift];
    }
    if r2 == q3 {
        // double root
        let sq = big_q.sqrt();
        return if big_r > 0.0 {
            vec![-2.0 * sq - shift, sq - shift]
        } else {
            vec![-sq - shift, 2.0 * sq - shift]
        };
    }
    if r2 < q3 {
        let ratio = (big_r / q3.sqrt()).clamp(-1.0, 1.0);
        let theta = ratio.acos();
        let norm = -2.0 * big_q.sqrt();
        return vec![
            norm * (theta / 3.0).cos() - shift,
            norm * ((theta + 2.0 * PI) / 3.0).cos() - shift,
            norm * ((theta - 2.0 * PI) / 3.0).cos() - shift,
        ];
    }
    let big_a = -big_r.signum() * (big_r.abs() + (r2 - q3).sqrt()).cbrt();
    let big_b = if big_a == 0.0 { 0.0 } else { big_q / big_a };
    vec![big_a + big_b - shift]
}
