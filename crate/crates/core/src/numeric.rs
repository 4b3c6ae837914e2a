//! Small numerical helpers shared across modules.

use std::f64::consts::{PI, TAU};

/// Wraps an angle to (−π, π]. An input of exactly −π maps to +π.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Global minimum of a periodic function: dense scan with `samples` points,
/// then golden-section refinement around the best sample until the bracket
/// is narrower than `tol`. Returns `(argmin in [0, period), min value)`.
pub fn minimize_periodic(f: impl Fn(f64) -> f64, period: f64, samples: usize, tol: f64) -> (f64, f64) {
    let step = period / samples as f64;
    let (mut best_t, mut best_v) = (0.0, f64::INFINITY);
    for k in 0..samples {
        let t = k as f64 * step;
        let v = f(t);
        if v < best_v {
            best_t = t;
            best_v = v;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_t - step, best_t + step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v <= best_v {
        (t.rem_euclid(period), v)
    } else {
        (best_t, best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_ties_toward_positive_pi() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(3.0 * PI), PI);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(TAU + 0.25) - 0.25).abs() < 1e-15);
        for k in -20..20 {
            let a = wrap_angle(k as f64 * 0.77);
            assert!(a > -PI && a <= PI);
        }
    }

    #[test]
    fn periodic_minimum() {
        let (t, v) = minimize_periodic(|t| (t - 2.0).cos() * -1.0, TAU, 64, 1e-10);
        assert!((t - 2.0).abs() < 1e-6, "{t}");
        assert!((v + 1.0).abs() < 1e-12);
    }
}
