#![allow(dead_code)]

use cauchy_qam::{FamilySpec, Generator, Interval};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// The built-in generators used across suites, each with a moderate window
/// inside its natural domain.
pub fn generators() -> Vec<(Generator, Interval)> {
    vec![
        (Generator::resolve("identity", None).unwrap(), iv(-1.0, 1.0)),
        (Generator::resolve("ln", None).unwrap(), iv(0.4, 2.5)),
        (Generator::resolve("power:2", None).unwrap(), iv(0.3, 1.4)),
        (Generator::resolve("power:-1", None).unwrap(), iv(0.5, 2.5)),
    ]
}

pub fn coeffs(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]
}

/// Coefficient pair whose non-constant parts are well separated: each
/// leading coefficient has magnitude at least 0.1 and the 2×2 block is far
/// from singular.
pub fn independent_coeffs(rng: &mut ChaCha8Rng) -> ([f64; 3], [f64; 3]) {
    loop {
        let (p, q) = (coeffs(rng), coeffs(rng));
        let det = p[1] * q[2] - p[2] * q[1];
        let lead = |c: &[f64; 3]| c[1].abs().max(c[2].abs());
        if det.abs() >= 0.5 && lead(&p) >= 0.1 && lead(&q) >= 0.1 {
            return (p, q);
        }
    }
}

/// `case` is 0, 1, 2 for quadratic, exponential, trigonometric.
pub fn typed_spec(case: usize, mu: f64, p: [f64; 3], q: [f64; 3]) -> FamilySpec {
    match case {
        0 => FamilySpec::quadratic(p, q),
        1 => FamilySpec::exponential(mu, p, q),
        _ => FamilySpec::trigonometric(mu, p, q),
    }
}

pub const FREE_MEMBERS: [&str; 5] = ["sin(x) + x", "x^3 + 2*x", "exp(x/2)", "cosh(x) + x", "x/(1 + x^2) + 3*x"];

/// `max |a − b| / max |b|`, or the absolute gap when `b` is zero.
pub fn rel_gap(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}
