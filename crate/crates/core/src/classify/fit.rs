use nalgebra::{DMatrix, DVector};

use crate::families::Basis;

/// Least-squares coefficients of `ys ≈ Σ cₖ bₖ(u)` over the nodes `us`.
///
/// Columns are scaled to unit max-norm before the SVD solve so that bases
/// with very different magnitudes (e.g. `e^{±μu}` on a wide range) stay
/// well conditioned.
pub fn fit_basis(basis: &Basis, us: &[f64], ys: &[f64]) -> [f64; 3] {
    let n = us.len();
    let mut m = DMatrix::<f64>::zeros(n, 3);
    for (i, &u) in us.iter().enumerate() {
        let b = basis.eval(0, u);
        for k in 0..3 {
            m[(i, k)] = b[k];
        }
    }
    let mut scale = [1.0; 3];
    for k in 0..3 {
        let s = m.column(k).amax();
        if s > 0.0 {
            scale[k] = s;
            m.column_mut(k).scale_mut(1.0 / s);
        }
    }
    let rhs = DVector::from_column_slice(ys);
    let svd = m.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(3));
    [sol[0] / scale[0], sol[1] / scale[1], sol[2] / scale[2]]
}

/// `max |y − ŷ| / max |y|` for a fitted combination.
pub fn relative_deviation(basis: &Basis, coeffs: &[f64; 3], us: &[f64], ys: &[f64]) -> f64 {
    let peak = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
    let dev = us
        .iter()
        .zip(ys)
        .fold(0.0_f64, |m, (&u, &y)| m.max((y - basis.combine(coeffs, 0, u)).abs()));
    if peak == 0.0 {
        dev
    } else {
        dev / peak
    }
}

/// Sum of squared residuals after fitting, normalised by the centred energy
/// of `ys`. Used as the objective when refining `μ`.
pub fn normalised_misfit(basis: &Basis, us: &[f64], ys: &[f64]) -> f64 {
    let c = fit_basis(basis, us, ys);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let energy: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss: f64 = us
        .iter()
        .zip(ys)
        .map(|(&u, &y)| (y - basis.combine(&c, 0, u)).powi(2))
        .sum();
    if energy > 0.0 {
        ss / energy
    } else {
        ss
    }
}

/// Golden-section minimisation of `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Ordinary linear regression `y ≈ a + k·x`; returns `(a, k, r²)`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let k = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - k * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - a - k * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (a, k, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial() {
        let us: Vec<f64> = (0..50).map(|i| -1.0 + i as f64 * 0.04).collect();
        let ys: Vec<f64> = us.iter().map(|u| 2.0 - u + 0.5 * u * u).collect();
        let c = fit_basis(&Basis::Polynomial, &us, &ys);
        for (got, want) in c.iter().zip([2.0, -1.0, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(relative_deviation(&Basis::Polynomial, &c, &us, &ys) < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, _) = golden_min(|x| (x - 1.3).powi(2), 0.0, 3.0, 200);
        assert!((x - 1.3).abs() < 1e-7);
    }

    #[test]
    fn regression_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (a, k, r2) = linear_regression(&xs, &ys);
        assert!((a - 1.0).abs() < 1e-14 && (k - 2.0).abs() < 1e-14);
        assert_eq!(r2, 1.0);
        let (a, k, r2) = linear_regression(&xs, &[4.0; 4]);
        assert_eq!((a, k, r2), (4.0, 0.0, 1.0));
    }
}
