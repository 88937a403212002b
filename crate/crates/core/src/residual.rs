//! Residual of `[φ(y) − φ(x)] ψ'(h) = [ψ(y) − ψ(x)] φ'(h)`, grid
//! verification, Cauchy mean-value points and the reduction to linear means.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcmodel::{Func1D, Interval, Provenance, SamplePlan};
use crate::qam::{Generator, QuasiArithmeticMean};

/// Default number of subintervals scanned by [`locate_mean_points`].
pub const DEFAULT_ROOT_GRID: usize = 2048;

/// Both products of the equation evaluated at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualTerms {
    pub mean: f64,
    /// `[φ(y) − φ(x)] ψ'(h)`
    pub left: f64,
    /// `[ψ(y) − ψ(x)] φ'(h)`
    pub right: f64,
}

impl ResidualTerms {
    pub fn residual(&self) -> f64 {
        self.left - self.right
    }

    pub fn scaled(&self) -> f64 {
        self.residual().abs() / (1.0 + self.left.abs() + self.right.abs())
    }
}

pub fn residual_terms(
    phi: &Func1D,
    psi: &Func1D,
    q: &QuasiArithmeticMean,
    x: f64,
    y: f64,
) -> Result<ResidualTerms> {
    let h = q.mean(x, y)?;
    if x == y {
        return Ok(ResidualTerms {
            mean: h,
            left: 0.0,
            right: 0.0,
        });
    }
    let dphi = phi.value(y)? - phi.value(x)?;
    let dpsi = psi.value(y)? - psi.value(x)?;
    Ok(ResidualTerms {
        mean: h,
        left: dphi * psi.deriv1(h)?,
        right: dpsi * phi.deriv1(h)?,
    })
}

/// `R = [φ(y) − φ(x)] ψ'(h) − [ψ(y) − ψ(x)] φ'(h)` with `h` the mean of
/// `(x, y)`.
pub fn residual(phi: &Func1D, psi: &Func1D, q: &QuasiArithmeticMean, x: f64, y: f64) -> Result<f64> {
    Ok(residual_terms(phi, psi, q, x, y)?.residual())
}

/// `|R| / (1 + |left| + |right|)`.
pub fn scaled_residual(phi: &Func1D, psi: &Func1D, q: &QuasiArithmeticMean, x: f64, y: f64) -> Result<f64> {
    Ok(residual_terms(phi, psi, q, x, y)?.scaled())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualReport {
    pub max_scaled: f64,
    pub argmax_pair: (f64, f64),
    pub count: usize,
    pub tolerance: f64,
    pub pass: bool,
    /// Evaluation failure at `argmax_pair`, if any pair could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Maximum scaled residual over every ordered pair of `plan`.
pub fn verify_grid(
    phi: &Func1D,
    psi: &Func1D,
    q: &QuasiArithmeticMean,
    plan: &SamplePlan,
    tol: f64,
) -> Result<ResidualReport> {
    let pairs = plan.pairs()?;
    // (score, index, error); evaluation errors rank above any finite score
    let worst = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(x, y))| match scaled_residual(phi, psi, q, x, y) {
            Ok(s) if s.is_nan() => (f64::INFINITY, i, Some("NaN residual".to_string())),
            Ok(s) => (s, i, None),
            Err(e) => (f64::INFINITY, i, Some(e.to_string())),
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, None),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let (max_scaled, idx, error) = worst;
    let argmax_pair = pairs.get(idx).copied().unwrap_or((f64::NAN, f64::NAN));
    let max_scaled = max_scaled.max(0.0);
    Ok(ResidualReport {
        max_scaled,
        argmax_pair,
        count: pairs.len(),
        tolerance: tol,
        pass: error.is_none() && max_scaled <= tol,
        error,
    })
}

pub const CSV_HEADER: &str = "x,y,h,residual,scaled_residual";

fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// Writes one CSV row per ordered pair of `plan`, 17 significant digits.
/// Pairs that cannot be evaluated get `NaN` in the computed columns.
pub fn write_residual_csv<W: Write + ?Sized>(
    out: &mut W,
    phi: &Func1D,
    psi: &Func1D,
    q: &QuasiArithmeticMean,
    plan: &SamplePlan,
) -> Result<usize> {
    let pairs = plan.pairs()?;
    let rows: Vec<String> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let (h, r, s) = match residual_terms(phi, psi, q, x, y) {
                Ok(t) => (t.mean, t.residual(), t.scaled()),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            format!("{},{},{},{},{}", sig17(x), sig17(y), sig17(h), sig17(r), sig17(s))
        })
        .collect();
    writeln!(out, "{CSV_HEADER}")?;
    for row in &rows {
        writeln!(out, "{row}")?;
    }
    Ok(rows.len())
}

/// Outcome of a mean-value point search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "points")]
pub enum MeanPoints {
    Roots(Vec<f64>),
    /// `r(c)` vanishes at every scanned point (e.g. `φ = ψ`).
    IdenticallyZero,
}

/// All `c ∈ (a, b)` with `[φ(b) − φ(a)] ψ'(c) = [ψ(b) − ψ(a)] φ'(c)` that show
/// up as sign changes (or exact zeros) on `grid` subintervals, refined by
/// bisection down to adjacent floats.
pub fn locate_mean_points(phi: &Func1D, psi: &Func1D, a: f64, b: f64, grid: usize) -> Result<MeanPoints> {
    if !(a < b) {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    let grid = grid.max(1);
    let dphi = phi.value(b)? - phi.value(a)?;
    let dpsi = psi.value(b)? - psi.value(a)?;
    let r = |c: f64| -> Result<(f64, f64)> {
        let (p, q) = (psi.deriv1(c)?, phi.deriv1(c)?);
        Ok((dphi * p - dpsi * q, dphi.abs() * p.abs() + dpsi.abs() * q.abs()))
    };
    let xs: Vec<f64> = (1..grid).map(|i| a + (b - a) * i as f64 / grid as f64).collect();
    // endpoints may sit on a domain boundary; nudge inside
    let eps = 1e-12 * (b - a);
    let mut nodes = Vec::with_capacity(grid + 1);
    nodes.push(a + eps);
    nodes.extend(xs);
    nodes.push(b - eps);
    let vals: Vec<(f64, f64)> = nodes.iter().map(|&c| r(c)).collect::<Result<_>>()?;

    let scale = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    if vals.iter().all(|v| v.0.abs() <= 1e-13 * scale) {
        return Ok(MeanPoints::IdenticallyZero);
    }

    let mut roots = Vec::new();
    for i in 0..nodes.len() - 1 {
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let (r0, r1) = (vals[i].0, vals[i + 1].0);
        if r0 == 0.0 {
            if i > 0 {
                roots.push(x0);
            }
            continue;
        }
        if r0 * r1 < 0.0 {
            let (mut lo, mut hi, mut rlo) = (x0, x1, r0);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let rm = r(mid)?.0;
                if rm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (rm < 0.0) == (rlo < 0.0) {
                    lo = mid;
                    rlo = rm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    if roots.is_empty() {
        return Err(Error::NoSignChange { a, b });
    }
    Ok(MeanPoints::Roots(roots))
}

/// `(F, G) = (φ∘H⁻¹, ψ∘H⁻¹)` on `J = H(E)`.
#[derive(Debug, Clone)]
pub struct ReducedPair {
    pub phi: Func1D,
    pub psi: Func1D,
    pub range: Interval,
}

fn reduce_one(f: &Func1D, gen: &Generator) -> Func1D {
    let range = *gen.range();
    let inv_err = |e: Error| crate::expr::EvalError::Domain {
        op: "inverse",
        arg: match e {
            Error::OutsideRange { u, .. } | Error::BracketFailure { u } => u,
            _ => f64::NAN,
        },
    };
    let (f0, g0) = (f.clone(), gen.clone());
    let (f1, g1) = (f.clone(), gen.clone());
    let value = Arc::new(move |u: f64| {
        let x = g0.inverse(u).map_err(inv_err)?;
        f0.value(x)
    });
    let deriv1 = Arc::new(move |u: f64| {
        let x = g1.inverse(u).map_err(inv_err)?;
        Ok(f1.deriv1(x)? / g1.deriv1(x)?)
    });
    let mut out = Func1D::new(value, deriv1, range, Provenance::Composed);
    if f.max_order() >= 2 && gen.func().max_order() >= 2 {
        let (f2, g2) = (f.clone(), gen.clone());
        // F'' = (φ'' H' − φ' H'') / H'^3
        out = out.with_higher(Arc::new(move |u: f64| {
            let x = g2.inverse(u).map_err(inv_err)?;
            let h1 = g2.deriv1(x)?;
            let h2 = g2.func().deriv2(x).expect("order checked")?;
            let p1 = f2.deriv1(x)?;
            let p2 = f2.deriv2(x).expect("order checked")?;
            Ok((p2 * h1 - p1 * h2) / (h1 * h1 * h1))
        }));
    }
    out
}

/// Moves the pair to the linear-mean problem on `J`.
pub fn reduce(phi: &Func1D, psi: &Func1D, gen: &Generator) -> ReducedPair {
    ReducedPair {
        phi: reduce_one(phi, gen),
        psi: reduce_one(psi, gen),
        range: *gen.range(),
    }
}

/// Residual of the reduced equation `[F(b) − F(a)] G'(m) − [G(b) − G(a)] F'(m)`
/// at `m = αa + βb`.
pub fn reduced_residual(
    pair: &ReducedPair,
    alpha: f64,
    a: f64,
    b: f64,
) -> Result<ResidualTerms> {
    let m = alpha * a + (1.0 - alpha) * b;
    let dphi = pair.phi.value(b)? - pair.phi.value(a)?;
    let dpsi = pair.psi.value(b)? - pair.psi.value(a)?;
    Ok(ResidualTerms {
        mean: m,
        left: dphi * pair.psi.deriv1(m)?,
        right: dpsi * pair.phi.deriv1(m)?,
    })
}
