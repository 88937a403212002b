//! Exact solution families and the bounded-interval counterexample.
//!
//! Every typed solution is `(φ, ψ) = (P∘H, Q∘H)` where `P` and `Q` are
//! combinations of one of three bases in `u = H(x)`:
//!
//! | case          | basis                          |
//! |---------------|--------------------------------|
//! | quadratic     | `1, u, u²`                     |
//! | exponential   | `1, e^{μu}, e^{-μu}`           |
//! | trigonometric | `1, sin(μu), cos(μu)`          |
//!
//! The dependent case instead ties `φ` and `ψ` by `c₁φ + c₂ψ + c₃ = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, EvalError};
use crate::funcmodel::{Func1D, Interval, Provenance, RealFn};
use crate::qam::Generator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    Dependent,
    Quadratic,
    Exponential,
    Trigonometric,
}

/// One of the three three-function bases, already carrying `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    Polynomial,
    Exponential(f64),
    Trigonometric(f64),
}

impl Basis {
    pub fn for_case(case: Case, mu: Option<f64>) -> Option<Basis> {
        match (case, mu) {
            (Case::Quadratic, _) => Some(Basis::Polynomial),
            (Case::Exponential, Some(mu)) => Some(Basis::Exponential(mu)),
            (Case::Trigonometric, Some(mu)) => Some(Basis::Trigonometric(mu)),
            _ => None,
        }
    }

    /// The `order`-th derivative (0..=3) of each basis function at `u`.
    pub fn eval(&self, order: usize, u: f64) -> [f64; 3] {
        match *self {
            Basis::Polynomial => match order {
                0 => [1.0, u, u * u],
                1 => [0.0, 1.0, 2.0 * u],
                2 => [0.0, 0.0, 2.0],
                _ => [0.0; 3],
            },
            Basis::Exponential(mu) => {
                let (ep, em) = ((mu * u).exp(), (-mu * u).exp());
                let k = mu.powi(order as i32);
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                let c = if order == 0 { 1.0 } else { 0.0 };
                [c, k * ep, sign * k * em]
            }
            Basis::Trigonometric(mu) => {
                let (s, c) = (mu * u).sin_cos();
                let k = mu.powi(order as i32);
                let one = if order == 0 { 1.0 } else { 0.0 };
                match order % 4 {
                    0 => [one, k * s, k * c],
                    1 => [one, k * c, -k * s],
                    2 => [one, -k * s, -k * c],
                    _ => [one, -k * c, k * s],
                }
            }
        }
    }

    /// `Σ cᵢ bᵢ⁽ᵒʳᵈᵉʳ⁾(u)`.
    pub fn combine(&self, coeffs: &[f64; 3], order: usize, u: f64) -> f64 {
        let b = self.eval(order, u);
        coeffs[0] * b[0] + coeffs[1] * b[1] + coeffs[2] * b[2]
    }
}

/// Case, coefficients and `μ` describing one exact solution pair.
///
/// For the dependent case `free` holds the expression of the unconstrained
/// member of the pair (ψ when `c₁ ≠ 0`, otherwise φ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilySpec {
    pub case: Case,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default)]
    pub coeffs_phi: [f64; 3],
    #[serde(default)]
    pub coeffs_psi: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free: Option<String>,
}

impl FamilySpec {
    pub fn quadratic(coeffs_phi: [f64; 3], coeffs_psi: [f64; 3]) -> FamilySpec {
        FamilySpec {
            case: Case::Quadratic,
            mu: None,
            coeffs_phi,
            coeffs_psi,
            dependence: None,
            free: None,
        }
    }

    pub fn exponential(mu: f64, coeffs_phi: [f64; 3], coeffs_psi: [f64; 3]) -> FamilySpec {
        FamilySpec {
            case: Case::Exponential,
            mu: Some(mu),
            ..FamilySpec::quadratic(coeffs_phi, coeffs_psi)
        }
    }

    pub fn trigonometric(mu: f64, coeffs_phi: [f64; 3], coeffs_psi: [f64; 3]) -> FamilySpec {
        FamilySpec {
            case: Case::Trigonometric,
            mu: Some(mu),
            ..FamilySpec::quadratic(coeffs_phi, coeffs_psi)
        }
    }

    /// `c₁φ + c₂ψ + c₃ = 0` with the free member given by `free`.
    pub fn dependent(c: [f64; 3], free: &str) -> FamilySpec {
        FamilySpec {
            case: Case::Dependent,
            mu: None,
            coeffs_phi: [0.0; 3],
            coeffs_psi: [0.0; 3],
            dependence: Some(c),
            free: Some(free.to_string()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        let finite = |v: &[f64; 3]| v.iter().all(|c| c.is_finite());
        if !finite(&self.coeffs_phi) || !finite(&self.coeffs_psi) {
            return bad("coefficients must be finite");
        }
        match self.case {
            Case::Dependent => {
                if self.mu.is_some() {
                    return bad("mu is only meaningful for exponential and trigonometric cases");
                }
                let Some(c) = self.dependence else {
                    return bad("dependent case needs dependence constants");
                };
                if !finite(&c) {
                    return bad("dependence constants must be finite");
                }
                if c[0] == 0.0 && c[1] == 0.0 {
                    return bad("c1 and c2 cannot both vanish");
                }
                if self.free.is_none() {
                    return bad("dependent case needs a free expression");
                }
            }
            Case::Quadratic => {
                if self.mu.is_some() {
                    return bad("quadratic case takes no mu");
                }
                if self.dependence.is_some() {
                    return bad("dependence constants belong to the dependent case");
                }
            }
            Case::Exponential | Case::Trigonometric => {
                match self.mu {
                    Some(mu) if mu.is_finite() && mu != 0.0 => {}
                    _ => return bad("mu must be finite and non-zero"),
                }
                if self.dependence.is_some() {
                    return bad("dependence constants belong to the dependent case");
                }
            }
        }
        Ok(())
    }

    /// Canonical form with `μ > 0`. Exponential: `e^{±μu}` swap places.
    /// Trigonometric: `sin(-μu) = -sin(μu)`, cosine is even.
    pub fn normalized(&self) -> FamilySpec {
        let mut out = self.clone();
        if let Some(mu) = self.mu {
            if mu < 0.0 {
                out.mu = Some(-mu);
                for c in [&mut out.coeffs_phi, &mut out.coeffs_psi] {
                    match self.case {
                        Case::Exponential => c.swap(1, 2),
                        Case::Trigonometric => c[1] = -c[1],
                        _ => {}
                    }
                }
            }
        }
        out
    }

    pub fn basis(&self) -> Option<Basis> {
        Basis::for_case(self.case, self.mu)
    }
}

/// An exact solution pair on the generator's domain.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    pub phi: Func1D,
    pub psi: Func1D,
    pub gen: Generator,
    pub spec: FamilySpec,
}

/// Builds `(φ, ψ)` for `spec` over `gen`, with derivatives by the chain rule.
pub fn build_pair(spec: &FamilySpec, gen: &Generator) -> Result<SolutionPair> {
    spec.validate()?;
    let spec = spec.normalized();
    let (phi, psi) = match spec.basis() {
        Some(basis) => (
            compose(basis, spec.coeffs_phi, gen),
            compose(basis, spec.coeffs_psi, gen),
        ),
        None => dependent_pair(&spec, gen)?,
    };
    Ok(SolutionPair {
        phi,
        psi,
        gen: gen.clone(),
        spec,
    })
}

/// `P∘H` with `φ' = P'(H)H'` and `φ'' = P''(H)H'² + P'(H)H''`.
fn compose(basis: Basis, coeffs: [f64; 3], gen: &Generator) -> Func1D {
    let h = gen.func().clone();
    let (h0, h1, h2) = (h.clone(), h.clone(), h.clone());
    let value: RealFn = Arc::new(move |x| Ok(basis.combine(&coeffs, 0, h0.value(x)?)));
    let deriv1: RealFn = Arc::new(move |x| {
        let u = h1.value(x)?;
        Ok(basis.combine(&coeffs, 1, u) * h1.deriv1(x)?)
    });
    let deriv2: RealFn = Arc::new(move |x| {
        let u = h2.value(x)?;
        let d1 = h2.deriv1(x)?;
        let d2 = h2.deriv2(x).unwrap_or(Ok(f64::NAN))?;
        let v = basis.combine(&coeffs, 2, u) * d1 * d1 + basis.combine(&coeffs, 1, u) * d2;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { op: "chain rule" })
        }
    });
    let mut f = Func1D::new(value, deriv1, *gen.domain(), Provenance::Family);
    if h.max_order() >= 2 {
        f = f.with_higher(deriv2);
    }
    f
}

fn dependent_pair(spec: &FamilySpec, gen: &Generator) -> Result<(Func1D, Func1D)> {
    let [c1, c2, c3] = spec.dependence.expect("validated");
    let free_src = spec.free.as_deref().expect("validated");
    let free = Func1D::from_expr(expr::parse(free_src)?, *gen.domain());
    // the determined member is an affine image of the free one
    let affine = |src: Func1D, scale: f64, shift: f64| -> Func1D {
        let (a, b, c) = (src.clone(), src.clone(), src.clone());
        Func1D::new(
            Arc::new(move |x| Ok(scale * a.value(x)? + shift)),
            Arc::new(move |x| Ok(scale * b.deriv1(x)?)),
            *src.domain(),
            Provenance::Family,
        )
        .with_higher(Arc::new(move |x| {
            Ok(scale * c.deriv2(x).unwrap_or(Ok(f64::NAN))?)
        }))
    };
    if c1 != 0.0 {
        let phi = affine(free.clone(), -c2 / c1, -c3 / c1);
        Ok((phi, free))
    } else {
        let psi = affine(free.clone(), -c1 / c2, -c3 / c2);
        Ok((free, psi))
    }
}

/// The piecewise pair on `(0, 1)` whose derivative supports are disjoint:
/// `F` is flat up to `4/5` and `G` is flat from `2/5` on.
#[derive(Debug, Clone)]
pub struct CounterexamplePair {
    pub f: Func1D,
    pub g: Func1D,
    pub c1: f64,
    pub c2: f64,
}

pub const COUNTEREXAMPLE_F_KNOT: f64 = 0.8;
pub const COUNTEREXAMPLE_G_KNOT: f64 = 0.4;

pub fn counterexample_pair(c1: f64, c2: f64) -> CounterexamplePair {
    let unit = Interval::new(0.0, 1.0).expect("unit interval");
    let fk = COUNTEREXAMPLE_F_KNOT;
    let gk = COUNTEREXAMPLE_G_KNOT;
    let f = Func1D::new(
        Arc::new(move |x| Ok(if x <= fk { c1 } else { (x - fk).powi(2) + c1 })),
        Arc::new(move |x| Ok(if x <= fk { 0.0 } else { 2.0 * (x - fk) })),
        unit,
        Provenance::Family,
    )
    .with_higher(Arc::new(move |x| Ok(if x <= fk { 0.0 } else { 2.0 })));
    let g = Func1D::new(
        Arc::new(move |x| Ok(if x < gk { (x - gk).powi(2) + c2 } else { c2 })),
        Arc::new(move |x| Ok(if x < gk { 2.0 * (x - gk) } else { 0.0 })),
        unit,
        Provenance::Family,
    )
    .with_higher(Arc::new(move |x| Ok(if x < gk { 2.0 } else { 0.0 })));
    CounterexamplePair { f, g, c1, c2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn quadratic_identity_pair() {
        let gen = Generator::identity(Interval::real_line());
        let pair = build_pair(&FamilySpec::quadratic([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]), &gen).unwrap();
        for x in [-3.0, 0.5, 2.0] {
            assert_eq!(pair.phi.value(x).unwrap(), x * x);
            assert_eq!(pair.psi.value(x).unwrap(), x);
            assert_eq!(pair.phi.deriv1(x).unwrap(), 2.0 * x);
        }
    }

    #[test]
    fn exponential_over_ln_is_power_pair() {
        let gen = Generator::ln(Interval::positive()).unwrap();
        let pair = build_pair(&FamilySpec::exponential(2.0, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), &gen).unwrap();
        for x in [0.3, 1.0, 4.5] {
            assert!(close(pair.phi.value(x).unwrap(), x * x, 1e-14));
            assert!(close(pair.psi.value(x).unwrap(), x.powi(-2), 1e-14));
            assert!(close(pair.phi.deriv1(x).unwrap(), 2.0 * x, 1e-14));
            assert!(close(pair.psi.deriv1(x).unwrap(), -2.0 * x.powi(-3), 1e-14));
            assert!(close(pair.phi.deriv2(x).unwrap().unwrap(), 2.0, 1e-13));
        }
    }

    #[test]
    fn basis_derivatives_match_differences() {
        let h = 1e-5;
        for basis in [Basis::Polynomial, Basis::Exponential(1.3), Basis::Trigonometric(2.1)] {
            for order in 0..3 {
                for u in [-0.7, 0.2, 1.1] {
                    let hi = basis.eval(order, u + h);
                    let lo = basis.eval(order, u - h);
                    let exact = basis.eval(order + 1, u);
                    for k in 0..3 {
                        let fd = (hi[k] - lo[k]) / (2.0 * h);
                        assert!(close(fd, exact[k], 1e-8), "{basis:?} order {order} k {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn mu_normalization_keeps_functions() {
        let gen = Generator::identity(Interval::real_line());
        for spec in [
            FamilySpec::exponential(-1.5, [1.0, 2.0, -0.5], [0.3, -1.0, 0.7]),
            FamilySpec::trigonometric(-0.8, [1.0, 2.0, -0.5], [0.3, -1.0, 0.7]),
        ] {
            let raw = spec.clone();
            let pair = build_pair(&spec, &gen).unwrap();
            assert!(pair.spec.mu.unwrap() > 0.0);
            let basis = Basis::for_case(raw.case, raw.mu).unwrap();
            for x in [-1.0, 0.0, 0.4, 2.0] {
                let direct = basis.combine(&raw.coeffs_phi, 0, x);
                assert!(close(pair.phi.value(x).unwrap(), direct, 1e-14));
                let direct = basis.combine(&raw.coeffs_psi, 1, x);
                assert!(close(pair.psi.deriv1(x).unwrap(), direct, 1e-14));
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let gen = Generator::identity(Interval::real_line());
        let mut s = FamilySpec::exponential(0.0, [0.0; 3], [0.0; 3]);
        assert!(build_pair(&s, &gen).is_err());
        s.mu = None;
        assert!(build_pair(&s, &gen).is_err());
        let s = FamilySpec::dependent([0.0, 0.0, 1.0], "x");
        assert!(build_pair(&s, &gen).is_err());
        let mut s = FamilySpec::dependent([1.0, 0.0, 1.0], "x");
        s.free = None;
        assert!(build_pair(&s, &gen).is_err());
        let mut s = FamilySpec::quadratic([0.0; 3], [0.0; 3]);
        s.mu = Some(1.0);
        assert!(build_pair(&s, &gen).is_err());
        let s = FamilySpec::dependent([1.0, 2.0, 0.0], "2y");
        assert!(matches!(build_pair(&s, &gen), Err(Error::Parse(_))));
    }

    #[test]
    fn dependent_pair_satisfies_relation() {
        let gen = Generator::identity(Interval::real_line());
        for c in [[2.0, -1.0, 3.0], [0.0, 4.0, -1.0]] {
            let pair = build_pair(&FamilySpec::dependent(c, "sin(x) + x^3"), &gen).unwrap();
            for x in [-1.0, 0.3, 2.0] {
                let r = c[0] * pair.phi.value(x).unwrap() + c[1] * pair.psi.value(x).unwrap() + c[2];
                assert!(r.abs() < 1e-12);
                let r = c[0] * pair.phi.deriv1(x).unwrap() + c[1] * pair.psi.deriv1(x).unwrap();
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spec_json() {
        let s = FamilySpec::trigonometric(1.5, [1.0, 0.0, 2.0], [0.0, 1.0, 0.0]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(
            j,
            r#"{"case":"Trigonometric","mu":1.5,"coeffsPhi":[1.0,0.0,2.0],"coeffsPsi":[0.0,1.0,0.0]}"#
        );
        let back: FamilySpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let d: FamilySpec =
            serde_json::from_str(r#"{"case":"Dependent","dependence":[1,2,3],"free":"x"}"#).unwrap();
        assert_eq!(d.dependence, Some([1.0, 2.0, 3.0]));
    }

    #[test]
    fn counterexample_values() {
        let ce = counterexample_pair(0.0, 0.0);
        assert!(close(ce.f.value(0.9).unwrap(), 0.01, 1e-15));
        assert!(close(ce.g.deriv1(0.3).unwrap(), -0.2, 1e-15));
        // finite-difference confirmation of g(0.3)
        let h = 1e-6;
        let fd = (ce.g.value(0.3 + h).unwrap() - ce.g.value(0.3 - h).unwrap()) / (2.0 * h);
        assert!((fd + 0.2).abs() < 1e-8);
        // junctions: one-sided slopes vanish and match
        for (func, knot) in [(&ce.f, 0.8), (&ce.g, 0.4)] {
            let left = func.deriv1(knot - 1e-12).unwrap();
            let right = func.deriv1(knot + 1e-12).unwrap();
            assert!(left.abs() < 1e-11 && right.abs() < 1e-11);
        }
        let ce = counterexample_pair(3.0, -1.0);
        assert_eq!(ce.f.value(0.5).unwrap(), 3.0);
        assert_eq!(ce.g.value(0.5).unwrap(), -1.0);
    }
}
