//! Open intervals, function handles with attached derivatives, and
//! deterministic sampling plans.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{EvalError, Expr};

/// Default fraction of a window trimmed from each side before sampling.
pub const DEFAULT_MARGIN: f64 = 1e-3;
/// Default length used to clamp infinite intervals for numerical sweeps.
pub const DEFAULT_SPAN: f64 = 20.0;

/// An open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn real_line() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn positive() -> Interval {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Strict membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// `other` lies inside the closure of `self`.
    pub fn covers(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Unbounded on exactly one side.
    pub fn is_semi_infinite(&self) -> bool {
        self.lo.is_finite() != self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Trims `margin * width` from both ends of a finite interval.
    pub fn shrink(&self, margin: f64) -> Interval {
        let d = margin * self.width();
        Interval {
            lo: self.lo + d,
            hi: self.hi - d,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Parses `"lo,hi"` where either side may be `inf`, `+inf` or `-inf`.
    pub fn parse(text: &str) -> Result<Interval> {
        let bad = || Error::InvalidInterval {
            lo: f64::NAN,
            hi: f64::NAN,
        };
        let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
        let endpoint = |s: &str| -> Result<f64> {
            match s.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                s => s.parse::<f64>().map_err(|_| bad()),
            }
        };
        Interval::new(endpoint(lo)?, endpoint(hi)?)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

fn endpoint_json<S: Serializer>(v: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(v)
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        struct End(f64);
        impl Serialize for End {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                endpoint_json(self.0, s)
            }
        }
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&End(self.lo))?;
        t.serialize_element(&End(self.hi))?;
        t.end()
    }
}

/// Finite sub-interval used for numerical sweeps over `iv`.
///
/// Finite intervals are returned unchanged, semi-infinite ones are cut to
/// length `span` from their finite end, and the real line becomes
/// `(-span/2, span/2)`.
pub fn finite_window(iv: &Interval, span: f64) -> Interval {
    assert!(span > 0.0, "span must be positive");
    match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => *iv,
        (true, false) => Interval {
            lo: iv.lo,
            hi: iv.lo + span,
        },
        (false, true) => Interval {
            lo: iv.hi - span,
            hi: iv.hi,
        },
        (false, false) => Interval {
            lo: -0.5 * span,
            hi: 0.5 * span,
        },
    }
}

/// A real function of one variable that can fail with an [`EvalError`].
pub type RealFn = Arc<dyn Fn(f64) -> Result<f64, EvalError> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Expression,
    Family,
    Samples,
    /// Built by composing other handles, e.g. `phi ∘ H⁻¹`.
    Composed,
}

/// Value plus exact derivatives on an open domain.
///
/// `derivs[0]` is the value and `derivs[1]` the first derivative; anything
/// past that is optional. Evaluating outside the domain is an error.
#[derive(Clone)]
pub struct Func1D {
    derivs: Vec<RealFn>,
    domain: Interval,
    provenance: Provenance,
    expr: Option<Expr>,
}

impl fmt::Debug for Func1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Func1D")
            .field("domain", &self.domain)
            .field("provenance", &self.provenance)
            .field("orders", &(self.derivs.len() - 1))
            .field("expr", &self.expr.as_ref().map(|e| e.to_string()))
            .finish()
    }
}

impl Func1D {
    pub fn new(value: RealFn, deriv1: RealFn, domain: Interval, provenance: Provenance) -> Func1D {
        Func1D {
            derivs: vec![value, deriv1],
            domain,
            provenance,
            expr: None,
        }
    }

    /// Appends the next higher derivative.
    pub fn with_higher(mut self, next: RealFn) -> Func1D {
        self.derivs.push(next);
        self
    }

    /// Expression-backed handle carrying symbolic derivatives up to order 3.
    pub fn from_expr(expr: Expr, domain: Interval) -> Func1D {
        let mut derivs: Vec<RealFn> = Vec::with_capacity(4);
        let mut cur = expr.clone();
        for order in 0..4 {
            let e = cur.clone();
            derivs.push(Arc::new(move |x| e.eval(x)));
            if order < 3 {
                cur = cur.differentiate();
            }
        }
        Func1D {
            derivs,
            domain,
            provenance: Provenance::Expression,
            expr: Some(expr),
        }
    }

    /// Parses `src` and wraps it as an expression-backed handle.
    pub fn parse(src: &str, domain: Interval) -> Result<Func1D> {
        Ok(Func1D::from_expr(crate::expr::parse(src)?, domain))
    }

    /// Sample-backed handle: piecewise local polynomial interpolation through
    /// up to six neighbouring nodes; the first derivative is the derivative of
    /// the same local polynomial.
    pub fn from_samples(xs: &[f64], ys: &[f64]) -> Result<Func1D> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidSamples("column lengths differ".into()));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidSamples("need at least two samples".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSamples("x must be strictly increasing".into()));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("non-finite sample".into()));
        }
        let table = Arc::new(SampleTable {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
        });
        let domain = Interval::new(xs[0], xs[xs.len() - 1])?;
        let t0 = table.clone();
        let t1 = table;
        Ok(Func1D {
            derivs: vec![
                Arc::new(move |x| Ok(t0.eval(x).0)),
                Arc::new(move |x| Ok(t1.eval(x).1)),
            ],
            domain,
            provenance: Provenance::Samples,
            expr: None,
        })
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    /// Highest derivative order carried.
    pub fn max_order(&self) -> usize {
        self.derivs.len() - 1
    }

    fn check(&self, x: f64) -> Result<(), EvalError> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(EvalError::OutsideDomain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            })
        }
    }

    pub fn value(&self, x: f64) -> Result<f64, EvalError> {
        self.check(x)?;
        (self.derivs[0])(x)
    }

    pub fn deriv1(&self, x: f64) -> Result<f64, EvalError> {
        self.check(x)?;
        (self.derivs[1])(x)
    }

    pub fn deriv2(&self, x: f64) -> Option<Result<f64, EvalError>> {
        self.derivative(2, x)
    }

    /// Derivative of order `k`, if carried.
    pub fn derivative(&self, k: usize, x: f64) -> Option<Result<f64, EvalError>> {
        let d = self.derivs.get(k)?;
        Some(self.check(x).and_then(|_| d(x)))
    }

    /// Same function on a smaller (or equal) domain.
    pub fn restrict(&self, domain: Interval) -> Func1D {
        Func1D {
            domain,
            ..self.clone()
        }
    }
}

struct SampleTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SampleTable {
    const NODES: usize = 6;

    /// Value and first derivative of the local interpolating polynomial.
    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        let m = Self::NODES.min(n);
        let k = self.xs.partition_point(|&xi| xi <= x).saturating_sub(1);
        let start = (k + 1).saturating_sub(m / 2).min(n - m);
        let xs = &self.xs[start..start + m];
        let ys = &self.ys[start..start + m];
        let mut value = 0.0;
        let mut slope = 0.0;
        for j in 0..m {
            let mut basis = 1.0;
            for i in 0..m {
                if i != j {
                    basis *= (x - xs[i]) / (xs[j] - xs[i]);
                }
            }
            let mut dbasis = 0.0;
            for i in 0..m {
                if i == j {
                    continue;
                }
                let mut term = 1.0 / (xs[j] - xs[i]);
                for l in 0..m {
                    if l != i && l != j {
                        term *= (x - xs[l]) / (xs[j] - xs[l]);
                    }
                }
                dbasis += term;
            }
            value += ys[j] * basis;
            slope += ys[j] * dbasis;
        }
        (value, slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// Arithmetic progression only.
    Uniform,
    /// Arithmetic progression plus `random_pairs` seeded random pairs.
    UniformPlusRandom,
}

/// Deterministic sampling recipe over a finite window.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub window: Interval,
    pub count: usize,
    pub mode: SampleMode,
    pub seed: u64,
    pub margin: f64,
    /// Extra random `(x, y)` pairs drawn in [`SampleMode::UniformPlusRandom`].
    pub random_pairs: usize,
}

impl SamplePlan {
    pub fn uniform(window: Interval, count: usize) -> SamplePlan {
        SamplePlan {
            window,
            count,
            mode: SampleMode::Uniform,
            seed: 42,
            margin: DEFAULT_MARGIN,
            random_pairs: 0,
        }
    }

    pub fn with_random_pairs(mut self, n: usize, seed: u64) -> SamplePlan {
        self.mode = SampleMode::UniformPlusRandom;
        self.random_pairs = n;
        self.seed = seed;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> SamplePlan {
        self.margin = margin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.window.is_finite() {
            return Err(Error::InvalidPlan(format!("window {} is not finite", self.window)));
        }
        if self.count == 0 {
            return Err(Error::InvalidPlan("count must be positive".into()));
        }
        if !(self.margin > 0.0 && self.margin <= 0.25) {
            return Err(Error::InvalidPlan(format!(
                "margin {} outside (0, 1/4]",
                self.margin
            )));
        }
        Ok(())
    }

    /// The margined window the points are drawn from.
    pub fn inner(&self) -> Interval {
        self.window.shrink(self.margin)
    }

    /// `count` strictly increasing points spanning the margined window.
    pub fn sample(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let inner = self.inner();
        if self.count == 1 {
            return Ok(vec![inner.midpoint()]);
        }
        let last = (self.count - 1) as f64;
        let pts: Vec<f64> = (0..self.count)
            .map(|i| inner.lo + inner.width() * (i as f64) / last)
            .collect();
        if pts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPlan("window too narrow for the point count".into()));
        }
        Ok(pts)
    }

    /// Seeded random pairs `x < y` inside the margined window. Empty in
    /// uniform mode.
    pub fn random_pairs(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        if self.mode == SampleMode::Uniform {
            return Ok(Vec::new());
        }
        let inner = self.inner();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.random_pairs);
        while out.len() < self.random_pairs {
            let a = rng.gen_range(inner.lo..=inner.hi);
            let b = rng.gen_range(inner.lo..=inner.hi);
            if a != b {
                out.push((a.min(b), a.max(b)));
            }
        }
        Ok(out)
    }

    /// All ordered pairs `x < y` of the uniform points, followed by the
    /// random pairs.
    pub fn pairs(&self) -> Result<Vec<(f64, f64)>> {
        let pts = self.sample()?;
        let mut out = Vec::with_capacity(pts.len() * (pts.len().saturating_sub(1)) / 2);
        for (i, &x) in pts.iter().enumerate() {
            for &y in &pts[i + 1..] {
                out.push((x, y));
            }
        }
        out.extend(self.random_pairs()?);
        Ok(out)
    }
}
