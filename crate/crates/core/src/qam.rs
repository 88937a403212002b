//! Generators and quasi-arithmetic means `h(x, y) = H⁻¹(αH(x) + βH(y))`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{self, EvalError, Expr};
use crate::funcmodel::{finite_window, Func1D, Interval, DEFAULT_MARGIN, DEFAULT_SPAN};

/// Number of points in the monotonicity sweep.
const SWEEP_POINTS: usize = 1001;
/// Range endpoints beyond this magnitude are treated as infinite.
const RANGE_CUTOFF: f64 = 1e15;
const MAX_BISECTION: usize = 200;
const MAX_NEWTON: usize = 20;
// limits this close to zero are taken as exactly zero
const UNDERFLOW_LIMIT: f64 = 1e-250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

type Inverse = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Strictly monotone differentiable `H: E -> J`.
#[derive(Clone)]
pub struct Generator {
    name: String,
    h: Func1D,
    direction: Direction,
    range: Interval,
    analytic_inverse: Option<Inverse>,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("name", &self.name)
            .field("domain", self.h.domain())
            .field("range", &self.range)
            .field("direction", &self.direction)
            .field("analytic_inverse", &self.analytic_inverse.is_some())
            .finish()
    }
}

impl Generator {
    /// Builds a generator from an arbitrary expression, checking strict
    /// monotonicity on a sweep and estimating the range from endpoint limits.
    pub fn from_expr(h: Expr, domain: Interval) -> Result<Generator> {
        let name = h.to_string();
        let func = Func1D::from_expr(h, domain);
        let direction = sweep_direction(&func)?;
        let range = estimate_range(&func, direction)?;
        Ok(Generator {
            name,
            h: func,
            direction,
            range,
            analytic_inverse: None,
        })
    }

    pub fn parse(src: &str, domain: Interval) -> Result<Generator> {
        Generator::from_expr(expr::parse(src)?, domain)
    }

    /// `H(x) = x`.
    pub fn identity(domain: Interval) -> Generator {
        Generator::analytic("identity", "x", domain, domain, Direction::Increasing, Arc::new(|u| u))
    }

    /// `H(x) = ln x` on a subinterval of `(0, ∞)`.
    pub fn ln(domain: Interval) -> Result<Generator> {
        require_positive(&domain, "ln")?;
        let range = Interval::new(domain.lo().ln(), domain.hi().ln())?;
        Ok(Generator::analytic("ln", "ln(x)", domain, range, Direction::Increasing, Arc::new(f64::exp)))
    }

    /// `H(x) = e^x`.
    pub fn exp(domain: Interval) -> Result<Generator> {
        let range = Interval::new(domain.lo().exp(), domain.hi().exp())?;
        Ok(Generator::analytic("exp", "exp(x)", domain, range, Direction::Increasing, Arc::new(f64::ln)))
    }

    /// Power-mean generator `H(x) = x^p` on a subinterval of `(0, ∞)`, with
    /// the inverse `u^(1/p)` in closed form.
    pub fn power(p: f64, domain: Interval) -> Result<Generator> {
        if p == 0.0 || !p.is_finite() {
            return Err(Error::InvalidGenerator(format!("power exponent {p} must be finite and non-zero")));
        }
        require_positive(&domain, "power")?;
        let (a, b) = (domain.lo().powf(p), domain.hi().powf(p));
        let (direction, range) = if p > 0.0 {
            (Direction::Increasing, Interval::new(a, b)?)
        } else {
            (Direction::Decreasing, Interval::new(b, a)?)
        };
        let inv_p = 1.0 / p;
        Ok(Generator::analytic(
            &format!("power:{p}"),
            &format!("x^{}", Expr::Num(p)),
            domain,
            range,
            direction,
            Arc::new(move |u: f64| u.powf(inv_p)),
        ))
    }

    /// Resolves a built-in name (`identity`, `ln`, `exp`, `power:<p>`) or
    /// falls back to parsing `spec` as an expression. `domain` defaults to
    /// the generator's natural domain.
    pub fn resolve(spec: &str, domain: Option<Interval>) -> Result<Generator> {
        let spec = spec.trim();
        match spec {
            "identity" => Ok(Generator::identity(domain.unwrap_or_else(Interval::real_line))),
            "ln" => Generator::ln(domain.unwrap_or_else(Interval::positive)),
            "exp" => Generator::exp(domain.unwrap_or_else(Interval::real_line)),
            s if s.starts_with("power:") => {
                let p: f64 = s["power:".len()..]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(format!("bad power exponent in `{s}`")))?;
                Generator::power(p, domain.unwrap_or_else(Interval::positive))
            }
            s => Generator::parse(s, domain.unwrap_or_else(Interval::real_line)),
        }
    }

    fn analytic(
        name: &str,
        src: &str,
        domain: Interval,
        range: Interval,
        direction: Direction,
        inverse: Inverse,
    ) -> Generator {
        let h = expr::parse(src).expect("built-in generator expressions parse");
        Generator {
            name: name.to_string(),
            h: Func1D::from_expr(h, domain),
            direction,
            range,
            analytic_inverse: Some(inverse),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn func(&self) -> &Func1D {
        &self.h
    }

    pub fn domain(&self) -> &Interval {
        self.h.domain()
    }

    /// `J = H(E)`.
    pub fn range(&self) -> &Interval {
        &self.range
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.h.value(x)
    }

    pub fn deriv1(&self, x: f64) -> Result<f64, EvalError> {
        self.h.deriv1(x)
    }

    /// Image of a sub-window of `E` under `H`, as an increasing interval.
    pub fn image(&self, window: &Interval) -> Result<Interval> {
        let a = self.eval(window.lo())?;
        let b = self.eval(window.hi())?;
        Interval::new(a.min(b), a.max(b))
    }

    /// `H⁻¹(u)`. Without an analytic inverse the preimage is bracketed and
    /// then refined until the bracket collapses to adjacent floats.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !self.range.contains(u) {
            return Err(Error::OutsideRange {
                u,
                lo: self.range.lo(),
                hi: self.range.hi(),
            });
        }
        if let Some(inv) = &self.analytic_inverse {
            let x = inv(u);
            if !x.is_finite() {
                return Err(Error::BracketFailure { u });
            }
            return Ok(x);
        }
        self.numeric_inverse(u)
    }

    /// Signed mismatch `H(x) - u`, flipped for decreasing generators so that
    /// it always increases with `x`.
    fn mismatch(&self, x: f64, u: f64) -> Result<f64, EvalError> {
        let d = self.eval(x)? - u;
        Ok(match self.direction {
            Direction::Increasing => d,
            Direction::Decreasing => -d,
        })
    }

    fn numeric_inverse(&self, u: f64) -> Result<f64> {
        let domain = *self.domain();
        let start = finite_window(&domain, DEFAULT_SPAN).midpoint();
        let m0 = self.mismatch(start, u)?;
        if m0 == 0.0 {
            return Ok(start);
        }
        // Expand towards the side where the mismatch changes sign.
        let rightward = m0 < 0.0;
        let limit = if rightward { domain.hi() } else { domain.lo() };
        let mut inside = start;
        let mut step = 1.0_f64.max(0.1 * finite_window(&domain, DEFAULT_SPAN).width());
        let mut outside = None;
        for _ in 0..4000 {
            let candidate = if limit.is_finite() {
                // halve the distance to a finite end
                let c = inside + 0.5 * (limit - inside);
                if c == inside || c == limit {
                    break;
                }
                c
            } else if rightward {
                inside + step
            } else {
                inside - step
            };
            match self.mismatch(candidate, u) {
                Ok(0.0) => return Ok(candidate),
                Ok(m) if (m > 0.0) == rightward => {
                    outside = Some(candidate);
                    break;
                }
                Ok(_) => {
                    inside = candidate;
                    step *= 2.0;
                }
                // overflow far out: back off
                Err(_) if !limit.is_finite() => {
                    step *= 0.5;
                    if step < f64::EPSILON * inside.abs().max(1.0) {
                        break;
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
        let outside = outside.ok_or(Error::BracketFailure { u })?;
        let (mut lo, mut hi) = if rightward { (inside, outside) } else { (outside, inside) };

        // Safeguarded Newton: take the Newton step when it stays inside the
        // bracket, otherwise bisect. Runs until the bracket collapses.
        let mut x = 0.5 * (lo + hi);
        for _ in 0..MAX_BISECTION + MAX_NEWTON {
            let m = self.mismatch(x, u)?;
            if m == 0.0 {
                return Ok(x);
            }
            if m < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = match self.direction {
                Direction::Increasing => self.deriv1(x)?,
                Direction::Decreasing => -self.deriv1(x)?,
            };
            let newton = x - m / slope;
            let next = if newton > lo && newton < hi && newton != x {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next <= lo || next >= hi || (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
                return Ok(if next > lo && next < hi { next } else { x });
            }
            x = next;
        }
        Ok(x)
    }
}

fn require_positive(domain: &Interval, name: &str) -> Result<()> {
    if domain.lo() < 0.0 {
        return Err(Error::InvalidGenerator(format!(
            "{name} generator needs a domain inside (0, inf), got {domain}"
        )));
    }
    Ok(())
}

fn sweep_direction(h: &Func1D) -> Result<Direction> {
    let window = finite_window(h.domain(), DEFAULT_SPAN).shrink(DEFAULT_MARGIN);
    let mut first: Option<(f64, f64)> = None;
    for i in 0..SWEEP_POINTS {
        let x = window.lo() + window.width() * i as f64 / (SWEEP_POINTS - 1) as f64;
        let d = h.deriv1(x)?;
        if d == 0.0 {
            continue;
        }
        match first {
            None => first = Some((x, d)),
            Some((x0, d0)) if d0.signum() != d.signum() => {
                return Err(Error::NotMonotone { left: x0, right: x });
            }
            _ => {}
        }
    }
    match first {
        Some((_, d)) if d > 0.0 => Ok(Direction::Increasing),
        Some(_) => Ok(Direction::Decreasing),
        None => Err(Error::InvalidGenerator("derivative vanishes on the whole sweep".into())),
    }
}

/// Limit of `h` towards one end of its domain, probing geometrically closer
/// (or further out for infinite ends). Divergence is reported as infinity
/// with the sign of the trend.
fn endpoint_limit(h: &Func1D, toward_hi: bool) -> Result<f64> {
    let domain = *h.domain();
    let window = finite_window(&domain, DEFAULT_SPAN);
    let anchor = window.midpoint();
    let end = if toward_hi { domain.hi() } else { domain.lo() };
    let mut values: Vec<f64> = Vec::new();
    let mut dist = 0.5 * window.width();
    for _ in 0..1100 {
        let x = if end.is_finite() {
            let x = if toward_hi { end - dist } else { end + dist };
            if !domain.contains(x) {
                break;
            }
            x
        } else if toward_hi {
            anchor + dist
        } else {
            anchor - dist
        };
        if !x.is_finite() {
            break;
        }
        match h.value(x) {
            Ok(v) => {
                if v.abs() > RANGE_CUTOFF {
                    return Ok(f64::INFINITY.copysign(v));
                }
                values.push(v);
            }
            Err(EvalError::NonFinite { .. }) | Err(EvalError::DivisionByZero) => {
                let trend = match values.as_slice() {
                    [.., a, b] => b - a,
                    _ => 1.0,
                };
                return Ok(f64::INFINITY.copysign(trend));
            }
            Err(e) => return Err(e.into()),
        }
        if end.is_finite() {
            dist *= 0.5;
        } else {
            dist *= 2.0;
        }
    }
    match values.as_slice() {
        [.., a, b] => {
            let step = b - a;
            // steps that stopped shrinking mean a logarithmic-type divergence
            if step.abs() > 1e-6 * (1.0 + b.abs()) {
                Ok(f64::INFINITY.copysign(step))
            } else if b.abs() < UNDERFLOW_LIMIT {
                Ok(0.0)
            } else {
                Ok(*b)
            }
        }
        [b] => Ok(*b),
        [] => Err(Error::InvalidGenerator("cannot evaluate near domain end".into())),
    }
}

fn estimate_range(h: &Func1D, direction: Direction) -> Result<Interval> {
    let a = endpoint_limit(h, false)?;
    let b = endpoint_limit(h, true)?;
    match direction {
        Direction::Increasing => Interval::new(a, b),
        Direction::Decreasing => Interval::new(b, a),
    }
}

/// Weights `(α, β)` with `β = 1 - α`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanWeights {
    alpha: f64,
    beta: f64,
}

impl MeanWeights {
    pub fn new(alpha: f64) -> Result<MeanWeights> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidWeight(alpha));
        }
        Ok(MeanWeights {
            alpha,
            beta: 1.0 - alpha,
        })
    }

    pub fn symmetric() -> MeanWeights {
        MeanWeights { alpha: 0.5, beta: 0.5 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn swapped(&self) -> MeanWeights {
        MeanWeights {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuasiArithmeticMean {
    pub gen: Generator,
    pub weights: MeanWeights,
}

impl QuasiArithmeticMean {
    pub fn new(gen: Generator, weights: MeanWeights) -> QuasiArithmeticMean {
        QuasiArithmeticMean { gen, weights }
    }

    /// `H⁻¹(αH(x) + βH(y))`, clamped into `[min(x,y), max(x,y)]`.
    pub fn mean(&self, x: f64, y: f64) -> Result<f64> {
        if x == y {
            self.gen.eval(x)?;
            return Ok(x);
        }
        let u = self.weights.alpha * self.gen.eval(x)? + self.weights.beta * self.gen.eval(y)?;
        let m = self.gen.inverse(u)?;
        Ok(m.clamp(x.min(y), x.max(y)))
    }

    /// The mean point mapped into `J`, i.e. `αH(x) + βH(y)`.
    pub fn linear_point(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.weights.alpha * self.gen.eval(x)? + self.weights.beta * self.gen.eval(y)?)
    }
}
