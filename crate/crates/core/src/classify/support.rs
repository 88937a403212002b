use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::EvalError;
use crate::funcmodel::{Interval, SamplePlan, DEFAULT_MARGIN};

/// Maximal open intervals where a sampled derivative stays away from zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportDecomposition {
    /// Disjoint, increasing.
    pub intervals: Vec<Interval>,
    /// Closed gaps between (and around) the intervals; a gap may be a single
    /// point where the derivative changes sign.
    #[serde(skip)]
    pub zero_set: Vec<(f64, f64)>,
    #[serde(rename = "tauG")]
    pub tau: f64,
}

impl SupportDecomposition {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Does any interval of `self` overlap any interval of `other`?
    pub fn overlaps(&self, other: &SupportDecomposition) -> bool {
        self.intervals
            .iter()
            .any(|a| other.intervals.iter().any(|b| a.intersect(b).is_some()))
    }
}

/// Runs of grid points where `|g| > tau_rel · max|g|` and `g` keeps its sign.
///
/// Runs shorter than three points are dropped. A run touching the first or
/// last grid point is extended to the window edge; a boundary caused by a
/// sign change is placed at the linearly interpolated zero, any other at the
/// midpoint between the neighbouring grid points.
pub fn decompose_support<G>(g: G, window: &Interval, grid_n: usize, tau_rel: f64) -> Result<SupportDecomposition>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    if grid_n < 64 {
        return Err(Error::InvalidPlan(format!("support grid needs at least 64 points, got {grid_n}")));
    }
    let xs = SamplePlan::uniform(*window, grid_n).with_margin(DEFAULT_MARGIN).sample()?;
    let vs: Vec<f64> = xs.iter().map(|&x| g(x)).collect::<Result<_, _>>()?;
    let peak = vs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(SupportDecomposition {
            intervals: Vec::new(),
            zero_set: vec![(window.lo(), window.hi())],
            tau: 0.0,
        });
    }
    let tau = tau_rel * peak;
    let above: Vec<bool> = vs.iter().map(|v| v.abs() > tau).collect();
    let n = xs.len();

    let zero_between = |i: usize| -> f64 {
        let (a, b) = (vs[i].abs(), vs[i + 1].abs());
        xs[i] + (xs[i + 1] - xs[i]) * a / (a + b)
    };
    let left_edge = |s: usize| -> f64 {
        if s == 0 {
            window.lo()
        } else if above[s - 1] {
            zero_between(s - 1)
        } else {
            0.5 * (xs[s - 1] + xs[s])
        }
    };
    let right_edge = |e: usize| -> f64 {
        if e == n - 1 {
            window.hi()
        } else if above[e + 1] {
            zero_between(e)
        } else {
            0.5 * (xs[e] + xs[e + 1])
        }
    };

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if !above[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && above[i + 1] && vs[i + 1].signum() == vs[start].signum() {
            i += 1;
        }
        if i - start + 1 >= 3 {
            intervals.push(Interval::new(left_edge(start), right_edge(i))?);
        }
        i += 1;
    }

    let mut zero_set = Vec::new();
    let mut cursor = window.lo();
    for iv in &intervals {
        if iv.lo() > cursor || (iv.lo() == cursor && cursor != window.lo()) {
            zero_set.push((cursor, iv.lo()));
        }
        cursor = iv.hi();
    }
    if cursor < window.hi() {
        zero_set.push((cursor, window.hi()));
    }
    Ok(SupportDecomposition {
        intervals,
        zero_set,
        tau,
    })
}
