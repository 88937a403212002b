//! Deciding which solution family a pair belongs to.
//!
//! The classifier works on a pair `(F, G)` solving the linear-mean problem.
//! It splits the window into intervals where `g = G'` does not vanish, tests
//! `f = c·g` on each, and otherwise reads the constant `c` in `g'' = c·g`
//! off the data to pick the quadratic, exponential or trigonometric basis.
//! Coefficients are then fitted over the whole window.

mod fit;
mod stats;
mod support;

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Basis, Case};
use crate::funcmodel::{Func1D, Interval, SamplePlan, DEFAULT_MARGIN};
use crate::qam::Generator;
use crate::residual::reduce;

pub use support::{decompose_support, SupportDecomposition};

/// Current layout of [`ClassificationReport`] as JSON.
pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of classification: a family case, or no confident answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Dependent,
    Quadratic,
    Exponential,
    Trigonometric,
    Indeterminate,
}

impl From<Case> for Verdict {
    fn from(c: Case) -> Verdict {
        match c {
            Case::Dependent => Verdict::Dependent,
            Case::Quadratic => Verdict::Quadratic,
            Case::Exponential => Verdict::Exponential,
            Case::Trigonometric => Verdict::Trigonometric,
        }
    }
}

impl Verdict {
    pub fn case(self) -> Option<Case> {
        match self {
            Verdict::Dependent => Some(Case::Dependent),
            Verdict::Quadratic => Some(Case::Quadratic),
            Verdict::Exponential => Some(Case::Exponential),
            Verdict::Trigonometric => Some(Case::Trigonometric),
            Verdict::Indeterminate => None,
        }
    }
}

/// Thresholds and grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassifyOptions {
    pub grid_n: usize,
    /// Support threshold relative to the largest sampled `|g|`.
    pub tau_rel: f64,
    /// Allowed relative spread of `f/g` for a dependence verdict.
    pub tau_v: f64,
    /// Dead band around `c = 0`, scaled by `1 + spread` of the `g''/g` estimate.
    pub tau_c: f64,
    pub fit_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            grid_n: 1000,
            tau_rel: 1e-8,
            tau_v: 1e-6,
            tau_c: 1e-4,
            fit_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalDependence {
    pub interval: Interval,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassificationReport {
    pub schema_version: u32,
    pub case: Verdict,
    pub mu: Option<f64>,
    pub coeffs_f: Option<[f64; 3]>,
    pub coeffs_g: Option<[f64; 3]>,
    pub per_interval_dependence: Vec<IntervalDependence>,
    /// Estimated `c` in `g'' = c·g`; `±μ²` once `μ` has been refined.
    pub c_estimate: Option<f64>,
    pub fit_residual: Option<f64>,
    pub support: SupportDecomposition,
    /// The window actually scanned.
    pub window: Interval,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    /// The fitted basis, for typed verdicts.
    pub fn basis(&self) -> Option<Basis> {
        Basis::for_case(self.case.case()?, self.mu)
    }
}

/// `(A, K, x₀)` with `f = (A + K ∫_{x₀}^x dt/g²) g` on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RepresentationFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub x0: f64,
    pub r_squared: f64,
    pub interval: Interval,
}

fn grid(iv: &Interval, n: usize) -> Result<Vec<f64>> {
    SamplePlan::uniform(*iv, n).with_margin(DEFAULT_MARGIN).sample()
}

/// `Some(c)` when `f = c·g` on `iv` up to the relative spread `tau_v`.
pub fn dependence_test(f: &Func1D, g: &Func1D, iv: &Interval, grid_n: usize, tau_v: f64) -> Result<Option<f64>> {
    let mut ratios = Vec::with_capacity(grid_n);
    for x in grid(iv, grid_n)? {
        let gx = g.deriv1(x)?;
        if gx != 0.0 {
            ratios.push(f.deriv1(x)? / gx);
        }
    }
    let Some(med) = stats::median(&ratios) else {
        return Ok(None);
    };
    let spread = ratios.iter().fold(0.0_f64, |m, v| m.max((v - med).abs()));
    Ok((spread <= tau_v * (1.0 + med.abs())).then_some(med))
}

/// Median and interquartile spread of `g''/g` on `iv`.
///
/// `g''` is exact when the handle carries a third derivative; with only a
/// second derivative it is a central difference of `g'`; otherwise the
/// five-point stencil on `g` at the grid spacing.
pub fn ode_level(g: &Func1D, iv: &Interval, grid_n: usize) -> Result<(f64, f64)> {
    let xs = grid(iv, grid_n)?;
    let n = xs.len();
    if n < 7 {
        return Err(Error::TooShort(format!("{n} grid points on {iv}, need at least 7")));
    }
    let h = xs[1] - xs[0];
    let gs: Vec<f64> = xs.iter().map(|&x| g.deriv1(x)).collect::<Result<_, _>>()?;
    let mut ratios = Vec::with_capacity(n);
    for i in 2..n - 2 {
        let x = xs[i];
        let g2 = match g.max_order() {
            o if o >= 3 => g.derivative(3, x).expect("order checked")?,
            2 => {
                let up = g.derivative(2, xs[i + 1]).expect("order checked")?;
                let down = g.derivative(2, xs[i - 1]).expect("order checked")?;
                (up - down) / (xs[i + 1] - xs[i - 1])
            }
            _ => {
                (-gs[i + 2] + 16.0 * gs[i + 1] - 30.0 * gs[i] + 16.0 * gs[i - 1] - gs[i - 2]) / (12.0 * h * h)
            }
        };
        if gs[i] != 0.0 {
            ratios.push(g2 / gs[i]);
        }
    }
    match (stats::median(&ratios), stats::iqr(&ratios)) {
        (Some(m), Some(s)) => Ok((m, s)),
        _ => Err(Error::TooShort(format!("g vanishes on every grid point of {iv}"))),
    }
}

struct Fitted {
    basis: Basis,
    coeffs_f: [f64; 3],
    coeffs_g: [f64; 3],
    residual: f64,
}

fn fit_pair(basis: Basis, us: &[f64], fs: &[f64], gs: &[f64]) -> Fitted {
    let coeffs_f = fit::fit_basis(&basis, us, fs);
    let coeffs_g = fit::fit_basis(&basis, us, gs);
    let residual = fit::relative_deviation(&basis, &coeffs_f, us, fs)
        .max(fit::relative_deviation(&basis, &coeffs_g, us, gs));
    Fitted {
        basis,
        coeffs_f,
        coeffs_g,
        residual,
    }
}

/// Refines `μ` for a typed basis by minimising the joint misfit.
fn refine_mu(make: fn(f64) -> Basis, mu0: f64, rel_width: f64, us: &[f64], fs: &[f64], gs: &[f64]) -> f64 {
    let objective = |mu: f64| {
        let b = make(mu);
        fit::normalised_misfit(&b, us, fs) + fit::normalised_misfit(&b, us, gs)
    };
    let (mu, best) = fit::golden_min(objective, mu0 * (1.0 - rel_width), mu0 * (1.0 + rel_width), 200);
    if best <= objective(mu0) {
        mu
    } else {
        mu0
    }
}

fn case_name(basis: &Basis) -> &'static str {
    match basis {
        Basis::Polynomial => "quadratic",
        Basis::Exponential(_) => "exponential",
        Basis::Trigonometric(_) => "trigonometric",
    }
}

/// Runs the full pipeline on a finite window.
pub fn classify_pair(f: &Func1D, g: &Func1D, window: &Interval, opts: &ClassifyOptions) -> Result<ClassificationReport> {
    if !window.is_finite() {
        return Err(Error::InvalidPlan(format!("classification window {window} must be finite")));
    }
    let support = decompose_support(|x| g.deriv1(x), window, opts.grid_n, opts.tau_rel)?;
    let mut report = ClassificationReport {
        schema_version: SCHEMA_VERSION,
        case: Verdict::Dependent,
        mu: None,
        coeffs_f: None,
        coeffs_g: None,
        per_interval_dependence: Vec::new(),
        c_estimate: None,
        fit_residual: None,
        support: support.clone(),
        window: *window,
        notes: Vec::new(),
    };
    if support.is_empty() {
        report.notes.push("G is constant on the window; no dependence constant".into());
        return Ok(report);
    }

    let f_support = decompose_support(|x| f.deriv1(x), window, opts.grid_n, opts.tau_rel)?;
    if !f_support.is_empty() && !f_support.overlaps(&support) {
        let show = |s: &SupportDecomposition| {
            s.intervals.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ∪ ")
        };
        report.notes.push(format!(
            "supports of f and g are disjoint: U_f = {}, U_g = {}",
            show(&f_support),
            show(&support)
        ));
    }

    let mut free: Option<Interval> = None;
    for iv in &support.intervals {
        match dependence_test(f, g, iv, opts.grid_n, opts.tau_v)? {
            Some(c) => report.per_interval_dependence.push(IntervalDependence { interval: *iv, c }),
            None => {
                if free.is_none_or(|best| iv.width() > best.width()) {
                    free = Some(*iv);
                }
            }
        }
    }
    let Some(probe) = free else {
        return Ok(report);
    };

    let (c, spread) = ode_level(g, &probe, opts.grid_n)?;
    let band = opts.tau_c * (1.0 + spread);
    let us = grid(window, opts.grid_n)?;
    let fs: Vec<f64> = us.iter().map(|&u| f.value(u)).collect::<Result<_, _>>()?;
    let gs: Vec<f64> = us.iter().map(|&u| g.value(u)).collect::<Result<_, _>>()?;

    let quadratic = || fit_pair(Basis::Polynomial, &us, &fs, &gs);
    let typed = || {
        let make: fn(f64) -> Basis = if c > 0.0 { Basis::Exponential } else { Basis::Trigonometric };
        let mu0 = c.abs().sqrt();
        let width = (0.02 + 2.0 * spread / c.abs()).min(0.5);
        fit_pair(make(refine_mu(make, mu0, width, &us, &fs, &gs)), &us, &fs, &gs)
    };

    let chosen = if c.abs() <= band {
        let q = quadratic();
        if c.abs() > 0.1 * band {
            let t = typed();
            report.notes.push(format!(
                "g''/g estimate {c:.3e} is near the dead band {band:.3e}; {} fit residual {:.3e}",
                case_name(&t.basis),
                t.residual
            ));
        }
        q
    } else {
        let t = typed();
        if c.abs() <= 10.0 * band {
            let q = quadratic();
            report.notes.push(format!(
                "g''/g estimate {c:.3e} is near the dead band {band:.3e}; quadratic fit residual {:.3e}",
                q.residual
            ));
            if q.residual <= opts.fit_tol {
                report.notes.push(format!("preferring quadratic over {}", case_name(&t.basis)));
                q
            } else {
                t
            }
        } else {
            t
        }
    };

    report.coeffs_f = Some(chosen.coeffs_f);
    report.coeffs_g = Some(chosen.coeffs_g);
    report.fit_residual = Some(chosen.residual);
    let (verdict, mu, c_est) = match chosen.basis {
        Basis::Polynomial => (Verdict::Quadratic, None, c),
        Basis::Exponential(mu) => (Verdict::Exponential, Some(mu), mu * mu),
        Basis::Trigonometric(mu) => (Verdict::Trigonometric, Some(mu), -mu * mu),
    };
    report.c_estimate = Some(c_est);
    if chosen.residual > opts.fit_tol {
        report.case = Verdict::Indeterminate;
        report.notes.push(format!(
            "best attempt was {} with fit residual {:.3e} above tolerance {:.1e}",
            case_name(&chosen.basis),
            chosen.residual,
            opts.fit_tol
        ));
    } else {
        report.case = verdict;
        report.mu = mu;
    }
    Ok(report)
}

/// Fits `v = f/g ≈ A + K·S` with `S(x) = ∫_{x₀}^x dt/g²` and `x₀` the
/// midpoint of `iv`.
pub fn fit_representation(f: &Func1D, g: &Func1D, iv: &Interval, grid_n: usize) -> Result<RepresentationFit> {
    let xs = grid(iv, grid_n | 1)?;
    let n = xs.len();
    if n < 7 {
        return Err(Error::TooShort(format!("{n} grid points on {iv}, need at least 7")));
    }
    let mid = n / 2;
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for &x in &xs {
        let gx = g.deriv1(x)?;
        if gx == 0.0 {
            return Err(Error::InvalidPlan(format!("g vanishes at {x} inside {iv}")));
        }
        v.push(f.deriv1(x)? / gx);
        w.push(1.0 / (gx * gx));
    }
    let mut s = vec![0.0; n];
    for i in 1..n {
        s[i] = s[i - 1] + 0.5 * (w[i] + w[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let s0 = s[mid];
    s.iter_mut().for_each(|si| *si -= s0);

    let med = stats::median(&v).expect("non-empty grid");
    let flat = v.iter().all(|vi| (vi - med).abs() <= 1e-12 * (1.0 + med.abs()));
    let (a, k, r_squared) = if flat { (med, 0.0, 1.0) } else { fit::linear_regression(&s, &v) };
    Ok(RepresentationFit {
        a,
        k,
        x0: xs[mid],
        r_squared,
        interval: *iv,
    })
}

/// Classifies `(φ, ψ)` through the reduction `u = H(x)`.
///
/// Coefficients refer to the basis in `H`; support intervals and dependence
/// intervals are mapped back to `x`.
pub fn classify_original(
    phi: &Func1D,
    psi: &Func1D,
    gen: &Generator,
    window: &Interval,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport> {
    if !window.is_finite() || !gen.domain().covers(window) {
        return Err(Error::InvalidPlan(format!(
            "window {window} must be finite and inside the generator domain {}",
            gen.domain()
        )));
    }
    let uwin = gen.image(&window.shrink(DEFAULT_MARGIN))?;
    let pair = reduce(phi, psi, gen);
    let mut report = classify_pair(&pair.phi, &pair.psi, &uwin, opts)?;

    let back = |iv: &Interval| -> Result<Interval> {
        let a = gen.inverse(iv.lo())?;
        let b = gen.inverse(iv.hi())?;
        Interval::new(a.min(b), a.max(b))
    };
    let mut intervals = report
        .support
        .intervals
        .iter()
        .map(back)
        .collect::<Result<Vec<_>>>()?;
    intervals.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
    report.support.intervals = intervals;
    report.support.zero_set.clear();
    for d in &mut report.per_interval_dependence {
        d.interval = back(&d.interval)?;
    }
    report.per_interval_dependence.sort_by(|a, b| a.interval.lo().total_cmp(&b.interval.lo()));
    report.notes.push(format!(
        "coefficients refer to the basis in u = H(x) with H = {}, scanned u-window {uwin}",
        gen.name()
    ));
    report.window = *window;
    Ok(report)
}

/// Reads a CSV with header `x,F,G` into two sample-backed handles.
pub fn read_sample_pair<R: Read>(reader: R) -> Result<(Func1D, Func1D)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers != ["x", "F", "G"] {
        return Err(Error::InvalidSamples(format!("expected header x,F,G, got {}", headers.join(","))));
    }
    let (mut xs, mut fs, mut gs) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidSamples(format!("row {}: bad number in column {}", line + 2, i + 1)))
        };
        xs.push(num(0)?);
        fs.push(num(1)?);
        gs.push(num(2)?);
    }
    Ok((Func1D::from_samples(&xs, &fs)?, Func1D::from_samples(&xs, &gs)?))
}
