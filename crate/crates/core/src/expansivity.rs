//! Dynamical-ball decay, local entropy slopes and expansivity verdicts.
//!
//! `Φ_δ(x)` is the intersection of the closed Bowen balls `B[x,n,δ]`, so its mass is
//! the limit of the non-increasing sequence `μ(B[x,n,δ])`. A measure is expansive
//! when that limit vanishes for (almost) every center at one fixed `δ`. With finitely
//! many samples we read "vanishes" as: the mass at `n_max` is below a threshold *and*
//! the curve is still going down, i.e. its fitted decay rate `−Δlog μ / Δn` exceeds a
//! floor.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::system::SystemSpec;
use crate::error::{invalid, Error, Result};
use crate::measure::{ball_masses, EmpiricalMeasure, MassEstimate};
use crate::rng::{stream, Purpose};
use crate::scalar::Scalar;
use crate::stats::{fit_line, median};

/// `d(f^i x, f^i y) ≤ delta` for all `0 ≤ i < n`.
pub fn bowen_ball_contains<T: Scalar>(
    system: &SystemSpec<T>,
    x: T,
    y: T,
    n: usize,
    delta: T,
) -> Result<bool> {
    if n == 0 {
        return Err(invalid("Bowen balls need n ≥ 1"));
    }
    if !(delta > T::zero()) {
        return Err(invalid("delta must be positive"));
    }
    let space = system.space();
    let (mut x, mut y) = (space.check(x)?, space.check(y)?);
    for i in 0..n {
        if i > 0 {
            x = system.step(x);
            y = system.step(y);
        }
        if system.distance(x, y) > delta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `n ↦ μ(B[center, n, delta])` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallDecayCurve<T> {
    pub center: T,
    pub delta: T,
    /// `masses[n - 1]` is the mass at `n`.
    pub masses: Vec<MassEstimate>,
}

impl<T: Scalar> BallDecayCurve<T> {
    pub fn n_max(&self) -> usize {
        self.masses.len()
    }

    pub fn mass(&self, n: usize) -> f64 {
        self.masses[n - 1].value
    }

    /// Stand-in for `μ(Φ_δ(center))`.
    pub fn terminal(&self) -> f64 {
        self.masses.last().map_or(0.0, |m| m.value)
    }

    /// Largest `n` with positive mass.
    pub fn last_positive(&self) -> Option<usize> {
        self.masses
            .iter()
            .rposition(|m| m.value > 0.0)
            .map(|i| i + 1)
    }
}

pub fn ball_decay_curve<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    center: T,
    delta: T,
    n_max: usize,
) -> Result<BallDecayCurve<T>> {
    if n_max < 2 {
        return Err(invalid("a decay curve needs n_max ≥ 2"));
    }
    if !(delta > T::zero()) {
        return Err(invalid("delta must be positive"));
    }
    let center = system.space().check(center)?;
    Ok(BallDecayCurve {
        center,
        delta,
        masses: ball_masses(measure, system, center, delta, n_max),
    })
}

/// Finite-`n` proxy for `φ_δ(x) = liminf −log μ(B[x,n,δ]) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEntropyEstimate<T> {
    pub center: T,
    pub delta: T,
    pub slope: f64,
    pub fit_window: (usize, usize),
    pub residual: f64,
}

/// Least-squares slope of `−log mass_n` against `n` over `n_lo..=n_hi`.
pub fn local_entropy_estimate<T: Scalar>(
    curve: &BallDecayCurve<T>,
    fit_window: (usize, usize),
) -> Result<LocalEntropyEstimate<T>> {
    let (lo, hi) = fit_window;
    if lo == 0 || lo >= hi || hi > curve.n_max() {
        return Err(invalid(format!(
            "fit window [{lo},{hi}] must satisfy 1 ≤ n_lo < n_hi ≤ {}",
            curve.n_max()
        )));
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let m = curve.mass(n);
        if m <= 0.0 {
            return Err(Error::WindowTruncation { n });
        }
        xs.push(n as f64);
        ys.push(-m.ln());
    }
    let fit = fit_line(&xs, &ys).expect("window has two distinct abscissae");
    Ok(LocalEntropyEstimate {
        center: curve.center,
        delta: curve.delta,
        slope: fit.slope,
        fit_window,
        residual: fit.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Expansive,
    NotExpansive,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Expansive => "expansive",
            Verdict::NotExpansive => "not-expansive",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

impl FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "expansive" => Ok(Verdict::Expansive),
            "not-expansive" => Ok(Verdict::NotExpansive),
            "inconclusive" => Ok(Verdict::Inconclusive),
            other => Err(Error::Parse(format!("unknown verdict `{other}`"))),
        }
    }
}

/// Where report centers come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMode {
    /// Drawn from the measure by weight (almost-every-center form of the criterion).
    Measure,
    /// Midpoints of a uniform grid; used for cross-checks only.
    Grid,
}

impl fmt::Display for CenterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CenterMode::Measure => "measure",
            CenterMode::Grid => "grid",
        })
    }
}

impl FromStr for CenterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "measure" => Ok(CenterMode::Measure),
            "grid" => Ok(CenterMode::Grid),
            other => Err(Error::Parse(format!("unknown center mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansivityParams<T> {
    pub delta: T,
    pub centers: usize,
    pub n_max: usize,
    pub threshold: f64,
    /// Minimum fitted decay rate (nats per step) for a curve to count as vanishing.
    pub rate_floor: f64,
    /// `None` selects [`default_fit_window`].
    pub fit_window: Option<(usize, usize)>,
    pub seed: u64,
    pub center_mode: CenterMode,
}

impl<T: Scalar> ExpansivityParams<T> {
    pub fn new(delta: T) -> Self {
        Self {
            delta,
            centers: 200,
            n_max: 14,
            threshold: 1e-3,
            rate_floor: 0.05,
            fit_window: None,
            seed: 0,
            center_mode: CenterMode::Measure,
        }
    }

    fn window(&self) -> (usize, usize) {
        self.fit_window
            .unwrap_or_else(|| default_fit_window(self.n_max))
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero()) {
            return Err(invalid("delta must be positive"));
        }
        if self.centers == 0 {
            return Err(invalid("need at least one center"));
        }
        if self.n_max < 2 {
            return Err(invalid("n_max must be at least 2"));
        }
        if !(self.threshold > 0.0) {
            return Err(invalid("threshold must be positive"));
        }
        let (lo, hi) = self.window();
        if lo == 0 || lo >= hi || hi > self.n_max {
            return Err(invalid(format!(
                "fit window [{lo},{hi}] does not fit n_max = {}",
                self.n_max
            )));
        }
        Ok(())
    }
}

/// `[4, n_max − 2]`, squeezed for short curves. Skips the transient at small `n`
/// and the sample-noise floor at the very end.
pub fn default_fit_window(n_max: usize) -> (usize, usize) {
    let lo = 4.min(n_max.saturating_sub(1)).max(1);
    let hi = n_max.saturating_sub(2).max(lo + 1);
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansivityReport<T> {
    pub delta: T,
    pub threshold: f64,
    pub rate_floor: f64,
    pub n_max: usize,
    pub seed: u64,
    pub centers: Vec<T>,
    pub terminal_masses: Vec<f64>,
    /// Per-center fitted slopes; `NaN` when fewer than two positive masses remain.
    pub decay_rates: Vec<f64>,
    pub x_delta_fraction: f64,
    pub decay_rate_median: f64,
    pub verdict: Verdict,
    pub curves: Vec<BallDecayCurve<T>>,
}

/// JSON-facing summary of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub delta: f64,
    pub threshold: f64,
    pub n_max: usize,
    pub centers: usize,
    pub x_delta_fraction: f64,
    pub verdict: Verdict,
    pub decay_rate_median: f64,
    pub seed: u64,
}

impl<T: Scalar> ExpansivityReport<T> {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            delta: self.delta.as_f64(),
            threshold: self.threshold,
            n_max: self.n_max,
            centers: self.centers.len(),
            x_delta_fraction: self.x_delta_fraction,
            verdict: self.verdict,
            decay_rate_median: self.decay_rate_median,
            seed: self.seed,
        }
    }

    /// Writes every curve as `center,delta,n,mass,std_err` rows.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curves_csv(writer, &self.curves)
    }
}

pub fn write_curves_csv<T: Scalar, W: Write>(
    writer: W,
    curves: &[BallDecayCurve<T>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["center", "delta", "n", "mass", "std_err"])?;
    for c in curves {
        for (i, m) in c.masses.iter().enumerate() {
            w.write_record([
                c.center.to_string(),
                c.delta.to_string(),
                (i + 1).to_string(),
                m.value.to_string(),
                m.standard_error.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Classification rule shared by reports: a center lies in the empirical `X_δ` when
/// its terminal mass is below `threshold` and its decay rate exceeds `rate_floor`.
/// Returns `(x_delta_fraction, verdict)`.
pub fn classify(
    terminal_masses: &[f64],
    decay_rates: &[f64],
    threshold: f64,
    rate_floor: f64,
) -> (f64, Verdict) {
    let count = terminal_masses.len();
    if count == 0 {
        return (0.0, Verdict::Inconclusive);
    }
    let vanishing = terminal_masses
        .iter()
        .zip(decay_rates)
        .filter(|(m, r)| **m < threshold && **r > rate_floor)
        .count();
    let fraction = vanishing as f64 / count as f64;
    let finite: Vec<f64> = decay_rates
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    let med = median(&finite).unwrap_or(f64::NAN);
    let stabilized = terminal_masses
        .iter()
        .zip(decay_rates)
        .any(|(m, r)| *m >= threshold && *r <= rate_floor);
    let verdict = if vanishing == count && med > rate_floor && med > 0.0 {
        Verdict::Expansive
    } else if stabilized {
        Verdict::NotExpansive
    } else {
        Verdict::Inconclusive
    };
    (fraction, verdict)
}

fn pick_centers<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    count: usize,
    mode: CenterMode,
    seed: u64,
) -> Vec<T> {
    match mode {
        CenterMode::Grid => (0..count)
            .map(|i| {
                system
                    .space()
                    .canonicalize(T::lit((i as f64 + 0.5) / count as f64))
            })
            .collect(),
        CenterMode::Measure => {
            let mut cumulative = Vec::with_capacity(measure.size());
            let mut acc = 0.0;
            for w in measure.weights() {
                acc += w;
                cumulative.push(acc);
            }
            (0..count)
                .map(|i| {
                    let u: f64 = stream(seed, Purpose::Centers, i as u64).random::<f64>() * acc;
                    let j = cumulative
                        .partition_point(|&c| c <= u)
                        .min(measure.size() - 1);
                    measure.points()[j]
                })
                .collect()
        }
    }
}

fn decay_rate<T: Scalar>(curve: &BallDecayCurve<T>, window: (usize, usize)) -> f64 {
    let (lo, hi) = window;
    let hi = match curve.last_positive() {
        Some(last) => hi.min(last),
        None => return f64::NAN,
    };
    if hi <= lo {
        return f64::NAN;
    }
    local_entropy_estimate(curve, (lo, hi)).map_or(f64::NAN, |e| e.slope)
}

pub fn expansivity_report<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    params: &ExpansivityParams<T>,
) -> Result<ExpansivityReport<T>> {
    params.validate()?;
    let centers = pick_centers(
        system,
        measure,
        params.centers,
        params.center_mode,
        params.seed,
    );
    let curves: Vec<BallDecayCurve<T>> = centers
        .par_iter()
        .map(|&c| BallDecayCurve {
            center: c,
            delta: params.delta,
            masses: ball_masses(measure, system, c, params.delta, params.n_max),
        })
        .collect();
    let window = params.window();
    let terminal_masses: Vec<f64> = curves.iter().map(|c| c.terminal()).collect();
    let decay_rates: Vec<f64> = curves.iter().map(|c| decay_rate(c, window)).collect();
    let (x_delta_fraction, verdict) = classify(
        &terminal_masses,
        &decay_rates,
        params.threshold,
        params.rate_floor,
    );
    let finite: Vec<f64> = decay_rates
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    Ok(ExpansivityReport {
        delta: params.delta,
        threshold: params.threshold,
        rate_floor: params.rate_floor,
        n_max: params.n_max,
        seed: params.seed,
        centers,
        terminal_masses,
        decay_rates,
        x_delta_fraction,
        decay_rate_median: median(&finite).unwrap_or(f64::NAN),
        verdict,
        curves,
    })
}

/// Largest `delta` of a descending grid whose report is expansive.
pub fn expansivity_constant_search<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    delta_grid: &[T],
    params: &ExpansivityParams<T>,
) -> Result<Option<T>> {
    if delta_grid.iter().any(|d| !(*d > T::zero())) {
        return Err(invalid("delta grid must be positive"));
    }
    if delta_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid("delta grid must be strictly descending"));
    }
    for &delta in delta_grid {
        let p = ExpansivityParams {
            delta,
            ..params.clone()
        };
        if expansivity_report(system, measure, &p)?.verdict == Verdict::Expansive {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}

/// Fraction of measure-sampled centers whose local entropy slope at `delta = 1/m`
/// exceeds `h` (the empirical `X^m`).
pub fn xm_fraction<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    m: usize,
    h: f64,
    params: &ExpansivityParams<T>,
) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let p = ExpansivityParams {
        delta: T::one() / T::lit(m as f64),
        ..params.clone()
    };
    p.validate()?;
    let centers = pick_centers(system, measure, p.centers, p.center_mode, p.seed);
    let window = p.window();
    let above: usize = centers
        .par_iter()
        .map(|&c| {
            let curve = BallDecayCurve {
                center: c,
                delta: p.delta,
                masses: ball_masses(measure, system, c, p.delta, p.n_max),
            };
            usize::from(decay_rate(&curve, window) > h)
        })
        .sum();
    Ok(above as f64 / centers.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::space::Space;
    use crate::measure::{sample_measure, Sampler};

    #[test]
    fn contains_examples() {
        let dbl = SystemSpec::<f64>::doubling();
        let y = 2f64.powi(-10);
        assert!(!bowen_ball_contains(&dbl, 0.0, y, 5, 0.01).unwrap());
        // four steps only reach 2^-7 < 0.01
        assert!(bowen_ball_contains(&dbl, 0.0, y, 4, 0.01).unwrap());
        assert_eq!(
            bowen_ball_contains(&dbl, 0.3, 0.305, 1, 0.01).unwrap(),
            dbl.distance(0.3, 0.305) <= 0.01
        );
        let tent = SystemSpec::<f64>::tent();
        assert!(bowen_ball_contains(&tent, 0.37, 0.37, 50, 1e-9).unwrap());
        assert!(bowen_ball_contains(&tent, 0.37, 0.38, 0, 0.1).is_err());
    }

    #[test]
    fn identity_curve_is_flat() {
        let s = SystemSpec::identity(Space::Interval);
        let m = sample_measure(&Sampler::Lebesgue, &s, 20_000, 1).unwrap();
        let c = ball_decay_curve(&s, &m, 0.5, 0.1, 10).unwrap();
        assert!(c.masses.iter().all(|x| x.value == c.mass(1)));
        let e = local_entropy_estimate(&c, (2, 10)).unwrap();
        assert!(e.slope.abs() < 1e-9);
        assert!(e.residual >= 0.0);
    }

    #[test]
    fn window_errors() {
        let s = SystemSpec::<f64>::tent();
        let m = sample_measure(&Sampler::Lebesgue, &s, 1000, 1).unwrap();
        let c = ball_decay_curve(&s, &m, 0.3001, 0.01, 30).unwrap();
        assert!(matches!(
            local_entropy_estimate(&c, (2, 30)),
            Err(Error::WindowTruncation { .. })
        ));
        assert!(local_entropy_estimate(&c, (5, 5)).is_err());
        assert!(local_entropy_estimate(&c, (0, 5)).is_err());
        assert!(local_entropy_estimate(&c, (2, 31)).is_err());
        assert!(ball_decay_curve(&s, &m, 0.3, 0.01, 1).is_err());
    }

    #[test]
    fn default_window_shapes() {
        assert_eq!(default_fit_window(14), (4, 12));
        assert_eq!(default_fit_window(2), (1, 2));
        assert_eq!(default_fit_window(5), (4, 5));
        assert_eq!(default_fit_window(4000), (4, 3998));
    }

    #[test]
    fn classify_rules() {
        let (f, v) = classify(&[1e-4, 2e-4], &[0.7, 0.6], 1e-3, 0.05);
        assert_eq!((f, v), (1.0, Verdict::Expansive));
        let (f, v) = classify(&[0.1, 1e-4], &[0.0, 0.6], 1e-3, 0.05);
        assert_eq!((f, v), (0.5, Verdict::NotExpansive));
        let (_, v) = classify(&[0.1], &[0.3], 1e-3, 0.05);
        assert_eq!(v, Verdict::Inconclusive);
        assert_eq!(classify(&[], &[], 1e-3, 0.05).1, Verdict::Inconclusive);
    }

    #[test]
    fn atomic_measure_is_not_expansive() {
        for s in [SystemSpec::<f64>::tent(), SystemSpec::golden_rotation()] {
            let m = sample_measure(&Sampler::Atomic { atoms: vec![0.5] }, &s, 1, 0).unwrap();
            for delta in [0.3, 0.05, 1e-4] {
                let p = ExpansivityParams {
                    centers: 5,
                    ..ExpansivityParams::new(delta)
                };
                let r = expansivity_report(&s, &m, &p).unwrap();
                assert_eq!(r.verdict, Verdict::NotExpansive);
                assert_eq!(r.x_delta_fraction, 0.0);
            }
        }
    }

    #[test]
    fn verdict_text_round_trip() {
        for v in [
            Verdict::Expansive,
            Verdict::NotExpansive,
            Verdict::Inconclusive,
        ] {
            assert_eq!(v.to_string().parse::<Verdict>().unwrap(), v);
        }
        assert!("maybe".parse::<Verdict>().is_err());
    }

    #[test]
    fn constant_search_validates_grid() {
        let s = SystemSpec::<f64>::tent();
        let m = sample_measure(&Sampler::Lebesgue, &s, 100, 0).unwrap();
        let p = ExpansivityParams::new(0.1);
        assert!(expansivity_constant_search(&s, &m, &[0.1, 0.2], &p).is_err());
        assert!(expansivity_constant_search(&s, &m, &[0.1, -0.2], &p).is_err());
    }
}
