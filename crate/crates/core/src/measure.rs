//! Probability measures as weighted sample clouds.

use std::fmt;
use std::io::{Read, Write};

use rand::Rng;

use crate::dynamics::space::{wrap, Space};
use crate::dynamics::system::SystemSpec;
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Purpose};
use crate::scalar::Scalar;
use crate::stats::compensated_sum;

/// How a cloud was generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler<T> {
    /// Uniform on the space.
    Lebesgue,
    /// `Φ(t)` for uniform `t`: the invariant measure of a Denjoy system.
    DenjoyPushforward,
    /// The orbit segment `f^{burn_in}(x0), …` with equal weights.
    Birkhoff { x0: T, burn_in: usize },
    /// Equal point masses at the given atoms.
    Atomic { atoms: Vec<T> },
    /// Loaded from a file or assembled by hand.
    Imported,
}

impl<T: Scalar> Sampler<T> {
    /// Parses `lebesgue`, `denjoy-pushforward`, `birkhoff:x0=0.3,burn_in=0` or
    /// `atomic:0.5,0.25`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (text, None),
        };
        match (head, rest) {
            ("lebesgue", None) => Ok(Sampler::Lebesgue),
            ("denjoy-pushforward", None) => Ok(Sampler::DenjoyPushforward),
            ("birkhoff", Some(args)) => {
                let mut x0 = None;
                let mut burn_in = 0usize;
                for kv in args.split(',') {
                    match kv.split_once('=') {
                        Some(("x0", v)) => {
                            x0 = Some(
                                T::parse(v).ok_or_else(|| Error::Parse(format!("bad x0 `{v}`")))?,
                            )
                        }
                        Some(("burn_in", v)) => {
                            burn_in = v
                                .trim()
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad burn_in `{v}`")))?
                        }
                        _ => return Err(Error::Parse(format!("unknown birkhoff argument `{kv}`"))),
                    }
                }
                let x0 = x0.ok_or_else(|| Error::Parse("birkhoff sampler needs x0".into()))?;
                Ok(Sampler::Birkhoff { x0, burn_in })
            }
            ("atomic", Some(args)) => {
                let atoms = args
                    .split(',')
                    .map(|a| T::parse(a).ok_or_else(|| Error::Parse(format!("bad atom `{a}`"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Sampler::Atomic { atoms })
            }
            _ => Err(Error::Parse(format!("unknown measure `{text}`"))),
        }
    }
}

impl<T: Scalar> fmt::Display for Sampler<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Lebesgue => write!(f, "lebesgue"),
            Sampler::DenjoyPushforward => write!(f, "denjoy-pushforward"),
            Sampler::Birkhoff { x0, burn_in } => write!(f, "birkhoff:x0={x0},burn_in={burn_in}"),
            Sampler::Atomic { atoms } => {
                write!(f, "atomic:")?;
                for (i, a) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                Ok(())
            }
            Sampler::Imported => write!(f, "imported"),
        }
    }
}

/// A finitely supported probability measure. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    points: Vec<T>,
    weights: Vec<f64>,
    sampler: Sampler<T>,
    seed: u64,
    effective_size: f64,
}

impl<T: Scalar> EmpiricalMeasure<T> {
    /// Builds a measure from explicit points and weights; weights must be
    /// nonnegative and sum to 1 within `1e-12`.
    pub fn from_weighted(points: Vec<T>, weights: Vec<f64>, space: Space) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(invalid(
                "a measure needs as many weights as points, and at least one",
            ));
        }
        for &p in &points {
            space.check(p)?;
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::assemble(points, weights, Sampler::Imported, 0))
    }

    fn assemble(points: Vec<T>, weights: Vec<f64>, sampler: Sampler<T>, seed: u64) -> Self {
        let sq = compensated_sum(weights.iter().map(|w| w * w));
        Self {
            points,
            weights,
            sampler,
            seed,
            effective_size: 1.0 / sq,
        }
    }

    fn equal(points: Vec<T>, sampler: Sampler<T>, seed: u64) -> Self {
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Self::assemble(points, weights, sampler, seed)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sampler(&self) -> &Sampler<T> {
        &self.sampler
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Kish effective sample size `1/Σw²`; equals `size` for equal weights.
    pub fn effective_size(&self) -> f64 {
        self.effective_size
    }

    /// Mass estimate from a membership mask evaluated in index order.
    pub fn estimate(&self, value: f64) -> MassEstimate {
        let p = value.clamp(0.0, 1.0);
        MassEstimate {
            value: p,
            standard_error: (p * (1.0 - p) / self.effective_size).sqrt(),
            sample_size: self.size(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["point", "weight"])?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            w.write_record([p.to_string(), wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `point,weight` CSV form (header mandatory).
    pub fn read_csv<R: Read>(reader: R, space: Space) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "point" || &headers[1] != "weight" {
            return Err(Error::Parse(
                "cloud CSV header must be `point,weight`".into(),
            ));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Parse(format!("cloud CSV row {} is malformed", line + 2));
            let p = T::parse(rec.get(0).ok_or_else(bad)?).ok_or_else(bad)?;
            let w: f64 = rec
                .get(1)
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            points.push(p);
            weights.push(w);
        }
        Self::from_weighted(points, weights, space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub sample_size: usize,
}

/// Closed interval `[lo, hi]`; on the circle `lo > hi` denotes the arc through `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
    pub space: Space,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T, space: Space) -> Self {
        Self { lo, hi, space }
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        if self.lo <= self.hi {
            x >= self.lo && x <= self.hi
        } else {
            self.space == Space::Circle && (x >= self.lo || x <= self.hi)
        }
    }
}

pub fn sample_measure<T: Scalar>(
    sampler: &Sampler<T>,
    system: &SystemSpec<T>,
    size: usize,
    seed: u64,
) -> Result<EmpiricalMeasure<T>> {
    if size == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let space = system.space();
    let mut rng = stream(seed, Purpose::Cloud, 0);
    let points: Vec<T> = match sampler {
        Sampler::Lebesgue => (0..size)
            .map(|_| space.canonicalize(T::lit(rng.random::<f64>())))
            .collect(),
        Sampler::DenjoyPushforward => {
            let model = system
                .denjoy_model()
                .ok_or_else(|| invalid("denjoy-pushforward needs a denjoy system"))?;
            (0..size)
                .map(|_| wrap(model.phi(T::lit(rng.random::<f64>()))))
                .collect()
        }
        Sampler::Birkhoff { x0, burn_in } => {
            let mut x = space.check(*x0)?;
            for _ in 0..*burn_in {
                x = system.step(x);
            }
            let mut pts = Vec::with_capacity(size);
            for i in 0..size {
                if i > 0 {
                    x = system.step(x);
                }
                pts.push(x);
            }
            pts
        }
        Sampler::Atomic { atoms } => {
            if atoms.is_empty() {
                return Err(invalid("atomic sampler needs at least one atom"));
            }
            for &a in atoms {
                space.check(a)?;
            }
            atoms.clone()
        }
        Sampler::Imported => return Err(invalid("imported clouds are read, not sampled")),
    };
    Ok(EmpiricalMeasure::equal(points, sampler.clone(), seed))
}

pub fn set_mass<T: Scalar, P: Fn(T) -> bool>(
    measure: &EmpiricalMeasure<T>,
    member: P,
) -> MassEstimate {
    let value = compensated_sum(
        measure
            .points
            .iter()
            .zip(&measure.weights)
            .filter(|(p, _)| member(**p))
            .map(|(_, w)| *w),
    );
    measure.estimate(value)
}

/// Masses of `B[center, n, delta]` for `n = 1..=n_max`.
///
/// Points leave the ball for good, so only survivors are iterated; the returned
/// sequence is exactly non-increasing.
pub(crate) fn ball_masses<T: Scalar>(
    measure: &EmpiricalMeasure<T>,
    system: &SystemSpec<T>,
    center: T,
    delta: T,
    n_max: usize,
) -> Vec<MassEstimate> {
    let metric = system.metric();
    let mut alive: Vec<(usize, T)> = measure
        .points
        .iter()
        .enumerate()
        .filter(|(_, &y)| metric.distance(center, y) <= delta)
        .map(|(i, &y)| (i, y))
        .collect();
    let mass = |alive: &[(usize, T)]| {
        measure.estimate(compensated_sum(
            alive.iter().map(|(i, _)| measure.weights[*i]),
        ))
    };
    let mut out = Vec::with_capacity(n_max);
    out.push(mass(&alive));
    let mut c = center;
    for _ in 1..n_max {
        c = system.step(c);
        alive.retain_mut(|(_, y)| {
            *y = system.step(*y);
            metric.distance(c, *y) <= delta
        });
        out.push(mass(&alive));
    }
    out
}

/// Mass of the closed Bowen ball `{y : d(f^i x, f^i y) ≤ delta, 0 ≤ i < n}`.
pub fn bowen_ball_mass<T: Scalar>(
    measure: &EmpiricalMeasure<T>,
    system: &SystemSpec<T>,
    x: T,
    n: usize,
    delta: T,
) -> Result<MassEstimate> {
    if n == 0 {
        return Err(invalid("Bowen balls need n ≥ 1"));
    }
    if !(delta > T::zero()) {
        return Err(invalid("delta must be positive"));
    }
    system.space().check(x)?;
    Ok(*ball_masses(measure, system, x, delta, n)
        .last()
        .expect("n ≥ 1"))
}

/// Largest invariance defect `|μ(A) − μ(f⁻¹A)|` over the test intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    /// Largest standard error of the per-interval difference estimator.
    pub standard_error: f64,
    /// Index of the interval attaining `value`.
    pub worst: usize,
}

pub fn pushforward_discrepancy<T: Scalar>(
    measure: &EmpiricalMeasure<T>,
    system: &SystemSpec<T>,
    test_intervals: &[Interval<T>],
) -> Result<Discrepancy> {
    if test_intervals.is_empty() {
        return Err(invalid("need at least one test interval"));
    }
    let space = system.space();
    for iv in test_intervals {
        space.check(iv.lo)?;
        // an arc may close at 1
        if !(space == Space::Circle && iv.hi == T::one()) {
            space.check(iv.hi)?;
        }
    }
    let images: Vec<T> = measure.points.iter().map(|&y| system.step(y)).collect();
    let mut out = Discrepancy {
        value: 0.0,
        standard_error: 0.0,
        worst: 0,
    };
    for (k, iv) in test_intervals.iter().enumerate() {
        let diffs: Vec<f64> = measure
            .points
            .iter()
            .zip(&images)
            .map(|(&y, &fy)| {
                f64::from(u8::from(iv.contains(y))) - f64::from(u8::from(iv.contains(fy)))
            })
            .collect();
        let est = compensated_sum(diffs.iter().zip(&measure.weights).map(|(d, w)| d * w));
        let var = compensated_sum(
            diffs
                .iter()
                .zip(&measure.weights)
                .map(|(d, w)| w * w * (d - est) * (d - est)),
        );
        if est.abs() > out.value {
            out.value = est.abs();
            out.worst = k;
        }
        out.standard_error = out.standard_error.max(var.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::denjoy::DenjoyModel;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn lebesgue_equal_weights() {
        let m = sample_measure(&Sampler::Lebesgue, &SystemSpec::<f64>::tent(), 4, 9).unwrap();
        assert_eq!(m.size(), 4);
        assert_eq!(m.weights(), &[0.25; 4]);
        assert!(m.points().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn atomic_ignores_size() {
        let m = sample_measure(
            &Sampler::Atomic { atoms: vec![0.5] },
            &SystemSpec::<f64>::tent(),
            1000,
            1,
        )
        .unwrap();
        assert_eq!(m.points(), &[0.5]);
        assert_eq!(m.weights(), &[1.0]);
        assert_eq!(set_mass(&m, |x| x <= 0.4).value, 0.0);
    }

    #[test]
    fn regeneration_is_bitwise() {
        let s = SystemSpec::<f64>::golden_rotation();
        let a = sample_measure(&Sampler::Lebesgue, &s, 1000, 77).unwrap();
        let b = sample_measure(&Sampler::Lebesgue, &s, 1000, 77).unwrap();
        let c = sample_measure(&Sampler::Lebesgue, &s, 1000, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn sampler_system_mismatch() {
        assert!(sample_measure(
            &Sampler::DenjoyPushforward,
            &SystemSpec::<f64>::tent(),
            10,
            0
        )
        .is_err());
        assert!(sample_measure(&Sampler::<f64>::Lebesgue, &SystemSpec::tent(), 0, 0).is_err());
        assert!(sample_measure(
            &Sampler::Atomic { atoms: vec![1.0] },
            &SystemSpec::<f64>::golden_rotation(),
            1,
            0
        )
        .is_err());
    }

    #[test]
    fn birkhoff_is_orbit() {
        let s = SystemSpec::<f64>::golden_rotation();
        let m = sample_measure(
            &Sampler::Birkhoff {
                x0: 0.1,
                burn_in: 0,
            },
            &s,
            5,
            0,
        )
        .unwrap();
        assert_eq!(m.points()[0], 0.1);
        assert_eq!(m.points()[1], s.step(0.1));
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lebesgue_interval_mass() {
        let m = sample_measure(&Sampler::Lebesgue, &SystemSpec::<f64>::tent(), 100_000, 3).unwrap();
        let est = set_mass(&m, |x| (0.4..=0.6).contains(&x));
        assert!(
            (est.value - 0.2).abs() <= 3.0 * est.standard_error,
            "{est:?}"
        );
        assert!((est.standard_error - (0.2f64 * 0.8 / 1e5).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn denjoy_cloud_avoids_gaps() {
        let model = DenjoyModel::new(golden(), 0.5, 0.5, 40).unwrap();
        let s = SystemSpec::denjoy(model.clone());
        let m = sample_measure(&Sampler::DenjoyPushforward, &s, 100_000, 5).unwrap();
        for k in -40..=40 {
            let (l, r) = model.gap(k).unwrap();
            assert!(m.points().iter().all(|&p| !(p > l && p < r)), "gap {k} hit");
        }
        let (l, r) = model.gap(0).unwrap();
        assert_eq!(set_mass(&m, |x| x > l && x < r).value, 0.0);
    }

    #[test]
    fn identity_bowen_ball() {
        let s = SystemSpec::identity(Space::Interval);
        let m = sample_measure(&Sampler::Lebesgue, &s, 100_000, 11).unwrap();
        for n in [1, 3, 10] {
            let est = bowen_ball_mass(&m, &s, 0.5, n, 0.1).unwrap();
            assert!((est.value - 0.2).abs() <= 3.0 * est.standard_error);
        }
        assert!(bowen_ball_mass(&m, &s, 0.5, 0, 0.1).is_err());
        assert!(bowen_ball_mass(&m, &s, 0.5, 1, 0.0).is_err());
    }

    #[test]
    fn interval_wraps_on_circle() {
        let arc = Interval::new(0.9, 0.1, Space::Circle);
        assert!(arc.contains(0.95f64));
        assert!(arc.contains(0.05));
        assert!(!arc.contains(0.5));
        assert!(!Interval::new(0.9, 0.1, Space::Interval).contains(0.95f64));
    }

    #[test]
    fn atom_is_not_invariant() {
        let tent = SystemSpec::<f64>::tent();
        let m = sample_measure(&Sampler::Atomic { atoms: vec![0.3] }, &tent, 1, 0).unwrap();
        let d = pushforward_discrepancy(&m, &tent, &[Interval::new(0.2, 0.4, Space::Interval)])
            .unwrap();
        assert_eq!(d.value, 1.0);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let s = SystemSpec::<f64>::tent();
        let m = sample_measure(&Sampler::Lebesgue, &s, 50, 2).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"point,weight\n"));
        let back = EmpiricalMeasure::<f64>::read_csv(&buf[..], Space::Interval).unwrap();
        assert_eq!(back.points(), m.points());
        assert_eq!(back.weights(), m.weights());
        assert!(EmpiricalMeasure::<f64>::read_csv(&b"0.5,1\n"[..], Space::Interval).is_err());
        assert!(EmpiricalMeasure::<f64>::read_csv(
            &b"point,weight\n0.5,0.7\n"[..],
            Space::Interval
        )
        .is_err());
    }

    #[test]
    fn sampler_text_round_trip() {
        for t in [
            "lebesgue",
            "denjoy-pushforward",
            "birkhoff:x0=0.3,burn_in=5",
            "atomic:0.5,0.25",
        ] {
            assert_eq!(Sampler::<f64>::parse(t).unwrap().to_string(), t);
        }
        assert!(Sampler::<f64>::parse("gaussian").is_err());
        assert!(Sampler::<f64>::parse("birkhoff:burn_in=3").is_err());
    }
}
