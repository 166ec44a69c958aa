//! Stable classes, recurrence, Lyapunov probes, scrambled pairs and wandering
//! intervals.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::orbit_into;
use crate::dynamics::space::{wrap, Space};
use crate::dynamics::system::{Family, SystemSpec};
use crate::error::{invalid, Result};
use crate::measure::{EmpiricalMeasure, MassEstimate};
use crate::scalar::Scalar;
use crate::stats::compensated_sum;

/// Empirical `W^s(p)`: cloud points whose orbit stays within `tol` of the orbit of
/// `p` over the trailing window `[horizon − horizon/10, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StableClassEstimate<T> {
    pub anchor: T,
    pub mass: MassEstimate,
    pub horizon: usize,
    pub tol: T,
    pub member_indices: Vec<usize>,
}

/// Precomputed trailing orbit windows of a cloud, reused across anchors.
pub struct StableClassProbe<'a, T> {
    system: &'a SystemSpec<T>,
    measure: &'a EmpiricalMeasure<T>,
    horizon: usize,
    width: usize,
    /// `tails[i * (width + 1) + j]` is `f^{horizon − width + j}(y_i)`.
    tails: Vec<T>,
}

impl<'a, T: Scalar> StableClassProbe<'a, T> {
    pub fn new(
        system: &'a SystemSpec<T>,
        measure: &'a EmpiricalMeasure<T>,
        horizon: usize,
    ) -> Result<Self> {
        if horizon < 10 {
            return Err(invalid("stable classes need horizon ≥ 10"));
        }
        let width = horizon / 10;
        let tails = measure
            .points()
            .par_iter()
            .flat_map_iter(|&y| trailing_window(system, y, horizon, width))
            .collect();
        Ok(Self {
            system,
            measure,
            horizon,
            width,
            tails,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mass_for(&self, anchor: T, tol: T) -> Result<StableClassEstimate<T>> {
        if !(tol > T::zero()) {
            return Err(invalid("tol must be positive"));
        }
        let anchor = self.system.space().check(anchor)?;
        let reference = trailing_window(self.system, anchor, self.horizon, self.width);
        let row = self.width + 1;
        let member_indices: Vec<usize> = self
            .tails
            .par_chunks(row)
            .enumerate()
            .filter(|(_, tail)| {
                tail.iter()
                    .zip(&reference)
                    .all(|(&a, &b)| self.system.distance(a, b) < tol)
            })
            .map(|(i, _)| i)
            .collect();
        let w = self.measure.weights();
        let mass = self
            .measure
            .estimate(compensated_sum(member_indices.iter().map(|&i| w[i])));
        Ok(StableClassEstimate {
            anchor,
            mass,
            horizon: self.horizon,
            tol,
            member_indices,
        })
    }
}

fn trailing_window<T: Scalar>(
    system: &SystemSpec<T>,
    x: T,
    horizon: usize,
    width: usize,
) -> Vec<T> {
    let mut x = x;
    for _ in 0..horizon - width {
        x = system.step(x);
    }
    let mut out = Vec::with_capacity(width + 1);
    out.push(x);
    for _ in 0..width {
        x = system.step(x);
        out.push(x);
    }
    out
}

pub fn stable_class_mass<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    p: T,
    horizon: usize,
    tol: T,
) -> Result<StableClassEstimate<T>> {
    StableClassProbe::new(system, measure, horizon)?.mass_for(p, tol)
}

/// Anchors grouped by the point their orbit has settled on at `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct StableClassPartition<T> {
    /// `(limit point, anchor indices)` in order of first appearance.
    pub classes: Vec<(T, Vec<usize>)>,
    /// Anchors whose orbit still moves by more than `key_tol` per step at `horizon`.
    pub unconverged: Vec<usize>,
}

/// Groups anchors whose orbits converge to the same point (within `key_tol`). Only
/// meaningful for systems whose orbits settle on fixed points.
pub fn stable_classes<T: Scalar>(
    system: &SystemSpec<T>,
    anchors: &[T],
    horizon: usize,
    key_tol: T,
) -> Result<StableClassPartition<T>> {
    if !(key_tol > T::zero()) {
        return Err(invalid("key_tol must be positive"));
    }
    for &a in anchors {
        system.space().check(a)?;
    }
    let ends: Vec<(T, T)> = anchors
        .par_iter()
        .map(|&a| {
            let mut x = a;
            for _ in 0..horizon {
                x = system.step(x);
            }
            (x, system.step(x))
        })
        .collect();
    let mut classes: Vec<(T, Vec<usize>)> = Vec::new();
    let mut unconverged = Vec::new();
    for (i, &(limit, next)) in ends.iter().enumerate() {
        if system.distance(limit, next) > key_tol {
            unconverged.push(i);
            continue;
        }
        match classes
            .iter_mut()
            .find(|(key, _)| system.distance(*key, limit) <= key_tol)
        {
            Some((_, members)) => members.push(i),
            None => classes.push((limit, vec![i])),
        }
    }
    Ok(StableClassPartition {
        classes,
        unconverged,
    })
}

/// Weighted fraction of cloud points returning within `tol` of themselves at some
/// `n ∈ [horizon/2, horizon]`.
pub fn recurrence_fraction<T: Scalar>(
    system: &SystemSpec<T>,
    measure: &EmpiricalMeasure<T>,
    horizon: usize,
    tol: T,
) -> Result<f64> {
    if horizon < 10 {
        return Err(invalid("recurrence needs horizon ≥ 10"));
    }
    if !(tol > T::zero()) {
        return Err(invalid("tol must be positive"));
    }
    let start = horizon / 2;
    let returns: Vec<bool> = measure
        .points()
        .par_iter()
        .map(|&x0| {
            let mut x = x0;
            for n in 1..=horizon {
                x = system.step(x);
                if n >= start && system.distance(x, x0) < tol {
                    return true;
                }
            }
            false
        })
        .collect();
    Ok(compensated_sum(
        returns
            .iter()
            .zip(measure.weights())
            .filter(|(r, _)| **r)
            .map(|(_, w)| *w),
    ))
}

/// Fraction of samples `x` with a witness `y` (another sample, `d(x,y) < radius`)
/// whose orbit separates from that of `x` by more than `epsilon` within `horizon`
/// steps.
pub fn lyapunov_violation_density<T: Scalar>(
    system: &SystemSpec<T>,
    samples: &[T],
    epsilon: T,
    radius: T,
    horizon: usize,
) -> Result<f64> {
    if samples.len() < 2 {
        return Err(invalid("Lyapunov probe needs at least two samples"));
    }
    if !(epsilon > T::zero() && radius > T::zero()) {
        return Err(invalid("epsilon and radius must be positive"));
    }
    for &s in samples {
        system.space().check(s)?;
    }
    let len = horizon + 1;
    let orbits: Vec<Vec<T>> = samples
        .par_iter()
        .map(|&x| {
            let mut o = Vec::with_capacity(len);
            orbit_into(system, x, len, &mut o);
            o
        })
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].partial_cmp(&samples[b]).expect("finite samples"));
    let n = order.len();
    let circle = system.space() == Space::Circle;
    let separates = |i: usize, j: usize| {
        orbits[i]
            .iter()
            .zip(&orbits[j])
            .any(|(&a, &b)| system.distance(a, b) > epsilon)
    };
    let violated: usize = (0..n)
        .into_par_iter()
        .map(|pos| {
            let i = order[pos];
            // walk outwards in sorted order while still within radius
            for dir in [1isize, -1] {
                for step in 1..n {
                    let raw = pos as isize + dir * step as isize;
                    let q = if circle {
                        raw.rem_euclid(n as isize) as usize
                    } else if raw < 0 || raw >= n as isize {
                        break;
                    } else {
                        raw as usize
                    };
                    let j = order[q];
                    if j == i {
                        break;
                    }
                    if !(system.distance(samples[i], samples[j]) < radius) {
                        break;
                    }
                    if separates(i, j) {
                        return 1usize;
                    }
                }
            }
            0
        })
        .sum();
    Ok(violated as f64 / n as f64)
}

/// Finite-horizon estimates of `liminf` and `limsup` of `d(f^n x, f^n y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrambledStats<T> {
    pub x: T,
    pub y: T,
    pub liminf_est: T,
    pub limsup_est: T,
    pub horizon: usize,
    pub burn_in: usize,
}

impl<T: Scalar> ScrambledStats<T> {
    pub fn is_scrambled(&self, delta: T, liminf_tol: T) -> bool {
        self.liminf_est < liminf_tol && self.limsup_est > delta
    }
}

pub fn write_scrambled_csv<T: Scalar, W: Write>(
    writer: W,
    stats: &[ScrambledStats<T>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "liminf", "limsup", "horizon"])?;
    for s in stats {
        w.write_record([
            s.x.to_string(),
            s.y.to_string(),
            s.liminf_est.to_string(),
            s.limsup_est.to_string(),
            s.horizon.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn pair_extremes<T: Scalar>(system: &SystemSpec<T>, ox: &[T], oy: &[T], burn_in: usize) -> (T, T) {
    ox[burn_in..]
        .iter()
        .zip(&oy[burn_in..])
        .map(|(&a, &b)| system.distance(a, b))
        .fold((T::infinity(), T::zero()), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        })
}

/// Min and max of the pair distance over `n ∈ [burn_in, horizon]`.
pub fn scrambled_pair_stats<T: Scalar>(
    system: &SystemSpec<T>,
    x: T,
    y: T,
    horizon: usize,
    burn_in: usize,
) -> Result<ScrambledStats<T>> {
    if burn_in >= horizon {
        return Err(invalid("burn_in must be smaller than horizon"));
    }
    let space = system.space();
    let (x, y) = (space.check(x)?, space.check(y)?);
    let mut ox = Vec::new();
    let mut oy = Vec::new();
    orbit_into(system, x, horizon + 1, &mut ox);
    orbit_into(system, y, horizon + 1, &mut oy);
    let (liminf_est, limsup_est) = pair_extremes(system, &ox, &oy, burn_in);
    Ok(ScrambledStats {
        x,
        y,
        liminf_est,
        limsup_est,
        horizon,
        burn_in,
    })
}

/// Greedy subset of `candidates` (scanned in index order) in which every pair has
/// `liminf_est < liminf_tol` and `limsup_est > delta`.
pub fn greedy_scrambled_set<T: Scalar>(
    system: &SystemSpec<T>,
    candidates: &[T],
    delta: T,
    horizon: usize,
    burn_in: usize,
    liminf_tol: T,
) -> Result<Vec<T>> {
    if !(delta >= T::zero()) {
        return Err(invalid("delta must be nonnegative"));
    }
    if burn_in >= horizon {
        return Err(invalid("burn_in must be smaller than horizon"));
    }
    for &c in candidates {
        system.space().check(c)?;
    }
    let orbits: Vec<Vec<T>> = candidates
        .par_iter()
        .map(|&c| {
            let mut o = Vec::new();
            orbit_into(system, c, horizon + 1, &mut o);
            o
        })
        .collect();
    let mut members: Vec<usize> = Vec::new();
    for i in 0..candidates.len() {
        let fits = members.iter().all(|&j| {
            let (lo, hi) = pair_extremes(system, &orbits[i], &orbits[j], burn_in);
            lo < liminf_tol && hi > delta
        });
        if fits {
            members.push(i);
        }
    }
    Ok(members.into_iter().map(|i| candidates[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WanderingStatus {
    Wandering,
    NotWandering,
    Inconclusive,
}

impl fmt::Display for WanderingStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WanderingStatus::Wandering => "wandering",
            WanderingStatus::NotWandering => "not-wandering",
            WanderingStatus::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WanderingVerdict<T> {
    pub interval: (T, T),
    pub verdict: WanderingStatus,
    /// `(m, n)` with `m < n` and `f^m(J) ∩ f^n(J) ≠ ∅`.
    pub first_collision: Option<(usize, usize)>,
    pub horizon: usize,
    pub pairs_checked: usize,
    /// Set when the images stayed disjoint but both endpoints settled on a periodic
    /// orbit of this period, which disqualifies `J`.
    pub attracting_period: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WanderingSummary {
    pub interval: [f64; 2],
    pub verdict: WanderingStatus,
    pub first_collision: Option<[usize; 2]>,
    pub horizon: usize,
}

impl<T: Scalar> WanderingVerdict<T> {
    pub fn summary(&self) -> WanderingSummary {
        WanderingSummary {
            interval: [self.interval.0.as_f64(), self.interval.1.as_f64()],
            verdict: self.verdict,
            first_collision: self.first_collision.map(|(m, n)| [m, n]),
            horizon: self.horizon,
        }
    }
}

/// A closed interval, or a closed arc from `start` counter-clockwise to `end`.
/// Arc images are tracked through the endpoint orbits so rounding cannot
/// accumulate in the length.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece<T> {
    Segment(T, T),
    Arc { start: T, end: T, full: bool },
}

impl<T: Scalar> Piece<T> {
    fn arc_len(start: T, end: T) -> T {
        wrap(end - start)
    }

    fn meets(&self, other: &Self) -> bool {
        match (*self, *other) {
            (Piece::Segment(a, b), Piece::Segment(c, d)) => a.max(c) <= b.min(d),
            (
                Piece::Arc {
                    start: s1,
                    end: e1,
                    full: f1,
                },
                Piece::Arc {
                    start: s2,
                    end: e2,
                    full: f2,
                },
            ) => {
                f1 || f2
                    || wrap(s2 - s1) <= Self::arc_len(s1, e1)
                    || wrap(s1 - s2) <= Self::arc_len(s2, e2)
            }
            _ => unreachable!("pieces of one system share a space"),
        }
    }
}

fn image<T: Scalar>(system: &SystemSpec<T>, piece: Piece<T>) -> Piece<T> {
    match piece {
        Piece::Segment(a, b) => {
            let (fa, fb) = (system.step(a), system.step(b));
            let mut lo = fa.min(fb);
            let mut hi = fa.max(fb);
            if !system.is_homeomorphism() {
                for t in system.turning_points() {
                    if t > a && t < b {
                        let ft = system.step(t);
                        lo = lo.min(ft);
                        hi = hi.max(ft);
                    }
                }
            }
            Piece::Segment(lo, hi)
        }
        Piece::Arc { full: true, .. } => piece,
        Piece::Arc { start, end, .. } => {
            let full = match system.family() {
                Family::Doubling => {
                    let len = Piece::arc_len(start, end);
                    len + len >= T::one()
                }
                _ => false,
            };
            Piece::Arc {
                start: system.step(start),
                end: system.step(end),
                full,
            }
        }
    }
}

const BASIN_TOL: f64 = 1e-9;
const MAX_PERIOD: usize = 64;

fn settled_period<T: Scalar>(system: &SystemSpec<T>, x: T, horizon: usize) -> Option<usize> {
    let mut o = Vec::new();
    orbit_into(system, x, horizon + MAX_PERIOD + 1, &mut o);
    let base = o[horizon];
    (1..=MAX_PERIOD).find(|&p| system.distance(o[horizon + p], base).as_f64() < BASIN_TOL)
}

/// Tracks `f^n(J)` for `0 ≤ n < horizon` and looks for the first overlap.
pub fn wandering_interval_verdict<T: Scalar>(
    system: &SystemSpec<T>,
    interval: (T, T),
    horizon: usize,
) -> Result<WanderingVerdict<T>> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(invalid(format!("interval [{a}, {b}] is degenerate")));
    }
    let space = system.space();
    space.check(a)?;
    match space {
        Space::Interval => {
            space.check(b)?;
        }
        Space::Circle => {
            if !(b <= T::one()) {
                return Err(invalid("arc end must not exceed 1"));
            }
        }
    }
    let first = match space {
        Space::Interval => Piece::Segment(a, b),
        Space::Circle => Piece::Arc {
            start: a,
            end: wrap(b),
            full: b - a >= T::one(),
        },
    };
    let mut images: Vec<Piece<T>> = Vec::with_capacity(horizon);
    let mut pairs = 0usize;
    let mut current = first;
    for n in 0..horizon {
        if n > 0 {
            current = image(system, current);
        }
        for (m, prev) in images.iter().enumerate() {
            pairs += 1;
            if prev.meets(&current) {
                return Ok(WanderingVerdict {
                    interval,
                    verdict: WanderingStatus::NotWandering,
                    first_collision: Some((m, n)),
                    horizon,
                    pairs_checked: pairs,
                    attracting_period: None,
                });
            }
        }
        images.push(current);
    }
    let end = if space == Space::Circle { wrap(b) } else { b };
    let period = match (
        settled_period(system, a, horizon),
        settled_period(system, end, horizon),
    ) {
        (Some(p), Some(q)) => Some(p.max(q)),
        _ => None,
    };
    Ok(WanderingVerdict {
        interval,
        verdict: if period.is_some() {
            WanderingStatus::Inconclusive
        } else {
            WanderingStatus::Wandering
        },
        first_collision: None,
        horizon,
        pairs_checked: pairs,
        attracting_period: period,
    })
}
