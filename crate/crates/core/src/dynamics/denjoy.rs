//! A Denjoy homeomorphism of the circle built by blowing up the orbit of `0` under
//! the rotation by `alpha` into a sequence of gaps.
//!
//! Gap `G_k` is inserted at `frac(k·alpha)` with length `l_k = c·lambda^|k|`, where
//! `c` is chosen so that all gaps (including the ones past the truncation) add up to
//! `total_gap`. The insertion map
//!
//! ```text
//! Φ(t) = (1 − total_gap)·t + Σ_{|k|≤K, frac(k·alpha) < t} l_k
//! ```
//!
//! semi-conjugates the rotation to the homeomorphism `h`: `h(Φ(t)) = Φ(t + alpha)`
//! off the gaps, and `h` maps `G_k` affinely onto `G_{k+1}`. The image of `Φ` is
//! (up to truncation) the minimal Cantor set, and the push-forward of Lebesgue
//! measure under `Φ` is the unique invariant measure of `h`.

use crate::dynamics::space::wrap;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Default number of gap indices on each side of `0`.
pub const DEFAULT_TRUNCATION: usize = 40;

/// Iteration cap for [`DenjoyModel::invert_by_bisection`].
pub const BISECTION_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct DenjoyModel<T> {
    alpha: T,
    lambda: T,
    total_gap: T,
    truncation: usize,
    scale: T,
    tail: T,
    /// Gap positions `frac(k·alpha)` sorted ascending.
    sorted_theta: Vec<T>,
    /// Left endpoints `Φ(θ)` in the same order.
    sorted_left: Vec<T>,
    /// Gap lengths in the same order.
    sorted_len: Vec<T>,
    /// Gap index `k` in the same order.
    sorted_k: Vec<i64>,
    /// `prefix[j]` is the total length of the first `j` sorted gaps.
    prefix: Vec<T>,
    /// Position in the sorted tables of gap `k`, stored at `k + K`.
    rank_of: Vec<usize>,
}

impl<T: Scalar> DenjoyModel<T> {
    pub fn new(alpha: T, lambda: T, total_gap: T, truncation: usize) -> Result<Self> {
        if !(alpha.is_finite()) {
            return Err(invalid("alpha must be finite"));
        }
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(invalid(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if !(total_gap > T::zero() && total_gap < T::one()) {
            return Err(invalid(format!(
                "total_gap must lie in (0,1), got {total_gap}"
            )));
        }
        if truncation == 0 {
            return Err(invalid("truncation K must be positive"));
        }
        let alpha_c = wrap(alpha);
        if alpha_c == T::zero() {
            return Err(invalid("alpha must not be an integer"));
        }
        let one = T::one();
        let two = T::lit(2.0);
        // Σ_{k∈ℤ} c·λ^|k| = c·(1+λ)/(1−λ)
        let scale = total_gap * (one - lambda) / (one + lambda);
        let k_max = truncation as i64;
        let mut gaps: Vec<(T, T, i64)> = (-k_max..=k_max)
            .map(|k| {
                let theta = wrap(T::lit(k as f64) * alpha_c);
                (theta, scale * lambda.powi(k.unsigned_abs() as i32), k)
            })
            .collect();
        gaps.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite gap positions"));
        for w in gaps.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(invalid(format!(
                    "gap positions of k={} and k={} coincide; alpha is not irrational at this precision",
                    w[0].2, w[1].2
                )));
            }
        }
        let tail = two * scale * lambda.powi(truncation as i32 + 1) / (one - lambda);
        let mut prefix = Vec::with_capacity(gaps.len() + 1);
        prefix.push(T::zero());
        let mut acc = T::zero();
        for g in &gaps {
            acc = acc + g.1;
            prefix.push(acc);
        }
        let sorted_theta: Vec<T> = gaps.iter().map(|g| g.0).collect();
        let sorted_len: Vec<T> = gaps.iter().map(|g| g.1).collect();
        let sorted_k: Vec<i64> = gaps.iter().map(|g| g.2).collect();
        let sorted_left: Vec<T> = gaps
            .iter()
            .enumerate()
            .map(|(j, g)| (one - total_gap) * g.0 + prefix[j])
            .collect();
        let mut rank_of = vec![0usize; gaps.len()];
        for (j, &k) in sorted_k.iter().enumerate() {
            rank_of[(k + k_max) as usize] = j;
        }
        Ok(Self {
            alpha,
            lambda,
            total_gap,
            truncation,
            scale,
            tail,
            sorted_theta,
            sorted_left,
            sorted_len,
            sorted_k,
            prefix,
            rank_of,
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn total_gap(&self) -> T {
        self.total_gap
    }
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Length of the central gap `G_0`, the biggest one.
    pub fn biggest_gap(&self) -> T {
        self.scale
    }

    /// Σ_{|k|>K} l_k: the gap length dropped by truncation.
    pub fn tail_mass(&self) -> T {
        self.tail
    }

    pub fn gap_length(&self, k: i64) -> T {
        self.scale * self.lambda.powi(k.unsigned_abs() as i32)
    }

    /// Closed gap `G_k = [Φ(θ_k), Φ(θ_k) + l_k]` for `|k| ≤ K`.
    pub fn gap(&self, k: i64) -> Option<(T, T)> {
        let k_max = self.truncation as i64;
        if k.abs() > k_max {
            return None;
        }
        let j = self.rank_of[(k + k_max) as usize];
        Some((
            self.sorted_left[j],
            self.sorted_left[j] + self.sorted_len[j],
        ))
    }

    /// Index `k` of the gap whose closure contains `y`, if any.
    pub fn gap_containing(&self, y: T) -> Option<i64> {
        let j = self.sorted_left.partition_point(|&l| l <= y);
        if j == 0 {
            return None;
        }
        let g = j - 1;
        (y <= self.sorted_left[g] + self.sorted_len[g]).then(|| self.sorted_k[g])
    }

    /// The insertion map `Φ` on `[0,1)`; arguments are reduced mod 1.
    pub fn phi(&self, t: T) -> T {
        let t = wrap(t);
        let j = self.sorted_theta.partition_point(|&th| th < t);
        (T::one() - self.total_gap) * t + self.prefix[j]
    }

    /// Rotation parameter `t` with `Φ(t) ≤ y ≤ Φ(t⁺)`, read off the piecewise-affine
    /// structure of the truncated `Φ`.
    pub fn phi_inverse(&self, y: T) -> T {
        let (g, offset) = self.locate(y);
        let t = self.sorted_theta[g] + offset;
        // past the last gap the truncated Φ tops out at 1 − tail
        if t >= T::one() {
            T::one() - T::epsilon()
        } else {
            t
        }
    }

    /// Sorted index `g` of the last gap starting at or before `y`, and the parameter
    /// offset `t − θ_g ≥ 0` of `y` past that gap (zero inside the gap).
    fn locate(&self, y: T) -> (usize, T) {
        let j = self.sorted_left.partition_point(|&l| l <= y);
        // G_0 starts at 0, so every y ≥ 0 has a gap at or before it
        let g = j.saturating_sub(1);
        let right = self.sorted_left[g] + self.sorted_len[g];
        if y <= right {
            (g, T::zero())
        } else {
            (g, (y - right) / (T::one() - self.total_gap))
        }
    }

    /// `Φ(s⁺)`: like [`Self::phi`] but counting a gap sitting exactly at `s`.
    fn phi_right(&self, s: T) -> T {
        let s = wrap(s);
        let j = self.sorted_theta.partition_point(|&th| th <= s);
        (T::one() - self.total_gap) * s + self.prefix[j]
    }

    /// Monotone bisection for `Φ^{-1}(y)` to absolute tolerance `tol` in `t`.
    /// Fails with [`Error::NumericFailure`] when the bracket cannot shrink below `tol`
    /// within [`BISECTION_CAP`] halvings (e.g. `tol` below the scalar's resolution).
    pub fn invert_by_bisection(&self, y: T, tol: T) -> Result<T> {
        let mut lo = T::zero();
        let mut hi = T::one();
        let half = T::lit(0.5);
        for _ in 0..BISECTION_CAP {
            if hi - lo <= tol {
                return Ok(lo);
            }
            let mid = lo + (hi - lo) * half;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.phi(mid) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NumericFailure {
            y: y.as_f64(),
            iterations: BISECTION_CAP,
        })
    }

    /// One step of the Denjoy homeomorphism.
    pub fn evaluate(&self, y: T) -> T {
        let y = wrap(y);
        if let Some(k) = self.gap_containing(y) {
            let (left, _) = self.gap(k).expect("gap in range");
            let offset = y - left;
            if k < self.truncation as i64 {
                let (next_left, _) = self.gap(k + 1).expect("gap in range");
                let ratio = self.gap_length(k + 1) / self.gap_length(k);
                return wrap(next_left + offset * ratio);
            }
            // G_{K+1} is not inserted: the last gap collapses onto a point
            let theta = wrap(T::lit((k + 1) as f64) * wrap(self.alpha));
            return wrap(self.phi(theta));
        }
        // Off the gaps, t = θ_k + offset lies just right of gap k, and t + alpha lies
        // just right of gap k+1. Anchoring on the table value θ_{k+1} keeps points
        // near a gap's right end from slipping to its left end through rounding.
        let (g, offset) = self.locate(y);
        let k = self.sorted_k[g];
        if k < self.truncation as i64 {
            let next = self.rank_of[(k + 1 + self.truncation as i64) as usize];
            wrap(self.phi_right(self.sorted_theta[next] + offset))
        } else {
            wrap(self.phi(self.sorted_theta[g] + offset + wrap(self.alpha)))
        }
    }

    /// Real-line displacement of the canonical lift at `y`, in `[0,1)`.
    pub fn lift_displacement(&self, y: T) -> T {
        wrap(self.evaluate(y) - y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    fn model() -> DenjoyModel<f64> {
        DenjoyModel::new(golden(), 0.5, 0.5, DEFAULT_TRUNCATION).unwrap()
    }

    #[test]
    fn phi_normalisation() {
        let m = model();
        assert_eq!(m.phi(0.0), 0.0);
        let top = m.phi(1.0 - 1e-15);
        assert!((top - 1.0).abs() < 1e-12, "Φ(1⁻) = {top}");
        assert!(m.tail_mass() < 1e-12);
    }

    #[test]
    fn biggest_gap_value() {
        // c = total_gap·(1−λ)/(1+λ) = 0.5·0.5/1.5
        assert!((model().biggest_gap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(model().gap(0), Some((0.0, model().biggest_gap())));
    }

    #[test]
    fn gaps_are_disjoint() {
        let m = model();
        let mut gs: Vec<(f64, f64)> = (-40..=40).map(|k| m.gap(k).unwrap()).collect();
        gs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in gs.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
    }

    #[test]
    fn gap_endpoints_go_to_gap_endpoints() {
        let m = model();
        for k in -40..40 {
            let (l, r) = m.gap(k).unwrap();
            let (nl, nr) = m.gap(k + 1).unwrap();
            assert!((m.evaluate(l) - nl).abs() < 1e-14, "k={k}");
            assert!((m.evaluate(r) - nr).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = model();
        for i in 1..1000 {
            let t = i as f64 / 1000.0 + 1.234e-5;
            let y = m.phi(t);
            assert!((m.phi_inverse(y) - t).abs() < 1e-12);
            let tb = m.invert_by_bisection(y, 1e-12).unwrap();
            assert!((tb - t).abs() < 2e-12);
        }
    }

    #[test]
    fn bisection_below_resolution_fails() {
        let m = DenjoyModel::<f32>::new(golden() as f32, 0.5, 0.5, 20).unwrap();
        let err = m.invert_by_bisection(0.4, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NumericFailure { .. }));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DenjoyModel::new(golden(), 1.0, 0.5, 40).is_err());
        assert!(DenjoyModel::new(golden(), 0.5, 0.0, 40).is_err());
        assert!(DenjoyModel::new(golden(), 0.5, 0.5, 0).is_err());
        assert!(DenjoyModel::new(0.5, 0.5, 0.5, 40).is_err());
        assert!(DenjoyModel::new(2.0, 0.5, 0.5, 40).is_err());
    }
}
