//! Topological entropy from greedy `(n, ε)`-separated subsets of a uniform grid.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::space::Space;
use crate::dynamics::system::SystemSpec;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::stats::fit_line;

/// Grid size used when callers do not choose one.
pub const DEFAULT_GRID: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate<T> {
    pub epsilons: Vec<T>,
    pub n_range: (usize, usize),
    /// `counts[e][n - n_lo]` is `N(n, epsilons[e])`.
    pub counts: Vec<Vec<usize>>,
    pub slope_per_epsilon: Vec<f64>,
    /// Largest per-`ε` slope, floored at zero.
    pub h_top_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropySummary {
    pub h_top_estimate: f64,
    pub slope_per_epsilon: Vec<f64>,
}

impl<T: Scalar> EntropyEstimate<T> {
    pub fn count(&self, epsilon_index: usize, n: usize) -> usize {
        self.counts[epsilon_index][n - self.n_range.0]
    }

    pub fn summary(&self) -> EntropySummary {
        EntropySummary {
            h_top_estimate: self.h_top_estimate,
            slope_per_epsilon: self.slope_per_epsilon.clone(),
        }
    }

    /// `epsilon,n,count,log_count` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epsilon", "n", "count", "log_count"])?;
        for (e, eps) in self.epsilons.iter().enumerate() {
            for (k, &c) in self.counts[e].iter().enumerate() {
                w.write_record([
                    eps.to_string(),
                    (self.n_range.0 + k).to_string(),
                    c.to_string(),
                    (c as f64).ln().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct GridOrbits<T> {
    coords: Vec<T>,
    /// Row-major, `len` points per grid node.
    orbits: Vec<T>,
    len: usize,
    circle: bool,
}

impl<T: Scalar> GridOrbits<T> {
    fn new(system: &SystemSpec<T>, grid_size: usize, len: usize) -> Self {
        let space = system.space();
        let coords: Vec<T> = (0..grid_size)
            .map(|i| grid_point(space, i, grid_size))
            .collect();
        let orbits = coords
            .par_iter()
            .flat_map_iter(|&x| {
                let mut row = Vec::with_capacity(len);
                let mut y = x;
                for i in 0..len {
                    if i > 0 {
                        y = system.step(y);
                    }
                    row.push(y);
                }
                row
            })
            .collect();
        Self {
            coords,
            orbits,
            len,
            circle: space == Space::Circle,
        }
    }

    fn row(&self, i: usize, n: usize) -> &[T] {
        &self.orbits[i * self.len..i * self.len + n]
    }

    /// Greedy scan in ascending grid order. A candidate can only clash with selected
    /// points within `epsilon` of it at time 0, which on a sorted grid are the most
    /// recent selections (plus, on the circle, the earliest ones across `0`).
    fn greedy(&self, system: &SystemSpec<T>, n: usize, epsilon: T) -> usize {
        let separated = |a: usize, b: usize| {
            self.row(a, n)
                .iter()
                .zip(self.row(b, n))
                .any(|(&p, &q)| system.distance(p, q) > epsilon)
        };
        let mut selected: Vec<usize> = Vec::new();
        for i in 0..self.coords.len() {
            let x = self.coords[i];
            let mut ok = true;
            for &s in selected.iter().rev() {
                if x - self.coords[s] > epsilon {
                    break;
                }
                if !separated(i, s) {
                    ok = false;
                    break;
                }
            }
            if ok && self.circle {
                for &s in &selected {
                    if self.coords[s] + T::one() - x > epsilon {
                        break;
                    }
                    if !separated(i, s) {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                selected.push(i);
            }
        }
        selected.len()
    }
}

fn grid_point<T: Scalar>(space: Space, i: usize, size: usize) -> T {
    match space {
        Space::Interval => T::lit(i as f64 / (size - 1) as f64),
        Space::Circle => T::lit(i as f64 / size as f64),
    }
}

fn grid_spacing(space: Space, size: usize) -> f64 {
    match space {
        Space::Interval => 1.0 / (size - 1) as f64,
        Space::Circle => 1.0 / size as f64,
    }
}

fn check_grid<T: Scalar>(space: Space, epsilon: T, grid_size: usize) -> Result<()> {
    if !(epsilon > T::zero()) {
        return Err(invalid("epsilon must be positive"));
    }
    if grid_size < 2 {
        return Err(invalid("grid needs at least two points"));
    }
    let spacing = grid_spacing(space, grid_size);
    if spacing > epsilon.as_f64() / 4.0 {
        return Err(invalid(format!(
            "grid spacing {spacing} is coarser than epsilon/4 = {}",
            epsilon.as_f64() / 4.0
        )));
    }
    Ok(())
}

/// Size of a greedy maximal `(n, ε)`-separated subset of a uniform grid.
pub fn separated_set_size<T: Scalar>(
    system: &SystemSpec<T>,
    n: usize,
    epsilon: T,
    grid_size: usize,
) -> Result<usize> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    check_grid(system.space(), epsilon, grid_size)?;
    Ok(GridOrbits::new(system, grid_size, n).greedy(system, n, epsilon))
}

/// Fits `log N(n, ε)` against `n` over `n_range` for each `ε`.
pub fn topological_entropy_estimate<T: Scalar>(
    system: &SystemSpec<T>,
    epsilons: &[T],
    n_range: (usize, usize),
    grid_size: usize,
) -> Result<EntropyEstimate<T>> {
    let (lo, hi) = n_range;
    if lo == 0 || lo >= hi {
        return Err(invalid(format!(
            "n range [{lo},{hi}] must satisfy 1 ≤ n_lo < n_hi"
        )));
    }
    if epsilons.is_empty() {
        return Err(invalid("need at least one epsilon"));
    }
    if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid("epsilon list must be strictly descending"));
    }
    for &e in epsilons {
        check_grid(system.space(), e, grid_size)?;
    }
    let grid = GridOrbits::new(system, grid_size, hi);
    let cells: Vec<(usize, usize)> = (0..epsilons.len())
        .flat_map(|e| (lo..=hi).map(move |n| (e, n)))
        .collect();
    let flat: Vec<usize> = cells
        .par_iter()
        .map(|&(e, n)| grid.greedy(system, n, epsilons[e]))
        .collect();
    let width = hi - lo + 1;
    let counts: Vec<Vec<usize>> = flat.chunks(width).map(<[usize]>::to_vec).collect();
    let xs: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let slope_per_epsilon: Vec<f64> = counts
        .iter()
        .map(|row| {
            let ys: Vec<f64> = row.iter().map(|&c| (c as f64).ln()).collect();
            fit_line(&xs, &ys).map_or(0.0, |f| f.slope)
        })
        .collect();
    let h_top_estimate = slope_per_epsilon.iter().copied().fold(0.0f64, f64::max);
    Ok(EntropyEstimate {
        epsilons: epsilons.to_vec(),
        n_range,
        counts,
        slope_per_epsilon,
        h_top_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_count_is_constant_in_n() {
        let id = SystemSpec::<f64>::identity(Space::Interval);
        let a = separated_set_size(&id, 1, 0.1, 10_000).unwrap();
        let b = separated_set_size(&id, 20, 0.1, 10_000).unwrap();
        assert_eq!(a, b);
        // greedy on [0,1] picks 0, 0.1+h, 0.2+2h, …
        assert!((9..=10).contains(&a), "{a}");
    }

    #[test]
    fn rotation_count_is_bounded() {
        let rot = SystemSpec::<f64>::golden_rotation();
        for n in [1, 6, 12] {
            let c = separated_set_size(&rot, n, 0.1, 10_000).unwrap();
            assert!(c <= 11, "n={n} count={c}");
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let tent = SystemSpec::<f64>::tent();
        assert!(separated_set_size(&tent, 3, 0.1, 20).is_err());
        assert!(separated_set_size(&tent, 0, 0.1, 1000).is_err());
        assert!(topological_entropy_estimate(&tent, &[0.1, 0.2], (1, 5), 1000).is_err());
        assert!(topological_entropy_estimate(&tent, &[0.1], (5, 5), 1000).is_err());
    }

    #[test]
    fn csv_layout() {
        let tent = SystemSpec::<f64>::tent();
        let e = topological_entropy_estimate(&tent, &[0.2], (1, 3), 1000).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epsilon,n,count,log_count\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
