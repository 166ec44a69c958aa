//! Phase spaces, the map catalog and orbit computation.

pub mod denjoy;
pub mod space;
pub mod system;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::stats::compensated_sum;
use space::Metric;
use system::SystemSpec;

/// Forward orbit `x0, f(x0), …, f^n(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit<T> {
    pub points: Vec<T>,
}

impl<T: Scalar> Orbit<T> {
    pub fn x0(&self) -> T {
        self.points[0]
    }

    /// Number of stored points, `n + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn evaluate<T: Scalar>(system: &SystemSpec<T>, x: T) -> Result<T> {
    system.evaluate(x)
}

pub fn orbit<T: Scalar>(system: &SystemSpec<T>, x0: T, n: usize) -> Result<Orbit<T>> {
    let x0 = system.space().check(x0)?;
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0);
    let mut x = x0;
    for _ in 0..n {
        x = system.step(x);
        points.push(x);
    }
    Ok(Orbit { points })
}

/// Fills `out` with `f^0(x0), …, f^{len-1}(x0)` without domain checks.
pub(crate) fn orbit_into<T: Scalar>(system: &SystemSpec<T>, x0: T, len: usize, out: &mut Vec<T>) {
    out.clear();
    let mut x = x0;
    for i in 0..len {
        if i > 0 {
            x = system.step(x);
        }
        out.push(x);
    }
}

pub fn distance<T: Scalar>(metric: Metric, x: T, y: T) -> T {
    metric.distance(x, y)
}

/// Average lift displacement over `n` iterates starting at `x0`.
pub fn rotation_number_estimate<T: Scalar>(system: &SystemSpec<T>, x0: T, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("rotation number needs at least one iterate"));
    }
    let mut x = system.space().check(x0)?;
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        steps.push(system.lift_displacement(x)?.as_f64());
        x = system.step(x);
    }
    Ok(compensated_sum(steps) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::denjoy::DenjoyModel;
    use crate::dynamics::space::Space;

    #[test]
    fn orbit_examples() {
        let id = SystemSpec::identity(Space::Interval);
        assert_eq!(orbit(&id, 0.2f64, 3).unwrap().points, vec![0.2; 4]);

        let dbl = SystemSpec::<f64>::doubling();
        let o = orbit(&dbl, 0.1, 3).unwrap();
        for (a, b) in o.points.iter().zip([0.1, 0.2, 0.4, 0.8]) {
            assert!((a - b).abs() < 1e-15);
        }

        let tent = SystemSpec::<f64>::tent();
        let o = orbit(&tent, 0.4, 2).unwrap();
        assert_eq!(o.len(), 3);
        for (a, b) in o.points.iter().zip([0.4, 0.8, 0.4]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn orbit_rejects_out_of_space() {
        assert!(orbit(&SystemSpec::<f64>::doubling(), 1.0, 3).is_err());
    }

    #[test]
    fn orbit_generic_f32() {
        let o = orbit(&SystemSpec::<f32>::tent(), 0.25, 2).unwrap();
        assert!((o.points[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rotation_number_examples() {
        let rot = SystemSpec::rotation(0.25f64).unwrap();
        assert!((rotation_number_estimate(&rot, 0.3, 1000).unwrap() - 0.25).abs() < 1e-12);
        let ns = SystemSpec::north_south(0.0f64, 0.5).unwrap();
        assert!(rotation_number_estimate(&ns, 0.3, 10_000).unwrap().abs() < 1e-3);
        assert!(rotation_number_estimate(&SystemSpec::<f64>::tent(), 0.3, 10).is_err());
        assert!(rotation_number_estimate(&SystemSpec::<f64>::doubling(), 0.3, 10).is_err());
    }

    #[test]
    fn denjoy_rotation_number() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let m = DenjoyModel::new(alpha, 0.5, 0.5, 40).unwrap();
        let s = SystemSpec::denjoy(m);
        let rho = rotation_number_estimate(&s, 0.3, 100_000).unwrap();
        assert!((rho - alpha).abs() < 1e-3, "rho = {rho}");
    }
}
