//! Independent reference computations. Nothing here calls into the library's
//! dynamics; maps are written out from their textbook formulas.
#![allow(dead_code)]

pub fn tent(x: f64) -> f64 {
    1.0 - (2.0 * x - 1.0).abs()
}

pub fn doubling(x: f64) -> f64 {
    let y = 2.0 * x;
    y - y.floor()
}

pub fn abs_dist(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

pub fn arc_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 1.0;
    d.min(1.0 - d)
}

/// Fraction of the uniform grid `{(i + 0.5)/size}` inside `B[x, n, delta]` for the
/// map `f` (n orbit points, indices `0..n`).
pub fn grid_ball_mass(
    f: fn(f64) -> f64,
    dist: fn(f64, f64) -> f64,
    x: f64,
    n: usize,
    delta: f64,
    size: usize,
) -> f64 {
    let mut ox = Vec::with_capacity(n);
    let mut p = x;
    for _ in 0..n {
        ox.push(p);
        p = f(p);
    }
    let inside = (0..size)
        .filter(|&i| {
            let mut y = (i as f64 + 0.5) / size as f64;
            for &q in &ox {
                if dist(y, q) > delta {
                    return false;
                }
                y = f(y);
            }
            true
        })
        .count();
    inside as f64 / size as f64
}

/// Binomial standard error of a mass `p` estimated from `size` samples.
pub fn binomial_se(p: f64, size: usize) -> f64 {
    (p * (1.0 - p) / size as f64).sqrt()
}

/// Least-squares slope, written out independently of the library's fit.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Denjoy insertion map written out as a plain sum over gaps.
pub fn denjoy_phi(t: f64, alpha: f64, lambda: f64, total_gap: f64, k_max: i64) -> f64 {
    let c = total_gap * (1.0 - lambda) / (1.0 + lambda);
    let t = t - t.floor();
    let mut s = (1.0 - total_gap) * t;
    for k in -k_max..=k_max {
        let theta = (k as f64 * alpha).rem_euclid(1.0);
        if theta < t {
            s += c * lambda.powi(k.unsigned_abs() as i32);
        }
    }
    s
}
