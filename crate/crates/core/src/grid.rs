//! Deterministic sampling grids and fixed-order reductions.
//!
//! All phase averages in this crate run over Kronecker sequences (orbits of
//! the model's own rotation) instead of random samples, and all reductions
//! use a fixed pairwise tree, so results are bit-identical regardless of how
//! the per-point work is scheduled across threads.

/// Fixed offset for Kronecker phase grids (2 − φ).
pub const PHASE_SEED: f64 = 0.381_966_011_250_105_1;

/// Fractional part mapped into `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance from `x` to the nearest integer.
#[inline]
pub fn dist_to_integer(x: f64) -> f64 {
    let f = frac(x);
    f.min(1.0 - f)
}

/// Seed point for a `dim`-dimensional Kronecker grid.
pub fn phase_seed(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| frac(PHASE_SEED + 0.271_828_182_845_904_5 * i as f64))
        .collect()
}

/// Kronecker sequence `seed + j·alpha mod 1`, `j = 0..count`, on the torus
/// of dimension `alpha.len()`.
pub fn kronecker_grid(alpha: &[f64], count: usize) -> Vec<Vec<f64>> {
    let seed = phase_seed(alpha.len());
    let mut out = Vec::with_capacity(count);
    let mut x = seed;
    for _ in 0..count {
        out.push(x.clone());
        for (xi, ai) in x.iter_mut().zip(alpha) {
            *xi = frac(*xi + ai);
        }
    }
    out
}

/// Scalar Kronecker sequence with the fixed seed and step `step`.
pub fn kronecker_grid_1d(step: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut x = PHASE_SEED;
    for _ in 0..count {
        out.push(x);
        x = frac(x + step);
    }
    out
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Pairwise summation in a fixed tree order. The tree depends only on the
/// slice length, never on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Pairwise mean; zero for an empty slice.
pub fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_wraps_into_unit_interval() {
        assert_eq!(frac(1.25), 0.25);
        assert_eq!(frac(-0.25), 0.75);
        assert_eq!(frac(3.0), 0.0);
        // frac of a tiny negative must not round up to 1.0
        assert!(frac(-1e-17) < 1.0);
    }

    #[test]
    fn kronecker_grid_is_deterministic_and_equidistributed() {
        let alpha = [(5f64.sqrt() - 1.0) / 2.0];
        let g1 = kronecker_grid(&alpha, 1000);
        let g2 = kronecker_grid(&alpha, 1000);
        assert_eq!(g1, g2);
        // crude equidistribution: about half the points below 1/2
        let below = g1.iter().filter(|x| x[0] < 0.5).count();
        assert!((below as i64 - 500).abs() < 30, "below = {below}");
    }

    #[test]
    fn pairwise_sum_matches_sequential_on_exact_inputs() {
        let xs: Vec<f64> = (0..1025).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 1025.0 * 1024.0 / 2.0);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(-2.0, 2.0, 41);
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[40], 2.0);
        assert!((g[20] - 0.0).abs() < 1e-15);
    }
}
