//! Integrated density of states, spectrum and gap estimation, gap labeling,
//! and the inverse rotation-number function E(θ).
//!
//! The IDS is realized as phase-averaged eigenvalue counting of truncated
//! windows: Sturm/LDLᵀ counts in one dimension, full spectra for d = 2
//! boxes. Gaps are plateaus of the counting curve at tolerance 1.5/N, and
//! their labels are found by exhaustive search over the frequency module.

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{dist_to_integer, frac, kronecker_grid, kronecker_grid_1d, pairwise_mean};
use crate::linalg::{eigh_hermitian, sturm_count, LinalgError};
use crate::model::{DualMatrix, DualWindow, DirectWindow, Frequency, LatticeBox, ModelError, TrigPotential};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("no gap label within |k| <= {k_max}: best mismatch {mismatch:.3e} exceeds 10x tolerance {tol:.3e}")]
    NoLabelFound {
        k_max: i64,
        mismatch: f64,
        tol: f64,
    },
    #[error("target N = {target:.6} outside the range [{lo:.6}, {hi:.6}] covered by the curve")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("curve does not cover the spectrum: N spans [{lo:.6}, {hi:.6}]")]
    CurveNotCovering { lo: f64, hi: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Direct,
    Dual,
}

#[derive(Debug, Clone)]
pub struct IdsMeta {
    pub operator: OperatorKind,
    /// Sites per window (N for direct windows, box volume for dual ones).
    pub window_sites: usize,
    pub phase_count: usize,
}

/// Monotone sampled map E ↦ N(E).
#[derive(Debug, Clone)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: IdsMeta,
}

impl IdsCurve {
    /// Counting tolerance 1.5/N: truncation produces at most O(1) boundary
    /// eigenvalues per window inside true gaps.
    pub fn counting_tolerance(&self) -> f64 {
        1.5 / self.meta.window_sites as f64
    }

    pub fn mean_step(&self) -> f64 {
        (self.energies[self.energies.len() - 1] - self.energies[0])
            / (self.energies.len() - 1) as f64
    }
}

/// IDS of the direct operator: phase-grid average of Sturm counts of
/// Dirichlet windows, divided by the window size.
pub fn ids_direct(
    v: &TrigPotential,
    alpha: &Frequency,
    grid: &[f64],
    sites: usize,
    phases: usize,
) -> IdsCurve {
    assert!(sites >= 2, "window too small");
    assert!(phases >= 1);
    assert!(grid.windows(2).all(|w| w[0] <= w[1]), "grid must be sorted");
    let phase_grid = kronecker_grid(alpha.components(), phases);
    let per_phase: Vec<Vec<f64>> = phase_grid
        .par_iter()
        .map(|x| {
            let t = DirectWindow::new(v, alpha, x, sites).tridiag();
            grid.iter()
                .map(|&e| sturm_count(&t, e) as f64 / sites as f64)
                .collect()
        })
        .collect();
    let values = average_curves(&per_phase);
    IdsCurve {
        energies: grid.to_vec(),
        values,
        meta: IdsMeta {
            operator: OperatorKind::Direct,
            window_sites: sites,
            phase_count: phases,
        },
    }
}

/// IDS of the dual operator: eigenvalue-counting over a θ grid. Banded
/// counting in d = 1; full dense spectra for d = 2 boxes.
pub fn ids_dual(
    v: &TrigPotential,
    alpha: &Frequency,
    theta_count: usize,
    grid: &[f64],
    lattice: &LatticeBox,
    coupling: f64,
) -> Result<IdsCurve, SpectralError> {
    assert!(theta_count >= 1);
    assert!(grid.windows(2).all(|w| w[0] <= w[1]), "grid must be sorted");
    let thetas = kronecker_grid_1d(alpha.components()[0], theta_count);
    let sites = lattice.site_count();
    let per_theta: Vec<Result<Vec<f64>, SpectralError>> = thetas
        .par_iter()
        .map(|&theta| {
            let w = DualWindow::new(v, alpha, theta, lattice.clone(), coupling)?;
            let counts: Vec<f64> = match &w.matrix {
                DualMatrix::Banded(_) => grid
                    .iter()
                    .map(|&e| w.count_below(e) as f64 / sites as f64)
                    .collect(),
                DualMatrix::Dense(d) => {
                    let values = eigh_hermitian(d, false)?.values;
                    grid.iter()
                        .map(|&e| values.partition_point(|&x| x < e) as f64 / sites as f64)
                        .collect()
                }
            };
            Ok(counts)
        })
        .collect();
    let mut curves = Vec::with_capacity(theta_count);
    for c in per_theta {
        curves.push(c?);
    }
    let values = average_curves(&curves);
    Ok(IdsCurve {
        energies: grid.to_vec(),
        values,
        meta: IdsMeta {
            operator: OperatorKind::Dual,
            window_sites: sites,
            phase_count: theta_count,
        },
    })
}

/// Elementwise pairwise mean of equally long curves, fixed reduction order.
fn average_curves(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves[0].len();
    let mut scratch = vec![0.0f64; curves.len()];
    (0..len)
        .map(|i| {
            for (s, c) in scratch.iter_mut().zip(curves) {
                *s = c[i];
            }
            pairwise_mean(&scratch)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GapLabel {
    pub k: Vec<i64>,
    pub mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    pub plateau: f64,
    pub label: Option<GapLabel>,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Default)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
}

/// Maximal energy intervals of width ≥ `min_width` on which the curve is
/// constant within the counting tolerance. The unbounded components below
/// and above the spectrum are excluded.
pub fn find_gaps(curve: &IdsCurve, min_width: f64) -> GapReport {
    assert!(
        curve.mean_step() <= min_width / 4.0,
        "curve resolution must be finer than min_width/4"
    );
    let tol = curve.counting_tolerance();
    let v = &curve.values;
    let e = &curve.energies;
    let mut gaps = Vec::new();
    let mut i = 0usize;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] - v[i] <= tol {
            j += 1;
        }
        if j > i {
            let plateau = pairwise_mean(&v[i..=j]);
            let interior = plateau > tol && plateau < 1.0 - tol;
            if interior && e[j] - e[i] >= min_width {
                gaps.push(Gap {
                    lo: e[i],
                    hi: e[j],
                    plateau,
                    label: None,
                });
            }
        }
        i = j + 1;
    }
    GapReport { gaps }
}

/// Exhaustive gap-label search: the k with |k_i| ≤ `k_max` minimizing the
/// distance of 2ρ_gap = 1 − N_gap from k·α mod 1. Searched in order of
/// increasing max-norm so the smallest label wins ties.
pub fn gap_label(
    n_gap: f64,
    alpha: &Frequency,
    k_max: i64,
    tol: f64,
) -> Result<GapLabel, SpectralError> {
    assert!((0..=50).contains(&k_max), "k_max must be within 0..=50");
    let two_rho = 1.0 - n_gap;
    let dim = alpha.dim();
    let mut best: Option<GapLabel> = None;
    let mut candidates: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![-k_max; dim];
    loop {
        candidates.push(cur.clone());
        let mut axis = dim;
        loop {
            if axis == 0 {
                candidates.sort_by_key(|k| {
                    (
                        k.iter().map(|x| x.abs()).max().unwrap_or(0),
                        k.clone(),
                    )
                });
                for k in &candidates {
                    let mismatch = dist_to_integer(two_rho - alpha.dot(k));
                    if best.as_ref().map(|b| mismatch < b.mismatch).unwrap_or(true) {
                        best = Some(GapLabel {
                            k: k.clone(),
                            mismatch,
                        });
                    }
                }
                let best = best.unwrap();
                if best.mismatch > 10.0 * tol {
                    return Err(SpectralError::NoLabelFound {
                        k_max,
                        mismatch: best.mismatch,
                        tol,
                    });
                }
                return Ok(best);
            }
            axis -= 1;
            cur[axis] += 1;
            if cur[axis] <= k_max {
                break;
            }
            cur[axis] = -k_max;
        }
    }
}

/// Attach labels to every gap of a report.
pub fn label_gaps(
    report: &mut GapReport,
    alpha: &Frequency,
    k_max: i64,
    tol: f64,
) -> Result<(), SpectralError> {
    for gap in &mut report.gaps {
        gap.label = Some(gap_label(gap.plateau, alpha, k_max, tol)?);
    }
    Ok(())
}

/// Result of inverting the IDS at a rotation-number value.
#[derive(Debug, Clone, Copy)]
pub struct EnergyAt {
    pub energy: f64,
    /// The target landed on a plateau; the plateau midpoint was returned.
    pub gap_hit: bool,
}

/// Invert `N(E) = 1 − 2θ` by monotone interpolation. θ is first reduced by
/// the even, 1-periodic extension, so any real θ is accepted. On plateaus
/// the midpoint is returned with the `gap_hit` flag.
pub fn inverse_rotation_number(curve: &IdsCurve, theta: f64) -> Result<EnergyAt, SpectralError> {
    let t = {
        let m = frac(theta);
        m.min(1.0 - m)
    };
    let target = 1.0 - 2.0 * t;
    let v = &curve.values;
    let e = &curve.energies;
    let cover = curve.counting_tolerance().max(1e-9);
    if v[0] > cover || v[v.len() - 1] < 1.0 - cover {
        return Err(SpectralError::CurveNotCovering {
            lo: v[0],
            hi: v[v.len() - 1],
        });
    }
    if target < v[0] - cover || target > v[v.len() - 1] + cover {
        return Err(SpectralError::OutOfRange {
            target,
            lo: v[0],
            hi: v[v.len() - 1],
        });
    }

    // plateau run around the target value
    let tol = curve.counting_tolerance();
    let a = v.partition_point(|&x| x < target - tol);
    let b = v.partition_point(|&x| x <= target + tol);
    if b > a {
        let run_lo = e[a];
        let run_hi = e[b - 1];
        if run_hi - run_lo >= 4.0 * curve.mean_step() {
            return Ok(EnergyAt {
                energy: 0.5 * (run_lo + run_hi),
                gap_hit: true,
            });
        }
    }

    let j = v.partition_point(|&x| x < target).min(v.len() - 1);
    if j == 0 {
        return Ok(EnergyAt {
            energy: e[0],
            gap_hit: false,
        });
    }
    let (v0, v1) = (v[j - 1], v[j]);
    let energy = if v1 > v0 {
        e[j - 1] + (target - v0) / (v1 - v0) * (e[j] - e[j - 1])
    } else {
        0.5 * (e[j - 1] + e[j])
    };
    Ok(EnergyAt {
        energy,
        gap_hit: false,
    })
}

/// Numerical spectrum as a union of closed intervals: the growth set of the
/// counting curve, i.e. the span between the outermost rises with detected
/// gaps removed. Truncation edge states stay below the counting tolerance
/// and are filtered automatically.
pub fn spectrum_intervals(curve: &IdsCurve, min_gap: f64) -> Vec<(f64, f64)> {
    let tol = curve.counting_tolerance();
    let v = &curve.values;
    let e = &curve.energies;
    let first = v.partition_point(|&x| x <= tol);
    let last = v.partition_point(|&x| x < 1.0 - tol);
    if first >= last {
        return Vec::new();
    }
    let lo_edge = e[first.saturating_sub(1)];
    let hi_edge = e[(last).min(e.len() - 1)];
    let gaps = find_gaps(curve, min_gap);
    let mut bands = Vec::new();
    let mut cursor = lo_edge;
    for gap in &gaps.gaps {
        if gap.lo > cursor {
            bands.push((cursor, gap.lo));
        }
        cursor = cursor.max(gap.hi);
    }
    if hi_edge > cursor {
        bands.push((cursor, hi_edge));
    }
    bands
}

fn point_to_set_distance(x: f64, set: &[(f64, f64)]) -> f64 {
    set.iter()
        .map(|&(lo, hi)| {
            if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn directed_hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for &(lo, hi) in a {
        worst = worst.max(point_to_set_distance(lo, b));
        worst = worst.max(point_to_set_distance(hi, b));
        // interior maxima sit at midpoints of b's complementary gaps
        for w in b.windows(2) {
            let mid = 0.5 * (w[0].1 + w[1].0);
            if mid > lo && mid < hi {
                worst = worst.max(point_to_set_distance(mid, b));
            }
        }
    }
    worst
}

/// Hausdorff distance between two unions of closed intervals.
pub fn hausdorff_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty interval set");
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}
