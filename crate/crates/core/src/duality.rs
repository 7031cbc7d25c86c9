//! The duality unitary on finite Fourier data, Bloch solutions generated by
//! dual eigenvectors, conjugation of the transfer cocycle to a constant
//! rotation, and completeness/labeling reports for the dual eigenbasis.
//!
//! The chain implemented here: an eigenvector `u` of a dual window at phase
//! θ defines `f(x) = Σ_m u_m e^{2πim·x}` and the Bloch sequence
//! `ψ_n = e^{2πinθ} f(x + nα)`, which solves the direct eigenvalue equation
//! up to truncation defects. The 2×2 matrix `F(x, θ)` built from `f`
//! intertwines the transfer cocycle with the constant rotation by the
//! rotation number; its inverse is the conjugation `B`, defined whenever
//! `det F` stays away from zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cocycle::transfer_matrix;
use crate::grid::{frac, kronecker_grid, pairwise_mean, pairwise_sum};
use crate::linalg::{dft, eigh_hermitian, eigh_tridiagonal, idft, LinalgError};
use crate::model::{DualWindow, Frequency, ModelError, TrigPotential, TAU};
use crate::spectral::{inverse_rotation_number, IdsCurve, SpectralError};

#[derive(Debug, Error)]
pub enum DualityError {
    #[error("support of the operator image exceeds the configured bounds (needs |k| <= {needed_k}, |n| <= {needed_n}, have {max_k}/{max_n})")]
    SupportOverflow {
        needed_k: i64,
        needed_n: i64,
        max_k: i64,
        max_n: i64,
    },
    #[error("DegenerateConjugation at theta = {theta}: {reason} (excluded set of the duality construction)")]
    DegenerateConjugation { theta: f64, reason: String },
    #[error("decay fit unreliable: only {usable} usable points (need >= 10)")]
    FitUnreliable { usable: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Finitely supported vector on the dual lattice, with its base phase.
#[derive(Debug, Clone)]
pub struct FourierVector {
    pub sites: Arc<Vec<Vec<i64>>>,
    pub amps: Vec<Complex64>,
    pub theta: f64,
}

impl FourierVector {
    pub fn new(sites: Arc<Vec<Vec<i64>>>, amps: Vec<Complex64>, theta: f64) -> Self {
        assert_eq!(sites.len(), amps.len());
        FourierVector { sites, amps, theta }
    }

    pub fn dim(&self) -> usize {
        self.sites.first().map(|s| s.len()).unwrap_or(1)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    /// Localization center: site of maximal amplitude (first in site order
    /// on ties).
    pub fn center(&self) -> &[i64] {
        let mut best = 0usize;
        let mut best_val = -1.0f64;
        for (i, a) in self.amps.iter().enumerate() {
            let v = a.norm_sqr();
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        &self.sites[best]
    }

    /// `f(x) = Σ_m u_m e^{2πim·x}`.
    pub fn eval_f(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (site, amp) in self.sites.iter().zip(&self.amps) {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let dot: f64 = site.iter().zip(x).map(|(&m, xi)| m as f64 * xi).sum();
            let angle = TAU * dot;
            acc += amp * Complex64::new(angle.cos(), angle.sin());
        }
        acc
    }

    /// Inclusive per-axis bounds of the site set.
    pub fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let d = self.dim();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for site in self.sites.iter() {
            for a in 0..d {
                lo[a] = lo[a].min(site[a]);
                hi[a] = hi[a].max(site[a]);
            }
        }
        (lo, hi)
    }

    fn site_index_1d(&self, m: i64) -> Option<usize> {
        let lo = self.sites[0][0];
        let idx = m - lo;
        if idx >= 0 && (idx as usize) < self.sites.len() {
            Some(idx as usize)
        } else {
            None
        }
    }

    /// Vector with amplitudes shifted so the pattern moves by `-k`:
    /// `ũ_m = u_{m+k}`, i.e. `f̃(x) = e^{−2πikx} f(x)`. 1-d only; amplitudes
    /// shifted past the box edge are dropped.
    pub fn shifted(&self, k: i64) -> FourierVector {
        assert_eq!(self.dim(), 1, "shift is defined on the 1-d lattice");
        let amps = (0..self.sites.len() as i64)
            .map(|i| {
                let src = self.sites[i as usize][0] + k;
                self.site_index_1d(src)
                    .map(|s| self.amps[s])
                    .unwrap_or(Complex64::new(0.0, 0.0))
            })
            .collect();
        FourierVector {
            sites: Arc::clone(&self.sites),
            amps,
            theta: self.theta,
        }
    }

    /// Vector of `conj(f)`: `ũ_m = conj(u_{−m})`. 1-d only.
    pub fn conj_reflected(&self) -> FourierVector {
        assert_eq!(self.dim(), 1, "reflection is defined on the 1-d lattice");
        let amps = (0..self.sites.len())
            .map(|i| {
                let m = self.sites[i][0];
                self.site_index_1d(-m)
                    .map(|s| self.amps[s].conj())
                    .unwrap_or(Complex64::new(0.0, 0.0))
            })
            .collect();
        FourierVector {
            sites: Arc::clone(&self.sites),
            amps,
            theta: self.theta,
        }
    }
}

/// Eigenpair of a dual window.
#[derive(Debug, Clone)]
pub struct DualEigenpair {
    pub energy: f64,
    pub vector: FourierVector,
}

/// Full eigendecomposition of a dual window, sorted by localization center
/// (ties by energy).
pub fn dual_eigenpairs(w: &DualWindow) -> Result<Vec<DualEigenpair>, DualityError> {
    let sites = Arc::new(w.lattice.sites());
    let theta = w.theta;
    let result = match w.as_tridiag() {
        Some(t) => eigh_tridiagonal(&t, true)?,
        None => eigh_hermitian(&w.to_dense(), true)?,
    };
    let vectors = result.vectors.expect("vectors requested");
    let mut pairs: Vec<DualEigenpair> = result
        .values
        .into_iter()
        .zip(vectors)
        .map(|(energy, amps)| DualEigenpair {
            energy,
            vector: FourierVector::new(Arc::clone(&sites), amps, theta),
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.vector
            .center()
            .cmp(b.vector.center())
            .then(a.energy.partial_cmp(&b.energy).unwrap())
    });
    Ok(pairs)
}

/// Max defect of the direct eigenvalue equation for the Bloch sequence
/// `ψ_n = e^{2πinθ} f(x + nα)` over a probe grid of x and interior n.
pub fn bloch_solution_residual(
    u: &FourierVector,
    energy: f64,
    v: &TrigPotential,
    alpha: &Frequency,
    x_probes: usize,
    n_range: (i64, i64),
) -> f64 {
    let (n_lo, n_hi) = n_range;
    assert!(n_lo <= n_hi);
    let probes = kronecker_grid(alpha.components(), x_probes);
    let theta = u.theta;
    let mut worst = 0.0f64;
    for x in &probes {
        let psi = |n: i64| -> Complex64 {
            let point = alpha.advance(x, n);
            let phase = Complex64::new(0.0, TAU * theta * n as f64).exp();
            phase * u.eval_f(&point)
        };
        let mut prev = psi(n_lo - 1);
        let mut cur = psi(n_lo);
        for n in n_lo..=n_hi {
            let next = psi(n + 1);
            let point = alpha.advance(x, n);
            let defect = next + prev + (v.eval(&point) - energy) * cur;
            worst = worst.max(defect.norm());
            prev = cur;
            cur = next;
        }
    }
    worst
}

/// The matrix `F(x, θ)` sampled on an equidistant x-grid, with its
/// determinant profile.
#[derive(Debug, Clone)]
pub struct FGrid {
    pub theta: f64,
    /// f at the grid points j/G.
    pub f0: Vec<Complex64>,
    /// f at the shifted points j/G − α.
    pub f_back: Vec<Complex64>,
    pub det: Vec<Complex64>,
}

impl FGrid {
    pub fn grid_size(&self) -> usize {
        self.f0.len()
    }

    pub fn matrix_at(&self, j: usize) -> [[Complex64; 2]; 2] {
        let e_plus = Complex64::new(0.0, TAU * self.theta).exp();
        let e_minus = Complex64::new(0.0, -TAU * self.theta).exp();
        [
            [self.f0[j], self.f0[j].conj()],
            [e_minus * self.f_back[j], e_plus * self.f_back[j].conj()],
        ]
    }

    pub fn min_abs_det(&self) -> f64 {
        self.det.iter().fold(f64::INFINITY, |m, d| m.min(d.norm()))
    }

    /// Relative standard deviation of det over the grid; the numerical
    /// check of "invariant along the rotation, hence a.s. constant".
    pub fn det_rel_std(&self) -> f64 {
        let n = self.det.len();
        let re: Vec<f64> = self.det.iter().map(|d| d.re).collect();
        let im: Vec<f64> = self.det.iter().map(|d| d.im).collect();
        let mean = Complex64::new(pairwise_mean(&re), pairwise_mean(&im));
        let devs: Vec<f64> = self.det.iter().map(|d| (d - mean).norm_sqr()).collect();
        let var = pairwise_sum(&devs) / n as f64;
        var.sqrt() / mean.norm().max(f64::MIN_POSITIVE)
    }
}

/// Build `F(x, θ) = [[f(x), conj f(x)], [e^{−2πiθ} f(x−α), e^{2πiθ} conj f(x−α)]]`
/// on the grid `x_j = j/G`.
pub fn build_f(u: &FourierVector, theta: f64, alpha: f64, grid_size: usize) -> FGrid {
    assert!(grid_size >= 4);
    assert_eq!(u.dim(), 1);
    let f0: Vec<Complex64> = (0..grid_size)
        .into_par_iter()
        .map(|j| u.eval_f(&[j as f64 / grid_size as f64]))
        .collect();
    let f_back: Vec<Complex64> = (0..grid_size)
        .into_par_iter()
        .map(|j| u.eval_f(&[frac(j as f64 / grid_size as f64 - alpha)]))
        .collect();
    let e_plus = Complex64::new(0.0, TAU * theta).exp();
    let e_minus = Complex64::new(0.0, -TAU * theta).exp();
    let det = f0
        .iter()
        .zip(&f_back)
        .map(|(a, c)| a * e_plus * c.conj() - a.conj() * e_minus * c)
        .collect();
    FGrid {
        theta,
        f0,
        f_back,
        det,
    }
}

/// Conjugation `B(x) = F(x, θ)^{−1}` rescaled to |det B| = 1, on the grid.
#[derive(Debug, Clone)]
pub struct ConjugationGrid {
    pub theta: f64,
    pub b: Vec<[[Complex64; 2]; 2]>,
    pub det_profile: Vec<Complex64>,
}

impl ConjugationGrid {
    pub fn grid_size(&self) -> usize {
        self.b.len()
    }
}

const DEGENERATE_DET_TOL: f64 = 1e-6;

/// Arithmetic guard for the excluded phase set: 2θ within `tol` of a
/// resolved k·α mod 1 for some |k| ≤ `k_max` makes the conjugation
/// construction degenerate before any matrix is built.
pub fn degenerate_theta_check(
    theta: f64,
    alpha: &Frequency,
    k_max: i64,
    tol: f64,
) -> Result<(), DualityError> {
    for k in -k_max..=k_max {
        let mut kvec = vec![0i64; alpha.dim()];
        for axis in 0..alpha.dim() {
            kvec.iter_mut().for_each(|x| *x = 0);
            kvec[axis] = k;
            let dist = crate::grid::dist_to_integer(2.0 * theta - alpha.dot(&kvec));
            if dist <= tol {
                return Err(DualityError::DegenerateConjugation {
                    theta,
                    reason: format!(
                        "2θ lies within {dist:.1e} of {k}·α[{axis}] mod 1"
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Invert the F-grid into a conjugation. Fails with
/// `DegenerateConjugation` when `det F` approaches zero anywhere on the
/// grid (the countable excluded set of phases).
pub fn conjugation_from_f(f: &FGrid) -> Result<ConjugationGrid, DualityError> {
    let min_det = f.min_abs_det();
    if min_det <= DEGENERATE_DET_TOL {
        return Err(DualityError::DegenerateConjugation {
            theta: f.theta,
            reason: format!("min |det F| = {min_det:.3e} on the grid"),
        });
    }
    let g = f.grid_size();
    let mut b = Vec::with_capacity(g);
    let mut det_profile = Vec::with_capacity(g);
    for j in 0..g {
        let m = f.matrix_at(j);
        let det = f.det[j];
        let scale = det.norm().sqrt();
        // B = sqrt(|det F|) · F^{-1}
        let inv_det = scale / det;
        let bj = [
            [m[1][1] * inv_det, -m[0][1] * inv_det],
            [-m[1][0] * inv_det, m[0][0] * inv_det],
        ];
        det_profile.push(bj[0][0] * bj[1][1] - bj[0][1] * bj[1][0]);
        b.push(bj);
    }
    Ok(ConjugationGrid {
        theta: f.theta,
        b,
        det_profile,
    })
}

fn c2_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn c2_inv(a: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

fn c2_frobenius(a: &[[Complex64; 2]; 2]) -> f64 {
    a.iter()
        .flatten()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Shift every entry grid of `B` by α via trigonometric interpolation
/// (Fourier coefficients phase-multiplied by e^{2πik̃α}).
fn shift_grids_by_alpha(b: &[[[Complex64; 2]; 2]], alpha: f64) -> Vec<[[Complex64; 2]; 2]> {
    let g = b.len();
    let mut shifted = vec![[[Complex64::new(0.0, 0.0); 2]; 2]; g];
    for i in 0..2 {
        for j in 0..2 {
            let samples: Vec<Complex64> = b.iter().map(|m| m[i][j]).collect();
            let mut coeffs = dft(&samples);
            for (k, c) in coeffs.iter_mut().enumerate() {
                let k_signed = if k <= g / 2 { k as i64 } else { k as i64 - g as i64 };
                *c *= Complex64::new(0.0, TAU * k_signed as f64 * alpha).exp();
            }
            let back = idft(&coeffs);
            for (m, val) in shifted.iter_mut().zip(back) {
                m[i][j] = val;
            }
        }
    }
    shifted
}

/// Sup defect of `B(x+α) M(x) B(x)^{−1} − A_⋆` over the grid, with
/// `A_⋆ = diag(e^{2πiρ}, e^{−2πiρ})`. The map is any 2×2 matrix function on
/// the circle; the Schrödinger case passes the transfer matrix.
pub fn conjugation_defect(
    b: &ConjugationGrid,
    map: impl Fn(f64) -> [[Complex64; 2]; 2],
    alpha: f64,
    rho: f64,
) -> f64 {
    let g = b.grid_size();
    let b_shift = shift_grids_by_alpha(&b.b, alpha);
    let a_star = [
        [
            Complex64::new(0.0, TAU * rho).exp(),
            Complex64::new(0.0, 0.0),
        ],
        [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -TAU * rho).exp(),
        ],
    ];
    let mut worst = 0.0f64;
    for j in 0..g {
        let x = j as f64 / g as f64;
        let m = map(x);
        let conj = c2_mul(&c2_mul(&b_shift[j], &m), &c2_inv(&b.b[j]));
        let mut diff = conj;
        for (r, row) in diff.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry -= a_star[r][c];
            }
        }
        worst = worst.max(c2_frobenius(&diff));
    }
    worst
}

/// Reducibility residual of the Schrödinger cocycle at energy `E` against
/// the degree-0 normal form built from the independently computed rotation
/// number ρ.
pub fn reducibility_residual(
    b: &ConjugationGrid,
    v: &TrigPotential,
    energy: f64,
    alpha: f64,
    rho: f64,
) -> f64 {
    conjugation_defect(
        b,
        |x| {
            let s = transfer_matrix(v, energy, &[x]);
            [
                [
                    Complex64::new(s.m[0][0], 0.0),
                    Complex64::new(s.m[0][1], 0.0),
                ],
                [
                    Complex64::new(s.m[1][0], 0.0),
                    Complex64::new(s.m[1][1], 0.0),
                ],
            ]
        },
        alpha,
        rho,
    )
}

/// Localization diagnostics of a normalized vector.
#[derive(Debug, Clone)]
pub struct LocalizationFit {
    pub center: Vec<i64>,
    pub ipr: f64,
    /// Least-squares decay rate; `None` when fewer than 10 usable points
    /// survive the amplitude and boundary cuts (the FitUnreliable case).
    pub decay_rate: Option<f64>,
    pub fit_points: usize,
}

/// Center, inverse participation ratio, and exponential decay rate of a
/// normalized vector. The fit uses log|u_m| against |m − center| over sites
/// with |u_m| > 1e−12, excluding sites within 10% of the box edges.
pub fn localization_fit(u: &FourierVector) -> LocalizationFit {
    let center: Vec<i64> = u.center().to_vec();
    let norm2: f64 = u.amps.iter().map(|a| a.norm_sqr()).sum();
    let ipr = u.amps.iter().map(|a| a.norm_sqr() * a.norm_sqr()).sum::<f64>()
        / (norm2 * norm2).max(f64::MIN_POSITIVE);

    let (lo, hi) = u.bounds();
    let d = u.dim();
    let margins: Vec<i64> = (0..d)
        .map(|a| (((hi[a] - lo[a] + 1) as f64) * 0.1).ceil() as i64)
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (site, amp) in u.sites.iter().zip(&u.amps) {
        let a = amp.norm();
        if a <= 1e-12 {
            continue;
        }
        let interior = (0..d).all(|ax| {
            site[ax] >= lo[ax] + margins[ax] && site[ax] <= hi[ax] - margins[ax]
        });
        if !interior {
            continue;
        }
        let r = site
            .iter()
            .zip(&center)
            .map(|(&m, &c)| ((m - c) as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        xs.push(r);
        ys.push(a.ln());
    }
    let fit_points = xs.len();
    let decay_rate = if fit_points < 10 {
        None
    } else {
        let n = fit_points as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx <= 0.0 {
            None
        } else {
            Some(-(sxy / sxx))
        }
    };
    LocalizationFit {
        center,
        ipr,
        decay_rate,
        fit_points,
    }
}

/// Decay rate or the FitUnreliable error.
pub fn decay_rate(u: &FourierVector) -> Result<f64, DualityError> {
    let fit = localization_fit(u);
    fit.decay_rate.ok_or(DualityError::FitUnreliable {
        usable: fit.fit_points,
    })
}

/// One row of the eigenvalue-labeling table: eigenpair with center k
/// against the inverse rotation-number curve at θ + kα.
#[derive(Debug, Clone)]
pub struct LabelRow {
    pub k: i64,
    pub energy: f64,
    pub curve_energy: f64,
    pub gap_hit: bool,
}

/// Completeness and labeling report for a set of dual eigenpairs.
#[derive(Debug, Clone)]
pub struct CompletenessReport {
    /// Probe site against the eigenvector mass Σ_k |(u_k, δ_l)|² restricted
    /// to pairs with interior localization centers.
    pub per_probe: Vec<(i64, f64)>,
    pub min_interior_mass: f64,
    pub label_rows: Vec<LabelRow>,
    /// Max |E_k(θ) − E(θ + kα)| over the label rows.
    pub label_match: f64,
    pub duplicate_centers: usize,
    pub missing_centers: usize,
}

/// Quantify completeness (interior mass per probe site) and the eigenvalue
/// labeling E_k(θ) = E(θ + kα) for 1-d dual eigenpairs.
pub fn completeness_report(
    pairs: &[DualEigenpair],
    theta: f64,
    alpha: &Frequency,
    probes: &[i64],
    curve: &IdsCurve,
    k_range: i64,
) -> Result<CompletenessReport, DualityError> {
    assert!(!pairs.is_empty());
    let sites = &pairs[0].vector.sites;
    let (lo, hi) = pairs[0].vector.bounds();
    let span = hi[0] - lo[0] + 1;
    let interior_lo = lo[0] + span / 3;
    let interior_hi = hi[0] - span / 3;
    let site_lo = sites[0][0];

    // interior mass per probe site, fixed summation order over pairs
    let mut per_probe = Vec::with_capacity(probes.len());
    let mut min_mass = f64::INFINITY;
    for &l in probes {
        let idx = (l - site_lo) as usize;
        assert!(idx < sites.len(), "probe site outside the box");
        let contributions: Vec<f64> = pairs
            .iter()
            .filter(|p| {
                let c = p.vector.center()[0];
                c >= interior_lo && c <= interior_hi
            })
            .map(|p| p.vector.amps[idx].norm_sqr())
            .collect();
        let mass = pairwise_sum(&contributions);
        min_mass = min_mass.min(mass);
        per_probe.push((l, mass));
    }

    // labeling over central centers
    let mut by_center: BTreeMap<i64, usize> = BTreeMap::new();
    let mut duplicate_centers = 0usize;
    let mut label_rows = Vec::new();
    let mut label_match = 0.0f64;
    for pair in pairs {
        let k = pair.vector.center()[0];
        if k < -k_range || k > k_range {
            continue;
        }
        *by_center.entry(k).or_insert(0) += 1;
        let at = inverse_rotation_number(curve, theta + k as f64 * alpha.components()[0])?;
        label_match = label_match.max((pair.energy - at.energy).abs());
        label_rows.push(LabelRow {
            k,
            energy: pair.energy,
            curve_energy: at.energy,
            gap_hit: at.gap_hit,
        });
    }
    let mut missing_centers = 0usize;
    for k in -k_range..=k_range {
        match by_center.get(&k) {
            None => missing_centers += 1,
            Some(&c) if c > 1 => duplicate_centers += 1,
            _ => {}
        }
    }
    label_rows.sort_by_key(|r| r.k);

    Ok(CompletenessReport {
        per_probe,
        min_interior_mass: min_mass,
        label_rows,
        label_match,
        duplicate_centers,
        missing_centers,
    })
}

/// Residual summary of the full duality pipeline at one phase.
#[derive(Debug, Clone)]
pub struct DualityReport {
    pub bloch_residual: f64,
    pub det_rel_std: f64,
    pub conj_residual: f64,
    pub completeness: CompletenessReport,
}

/// Finite Fourier data of a vector Ψ(x, n): coefficients over
/// (k ∈ Z^d, n ∈ Z).
#[derive(Debug, Clone, Default)]
pub struct PsiFourier {
    pub entries: BTreeMap<(Vec<i64>, i64), Complex64>,
}

impl PsiFourier {
    pub fn new() -> Self {
        PsiFourier {
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, k: Vec<i64>, n: i64, c: Complex64) {
        self.entries.insert((k, n), c);
    }

    fn add(&mut self, k: Vec<i64>, n: i64, c: Complex64) {
        *self
            .entries
            .entry((k, n))
            .or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    fn support_radius(&self) -> (i64, i64) {
        let mut max_k = 0i64;
        let mut max_n = 0i64;
        for (k, n) in self.entries.keys() {
            max_k = max_k.max(k.iter().map(|x| x.abs()).max().unwrap_or(0));
            max_n = max_n.max(n.abs());
        }
        (max_k, max_n)
    }
}

/// Direct action on (k, n) coefficients: shifts in n plus the potential
/// convolution with its orbit phase e^{2πin k′·α}.
fn apply_direct(v: &TrigPotential, alpha: &Frequency, psi: &PsiFourier) -> PsiFourier {
    let mut out = PsiFourier::new();
    for ((k, n), c) in &psi.entries {
        out.add(k.clone(), n - 1, *c);
        out.add(k.clone(), n + 1, *c);
        for (kp, amp) in v.coeffs() {
            let target: Vec<i64> = k.iter().zip(kp).map(|(a, b)| a + b).collect();
            let phase = Complex64::new(0.0, TAU * *n as f64 * alpha.dot(kp)).exp();
            out.add(target, *n, amp * phase * c);
        }
    }
    out
}

/// The duality unitary on coefficients: d_{m,n} = c_{m,n} e^{−2πin α·m}.
fn transform_u(alpha: &Frequency, psi: &PsiFourier) -> PsiFourier {
    let mut out = PsiFourier::new();
    for ((m, n), c) in &psi.entries {
        let phase = Complex64::new(0.0, -TAU * *n as f64 * alpha.dot(m)).exp();
        out.add(m.clone(), *n, c * phase);
    }
    out
}

/// Dual action on transformed coefficients: hopping convolution plus the
/// cosine diagonal realized as shifts in the θ-frequency index.
fn apply_dual(v: &TrigPotential, alpha: &Frequency, phi: &PsiFourier) -> PsiFourier {
    let mut out = PsiFourier::new();
    for ((m, n), c) in &phi.entries {
        for (mp, amp) in v.coeffs() {
            let target: Vec<i64> = m.iter().zip(mp).map(|(a, b)| a + b).collect();
            out.add(target, *n, amp * c);
        }
        let phase_plus = Complex64::new(0.0, TAU * alpha.dot(m)).exp();
        out.add(m.clone(), n - 1, phase_plus * c);
        out.add(m.clone(), n + 1, phase_plus.conj() * c);
    }
    out
}

/// Exact finite-Fourier check of the duality identity: both sides of
/// `𝒰(ℋΨ) = ℋ̃(𝒰Ψ)` computed by independent code paths on coefficients;
/// returns the max defect over the union support.
pub fn duality_identity_check(
    v: &TrigPotential,
    alpha: &Frequency,
    psi: &PsiFourier,
    max_k: i64,
    max_n: i64,
) -> Result<f64, DualityError> {
    let (rk, rn) = psi.support_radius();
    let needed_k = rk + v.degree() as i64;
    let needed_n = rn + 1;
    if needed_k > max_k || needed_n > max_n {
        return Err(DualityError::SupportOverflow {
            needed_k,
            needed_n,
            max_k,
            max_n,
        });
    }
    let lhs = transform_u(alpha, &apply_direct(v, alpha, psi));
    let rhs = apply_dual(v, alpha, &transform_u(alpha, psi));
    let mut keys: Vec<&(Vec<i64>, i64)> = lhs.entries.keys().collect();
    keys.extend(rhs.entries.keys());
    let zero = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for key in keys {
        let a = lhs.entries.get(key).unwrap_or(&zero);
        let b = rhs.entries.get(key).unwrap_or(&zero);
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}
