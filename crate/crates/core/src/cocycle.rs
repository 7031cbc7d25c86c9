//! Transfer-matrix cocycles over toral rotations: orbit products with
//! per-step renormalization, Lyapunov exponents and fibered rotation numbers
//! by Birkhoff averaging over deterministic Kronecker phase grids.

use rayon::prelude::*;

use crate::grid::{frac, kronecker_grid, pairwise_mean};
use crate::model::{Frequency, TrigPotential, TAU};

/// Real 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn frobenius(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &rhs.m;
        Mat2 {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Transfer matrix `S_{v,E}(x) = [[E − v(x), −1], [1, 0]]`; determinant is
/// exactly 1.
pub fn transfer_matrix(v: &TrigPotential, energy: f64, x: &[f64]) -> Mat2 {
    Mat2 {
        m: [[energy - v.eval(x), -1.0], [1.0, 0.0]],
    }
}

/// Schrödinger cocycle: the pair (α, S_{v,E}) acting on T^d × R².
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub alpha: Frequency,
    pub potential: TrigPotential,
    pub energy: f64,
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
/// Single-step increments this close to the branch boundary trigger the
/// perturbed retry.
const LIFT_AMBIGUITY_TOL: f64 = 1e-9;

/// Running product over an orbit. The product is renormalized to Frobenius
/// norm √2 at every step, with the removed scales accumulated in
/// `log_norm_sum`; `angle_lift` is the continuous lift (in turns) of the
/// direction carried along the orbit.
///
/// Per-step increments are taken in (−1/4, 3/4]: the transfer matrix maps
/// the current x-component to the next y-component, so the sign of
/// sin 2πφ_{j+1} equals the sign of cos 2πφ_j and the true angle advance
/// always lies in this window. (A symmetric (−1/2, 1/2] branch would break
/// the lift below the spectrum, where steps legitimately advance by more
/// than a half turn.)
#[derive(Debug, Clone)]
pub struct OrbitAccumulator {
    pub product: Mat2,
    pub log_norm_sum: f64,
    pub angle_lift: f64,
    pub steps: u64,
    pub phase: Vec<f64>,
    pub direction: [f64; 2],
    /// Steps whose increment stayed within 1e−9 of the branch boundary
    /// even after the perturbed retries.
    pub ambiguous_steps: u64,
    /// (steps, log_norm_sum, angle_lift) snapshot for convergence reporting.
    pub half_sample: Option<(u64, f64, f64)>,
}

impl OrbitAccumulator {
    pub fn new(x0: &[f64]) -> Self {
        OrbitAccumulator {
            product: Mat2::IDENTITY,
            log_norm_sum: 0.0,
            angle_lift: 0.0,
            steps: 0,
            phase: x0.iter().map(|&c| frac(c)).collect(),
            direction: [1.0, 0.0],
            ambiguous_steps: 0,
            half_sample: None,
        }
    }

    /// Increment of the direction angle under `m`, in turns, wrapped into
    /// (−1/4, 3/4].
    fn wrapped_increment(m: &Mat2, dir: [f64; 2]) -> (f64, [f64; 2]) {
        let new_dir = m.apply(dir);
        let before = dir[1].atan2(dir[0]);
        let after = new_dir[1].atan2(new_dir[0]);
        let raw = (after - before) / TAU;
        let mut delta = raw - raw.floor();
        if delta > 0.75 {
            delta -= 1.0;
        }
        (delta, new_dir)
    }

    fn near_branch_boundary(delta: f64) -> bool {
        (delta - 0.75).abs() < LIFT_AMBIGUITY_TOL || (delta + 0.25).abs() < LIFT_AMBIGUITY_TOL
    }

    fn step(&mut self, m: &Mat2) {
        let (mut delta, mut new_dir) = Self::wrapped_increment(m, self.direction);
        if Self::near_branch_boundary(delta) {
            // Retry with start vectors rotated to either side. A genuine
            // near-boundary increment resolves to the same branch both
            // ways; otherwise the step is flagged and the wrapped value
            // kept.
            let s = 1e-7f64;
            let probe = |sign: f64| {
                let p = [
                    self.direction[0] - sign * s * self.direction[1],
                    sign * s * self.direction[0] + self.direction[1],
                ];
                Self::wrapped_increment(m, p)
            };
            let (d_plus, nd_plus) = probe(1.0);
            let (d_minus, _) = probe(-1.0);
            let resolved = !Self::near_branch_boundary(d_plus)
                && !Self::near_branch_boundary(d_minus)
                && (d_plus - d_minus).abs() < 0.5;
            if resolved {
                delta = d_plus;
                new_dir = nd_plus;
            } else {
                self.ambiguous_steps += 1;
            }
        }
        self.angle_lift += delta;
        let scale = (new_dir[0] * new_dir[0] + new_dir[1] * new_dir[1]).sqrt();
        self.direction = [new_dir[0] / scale, new_dir[1] / scale];

        self.product = m.mul(&self.product);
        let norm = self.product.frobenius() / SQRT_2;
        for row in self.product.m.iter_mut() {
            for entry in row.iter_mut() {
                *entry /= norm;
            }
        }
        self.log_norm_sum += norm.ln();
        self.steps += 1;
    }
}

impl Cocycle {
    pub fn new(alpha: Frequency, potential: TrigPotential, energy: f64) -> Self {
        assert_eq!(alpha.dim(), potential.dim());
        Cocycle {
            alpha,
            potential,
            energy,
        }
    }

    /// The matrix map at a point of the torus.
    pub fn map(&self, x: &[f64]) -> Mat2 {
        transfer_matrix(&self.potential, self.energy, x)
    }

    /// Left-ordered product over the orbit `x0, x0 + α, …` for `n` steps,
    /// with a half-way snapshot for convergence diagnostics.
    pub fn iterate(&self, x0: &[f64], n: u64) -> OrbitAccumulator {
        assert!(n >= 1);
        let mut acc = OrbitAccumulator::new(x0);
        let half = n / 2;
        self.advance_orbit(&mut acc, n, Some(half));
        acc
    }

    /// Continue an existing accumulator for `n` more steps.
    pub fn extend(&self, acc: &mut OrbitAccumulator, n: u64) {
        self.advance_orbit(acc, n, None);
    }

    fn advance_orbit(&self, acc: &mut OrbitAccumulator, n: u64, snapshot_at: Option<u64>) {
        for j in 0..n {
            let m = self.map(&acc.phase);
            acc.step(&m);
            for (pi, ai) in acc.phase.iter_mut().zip(self.alpha.components()) {
                *pi = frac(*pi + ai);
            }
            if snapshot_at == Some(j + 1) {
                acc.half_sample = Some((acc.steps, acc.log_norm_sum, acc.angle_lift));
            }
        }
    }
}

/// An orbit-averaged quantity together with its half-sample value; the
/// difference is the convergence diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub half_value: f64,
}

impl Estimate {
    pub fn delta(&self) -> f64 {
        (self.value - self.half_value).abs()
    }
}

/// Rotation-number estimate; also carries the count of lift-branch
/// ambiguities that survived the perturbed retry.
#[derive(Debug, Clone, Copy)]
pub struct RotationEstimate {
    pub value: f64,
    pub half_value: f64,
    pub ambiguous_steps: u64,
}

impl RotationEstimate {
    pub fn delta(&self) -> f64 {
        (self.value - self.half_value).abs()
    }
}

/// Lyapunov exponent and rotation number extracted from one set of orbits.
#[derive(Debug, Clone, Copy)]
pub struct OrbitAverages {
    pub lyapunov: Estimate,
    pub rotation: RotationEstimate,
}

/// Fold a lift average into the rotation-number range [0, 1/2].
pub fn fold_rotation(r: f64) -> f64 {
    let m = frac(r);
    m.min(1.0 - m)
}

/// Phase-grid Birkhoff averages of the removed scales (Lyapunov exponent,
/// clamped at 0) and of the angle lift (rotation number, folded into
/// [0, 1/2]), both with half-sample diagnostics.
pub fn orbit_averages(c: &Cocycle, n: u64, phases: usize) -> OrbitAverages {
    assert!(n >= 1_000, "at least 10^3 iterates required");
    assert!(phases >= 1);
    let grid = kronecker_grid(c.alpha.components(), phases);
    let per_phase: Vec<(f64, f64, f64, f64, u64)> = grid
        .par_iter()
        .map(|x0| {
            let acc = c.iterate(x0, n);
            let (hs, hlog, hlift) = acc.half_sample.expect("iterate always snapshots");
            let h = hs.max(1) as f64;
            (
                acc.log_norm_sum / acc.steps as f64,
                hlog / h,
                acc.angle_lift / acc.steps as f64,
                hlift / h,
                acc.ambiguous_steps,
            )
        })
        .collect();
    let collect = |f: &dyn Fn(&(f64, f64, f64, f64, u64)) -> f64| -> Vec<f64> {
        per_phase.iter().map(f).collect()
    };
    let log_full = pairwise_mean(&collect(&|p| p.0));
    let log_half = pairwise_mean(&collect(&|p| p.1));
    let lift_full = pairwise_mean(&collect(&|p| p.2));
    let lift_half = pairwise_mean(&collect(&|p| p.3));
    OrbitAverages {
        lyapunov: Estimate {
            value: log_full.max(0.0),
            half_value: log_half.max(0.0),
        },
        rotation: RotationEstimate {
            value: fold_rotation(lift_full),
            half_value: fold_rotation(lift_half),
            ambiguous_steps: per_phase.iter().map(|p| p.4).sum(),
        },
    }
}

/// Lyapunov exponent by phase-grid-averaged Birkhoff sums of the removed
/// scales, clamped at 0.
pub fn lyapunov_exponent(c: &Cocycle, n: u64, phases: usize) -> Estimate {
    orbit_averages(c, n, phases).lyapunov
}

/// Fibered rotation number: phase-grid average of angle_lift/n folded into
/// [0, 1/2].
pub fn rotation_number(c: &Cocycle, n: u64, phases: usize) -> RotationEstimate {
    orbit_averages(c, n, phases).rotation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrigPotential;

    fn free_cocycle(energy: f64) -> Cocycle {
        Cocycle::new(Frequency::golden(), TrigPotential::zero(1), energy)
    }

    #[test]
    fn transfer_matrix_closed_forms() {
        let v0 = TrigPotential::zero(1);
        let m = transfer_matrix(&v0, 2.0, &[0.37]);
        assert_eq!(m.m, [[2.0, -1.0], [1.0, 0.0]]);

        let amo = TrigPotential::cosine(1.0);
        let m = transfer_matrix(&amo, 1.0, &[0.25]);
        assert!((m.m[0][0] - 1.0).abs() < 1e-14);

        // determinant exactly 1 regardless of inputs
        for e in [-3.0, 0.0, 1.7] {
            for x in [0.0, 0.1, 0.9] {
                assert_eq!(transfer_matrix(&amo, e, &[x]).det(), 1.0);
            }
        }
    }

    #[test]
    fn rotation_by_quarter_turn_four_times() {
        // E = 0, v = 0: S = [[0, −1], [1, 0]] is a quarter turn
        let c = free_cocycle(0.0);
        let acc = c.iterate(&[0.0], 4);
        assert_eq!(acc.log_norm_sum, 0.0);
        assert!((acc.angle_lift - 1.0).abs() < 1e-12);
        // product is the identity up to sign
        let p = acc.product.m;
        assert!((p[0][0].abs() - 1.0).abs() < 1e-12);
        assert!(p[0][1].abs() < 1e-12);
    }

    #[test]
    fn constant_hyperbolic_log_norm() {
        // E = 3: eigenvalue (3 + √5)/2
        let c = free_cocycle(3.0);
        let acc = c.iterate(&[0.0], 100);
        let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!(
            (acc.log_norm_sum / 100.0 - expect).abs() < 0.01,
            "{} vs {expect}",
            acc.log_norm_sum / 100.0
        );
    }

    #[test]
    fn iteration_composes() {
        let c = Cocycle::new(
            Frequency::golden(),
            TrigPotential::cosine(0.8),
            0.35,
        );
        let x0 = [0.41];
        let whole = c.iterate(&x0, 37);
        let mut parts = c.iterate(&x0, 14);
        c.extend(&mut parts, 23);
        assert_eq!(whole.steps, parts.steps);
        assert!((whole.log_norm_sum - parts.log_norm_sum).abs() < 1e-12);
        assert!((whole.angle_lift - parts.angle_lift).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert!((whole.product.m[i][j] - parts.product.m[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unimodularity_is_preserved_by_renormalization() {
        let c = Cocycle::new(Frequency::golden(), TrigPotential::cosine(2.0), 0.1);
        let acc = c.iterate(&[0.123], 5_000);
        // det(normalized product) should equal exp(-2 log_norm_sum)
        let implied = (-2.0 * acc.log_norm_sum).exp();
        assert!(
            (acc.product.det() - implied).abs() < 1e-9 * implied.max(1.0),
            "det {} vs implied {}",
            acc.product.det(),
            implied
        );
    }

    #[test]
    fn lyapunov_free_rotation_is_zero() {
        let c = free_cocycle(0.0);
        let est = lyapunov_exponent(&c, 10_000, 4);
        assert!(est.value < 1e-3, "LE = {}", est.value);
    }

    #[test]
    fn lyapunov_constant_hyperbolic() {
        let c = free_cocycle(3.0);
        let est = lyapunov_exponent(&c, 20_000, 4);
        let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((est.value - expect).abs() < 1e-3, "LE = {}", est.value);
        assert!(est.delta() < 1e-3);
    }

    #[test]
    fn lyapunov_supercritical_amo_self_convergence() {
        // oracle: the same estimator at 10× iterates and 10× phases
        let c = Cocycle::new(Frequency::golden(), TrigPotential::cosine(2.0), 0.0);
        let base = lyapunov_exponent(&c, 10_000, 4);
        let oracle = lyapunov_exponent(&c, 100_000, 40);
        assert!(
            (base.value - oracle.value).abs() < 2e-3,
            "base {} vs oracle {}",
            base.value,
            oracle.value
        );
        // expected value near log 2 in the localized regime
        assert!((oracle.value - 2f64.ln()).abs() < 5e-3);
    }

    #[test]
    fn rotation_number_closed_forms() {
        // constant rotation: 2cos 2πρ = E
        let c = free_cocycle(2f64.sqrt());
        let est = rotation_number(&c, 10_000, 4);
        assert!((est.value - 0.125).abs() < 1e-4, "ρ = {}", est.value);

        // below the spectrum: ρ = 1/2 (the O(1) transient dies like 1/n)
        let c = free_cocycle(-2.5);
        let est = rotation_number(&c, 2_000_000, 1);
        assert!((est.value - 0.5).abs() < 1e-6, "ρ = {}", est.value);

        // above the spectrum: ρ = 0
        let c = free_cocycle(2.5);
        let est = rotation_number(&c, 2_000_000, 1);
        assert!(est.value < 1e-6, "ρ = {}", est.value);
    }

    #[test]
    fn rotation_number_critical_amo_center() {
        // spectral symmetry E → −E forces N(0) = 1/2, so ρ(0) = 1/4
        let c = Cocycle::new(Frequency::golden(), TrigPotential::cosine(1.0), 0.0);
        let est = rotation_number(&c, 50_000, 8);
        assert!((est.value - 0.25).abs() < 1e-3, "ρ = {}", est.value);
    }

    #[test]
    fn rotation_number_monotone_in_energy() {
        let alpha = Frequency::golden();
        let v = TrigPotential::cosine(0.6);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let e = -3.4 + 6.8 * i as f64 / 49.0;
            let c = Cocycle::new(alpha.clone(), v.clone(), e);
            let est = rotation_number(&c, 20_000, 4);
            assert!(
                est.value <= prev + 1e-4,
                "ρ increased at E = {e}: {} after {prev}",
                est.value
            );
            prev = est.value;
        }
    }

    #[test]
    fn lift_increments_stay_bounded() {
        let c = Cocycle::new(Frequency::golden(), TrigPotential::cosine(2.0), 0.3);
        let mut acc = OrbitAccumulator::new(&[0.2]);
        let mut prev_lift = 0.0;
        for _ in 0..200 {
            let m = c.map(&acc.phase);
            acc.step(&m);
            for (pi, ai) in acc.phase.iter_mut().zip(c.alpha.components()) {
                *pi = frac(*pi + ai);
            }
            let delta = acc.angle_lift - prev_lift;
            assert!(delta > -0.25 - 1e-15 && delta <= 0.75 + 1e-15, "increment {delta}");
            prev_lift = acc.angle_lift;
        }
    }
}
