//! Symmetric tridiagonal eigensolvers: Sturm counting, implicit-shift QL for
//! eigenvalues, inverse iteration for eigenvectors.

use num_complex::Complex64;

use super::{EigResult, LinalgError};

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl Tridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "tridiagonal matrix needs n >= 1");
        assert_eq!(offdiag.len() + 1, diag.len(), "offdiag length must be n-1");
        assert!(
            diag.iter().chain(offdiag.iter()).all(|x| x.is_finite()),
            "tridiagonal entries must be finite"
        );
        Tridiag { diag, offdiag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Gershgorin bound on the spectral radius, used to scale tolerances.
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        let mut bound = 0.0f64;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i < n - 1 { self.offdiag[i].abs() } else { 0.0 };
            bound = bound.max(self.diag[i].abs() + left + right);
        }
        bound.max(f64::MIN_POSITIVE)
    }

    /// `A v` for a real vector.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.offdiag[i - 1] * v[i - 1];
            }
            if i < n - 1 {
                s += self.offdiag[i] * v[i + 1];
            }
            out[i] = s;
        }
    }
}

/// Number of eigenvalues of `t` strictly below `e`, by counting negative
/// pivots of the Sturm sequence (LDLᵀ of `A − eI`). Pivots smaller than the
/// underflow guard are replaced by `-pivmin`, per standard practice.
pub fn sturm_count(t: &Tridiag, e: f64) -> usize {
    let n = t.len();
    let max_off = t.offdiag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let pivmin = f64::MIN_POSITIVE.max(f64::MIN_POSITIVE * max_off * max_off);

    let mut count = 0usize;
    let mut q = t.diag[0] - e;
    if q.abs() <= pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        q = (t.diag[i] - e) - t.offdiag[i - 1] * t.offdiag[i - 1] / q;
        if q.abs() <= pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

const MAX_QL_SWEEPS: usize = 50;

/// All eigenvalues by implicit-shift QL, ascending. `d`/`e` are consumed.
pub(crate) fn ql_values(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    let n = d.len();
    if n == 1 {
        return Ok(d);
    }
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(LinalgError::NoConvergence {
                    index: l,
                    sweeps: MAX_QL_SWEEPS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// Deterministic pseudo-random start vector for inverse iteration.
fn seeded_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0x2545_F491_4F6C_DD1D);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..n).map(|_| next()).collect()
}

/// Solve `(T - lambda I) x = b` by Gaussian elimination with partial
/// pivoting; `b` is overwritten with the solution.
fn shifted_solve(t: &Tridiag, lambda: f64, b: &mut [f64]) {
    let n = t.len();
    if n == 1 {
        let d = t.diag[0] - lambda;
        let d = if d.abs() < f64::MIN_POSITIVE.max(f64::EPSILON * t.norm_bound()) {
            f64::EPSILON * t.norm_bound().max(1.0)
        } else {
            d
        };
        b[0] /= d;
        return;
    }
    // Factor with fill-in in a second superdiagonal.
    let mut dl: Vec<f64> = t.offdiag.clone();
    let mut dd: Vec<f64> = t.diag.iter().map(|x| x - lambda).collect();
    let mut du: Vec<f64> = t.offdiag.clone();
    let mut du2 = vec![0.0f64; n.saturating_sub(2)];
    let mut swapped = vec![false; n - 1];
    let tiny = f64::EPSILON * t.norm_bound().max(1.0);

    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            let safe = if dd[i].abs() < tiny {
                tiny.copysign(if dd[i] == 0.0 { 1.0 } else { dd[i] })
            } else {
                dd[i]
            };
            dd[i] = safe;
            let factor = dl[i] / safe;
            dl[i] = factor;
            dd[i + 1] -= factor * du[i];
            if i < n - 2 {
                du2[i] = 0.0;
            }
        } else {
            swapped[i] = true;
            let factor = dd[i] / dl[i];
            dd[i] = dl[i];
            dl[i] = factor;
            let tmp = dd[i + 1];
            dd[i + 1] = du[i] - factor * tmp;
            du[i] = tmp;
            if i < n - 2 {
                du2[i] = du[i + 1];
                du[i + 1] = -factor * du2[i];
            }
        }
    }
    if dd[n - 1].abs() < tiny {
        dd[n - 1] = tiny.copysign(if dd[n - 1] == 0.0 { 1.0 } else { dd[n - 1] });
    }

    // Forward substitution.
    for i in 0..n - 1 {
        if swapped[i] {
            let tmp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tmp - dl[i] * b[i];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    // Back substitution.
    b[n - 1] /= dd[n - 1];
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenvectors by inverse iteration. Eigenvalues that fall closer together
/// than `1e-8 * norm` are treated as a degenerate cluster: the shift is
/// perturbed to separate the solves and the vectors are reorthogonalized.
/// The orthogonalization window is wider (`1e-5 * norm`) so that barely
/// resolved neighbors still come out orthogonal.
fn inverse_iteration_vectors(t: &Tridiag, values: &[f64]) -> Vec<Vec<f64>> {
    let n = t.len();
    let norm = t.norm_bound();
    let cluster_tol = 1e-8 * norm;
    let ortho_tol = 1e-5 * norm;
    let sep = (10.0 * f64::EPSILON * norm).max(f64::MIN_POSITIVE);

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut used_shifts: Vec<f64> = Vec::with_capacity(values.len());

    for (j, &lam) in values.iter().enumerate() {
        let mut shift = lam;
        if j > 0 && shift - used_shifts[j - 1] < sep {
            shift = used_shifts[j - 1] + sep;
        }
        used_shifts.push(shift);
        // start of the group needing reorthogonalization
        let group_start = (0..j)
            .rev()
            .take_while(|&i| values[j] - values[i] <= ortho_tol)
            .last()
            .unwrap_or(j);
        let in_cluster = j > group_start && values[j] - values[j - 1] <= cluster_tol;
        let iters = if in_cluster { 4 } else { 3 };

        let mut w = Vec::new();
        let mut ok = false;
        for attempt in 0..3u64 {
            w = seeded_vector(n, (j as u64) << 8 | attempt);
            let nn = norm2(&w);
            w.iter_mut().for_each(|x| *x /= nn);
            for _ in 0..iters {
                shifted_solve(t, shift, &mut w);
                // orthogonalize inside the group between solves
                for prev in group_start..j {
                    let dot: f64 = w.iter().zip(&vectors[prev]).map(|(a, b)| a * b).sum();
                    w.iter_mut()
                        .zip(&vectors[prev])
                        .for_each(|(a, b)| *a -= dot * b);
                }
                let nn = norm2(&w);
                if nn == 0.0 || !nn.is_finite() {
                    break;
                }
                w.iter_mut().for_each(|x| *x /= nn);
            }
            let nn = norm2(&w);
            if nn.is_finite() && (nn - 1.0).abs() < 1e-6 {
                ok = true;
                break;
            }
        }
        if !ok {
            // fall back to a coordinate vector; keeps the basis well defined
            w = vec![0.0; n];
            w[j % n] = 1.0;
            for prev in group_start..j {
                let dot: f64 = w.iter().zip(&vectors[prev]).map(|(a, b)| a * b).sum();
                w.iter_mut()
                    .zip(&vectors[prev])
                    .for_each(|(a, b)| *a -= dot * b);
            }
            let nn = norm2(&w).max(f64::MIN_POSITIVE);
            w.iter_mut().for_each(|x| *x /= nn);
        }
        vectors.push(w);
    }
    vectors
}

/// Full symmetric tridiagonal eigendecomposition: eigenvalues by
/// implicit-shift QL, optional eigenvectors by inverse iteration.
pub fn eigh_tridiagonal(t: &Tridiag, want_vectors: bool) -> Result<EigResult, LinalgError> {
    let values = ql_values(t.diag.clone(), t.offdiag.clone())?;
    if !want_vectors {
        return Ok(EigResult {
            values,
            vectors: None,
            residual: 0.0,
        });
    }
    let real_vectors = inverse_iteration_vectors(t, &values);

    let n = t.len();
    let mut residual = 0.0f64;
    let mut av = vec![0.0f64; n];
    for (lam, w) in values.iter().zip(&real_vectors) {
        t.apply(w, &mut av);
        let r = av
            .iter()
            .zip(w)
            .map(|(a, b)| (a - lam * b) * (a - lam * b))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r);
    }
    let vectors = real_vectors
        .into_iter()
        .map(|w| w.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
        .collect();
    Ok(EigResult {
        values,
        vectors: Some(vectors),
        residual,
    })
}

pub(crate) use ql_values as ql_eigenvalues;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn free_laplacian(n: usize) -> Tridiag {
        Tridiag::new(vec![0.0; n], vec![1.0; n - 1])
    }

    #[test]
    fn sturm_count_three_site_path() {
        // eigenvalues of the 3-site path are -√2, 0, √2
        let t = free_laplacian(3);
        assert_eq!(sturm_count(&t, 1.0), 2);
        assert_eq!(sturm_count(&t, -3.0), 0);
        assert_eq!(sturm_count(&t, 3.0), 3);
    }

    #[test]
    fn sturm_count_matches_two_by_two_quadratic_formula() {
        // diag (4, 2cos 2πg), offdiag (1); oracle = quadratic formula
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let d0 = 4.0;
        let d1 = 2.0 * (2.0 * std::f64::consts::PI * g).cos();
        let t = Tridiag::new(vec![d0, d1], vec![1.0]);
        let tr = d0 + d1;
        let det = d0 * d1 - 1.0;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let lo = (tr - disc) / 2.0;
        let hi = (tr + disc) / 2.0;
        for e in [lo - 0.5, (lo + hi) / 2.0, hi + 0.5, 0.0] {
            let expected = [lo, hi].iter().filter(|&&v| v < e).count();
            assert_eq!(sturm_count(&t, e), expected, "at E = {e}");
        }
    }

    #[test]
    fn sturm_count_is_nondecreasing_and_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let t = Tridiag::new(
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            (0..n - 1).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        );
        let bound = t.norm_bound();
        let mut prev = 0;
        for i in 0..200 {
            let e = -bound - 0.5 + (2.0 * bound + 1.0) * i as f64 / 199.0;
            let c = sturm_count(&t, e);
            assert!(c >= prev, "count decreased at E = {e}");
            prev = c;
        }
        assert_eq!(sturm_count(&t, bound + 1.0), n);
    }

    #[test]
    fn ql_free_laplacian_closed_form() {
        // eigenvalues 2cos(kπ/6), k = 1..5
        let t = free_laplacian(5);
        let res = eigh_tridiagonal(&t, false).unwrap();
        let mut expected: Vec<f64> = (1..=5)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos())
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in res.values.iter().zip(&expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn scalar_matrix_triple_eigenvalue_keeps_orthogonality() {
        let c = 0.7;
        let t = Tridiag::new(vec![c, c, c], vec![0.0, 0.0]);
        let res = eigh_tridiagonal(&t, true).unwrap();
        for v in &res.values {
            assert!((v - c).abs() < 1e-14);
        }
        let vecs = res.vectors.unwrap();
        assert!(super::super::max_pairwise_overlap(&vecs) < 1e-10);
    }

    #[test]
    fn ql_values_agree_with_sturm_bracketing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let t = Tridiag::new(
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let res = eigh_tridiagonal(&t, false).unwrap();
        let bound = t.norm_bound();
        for i in 0..200 {
            let e = -bound + 2.0 * bound * i as f64 / 199.0;
            let by_rank = res.values.partition_point(|&v| v < e - 1e-10 * bound);
            let by_rank_hi = res.values.partition_point(|&v| v < e + 1e-10 * bound);
            let c = sturm_count(&t, e);
            assert!(
                by_rank <= c && c <= by_rank_hi,
                "E = {e}: sturm {c} not within [{by_rank}, {by_rank_hi}]"
            );
        }
    }

    #[test]
    fn eigenvector_residual_and_orthogonality_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for case in 0..100 {
            let n = rng.gen_range(2..=200);
            let t = Tridiag::new(
                (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let res = eigh_tridiagonal(&t, true).unwrap();
            let bound = t.norm_bound();
            assert!(
                res.residual <= 1e-9 * bound,
                "case {case}: residual {} over {}",
                res.residual,
                1e-9 * bound
            );
            let vecs = res.vectors.unwrap();
            assert!(
                super::super::max_pairwise_overlap(&vecs) <= 1e-10,
                "case {case}: orthogonality"
            );
        }
    }
}
