//! Dense symmetric/Hermitian eigendecomposition: Householder reduction to
//! tridiagonal form followed by implicit-shift QL, ported from the classic
//! EISPACK/JAMA routines. Complex Hermitian matrices go through the
//! 2n×2n real embedding [[X, −Y], [Y, X]]; the choice is invisible through
//! the operation contract.

use num_complex::Complex64;

use super::tridiag::ql_eigenvalues;
use super::{EigResult, LinalgError};

/// Dense Hermitian matrix, row-major.
#[derive(Debug, Clone)]
pub struct HermDense {
    n: usize,
    data: Vec<Complex64>,
}

impl HermDense {
    pub fn new(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n);
        HermDense { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        HermDense {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        HermDense { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Row-sum bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let mut bound = 0.0f64;
        for i in 0..self.n {
            let row: f64 = (0..self.n).map(|j| self.get(i, j).norm()).sum();
            bound = bound.max(row);
        }
        bound.max(f64::MIN_POSITIVE)
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for i in 0..self.n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..self.n {
                s += self.get(i, j) * v[j];
            }
            out[i] = s;
        }
    }
}

/// Householder reduction of a real symmetric matrix (stored in `v`,
/// row-major, overwritten with the accumulated transformation) to
/// tridiagonal form. Returns (diag, offdiag with offdiag[0] unused shifted
/// convention as in EISPACK: e[i] couples i-1 and i).
fn tred2(v: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0f64;
        let mut h = 0.0f64;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0f64;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
    (d, e)
}

const MAX_QL_SWEEPS: usize = 50;

/// Implicit-shift QL on a tridiagonal (d, e) with optional accumulation of
/// the rotations into `v` (row-major n×n). `e[i]` couples rows i-1 and i on
/// input, as produced by `tred2`.
fn tql2(
    d: &mut [f64],
    e: &mut [f64],
    v: Option<&mut [f64]>,
    n: usize,
) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut vv = v;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(LinalgError::NoConvergence {
                        index: l,
                        sweeps: MAX_QL_SWEEPS,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(vm) = vv.as_deref_mut() {
                        for k in 0..n {
                            h = vm[k * n + i + 1];
                            vm[k * n + i + 1] = s * vm[k * n + i] + c * h;
                            vm[k * n + i] = c * vm[k * n + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort ascending, carrying columns along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d.swap(i, k);
            if let Some(vm) = vv.as_deref_mut() {
                for row in 0..n {
                    vm.swap(row * n + i, row * n + k);
                }
            }
        }
    }
    Ok(())
}

/// Full decomposition of a real symmetric matrix given as row-major data.
/// Returns ascending eigenvalues and, when requested, orthonormal
/// eigenvectors (as rows of the returned Vec).
fn eigh_real_symmetric(
    mut v: Vec<f64>,
    n: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>), LinalgError> {
    if n == 1 {
        let val = v[0];
        return Ok((vec![val], want_vectors.then(|| vec![vec![1.0]])));
    }
    let (mut d, mut e) = tred2(&mut v, n);
    tql2(&mut d, &mut e, want_vectors.then_some(v.as_mut_slice()), n)?;
    let vectors = want_vectors.then(|| {
        (0..n)
            .map(|col| (0..n).map(|row| v[row * n + col]).collect())
            .collect()
    });
    Ok((d, vectors))
}

/// Full eigendecomposition of a dense Hermitian matrix.
///
/// Exactly real input goes through the real symmetric path; genuinely
/// complex input through the 2n×2n real embedding, with the duplicated
/// spectrum collapsed back to n complex eigenpairs.
pub fn eigh_hermitian(a: &HermDense, want_vectors: bool) -> Result<EigResult, LinalgError> {
    let n = a.len();
    assert!(n >= 1, "empty matrix");
    let defect = a.max_hermiticity_defect();
    if defect > 1e-12 {
        return Err(LinalgError::NotHermitian { defect });
    }
    let scale = a.norm_bound();
    let max_imag = a.data.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));

    let (values, vectors) = if max_imag <= 1e-14 * scale.max(1.0) {
        let re: Vec<f64> = a.data.iter().map(|z| z.re).collect();
        // symmetrize exactly
        let mut sym = re.clone();
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = 0.5 * (re[i * n + j] + re[j * n + i]);
            }
        }
        if want_vectors {
            let (d, vecs) = eigh_real_symmetric(sym, n, true)?;
            let vecs = vecs.unwrap();
            let cvecs: Vec<Vec<Complex64>> = vecs
                .into_iter()
                .map(|w| w.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                .collect();
            (d, Some(cvecs))
        } else {
            let mut work = sym;
            let (d, mut e) = tred2(&mut work, n);
            // tred2's e is shifted by one; ql_eigenvalues wants plain offdiag
            let off: Vec<f64> = e.drain(1..).collect();
            let vals = ql_eigenvalues(d, off)?;
            (vals, None)
        }
    } else {
        eigh_via_embedding(a, want_vectors)?
    };

    let residual = match (&vectors, want_vectors) {
        (Some(vecs), true) => {
            let mut worst = 0.0f64;
            let mut av = vec![Complex64::new(0.0, 0.0); n];
            for (lam, w) in values.iter().zip(vecs) {
                a.apply(w, &mut av);
                let r: f64 = av
                    .iter()
                    .zip(w)
                    .map(|(x, y)| (x - lam * y).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(r);
            }
            worst
        }
        _ => 0.0,
    };

    Ok(EigResult {
        values,
        vectors,
        residual,
    })
}

/// Real-embedding path for genuinely complex Hermitian matrices. The
/// embedding doubles every eigenvalue; one complex eigenvector is recovered
/// per duplicated pair via z = u + i·w with greedy re-selection inside
/// degenerate clusters.
fn eigh_via_embedding(
    a: &HermDense,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Vec<Complex64>>>), LinalgError> {
    let n = a.len();
    let m = 2 * n;
    let mut big = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            big[i * m + j] = z.re;
            big[(i + n) * m + j + n] = z.re;
            big[i * m + j + n] = -z.im;
            big[(i + n) * m + j] = z.im;
        }
    }
    let (d, vecs) = eigh_real_symmetric(big, m, want_vectors)?;
    let values: Vec<f64> = (0..n).map(|i| 0.5 * (d[2 * i] + d[2 * i + 1])).collect();
    if !want_vectors {
        return Ok((values, None));
    }
    let vecs = vecs.unwrap();
    let scale = a.norm_bound();
    let cluster_tol = (1e-8 * scale).max(1e-12);

    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut idx = 0usize;
    while idx < m {
        // cluster of duplicated eigenvalues
        let mut end = idx + 1;
        while end < m && d[end] - d[end - 1] <= cluster_tol {
            end += 1;
        }
        let want = (end - idx) / 2;
        let mut accepted: Vec<Vec<Complex64>> = Vec::with_capacity(want);
        for threshold in [0.5, 1e-3] {
            for w in vecs[idx..end].iter() {
                if accepted.len() == want {
                    break;
                }
                let mut z: Vec<Complex64> = (0..n)
                    .map(|k| Complex64::new(w[k], w[k + n]))
                    .collect();
                for prev in &accepted {
                    let dot: Complex64 =
                        prev.iter().zip(&z).map(|(p, q)| p.conj() * q).sum();
                    z.iter_mut().zip(prev).for_each(|(q, p)| *q -= dot * p);
                }
                let nn: f64 = z.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
                if nn >= threshold {
                    z.iter_mut().for_each(|q| *q /= nn);
                    accepted.push(z);
                }
            }
            if accepted.len() == want {
                break;
            }
        }
        debug_assert_eq!(accepted.len(), want, "embedding cluster extraction");
        out.extend(accepted);
        idx = end;
    }
    Ok((values, Some(out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn real_matrix(entries: &[&[f64]]) -> HermDense {
        let n = entries.len();
        HermDense::from_fn(n, |i, j| Complex64::new(entries[i][j], 0.0))
    }

    #[test]
    fn diagonal_matrix_sorted_with_permuted_identity_vectors() {
        let a = real_matrix(&[&[3.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let res = eigh_hermitian(&a, true).unwrap();
        assert_eq!(res.values, vec![-1.0, 2.0, 3.0]);
        let vecs = res.vectors.unwrap();
        // each vector is a coordinate vector
        for (k, expected_site) in [(0usize, 1usize), (1, 2), (2, 0)] {
            for (i, z) in vecs[k].iter().enumerate() {
                let want = if i == expected_site { 1.0 } else { 0.0 };
                assert!((z.norm() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_type_matrix_has_unit_eigenvalues() {
        let a = HermDense::from_fn(2, |i, j| match (i, j) {
            (0, 1) => Complex64::new(0.0, 1.0),
            (1, 0) => Complex64::new(0.0, -1.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let res = eigh_hermitian(&a, true).unwrap();
        assert!((res.values[0] + 1.0).abs() < 1e-12);
        assert!((res.values[1] - 1.0).abs() < 1e-12);
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn not_hermitian_is_rejected() {
        let mut a = HermDense::zeros(2);
        a.set(0, 1, Complex64::new(1.0, 0.0));
        a.set(1, 0, Complex64::new(2.0, 0.0));
        assert!(matches!(
            eigh_hermitian(&a, false),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    /// Characteristic-polynomial oracle: count sign changes of det(A - xI)
    /// along a fine grid and bisect each bracket. Independent of the
    /// Householder/QL path.
    fn charpoly_roots(a: &HermDense, lo: f64, hi: f64) -> Vec<f64> {
        let n = a.len();
        let det = |x: f64| -> f64 {
            // LU with partial pivoting on a complex copy, real part of det
            let mut m: Vec<Complex64> = (0..n * n).map(|k| a.data()[k]).collect();
            for i in 0..n {
                m[i * n + i] -= Complex64::new(x, 0.0);
            }
            let mut det = Complex64::new(1.0, 0.0);
            for col in 0..n {
                let mut piv = col;
                for r in col + 1..n {
                    if m[r * n + col].norm() > m[piv * n + col].norm() {
                        piv = r;
                    }
                }
                if m[piv * n + col].norm() == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    for c in 0..n {
                        m.swap(col * n + c, piv * n + c);
                    }
                    det = -det;
                }
                det *= m[col * n + col];
                for r in col + 1..n {
                    let f = m[r * n + col] / m[col * n + col];
                    for c in col..n {
                        let sub = f * m[col * n + c];
                        m[r * n + c] -= sub;
                    }
                }
            }
            det.re
        };
        let grid = 4000;
        let mut roots = Vec::new();
        let mut prev_x = lo;
        let mut prev_f = det(lo);
        for i in 1..=grid {
            let x = lo + (hi - lo) * i as f64 / grid as f64;
            let f = det(x);
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if prev_f.signum() != f.signum() && f != 0.0 {
                let (mut a1, mut b1, mut fa) = (prev_x, x, prev_f);
                for _ in 0..80 {
                    let mid = 0.5 * (a1 + b1);
                    let fm = det(mid);
                    if fa.signum() == fm.signum() {
                        a1 = mid;
                        fa = fm;
                    } else {
                        b1 = mid;
                    }
                }
                roots.push(0.5 * (a1 + b1));
            }
            prev_x = x;
            prev_f = f;
        }
        roots
    }

    #[test]
    fn six_by_six_matches_characteristic_polynomial_roots() {
        // small dual-window-shaped matrix: cosine diagonal, constant hopping
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let theta = 0.137;
        let n = 6;
        let a = HermDense::from_fn(n, |i, j| {
            if i == j {
                let m = i as f64 - 2.0;
                Complex64::new(
                    2.0 * (2.0 * std::f64::consts::PI * (alpha * m + theta)).cos(),
                    0.0,
                )
            } else if i.abs_diff(j) == 1 {
                Complex64::new(0.4, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let res = eigh_hermitian(&a, false).unwrap();
        let bound = a.norm_bound() + 0.5;
        let roots = charpoly_roots(&a, -bound, bound);
        assert_eq!(roots.len(), n);
        for (v, r) in res.values.iter().zip(&roots) {
            assert!((v - r).abs() < 1e-8, "{v} vs oracle {r}");
        }
    }

    #[test]
    fn random_hermitian_contracts_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(2..=24);
            let mut a = HermDense::zeros(n);
            for i in 0..n {
                a.set(i, i, Complex64::new(rng.gen_range(-2.0..2.0), 0.0));
                for j in (i + 1)..n {
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    a.set(i, j, z);
                    a.set(j, i, z.conj());
                }
            }
            let res = eigh_hermitian(&a, true).unwrap();
            let bound = a.norm_bound();
            assert!(res.residual <= 1e-9 * bound, "residual {}", res.residual);
            let vecs = res.vectors.unwrap();
            assert_eq!(vecs.len(), n);
            assert!(super::super::max_pairwise_overlap(&vecs) < 1e-10);
        }
    }
}
