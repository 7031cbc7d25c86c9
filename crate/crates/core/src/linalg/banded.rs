//! Hermitian band matrices with LDLᵀ inertia counting, the workhorse for
//! eigenvalue counting on one-dimensional dual windows whose bandwidth
//! equals the potential degree.

use num_complex::Complex64;

/// Hermitian band matrix: real diagonal plus `bw` lower bands;
/// `bands[b - 1][i] = A[i + b][i]`.
#[derive(Debug, Clone)]
pub struct HermBanded {
    pub diag: Vec<f64>,
    pub bands: Vec<Vec<Complex64>>,
}

impl HermBanded {
    pub fn new(diag: Vec<f64>, bands: Vec<Vec<Complex64>>) -> Self {
        let n = diag.len();
        for (b, band) in bands.iter().enumerate() {
            assert_eq!(band.len(), n - (b + 1), "band {} has wrong length", b + 1);
        }
        HermBanded { diag, bands }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        // i > j within the band
        let b = i - j;
        if b == 0 {
            Complex64::new(self.diag[i], 0.0)
        } else {
            self.bands[b - 1][j]
        }
    }

    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        let bw = self.bandwidth();
        let mut bound = 0.0f64;
        for i in 0..n {
            let mut row = self.diag[i].abs();
            for b in 1..=bw {
                if i >= b {
                    row += self.entry(i, i - b).norm();
                }
                if i + b < n {
                    row += self.entry(i + b, i).norm();
                }
            }
            bound = bound.max(row);
        }
        bound.max(f64::MIN_POSITIVE)
    }

    /// Dense copy, for small boxes that need full eigenvectors.
    pub fn to_dense(&self) -> super::HermDense {
        let n = self.len();
        let bw = self.bandwidth();
        super::HermDense::from_fn(n, |i, j| {
            if i >= j && i - j <= bw {
                self.entry(i, j)
            } else if j > i && j - i <= bw {
                self.entry(j, i).conj()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Number of eigenvalues strictly below `e`: negative pivots of the
    /// LDLᵀ factorization of `A − eI`, with the usual tiny-pivot guard.
    pub fn count_below(&self, e: f64) -> usize {
        let n = self.len();
        let bw = self.bandwidth();
        if bw == 0 {
            return self.diag.iter().filter(|&&d| d - e < 0.0).count();
        }
        let max_band = self
            .bands
            .iter()
            .flatten()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        let pivmin = f64::MIN_POSITIVE.max(f64::MIN_POSITIVE * max_band * max_band);

        // l[b - 1][j] = L[j + b][j]
        let mut l: Vec<Vec<Complex64>> = (1..=bw)
            .map(|b| vec![Complex64::new(0.0, 0.0); n - b])
            .collect();
        let mut d = vec![0.0f64; n];
        let mut count = 0usize;

        for j in 0..n {
            let mut dj = self.diag[j] - e;
            let k_lo = j.saturating_sub(bw);
            for k in k_lo..j {
                dj -= l[j - k - 1][k].norm_sqr() * d[k];
            }
            let dj = if dj.abs() <= pivmin { -pivmin } else { dj };
            d[j] = dj;
            if dj < 0.0 {
                count += 1;
            }
            let i_hi = (j + bw).min(n - 1);
            for i in (j + 1)..=i_hi {
                let mut num = self.entry(i, j);
                let k_lo = i.saturating_sub(bw).max(0);
                for k in k_lo..j {
                    num -= l[i - k - 1][k] * l[j - k - 1][k].conj() * d[k];
                }
                l[i - j - 1][j] = num / dj;
            }
        }
        count
    }
}
