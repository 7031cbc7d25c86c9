//! Plain discrete Fourier transform. Forward kernel e^{−2πijk/L},
//! unnormalized; inverse carries the 1/L factor. Direct O(L²) evaluation is
//! fine at the grid sizes used here, and the precomputed root table keeps
//! round-trips near machine precision.

use num_complex::Complex64;

fn roots(len: usize, sign: f64) -> Vec<Complex64> {
    (0..len)
        .map(|r| {
            let angle = sign * 2.0 * std::f64::consts::PI * r as f64 / len as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect()
}

fn transform(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let len = x.len();
    assert!(len >= 1, "dft needs at least one sample");
    let w = roots(len, sign);
    (0..len)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += xj * w[(j * k) % len];
            }
            acc
        })
        .collect()
}

/// Forward transform with kernel e^{−2πijk/L}, unnormalized.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, -1.0)
}

/// Inverse transform with kernel e^{+2πijk/L} and 1/L normalization.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let len = x.len();
    let mut out = transform(x, 1.0);
    let inv = 1.0 / len as f64;
    out.iter_mut().for_each(|z| *z *= inv);
    out
}
