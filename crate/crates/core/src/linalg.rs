//! Dense row-major helpers for the small `d x d` matrices of the flow.

pub(crate) fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// `out = a * b`.
pub(crate) fn matmul(a: &[f64], b: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for k in 0..d {
            out[i * d + k] = (0..d).map(|l| a[i * d + l] * b[l * d + k]).sum();
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant(a: &[f64], d: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..d {
        let p = (c..d)
            .max_by(|&i, &j| m[i * d + c].abs().total_cmp(&m[j * d + c].abs()))
            .unwrap();
        if m[p * d + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..d {
                m.swap(p * d + k, c * d + k);
            }
            det = -det;
        }
        let pivot = m[c * d + c];
        det *= pivot;
        for r in (c + 1)..d {
            let f = m[r * d + c] / pivot;
            for k in c..d {
                m[r * d + k] -= f * m[c * d + k];
            }
        }
    }
    det
}

/// Largest absolute entry of `a * b - I`.
pub(crate) fn inverse_residual(a: &[f64], b: &[f64], d: usize) -> f64 {
    let mut p = vec![0.0; d * d];
    matmul(a, b, d, &mut p);
    let mut worst = 0.0f64;
    for i in 0..d {
        for k in 0..d {
            let target = if i == k { 1.0 } else { 0.0 };
            worst = worst.max((p[i * d + k] - target).abs());
        }
    }
    worst
}
