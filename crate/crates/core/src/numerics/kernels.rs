//! Dense matrix kernels over row-major slices.
//!
//! Every output element accumulates its products in ascending inner-index
//! order, whatever the matrix sizes. Row results therefore never depend on
//! how many other rows are in the operand, which the exact padding and
//! causality properties of the model rely on.

use super::Float;

/// `out[m×n] += a[m×k] · b[k×n]`
pub fn gemm_nn<T: Float>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// `out[m×n] += a[m×k] · b[n×k]ᵀ`
pub fn gemm_nt<T: Float>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(b.len(), n * k);
    let bt = transpose(b, n, k);
    gemm_nn(a, &bt, out, m, k, n);
}

/// `out[m×n] += a[k×m]ᵀ · b[k×n]`
pub fn gemm_tn<T: Float>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for p in 0..k {
        let b_row = &b[p * n..(p + 1) * n];
        let a_row = &a[p * m..(p + 1) * m];
        for (i, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let out_row = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

pub fn transpose<T: Float>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut t = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        out
    }

    #[test]
    fn variants_agree_with_naive_product() {
        let (m, k, n) = (3, 4, 5);
        let a: Vec<f64> = (0..m * k).map(|v| v as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..k * n).map(|v| (v as f64).sin()).collect();
        let want = naive(&a, &b, m, k, n);

        let mut out = vec![0.0; m * n];
        gemm_nn(&a, &b, &mut out, m, k, n);
        assert_eq!(out, want);

        let mut out = vec![0.0; m * n];
        gemm_nt(&a, &transpose(&b, k, n), &mut out, m, k, n);
        assert_eq!(out, want);

        let mut out = vec![0.0; m * n];
        gemm_tn(&transpose(&a, m, k), &b, &mut out, m, k, n);
        assert_eq!(out, want);
    }
}
