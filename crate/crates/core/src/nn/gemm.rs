//! Thin safe wrappers over `matrixmultiply::dgemm` for the three product
//! layouts the layers need. All matrices are dense row-major.

fn check(name: &str, len: usize, rows: usize, cols: usize) {
    assert!(
        len >= rows * cols,
        "{name}: buffer of {len} too small for {rows}x{cols}"
    );
}

/// `out (m×n) = beta·out + a (m×k) · bᵀ` where `b` is stored `n×k`.
pub(crate) fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64], beta: f64) {
    check("a", a.len(), m, k);
    check("b", b.len(), n, k);
    check("out", out.len(), m, n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above bound every access dgemm performs.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n,
            1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            beta,
            out.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `out (m×n) = beta·out + aᵀ · b` where `a` is stored `k×m` and `b` is `k×n`.
pub(crate) fn matmul_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64], beta: f64) {
    check("a", a.len(), k, m);
    check("b", b.len(), k, n);
    check("out", out.len(), m, n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: see matmul_nt.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n,
            1.0,
            a.as_ptr(), 1, m as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            out.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `out (m×n) = beta·out + a (m×k) · b (k×n)`.
pub(crate) fn matmul_nn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64], beta: f64) {
    check("a", a.len(), m, k);
    check("b", b.len(), k, n);
    check("out", out.len(), m, n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: see matmul_nt.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n,
            1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            beta,
            out.as_mut_ptr(), n as isize, 1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    out[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        out
    }

    fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut t = vec![0.0; x.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = x[r * cols + c];
            }
        }
        t
    }

    #[test]
    fn layouts_agree_with_naive_product() {
        let (m, k, n) = (5, 7, 3);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.91).cos()).collect();
        let expected = naive(&a, &b, m, k, n);

        let mut out = vec![0.0; m * n];
        matmul_nn(&a, &b, m, k, n, &mut out, 0.0);
        for (x, y) in out.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }

        let bt = transpose(&b, k, n);
        matmul_nt(&a, &bt, m, k, n, &mut out, 0.0);
        for (x, y) in out.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }

        let at = transpose(&a, m, k);
        matmul_tn(&at, &b, m, k, n, &mut out, 0.0);
        for (x, y) in out.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
