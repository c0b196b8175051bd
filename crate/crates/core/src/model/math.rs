//! Dense f64 kernels for the classifier: matrix products, softmax, GELU and
//! layer normalization, each with its analytic backward pass.
//!
//! All matrices are row-major slices with explicit dimensions.

/// out[m x n] = a[m x k] * b[k x n]
pub fn matmul(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    out.fill(0.0);
    matmul_acc(out, a, b, m, k, n);
}

/// out[m x n] += a[m x k] * b[k x n]
pub fn matmul_acc(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// out[m x n] = a[m x k] * b^T where b is [n x k]
pub fn matmul_bt(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (av, bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            out[i * n + j] = acc;
        }
    }
}

/// out[k x n] += a^T * b where a is [m x k], b is [m x n]
pub fn matmul_at_acc(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let b_row = &b[i * n..(i + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let out_row = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// y[rows x out] = x[rows x in] * w^T + b, with w stored [out x in].
pub fn linear(y: &mut [f64], x: &[f64], w: &[f64], b: &[f64], rows: usize, din: usize, dout: usize) {
    matmul_bt(y, x, w, rows, din, dout);
    for r in 0..rows {
        let row = &mut y[r * dout..(r + 1) * dout];
        for (v, bv) in row.iter_mut().zip(b) {
            *v += bv;
        }
    }
}

/// Backward of `linear`: accumulates dw/db and writes dx.
/// dx[rows x in] = dy * w; dw[out x in] += dy^T * x; db[out] += column sums of dy.
#[allow(clippy::too_many_arguments)]
pub fn linear_backward(
    dx: &mut [f64],
    dw: &mut [f64],
    db: &mut [f64],
    dy: &[f64],
    x: &[f64],
    w: &[f64],
    rows: usize,
    din: usize,
    dout: usize,
) {
    matmul(dx, dy, w, rows, dout, din);
    matmul_at_acc(dw, dy, x, rows, dout, din);
    for r in 0..rows {
        let dy_row = &dy[r * dout..(r + 1) * dout];
        for (d, &g) in db.iter_mut().zip(dy_row) {
            *d += g;
        }
    }
}

/// Numerically stable in-place row softmax.
pub fn softmax_rows(x: &mut [f64], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &mut x[r * cols..(r + 1) * cols];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = 1.0 / sum;
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
}

/// Backward of row softmax given outputs `y`: dx = y .* (dy - (dy . y)).
pub fn softmax_rows_backward(dx: &mut [f64], dy: &[f64], y: &[f64], rows: usize, cols: usize) {
    for r in 0..rows {
        let y_row = &y[r * cols..(r + 1) * cols];
        let dy_row = &dy[r * cols..(r + 1) * cols];
        let dot: f64 = y_row.iter().zip(dy_row).map(|(a, b)| a * b).sum();
        let dx_row = &mut dx[r * cols..(r + 1) * cols];
        for i in 0..cols {
            dx_row[i] = y_row[i] * (dy_row[i] - dot);
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// GELU (tanh approximation), elementwise.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    let sech2 = 1.0 - t * t;
    0.5 * (1.0 + t) + 0.5 * x * sech2 * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Per-row layer normalization with affine parameters.
/// Writes y and caches (xhat, inv_std) for the backward pass.
#[allow(clippy::too_many_arguments)]
pub fn layernorm(
    y: &mut [f64],
    xhat: &mut [f64],
    inv_std: &mut [f64],
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    rows: usize,
    cols: usize,
) {
    const EPS: f64 = 1e-5;
    for r in 0..rows {
        let x_row = &x[r * cols..(r + 1) * cols];
        let mean = x_row.iter().sum::<f64>() / cols as f64;
        let var = x_row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let istd = 1.0 / (var + EPS).sqrt();
        inv_std[r] = istd;
        let xhat_row = &mut xhat[r * cols..(r + 1) * cols];
        let y_row = &mut y[r * cols..(r + 1) * cols];
        for i in 0..cols {
            let h = (x_row[i] - mean) * istd;
            xhat_row[i] = h;
            y_row[i] = h * gamma[i] + beta[i];
        }
    }
}

/// Backward of `layernorm`; accumulates dgamma/dbeta, writes dx.
#[allow(clippy::too_many_arguments)]
pub fn layernorm_backward(
    dx: &mut [f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
    dy: &[f64],
    xhat: &[f64],
    inv_std: &[f64],
    gamma: &[f64],
    rows: usize,
    cols: usize,
) {
    let n = cols as f64;
    for r in 0..rows {
        let dy_row = &dy[r * cols..(r + 1) * cols];
        let xhat_row = &xhat[r * cols..(r + 1) * cols];
        let mut sum_dxhat = 0.0;
        let mut sum_dxhat_xhat = 0.0;
        for i in 0..cols {
            let dxhat = dy_row[i] * gamma[i];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat_row[i];
            dgamma[i] += dy_row[i] * xhat_row[i];
            dbeta[i] += dy_row[i];
        }
        let dx_row = &mut dx[r * cols..(r + 1) * cols];
        for i in 0..cols {
            let dxhat = dy_row[i] * gamma[i];
            dx_row[i] =
                inv_std[r] * (dxhat - sum_dxhat / n - xhat_row[i] * sum_dxhat_xhat / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small_oracle() {
        // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut out = [0.0; 4];
        matmul(&mut out, &a, &b, 2, 2, 2);
        assert_eq!(out, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_bt_matches_transposed_matmul() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let b = [1.0, 0.5, -1.0, 2.0, 0.0, 1.0]; // 2x3 (acting as B^T)
        let mut out = [0.0; 4];
        matmul_bt(&mut out, &a, &b, 2, 3, 2);
        // Row 0 of a dot rows of b.
        assert_eq!(out, [
            1.0 + 1.0 - 3.0,
            2.0 + 0.0 + 3.0,
            4.0 + 2.5 - 6.0,
            8.0 + 0.0 + 6.0
        ]);
    }

    #[test]
    fn softmax_rows_normalize() {
        let mut x = vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0];
        softmax_rows(&mut x, 2, 3);
        for r in 0..2 {
            let sum: f64 = x[r * 3..(r + 1) * 3].iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        assert!(x[2] > x[1] && x[1] > x[0]);
    }

    #[test]
    fn single_element_softmax_is_one() {
        let mut x = vec![42.0];
        softmax_rows(&mut x, 1, 1);
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn gelu_grad_matches_finite_difference() {
        let eps = 1e-6;
        for &x in &[-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0] {
            let fd = (gelu(x + eps) - gelu(x - eps)) / (2.0 * eps);
            assert!(
                (gelu_grad(x) - fd).abs() < 1e-7,
                "x={x}: analytic {} vs fd {fd}",
                gelu_grad(x)
            );
        }
    }

    #[test]
    fn layernorm_rows_are_standardized() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 10.0, 20.0, 30.0, 40.0];
        let gamma = vec![1.0; 4];
        let beta = vec![0.0; 4];
        let mut y = vec![0.0; 8];
        let mut xhat = vec![0.0; 8];
        let mut inv_std = vec![0.0; 2];
        layernorm(&mut y, &mut xhat, &mut inv_std, &x, &gamma, &beta, 2, 4);
        for r in 0..2 {
            let row = &y[r * 4..(r + 1) * 4];
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }
}
