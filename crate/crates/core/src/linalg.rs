//! Small dense-matrix helpers shared by the attention and encoder math.
//! Everything is f64; the gradient checks need the headroom.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Row-wise softmax with max subtraction. Rows of the result sum to 1.
pub fn softmax_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Backward through a row-wise softmax: given s = softmax(a) and ds, return
/// da where da_ij = s_ij * (ds_ij - sum_k ds_ik s_ik).
pub fn softmax_backward_rows(s: &Array2<f64>, ds: &Array2<f64>) -> Array2<f64> {
    let mut da = Array2::zeros(s.raw_dim());
    for ((mut da_row, s_row), ds_row) in
        da.rows_mut().into_iter().zip(s.rows()).zip(ds.rows())
    {
        let dot: f64 = s_row.iter().zip(ds_row.iter()).map(|(a, b)| a * b).sum();
        for ((d, s_v), ds_v) in da_row.iter_mut().zip(s_row.iter()).zip(ds_row.iter()) {
            *d = s_v * (ds_v - dot);
        }
    }
    da
}

/// Row-wise L2 normalization. A zero row stays zero: the normalizer is
/// undefined there and the zero choice keeps the downstream Gram matrix
/// continuous and positive semidefinite.
pub fn l2_normalize_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    out
}

/// Backward through row-wise L2 normalization: m has the normalized rows,
/// raw the pre-normalization input. For a zero row the forward is constant
/// zero, so the gradient is zero.
pub fn l2_normalize_rows_backward(
    raw: &Array2<f64>,
    normalized: &Array2<f64>,
    d_normalized: &Array2<f64>,
) -> Array2<f64> {
    let mut d_raw = Array2::zeros(raw.raw_dim());
    for (((mut dr, r), n), dn) in d_raw
        .rows_mut()
        .into_iter()
        .zip(raw.rows())
        .zip(normalized.rows())
        .zip(d_normalized.rows())
    {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let dot: f64 = n.iter().zip(dn.iter()).map(|(a, b)| a * b).sum();
        for ((d, n_v), dn_v) in dr.iter_mut().zip(n.iter()).zip(dn.iter()) {
            *d = (dn_v - n_v * dot) / norm;
        }
    }
    d_raw
}

/// Matrix filled from N(0, std^2).
pub fn randn_matrix<R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Array2<f64> {
    let dist = Normal::new(0.0, std).unwrap();
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

pub fn randn_vector<R: Rng>(len: usize, std: f64, rng: &mut R) -> Array1<f64> {
    let dist = Normal::new(0.0, std).unwrap();
    Array1::from_shape_fn(len, |_| dist.sample(rng))
}

/// Max absolute difference between two matrices of equal shape.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn softmax_rows_sum_to_one() {
        let m = array![[1.0, 2.0, 3.0], [-5.0, 0.0, 5.0]];
        let s = softmax_rows(&m);
        for row in s.rows() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let m = array![[1.0, 2.0, 3.0]];
        let shifted = array![[101.0, 102.0, 103.0]];
        assert!(max_abs_diff(&softmax_rows(&m), &softmax_rows(&shifted)) < 1e-15);
    }

    #[test]
    fn l2_normalize_handles_zero_rows() {
        let m = array![[0.0, 0.0], [3.0, 4.0]];
        let n = l2_normalize_rows(&m);
        assert_eq!(n.row(0).to_vec(), vec![0.0, 0.0]);
        assert!((n.row(1)[0] - 0.6).abs() < 1e-15);
        assert!((n.row(1)[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let a = array![[0.3, -1.2, 0.7], [2.0, 0.1, -0.4]];
        let ds = array![[0.5, -0.25, 1.0], [-1.0, 0.75, 0.1]];
        let analytic = softmax_backward_rows(&softmax_rows(&a), &ds);
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut ap = a.clone();
                let mut am = a.clone();
                ap[[i, j]] += h;
                am[[i, j]] -= h;
                let fp: f64 = (softmax_rows(&ap) * &ds).sum();
                let fm: f64 = (softmax_rows(&am) * &ds).sum();
                let numeric = (fp - fm) / (2.0 * h);
                assert!(
                    (numeric - analytic[[i, j]]).abs() < 1e-7,
                    "({i},{j}): {numeric} vs {}",
                    analytic[[i, j]]
                );
            }
        }
    }

    #[test]
    fn l2_backward_matches_finite_differences() {
        let a = array![[0.3, -1.2, 0.7], [2.0, 0.1, -0.4]];
        let dn = array![[0.5, -0.25, 1.0], [-1.0, 0.75, 0.1]];
        let analytic = l2_normalize_rows_backward(&a, &l2_normalize_rows(&a), &dn);
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut ap = a.clone();
                let mut am = a.clone();
                ap[[i, j]] += h;
                am[[i, j]] -= h;
                let fp: f64 = (l2_normalize_rows(&ap) * &dn).sum();
                let fm: f64 = (l2_normalize_rows(&am) * &dn).sum();
                let numeric = (fp - fm) / (2.0 * h);
                assert!((numeric - analytic[[i, j]]).abs() < 1e-7);
            }
        }
    }
}
