//! Dense helpers for PCA: Householder QR and one-sided Jacobi SVD.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Right singular system of a matrix given as columns.
#[derive(Debug, Clone)]
pub struct RightSvd {
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors, one per singular value, each of length `ncols`.
    pub vectors: Vec<Vec<f64>>,
}

/// Upper-triangular R (as `ncols` columns of length `ncols`) of a tall matrix
/// given as columns, by Householder reflections. Requires `nrows >= ncols`.
fn householder_r(mut cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let ncols = cols.len();
    let nrows = cols.first().map_or(0, Vec::len);
    debug_assert!(nrows >= ncols);
    for k in 0..ncols {
        let alpha = {
            let x = &cols[k][k..];
            let nx = norm(x);
            if nx == 0.0 {
                continue;
            }
            if x[0] > 0.0 {
                -nx
            } else {
                nx
            }
        };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv == 0.0 {
            continue;
        }
        for col in cols.iter_mut().skip(k) {
            let s = 2.0 * dot(&v, &col[k..]) / vv;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
    }
    cols.into_iter()
        .enumerate()
        .map(|(j, c)| {
            let mut r = vec![0.0; ncols];
            r[..=j].copy_from_slice(&c[..=j]);
            r
        })
        .collect()
}

/// Singular values and right singular vectors of a matrix given as columns.
///
/// Tall inputs are first reduced to their R factor (same singular values and
/// right singular vectors), then orthogonalized with one-sided Jacobi rotations.
pub fn right_svd(cols: Vec<Vec<f64>>) -> RightSvd {
    let ncols = cols.len();
    let nrows = cols.first().map_or(0, Vec::len);
    let mut a = if nrows > ncols {
        householder_r(cols)
    } else {
        cols
    };
    let mut v: Vec<Vec<f64>> = (0..ncols)
        .map(|j| {
            let mut e = vec![0.0; ncols];
            e[j] = 1.0;
            e
        })
        .collect();

    const EPS: f64 = 1e-15;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..ncols {
            for q in (p + 1)..ncols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= EPS * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sv: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..ncols).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));
    RightSvd {
        singular_values: order.iter().map(|&i| sv[i]).collect(),
        vectors: order
            .into_iter()
            .map(|i| core::mem::take(&mut v[i]))
            .collect(),
    }
}

fn rotate(m: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = m.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        // columns of diag(1, 3, 2)
        let cols = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let svd = right_svd(cols);
        assert_eq!(svd.singular_values, vec![3.0, 2.0, 1.0]);
        assert_eq!(svd.vectors[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn tall_matrix_singular_values() {
        // 4x2 matrix with orthogonal columns of norms 5 and 2 after QR.
        let cols = vec![vec![3.0, 4.0, 0.0, 0.0], vec![0.0, 0.0, 2.0, 0.0]];
        let svd = right_svd(cols);
        assert!((svd.singular_values[0] - 5.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
        let svd = right_svd(cols);
        let s = libm::sqrt(14.0 * 5.0);
        assert!((svd.singular_values[0] - s).abs() < 1e-12);
        assert!(svd.singular_values[1].abs() < 1e-12);
        let v = &svd.vectors[0];
        assert!((v[0].abs() - 1.0 / libm::sqrt(5.0)).abs() < 1e-12);
    }
}
