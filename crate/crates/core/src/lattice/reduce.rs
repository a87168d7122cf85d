//! LLL reduction used to make enumeration cheap on skewed bases.

use nalgebra::DMatrix;

/// Lovász constant.
pub const LLL_DELTA: f64 = 0.99;

/// Gram–Schmidt data of the columns of `b`: `mu[i][j]` for `j < i` and the
/// squared norms of the orthogonalized vectors.
fn gram_schmidt(b: &DMatrix<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = b.ncols();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v: Vec<f64> = b.column(i).iter().copied().collect();
        for j in 0..i {
            let dot: f64 = b.column(i).iter().zip(&star[j]).map(|(a, c)| a * c).sum();
            mu[i][j] = dot / norms[j];
            v.iter_mut()
                .zip(&star[j])
                .for_each(|(a, c)| *a -= mu[i][j] * c);
        }
        norms[i] = v.iter().map(|x| x * x).sum();
        star.push(v);
    }
    (mu, norms)
}

fn set_column(reduced: &mut DMatrix<f64>, basis: &DMatrix<f64>, u: &[Vec<i64>], k: usize) {
    let n = basis.nrows();
    for r in 0..n {
        reduced[(r, k)] = (0..u.len()).map(|j| basis[(r, j)] * u[j][k] as f64).sum();
    }
}

/// LLL-reduces the columns of `basis`.  Returns the reduced basis and the
/// unimodular `U` (row-major, `reduced = basis · U`).  Reduced columns are
/// recomputed from `basis` and the exact integer `U` after every update so
/// rounding does not accumulate.
pub fn lll(basis: &DMatrix<f64>) -> (DMatrix<f64>, Vec<Vec<i64>>) {
    let n = basis.ncols();
    let mut u: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    let mut b = basis.clone();
    if n < 2 {
        return (b, u);
    }
    let (mut mu, mut norms) = gram_schmidt(&b);
    let mut k = 1;
    let mut guard = 0u64;
    while k < n {
        guard += 1;
        if guard > 1_000_000 {
            log::warn!("LLL iteration guard hit; basis left partially reduced");
            break;
        }
        for j in (0..k).rev() {
            let c = mu[k][j].round();
            if c != 0.0 {
                let ci = c as i64;
                for row in u.iter_mut() {
                    row[k] -= ci * row[j];
                }
                set_column(&mut b, basis, &u, k);
                (mu, norms) = gram_schmidt(&b);
            }
        }
        if norms[k] >= (LLL_DELTA - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            b.swap_columns(k, k - 1);
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            (mu, norms) = gram_schmidt(&b);
            k = (k - 1).max(1);
        }
    }
    (b, u)
}
