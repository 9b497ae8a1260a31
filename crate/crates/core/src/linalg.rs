//! Small dense linear algebra over `f64`.
//!
//! Matrices are row-major `Vec<Vec<f64>>`, sized for code/decode work where
//! `k` stays in the hundreds. Partial pivoting throughout; no external BLAS.

/// `n × n` identity.
pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Matrix-vector product `m · x`.
pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

/// Matrix product `a · b`.
pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).map(|(&aij, brow)| aij * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (rows, cols) = (m.len(), m[0].len());
    (0..cols).map(|j| (0..rows).map(|i| m[i][j]).collect()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(c: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn linf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximum absolute column sum (the induced 1-norm).
pub fn one_norm(m: &[Vec<f64>]) -> f64 {
    let cols = m[0].len();
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].abs()).sum())
        .fold(0.0, f64::max)
}

/// Neumaier-compensated sum. Keeps error O(eps) independent of length,
/// including when late terms are larger than the running sum.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Determinant via LU with partial pivoting. Works on a copy.
pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    debug_assert!(m.iter().all(|r| r.len() == n));
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for j in col..n {
                let sub = factor * a[col][j];
                a[row][j] -= sub;
            }
        }
    }
    det
}

/// Inverse via Gauss-Jordan with partial pivoting. `None` when a pivot
/// degenerates to (near-)zero; callers needing a tolerance policy should
/// check a scaled determinant first.
pub fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    debug_assert!(m.iter().all(|r| r.len() == n));
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let scale = 1.0 / a[col][col];
        for j in 0..n {
            a[col][j] *= scale;
            inv[col][j] *= scale;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                let (ac, ic) = (a[col][j], inv[col][j]);
                a[row][j] -= factor * ac;
                inv[row][j] -= factor * ic;
            }
        }
    }
    Some(inv)
}

/// Power-iteration estimate of the largest singular value of `m`.
///
/// Iterates `v ← normalize(MᵀM v)` from a fixed pseudo-random start and
/// returns `‖M v‖`. The estimate never exceeds the true norm and is
/// nondecreasing in `iters` (Rayleigh quotient of a PSD operator).
pub fn spectral_norm(m: &[Vec<f64>], iters: usize) -> f64 {
    let cols = m[0].len();
    // Fixed start: SplitMix-style hash per index, shifted into (0.25, 1.25)
    // so no coordinate vanishes and runs are reproducible.
    let mut v: Vec<f64> = (0..cols)
        .map(|i| {
            let h = crate::rng::derive_seed(0x5eed_0_5eed, i as u64);
            0.25 + (h >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let nv = l2_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    for _ in 0..iters {
        let u = mat_vec(m, &v);
        let w: Vec<f64> = (0..cols).map(|j| m.iter().zip(&u).map(|(row, &ui)| row[j] * ui).sum()).collect();
        let nw = l2_norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / nw).collect();
    }
    l2_norm(&mat_vec(m, &v))
}
