//! Small dense linear algebra on row-major slices.
//!
//! The polytopes handled here live in dimension q <= 5 or so, which makes plain
//! Gaussian elimination with partial pivoting the right tool.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves the square system `rows * x = rhs` (rows given as slices).
///
/// Returns `None` when a pivot falls below `pivot_tol` times the largest
/// absolute entry of the matrix.
pub fn solve_square(rows: &[&[f64]], rhs: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = rows.len();
    debug_assert_eq!(rhs.len(), n);
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.to_vec();
            row.push(*b);
            row
        })
        .collect();
    let big = rows.iter().map(|r| max_abs(r)).fold(0.0, f64::max);
    if big == 0.0 {
        return None;
    }
    let tol = pivot_tol * big;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= tol {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = a[r][n];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Row echelon reduction; returns (rank, reduced rows, pivot columns).
fn echelon(rows: &[&[f64]], dim: usize, pivot_tol: f64) -> (usize, Vec<Vec<f64>>, Vec<usize>) {
    let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let big = rows.iter().map(|r| max_abs(r)).fold(0.0, f64::max);
    let tol = pivot_tol * big.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..dim {
        if rank == a.len() {
            break;
        }
        let piv = (rank..a.len())
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= tol {
            continue;
        }
        a.swap(rank, piv);
        let p = a[rank][col];
        for c in col..dim {
            a[rank][c] /= p;
        }
        for r in 0..a.len() {
            if r != rank {
                let f = a[r][col];
                if f != 0.0 {
                    for c in col..dim {
                        a[r][c] -= f * a[rank][c];
                    }
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    (rank, a, pivots)
}

/// Numerical rank of a set of row vectors of length `dim`.
pub fn rank(rows: &[&[f64]], dim: usize, pivot_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    echelon(rows, dim, pivot_tol).0
}

/// A unit vector spanning the kernel of `rows` when that kernel is
/// one-dimensional; `None` otherwise.
pub fn kernel_direction(rows: &[&[f64]], dim: usize, pivot_tol: f64) -> Option<Vec<f64>> {
    if rows.is_empty() {
        return (dim == 1).then(|| vec![1.0]);
    }
    let (rank, red, pivots) = echelon(rows, dim, pivot_tol);
    if rank + 1 != dim {
        return None;
    }
    let free = (0..dim).find(|c| !pivots.contains(c))?;
    let mut d = vec![0.0; dim];
    d[free] = 1.0;
    for (r, &pc) in pivots.iter().enumerate() {
        d[pc] = -red[r][free];
    }
    let n = norm2(&d);
    Some(scale(&d, 1.0 / n))
}
