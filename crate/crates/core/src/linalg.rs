//! Dense exact linear algebra over `Q[i]`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numeric::GaussianRational as GR;

pub type Matrix = Vec<Vec<GR>>;

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    vec![vec![GR::zero(); cols]; rows]
}

pub fn identity(n: usize) -> Matrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = GR::one();
    }
    m
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .filter(|(x, _)| !x.is_zero())
                        .map(|(x, brow)| x * &brow[j])
                        .sum()
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Matrix, v: &[GR]) -> Vec<GR> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].inv().expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut work = m.clone();
    rref(&mut work).len()
}

/// A basis of `{x : m x = 0}`.
pub fn nullspace(m: &Matrix) -> Vec<Vec<GR>> {
    let cols = m.first().map_or(0, Vec::len);
    let mut work = m.clone();
    let pivots = rref(&mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![GR::zero(); cols];
            v[f] = GR::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -&work[r][f];
            }
            v
        })
        .collect()
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("inverse of a non-square matrix"));
    }
    let mut aug: Matrix = m
        .iter()
        .zip(identity(n))
        .map(|(row, id)| row.iter().cloned().chain(id).collect())
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return Err(Error::Singular(format!("{n}x{n} matrix has rank < {n}")));
    }
    Ok(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Picks `cols` linearly independent rows of a tall matrix, or `None` when
/// the column rank is deficient. Rows are scanned in order, so earlier rows
/// are preferred.
pub fn independent_rows(m: &Matrix) -> Option<Vec<usize>> {
    let cols = m.first().map_or(0, Vec::len);
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Matrix = Vec::new();
    for (i, row) in m.iter().enumerate() {
        if chosen.len() == cols {
            break;
        }
        let mut trial = basis.clone();
        trial.push(row.clone());
        if rank(&trial) == trial.len() {
            basis = trial;
            chosen.push(i);
        }
    }
    (chosen.len() == cols).then_some(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GR {
        s.parse().unwrap()
    }

    fn m(rows: &[&[&str]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|s| g(s)).collect()).collect()
    }

    #[test]
    fn inverse_multiplies_to_identity() {
        let a = m(&[&["1", "i", "0"], &["2", "1/2", "1-i"], &["0", "3", "1"]]);
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(3));
        assert_eq!(mat_mul(&inv, &a), identity(3));
    }

    #[test]
    fn singular_detected() {
        let a = m(&[&["1", "2"], &["2", "4"]]);
        assert!(matches!(inverse(&a), Err(Error::Singular(_))));
        assert_eq!(rank(&a), 1);
        let ns = nullspace(&a);
        assert_eq!(ns.len(), 1);
        assert!(mat_vec(&a, &ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn picks_independent_rows() {
        let a = m(&[&["1", "1"], &["2", "2"], &["0", "1"], &["1", "0"]]);
        assert_eq!(independent_rows(&a), Some(vec![0, 2]));
        let b = m(&[&["1", "1"], &["2", "2"]]);
        assert_eq!(independent_rows(&b), None);
    }
}
