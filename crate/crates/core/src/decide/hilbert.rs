//! Minimal generators of `{ y ∈ ℕ^m : M y ≥ 0 }`.
//!
//! The inequality system is homogenized with slack variables
//! (`M y − s = 0`) and the minimal nonnegative solutions of the equation
//! system are computed by Contejean–Devie completion: grow candidate
//! vectors from the unit vectors, extending `t` by `e_i` only when the
//! defect `M t` and the column `M e_i` point in opposite half-spaces, and
//! prune anything dominated by an already-found solution. Projecting the
//! slack components away yields the Hilbert basis of the cone.
//!
//! Minimality lives in the homogenized space: `h` is redundant exactly
//! when `h' ≤ h` and `M h' ≤ M h` for another basis element `h'`. On the
//! `y` coordinates alone the basis need not be an antichain.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::DecideError;

pub type Int = BigInt;

/// A column-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub columns: Vec<Vec<Int>>,
}

impl IntMatrix {
    pub fn new(rows: usize, columns: Vec<Vec<Int>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.len() == rows));
        IntMatrix { rows, columns }
    }

    pub fn zero(rows: usize) -> Self {
        IntMatrix { rows, columns: Vec::new() }
    }

    pub fn from_u64_columns(rows: usize, columns: &[Vec<u64>]) -> Self {
        IntMatrix::new(
            rows,
            columns.iter().map(|c| c.iter().map(|&x| Int::from(x)).collect()).collect(),
        )
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        debug_assert_eq!(v.len(), self.cols());
        let mut out = vec![Int::zero(); self.rows];
        for (col, coeff) in self.columns.iter().zip(v) {
            if coeff.is_zero() {
                continue;
            }
            for (o, c) in out.iter_mut().zip(col) {
                *o += c * coeff;
            }
        }
        out
    }

    /// Componentwise difference of two equally-shaped matrices.
    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols(), other.cols());
        IntMatrix::new(
            self.rows,
            self.columns
                .iter()
                .zip(&other.columns)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        )
    }
}

fn leq(a: &[Int], b: &[Int]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn is_zero(v: &[Int]) -> bool {
    v.iter().all(|x| x.is_zero())
}

fn dot(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimal nonzero solutions of the homogeneous system `A z = 0`,
/// `z ∈ ℕ^n`, by completion. `cap` bounds the total number of candidate
/// vectors ever enqueued.
fn minimal_equation_solutions(
    a: &IntMatrix,
    cap: usize,
) -> Result<Vec<Vec<Int>>, DecideError> {
    let n = a.cols();
    let mut basis: Vec<Vec<Int>> = Vec::new();
    let mut frontier: Vec<(Vec<Int>, Vec<Int>)> = Vec::new();
    let mut enqueued = 0usize;

    for i in 0..n {
        let mut unit = vec![Int::zero(); n];
        unit[i] = Int::from(1);
        let defect = a.columns[i].clone();
        frontier.push((unit, defect));
    }
    enqueued += n;

    while !frontier.is_empty() {
        let mut next: Vec<(Vec<Int>, Vec<Int>)> = Vec::new();
        let mut seen: std::collections::BTreeSet<Vec<Int>> = std::collections::BTreeSet::new();
        for (t, defect) in frontier {
            if is_zero(&defect) {
                if !basis.iter().any(|b| leq(b, &t)) {
                    basis.push(t);
                }
                continue;
            }
            for i in 0..n {
                let col = &a.columns[i];
                if dot(&defect, col) >= Int::zero() {
                    continue;
                }
                let mut t2 = t.clone();
                t2[i] += 1;
                if basis.iter().any(|b| leq(b, &t2)) || seen.contains(&t2) {
                    continue;
                }
                let defect2: Vec<Int> = defect.iter().zip(col).map(|(d, c)| d + c).collect();
                seen.insert(t2.clone());
                next.push((t2, defect2));
                enqueued += 1;
                if enqueued > cap {
                    return Err(DecideError::ResourceCap { limit: cap });
                }
            }
        }
        frontier = next;
    }
    basis.sort();
    Ok(basis)
}

/// The Hilbert basis of `{ y ∈ ℕ^m : M y ≥ 0 }`: a finite set of
/// generators such that every solution is a nonnegative integer
/// combination, and none is a sum of others.
pub fn hilbert_basis(m: &IntMatrix, cap: usize) -> Result<Vec<Vec<Int>>, DecideError> {
    let vars = m.cols();
    let slacks = m.rows;
    // [M | -I] (y, s) = 0.
    let mut columns: Vec<Vec<Int>> = m.columns.clone();
    for i in 0..slacks {
        let mut col = vec![Int::zero(); slacks];
        col[i] = Int::from(-1);
        columns.push(col);
    }
    let extended = IntMatrix::new(slacks, columns);
    let solutions = minimal_equation_solutions(&extended, cap)?;
    let mut out: Vec<Vec<Int>> = solutions.into_iter().map(|z| z[..vars].to_vec()).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Every nonnegative integer solution of `M y ≥ 0`, `y ≠ 0`, with
/// componentwise bound `bound`. Reference implementation for tests.
pub fn bounded_solutions(m: &IntMatrix, bound: u64) -> Vec<Vec<Int>> {
    let n = m.cols();
    let mut out = Vec::new();
    let mut current = vec![Int::zero(); n];
    fn rec(
        m: &IntMatrix,
        bound: u64,
        idx: usize,
        current: &mut Vec<Int>,
        out: &mut Vec<Vec<Int>>,
    ) {
        if idx == current.len() {
            if !is_zero(current) && m.mul_vec(current).iter().all(|x| !x.is_negative()) {
                out.push(current.clone());
            }
            return;
        }
        for v in 0..=bound {
            current[idx] = Int::from(v);
            rec(m, bound, idx + 1, current, out);
        }
        current[idx] = Int::zero();
    }
    rec(m, bound, 0, &mut current, &mut out);
    out.sort();
    out
}
