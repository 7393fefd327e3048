//! Small dense helpers shared by the classifier, the flow and the Reeb solver.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::symexpr::Expression;

/// Relative singular-value threshold used for every numeric rank decision.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Exact determinant by cofactor expansion along rows, memoized on the set of
/// remaining columns. Fine for the 4×4 and 6×6 systems that occur here.
pub fn symbolic_det(m: &[Vec<Expression>]) -> Expression {
    let n = m.len();
    assert!(n < 32 && m.iter().all(|r| r.len() == n), "square matrix of size < 32");
    let mut memo = HashMap::new();
    det_rec(m, 0, (1u32 << n) - 1, &mut memo)
}

fn det_rec(m: &[Vec<Expression>], row: usize, cols: u32, memo: &mut HashMap<u32, Expression>) -> Expression {
    if cols == 0 {
        return Expression::one();
    }
    if let Some(d) = memo.get(&cols) {
        return d.clone();
    }
    let mut total = Expression::zero();
    let mut sign_neg = false;
    for j in 0..m.len() {
        if cols & (1 << j) == 0 {
            continue;
        }
        let a = &m[row][j];
        if !a.is_zero() {
            let minor = det_rec(m, row + 1, cols & !(1 << j), memo);
            let t = a * &minor;
            total = if sign_neg { total - t } else { total + t };
        }
        sign_neg = !sign_neg;
    }
    memo.insert(cols, total.clone());
    total
}

/// Pfaffian of an antisymmetric matrix of even size, by expansion along the
/// first row. `Pf(J) = 1` for `J = [[0, 1], [-1, 0]]` blocks.
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n % 2 == 1 {
        return 0.0;
    }
    let idx: Vec<usize> = (0..n).collect();
    pf_rec(m, &idx)
}

fn pf_rec(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let i = idx[0];
    let mut total = 0.0;
    for (k, &j) in idx.iter().enumerate().skip(1) {
        let a = m[(i, j)];
        if a == 0.0 {
            continue;
        }
        let rest: Vec<usize> = idx[1..].iter().copied().filter(|&l| l != j).collect();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * a * pf_rec(m, &rest);
    }
    total
}

/// Numeric rank: singular values above `RANK_TOLERANCE · σ_max`.
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// Solves `m x = b` for square `m`; `None` when numerically singular.
pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if numeric_rank(m) < m.nrows() {
        return None;
    }
    m.clone().lu().solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_det_matches_cofactor_expansion() {
        let e = |s: &str| Expression::parse(s).unwrap();
        let m = vec![vec![e("a"), e("b")], vec![e("c"), e("d")]];
        assert_eq!(symbolic_det(&m), e("a*d - b*c"));
        let id: Vec<Vec<Expression>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { e("x") } else { Expression::zero() }).collect())
            .collect();
        assert_eq!(symbolic_det(&id), e("x^4"));
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 1.5, -2.0, 0.3, -1.5, 0.0, 0.7, 4.0, 2.0, -0.7, 0.0, -1.1, -0.3, -4.0, 1.1, 0.0],
        );
        let pf = pfaffian(&m);
        // a12 a34 - a13 a24 + a14 a23
        assert!((pf - (1.5 * -1.1 - (-2.0) * 4.0 + 0.3 * 0.7)).abs() < 1e-14);
        assert!((pf * pf - m.determinant()).abs() < 1e-10);
    }

    #[test]
    fn rank_and_solve() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(numeric_rank(&m), 1);
        assert!(solve(&m, &DVector::from_vec(vec![1.0, 1.0])).is_none());
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let x = solve(&m, &DVector::from_vec(vec![2.0, 3.0])).unwrap();
        assert_eq!(x.as_slice(), &[-3.0, 2.0]);
        assert_eq!(numeric_rank(&DMatrix::zeros(3, 3)), 0);
    }
}
