//! Exact phase-1 simplex for `A x = b, x >= 0` over the rationals.
//!
//! The tableau keeps one artificial column per row so the final reduced
//! costs of the artificials give the dual vector directly. Entering and
//! leaving variables follow Bland's rule, so the method terminates and is
//! deterministic.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub enum Phase1Outcome {
    /// A nonnegative solution of `A x = b`.
    Feasible(Vec<BigRational>),
    /// `y` with `y^T A <= 0` and `y^T b > 0`.
    Infeasible(Vec<BigRational>),
}

/// `columns[j]` is column `j` of `A`; every column has length `b.len()`.
pub fn phase1(columns: &[Vec<BigRational>], b: &[BigRational]) -> Phase1Outcome {
    let m = b.len();
    let n = columns.len();
    let width = n + m;

    let sign: Vec<BigRational> = b
        .iter()
        .map(|bi| if bi.is_negative() { -BigRational::one() } else { BigRational::one() })
        .collect();

    // Row-major tableau: `width` coefficient columns then the right-hand side.
    let mut t: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(width + 1);
            row.extend(columns.iter().map(|col| &col[i] * &sign[i]));
            row.extend((0..m).map(|k| if k == i { BigRational::one() } else { BigRational::zero() }));
            row.push(&b[i] * &sign[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..width).collect();

    // Reduced costs for the objective `sum of artificials`; the last slot
    // holds minus the objective value.
    let mut cost = vec![BigRational::zero(); width + 1];
    for row in &t {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[width] -= &row[width];
    }

    while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for (i, row) in t.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[width] / &row[enter];
            let better = match &leave {
                None => true,
                Some((r, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*r]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // The phase-1 objective is bounded below, so some row must qualify.
        let (r, _) = leave.expect("phase-1 objective is bounded");
        pivot(&mut t, &mut cost, r, enter);
        basis[r] = enter;
    }

    if cost[width].is_zero() {
        let mut x = vec![BigRational::zero(); n];
        for (i, &v) in basis.iter().enumerate() {
            if v < n {
                x[v] = t[i][width].clone();
            }
        }
        Phase1Outcome::Feasible(x)
    } else {
        // Artificial i has unit cost, so its reduced cost is 1 - y_i.
        let y = (0..m)
            .map(|i| (BigRational::one() - &cost[n + i]) * &sign[i])
            .collect();
        Phase1Outcome::Infeasible(y)
    }
}

fn pivot(t: &mut [Vec<BigRational>], cost: &mut [BigRational], r: usize, c: usize) {
    let p = t[r][c].clone();
    for v in t[r].iter_mut() {
        *v /= &p;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (v, pr) in row.iter_mut().zip(&pivot_row) {
            if !pr.is_zero() {
                *v -= &f * pr;
            }
        }
    }
    if !cost[c].is_zero() {
        let f = cost[c].clone();
        for (v, pr) in cost.iter_mut().zip(&pivot_row) {
            if !pr.is_zero() {
                *v -= &f * pr;
            }
        }
    }
}
