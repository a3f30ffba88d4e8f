//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use locc_cert_core::operator::{ExactComplex, HermitianOperator, Mode};
use locc_cert_core::tree::{LoccTree, NodeSpec};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Sum of one or two `v v^H` with complex components drawn from
/// `{0, +-1/2, +-1}`, rejected until every real and imaginary part of the
/// result lies in `[-3, 3]`. Denominators stay at most 4.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator {
    let vals = [q(0, 1), q(1, 2), q(-1, 2), q(1, 1), q(-1, 1)];
    loop {
        let terms = rng.gen_range(1..=2);
        let mut acc = vec![ExactComplex::new(q(0, 1), q(0, 1)); d * d];
        for _ in 0..terms {
            let v: Vec<ExactComplex> = (0..d)
                .map(|_| {
                    let re = vals[rng.gen_range(0..vals.len())].clone();
                    let im = if rng.gen_bool(0.3) {
                        vals[rng.gen_range(0..vals.len())].clone()
                    } else {
                        q(0, 1)
                    };
                    Complex::new(re, im)
                })
                .collect();
            for i in 0..d {
                for j in 0..d {
                    acc[i * d + j] = &acc[i * d + j] + &v[i] * v[j].conj();
                }
            }
        }
        let bound = q(3, 1);
        let in_range = acc.iter().all(|z| z.re.abs() <= bound && z.im.abs() <= bound);
        if in_range && acc.iter().any(|z| !z.is_zero()) {
            return HermitianOperator::from_exact(d, acc).unwrap();
        }
    }
}

/// Up to six random generators on `C^d`, occasionally including the sum of
/// two earlier ones so that non-extreme members appear.
pub fn random_generator_set(rng: &mut ChaCha8Rng) -> Vec<HermitianOperator> {
    let d = rng.gen_range(1..=3);
    let k = rng.gen_range(1..=6);
    let mut gens: Vec<HermitianOperator> = Vec::with_capacity(k);
    while gens.len() < k {
        if gens.len() >= 2 && rng.gen_bool(0.25) {
            let a = rng.gen_range(0..gens.len());
            let b = rng.gen_range(0..gens.len());
            let s = gens[a].add(&gens[b]).unwrap();
            if s.exact_entries().unwrap().iter().all(|z| z.re.abs() <= q(3, 1) && z.im.abs() <= q(3, 1)) {
                gens.push(s);
                continue;
            }
        }
        gens.push(random_psd(rng, d));
    }
    gens
}

/// All `2 d^2` real and imaginary parts, row-major.
fn coords(op: &HermitianOperator) -> Vec<BigRational> {
    op.exact_entries()
        .unwrap()
        .iter()
        .flat_map(|z| [z.re.clone(), z.im.clone()])
        .collect()
}

/// Solves `A x = b` by Gauss-Jordan elimination when the columns of `A` are
/// linearly independent. `None` if they are dependent or the system is
/// inconsistent.
fn solve_independent(cols: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let m = b.len();
    let n = cols.len();
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row: Vec<BigRational> = cols.iter().map(|c| c[i].clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut r = 0;
    for c in 0..n {
        let p = (r..m).find(|&i| !a[i][c].is_zero())?;
        a.swap(r, p);
        let pv = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = &*v / &pv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
        r += 1;
    }
    if a[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    Some((0..n).map(|i| a[i][n].clone()).collect())
}

/// Brute-force conic membership: some linearly independent subset of the
/// generators solves for the target with nonnegative coefficients.
pub fn oracle_in_cone(target: &HermitianOperator, gens: &[HermitianOperator]) -> bool {
    let b = coords(target);
    let cols: Vec<Vec<BigRational>> = gens.iter().map(coords).collect();
    let k = cols.len();
    (1u32..(1 << k)).any(|mask| {
        let subset: Vec<Vec<BigRational>> = (0..k)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| cols[j].clone())
            .collect();
        solve_independent(&subset, &b).is_some_and(|x| x.iter().all(|v| !v.is_negative()))
    })
}

pub fn oracle_extreme(index: usize, reps: &[HermitianOperator]) -> bool {
    let others: Vec<HermitianOperator> = reps
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, r)| r.clone())
        .collect();
    !oracle_in_cone(&reps[index], &others)
}

/// Inner product in the real coordinates documented for the cone module:
/// diagonal entries, then `(re, im)` of each upper-triangular entry.
pub fn farkas_dot(y: &[BigRational], op: &HermitianOperator) -> BigRational {
    let d = op.dim();
    let e = op.exact_entries().unwrap();
    let mut s = BigRational::zero();
    for i in 0..d {
        s += &y[i] * &e[i * d + i].re;
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            s += &y[k] * &e[i * d + j].re;
            s += &y[k + 1] * &e[i * d + j].im;
            k += 2;
        }
    }
    s
}

/// `sum_j c_j G_j == target`, entrywise on full complex matrices.
pub fn recombines(target: &HermitianOperator, gens: &[HermitianOperator], c: &[BigRational]) -> bool {
    let t = target.exact_entries().unwrap();
    (0..t.len()).all(|i| {
        let mut s = ExactComplex::new(BigRational::zero(), BigRational::zero());
        for (g, cj) in gens.iter().zip(c) {
            let z = &g.exact_entries().unwrap()[i];
            s += Complex::new(&z.re * cj, &z.im * cj);
        }
        s == t[i]
    }) && c.iter().all(|v| !v.is_negative())
}

/// Random tree whose nonleaf nodes have 2 or 3 children, height at most
/// `max_height`. Single qubit party; labels are irrelevant to its shape.
pub fn random_branching_tree(rng: &mut ChaCha8Rng, max_height: usize) -> LoccTree {
    fn grow(rng: &mut ChaCha8Rng, depth: usize, max: usize, budget: &mut usize) -> Vec<NodeSpec> {
        let stop = depth >= max || *budget < 3 || rng.gen_bool(0.25 + 0.07 * depth as f64);
        if stop {
            return Vec::new();
        }
        let k = if rng.gen_bool(0.7) { 2 } else { 3 };
        *budget -= k;
        (0..k)
            .map(|_| {
                let children = grow(rng, depth + 1, max, budget);
                NodeSpec::node(0, HermitianOperator::identity(2, Mode::Exact), children)
            })
            .collect()
    }
    let mut budget = 400;
    let spec = NodeSpec::root(grow(rng, 0, max_height, &mut budget));
    LoccTree::from_spec(vec![2], Mode::Exact, &spec).unwrap()
}

/// Perfect binary tree of the given height.
pub fn perfect_tree(height: usize) -> LoccTree {
    fn grow(h: usize) -> Vec<NodeSpec> {
        if h == 0 {
            return Vec::new();
        }
        (0..2)
            .map(|_| NodeSpec::node(0, HermitianOperator::identity(2, Mode::Exact), grow(h - 1)))
            .collect()
    }
    LoccTree::from_spec(vec![2], Mode::Exact, &NodeSpec::root(grow(height))).unwrap()
}

/// Random full binary tree over two qubit parties with distinct diagonal
/// labels, plus random extreme flags (never on the root).
pub fn random_flagged_tree(rng: &mut ChaCha8Rng) -> (LoccTree, Vec<bool>) {
    fn grow(rng: &mut ChaCha8Rng, depth: usize, next: &mut i64) -> Vec<NodeSpec> {
        if depth >= 7 || rng.gen_bool(0.2 + 0.1 * depth as f64) {
            return Vec::new();
        }
        let party = rng.gen_range(0..2);
        (0..2)
            .map(|_| {
                *next += 1;
                let label = HermitianOperator::diag_ints(&[*next, 1]);
                let children = grow(rng, depth + 1, next);
                NodeSpec::node(party, label, children)
            })
            .collect()
    }
    let mut next = 0;
    let spec = NodeSpec::root(grow(rng, 0, &mut next));
    let t = LoccTree::from_spec(vec![2, 2], Mode::Exact, &spec).unwrap();
    let mut flags: Vec<bool> = (0..t.capacity()).map(|_| rng.gen_bool(0.5)).collect();
    flags[t.root()] = false;
    (t, flags)
}

/// Sorted `(party, label, flag)` payloads, for multiset comparison.
pub fn payloads(t: &LoccTree, flags: &[bool]) -> Vec<String> {
    let mut v: Vec<String> = t
        .preorder()
        .into_iter()
        .map(|id| format!("{:?}|{:?}|{}", t.node(id).party, t.node(id).label, flags[id]))
        .collect();
    v.sort();
    v
}
