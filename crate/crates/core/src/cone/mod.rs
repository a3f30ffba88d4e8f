//! Conic membership and extreme-ray classification for finitely generated
//! cones of positive semidefinite operators.
//!
//! Hermitian matrices are linearized into real vectors of length `d^2` and
//! membership is decided by an exact phase-1 simplex. Every answer carries a
//! witness (a nonnegative combination or a Farkas separator) that is checked
//! against the inputs before it is returned.

mod simplex;

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{dedupe_rays, ExactComplex, HermitianOperator, Mode, Tolerances};

pub use simplex::{phase1, Phase1Outcome};

/// Real coordinates of a Hermitian matrix: the `d` diagonal entries, then the
/// real and imaginary parts of each `(i, j)`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub enum RealVector {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

pub fn hermitian_to_real_vector(op: &HermitianOperator) -> RealVector {
    let d = op.dim();
    if let Some(e) = op.exact_entries() {
        let mut v: Vec<BigRational> = (0..d).map(|i| e[i * d + i].re.clone()).collect();
        for i in 0..d {
            for j in (i + 1)..d {
                v.push(e[i * d + j].re.clone());
                v.push(e[i * d + j].im.clone());
            }
        }
        RealVector::Exact(v)
    } else {
        let e = op.float_entries().expect("float mode");
        let mut v: Vec<f64> = (0..d).map(|i| e[i * d + i].re).collect();
        for i in 0..d {
            for j in (i + 1)..d {
                v.push(e[i * d + j].re);
                v.push(e[i * d + j].im);
            }
        }
        RealVector::Float(v)
    }
}

/// Inverse of [`hermitian_to_real_vector`] for exact vectors.
pub fn real_vector_to_hermitian(dim: usize, v: &[BigRational]) -> Result<HermitianOperator> {
    if v.len() != dim * dim {
        return Err(Error::BadEntryCount {
            dim,
            expected: dim * dim,
            found: v.len(),
        });
    }
    let mut entries = vec![ExactComplex::zero(); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = Complex::new(v[i].clone(), BigRational::zero());
    }
    let mut k = dim;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let z = Complex::new(v[k].clone(), v[k + 1].clone());
            entries[j * dim + i] = z.conj();
            entries[i * dim + j] = z;
            k += 2;
        }
    }
    HermitianOperator::from_exact(dim, entries)
}

fn exact_coords(op: &HermitianOperator) -> Vec<BigRational> {
    match hermitian_to_real_vector(op) {
        RealVector::Exact(v) => v,
        RealVector::Float(_) => unreachable!("caller checked exact mode"),
    }
}

/// Answer to "is `target` a nonnegative combination of the generators?".
#[derive(Clone, Debug, PartialEq)]
pub enum ConicWitness {
    /// `sum_j coefficients[j] * generators[j] == target`, all coefficients >= 0.
    Feasible { coefficients: Vec<BigRational> },
    /// `<y, vec(A_j)> <= 0` for every generator and `<y, vec(target)> > 0`.
    Infeasible { farkas: Vec<BigRational> },
}

impl ConicWitness {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ConicWitness::Feasible { .. })
    }

    /// Exact recheck of the witness against the inputs.
    pub fn verify(&self, target: &HermitianOperator, generators: &[HermitianOperator]) -> bool {
        if target.mode() != Mode::Exact || generators.iter().any(|g| g.mode() != Mode::Exact) {
            return false;
        }
        let b = exact_coords(target);
        let cols: Vec<_> = generators.iter().map(exact_coords).collect();
        verify_coords(self, &b, &cols)
    }
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn verify_coords(w: &ConicWitness, b: &[BigRational], cols: &[Vec<BigRational>]) -> bool {
    match w {
        ConicWitness::Feasible { coefficients } => {
            if coefficients.len() != cols.len() || coefficients.iter().any(Signed::is_negative) {
                return false;
            }
            (0..b.len()).all(|i| {
                let s: BigRational = cols.iter().zip(coefficients).map(|(c, l)| &c[i] * l).sum();
                s == b[i]
            })
        }
        ConicWitness::Infeasible { farkas } => {
            farkas.len() == b.len()
                && dot(farkas, b).is_positive()
                && cols.iter().all(|c| !dot(farkas, c).is_positive())
        }
    }
}

static WITNESS_CHECKS: AtomicU64 = AtomicU64::new(0);

/// Number of witnesses verified by [`conic_membership`] in this process.
pub fn witness_checks_performed() -> u64 {
    WITNESS_CHECKS.load(Ordering::Relaxed)
}

/// Decides exact conic membership of `target` in the cone of `generators`.
pub fn conic_membership(
    target: &HermitianOperator,
    generators: &[HermitianOperator],
) -> Result<ConicWitness> {
    for op in std::iter::once(target).chain(generators) {
        if op.mode() != Mode::Exact {
            return Err(Error::UnsupportedBackend {
                what: "conic membership runs on exact rationals only".into(),
            });
        }
        if op.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: op.dim(),
            });
        }
    }
    let b = exact_coords(target);
    let cols: Vec<_> = generators.iter().map(exact_coords).collect();
    let witness = match phase1(&cols, &b) {
        Phase1Outcome::Feasible(coefficients) => ConicWitness::Feasible { coefficients },
        Phase1Outcome::Infeasible(farkas) => ConicWitness::Infeasible { farkas },
    };
    WITNESS_CHECKS.fetch_add(1, Ordering::Relaxed);
    if !verify_coords(&witness, &b, &cols) {
        return Err(Error::Internal("conic membership produced an unsound witness".into()));
    }
    Ok(witness)
}

/// The generators [`is_extreme_ray`] tests `representatives[index]` against.
fn others(index: usize, representatives: &[HermitianOperator]) -> Vec<HermitianOperator> {
    representatives
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, r)| r.clone())
        .collect()
}

fn classify_one(index: usize, representatives: &[HermitianOperator]) -> Result<(bool, ConicWitness)> {
    let w = conic_membership(&representatives[index], &others(index, representatives))?;
    Ok((!w.is_feasible(), w))
}

/// Whether `representatives[index]` is not a nonnegative combination of the
/// other representatives.
pub fn is_extreme_ray(index: usize, representatives: &[HermitianOperator]) -> Result<bool> {
    if index >= representatives.len() {
        return Err(Error::InvalidParameter(format!(
            "representative index {index} out of range"
        )));
    }
    Ok(classify_one(index, representatives)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifyOptions {
    /// Flag every representative extreme without LP when all have rank one.
    pub rank_one_fast_path: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            rank_one_fast_path: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremeRayReport {
    pub party: Option<usize>,
    pub representatives: Vec<HermitianOperator>,
    /// Representative index of each input operator.
    pub ray_index: Vec<usize>,
    pub extreme: Vec<bool>,
    /// LP witness per representative, over the *other* representatives in
    /// order. `None` when the rank-one shortcut decided the flag.
    pub witnesses: Vec<Option<ConicWitness>>,
    pub e: usize,
    pub fast_path: bool,
}

pub fn extreme_ray_set(ops: &[HermitianOperator], tol: &Tolerances) -> Result<ExtremeRayReport> {
    extreme_ray_set_with(ops, tol, ClassifyOptions::default())
}

pub fn extreme_ray_set_with(
    ops: &[HermitianOperator],
    tol: &Tolerances,
    opts: ClassifyOptions,
) -> Result<ExtremeRayReport> {
    let dedup = dedupe_rays(ops, tol)?;
    let reps = dedup.representatives;
    let all_rank_one = reps.iter().all(|r| r.rank(tol) == 1);
    let mode = reps.first().map_or(Mode::Exact, HermitianOperator::mode);

    if opts.rank_one_fast_path && all_rank_one {
        let k = reps.len();
        return Ok(ExtremeRayReport {
            party: None,
            representatives: reps,
            ray_index: dedup.ray_index,
            extreme: vec![true; k],
            witnesses: vec![None; k],
            e: k,
            fast_path: true,
        });
    }
    if mode == Mode::Float {
        return Err(Error::UnsupportedBackend {
            what: "float mode only classifies all-rank-one ray sets; rerun with the exact backend"
                .into(),
        });
    }

    let results: Vec<(bool, ConicWitness)> = (0..reps.len())
        .into_par_iter()
        .map(|i| classify_one(i, &reps))
        .collect::<Result<_>>()?;
    let (extreme, witnesses): (Vec<bool>, Vec<Option<ConicWitness>>) =
        results.into_iter().map(|(f, w)| (f, Some(w))).unzip();
    let e = extreme.iter().filter(|&&f| f).count();
    Ok(ExtremeRayReport {
        party: None,
        representatives: reps,
        ray_index: dedup.ray_index,
        extreme,
        witnesses,
        e,
        fast_path: false,
    })
}
