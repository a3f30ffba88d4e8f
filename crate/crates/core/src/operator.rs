//! Dense Hermitian operators over exact complex rationals or double precision
//! complex numbers, plus the ray-level (positive proportionality) logic the
//! rest of the crate is built on.
//!
//! A matrix never mixes the two scalar modes. All operations that combine
//! operators check that the modes agree and return [`Error::ModeMismatch`]
//! otherwise.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type ExactComplex = Complex<BigRational>;

/// Scalar backend of a matrix or measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// A single matrix entry in either backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(ExactComplex),
    Float(Complex64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        match self {
            Scalar::Exact(z) => (rational_to_f64(&z.re), rational_to_f64(&z.im)),
            Scalar::Float(z) => (z.re, z.im),
        }
    }

    pub fn as_exact(&self) -> Option<&ExactComplex> {
        match self {
            Scalar::Exact(z) => Some(z),
            Scalar::Float(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(z) if z.im.is_zero() => write!(f, "{}", z.re),
            Scalar::Exact(z) => write!(f, "{} + {}i", z.re, z.im),
            Scalar::Float(z) if z.im == 0.0 => write!(f, "{}", z.re),
            Scalar::Float(z) => write!(f, "{} + {}i", z.re, z.im),
        }
    }
}

/// Float-mode tolerances. Exact-mode operations ignore them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub herm: f64,
    pub prop: f64,
    pub psd: f64,
    pub comp: f64,
}

impl Tolerances {
    pub const DEFAULT: f64 = 1e-9;

    pub fn uniform(tol: f64) -> Self {
        Self {
            herm: tol,
            prop: tol,
            psd: tol,
            comp: tol,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::uniform(Self::DEFAULT)
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn rat(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn exact_real(q: BigRational) -> ExactComplex {
    Complex::new(q, BigRational::zero())
}

fn exact_int(n: i64) -> ExactComplex {
    exact_real(BigRational::from_integer(BigInt::from(n)))
}

#[derive(Clone, Debug, PartialEq)]
enum Entries {
    Exact(Vec<ExactComplex>),
    Float(Vec<Complex64>),
}

/// Dense d x d Hermitian matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: Entries,
}

impl HermitianOperator {
    pub fn from_exact(dim: usize, entries: Vec<ExactComplex>) -> Result<Self> {
        check_count(dim, entries.len())?;
        for i in 0..dim {
            for j in i..dim {
                if entries[i * dim + j] != entries[j * dim + i].conj() {
                    return Err(Error::NotHermitian { row: i, col: j });
                }
            }
        }
        Ok(Self {
            dim,
            entries: Entries::Exact(entries),
        })
    }

    /// Float constructor. Entries within `tol.herm` of Hermitian are accepted
    /// and replaced by the Hermitian part `(A + A^H)/2`.
    pub fn from_float(dim: usize, mut entries: Vec<Complex64>, tol: &Tolerances) -> Result<Self> {
        check_count(dim, entries.len())?;
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i].conj();
                if !(a - b).norm().le(&tol.herm) {
                    return Err(Error::NotHermitian { row: i, col: j });
                }
                let avg = (a + b) * 0.5;
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg.conj();
            }
        }
        Ok(Self {
            dim,
            entries: Entries::Float(entries),
        })
    }

    pub fn from_real_rationals(dim: usize, entries: Vec<BigRational>) -> Result<Self> {
        Self::from_exact(dim, entries.into_iter().map(exact_real).collect())
    }

    /// Real symmetric operator from integer numerators over a common denominator.
    pub fn from_ints(dim: usize, numerators: &[i64], denom: i64) -> Result<Self> {
        Self::from_real_rationals(dim, numerators.iter().map(|&n| rat(n, denom)).collect())
    }

    pub fn diag_exact(diagonal: &[BigRational]) -> Self {
        let dim = diagonal.len();
        let mut entries = vec![ExactComplex::zero(); dim * dim];
        for (i, q) in diagonal.iter().enumerate() {
            entries[i * dim + i] = exact_real(q.clone());
        }
        Self {
            dim,
            entries: Entries::Exact(entries),
        }
    }

    pub fn diag_ints(diagonal: &[i64]) -> Self {
        let d: Vec<_> = diagonal.iter().map(|&n| rat(n, 1)).collect();
        Self::diag_exact(&d)
    }

    pub fn identity(dim: usize, mode: Mode) -> Self {
        match mode {
            Mode::Exact => Self::diag_ints(&vec![1; dim]),
            Mode::Float => {
                let mut entries = vec![Complex64::zero(); dim * dim];
                for i in 0..dim {
                    entries[i * dim + i] = Complex64::one();
                }
                Self {
                    dim,
                    entries: Entries::Float(entries),
                }
            }
        }
    }

    pub fn zero(dim: usize, mode: Mode) -> Self {
        let entries = match mode {
            Mode::Exact => Entries::Exact(vec![ExactComplex::zero(); dim * dim]),
            Mode::Float => Entries::Float(vec![Complex64::zero(); dim * dim]),
        };
        Self { dim, entries }
    }

    /// The outer product `|v><v|` (not normalized).
    pub fn projector_exact(v: &[ExactComplex]) -> Self {
        let dim = v.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in v {
            for b in v {
                entries.push(a * b.conj());
            }
        }
        Self {
            dim,
            entries: Entries::Exact(entries),
        }
    }

    /// Outer product `|v><v| / <v|v>` in float mode.
    pub fn projector_float(v: &[Complex64]) -> Self {
        let dim = v.len();
        let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, a) in v.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                let mut z = a * b.conj() / norm_sqr;
                if i == j {
                    z.im = 0.0;
                }
                entries.push(z);
            }
        }
        Self {
            dim,
            entries: Entries::Float(entries),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        match self.entries {
            Entries::Exact(_) => Mode::Exact,
            Entries::Float(_) => Mode::Float,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Scalar {
        let k = row * self.dim + col;
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(v[k].clone()),
            Entries::Float(v) => Scalar::Float(v[k]),
        }
    }

    pub fn exact_entries(&self) -> Option<&[ExactComplex]> {
        match &self.entries {
            Entries::Exact(v) => Some(v),
            Entries::Float(_) => None,
        }
    }

    pub fn float_entries(&self) -> Option<&[Complex64]> {
        match &self.entries {
            Entries::Exact(_) => None,
            Entries::Float(v) => Some(v),
        }
    }

    pub fn to_float(&self) -> HermitianOperator {
        match &self.entries {
            Entries::Float(_) => self.clone(),
            Entries::Exact(v) => HermitianOperator {
                dim: self.dim,
                entries: Entries::Float(
                    v.iter()
                        .map(|z| Complex64::new(rational_to_f64(&z.re), rational_to_f64(&z.im)))
                        .collect(),
                ),
            },
        }
    }

    fn check_compatible(&self, other: &HermitianOperator) -> Result<()> {
        if self.mode() != other.mode() {
            return Err(Error::ModeMismatch {
                expected: self.mode(),
                found: other.mode(),
            });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_compatible(other)?;
        let entries = match (&self.entries, &other.entries) {
            (Entries::Exact(a), Entries::Exact(b)) => {
                Entries::Exact(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Entries::Float(a), Entries::Float(b)) => {
                Entries::Float(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => unreachable!("modes checked above"),
        };
        Ok(HermitianOperator {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        self.add(&other.scale_real(-1.0, &rat(-1, 1)))
    }

    /// Scale by a real number. Exact matrices use `exact`, float ones `float`.
    fn scale_real(&self, float: f64, exact: &BigRational) -> HermitianOperator {
        let entries = match &self.entries {
            Entries::Exact(v) => Entries::Exact(
                v.iter()
                    .map(|z| Complex::new(&z.re * exact, &z.im * exact))
                    .collect(),
            ),
            Entries::Float(v) => Entries::Float(v.iter().map(|z| z * float).collect()),
        };
        HermitianOperator {
            dim: self.dim,
            entries,
        }
    }

    /// Multiply by a real rational; float matrices get its nearest double.
    pub fn scale(&self, q: &BigRational) -> HermitianOperator {
        self.scale_real(rational_to_f64(q), q)
    }

    /// Exactly zero in exact mode; max-abs entry at most `tol` in float mode.
    pub fn is_zero(&self, tol: f64) -> bool {
        match &self.entries {
            Entries::Exact(v) => v.iter().all(|z| z.is_zero()),
            Entries::Float(v) => v.iter().all(|z| z.norm() <= tol),
        }
    }

    pub fn trace(&self) -> Scalar {
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(
                (0..self.dim).fold(ExactComplex::zero(), |acc, i| acc + &v[i * self.dim + i]),
            ),
            Entries::Float(v) => {
                Scalar::Float((0..self.dim).map(|i| v[i * self.dim + i]).sum())
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.entries {
            Entries::Exact(v) => v
                .iter()
                .map(|z| {
                    let re = rational_to_f64(&z.re);
                    let im = rational_to_f64(&z.im);
                    re * re + im * im
                })
                .sum::<f64>()
                .sqrt(),
            Entries::Float(v) => v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Matrix rank: exact Gaussian elimination, or the count of eigenvalues
    /// above `tol.psd * max(1, spectral radius)` in float mode.
    pub fn rank(&self, tol: &Tolerances) -> usize {
        match &self.entries {
            Entries::Exact(v) => exact_rank(self.dim, v.clone()),
            Entries::Float(_) => {
                let eig = self.float_eigenvalues();
                let scale = eig.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                eig.iter().filter(|x| x.abs() > tol.psd * scale).count()
            }
        }
    }

    /// Eigenvalues (ascending) of the float image of this operator.
    pub fn float_eigenvalues(&self) -> Vec<f64> {
        let f = self.to_float();
        let data = f.float_entries().expect("converted to float");
        let m = DMatrix::from_row_slice(self.dim, self.dim, data);
        let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.total_cmp(b));
        eig
    }
}

fn check_count(dim: usize, found: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if found != dim * dim {
        return Err(Error::BadEntryCount {
            dim,
            expected: dim * dim,
            found,
        });
    }
    Ok(())
}

fn exact_rank(dim: usize, mut m: Vec<ExactComplex>) -> usize {
    let mut rank = 0;
    for col in 0..dim {
        let Some(p) = (rank..dim).find(|&r| !m[r * dim + col].is_zero()) else {
            continue;
        };
        for c in 0..dim {
            m.swap(p * dim + c, rank * dim + c);
        }
        let pivot = m[rank * dim + col].clone();
        for r in (rank + 1)..dim {
            let f = &m[r * dim + col] / &pivot;
            if f.is_zero() {
                continue;
            }
            for c in col..dim {
                let delta = &f * &m[rank * dim + c];
                m[r * dim + c] = &m[r * dim + c] - delta;
            }
        }
        rank += 1;
    }
    rank
}

/// Kronecker product of the factors, in order.
pub fn tensor_product(factors: &[HermitianOperator]) -> Result<HermitianOperator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("tensor product of an empty list".into()))?;
    let mut acc = first.clone();
    for f in rest {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

fn kron(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    if a.mode() != b.mode() {
        return Err(Error::ModeMismatch {
            expected: a.mode(),
            found: b.mode(),
        });
    }
    let (da, db) = (a.dim, b.dim);
    let d = da * db;
    let entries = match (&a.entries, &b.entries) {
        (Entries::Exact(x), Entries::Exact(y)) => {
            let mut out = vec![ExactComplex::zero(); d * d];
            for i1 in 0..da {
                for j1 in 0..da {
                    let s = &x[i1 * da + j1];
                    if s.is_zero() {
                        continue;
                    }
                    for i2 in 0..db {
                        for j2 in 0..db {
                            out[(i1 * db + i2) * d + j1 * db + j2] = s * &y[i2 * db + j2];
                        }
                    }
                }
            }
            Entries::Exact(out)
        }
        (Entries::Float(x), Entries::Float(y)) => {
            let mut out = vec![Complex64::zero(); d * d];
            for i1 in 0..da {
                for j1 in 0..da {
                    let s = x[i1 * da + j1];
                    for i2 in 0..db {
                        for j2 in 0..db {
                            out[(i1 * db + i2) * d + j1 * db + j2] = s * y[i2 * db + j2];
                        }
                    }
                }
            }
            Entries::Float(out)
        }
        _ => unreachable!("modes checked above"),
    };
    Ok(HermitianOperator { dim: d, entries })
}

/// Positive semidefiniteness. Exact mode runs a symmetric elimination with
/// diagonal pivoting; float mode compares the smallest eigenvalue with
/// `-tol.psd`.
pub fn is_positive_semidefinite(op: &HermitianOperator, tol: &Tolerances) -> bool {
    match &op.entries {
        Entries::Exact(v) => exact_psd_rank(op.dim, v.clone()).is_some(),
        Entries::Float(_) => op
            .float_eigenvalues()
            .first()
            .is_none_or(|&min| min >= -tol.psd),
    }
}

/// Returns the rank if the matrix is PSD, `None` otherwise.
fn exact_psd_rank(dim: usize, mut m: Vec<ExactComplex>) -> Option<usize> {
    let mut live: Vec<usize> = (0..dim).collect();
    let mut rank = 0;
    loop {
        if live.is_empty() {
            return Some(rank);
        }
        if live.iter().any(|&i| m[i * dim + i].re.is_negative()) {
            return None;
        }
        let Some(pos) = live.iter().position(|&i| m[i * dim + i].re.is_positive()) else {
            // All remaining diagonal entries vanish, so the block must be zero.
            let zero_block = live
                .iter()
                .all(|&i| live.iter().all(|&j| m[i * dim + j].is_zero()));
            return zero_block.then_some(rank);
        };
        let k = live.remove(pos);
        let pivot = m[k * dim + k].re.clone();
        for &i in &live {
            let f = &m[i * dim + k] / exact_real(pivot.clone());
            if f.is_zero() {
                continue;
            }
            for &j in &live {
                let delta = &f * &m[k * dim + j];
                m[i * dim + j] = &m[i * dim + j] - delta;
            }
        }
        rank += 1;
    }
}

/// Returns `lambda > 0` with `a = lambda * b`, if one exists.
pub fn proportionality_factor(
    a: &HermitianOperator,
    b: &HermitianOperator,
    tol: &Tolerances,
) -> Result<Option<Scalar>> {
    a.check_compatible(b)?;
    if a.is_zero(0.0) {
        return Err(Error::ZeroOperator { index: 0 });
    }
    if b.is_zero(0.0) {
        return Err(Error::ZeroOperator { index: 1 });
    }
    Ok(match (&a.entries, &b.entries) {
        (Entries::Exact(x), Entries::Exact(y)) => exact_factor(x, y).map(Scalar::Exact),
        (Entries::Float(x), Entries::Float(y)) => {
            float_factor(x, y, tol.prop).map(|l| Scalar::Float(Complex64::new(l, 0.0)))
        }
        _ => unreachable!("modes checked above"),
    })
}

fn exact_factor(a: &[ExactComplex], b: &[ExactComplex]) -> Option<ExactComplex> {
    let k = b.iter().position(|z| !z.is_zero())?;
    let (ak, bk) = (&a[k], &b[k]);
    if ak.is_zero() {
        return None;
    }
    // Cross-multiplication: a_i b_k == a_k b_i for every i.
    if !a
        .iter()
        .zip(b)
        .all(|(ai, bi)| (ai.is_zero() && bi.is_zero()) || ai * bk == ak * bi)
    {
        return None;
    }
    let lambda = ak / bk;
    (lambda.im.is_zero() && lambda.re.is_positive()).then_some(lambda)
}

fn float_factor(a: &[Complex64], b: &[Complex64], tol: f64) -> Option<f64> {
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    a.iter()
        .zip(b)
        .all(|(x, y)| (x / na - y / nb).norm() <= tol)
        .then_some(na / nb)
}

/// Result of [`dedupe_rays`].
#[derive(Clone, Debug, PartialEq)]
pub struct RayDedup {
    pub representatives: Vec<HermitianOperator>,
    /// `ray_index[i]` is the representative index of input `i`.
    pub ray_index: Vec<usize>,
}

/// Collapses positively proportional operators onto their first occurrence.
pub fn dedupe_rays(ops: &[HermitianOperator], tol: &Tolerances) -> Result<RayDedup> {
    let mut deduper = RayDeduper::new(*tol);
    let ray_index = ops
        .iter()
        .enumerate()
        .map(|(i, op)| deduper.push(op).map_err(|e| reindex(e, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RayDedup {
        representatives: deduper.into_representatives(),
        ray_index,
    })
}

fn reindex(e: Error, index: usize) -> Error {
    match e {
        Error::ZeroOperator { .. } => Error::ZeroOperator { index },
        other => other,
    }
}

/// Incremental ray deduplication. Exact operators are bucketed by their
/// normalization against the first nonzero entry, so insertion is amortized
/// constant in the number of representatives.
#[derive(Clone, Debug)]
pub struct RayDeduper {
    tol: Tolerances,
    representatives: Vec<HermitianOperator>,
    buckets: HashMap<Vec<ExactComplex>, Vec<usize>>,
}

impl RayDeduper {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            representatives: Vec::new(),
            buckets: HashMap::new(),
        }
    }

    /// Inserts `op`, returning the index of its representative.
    pub fn push(&mut self, op: &HermitianOperator) -> Result<usize> {
        if let Some(first) = self.representatives.first() {
            first.check_compatible(op)?;
        }
        if op.is_zero(0.0) {
            return Err(Error::ZeroOperator {
                index: self.representatives.len(),
            });
        }
        match &op.entries {
            Entries::Exact(v) => {
                let key = normalize_exact(v);
                let bucket = self.buckets.entry(key).or_default();
                for &r in bucket.iter() {
                    let rep = self.representatives[r].exact_entries().expect("exact");
                    if exact_factor(v, rep).is_some() {
                        return Ok(r);
                    }
                }
                bucket.push(self.representatives.len());
            }
            Entries::Float(v) => {
                for (r, rep) in self.representatives.iter().enumerate() {
                    let rep = rep.float_entries().expect("float");
                    if float_factor(v, rep, self.tol.prop).is_some() {
                        return Ok(r);
                    }
                }
            }
        }
        self.representatives.push(op.clone());
        Ok(self.representatives.len() - 1)
    }

    pub fn representatives(&self) -> &[HermitianOperator] {
        &self.representatives
    }

    pub fn into_representatives(self) -> Vec<HermitianOperator> {
        self.representatives
    }
}

pub(crate) fn normalize_exact(v: &[ExactComplex]) -> Vec<ExactComplex> {
    let Some(k) = v.iter().position(|z| !z.is_zero()) else {
        return v.to_vec();
    };
    let inv = ExactComplex::one() / &v[k];
    v.iter()
        .map(|z| if z.is_zero() { z.clone() } else { z * &inv })
        .collect()
}

pub fn is_proportional_to_identity(op: &HermitianOperator, tol: &Tolerances) -> Result<bool> {
    let id = HermitianOperator::identity(op.dim, op.mode());
    Ok(proportionality_factor(op, &id, tol)?.is_some())
}

/// Exact integer-valued helper used by generators and tests.
pub fn exact_vector(ints: &[i64]) -> Vec<ExactComplex> {
    ints.iter().map(|&n| exact_int(n)).collect()
}
