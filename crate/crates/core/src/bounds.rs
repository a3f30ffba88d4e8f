//! Extreme-ray counting bounds for finite-round LOCC and the certificates
//! built from them.
//!
//! For a separable measurement with `N` distinct product elements on `P`
//! parties, let `e_a` count the distinct extreme rays among party `a`'s local
//! factors. Finite-round LOCC implementability requires both
//!
//! ```text
//! sum_a e_a <= 2(N - 1)                      (older bound)
//! sum_a e_a <= 2N - ceil(2N * delta),  delta = max(1/N, 2^-P)
//! ```
//!
//! where the sum skips parties whose factors are all proportional to the
//! identity. A violation rules LOCC out; a non-violation proves nothing.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::cone::{extreme_ray_set_with, ClassifyOptions, ExtremeRayReport};
use crate::error::{Error, Result};
use crate::measurement::{completeness_defect, validate_elements, ProductPovmElement, SeparableMeasurement};
use crate::operator::{is_proportional_to_identity, RayDeduper, Tolerances};

/// `max(1/N, 2^-P)` as an exact rational.
pub fn delta(n: usize, p: usize) -> BigRational {
    assert!(n >= 1 && p >= 1, "delta needs N >= 1 and P >= 1");
    let inv_n = BigRational::new(BigInt::one(), BigInt::from(n));
    let inv_2p = BigRational::new(BigInt::one(), BigInt::one() << p);
    inv_n.max(inv_2p)
}

/// `2(N - 1)`.
pub fn theorem1_bound(n: usize) -> u64 {
    assert!(n >= 1, "bound needs N >= 1");
    2 * (n as u64 - 1)
}

/// `2N - ceil(2N * delta(N, P))`, in integer arithmetic.
pub fn theorem2_bound(n: usize, p: usize) -> u64 {
    assert!(n >= 1 && p >= 1, "bound needs N >= 1 and P >= 1");
    let n = n as u128;
    // ceil(2N max(1/N, 2^-P)) = max(2, ceil(N / 2^(P-1))).
    let block_ceil = if p > 127 {
        1
    } else {
        let block = 1u128 << (p - 1);
        n.div_ceil(block)
    };
    (2 * n - block_ceil.max(2)) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conclusion {
    NotFiniteRoundLocc,
    Inconclusive,
}

impl Conclusion {
    pub fn code(self) -> &'static str {
        match self {
            Conclusion::NotFiniteRoundLocc => "not_finite_round_locc",
            Conclusion::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conclusion::NotFiniteRoundLocc => {
                f.write_str("not implementable by finite-round LOCC (necessary condition violated)")
            }
            Conclusion::Inconclusive => f.write_str("inconclusive (necessary condition satisfied)"),
        }
    }
}

/// Extreme-ray analysis of one party's local factors.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyRays {
    pub party: usize,
    pub participates: bool,
    pub report: ExtremeRayReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate {
    pub n: usize,
    pub p: usize,
    pub participating_parties: Vec<usize>,
    pub e_per_party: BTreeMap<usize, usize>,
    pub sum_e: u64,
    pub delta: BigRational,
    pub theorem1_bound: u64,
    pub theorem2_bound: u64,
    pub violated_t1: bool,
    pub violated_t2: bool,
    /// `sum_e` meets the sharper bound exactly.
    pub equality_t2: bool,
    pub completeness_warning: bool,
    pub conclusion: Conclusion,
    pub warnings: Vec<String>,
    pub parties: Vec<PartyRays>,
}

pub fn certify(m: &SeparableMeasurement) -> Result<BoundCertificate> {
    certify_with(m, ClassifyOptions::default())
}

pub fn certify_with(m: &SeparableMeasurement, opts: ClassifyOptions) -> Result<BoundCertificate> {
    let tol = *m.tolerances();
    let n = m.len();
    let p = m.party_count();

    let parties: Vec<PartyRays> = (0..p)
        .into_par_iter()
        .map(|alpha| {
            let factors = m.party_factors(alpha);
            let participates = m.participates(alpha)?;
            let mut report = extreme_ray_set_with(&factors, &tol, opts)?;
            report.party = Some(alpha);
            Ok(PartyRays {
                party: alpha,
                participates,
                report,
            })
        })
        .collect::<Result<_>>()?;

    let e_per_party: BTreeMap<usize, usize> = parties
        .iter()
        .filter(|pr| pr.participates)
        .map(|pr| (pr.party, pr.report.e))
        .collect();
    let participating_parties: Vec<usize> = e_per_party.keys().copied().collect();
    let sum_e: u64 = e_per_party.values().map(|&e| e as u64).sum();

    let t1 = theorem1_bound(n);
    let t2 = theorem2_bound(n, p);
    let violated_t1 = sum_e > t1;
    let violated_t2 = sum_e > t2;

    let mut warnings = Vec::new();
    let complete = completeness_defect(m)?.is_complete;
    if !complete {
        warnings.push("elements do not sum to the identity; verdict withheld".to_string());
    }
    if n < 2 {
        warnings.push("a single-element measurement admits no verdict".to_string());
    }
    for pr in parties.iter().filter(|pr| !pr.participates) {
        warnings.push(format!(
            "party {} excluded: every local factor is proportional to the identity",
            pr.party
        ));
    }
    let conclusion = if (violated_t1 || violated_t2) && complete && n >= 2 {
        Conclusion::NotFiniteRoundLocc
    } else {
        Conclusion::Inconclusive
    };

    Ok(BoundCertificate {
        n,
        p,
        participating_parties,
        e_per_party,
        sum_e,
        delta: delta(n, p),
        theorem1_bound: t1,
        theorem2_bound: t2,
        violated_t1,
        violated_t2,
        equality_t2: sum_e == t2,
        completeness_warning: !complete,
        conclusion,
        warnings,
        parties,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityPoint {
    pub n: usize,
    /// `e_{aN}` for the parties taking part at this prefix.
    pub e_per_party: BTreeMap<usize, usize>,
    pub excluded_parties: Vec<usize>,
    pub sum_e: u64,
    /// `sum_e / N`.
    pub ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub ordering_id: Option<String>,
    pub party_count: usize,
    pub points: Vec<DensityPoint>,
    /// `2(1 - 2^-P)`.
    pub asymptote: BigRational,
}

/// `2(1 - 2^-P) = (2^P - 1) / 2^(P-1)`.
pub fn density_asymptote(p: usize) -> BigRational {
    let two_p = BigInt::one() << p;
    BigRational::new(BigInt::from(2) * (&two_p - 1), two_p)
}

/// Per-prefix extreme-ray counts of an ordered list of product elements.
pub fn density_profile(
    elements: &[ProductPovmElement],
    party_count: usize,
    prefix_sizes: &[usize],
    tol: &Tolerances,
) -> Result<DensityReport> {
    density_profile_with(elements, party_count, prefix_sizes, tol, ClassifyOptions::default())
}

pub fn density_profile_with(
    elements: &[ProductPovmElement],
    party_count: usize,
    prefix_sizes: &[usize],
    tol: &Tolerances,
    opts: ClassifyOptions,
) -> Result<DensityReport> {
    let dims: Vec<usize> = elements
        .first()
        .map(|el| el.factors.iter().map(|f| f.dim()).collect())
        .unwrap_or_default();
    if dims.len() != party_count {
        return Err(Error::InvalidParameter(format!(
            "elements have {} factors but {party_count} parties were given",
            dims.len()
        )));
    }
    validate_elements(&dims, elements, tol)?;
    check_prefixes(prefix_sizes, elements.len())?;

    let mut dedupers: Vec<RayDeduper> = (0..party_count).map(|_| RayDeduper::new(*tol)).collect();
    let mut rank_one: Vec<bool> = vec![true; party_count];
    let mut non_identity: Vec<bool> = vec![false; party_count];
    let mut points = Vec::with_capacity(prefix_sizes.len());
    let mut next = 0;

    for &n in prefix_sizes {
        while next < n {
            for (alpha, f) in elements[next].factors.iter().enumerate() {
                let before = dedupers[alpha].representatives().len();
                dedupers[alpha].push(f)?;
                if dedupers[alpha].representatives().len() > before && f.rank(tol) != 1 {
                    rank_one[alpha] = false;
                }
                if !non_identity[alpha] && !is_proportional_to_identity(f, tol)? {
                    non_identity[alpha] = true;
                }
            }
            next += 1;
        }
        let mut e_per_party = BTreeMap::new();
        let mut excluded_parties = Vec::new();
        for alpha in 0..party_count {
            if !non_identity[alpha] {
                excluded_parties.push(alpha);
                continue;
            }
            let reps = dedupers[alpha].representatives();
            let e = if rank_one[alpha] && opts.rank_one_fast_path {
                reps.len()
            } else {
                extreme_ray_set_with(reps, tol, opts)?.e
            };
            e_per_party.insert(alpha, e);
        }
        let sum_e: u64 = e_per_party.values().map(|&e| e as u64).sum();
        points.push(DensityPoint {
            n,
            e_per_party,
            excluded_parties,
            sum_e,
            ratio: BigRational::new(BigInt::from(sum_e), BigInt::from(n)),
        });
    }

    Ok(DensityReport {
        ordering_id: None,
        party_count,
        points,
        asymptote: density_asymptote(party_count),
    })
}

fn check_prefixes(prefixes: &[usize], len: usize) -> Result<()> {
    if prefixes.is_empty() {
        return Err(Error::InvalidParameter("no prefix sizes given".into()));
    }
    if prefixes[0] == 0 {
        return Err(Error::InvalidParameter("prefix sizes must be positive".into()));
    }
    if prefixes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("prefix sizes must be strictly increasing".into()));
    }
    if let Some(&last) = prefixes.last().filter(|&&l| l > len) {
        return Err(Error::InvalidParameter(format!(
            "prefix {last} exceeds the {len} available elements"
        )));
    }
    Ok(())
}

/// Puts the elements at `first` (in that order) ahead of the rest, which keep
/// their original relative order.
pub fn pin_ordering(elements: &[ProductPovmElement], first: &[usize]) -> Result<Vec<ProductPovmElement>> {
    let mut used = vec![false; elements.len()];
    let mut out = Vec::with_capacity(elements.len());
    for &i in first {
        if i >= elements.len() || used[i] {
            return Err(Error::InvalidParameter(format!(
                "pinned index {i} is out of range or repeated"
            )));
        }
        used[i] = true;
        out.push(elements[i].clone());
    }
    out.extend(
        elements
            .iter()
            .zip(&used)
            .filter(|(_, &u)| !u)
            .map(|(el, _)| el.clone()),
    );
    Ok(out)
}
