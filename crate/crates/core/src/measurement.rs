//! Product POVM elements and separable measurements.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::operator::{
    is_positive_semidefinite, is_proportional_to_identity, normalize_exact, proportionality_factor,
    tensor_product, ExactComplex, HermitianOperator, Mode, Scalar, Tolerances,
};

/// `K_j = K_j^(1) (x) ... (x) K_j^(P)`, stored factor by factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPovmElement {
    pub factors: Vec<HermitianOperator>,
    pub id: Option<String>,
}

impl ProductPovmElement {
    pub fn new(factors: Vec<HermitianOperator>) -> Self {
        Self { factors, id: None }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn full_operator(&self) -> Result<HermitianOperator> {
        tensor_product(&self.factors)
    }

    pub fn to_float(&self) -> Self {
        Self {
            factors: self.factors.iter().map(HermitianOperator::to_float).collect(),
            id: self.id.clone(),
        }
    }

    /// Whether the two product operators coincide: every factor pair is
    /// proportional and the factors multiply to one.
    pub fn same_operator(&self, other: &Self, tol: &Tolerances) -> Result<bool> {
        let mut exact_product = BigRational::one();
        let mut float_product = 1.0f64;
        for (a, b) in self.factors.iter().zip(&other.factors) {
            match proportionality_factor(a, b, tol)? {
                None => return Ok(false),
                Some(Scalar::Exact(z)) => exact_product *= z.re,
                Some(Scalar::Float(z)) => float_product *= z.re,
            }
        }
        Ok(exact_product.is_one() && (float_product - 1.0).abs() <= tol.prop)
    }
}

/// Checks party count, dimensions, uniform mode and positivity of every
/// factor. Shared by [`SeparableMeasurement`] and ordered element lists.
pub fn validate_elements(
    dims: &[usize],
    elements: &[ProductPovmElement],
    tol: &Tolerances,
) -> Result<Mode> {
    if dims.is_empty() {
        return Err(Error::InvalidMeasurement("at least one party is required".into()));
    }
    if let Some(a) = dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidMeasurement(format!("party {a} has dimension 0")));
    }
    let first = elements
        .first()
        .ok_or_else(|| Error::InvalidMeasurement("at least one element is required".into()))?;
    let mode = first
        .factors
        .first()
        .map(HermitianOperator::mode)
        .ok_or_else(|| Error::InvalidMeasurement("element 0 has no factors".into()))?;
    for (j, el) in elements.iter().enumerate() {
        if el.factors.len() != dims.len() {
            return Err(Error::InvalidMeasurement(format!(
                "element {j} has {} factors, expected {}",
                el.factors.len(),
                dims.len()
            )));
        }
        for (a, f) in el.factors.iter().enumerate() {
            if f.mode() != mode {
                return Err(Error::ModeMismatch {
                    expected: mode,
                    found: f.mode(),
                });
            }
            if f.dim() != dims[a] {
                return Err(Error::InvalidMeasurement(format!(
                    "element {j}, party {a}: dimension {} does not match {}",
                    f.dim(),
                    dims[a]
                )));
            }
            if f.is_zero(0.0) {
                return Err(Error::InvalidMeasurement(format!(
                    "element {j}, party {a}: zero factor"
                )));
            }
            if !is_positive_semidefinite(f, tol) {
                return Err(Error::NotPositiveSemidefinite { element: j, party: a });
            }
        }
    }
    Ok(mode)
}

/// Index pairs `(i, j)`, `i < j`, of elements that are the same operator.
/// Exact elements are first bucketed by their normalized factors, since
/// equal products have factor-wise proportional factors.
pub fn duplicate_pairs(elements: &[ProductPovmElement], tol: &Tolerances) -> Result<Vec<(usize, usize)>> {
    let exact = elements
        .iter()
        .all(|el| el.factors.iter().all(|f| f.mode() == Mode::Exact));
    let groups: Vec<Vec<usize>> = if exact {
        let mut buckets: HashMap<Vec<Vec<ExactComplex>>, Vec<usize>> = HashMap::new();
        for (j, el) in elements.iter().enumerate() {
            let key = el
                .factors
                .iter()
                .map(|f| normalize_exact(f.exact_entries().expect("exact")))
                .collect();
            buckets.entry(key).or_default().push(j);
        }
        buckets.into_values().filter(|g| g.len() > 1).collect()
    } else {
        vec![(0..elements.len()).collect()]
    };
    let mut pairs = Vec::new();
    for g in &groups {
        for (x, &i) in g.iter().enumerate() {
            for &j in &g[x + 1..] {
                if elements[i].same_operator(&elements[j], tol)? {
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// A measurement on `P` parties whose elements are product operators.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableMeasurement {
    dims: Vec<usize>,
    elements: Vec<ProductPovmElement>,
    mode: Mode,
    tol: Tolerances,
}

impl SeparableMeasurement {
    /// Validates the elements and rejects duplicated product operators.
    pub fn new(dims: Vec<usize>, elements: Vec<ProductPovmElement>, tol: Tolerances) -> Result<Self> {
        let mode = validate_elements(&dims, &elements, &tol)?;
        let pairs = duplicate_pairs(&elements, &tol)?;
        if !pairs.is_empty() {
            return Err(Error::DuplicateElements { pairs });
        }
        Ok(Self {
            dims,
            elements,
            mode,
            tol,
        })
    }

    /// Like [`SeparableMeasurement::new`], but merges duplicated elements into
    /// their first occurrence (scaling its first factor by the multiplicity).
    /// Returns one warning per merged element.
    pub fn new_merging_duplicates(
        dims: Vec<usize>,
        elements: Vec<ProductPovmElement>,
        tol: Tolerances,
    ) -> Result<(Self, Vec<String>)> {
        let mode = validate_elements(&dims, &elements, &tol)?;
        let pairs = duplicate_pairs(&elements, &tol)?;
        let mut merged_into: Vec<Option<usize>> = vec![None; elements.len()];
        for &(i, j) in &pairs {
            if merged_into[j].is_none() && merged_into[i].is_none() {
                merged_into[j] = Some(i);
            }
        }
        let mut multiplicity = vec![1i64; elements.len()];
        let mut warnings = Vec::new();
        for (j, target) in merged_into.iter().enumerate() {
            if let Some(i) = target {
                multiplicity[*i] += 1;
                warnings.push(format!("element {j} duplicates element {i}; merged"));
            }
        }
        let kept = elements
            .into_iter()
            .enumerate()
            .filter(|(j, _)| merged_into[*j].is_none())
            .map(|(j, mut el)| {
                if multiplicity[j] > 1 {
                    let q = BigRational::from_integer(BigInt::from(multiplicity[j]));
                    el.factors[0] = el.factors[0].scale(&q);
                }
                el
            })
            .collect();
        Ok((
            Self {
                dims,
                elements: kept,
                mode,
                tol,
            },
            warnings,
        ))
    }

    pub fn party_count(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn elements(&self) -> &[ProductPovmElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// The `N` local factors of party `alpha`, in element order.
    pub fn party_factors(&self, alpha: usize) -> Vec<HermitianOperator> {
        self.elements
            .iter()
            .map(|el| el.factors[alpha].clone())
            .collect()
    }

    /// A party takes part in the bound unless every one of its local factors
    /// is proportional to the identity.
    pub fn participates(&self, alpha: usize) -> Result<bool> {
        party_participates(self.elements.iter().map(|el| &el.factors[alpha]), &self.tol)
    }

    pub fn to_float(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            elements: self.elements.iter().map(ProductPovmElement::to_float).collect(),
            mode: Mode::Float,
            tol: self.tol,
        }
    }

    /// Permutes parties: party `a` of the result is party `order[a]` here.
    pub fn permute_parties(&self, order: &[usize]) -> Result<Self> {
        let dims = order.iter().map(|&a| self.dims[a]).collect();
        let elements = self
            .elements
            .iter()
            .map(|el| ProductPovmElement {
                factors: order.iter().map(|&a| el.factors[a].clone()).collect(),
                id: el.id.clone(),
            })
            .collect();
        Self::new(dims, elements, self.tol)
    }
}

pub(crate) fn party_participates<'a>(
    factors: impl IntoIterator<Item = &'a HermitianOperator>,
    tol: &Tolerances,
) -> Result<bool> {
    for f in factors {
        if !is_proportional_to_identity(f, tol)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletenessDefect {
    /// `sum_j K_j - I`.
    pub defect: HermitianOperator,
    pub is_complete: bool,
}

pub fn completeness_defect(m: &SeparableMeasurement) -> Result<CompletenessDefect> {
    let total: usize = m.dims.iter().product();
    let mut sum = HermitianOperator::zero(total, m.mode);
    for el in &m.elements {
        sum = sum.add(&el.full_operator()?)?;
    }
    let defect = sum.sub(&HermitianOperator::identity(total, m.mode))?;
    let is_complete = defect.is_zero(m.tol.comp);
    Ok(CompletenessDefect { defect, is_complete })
}
