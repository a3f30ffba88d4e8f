//! Named measurements and tight-bound protocol families.
//!
//! Qubit measurements in the protocol families use projector pairs along
//! `(c, s)` and `(s, -c)` with `c = (1 - t^2)/(1 + t^2)`, `s = 2t/(1 + t^2)`
//! and `t = k/(K + 1)` for `k = 1..=K`, where `K` is the number of
//! measurements that party performs. Entries stay rational and every local
//! outcome in a tree is a distinct rank-one ray.

use std::f64::consts::FRAC_PI_2;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::measurement::{ProductPovmElement, SeparableMeasurement};
use crate::operator::{
    exact_vector, proportionality_factor, rat, HermitianOperator, Mode, Tolerances,
};
use crate::tree::{LoccTree, NodeId, NodeSpec};

/// A protocol tree together with the measurement its leaves realize.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub tree: LoccTree,
    pub measurement: SeparableMeasurement,
}

/// A finite prefix of the infinite-outcome density family.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityFamily {
    pub tree: LoccTree,
    /// Elements in right-to-left leaf order.
    pub measurement: SeparableMeasurement,
    /// The elements do not sum to the identity.
    pub is_truncation: bool,
}

fn half_projector(v: &[i64]) -> HermitianOperator {
    HermitianOperator::projector_exact(&exact_vector(v)).scale(&rat(1, 2))
}

fn basis(i: usize) -> HermitianOperator {
    let mut v = [0; 3];
    v[i] = 1;
    HermitianOperator::projector_exact(&exact_vector(&v))
}

/// The nine-state domino basis of two qutrits, as exact rank-one projectors.
pub fn domino() -> SeparableMeasurement {
    let plus = |a: usize, b: usize| {
        let mut v = [0; 3];
        v[a] = 1;
        v[b] = 1;
        half_projector(&v)
    };
    let minus = |a: usize, b: usize| {
        let mut v = [0; 3];
        v[a] = 1;
        v[b] = -1;
        half_projector(&v)
    };
    let pairs = vec![
        (basis(1), basis(1)),
        (basis(0), plus(0, 1)),
        (basis(0), minus(0, 1)),
        (basis(2), plus(1, 2)),
        (basis(2), minus(1, 2)),
        (plus(1, 2), basis(0)),
        (minus(1, 2), basis(0)),
        (plus(0, 1), basis(2)),
        (minus(0, 1), basis(2)),
    ];
    let elements = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| ProductPovmElement::new(vec![a, b]).with_id(format!("psi{}", i + 1)))
        .collect();
    SeparableMeasurement::new(vec![3, 3], elements, Tolerances::default())
        .expect("domino elements are valid")
}

/// Domino basis with each superposition pair rotated by its own angle:
/// `|a>+|b>` becomes `cos|a> + sin|b>` and `|a>-|b>` becomes `sin|a> - cos|b>`.
/// Angles apply to the pairs (psi2, psi3), (psi4, psi5), (psi6, psi7),
/// (psi8, psi9) in that order. Float mode.
pub fn rotated_domino(angles: [f64; 4], tol: Tolerances) -> Result<SeparableMeasurement> {
    let basis_f: Vec<HermitianOperator> = (0..3).map(|i| basis(i).to_float()).collect();
    let rotated = |theta: f64, a: usize, b: usize| -> Result<(HermitianOperator, HermitianOperator)> {
        if !theta.is_finite() || theta <= 0.0 || theta >= FRAC_PI_2 {
            return Err(Error::InvalidParameter(format!(
                "rotation angle {theta} is outside (0, pi/2)"
            )));
        }
        let (s, c) = theta.sin_cos();
        let mut u = vec![Complex64::new(0.0, 0.0); 3];
        let mut w = u.clone();
        u[a] = c.into();
        u[b] = s.into();
        w[a] = s.into();
        w[b] = (-c).into();
        let (pu, pw) = (HermitianOperator::projector_float(&u), HermitianOperator::projector_float(&w));
        for op in [&pu, &pw] {
            for e in &basis_f {
                if proportionality_factor(op, e, &tol)?.is_some() {
                    return Err(Error::InvalidParameter(format!(
                        "rotation angle {theta} makes a local state collide with a basis state"
                    )));
                }
            }
        }
        Ok((pu, pw))
    };
    let (b01p, b01m) = rotated(angles[0], 0, 1)?;
    let (b12p, b12m) = rotated(angles[1], 1, 2)?;
    let (a12p, a12m) = rotated(angles[2], 1, 2)?;
    let (a01p, a01m) = rotated(angles[3], 0, 1)?;
    let b = &basis_f;
    let pairs = vec![
        (b[1].clone(), b[1].clone()),
        (b[0].clone(), b01p),
        (b[0].clone(), b01m),
        (b[2].clone(), b12p),
        (b[2].clone(), b12m),
        (a12p, b[0].clone()),
        (a12m, b[0].clone()),
        (a01p, b[2].clone()),
        (a01m, b[2].clone()),
    ];
    let elements = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| ProductPovmElement::new(vec![a, b]).with_id(format!("psi{}", i + 1)))
        .collect();
    SeparableMeasurement::new(vec![3, 3], elements, tol)
}

/// The two outcomes of the qubit measurement with parameter `t`.
fn qubit_pair(t: &BigRational) -> (HermitianOperator, HermitianOperator) {
    let one = BigRational::one();
    let den = &one + t * t;
    let c = (&one - t * t) / &den;
    let s = (BigRational::from_integer(BigInt::from(2)) * t) / &den;
    let p0 = vec![&c * &c, &c * &s, &c * &s, &s * &s];
    let p1 = vec![&s * &s, -(&c * &s), -(&c * &s), &c * &c];
    (
        HermitianOperator::from_real_rationals(2, p0).expect("2x2"),
        HermitianOperator::from_real_rationals(2, p1).expect("2x2"),
    )
}

/// Hands out globally distinct measurement parameters per qubit party.
struct AngleSource {
    next: Vec<u64>,
    total: Vec<u64>,
}

impl AngleSource {
    /// `branches` first-party outcomes, each followed by parties `1..p`.
    fn new(p: usize, branches: u64) -> Self {
        Self {
            next: vec![1; p],
            total: (0..p).map(|b| if b == 0 { 0 } else { branches << (b - 1) }).collect(),
        }
    }

    fn pair(&mut self, party: usize) -> (HermitianOperator, HermitianOperator) {
        let k = self.next[party];
        self.next[party] += 1;
        debug_assert!(k <= self.total[party]);
        let t = BigRational::new(BigInt::from(k), BigInt::from(self.total[party] + 1));
        qubit_pair(&t)
    }
}

/// Below `node`, parties `party..p` each measure once along every branch.
fn grow_layers(t: &mut LoccTree, node: NodeId, party: usize, angles: &mut AngleSource) -> Result<()> {
    if party >= t.party_count() {
        return Ok(());
    }
    let (p0, p1) = angles.pair(party);
    let a = t.add_child(node, party, p0)?;
    let b = t.add_child(node, party, p1)?;
    grow_layers(t, a, party + 1, angles)?;
    grow_layers(t, b, party + 1, angles)
}

fn basis_projector(dim: usize, i: usize) -> HermitianOperator {
    let mut d = vec![0; dim];
    d[i] = 1;
    HermitianOperator::diag_ints(&d)
}

fn tail_projector(dim: usize, from: usize) -> HermitianOperator {
    let d: Vec<i64> = (0..dim).map(|j| i64::from(j >= from)).collect();
    HermitianOperator::diag_ints(&d)
}

fn check_party_count(p: usize) -> Result<()> {
    if !(2..=16).contains(&p) {
        return Err(Error::InvalidParameter(format!("party count {p} is outside 2..=16")));
    }
    Ok(())
}

fn bind_left_to_right(t: &mut LoccTree) {
    for (k, leaf) in t.leaves().into_iter().enumerate() {
        t.bind_leaf(leaf, k);
    }
}

/// Party 0 measures in the basis of dimension `n`, written as a binary chain
/// whose coarse nodes carry the partial sums; every party-0 outcome is then
/// followed by one two-outcome measurement of each qubit party in turn.
///
/// `N = 2^(P-1) n` and the extreme-ray sum is `(2^P - 1) n`.
pub fn tight_protocol(p: usize, n: usize) -> Result<Protocol> {
    check_party_count(p)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("first party needs n >= 2 outcomes, got {n}")));
    }
    let mut dims = vec![2; p];
    dims[0] = n;
    let mut t = LoccTree::new(dims, Mode::Exact);
    let mut angles = AngleSource::new(p, n as u64);
    let mut parent = t.root();
    for i in 0..n {
        let e = t.add_child(parent, 0, basis_projector(n, i))?;
        grow_layers(&mut t, e, 1, &mut angles)?;
        if i + 2 == n {
            let last = t.add_child(parent, 0, basis_projector(n, n - 1))?;
            grow_layers(&mut t, last, 1, &mut angles)?;
            break;
        }
        parent = t.add_child(parent, 0, tail_projector(n, i + 1))?;
    }
    bind_left_to_right(&mut t);
    let measurement = t.induced_measurement(Tolerances::default())?;
    Ok(Protocol { tree: t, measurement })
}

/// Largest `k` accepted by [`tight_protocol_with_omissions`].
pub fn max_omissions(p: usize, n: usize) -> usize {
    (n - 1) * (1usize << (p - 1)) - 1
}

/// [`tight_protocol`] with `k` measurements omitted one at a time, always
/// from the last party-0 outcome. Within that outcome's subtree the last
/// measurement whose outcomes are all leaves is dropped; once the outcome is
/// itself a leaf, party 0 stops distinguishing it from its sibling, which
/// takes the parent's place and label.
pub fn tight_protocol_with_omissions(p: usize, n: usize, k: usize) -> Result<Protocol> {
    let base = tight_protocol(p, n)?;
    let max = max_omissions(p, n);
    if k > max {
        return Err(Error::InvalidParameter(format!(
            "{k} omissions requested, at most {max} are possible for P={p}, n={n}"
        )));
    }
    if k == 0 {
        return Ok(base);
    }
    let mut spec = base.tree.to_spec();
    for _ in 0..k {
        omit_one(&mut spec)?;
    }
    rebind(&mut spec, &mut 0);
    let t = LoccTree::from_spec(base.tree.dims().to_vec(), Mode::Exact, &spec)?;
    let measurement = t.induced_measurement(Tolerances::default())?;
    Ok(Protocol { tree: t, measurement })
}

fn last_party0_path(spec: &NodeSpec) -> Option<Vec<usize>> {
    fn walk(s: &NodeSpec, path: &mut Vec<usize>, best: &mut Option<Vec<usize>>) {
        if s.party == Some(0) {
            *best = Some(path.clone());
        }
        for (i, c) in s.children.iter().enumerate() {
            path.push(i);
            walk(c, path, best);
            path.pop();
        }
    }
    let mut best = None;
    walk(spec, &mut Vec::new(), &mut best);
    best
}

fn at_mut<'a>(spec: &'a mut NodeSpec, path: &[usize]) -> &'a mut NodeSpec {
    path.iter().fold(spec, |s, &i| &mut s.children[i])
}

fn last_collapsible(s: &mut NodeSpec) -> Option<&mut NodeSpec> {
    if s.children.is_empty() {
        return None;
    }
    if s.children.iter().all(|c| c.children.is_empty()) {
        return Some(s);
    }
    // Last in preorder: the rightmost child subtree that has one wins.
    let idx = (0..s.children.len())
        .rev()
        .find(|&i| has_collapsible(&s.children[i]))?;
    last_collapsible(&mut s.children[idx])
}

fn has_collapsible(s: &NodeSpec) -> bool {
    !s.children.is_empty()
}

fn omit_one(spec: &mut NodeSpec) -> Result<()> {
    let path = last_party0_path(spec)
        .ok_or_else(|| Error::Internal("no party-0 outcome left".into()))?;
    let node = at_mut(spec, &path);
    if let Some(target) = last_collapsible(node) {
        target.children.clear();
        return Ok(());
    }
    let (&last, parent_path) = path
        .split_last()
        .ok_or_else(|| Error::Internal("party-0 outcome at the root".into()))?;
    if parent_path.is_empty() {
        return Err(Error::InvalidParameter(
            "no further measurement can be omitted".into(),
        ));
    }
    let parent = at_mut(spec, parent_path);
    let sibling = parent.children.remove(1 - last);
    parent.children = sibling.children;
    Ok(())
}

fn rebind(spec: &mut NodeSpec, next: &mut usize) {
    if spec.children.is_empty() {
        if spec.party.is_some() {
            spec.leaf_element = Some(*next);
            *next += 1;
        }
        return;
    }
    spec.leaf_element = None;
    for c in &mut spec.children {
        rebind(c, next);
    }
}

/// First `s` outcomes of an infinite-outcome first measurement, each
/// followed by the qubit layers, plus one unmeasured remainder outcome that
/// carries no element. Party 0 has dimension `s + 1`. Elements follow a
/// right-to-left enumeration of the measured leaves.
pub fn density_family_truncation(p: usize, s: usize) -> Result<DensityFamily> {
    check_party_count(p)?;
    if s == 0 {
        return Err(Error::InvalidParameter("at least one subtree is needed".into()));
    }
    let dim0 = s + 1;
    let mut dims = vec![2; p];
    dims[0] = dim0;
    let mut t = LoccTree::new(dims, Mode::Exact);
    let mut angles = AngleSource::new(p, s as u64);
    let mut parent = t.root();
    let mut remainder = parent;
    for i in 0..s {
        let a = t.add_child(parent, 0, basis_projector(dim0, i))?;
        grow_layers(&mut t, a, 1, &mut angles)?;
        parent = t.add_child(parent, 0, tail_projector(dim0, i + 1))?;
        remainder = parent;
    }
    for (k, leaf) in t
        .leaves_right_to_left()
        .into_iter()
        .filter(|&l| l != remainder)
        .enumerate()
    {
        t.bind_leaf(leaf, k);
    }
    let measurement = t.induced_measurement(Tolerances::default())?;
    Ok(DensityFamily {
        tree: t,
        measurement,
        is_truncation: true,
    })
}
