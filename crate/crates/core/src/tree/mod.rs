//! LOCC protocol trees and the extreme-node counting machinery.
//!
//! A tree is stored as an arena of [`TreeNode`]s. The root carries no party
//! and no label; every other node is an outcome of one party's measurement
//! and is labelled with that party's cumulative local POVM element.

mod audit;
mod decompose;
mod prune;
mod rearrange;

use std::fmt;

use rayon::prelude::*;

use crate::cone::{extreme_ray_set, ExtremeRayReport};
use crate::error::{Error, Result};
use crate::measurement::{ProductPovmElement, SeparableMeasurement};
use crate::operator::{
    is_positive_semidefinite, proportionality_factor, HermitianOperator, Mode, Tolerances,
};

pub use audit::{audit, AuditCheck, TreeAuditReport};
pub use decompose::{
    extreme_subtree_decomposition, lemma1_check, lemma1_check_at, ExtremeSubtree, Lemma1Report,
    SubtreeDecomposition,
};
pub use prune::{prune, PruneOutcome};
pub use rearrange::{rearrange, RearrangeOutcome};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub party: Option<usize>,
    pub label: Option<HermitianOperator>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub leaf_element: Option<usize>,
}

/// Owned nested form of a node, used for construction and serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub party: Option<usize>,
    pub label: Option<HermitianOperator>,
    pub children: Vec<NodeSpec>,
    pub leaf_element: Option<usize>,
}

impl NodeSpec {
    pub fn root(children: Vec<NodeSpec>) -> Self {
        Self {
            party: None,
            label: None,
            children,
            leaf_element: None,
        }
    }

    pub fn node(party: usize, label: HermitianOperator, children: Vec<NodeSpec>) -> Self {
        Self {
            party: Some(party),
            label: Some(label),
            children,
            leaf_element: None,
        }
    }

    pub fn leaf(party: usize, label: HermitianOperator, element: usize) -> Self {
        Self {
            party: Some(party),
            label: Some(label),
            children: Vec::new(),
            leaf_element: Some(element),
        }
    }
}

/// Position of a node as the child indices taken from the root.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodePath(pub Vec<usize>);

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoccTree {
    nodes: Vec<TreeNode>,
    root: NodeId,
    party_count: usize,
    dims: Vec<usize>,
    mode: Mode,
}

impl LoccTree {
    /// A tree holding only its root.
    pub fn new(dims: Vec<usize>, mode: Mode) -> Self {
        Self {
            nodes: vec![TreeNode {
                party: None,
                label: None,
                parent: None,
                children: Vec::new(),
                leaf_element: None,
            }],
            root: 0,
            party_count: dims.len(),
            dims,
            mode,
        }
    }

    pub fn from_spec(dims: Vec<usize>, mode: Mode, spec: &NodeSpec) -> Result<Self> {
        if spec.party.is_some() || spec.label.is_some() {
            return Err(Error::InvalidTree("the root carries no party or label".into()));
        }
        let mut t = Self::new(dims, mode);
        t.nodes[0].leaf_element = spec.leaf_element;
        fn attach(t: &mut LoccTree, parent: NodeId, spec: &NodeSpec) -> Result<()> {
            for c in &spec.children {
                let party = c
                    .party
                    .ok_or_else(|| Error::InvalidTree("non-root node without a party".into()))?;
                let label = c
                    .label
                    .clone()
                    .ok_or_else(|| Error::InvalidTree("non-root node without a label".into()))?;
                let id = t.add_child(parent, party, label)?;
                t.nodes[id].leaf_element = c.leaf_element;
                attach(t, id, c)?;
            }
            Ok(())
        }
        attach(&mut t, 0, spec)?;
        Ok(t)
    }

    pub fn to_spec(&self) -> NodeSpec {
        fn build(t: &LoccTree, id: NodeId) -> NodeSpec {
            let n = &t.nodes[id];
            NodeSpec {
                party: n.party,
                label: n.label.clone(),
                children: n.children.iter().map(|&c| build(t, c)).collect(),
                leaf_element: n.leaf_element,
            }
        }
        build(self, self.root)
    }

    pub fn add_child(&mut self, parent: NodeId, party: usize, label: HermitianOperator) -> Result<NodeId> {
        if party >= self.party_count {
            return Err(Error::InvalidTree(format!("party {party} out of range")));
        }
        if label.dim() != self.dims[party] {
            return Err(Error::InvalidTree(format!(
                "label dimension {} does not match party {party} dimension {}",
                label.dim(),
                self.dims[party]
            )));
        }
        if label.mode() != self.mode {
            return Err(Error::ModeMismatch {
                expected: self.mode,
                found: label.mode(),
            });
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            party: Some(party),
            label: Some(label),
            parent: Some(parent),
            children: Vec::new(),
            leaf_element: None,
        });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    pub fn bind_leaf(&mut self, node: NodeId, element: usize) {
        self.nodes[node].leaf_element = Some(element);
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Size of the arena, including detached nodes. Flags are indexed by it.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Reachable nodes in preorder, children visited left to right.
    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(self.root)
    }

    pub fn preorder_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&id| self.is_leaf(id)).collect()
    }

    pub fn leaves_right_to_left(&self) -> Vec<NodeId> {
        let mut v = self.leaves();
        v.reverse();
        v
    }

    pub fn node_count(&self) -> usize {
        self.preorder().len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Edges on the longest root-to-leaf branch below `id`.
    pub fn height_from(&self, id: NodeId) -> usize {
        self.nodes[id]
            .children
            .iter()
            .map(|&c| 1 + self.height_from(c))
            .max()
            .unwrap_or(0)
    }

    pub fn height(&self) -> usize {
        self.height_from(self.root)
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    pub fn path(&self, id: NodeId) -> NodePath {
        let mut steps = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            let pos = self.nodes[p]
                .children
                .iter()
                .position(|&c| c == cur)
                .expect("child listed under its parent");
            steps.push(pos);
            cur = p;
        }
        steps.reverse();
        NodePath(steps)
    }

    /// Rebuilds the arena with only reachable nodes, in preorder. Returns the
    /// new tree and, for each new id, the id it had here.
    pub fn compact(&self) -> (LoccTree, Vec<NodeId>) {
        let order = self.preorder();
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = k;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old];
                TreeNode {
                    party: n.party,
                    label: n.label.clone(),
                    parent: n.parent.map(|p| new_id[p]),
                    children: n.children.iter().map(|&c| new_id[c]).collect(),
                    leaf_element: n.leaf_element,
                }
            })
            .collect();
        (
            LoccTree {
                nodes,
                root: 0,
                party_count: self.party_count,
                dims: self.dims.clone(),
                mode: self.mode,
            },
            order,
        )
    }

    /// Local factor of party `alpha` realized at `leaf`: the label of the
    /// deepest `alpha`-node on the branch, or the identity if there is none.
    pub fn leaf_factor(&self, leaf: NodeId, alpha: usize) -> HermitianOperator {
        std::iter::once(leaf)
            .chain(self.ancestors(leaf))
            .find(|&id| self.nodes[id].party == Some(alpha))
            .and_then(|id| self.nodes[id].label.clone())
            .unwrap_or_else(|| HermitianOperator::identity(self.dims[alpha], self.mode))
    }

    /// Product elements realized by the bound leaves, ordered by element index.
    /// Indices must be `0..k` without gaps or repeats.
    pub fn induced_elements(&self) -> Result<Vec<ProductPovmElement>> {
        let mut bound: Vec<(usize, NodeId)> = self
            .leaves()
            .into_iter()
            .filter_map(|id| self.nodes[id].leaf_element.map(|e| (e, id)))
            .collect();
        bound.sort();
        for (k, (e, _)) in bound.iter().enumerate() {
            if *e != k {
                return Err(Error::InvalidTree(format!(
                    "leaf element indices are not 0..{} without repeats",
                    bound.len()
                )));
            }
        }
        Ok(bound
            .into_iter()
            .map(|(_, leaf)| {
                ProductPovmElement::new((0..self.party_count).map(|a| self.leaf_factor(leaf, a)).collect())
            })
            .collect())
    }

    pub fn induced_measurement(&self, tol: Tolerances) -> Result<SeparableMeasurement> {
        SeparableMeasurement::new(self.dims.clone(), self.induced_elements()?, tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    ChildCount(usize),
    ProportionalSiblings,
    SiblingPartyMismatch,
    LabelNotPositive,
    NodeCountIdentity { nodes: usize, leaves: usize },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::ChildCount(k) => write!(f, "nonleaf node has {k} children, expected 2"),
            ViolationKind::ProportionalSiblings => f.write_str("child labels are proportional"),
            ViolationKind::SiblingPartyMismatch => f.write_str("children belong to different parties"),
            ViolationKind::LabelNotPositive => f.write_str("label is zero or not positive semidefinite"),
            ViolationKind::NodeCountIdentity { nodes, leaves } => {
                write!(f, "{nodes} nodes for {leaves} leaves, expected 2N-1")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub path: NodePath,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalReport {
    pub is_canonical: bool,
    pub violations: Vec<Violation>,
    pub node_count: usize,
    pub leaf_count: usize,
}

/// Checks the canonical-tree shape: two children per nonleaf node with
/// non-proportional labels, and `2N - 1` nodes for `N` leaves.
pub fn validate_canonical(t: &LoccTree, tol: &Tolerances) -> CanonicalReport {
    let mut violations = Vec::new();
    let order = t.preorder();
    for &id in &order {
        let n = t.node(id);
        if let Some(label) = &n.label {
            if label.is_zero(0.0) || !is_positive_semidefinite(label, tol) {
                violations.push(Violation {
                    path: t.path(id),
                    kind: ViolationKind::LabelNotPositive,
                });
            }
        }
        if n.children.is_empty() {
            continue;
        }
        if n.children.len() != 2 {
            violations.push(Violation {
                path: t.path(id),
                kind: ViolationKind::ChildCount(n.children.len()),
            });
            continue;
        }
        let (a, b) = (t.node(n.children[0]), t.node(n.children[1]));
        if a.party != b.party {
            violations.push(Violation {
                path: t.path(id),
                kind: ViolationKind::SiblingPartyMismatch,
            });
        } else if let (Some(la), Some(lb)) = (&a.label, &b.label) {
            if !la.is_zero(0.0)
                && !lb.is_zero(0.0)
                && matches!(proportionality_factor(la, lb, tol), Ok(Some(_)))
            {
                violations.push(Violation {
                    path: t.path(id),
                    kind: ViolationKind::ProportionalSiblings,
                });
            }
        }
    }
    let node_count = order.len();
    let leaf_count = t.leaf_count();
    if node_count != 2 * leaf_count - 1 {
        violations.push(Violation {
            path: NodePath(Vec::new()),
            kind: ViolationKind::NodeCountIdentity {
                nodes: node_count,
                leaves: leaf_count,
            },
        });
    }
    CanonicalReport {
        is_canonical: violations.is_empty(),
        violations,
        node_count,
        leaf_count,
    }
}

/// Extreme flags for every arena slot, plus the per-party cone analysis
/// they were derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeClassification {
    pub flags: Vec<bool>,
    pub party_reports: Vec<ExtremeRayReport>,
    pub participates: Vec<bool>,
    /// For each arena slot, the `(party, representative)` extreme ray its
    /// label lies on, if any.
    pub ray_of: Vec<Option<(usize, usize)>>,
}

impl NodeClassification {
    /// Number of distinct extreme rays summed over participating parties.
    pub fn sum_e(&self) -> u64 {
        self.party_reports
            .iter()
            .zip(&self.participates)
            .filter(|(_, &p)| p)
            .map(|(r, _)| r.e as u64)
            .sum()
    }

    pub fn extreme_node_count(&self, t: &LoccTree) -> usize {
        t.preorder().into_iter().filter(|&id| self.flags[id]).count()
    }
}

pub(crate) fn check_leaves_bound(t: &LoccTree, m: &SeparableMeasurement) -> Result<()> {
    if t.dims() != m.dims() {
        return Err(Error::InvalidTree("tree and measurement dimensions differ".into()));
    }
    for leaf in t.leaves() {
        match t.node(leaf).leaf_element {
            Some(e) if e < m.len() => {}
            Some(e) => {
                return Err(Error::InvalidTree(format!(
                    "leaf {} bound to element {e}, but the measurement has {}",
                    t.path(leaf),
                    m.len()
                )))
            }
            None => {
                return Err(Error::InvalidTree(format!(
                    "leaf {} is not bound to a measurement element",
                    t.path(leaf)
                )))
            }
        }
    }
    Ok(())
}

/// Flags an `a`-node extreme when its label is positively proportional to a
/// representative classified extreme among party `a`'s leaf factors. Labels
/// outside that set of rays, the root, and nodes of non-participating
/// parties are non-extreme.
pub fn classify_nodes(t: &LoccTree, m: &SeparableMeasurement) -> Result<NodeClassification> {
    check_leaves_bound(t, m)?;
    let tol = *m.tolerances();
    let analysed: Vec<(ExtremeRayReport, bool)> = (0..m.party_count())
        .into_par_iter()
        .map(|alpha| {
            let mut r = extreme_ray_set(&m.party_factors(alpha), &tol)?;
            r.party = Some(alpha);
            Ok((r, m.participates(alpha)?))
        })
        .collect::<Result<_>>()?;
    let (party_reports, participates): (Vec<_>, Vec<_>) = analysed.into_iter().unzip();

    let mut flags = vec![false; t.capacity()];
    let mut ray_of = vec![None; t.capacity()];
    for id in t.preorder() {
        let n = t.node(id);
        let (Some(alpha), Some(label)) = (n.party, &n.label) else {
            continue;
        };
        let report = &party_reports[alpha];
        for (r, rep) in report.representatives.iter().enumerate() {
            if report.extreme[r] && label_on_ray(label, rep, &tol) {
                ray_of[id] = Some((alpha, r));
                flags[id] = participates[alpha];
                break;
            }
        }
    }
    Ok(NodeClassification {
        flags,
        party_reports,
        participates,
        ray_of,
    })
}

fn label_on_ray(label: &HermitianOperator, rep: &HermitianOperator, tol: &Tolerances) -> bool {
    !label.is_zero(0.0) && matches!(proportionality_factor(label, rep, tol), Ok(Some(_)))
}
