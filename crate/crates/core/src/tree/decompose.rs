//! Maximal all-extreme subtrees of a rearranged tree, and the node-to-leaf
//! ratio bound for trees whose nonleaf nodes have at least two children.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::rearrange::extreme_closed_downward;
use super::{LoccTree, NodeId, NodePath};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremeSubtree {
    pub root: NodeId,
    pub path: NodePath,
    pub leaves: usize,
    pub nodes: usize,
    pub height: usize,
    /// `nodes == 2 * leaves - 1`.
    pub full_binary: bool,
    /// No root-to-leaf branch inside the subtree has two nodes of one party.
    pub one_node_per_party: bool,
    /// `height <= P - 1`.
    pub height_within_bound: bool,
    /// `leaves <= 2^(P-1)`.
    pub leaves_within_bound: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubtreeDecomposition {
    pub subtrees: Vec<ExtremeSubtree>,
    /// Number of maximal subtrees, `S`.
    pub count: usize,
    /// Leaves of the whole tree, `N`.
    pub tree_leaves: usize,
    pub extreme_node_count: usize,
    /// `2 sum l_s - S`.
    pub eq21_total: usize,
    /// `extreme_node_count == eq21_total` and `eq21_total <= 2N - S`.
    pub node_count_identity_holds: bool,
    /// `2N - S`.
    pub two_n_minus_s: usize,
    /// `ceil(N / 2^(P-1))`.
    pub min_subtree_count: usize,
    /// `S >= ceil(N / 2^(P-1))`.
    pub subtree_count_bound_holds: bool,
}

impl SubtreeDecomposition {
    /// `sum_e <= 2N - S`.
    pub fn sum_e_within_two_n_minus_s(&self, sum_e: u64) -> bool {
        sum_e <= self.two_n_minus_s as u64
    }
}

pub fn extreme_subtree_decomposition(
    t: &LoccTree,
    flags: &[bool],
) -> Result<SubtreeDecomposition> {
    if flags.len() != t.capacity() {
        return Err(Error::Precondition("flag vector does not match the tree".into()));
    }
    if !extreme_closed_downward(t, flags) {
        return Err(Error::Precondition(
            "an extreme node has a non-extreme child; rearrange first".into(),
        ));
    }
    let p = t.party_count();
    let max_leaves = if p > usize::BITS as usize { usize::MAX } else { 1usize << (p - 1) };

    let mut subtrees = Vec::new();
    for id in t.preorder() {
        let parent_extreme = t.node(id).parent.is_some_and(|q| flags[q]);
        if !flags[id] || parent_extreme {
            continue;
        }
        let members = t.preorder_from(id);
        let leaves = members.iter().filter(|&&m| t.is_leaf(m)).count();
        let nodes = members.len();
        let height = t.height_from(id);
        subtrees.push(ExtremeSubtree {
            root: id,
            path: t.path(id),
            leaves,
            nodes,
            height,
            full_binary: nodes == 2 * leaves - 1,
            one_node_per_party: one_node_per_party(t, id, &mut HashSet::new()),
            height_within_bound: height < p,
            leaves_within_bound: leaves <= max_leaves,
        });
    }

    let count = subtrees.len();
    let tree_leaves = t.leaf_count();
    let sum_l: usize = subtrees.iter().map(|s| s.leaves).sum();
    let extreme_node_count: usize = subtrees.iter().map(|s| s.nodes).sum();
    let eq21_total = 2 * sum_l - count;
    let two_n_minus_s = 2 * tree_leaves - count;
    let min_subtree_count = tree_leaves.div_ceil(max_leaves);
    Ok(SubtreeDecomposition {
        count,
        tree_leaves,
        extreme_node_count,
        eq21_total,
        node_count_identity_holds: extreme_node_count == eq21_total && eq21_total <= two_n_minus_s,
        two_n_minus_s,
        min_subtree_count,
        subtree_count_bound_holds: count >= min_subtree_count,
        subtrees,
    })
}

fn one_node_per_party(t: &LoccTree, id: NodeId, seen: &mut HashSet<usize>) -> bool {
    let party = t.node(id).party;
    if let Some(a) = party {
        if !seen.insert(a) {
            return false;
        }
    }
    let ok = t
        .node(id)
        .children
        .iter()
        .all(|&c| one_node_per_party(t, c, seen));
    if let Some(a) = party {
        seen.remove(&a);
    }
    ok
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Report {
    pub nodes: usize,
    pub leaves: usize,
    pub height: usize,
    /// `nodes / leaves`.
    pub ratio: BigRational,
    /// `2 (1 - 2^-(h+1))`.
    pub bound: BigRational,
    pub holds: bool,
    pub equality: bool,
}

/// Node-to-leaf ratio of the whole tree against `2(1 - 2^-(h+1))`.
pub fn lemma1_check(t: &LoccTree) -> Result<Lemma1Report> {
    lemma1_check_at(t, t.root())
}

/// Same as [`lemma1_check`] for the subtree rooted at `root`.
pub fn lemma1_check_at(t: &LoccTree, root: NodeId) -> Result<Lemma1Report> {
    let members = t.preorder_from(root);
    if let Some(&bad) = members.iter().find(|&&m| t.node(m).children.len() == 1) {
        return Err(Error::Precondition(format!(
            "node {} has a single child",
            t.path(bad)
        )));
    }
    let nodes = members.len();
    let leaves = members.iter().filter(|&&m| t.is_leaf(m)).count();
    let height = t.height_from(root);
    let ratio = BigRational::new(BigInt::from(nodes), BigInt::from(leaves));
    let two_pow = BigInt::one() << (height + 1);
    let bound = BigRational::new(BigInt::from(2) * (&two_pow - 1), two_pow);
    Ok(Lemma1Report {
        nodes,
        leaves,
        height,
        holds: ratio <= bound,
        equality: ratio == bound,
        ratio,
        bound,
    })
}
