//! Moves extreme payloads below non-extreme ones.
//!
//! The tree shape is fixed; only payloads (party, label, flag) travel. The
//! result need not describe a physical protocol: it exists for counting.

use super::{LoccTree, NodeId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RearrangeOutcome {
    pub tree: LoccTree,
    pub flags: Vec<bool>,
    pub swaps: usize,
}

/// Swaps any extreme node with a non-extreme child (the first one, when
/// both qualify) until no extreme node has a non-extreme child.
pub fn rearrange(t: &LoccTree, flags: &[bool]) -> Result<RearrangeOutcome> {
    if flags.len() != t.capacity() {
        return Err(Error::Precondition(format!(
            "{} flags for a tree arena of {}",
            flags.len(),
            t.capacity()
        )));
    }
    if flags[t.root()] {
        return Err(Error::Precondition("the root is never extreme".into()));
    }
    let mut tree = t.clone();
    let mut flags = flags.to_vec();
    let limit = t.node_count() * t.height();
    let mut swaps = 0;
    let order = t.preorder();
    loop {
        let mut changed = false;
        for &id in &order {
            if !flags[id] {
                continue;
            }
            let Some(child) = first_non_extreme_child(&tree, &flags, id) else {
                continue;
            };
            swap_payload(&mut tree, &mut flags, id, child);
            swaps += 1;
            changed = true;
            if swaps > limit {
                return Err(Error::Internal(format!(
                    "rearrangement exceeded {limit} swaps"
                )));
            }
        }
        if !changed {
            break;
        }
    }
    Ok(RearrangeOutcome { tree, flags, swaps })
}

fn first_non_extreme_child(t: &LoccTree, flags: &[bool], id: NodeId) -> Option<NodeId> {
    t.node(id).children.iter().copied().find(|&c| !flags[c])
}

fn swap_payload(t: &mut LoccTree, flags: &mut [bool], a: NodeId, b: NodeId) {
    let (party_a, label_a) = {
        let n = t.node_mut(a);
        (n.party.take(), n.label.take())
    };
    let (party_b, label_b) = {
        let n = t.node_mut(b);
        (std::mem::replace(&mut n.party, party_a), std::mem::replace(&mut n.label, label_a))
    };
    let n = t.node_mut(a);
    n.party = party_b;
    n.label = label_b;
    flags.swap(a, b);
}

/// True when no extreme node has a non-extreme child (equivalently, no
/// extreme node has a non-extreme descendant).
pub(crate) fn extreme_closed_downward(t: &LoccTree, flags: &[bool]) -> bool {
    t.preorder()
        .into_iter()
        .all(|id| !flags[id] || t.node(id).children.iter().all(|&c| flags[c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{HermitianOperator, Mode};
    use crate::tree::NodeSpec;

    fn d(v: &[i64]) -> HermitianOperator {
        HermitianOperator::diag_ints(v)
    }

    #[test]
    fn single_swap_on_a_chain() {
        // root -> [X (extreme), Y]; X -> [U (non-extreme), V (extreme)].
        let spec = NodeSpec::root(vec![
            NodeSpec::node(
                0,
                d(&[1, 0]),
                vec![NodeSpec::leaf(1, d(&[1, 1]), 0), NodeSpec::leaf(1, d(&[0, 1]), 1)],
            ),
            NodeSpec::leaf(0, d(&[0, 1]), 2),
        ]);
        let t = LoccTree::from_spec(vec![2, 2], Mode::Exact, &spec).unwrap();
        // preorder: root, X, U, V, Y
        let flags = vec![false, true, false, true, true];
        let out = rearrange(&t, &flags).unwrap();
        assert_eq!(out.swaps, 1);
        assert_eq!(out.flags, vec![false, false, true, true, true]);
        assert_eq!(out.tree.node(1).label, Some(d(&[1, 1])));
        assert_eq!(out.tree.node(2).label, Some(d(&[1, 0])));
        assert_eq!(out.tree.node(2).party, Some(0));
        assert!(extreme_closed_downward(&out.tree, &out.flags));
    }

    #[test]
    fn already_closed_is_unchanged() {
        let spec = NodeSpec::root(vec![NodeSpec::leaf(0, d(&[1, 0]), 0), NodeSpec::leaf(0, d(&[0, 1]), 1)]);
        let t = LoccTree::from_spec(vec![2], Mode::Exact, &spec).unwrap();
        let out = rearrange(&t, &[false, true, true]).unwrap();
        assert_eq!(out.swaps, 0);
        assert_eq!(out.tree, t);
    }

    #[test]
    fn extreme_root_is_rejected() {
        let t = LoccTree::new(vec![2], Mode::Exact);
        assert!(rearrange(&t, &[true]).is_err());
    }
}
