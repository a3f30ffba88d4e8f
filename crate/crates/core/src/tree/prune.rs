//! Pruning a protocol tree down to one leaf per distinct POVM element.
//!
//! Greedy: among all leaves of duplicated elements, remove the one whose
//! removal deletes no last appearance of an extreme ray, preferring the
//! lexicographically smallest node path. In a full binary tree the removed
//! leaf's parent is contracted so the tree stays full binary; under the root
//! the sibling's payload is dropped instead, since the root must survive.
//! Parents with more than two children only lose the leaf.

use std::collections::{HashMap, HashSet};

use super::{classify_nodes, LoccTree, NodeId, NodePath};
use crate::error::{Error, Result};
use crate::measurement::SeparableMeasurement;

#[derive(Clone, Debug, PartialEq)]
pub struct PruneOutcome {
    pub tree: LoccTree,
    /// For each node id of `tree`, the id of the same node in the input.
    pub origin: Vec<NodeId>,
    /// Paths, in the input tree, of the leaves that were removed.
    pub removed_leaves: Vec<NodePath>,
}

struct Plan {
    leaf: NodeId,
    cost: usize,
    path: NodePath,
}

pub fn prune(t: &LoccTree, m: &SeparableMeasurement) -> Result<PruneOutcome> {
    let cls = classify_nodes(t, m)?;
    let mut realized = vec![false; m.len()];
    for leaf in t.leaves() {
        if let Some(e) = t.node(leaf).leaf_element {
            realized[e] = true;
        }
    }
    if let Some(e) = realized.iter().position(|r| !r) {
        return Err(Error::PruneFailed(format!("element {e} is not realized by any leaf")));
    }
    let key_of = |id: NodeId| if cls.flags[id] { cls.ray_of[id] } else { None };

    let required: HashSet<(usize, usize)> = cls
        .party_reports
        .iter()
        .enumerate()
        .filter(|(a, _)| cls.participates[*a])
        .flat_map(|(a, r)| (0..r.extreme.len()).filter(|&k| r.extreme[k]).map(move |k| (a, k)))
        .collect();
    let present: HashSet<(usize, usize)> = t.preorder().into_iter().filter_map(key_of).collect();
    if let Some(missing) = required.difference(&present).next() {
        return Err(Error::PruneFailed(format!(
            "extreme ray {} of party {} does not label any node of the input tree",
            missing.1, missing.0
        )));
    }

    let input_full_binary = t
        .preorder()
        .into_iter()
        .all(|id| t.is_leaf(id) || t.node(id).children.len() == 2);

    let mut work = t.clone();
    let mut removed_leaves = Vec::new();
    loop {
        let mut by_element: HashMap<usize, Vec<NodeId>> = HashMap::new();
        for leaf in work.leaves() {
            if let Some(e) = work.node(leaf).leaf_element {
                by_element.entry(e).or_default().push(leaf);
            }
        }
        let mut duplicated: Vec<usize> =
            by_element.iter().filter(|(_, v)| v.len() > 1).map(|(&e, _)| e).collect();
        if duplicated.is_empty() {
            break;
        }
        duplicated.sort_unstable();

        let mut appearances: HashMap<(usize, usize), usize> = HashMap::new();
        for id in work.preorder() {
            if let Some(k) = key_of(id) {
                *appearances.entry(k).or_default() += 1;
            }
        }

        let mut best: Option<Plan> = None;
        for e in duplicated {
            for &leaf in &by_element[&e] {
                let Some(plan) = plan_removal(&work, leaf, &appearances, &key_of)? else {
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some(b) => (plan.cost, &plan.path) < (b.cost, &b.path),
                };
                if better {
                    best = Some(plan);
                }
            }
        }
        let plan = best.ok_or_else(|| Error::PruneFailed("no removable duplicate leaf".into()))?;
        if plan.cost > 0 {
            return Err(Error::PruneFailed(format!(
                "every duplicate removal deletes the last appearance of an extreme ray (best: {})",
                plan.path
            )));
        }
        removed_leaves.push(t.path(plan.leaf));
        apply_removal(&mut work, plan.leaf);
    }

    let (tree, origin) = work.compact();
    check_contract(t, &tree, &origin, m.len(), input_full_binary, &required, &key_of)?;
    Ok(PruneOutcome {
        tree,
        origin,
        removed_leaves,
    })
}

fn plan_removal(
    work: &LoccTree,
    leaf: NodeId,
    appearances: &HashMap<(usize, usize), usize>,
    key_of: &impl Fn(NodeId) -> Option<(usize, usize)>,
) -> Result<Option<Plan>> {
    let Some(parent) = work.node(leaf).parent else {
        return Ok(None);
    };
    let siblings = &work.node(parent).children;
    let deleted = match siblings.len() {
        0 => unreachable!("parent lists its child"),
        1 => {
            return Err(Error::PruneFailed(format!(
                "node {} has a single child",
                work.path(parent)
            )))
        }
        2 => {
            let sib = if siblings[0] == leaf { siblings[1] } else { siblings[0] };
            if parent == work.root() {
                vec![leaf, sib]
            } else {
                vec![leaf, parent]
            }
        }
        _ => vec![leaf],
    };
    let mut lost: HashMap<(usize, usize), usize> = HashMap::new();
    for &d in &deleted {
        if let Some(k) = key_of(d) {
            *lost.entry(k).or_default() += 1;
        }
    }
    let cost = lost
        .iter()
        .filter(|(k, &n)| appearances.get(k).copied().unwrap_or(0) <= n)
        .count();
    Ok(Some(Plan {
        leaf,
        cost,
        path: work.path(leaf),
    }))
}

fn apply_removal(work: &mut LoccTree, leaf: NodeId) {
    let parent = work.node(leaf).parent.expect("planned leaf has a parent");
    let siblings = work.node(parent).children.clone();
    work.node_mut(leaf).parent = None;
    if siblings.len() > 2 {
        work.node_mut(parent).children.retain(|&c| c != leaf);
        return;
    }
    let sib = if siblings[0] == leaf { siblings[1] } else { siblings[0] };
    if parent == work.root() {
        let grandchildren = work.node(sib).children.clone();
        for &g in &grandchildren {
            work.node_mut(g).parent = Some(parent);
        }
        let element = work.node(sib).leaf_element;
        let root = work.node_mut(parent);
        root.children = grandchildren;
        if root.children.is_empty() {
            root.leaf_element = element;
        }
        work.node_mut(sib).parent = None;
    } else {
        let grand = work.node(parent).parent.expect("non-root parent");
        let pos = work
            .node(grand)
            .children
            .iter()
            .position(|&c| c == parent)
            .expect("listed under grandparent");
        work.node_mut(grand).children[pos] = sib;
        work.node_mut(sib).parent = Some(grand);
        work.node_mut(parent).parent = None;
        work.node_mut(parent).children.clear();
    }
}

fn check_contract(
    input: &LoccTree,
    out: &LoccTree,
    origin: &[NodeId],
    n_elements: usize,
    input_full_binary: bool,
    required: &HashSet<(usize, usize)>,
    key_of: &impl Fn(NodeId) -> Option<(usize, usize)>,
) -> Result<()> {
    let mut seen = vec![0usize; n_elements];
    for leaf in out.leaves() {
        match out.node(leaf).leaf_element {
            Some(e) => seen[e] += 1,
            None => return Err(Error::PruneFailed("pruned tree has an unbound leaf".into())),
        }
    }
    if seen.iter().any(|&c| c != 1) {
        return Err(Error::PruneFailed("pruned leaves are not one per element".into()));
    }
    if input_full_binary
        && out
            .preorder()
            .into_iter()
            .any(|id| !out.is_leaf(id) && out.node(id).children.len() != 2)
    {
        return Err(Error::PruneFailed("pruned tree is not full binary".into()));
    }
    let present: HashSet<(usize, usize)> = out.preorder().into_iter().filter_map(|id| key_of(origin[id])).collect();
    if !required.is_subset(&present) {
        return Err(Error::PruneFailed("an extreme ray lost its last appearance".into()));
    }
    for id in out.preorder() {
        let old_anc: HashSet<NodeId> = input.ancestors(origin[id]).into_iter().collect();
        if out.ancestors(id).into_iter().any(|a| !old_anc.contains(&origin[a])) {
            return Err(Error::PruneFailed(format!(
                "node {} gained an ancestor",
                out.path(id)
            )));
        }
    }
    Ok(())
}
