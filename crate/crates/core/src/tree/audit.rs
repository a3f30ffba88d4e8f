//! End-to-end audit of a protocol tree against the measurement it realizes:
//! validate, prune, classify, rearrange, decompose, then check the counting
//! chain `sum_e <= extreme nodes <= 2N - S <= 2N - ceil(N / 2^(P-1))`.

use super::{
    check_leaves_bound, classify_nodes, extreme_subtree_decomposition, lemma1_check,
    lemma1_check_at, prune, rearrange, validate_canonical, CanonicalReport, Lemma1Report, LoccTree,
    NodePath, SubtreeDecomposition,
};
use crate::error::{Error, Result};
use crate::measurement::SeparableMeasurement;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Reported but not counted towards [`TreeAuditReport::passed`].
    pub diagnostic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeAuditReport {
    pub canonical: CanonicalReport,
    /// Set when the pipeline stopped early; later fields are then empty.
    pub aborted: Option<String>,
    pub removed_leaves: Vec<NodePath>,
    pub pruned_leaf_count: usize,
    pub sum_e: u64,
    pub extreme_node_count: usize,
    /// Extreme nodes with a descendant of their own party, before rearranging.
    pub same_party_below_extreme: Vec<NodePath>,
    pub swaps: usize,
    pub decomposition: Option<SubtreeDecomposition>,
    pub lemma1_tree: Option<Lemma1Report>,
    pub lemma1_subtrees: Vec<Lemma1Report>,
    /// `[sum_e, extreme nodes, 2N - S, 2N - ceil(N / 2^(P-1))]`.
    pub chain: Option<[u64; 4]>,
    /// Every link of the chain holds with equality.
    pub chain_tight: bool,
    pub checks: Vec<AuditCheck>,
    pub passed: bool,
}

impl TreeAuditReport {
    fn aborted(canonical: CanonicalReport, reason: String, checks: Vec<AuditCheck>) -> Self {
        Self {
            canonical,
            aborted: Some(reason),
            removed_leaves: Vec::new(),
            pruned_leaf_count: 0,
            sum_e: 0,
            extreme_node_count: 0,
            same_party_below_extreme: Vec::new(),
            swaps: 0,
            decomposition: None,
            lemma1_tree: None,
            lemma1_subtrees: Vec::new(),
            chain: None,
            chain_tight: false,
            checks,
            passed: false,
        }
    }
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> AuditCheck {
    AuditCheck {
        name: name.to_string(),
        passed,
        detail: detail.into(),
        diagnostic: false,
    }
}

pub fn audit(t: &LoccTree, m: &SeparableMeasurement) -> Result<TreeAuditReport> {
    let tol = *m.tolerances();
    let canonical = validate_canonical(t, &tol);
    let mut checks = vec![check(
        "canonical",
        canonical.is_canonical,
        format!("{} violations", canonical.violations.len()),
    )];
    if !canonical.is_canonical {
        let reason = canonical
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.path, v.kind))
            .collect::<Vec<_>>()
            .join("; ");
        return Ok(TreeAuditReport::aborted(canonical, reason, checks));
    }
    if let Err(e) = check_leaves_bound(t, m) {
        checks.push(check("leaves bound", false, e.to_string()));
        return Ok(TreeAuditReport::aborted(canonical, e.to_string(), checks));
    }

    let mut mismatched = Vec::new();
    let elements = m.elements();
    for leaf in t.leaves() {
        let e = t.node(leaf).leaf_element.expect("checked above");
        let realized = crate::measurement::ProductPovmElement::new(
            (0..t.party_count()).map(|a| t.leaf_factor(leaf, a)).collect(),
        );
        if !realized.same_operator(&elements[e], &tol)? {
            mismatched.push(t.path(leaf).to_string());
        }
    }
    checks.push(check(
        "leaf factors realize their elements",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "all leaves consistent".to_string()
        } else {
            format!("mismatched leaves: {}", mismatched.join(", "))
        },
    ));
    if !mismatched.is_empty() {
        return Ok(TreeAuditReport::aborted(
            canonical,
            "leaf factors do not match the measurement".into(),
            checks,
        ));
    }

    let pruned = match prune(t, m) {
        Ok(p) => p,
        Err(Error::PruneFailed(reason)) => {
            checks.push(check("prune", false, reason.clone()));
            return Ok(TreeAuditReport::aborted(canonical, reason, checks));
        }
        Err(e) => return Err(e),
    };
    let tree = pruned.tree;
    let n = tree.leaf_count();
    let p = tree.party_count();
    checks.push(check(
        "prune",
        n == m.len(),
        format!("{} leaves removed, {n} remain for {} elements", pruned.removed_leaves.len(), m.len()),
    ));

    let cls = classify_nodes(&tree, m)?;
    let sum_e = cls.sum_e();
    let extreme_node_count = cls.extreme_node_count(&tree);

    let mut same_party_below_extreme = Vec::new();
    for id in tree.preorder() {
        if !cls.flags[id] {
            continue;
        }
        let party = tree.node(id).party;
        let below = tree.preorder_from(id).into_iter().skip(1);
        if below.into_iter().any(|d| tree.node(d).party == party) {
            same_party_below_extreme.push(tree.path(id));
        }
    }
    checks.push(AuditCheck {
        name: "extreme nodes have no same-party descendants".into(),
        passed: same_party_below_extreme.is_empty(),
        detail: format!("{} offending nodes", same_party_below_extreme.len()),
        diagnostic: true,
    });

    let lemma1_tree = lemma1_check(&tree)?;
    checks.push(check(
        "node/leaf ratio bound on the pruned tree",
        lemma1_tree.holds,
        format!("{} <= {}", lemma1_tree.ratio, lemma1_tree.bound),
    ));

    let re = rearrange(&tree, &cls.flags)?;
    let dec = extreme_subtree_decomposition(&re.tree, &re.flags)?;
    let lemma1_subtrees = dec
        .subtrees
        .iter()
        .map(|s| lemma1_check_at(&re.tree, s.root))
        .collect::<Result<Vec<_>>>()?;

    let all = |f: fn(&super::ExtremeSubtree) -> bool| dec.subtrees.iter().all(f);
    checks.push(check(
        "subtrees are full binary",
        all(|s| s.full_binary),
        format!("S = {}", dec.count),
    ));
    checks.push(check(
        "one node per party along each subtree branch",
        all(|s| s.one_node_per_party),
        "",
    ));
    checks.push(check("subtree height <= P-1", all(|s| s.height_within_bound), ""));
    checks.push(check("subtree leaves <= 2^(P-1)", all(|s| s.leaves_within_bound), ""));
    checks.push(check(
        "node/leaf ratio bound on each subtree",
        lemma1_subtrees.iter().all(|r| r.holds),
        "",
    ));
    checks.push(check(
        "extreme node count = 2 sum l_s - S <= 2N - S",
        dec.node_count_identity_holds,
        format!("{} = {} <= {}", dec.extreme_node_count, dec.eq21_total, dec.two_n_minus_s),
    ));

    let floor_s = dec.min_subtree_count as u64;
    let chain = [
        sum_e,
        extreme_node_count as u64,
        dec.two_n_minus_s as u64,
        2 * n as u64 - floor_s,
    ];
    checks.push(check(
        "sum_e <= extreme node count",
        chain[0] <= chain[1],
        format!("{} <= {}", chain[0], chain[1]),
    ));
    checks.push(check(
        "extreme node count <= 2N - S",
        chain[1] <= chain[2],
        format!("{} <= {}", chain[1], chain[2]),
    ));
    checks.push(check(
        "S >= ceil(N / 2^(P-1))",
        dec.subtree_count_bound_holds,
        format!("{} >= {} (P = {p})", dec.count, dec.min_subtree_count),
    ));
    checks.push(check(
        "2N - S <= 2N - ceil(N / 2^(P-1))",
        chain[2] <= chain[3],
        format!("{} <= {}", chain[2], chain[3]),
    ));
    let chain_tight = chain.iter().all(|&x| x == chain[0]);
    let passed = checks.iter().all(|c| c.diagnostic || c.passed);

    Ok(TreeAuditReport {
        canonical,
        aborted: None,
        removed_leaves: pruned.removed_leaves,
        pruned_leaf_count: n,
        sum_e,
        extreme_node_count,
        same_party_below_extreme,
        swaps: re.swaps,
        decomposition: Some(dec),
        lemma1_tree: Some(lemma1_tree),
        lemma1_subtrees,
        chain: Some(chain),
        chain_tight,
        checks,
        passed,
    })
}
