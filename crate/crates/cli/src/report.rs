//! JSON and text renderings of certificates, audits and density reports.

use std::fmt::Write as _;

use locc_cert_core::bounds::{BoundCertificate, DensityReport};
use locc_cert_core::tree::{Lemma1Report, TreeAuditReport};
use serde_json::{json, Value};

use crate::format::matrix_of;

fn ratio_json(r: &Lemma1Report) -> Value {
    json!({
        "nodes": r.nodes,
        "leaves": r.leaves,
        "height": r.height,
        "ratio": r.ratio.to_string(),
        "bound": r.bound.to_string(),
        "holds": r.holds,
        "equality": r.equality,
    })
}

/// `party_filter` restricts which parties list their extreme rays.
pub fn certificate_json(c: &BoundCertificate, party_filter: Option<usize>, warnings: &[String]) -> Value {
    let parties: Vec<Value> = c
        .parties
        .iter()
        .filter(|pr| party_filter.is_none_or(|a| a == pr.party))
        .map(|pr| {
            let rays: Vec<Value> = pr
                .report
                .representatives
                .iter()
                .zip(&pr.report.extreme)
                .filter(|(_, &x)| x)
                .map(|(op, _)| serde_json::to_value(matrix_of(op)).expect("matrix to JSON"))
                .collect();
            json!({
                "party": pr.party,
                "participates": pr.participates,
                "e": pr.report.e,
                "distinct_rays": pr.report.representatives.len(),
                "fast_path": pr.report.fast_path,
                "extreme_rays": rays,
            })
        })
        .collect();
    let mut all_warnings: Vec<String> = warnings.to_vec();
    all_warnings.extend(c.warnings.iter().cloned());
    json!({
        "n": c.n,
        "p": c.p,
        "participating_parties": c.participating_parties,
        "e_per_party": c.e_per_party.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "sum_e": c.sum_e,
        "delta": c.delta.to_string(),
        "theorem1_bound": c.theorem1_bound,
        "theorem2_bound": c.theorem2_bound,
        "violated_t1": c.violated_t1,
        "violated_t2": c.violated_t2,
        "equality_t2": c.equality_t2,
        "completeness_warning": c.completeness_warning,
        "conclusion": c.conclusion.code(),
        "conclusion_text": c.conclusion.to_string(),
        "warnings": all_warnings,
        "parties": parties,
    })
}

pub fn certificate_text(c: &BoundCertificate, party_filter: Option<usize>, warnings: &[String]) -> String {
    let mut s = String::new();
    writeln!(s, "N = {}, P = {}", c.n, c.p).unwrap();
    for pr in c.parties.iter().filter(|pr| party_filter.is_none_or(|a| a == pr.party)) {
        if pr.participates {
            writeln!(
                s,
                "party {}: e = {} of {} distinct rays{}",
                pr.party,
                pr.report.e,
                pr.report.representatives.len(),
                if pr.report.fast_path { " (rank one)" } else { "" }
            )
            .unwrap();
        } else {
            writeln!(s, "party {}: excluded (identity factors only)", pr.party).unwrap();
        }
    }
    writeln!(s, "sum_e = {}", c.sum_e).unwrap();
    writeln!(
        s,
        "bound 2(N-1) = {}{}",
        c.theorem1_bound,
        if c.violated_t1 { " VIOLATED" } else { "" }
    )
    .unwrap();
    writeln!(
        s,
        "bound 2N - ceil(2N delta) = {} (delta = {}){}",
        c.theorem2_bound,
        c.delta,
        if c.violated_t2 {
            " VIOLATED"
        } else if c.equality_t2 {
            " met with equality"
        } else {
            ""
        }
    )
    .unwrap();
    for w in warnings.iter().chain(&c.warnings) {
        writeln!(s, "warning: {w}").unwrap();
    }
    writeln!(s, "conclusion: {}", c.conclusion).unwrap();
    s
}

pub fn audit_json(r: &TreeAuditReport) -> Value {
    let violations: Vec<Value> = r
        .canonical
        .violations
        .iter()
        .map(|v| json!({"path": v.path.to_string(), "kind": v.kind.to_string()}))
        .collect();
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail, "diagnostic": c.diagnostic}))
        .collect();
    let decomposition = r.decomposition.as_ref().map(|d| {
        let subtrees: Vec<Value> = d
            .subtrees
            .iter()
            .map(|s| {
                json!({
                    "root": s.path.to_string(),
                    "leaves": s.leaves,
                    "nodes": s.nodes,
                    "height": s.height,
                    "full_binary": s.full_binary,
                    "one_node_per_party": s.one_node_per_party,
                })
            })
            .collect();
        json!({
            "s": d.count,
            "tree_leaves": d.tree_leaves,
            "extreme_node_count": d.extreme_node_count,
            "two_sum_l_minus_s": d.eq21_total,
            "two_n_minus_s": d.two_n_minus_s,
            "min_subtree_count": d.min_subtree_count,
            "node_count_identity_holds": d.node_count_identity_holds,
            "subtree_count_bound_holds": d.subtree_count_bound_holds,
            "subtrees": subtrees,
        })
    });
    json!({
        "passed": r.passed,
        "aborted": r.aborted,
        "canonical": {
            "is_canonical": r.canonical.is_canonical,
            "node_count": r.canonical.node_count,
            "leaf_count": r.canonical.leaf_count,
            "violations": violations,
        },
        "removed_leaves": r.removed_leaves.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "pruned_leaf_count": r.pruned_leaf_count,
        "sum_e": r.sum_e,
        "extreme_node_count": r.extreme_node_count,
        "same_party_below_extreme": r.same_party_below_extreme.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "swaps": r.swaps,
        "decomposition": decomposition,
        "node_leaf_ratio_tree": r.lemma1_tree.as_ref().map(ratio_json),
        "node_leaf_ratio_subtrees": r.lemma1_subtrees.iter().map(ratio_json).collect::<Vec<_>>(),
        "chain": r.chain,
        "chain_tight": r.chain_tight,
        "checks": checks,
    })
}

pub fn audit_text(r: &TreeAuditReport) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "canonical: {} ({} nodes, {} leaves)",
        r.canonical.is_canonical, r.canonical.node_count, r.canonical.leaf_count
    )
    .unwrap();
    for v in &r.canonical.violations {
        writeln!(s, "  {}: {}", v.path, v.kind).unwrap();
    }
    if let Some(reason) = &r.aborted {
        writeln!(s, "aborted: {reason}").unwrap();
    }
    if r.aborted.is_none() {
        writeln!(
            s,
            "pruned: {} leaves removed, N = {}",
            r.removed_leaves.len(),
            r.pruned_leaf_count
        )
        .unwrap();
        if let Some(d) = &r.decomposition {
            writeln!(s, "S = {}", d.count).unwrap();
            for sub in &d.subtrees {
                writeln!(
                    s,
                    "  subtree at {}: l = {}, n = {}, h = {}",
                    sub.path, sub.leaves, sub.nodes, sub.height
                )
                .unwrap();
            }
        }
        if let Some(c) = r.chain {
            writeln!(
                s,
                "chain: {} <= {} <= {} <= {}{}",
                c[0],
                c[1],
                c[2],
                c[3],
                if r.chain_tight { " (tight)" } else { "" }
            )
            .unwrap();
        }
    }
    for c in &r.checks {
        let tag = match (c.passed, c.diagnostic) {
            (true, _) => "PASS",
            (false, true) => "NOTE",
            (false, false) => "FAIL",
        };
        if c.detail.is_empty() {
            writeln!(s, "[{tag}] {}", c.name).unwrap();
        } else {
            writeln!(s, "[{tag}] {}: {}", c.name, c.detail).unwrap();
        }
    }
    writeln!(s, "audit {}", if r.passed { "passed" } else { "failed" }).unwrap();
    s
}

pub fn density_json(r: &DensityReport) -> Value {
    let points: Vec<Value> = r
        .points
        .iter()
        .map(|pt| {
            json!({
                "n": pt.n,
                "e_per_party": pt.e_per_party.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                "excluded_parties": pt.excluded_parties,
                "sum_e": pt.sum_e,
                "ratio": pt.ratio.to_string(),
            })
        })
        .collect();
    json!({
        "ordering": r.ordering_id,
        "parties": r.party_count,
        "asymptote": r.asymptote.to_string(),
        "points": points,
    })
}

pub fn density_text(r: &DensityReport) -> String {
    let mut s = String::new();
    if let Some(o) = &r.ordering_id {
        writeln!(s, "ordering: {o}").unwrap();
    }
    writeln!(s, "reference 2(1 - 2^-P) = {}", r.asymptote).unwrap();
    writeln!(s, "{:>8} {:>8} {:>12}", "N", "sum_e", "sum_e/N").unwrap();
    for pt in &r.points {
        writeln!(s, "{:>8} {:>8} {:>12}", pt.n, pt.sum_e, pt.ratio.to_string()).unwrap();
    }
    s
}
