//! Acceptance criteria, one line of output per criterion. Built without the
//! test harness so the report is printed on every `cargo test` run.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use locc_cert_core::bounds::{
    certify, density_asymptote, density_profile, theorem1_bound, theorem2_bound,
};
use locc_cert_core::cone::{conic_membership, extreme_ray_set, witness_checks_performed, ConicWitness};
use locc_cert_core::generators::{
    density_family_truncation, domino, rotated_domino, tight_protocol,
    tight_protocol_with_omissions,
};
use locc_cert_core::operator::{HermitianOperator, Tolerances};
use locc_cert_core::tree::{lemma1_check, rearrange};
use locc_cert_core::Conclusion;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn domino_reproduction() -> Outcome {
    let start = Instant::now();
    let c = certify(&domino()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let e: Vec<usize> = c.e_per_party.values().copied().collect();
    ensure(e == [7, 7], || format!("e = {e:?}"))?;
    ensure(c.sum_e == 14, || format!("sum_e = {}", c.sum_e))?;
    ensure(c.theorem1_bound == 16, || format!("T1 = {}", c.theorem1_bound))?;
    ensure(c.theorem2_bound == 13, || format!("T2 = {}", c.theorem2_bound))?;
    ensure(c.violated_t2 && !c.violated_t1, || "wrong violation flags".into())?;
    ensure(c.conclusion == Conclusion::NotFiniteRoundLocc, || "wrong conclusion".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("e=(7,7) sum=14 T1=16 T2=13 in {elapsed:?}"))
}

fn rotated_dominoes() -> Outcome {
    let tuples = [
        [PI / 8.0, PI / 6.0, PI / 3.0, PI / 5.0],
        [PI / 4.0; 4],
        [0.3, 0.7, 1.1, 1.4],
    ];
    let tol = Tolerances::uniform(1e-9);
    for angles in tuples {
        let m = rotated_domino(angles, tol).map_err(|e| e.to_string())?;
        let c = certify(&m).map_err(|e| e.to_string())?;
        let e: Vec<usize> = c.e_per_party.values().copied().collect();
        ensure(
            e == [7, 7] && c.sum_e == 14 && c.theorem2_bound == 13 && c.theorem1_bound == 16,
            || format!("{angles:?}: e={e:?}"),
        )?;
        ensure(
            c.violated_t2 && !c.violated_t1 && c.conclusion == Conclusion::NotFiniteRoundLocc,
            || format!("{angles:?}: wrong verdict"),
        )?;
    }
    Ok("3 angle tuples, e=(7,7), violated T2 only".into())
}

fn tight_bound_equality() -> Outcome {
    let start = Instant::now();
    for p in [2, 3, 4] {
        for n in [3, 4, 5] {
            let proto = tight_protocol(p, n).map_err(|e| e.to_string())?;
            let c = certify(&proto.measurement).map_err(|e| e.to_string())?;
            let big_n = (1 << (p - 1)) * n;
            let expected = ((1u64 << p) - 1) * n as u64;
            ensure(
                c.n == big_n && c.sum_e == expected && c.sum_e == theorem2_bound(big_n, p),
                || format!("P={p} n={n}: N={} sum_e={} T2={}", c.n, c.sum_e, c.theorem2_bound),
            )?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("sweep took {elapsed:?}"))?;
    Ok(format!("9 (P,n) pairs at equality in {elapsed:?}"))
}

fn omission_sweep() -> Outcome {
    let (p, n) = (3, 3);
    // One subtree holds 2^(P-1) leaves: 3 omissions collapse it to a leaf and
    // the fourth merges it into its neighbour. Continue through the maximum.
    let max = locc_cert_core::generators::max_omissions(p, n);
    let mut ns = Vec::new();
    for k in 0..=max {
        let proto = tight_protocol_with_omissions(p, n, k).map_err(|e| e.to_string())?;
        let c = certify(&proto.measurement).map_err(|e| e.to_string())?;
        ensure(c.sum_e == c.theorem2_bound, || {
            format!("k={k}: N={} sum_e={} T2={}", c.n, c.sum_e, c.theorem2_bound)
        })?;
        ensure(!c.completeness_warning, || format!("k={k}: incomplete"))?;
        ns.push(c.n);
    }
    ensure(ns.windows(2).all(|w| w[1] + 1 == w[0]), || format!("N sequence {ns:?}"))?;
    Ok(format!("k=0..={max}, N={}..{}, equality at every step", ns[0], ns[max]))
}

fn density_exactness() -> Outcome {
    let tol = Tolerances::default();
    let mut checked = 0;
    for p in [2, 3] {
        let target = BigRational::from_integer(BigInt::from(2))
            - BigRational::new(BigInt::one(), BigInt::one() << (p - 1));
        ensure(target == density_asymptote(p), || "asymptote mismatch".into())?;
        for s in [1, 2, 5, 16, 64] {
            let fam = density_family_truncation(p, s).map_err(|e| e.to_string())?;
            let per = 1 << (p - 1);
            let prefixes: Vec<usize> = (1..=s).map(|k| k * per).collect();
            let r = density_profile(fam.measurement.elements(), p, &prefixes, &tol)
                .map_err(|e| e.to_string())?;
            for pt in &r.points {
                ensure(pt.ratio == target, || {
                    format!("P={p} S={s} N={}: ratio {} != {target}", pt.n, pt.ratio)
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} full-subtree prefixes at exactly 2-2^(1-P)"))
}

fn cone_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let tol = Tolerances::default();
    let (mut sets, mut reps, mut non_extreme) = (0, 0, 0);
    while sets < 600 {
        let gens = common::random_generator_set(&mut rng);
        let report = locc_cert_core::cone::extreme_ray_set_with(
            &gens,
            &tol,
            locc_cert_core::cone::ClassifyOptions { rank_one_fast_path: false },
        )
        .map_err(|e| e.to_string())?;
        for (i, &flag) in report.extreme.iter().enumerate() {
            let oracle = common::oracle_extreme(i, &report.representatives);
            ensure(flag == oracle, || {
                format!("set {sets}, representative {i}: library {flag}, oracle {oracle}")
            })?;
            reps += 1;
            non_extreme += usize::from(!flag);
        }
        sets += 1;
    }
    Ok(format!("{sets} sets, {reps} representatives ({non_extreme} non-extreme), 0 disagreements"))
}

fn witness_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfa_4ca5);
    let before = witness_checks_performed();
    let (mut feasible, mut infeasible, mut calls) = (0, 0, 0u64);
    for _ in 0..400 {
        let gens = common::random_generator_set(&mut rng);
        let target = if rng.gen_bool(0.5) {
            common::random_psd(&mut rng, gens[0].dim())
        } else {
            gens.iter().skip(1).fold(gens[0].clone(), |a, g| a.add(g).unwrap())
        };
        let w = conic_membership(&target, &gens).map_err(|e| e.to_string())?;
        calls += 1;
        ensure(w.verify(&target, &gens), || "library re-verification failed".into())?;
        match &w {
            ConicWitness::Feasible { coefficients } => {
                ensure(common::recombines(&target, &gens, coefficients), || {
                    "feasible witness does not recombine".into()
                })?;
                feasible += 1;
            }
            ConicWitness::Infeasible { farkas } => {
                ensure(common::farkas_dot(farkas, &target).is_positive(), || {
                    "Farkas vector does not separate the target".into()
                })?;
                ensure(
                    gens.iter().all(|g| !common::farkas_dot(farkas, g).is_positive()),
                    || "Farkas vector is positive on a generator".into(),
                )?;
                infeasible += 1;
            }
        }
    }
    // Witnesses attached to extreme-ray reports come from the same routine.
    for _ in 0..100 {
        let gens = common::random_generator_set(&mut rng);
        let r = extreme_ray_set(&gens, &Tolerances::default()).map_err(|e| e.to_string())?;
        for (i, w) in r.witnesses.iter().enumerate() {
            if let Some(w) = w {
                let others: Vec<HermitianOperator> = r
                    .representatives
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, x)| x.clone())
                    .collect();
                ensure(w.verify(&r.representatives[i], &others), || "report witness unsound".into())?;
                calls += 1;
            }
        }
    }
    let counted = witness_checks_performed() - before;
    ensure(counted >= calls, || format!("{counted} internal checks for {calls} calls"))?;
    Ok(format!(
        "{feasible} feasible + {infeasible} Farkas witnesses rechecked, {counted} internal checks, 0 failures"
    ))
}

fn node_leaf_ratio_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e_44a1);
    let mut equalities = 0;
    for i in 0..1000 {
        let t = common::random_branching_tree(&mut rng, 8);
        let r = lemma1_check(&t).map_err(|e| e.to_string())?;
        ensure(r.holds && r.height <= 8, || {
            format!("tree {i}: n={} l={} h={} ratio {} > {}", r.nodes, r.leaves, r.height, r.ratio, r.bound)
        })?;
        equalities += usize::from(r.equality);
    }
    for h in 1..=6 {
        let r = lemma1_check(&common::perfect_tree(h)).map_err(|e| e.to_string())?;
        ensure(r.equality, || format!("perfect tree of height {h}: {} vs {}", r.ratio, r.bound))?;
    }
    Ok(format!("1000 random trees hold ({equalities} at equality); heights 1..6 perfect trees exact"))
}

fn rearrangement_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ea_4a46e);
    let mut total_swaps = 0;
    for i in 0..500 {
        let (t, flags) = common::random_flagged_tree(&mut rng);
        let out = rearrange(&t, &flags).map_err(|e| e.to_string())?;
        let limit = t.node_count() * t.height();
        ensure(out.swaps <= limit, || format!("tree {i}: {} swaps > {limit}", out.swaps))?;
        ensure(
            out.tree.preorder().into_iter().all(|id| {
                !out.flags[id] || out.tree.preorder_from(id).into_iter().all(|d| out.flags[d])
            }),
            || format!("tree {i}: extreme node above a non-extreme descendant"),
        )?;
        ensure(
            common::payloads(&t, &flags) == common::payloads(&out.tree, &out.flags),
            || format!("tree {i}: payload multiset changed"),
        )?;
        let shape = |x: &locc_cert_core::LoccTree| {
            x.preorder().into_iter().map(|id| x.node(id).children.clone()).collect::<Vec<_>>()
        };
        ensure(shape(&t) == shape(&out.tree), || format!("tree {i}: shape changed"))?;
        total_swaps += out.swaps;
    }
    Ok(format!("500 trees, {total_swaps} swaps in total, 0 failures"))
}

fn bound_relation_sweep() -> Outcome {
    for p in 1..=10 {
        for n in 1..=1024 {
            let (t1, t2) = (theorem1_bound(n), theorem2_bound(n, p));
            ensure(t2 <= t1, || format!("N={n} P={p}: {t2} > {t1}"))?;
            ensure((t2 == t1) == (n <= 1 << p), || {
                format!("N={n} P={p}: equality {} but N<=2^P is {}", t2 == t1, n <= 1 << p)
            })?;
        }
    }
    Ok("N<=1024, P<=10: T2<=T1, equality iff N<=2^P".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("domino reproduction", domino_reproduction),
        ("rotated dominoes", rotated_dominoes),
        ("tight-bound equality", tight_bound_equality),
        ("omission sweep", omission_sweep),
        ("density exactness", density_exactness),
        ("cone oracle equivalence", cone_oracle_equivalence),
        ("witness soundness", witness_soundness),
        ("node/leaf ratio suite", node_leaf_ratio_suite),
        ("rearrangement suite", rearrangement_suite),
        ("bound-relation sweep", bound_relation_sweep),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({:.2?})", i + 1, start.elapsed()),
            Err(why) => {
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
