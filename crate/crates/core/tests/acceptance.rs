//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! measured runtime against the pinned bound; the process fails if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use icpsdl::configurator::configure;
use icpsdl::estimation::{Provider, SegNode, TreeNode};
use icpsdl::lang::ast::{CommandKind, ExprKind};
use icpsdl::lang::{parse, parse_configuration, parse_domain, parse_global, parse_process, parse_repository, Value};
use icpsdl::session::{
    compose, compose_counted, is_deadlock_free, is_live, project, project_all, LocalConfiguration, Verdict,
};
use icpsdl::sim::{load_model, run_scenario, Outcome, Scenario};

const GOLDEN_BOUND: Duration = Duration::from_secs(1);
const SEVEN_TREES_BOUND: Duration = Duration::from_secs(1);
const FAILURE_BOUND: Duration = Duration::from_secs(1);
const ROUND_TRIP_BOUND: Duration = Duration::from_secs(60);
const METATHEORY_BOUND: Duration = Duration::from_secs(60);
const SUPERVISOR_BOUND: Duration = Duration::from_secs(5);
const COMPLEXITY_BOUND: Duration = Duration::from_secs(10);

const GENERATED_GLOBALS: usize = 1000;
const GENERATED_CONFIGURATIONS: usize = 1000;
const MAX_GLOBAL_DEPTH: usize = 8;
const LIVENESS_BUDGET: usize = 100_000;
const COMPLEXITY_SPREAD: f64 = 4.0;
const CONSISTENCY_TOLERANCE: f64 = 1e-9;
const SETTLE_STEP: usize = 20;

type Criterion = Result<String, String>;
type Entry = (&'static str, fn() -> Criterion, Duration);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden_parse() -> Criterion {
    let d = parse_domain(WDN_DOMAIN).map_err(|e| format!("domain: {e}"))?;
    check(
        parse_domain(&d.to_string()).map_err(|e| e.to_string())? == d,
        "domain round trip",
    )?;

    let r = parse_repository(WDN_REPOSITORY).map_err(|e| format!("repository: {e}"))?;
    check(
        parse_repository(&r.to_string()).map_err(|e| e.to_string())? == r,
        "repository round trip",
    )?;

    let mut parsed = 0;
    for (name, text) in [
        ("short repository", WDN_REPOSITORY_SHORT),
        ("process", SIMPLE_PROCESS),
        ("tank loop", TANK_LOOP),
    ] {
        let cmds = parse(text).map_err(|d| format!("{name}: {d:?}"))?;
        for c in cmds {
            let CommandKind::Bind { expr, .. } = c.kind else {
                return Err(format!("{name}: expected a binding"));
            };
            let ok = match expr.kind {
                ExprKind::Repository(r) => parse_repository(&r.to_string()).ok() == Some(r),
                ExprKind::Process(p) => parse_process(&p.to_string()).ok() == Some(p),
                ExprKind::Local(c) => parse_configuration(&c.to_string()).ok() == Some(c),
                ExprKind::Global(g) => parse_global(&g.to_string()).ok() == Some(g),
                other => return Err(format!("{name}: unexpected {other:?}")),
            };
            check(ok, format!("{name}: round trip"))?;
            parsed += 1;
        }
    }
    Ok(format!(
        "domain, 2 repositories, process and {} further declarations",
        parsed - 2
    ))
}

fn seven_trees() -> Criterion {
    let s = running_example();
    let trees = trees_of(&s, "trees");
    check(trees.len() == 7, format!("{} trees", trees.len()))?;
    let g = graph_of(&s, "seg");
    let mut ours: Vec<String> = trees.iter().map(|t| canon(&t.root)).collect();
    let mut oracle = brute_force_trees(&g, &SegNode::state("t", "head"), &["tank_shape", "link_shape"], 16);
    ours.sort();
    oracle.sort();
    check(ours == oracle, format!("traverse {ours:?} vs brute force {oracle:?}"))?;
    Ok("7 trees, equal to the brute-force multiset".into())
}

fn flow_provider<'a>(n: &'a TreeNode, state: &str) -> Option<&'a TreeNode> {
    match &n.provider {
        Provider::Estimator { inputs, .. } => inputs.iter().find(|i| i.state.to_string() == state),
        _ => None,
    }
}

fn failure_reproduction() -> Criterion {
    let mut s = running_example();
    let (_, d) = s.run("after := remove dev2 from simple\nseg2 := translate after\nt2 := traverse t.head seg2");
    check(d.is_empty(), format!("{d:?}"))?;
    let trees = trees_of(&s, "t2");
    check(trees.len() == 2, format!("{} trees", trees.len()))?;
    let mut inflow_kinds = Vec::new();
    for t in &trees {
        check(
            t.root.provider_node() == &SegNode::estimator("t", "tank_mass"),
            "root is not tank_mass",
        )?;
        let out = flow_provider(&t.root, "p2.flow").ok_or("no outflow input")?;
        check(t.leaves().contains(&&SegNode::sensing("s8")), "s8 not a leaf")?;
        check(
            out.provider_node() == &SegNode::estimator("d", "demand_mass")
                || out.provider_node() == &SegNode::sensing("s8"),
            "outflow not from s8",
        )?;
        let inflow = flow_provider(&t.root, "p1.flow").ok_or("no inflow input")?;
        check(
            inflow.provider_node() == &SegNode::estimator("j", "junction_mass"),
            "inflow not via jmass(j)",
        )?;
        let pump = flow_provider(inflow, "u.flow").ok_or("no pump flow")?;
        match &pump.provider {
            Provider::Sensor(x) if x == &SegNode::sensing("s2") => inflow_kinds.push("s2"),
            Provider::Estimator { node, inputs } if node == &SegNode::estimator("u", "link_energy") => {
                let leaves: Vec<String> = inputs.iter().map(|i| i.provider_node().to_string()).collect();
                check(leaves == ["s1", "s3"], format!("lenergy inputs {leaves:?}"))?;
                inflow_kinds.push("lenergy");
            }
            other => return Err(format!("unexpected pump provider {other:?}")),
        }
    }
    inflow_kinds.sort();
    check(inflow_kinds == ["lenergy", "s2"], format!("{inflow_kinds:?}"))?;
    Ok("2 trees: tmass(jmass(s4, s2 | lenergy(s1, s3)), dmass(s8))".into())
}

fn composition_round_trip() -> Criterion {
    let cmds = parse(TANK_LOOP).map_err(|d| format!("{d:?}"))?;
    let mut lconfig = None;
    let mut gconfig = None;
    for c in cmds {
        if let CommandKind::Bind { expr, .. } = c.kind {
            match expr.kind {
                ExprKind::Local(c) => lconfig = Some(c),
                ExprKind::Global(g) => gconfig = Some(g),
                _ => {}
            }
        }
    }
    let (lconfig, gconfig) = (lconfig.ok_or("no lconfig")?, gconfig.ok_or("no gconfig")?);
    check(
        compose(&lconfig).map_err(|e| e.to_string())? == gconfig,
        "compose(lconfig) != gconfig",
    )?;
    check(
        project_all(&gconfig).map_err(|e| e.to_string())? == lconfig,
        "project(gconfig) != lconfig",
    )?;

    // The configured loop for tree 2 is the same loop with process names
    // for the sensing points (s5, s7 in place of s1, s2).
    let s = running_example();
    let trees = trees_of(&s, "trees");
    let Some(Value::Repository(repo)) = s.get("agents") else {
        return Err("no repository".into());
    };
    let Some(Value::Process(ctx)) = s.get("simple") else {
        return Err("no process".into());
    };
    let cfg = configure(&trees[1], repo, "controller", "u", &ctx.process).map_err(|e| e.to_string())?;
    let renamed = cfg.configuration.rename(&|q| match q.as_str() {
        "s5" => p("s1"),
        "s7" => p("s2"),
        _ => q.clone(),
    });
    check(
        renamed == lconfig,
        format!("configured loop differs up to renaming:\n{renamed}"),
    )?;
    check(
        cfg.certified.rename(&|q| match q.as_str() {
            "s5" => p("s1"),
            "s7" => p("s2"),
            _ => q.clone(),
        }) == gconfig,
        "certificate differs up to renaming",
    )?;

    let mut r = rng(0x5eed_0001);
    for i in 0..GENERATED_GLOBALS {
        let (g, c) = random_projectable_global(&mut r, MAX_GLOBAL_DEPTH);
        check(
            g.roles().len() <= 5 && g.depth() <= MAX_GLOBAL_DEPTH,
            format!("generator bound violated at {i}"),
        )?;
        let verdict = is_live(&c, LIVENESS_BUDGET);
        check(
            verdict.holds(),
            format!("case {i}: projection of {g} not live: {verdict}"),
        )?;
        let canonical = compose(&c).map_err(|e| format!("case {i}: {g}: {e}"))?;
        let roles: Vec<_> = c.participants().cloned().collect();
        let c2 = project(&canonical, &roles).map_err(|e| format!("case {i}: {e}"))?;
        check(
            c2 == c,
            format!("case {i}: project(compose(project(g))) != project(g) for {g}"),
        )?;
        let g2 = compose(&c2).map_err(|e| format!("case {i}: {e}"))?;
        check(
            g2 == canonical,
            format!("case {i}: project then compose is not the identity on {canonical}"),
        )?;
    }
    Ok(format!(
        "tank loop pair exact; {GENERATED_GLOBALS} generated globals, all projections live"
    ))
}

fn l3() -> LocalConfiguration {
    parse_configuration(
        "local { sensor = t. controller!flow. t  controller = t. sensor?flow. t  est = controller!head. end }",
    )
    .unwrap()
}

fn metatheory() -> Criterion {
    let l3 = l3();
    check(
        is_deadlock_free(&l3, LIVENESS_BUDGET).holds(),
        "L3 should be deadlock-free",
    )?;
    check(is_live(&l3, LIVENESS_BUDGET).is_violated(), "L3 should not be live")?;
    let mut r = rng(0x5eed_0002);
    let (mut live, mut not_live) = (0, 0);
    for i in 0..GENERATED_CONFIGURATIONS {
        let c = random_configuration(&mut r);
        match is_live(&c, LIVENESS_BUDGET) {
            Verdict::Holds => {
                live += 1;
                let df = is_deadlock_free(&c, LIVENESS_BUDGET);
                check(df.holds(), format!("case {i}: live but {df}:\n{c}"))?;
            }
            Verdict::Violated { .. } => not_live += 1,
            Verdict::BudgetExceeded { .. } => {}
        }
    }
    check(
        live > 100 && not_live > 100,
        format!("unbalanced population: {live} live, {not_live} not live"),
    )?;
    Ok(format!(
        "{live} live (all deadlock-free), {not_live} not live; L3 deadlock-free, not live"
    ))
}

fn complexity() -> Criterion {
    let mut ratios = Vec::new();
    for k in 4..=10u32 {
        let target = 1usize << k;
        let n = (0..target)
            .find(|&n| chain(n).size() == target)
            .ok_or(format!("no chain of size {target}"))?;
        let c = chain(n);
        let (_, steps) = compose_counted(&c).map_err(|e| e.to_string())?;
        ratios.push((target, steps as f64 / target as f64));
    }
    let max = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let min = ratios.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    let detail: Vec<String> = ratios.iter().map(|(s, r)| format!("{s}:{r:.2}")).collect();
    check(
        max <= COMPLEXITY_SPREAD * min,
        format!("steps/size spread {max:.2}/{min:.2} > {COMPLEXITY_SPREAD}: {detail:?}"),
    )?;
    Ok(format!("steps/size in [{min:.2}, {max:.2}] over sizes 16..1024"))
}

fn supervisor() -> Criterion {
    let s = Scenario::parse(RUNNING_SCENARIO).map_err(|e| e.to_string())?;
    check(s.steps == 500 && s.failures.len() == 1, "bundled scenario changed")?;
    let (d, r, p) = load_model(&s, RUNNING_EXAMPLE).map_err(|e| e.to_string())?;
    let report = run_scenario(&s, &d, &r, &p);
    check(
        report.outcome == Outcome::Completed,
        format!("halted: {:?}", report.log.last()),
    )?;
    check(report.trace.len() == 500, format!("{} steps", report.trace.len()))?;
    check(
        report.reconfigurations() == 1,
        format!("{} reconfigurations", report.reconfigurations()),
    )?;
    let (lo, hi) = (s.low - s.margin(), s.high + s.margin());
    let mut worst: f64 = 0.0;
    for t in &report.trace {
        worst = worst.max((t.estimate - t.level).abs());
        if t.step > SETTLE_STEP {
            check(
                t.level >= lo && t.level <= hi,
                format!("level {} at step {} outside [{lo}, {hi}]", t.level, t.step),
            )?;
        }
    }
    check(worst <= CONSISTENCY_TOLERANCE, format!("estimate error {worst:e}"))?;
    Ok(format!(
        "500 steps, 1 reconfiguration, max |estimate - level| = {worst:.1e}"
    ))
}

fn main() {
    let criteria: [Entry; 7] = [
        ("golden-parse", golden_parse, GOLDEN_BOUND),
        ("seven-trees", seven_trees, SEVEN_TREES_BOUND),
        ("failure-reproduction", failure_reproduction, FAILURE_BOUND),
        ("composition-round-trip", composition_round_trip, ROUND_TRIP_BOUND),
        ("metatheory", metatheory, METATHEORY_BOUND),
        ("composition-complexity", complexity, COMPLEXITY_BOUND),
        ("supervisor-scenario", supervisor, SUPERVISOR_BOUND),
    ];
    let mut failed = 0;
    for (name, f, bound) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let bound_text = format!("< {bound:?}");
        let result = match result {
            Ok(msg) if elapsed >= bound => Err(format!("{msg}; took {elapsed:?}, bound {bound_text}")),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS {name} ({elapsed:.2?}, {bound_text}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} ({elapsed:.2?}, {bound_text}): {msg}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of 7 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: 7 of 7 criteria passed");
}
