//! Acceptance checks, one per criterion, each printing a single PASS/FAIL line.
//! Runs without the libtest harness so the lines always appear in the output.

use std::collections::BTreeSet;
use std::time::Instant;

use qsl::casestudy::{faulty_gc, list_extension, lossy_reversal, randomize};
use qsl::expect::eval_expectation;
use qsl::lawbench::{catalog, run_law_suite, select_laws, Gen, GenSpec, ProgramFeatures};
use qsl::operational::soundness_check;
use qsl::parse::{parse_expectation, parse_program};
use qsl::transformer::{check_conservativity, check_duality, check_frame, transform, FrameDirection, FrameVerdict, TransformerMode, Verdict};
use qsl::{DomainConfig, ExtQ, Program, Q};

struct Line {
    criterion: u32,
    pass: bool,
    /// Whether the outcome is the expected one; differs from `pass` only for known refutations.
    accepted: bool,
    detail: String,
    seconds: f64,
}

fn line(criterion: u32, pass: bool, detail: String, started: Instant) -> Line {
    Line { criterion, pass, accepted: pass, detail, seconds: started.elapsed().as_secs_f64() }
}

fn eval_at(expr: &str, state: &str, cfg: &DomainConfig) -> ExtQ {
    let e = parse_expectation(expr).unwrap();
    eval_expectation(&e, &state.parse().unwrap(), cfg).unwrap()
}

fn criterion_1_worked_examples() -> Line {
    let started = Instant::now();
    let cfg = DomainConfig::new(&["x"], 0, 5, 5).unwrap();
    let state = "x=0; heap=1:2,2:3,4:5";
    let expected = [
        ("1 |-> 2 ** size", ExtQ::int(2)),
        ("3 |-> 4 -* size", ExtQ::int(4)),
        ("3 |-> 4 ** size", ExtQ::int(0)),
        ("1 |-> 2 -* size", ExtQ::Inf),
        ("1 |-> 2 ** (1 |-> 2 -* size)", ExtQ::int(3)),
    ];
    let mut mismatches = Vec::new();
    for (expr, want) in &expected {
        let got = eval_at(expr, state, &cfg);
        if &got != want {
            mismatches.push(format!("{expr} = {got}, expected {want}"));
        }
    }

    // Records of two cells, kept off address 1 since a null pointer's record covers cells 0 and 1.
    // Left graph: a cycle a -> b1 -> b2 -> a plus a -> b3 -> b4, with b4 holding no record.
    // Right graph: a binary tree of depth two.
    let cyclic_cfg = DomainConfig::new(&["a"], 0, 10, 9).unwrap();
    let cyclic = "a=2; heap=2:4,3:8,4:6,5:0,6:2,7:0,8:10,9:0";
    let tree_cfg = DomainConfig::new(&["a"], 0, 5, 5).unwrap();
    let tree = "a=2; heap=2:4,3:0,4:0,5:0";
    let graphs = [
        ("tree(a)", cyclic, &cyclic_cfg, ExtQ::int(0)),
        ("path(2, a)", cyclic, &cyclic_cfg, ExtQ::int(5)),
        ("tree(a)", tree, &tree_cfg, ExtQ::int(1)),
        ("path(2, a)", tree, &tree_cfg, ExtQ::int(2)),
        ("tree(a) * path(2, a)", tree, &tree_cfg, ExtQ::int(2)),
    ];
    for (expr, state, cfg, want) in &graphs {
        let got = eval_at(expr, state, cfg);
        if &got != want {
            mismatches.push(format!("{expr} at {state} = {got}, expected {want}"));
        }
    }
    let pass = mismatches.is_empty() && started.elapsed().as_secs_f64() < 1.0;
    line(1, pass, format!("{} exact values checked; mismatches: {mismatches:?}", expected.len() + graphs.len()), started)
}

fn criterion_2_law_suite() -> Line {
    let started = Instant::now();
    let spec = GenSpec { seed: 2024, ..GenSpec::default() };
    let report = run_law_suite(&catalog(), &spec, 1000).unwrap();
    let failing: BTreeSet<String> = report.failing().map(|l| l.id.clone()).collect();
    let known: BTreeSet<String> = report.laws.iter().filter(|l| l.known_refutation.is_some()).map(|l| l.id.clone()).collect();
    let refutations: Vec<String> = report
        .failing()
        .filter_map(|law| {
            let w = law.witnesses.first()?;
            Some(format!(
                "{} refuted in {} of {} trials, first at {}: {} {} {} fails",
                law.id, law.violations, law.trials, w.violation.state, w.violation.lhs, w.violation.relation, w.violation.rhs
            ))
        })
        .collect();
    let errors: usize = report.laws.iter().map(|l| l.error_trials).sum();
    let pass = failing.is_empty() && errors == 0;
    // Every failure must be one of the flagged refutations, and each of those must be reproduced.
    let accepted = failing == known && errors == 0;
    let mut verdict = line(
        2,
        pass,
        format!(
            "{} laws x 1000 trials, {} violations, failing laws {failing:?} (known refutations {known:?}), {errors} errored trials; {}",
            report.laws.len(),
            report.total_violations,
            refutations.join("; ")
        ),
        started,
    );
    verdict.accepted = accepted;
    verdict
}

fn gen_spec(seed: u64) -> GenSpec {
    GenSpec { seed, expr_depth: 2, ..GenSpec::default() }
}

/// `count` generated programs with (`features.loops`) or without loops, each paired with
/// the generator that produced it so further operands come from the same stream.
fn generated(spec: &GenSpec, count: usize, features: ProgramFeatures) -> Vec<(Program, Gen<'_>)> {
    let seed = spec.seed;
    let mut out = Vec::new();
    let mut trial = 0;
    while out.len() < count {
        let mut g = Gen::new(spec, seed.wrapping_mul(1_000_003).wrapping_add(trial));
        trial += 1;
        let c = g.program_with(spec.program_len, features);
        if features.loops != c.has_loops() {
            continue;
        }
        out.push((c, g));
    }
    out
}

fn probabilistic(loops: bool) -> ProgramFeatures {
    ProgramFeatures { probabilistic: true, alloc: true, loops }
}

fn criterion_3_soundness() -> Line {
    let started = Instant::now();
    let cfg = DomainConfig::tiny();
    let tol = Q::new(1, 1_000_000);
    let mut checked = [0usize; 2];
    let mut failures = Vec::new();
    for (kind, (loops, count)) in [(false, 50), (true, 10)].into_iter().enumerate() {
        let spec = gen_spec(3 + kind as u64);
        for (c, mut g) in generated(&spec, count, probabilistic(loops)) {
            let post = g.expectation(2);
            let report = soundness_check(&c, &post, &cfg, 3, &tol).unwrap();
            checked[kind] += 1;
            if !report.agree || (!loops && !report.exact) {
                failures.push(format!("{c} / {post}: difference {} at {:?}", report.max_difference, report.witness));
            }
        }
    }
    let pass = failures.is_empty() && checked[0] >= 50 && checked[1] >= 10;
    line(
        3,
        pass,
        format!("{} loop-free programs exact, {} loop programs within 2*tol; failures: {failures:?}", checked[0], checked[1]),
        started,
    )
}

fn criterion_4_duality() -> Line {
    let started = Instant::now();
    let cfg = DomainConfig::tiny();
    let mut checked = [0usize; 2];
    let mut failures = Vec::new();
    for (kind, (loops, count)) in [(false, 30), (true, 5)].into_iter().enumerate() {
        let spec = gen_spec(40 + kind as u64);
        for (c, mut g) in generated(&spec, count, probabilistic(loops)) {
            let post = g.one_bounded(2);
            let report = check_duality(&c, &post, &cfg, 3).unwrap();
            checked[kind] += 1;
            if !report.holds() || report.exact == loops {
                failures.push(format!("{c} / {post}: {:?}", report.lines));
            }
        }
    }
    let pass = failures.is_empty() && checked[0] >= 30 && checked[1] >= 5;
    line(
        4,
        pass,
        format!("four dual pairs on {} loop-free programs (exact) and {} loop programs (2*tol); failures: {failures:?}", checked[0], checked[1]),
        started,
    )
}

fn criterion_5_case_studies() -> Line {
    let started = Instant::now();
    let mut failures = Vec::new();
    for (n, permutations) in [(2usize, 2usize), (3, 6)] {
        let report = randomize(n).unwrap();
        let reference = ExtQ::ratio(1, permutations as i64);
        if report.lines.len() != permutations || report.lines.iter().any(|l| l.computed != reference) || !report.holds() {
            failures.push(report.render_text());
        }
    }
    for len in 1..=3 {
        let report = lossy_reversal(len).unwrap();
        if report.lines[0].computed != ExtQ::ratio(len as i64, 2) || !report.holds() {
            failures.push(report.render_text());
        }
    }
    let extension = list_extension(1, 28).unwrap();
    let increase = &extension.lines[0].computed;
    if increase.distance(&ExtQ::one()) > ExtQ::fin(Q::new(1, 1_000_000)) || !extension.holds() {
        failures.push(extension.render_text());
    }
    let gc = faulty_gc().unwrap();
    if !gc.holds() {
        failures.push(gc.render_text());
    }
    let pass = failures.is_empty();
    line(
        5,
        pass,
        format!("randomize n=2,3; lossy reversal L=1..3; list extension increase {increase}; faulty gc {} states; failures: {failures:?}", gc.lines.len()),
        started,
    )
}

fn criterion_6_continuity_counterexample() -> Line {
    let started = Instant::now();
    let cfg = DomainConfig::new(&["x"], 0, 4, 4).unwrap();
    let c = parse_program("x := new(0)").unwrap();
    let init = "x=0; heap=".parse().unwrap();
    let mut values = Vec::new();
    for n in 1..=4 {
        let post = parse_expectation(&format!("[1 <= x && x <= {n}]")).unwrap();
        values.push(transform(TransformerMode::WP, &c, &post, &cfg, 4).unwrap().value(&init).unwrap());
    }
    let expected = [ExtQ::zero(), ExtQ::zero(), ExtQ::zero(), ExtQ::one()];
    let pass = values == expected;
    let shown: Vec<String> = values.iter().map(ExtQ::to_string).collect();
    line(6, pass, format!("wp(x := new(0))([1 <= x <= n]) at the empty heap for n=1..4: {}", shown.join(", ")), started)
}

fn criterion_7_conservativity() -> Line {
    let started = Instant::now();
    let cfg = DomainConfig::tiny();
    let features = ProgramFeatures { probabilistic: false, alloc: true, loops: false };
    let mut pairs = 0;
    let mut skipped = 0;
    let mut failures = Vec::new();
    let spec = gen_spec(70);
    // Programs whose wp table leaves the bounded model (a full heap at allocation, an
    // out-of-range value) are skipped and counted; generation continues until 30 triples ran.
    for (c, mut g) in generated(&spec, 200, features) {
        if pairs >= 30 {
            break;
        }
        let pre = g.formula(2);
        let post = g.formula(2);
        match check_conservativity(&c, &pre, &post, &cfg, 3) {
            Ok(report) => {
                pairs += 1;
                if !report.agree() {
                    failures.push(format!("{{{pre}}} {c} {{{post}}}: {report:?}"));
                }
            }
            Err(e) => {
                println!("  skipped {c}: {e}");
                skipped += 1
            }
        }
    }
    let pass = failures.is_empty() && pairs >= 30;
    line(7, pass, format!("{pairs} triples agree and are 0/1-valued ({skipped} outside the model); failures: {failures:?}"), started)
}

fn criterion_8_frame_rule() -> Line {
    let started = Instant::now();
    let cfg = DomainConfig::tiny();
    let c = parse_program("<x> := 0").unwrap();
    let f = parse_expectation("[emp]").unwrap();
    let frame = parse_expectation("x ~> 0").unwrap();
    let converse = check_frame(&c, &f, &frame, FrameDirection::Converse, &cfg, 3).unwrap();
    let witness = match &converse.wp {
        FrameVerdict::Checked(Verdict::Counterexample { state, lhs, rhs }) => Some(format!("{state}: {lhs} > {rhs}")),
        _ => None,
    };
    let sound = check_frame(&c, &f, &frame, FrameDirection::Sound, &cfg, 3).unwrap();

    let spec = GenSpec { seed: 8, ..GenSpec::default() };
    let report = run_law_suite(&select_laws(&["frame.*".to_string()]).unwrap(), &spec, 500).unwrap();
    let trials: usize = report.laws.iter().map(|l| l.trials).sum();
    let pass = witness.is_some() && sound.holds() && report.total_violations == 0 && report.laws.iter().all(|l| l.trials >= 500);
    line(
        8,
        pass,
        format!(
            "converse fails at {}; sound direction: {} randomized checks over {} laws, {} violations",
            witness.as_deref().unwrap_or("no state"),
            trials,
            report.laws.len(),
            report.total_violations
        ),
        started,
    )
}

fn main() {
    let criteria: [fn() -> Line; 8] = [
        criterion_1_worked_examples,
        criterion_2_law_suite,
        criterion_3_soundness,
        criterion_4_duality,
        criterion_5_case_studies,
        criterion_6_continuity_counterexample,
        criterion_7_conservativity,
        criterion_8_frame_rule,
    ];
    let lines: Vec<std::thread::Result<Line>> =
        std::thread::scope(|scope| criteria.map(|run| scope.spawn(run)).into_iter().map(|h| h.join()).collect());
    let mut unexpected = 0;
    for (index, outcome) in lines.into_iter().enumerate() {
        match outcome {
            Ok(l) => {
                let mark = if l.pass { "PASS" } else { "FAIL" };
                let note = if l.pass || !l.accepted { "" } else { " [known refutation, expected]" };
                println!("criterion {}: {mark}{note} ({:.1}s) {}", l.criterion, l.seconds, l.detail);
                if !l.accepted {
                    unexpected += 1;
                }
            }
            Err(_) => {
                println!("criterion {}: FAIL (panicked)", index + 1);
                unexpected += 1;
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
