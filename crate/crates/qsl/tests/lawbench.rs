use qsl::lawbench::{catalog, run_law_suite, GenSpec};

fn spec(seed: u64) -> GenSpec {
    GenSpec { seed, ..GenSpec::default() }
}

#[test]
fn only_known_refutations_fail() {
    let report = run_law_suite(&catalog(), &spec(7), 40).unwrap();
    for law in &report.laws {
        println!(
            "{:<40} violations={:<3} vacuous={:<3} error_trials={:<3} error_states={:<6} {}ms {}",
            law.id,
            law.violations,
            law.vacuous,
            law.error_trials,
            law.error_states,
            law.elapsed_ms,
            law.first_error.clone().unwrap_or_default()
        );
        for w in &law.witnesses {
            println!("    {:?}", w);
        }
    }
    let unexpected: Vec<_> = report.unexpected_failures().map(|l| l.id.clone()).collect();
    assert!(unexpected.is_empty(), "{unexpected:?}");
    assert!(report.laws.iter().all(|l| l.error_trials == 0));
}
