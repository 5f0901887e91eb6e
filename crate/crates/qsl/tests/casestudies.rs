use qsl::casestudy::{faulty_gc, list_extension, lossy_reversal, randomize};
use qsl::ExtQ;

#[test]
fn randomize_gives_uniform_permutations() {
    for (n, expected) in [(2, ExtQ::ratio(1, 2)), (3, ExtQ::ratio(1, 6))] {
        let report = randomize(n).unwrap();
        print!("{}", report.render_text());
        assert_eq!(report.lines.len(), if n == 2 { 2 } else { 6 });
        for line in &report.lines {
            assert_eq!(line.computed, expected, "{}", line.label);
        }
        assert!(report.holds());
    }
}

#[test]
fn lossy_reversal_keeps_half_on_average() {
    for len in 1..=3 {
        let report = lossy_reversal(len).unwrap();
        print!("{}", report.render_text());
        assert_eq!(report.lines[0].computed, ExtQ::ratio(len as i64, 2));
        assert!(report.holds());
    }
}

#[test]
fn list_extension_adds_at_most_one() {
    let report = list_extension(1, 28).unwrap();
    print!("{}", report.render_text());
    assert!(report.holds());
}

#[test]
fn faulty_gc_dominates_the_bound() {
    let report = faulty_gc().unwrap();
    print!("{}", report.render_text());
    assert_eq!(report.lines.len(), 8);
    assert!(report.holds());
}
