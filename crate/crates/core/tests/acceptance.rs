//! Acceptance checklist: every criterion at its pinned tolerance, one line
//! of output per criterion. Run with `--nocapture` to see the lines on
//! success; on failure the summary is part of the panic message.

use momentcert::acceptance::{run_all, AcceptanceConfig};

#[test]
fn acceptance_criteria() {
    let cfg = AcceptanceConfig::default();
    let results = run_all(&cfg, None);
    let mut summary = String::new();
    let mut all_pass = true;
    for r in &results {
        let line = format!(
            "criterion {:2} [{}] {}: {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.details
        );
        println!("{line}");
        summary.push_str(&line);
        summary.push('\n');
        all_pass &= r.passed;
    }
    assert!(all_pass, "acceptance criteria failed:\n{summary}");
}
