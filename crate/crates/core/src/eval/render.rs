use std::fmt::Write;

use super::protocols::{ConfigurationResult, ExperimentReport, Protocol};
use crate::scalar::Scalar;

fn pct<T: Scalar>(x: T) -> String {
    format!("{:.1}", x.as_f64() * 100.0)
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::CvBaseline => "cross-validated baseline",
        Protocol::PerTarget => "per-target expansion (macro average over targets)",
        Protocol::GlobalCv => "global cross-validation (pooled over folds)",
    }
}

fn render_row<T: Scalar>(out: &mut String, r: &ConfigurationResult<T>) {
    let rel = r
        .relative_f1_improvement
        .map_or_else(|| "-".to_string(), |v| format!("{:+.1}%", v.as_f64() * 100.0));
    let _ = writeln!(
        out,
        "{:<12} {:>7} {:>7} {:>7} {:>9} {:>10} {:>8}",
        r.name,
        pct(r.metrics.precision),
        pct(r.metrics.recall),
        pct(r.metrics.f1),
        rel,
        opt(r.expansion_volume, 1),
        opt(r.imbalance_after.or(r.imbalance_before), 2),
    );
}

/// Plain-text tables, one block per report. Scores are percentages of the
/// OFF class; `avg exp` is the mean number of expansion tweets per target and
/// `NOT:OFF` the class ratio of the training data.
pub fn render_tables<T: Scalar>(reports: &[ExperimentReport<T>]) -> String {
    let mut out = String::new();
    for (i, report) in reports.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{} | classifier {} | {} seed examples",
            protocol_name(report.protocol),
            report.classifier.variant().tag(),
            report.n_seed_examples
        );
        if let (Some(k), Some(seed)) = (report.k, report.seed) {
            let _ = writeln!(out, "k = {k}, seed = {seed}");
        }
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>7} {:>7} {:>9} {:>10} {:>8}",
            "config", "P", "R", "F1", "dF1", "avg exp", "NOT:OFF"
        );
        render_row(&mut out, &report.baseline);
        for r in &report.expanded {
            render_row(&mut out, r);
        }
        for t in &report.skipped_targets {
            let _ = writeln!(out, "skipped target: {t}");
        }
    }
    out
}
