//! Markdown summaries for humans; the JSON forms come from serde.

use crate::harness::grid::GridReport;
use crate::harness::homophily::HomophilyReport;
use crate::harness::train::{RepeatSummary, RunReport};
use crate::harness::verify::VerifyReport;

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub fn run_markdown(r: &RunReport) -> String {
    let status = r.failed.as_deref().unwrap_or("ok");
    format!(
        "| config | seed | epochs | best epoch | val loss | train acc | val acc | test acc | params | status |\n\
         |---|---|---|---|---|---|---|---|---|---|\n\
         | {} | {} | {} | {} | {:.4} | {} | {} | {} | {} | {} |\n",
        r.config_hash,
        r.seed,
        r.epochs_run,
        r.best_epoch,
        r.best_val_loss,
        pct(r.train_accuracy),
        pct(r.val_accuracy),
        pct(r.test_accuracy),
        r.param_count,
        status
    )
}

pub fn repeats_markdown(s: &RepeatSummary) -> String {
    let mut out = String::from("| seed | val acc | test acc |\n|---|---|---|\n");
    for r in &s.runs {
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            r.seed,
            pct(r.val_accuracy),
            pct(r.test_accuracy)
        ));
    }
    out.push_str(&format!(
        "\ntest accuracy: {} ± {} over {} runs\n",
        pct(s.mean_test_accuracy),
        pct(s.std_test_accuracy),
        s.runs.len()
    ));
    out
}

pub fn grid_markdown(g: &GridReport) -> String {
    let mut out = String::from(
        "| rank | config | layers | comb1 | comb2 | bn | act | alphas | val acc | test acc | params | status |\n\
         |---|---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    for row in &g.rows {
        let c = &row.config;
        let alphas: Vec<String> = c.branches.iter().map(|b| b.alpha.0.to_string()).collect();
        out.push_str(&format!(
            "| {} | {} | {} | {:?} | {:?} | {} | {} | {} | {} | {} | {} | {} |\n",
            row.rank,
            row.config_hash,
            c.layers,
            c.comb1,
            c.comb2,
            c.batchnorm,
            c.activation,
            alphas.join("/"),
            pct(row.report.val_accuracy),
            pct(row.report.test_accuracy),
            row.report.param_count,
            row.report.failed.as_deref().unwrap_or("ok")
        ));
    }
    match &g.best {
        Some(b) => out.push_str(&format!("\nbest: {} (rank {})\n", b.config_hash, b.rank)),
        None => out.push_str("\nbest: none (every run failed)\n"),
    }
    out
}

pub fn homophily_markdown(rows: &[HomophilyReport]) -> String {
    let mut out = String::from("| matrix | homo | hetero | no_neigh |\n|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            r.matrix, r.homo, r.hetero, r.no_neigh
        ));
    }
    out
}

pub fn verify_markdown(v: &VerifyReport) -> String {
    let mut out = String::from("| suite | check | result | detail |\n|---|---|---|---|\n");
    for c in &v.checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            c.suite, c.name, mark, c.detail
        ));
    }
    let failed = v.failures().count();
    out.push_str(&format!(
        "\n{}: {} checks, {} failed\n",
        if v.passed { "PASS" } else { "FAIL" },
        v.checks.len(),
        failed
    ));
    out
}
