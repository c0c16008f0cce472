//! Human-readable evaluation report and the deviation table.

use std::collections::BTreeMap;
use std::fmt::Write;

use narrex_core::eval::{DeviationKind, EvalReport};
use narrex_core::RawNarrative;

type ById<'a> = BTreeMap<&'a str, &'a RawNarrative>;

fn line(n: &RawNarrative) -> String {
    format!("{} - {} - {}", n.pair.event_a, n.pair.connector.gold(), n.pair.event_b)
}

fn text_of(id: Option<&String>, narratives: &ById) -> String {
    id.and_then(|id| narratives.get(id.as_str())).map(|n| line(n)).unwrap_or_default()
}

fn kind(k: DeviationKind) -> &'static str {
    match k {
        DeviationKind::Major => "major",
        DeviationKind::Minor => "minor",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".to_string())
}

pub fn report_text(report: &EvalReport, predicted: &ById, gold: &ById) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "documents                 {}", report.documents);
    let _ = writeln!(out, "gold narratives           {}", report.gold_narratives);
    let _ = writeln!(out, "predicted narratives      {}", report.predicted_narratives);
    let _ = writeln!(out, "accuracy                  {:.4}", report.accuracy);
    let _ = writeln!(out, "major deviations / doc    {:.4}", report.major_deviation_rate);
    let _ = writeln!(out, "minor deviations / doc    {:.4}", report.minor_deviation_rate);
    let _ = writeln!(out, "mean Jaccard              {:.4}", report.mean_jaccard);
    if !report.expert_major_rates.is_empty() {
        let rates: Vec<String> = report.expert_major_rates.iter().map(|r| format!("{r:.4}")).collect();
        let _ = writeln!(out, "expert major rates        {}", rates.join(" "));
        let _ = writeln!(out, "baseline ({:?})            {}", report.baseline, opt(report.baseline_rate));
        let _ = writeln!(out, "unexpected majors / doc   {}", opt(report.unexpected_major_deviations));
    }
    let _ = writeln!(
        out,
        "match threshold {}, minor deviations count as {}",
        report.match_threshold,
        if report.minor_is_correct { "correct" } else { "incorrect" }
    );
    for d in &report.per_document {
        let _ = writeln!(out);
        let _ = writeln!(out, "{}", d.doc_id);
        let _ = writeln!(
            out,
            "  gold {}, predicted {}, correct {}, major {}, minor {}, Jaccard {:.4}",
            d.gold, d.predicted, d.correct, d.majors, d.minors, d.jaccard
        );
        for r in &d.deviations {
            let _ = writeln!(
                out,
                "  {} {}{}",
                kind(r.kind),
                r.reason,
                if r.manual { " (manual)" } else { "" }
            );
            if let Some(p) = &r.predicted {
                let _ = writeln!(out, "    predicted {p}: {}", text_of(Some(p), predicted));
            }
            if let Some(g) = &r.gold {
                let _ = writeln!(out, "    gold      {g}: {}", text_of(Some(g), gold));
            }
        }
    }
    out
}

fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn deviations_tsv(report: &EvalReport, predicted: &ById, gold: &ById) -> String {
    let mut out = String::from("doc\tkind\treason\tpredicted_id\tgold_id\tscore\tmanual\tpredicted\tgold\n");
    for d in &report.per_document {
        for r in &d.deviations {
            let row = [
                cell(&d.doc_id),
                kind(r.kind).to_string(),
                cell(&r.reason),
                r.predicted.clone().unwrap_or_default(),
                r.gold.clone().unwrap_or_default(),
                opt(r.score),
                r.manual.to_string(),
                cell(&text_of(r.predicted.as_ref(), predicted)),
                cell(&text_of(r.gold.as_ref(), gold)),
            ];
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
    }
    out
}
