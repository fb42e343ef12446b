use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::forecast::{EventSummary, Spread};
use super::model::EventPrediction;
use super::taxonomy::{EventLabel, Taxonomy, NUM_SUBTYPES, TYPES};

/// One row of a prediction report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub clip_id: String,
    pub label: Option<EventLabel>,
    pub prediction: EventPrediction,
}

impl PredictionRecord {
    pub fn hits(&self) -> Option<[bool; 5]> {
        let l = self.label?;
        let p = &self.prediction;
        Some([
            p.type_hit(l, 1),
            p.type_hit(l, 3),
            p.subtype_hit(l, 1),
            p.subtype_hit(l, 3),
            p.subtype_hit(l, 5),
        ])
    }
}

pub fn prediction_csv_header() -> String {
    let mut cols = vec!["clip_id", "true_type", "true_subtype", "pred_type", "pred_subtype"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    cols.extend(TYPES.iter().map(|t| format!("p_type_{t}")));
    cols.extend(Taxonomy.all_subtypes().map(|s| format!("p_sub_{s}")));
    cols.extend(["type_top1", "type_top3", "sub_top1", "sub_top3", "sub_top5"].map(String::from));
    cols.join(",")
}

/// Comma-separated report with a header line. Probabilities use 10
/// decimals; hit flags are 0/1 and empty without a label.
pub fn prediction_csv(records: &[PredictionRecord]) -> String {
    let mut out = prediction_csv_header();
    out.push('\n');
    for r in records {
        let p = &r.prediction;
        let (tt, ts) = match r.label {
            Some(l) => (TYPES[l.event_type], l.name()),
            None => ("", ""),
        };
        write!(
            out,
            "{},{tt},{ts},{},{}",
            csv_field(&r.clip_id),
            TYPES[p.predicted.event_type],
            p.predicted.name()
        )
        .unwrap();
        for v in p.type_probs.iter().chain(&p.combined) {
            write!(out, ",{v:.10}").unwrap();
        }
        match r.hits() {
            Some(h) => h.iter().for_each(|b| write!(out, ",{}", u8::from(*b)).unwrap()),
            None => out.push_str(",,,,,"),
        }
        out.push('\n');
    }
    debug_assert_eq!(prediction_csv_header().split(',').count(), 5 + 5 + NUM_SUBTYPES + 5);
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn prediction_json(records: &[PredictionRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

/// Spread of each class probability across forecast samples, types first
/// and then the combined subtype distribution.
pub fn summary_csv(summary: &EventSummary) -> String {
    let mut out = String::from("level,class,min,p10,median,p90,max\n");
    let rows = TYPES
        .iter()
        .map(|t| ("type", *t))
        .zip(&summary.types)
        .chain(Taxonomy.all_subtypes().map(|s| ("subtype", s)).zip(&summary.subtypes));
    for ((level, class), Spread { min, p10, median, p90, max }) in rows {
        writeln!(out, "{level},{class},{min:.10},{p10:.10},{median:.10},{p90:.10},{max:.10}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_line_up() {
        let sub: Vec<Vec<f64>> = (0..5).map(|t| vec![0.0; Taxonomy.subtype_count(t)]).collect();
        let p = EventPrediction::from_logits(&[3.0, 0.0, 0.0, 0.0, 0.0], &sub).unwrap();
        let recs = vec![
            PredictionRecord {
                clip_id: "a,b".into(),
                label: Some(EventLabel::from_subtype("build").unwrap()),
                prediction: p.clone(),
            },
            PredictionRecord {
                clip_id: "c".into(),
                label: None,
                prediction: p,
            },
        ];
        let csv = prediction_csv(&recs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("\"a,b\",build,build,build,build,"));
        assert!(lines[1].ends_with(",1,1,1,1,1"));
        assert!(lines[2].ends_with(",,,,,"));
        assert_eq!(lines[2].split(',').count(), lines[0].split(',').count());
        let back: Vec<PredictionRecord> = serde_json::from_str(&prediction_json(&recs)).unwrap();
        assert_eq!(back, recs);
    }
}
