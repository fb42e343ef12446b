use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::event::{EventLabel, EventPrediction, Taxonomy, NUM_SUBTYPES, NUM_TYPES, TYPES};

/// Recall at one `k` for each class that appears in the labels (`None`
/// otherwise) and their unweighted mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallAtK {
    pub k: usize,
    pub per_class: Vec<Option<f64>>,
    pub macro_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub count: usize,
    pub type_accuracy: Vec<(usize, f64)>,
    pub subtype_accuracy: Vec<(usize, f64)>,
    pub type_recall: Vec<RecallAtK>,
    pub subtype_recall: Vec<RecallAtK>,
    pub type_precision_macro: f64,
    pub type_recall_macro: f64,
    pub type_f1_macro: f64,
}

fn recall(ranked: &[Vec<usize>], truth: &[usize], classes: usize, k: usize) -> RecallAtK {
    let mut hit = vec![0usize; classes];
    let mut n = vec![0usize; classes];
    for (r, &t) in ranked.iter().zip(truth) {
        n[t] += 1;
        hit[t] += usize::from(r.iter().take(k).any(|&c| c == t));
    }
    let per_class: Vec<Option<f64>> = (0..classes).map(|c| (n[c] > 0).then(|| hit[c] as f64 / n[c] as f64)).collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    RecallAtK {
        k,
        macro_avg: present.iter().sum::<f64>() / present.len() as f64,
        per_class,
    }
}

fn accuracy(ranked: &[Vec<usize>], truth: &[usize], k: usize) -> f64 {
    let hits = ranked
        .iter()
        .zip(truth)
        .filter(|(r, t)| r.iter().take(k).any(|c| c == *t))
        .count();
    hits as f64 / truth.len() as f64
}

/// Top-k accuracy and recall on types (k = 1, 3) and on the combined subtype
/// distribution (k = 1, 3, 5), plus macro precision, recall and F1 of the
/// top-1 type over classes seen in labels or predictions.
pub fn event_metrics(predictions: &[EventPrediction], labels: &[EventLabel]) -> Result<EventReport> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(invalid("event metrics need matching, non-empty predictions and labels"));
    }
    let t_ranked: Vec<Vec<usize>> = predictions.iter().map(|p| p.ranked_types()).collect();
    let s_ranked: Vec<Vec<usize>> = predictions.iter().map(|p| p.ranked_subtypes()).collect();
    let t_truth: Vec<usize> = labels.iter().map(|l| l.event_type).collect();
    let s_truth: Vec<usize> = labels.iter().map(|l| l.global()).collect();

    let mut tp = [0usize; NUM_TYPES];
    let mut predicted = [0usize; NUM_TYPES];
    let mut actual = [0usize; NUM_TYPES];
    for (r, &t) in t_ranked.iter().zip(&t_truth) {
        predicted[r[0]] += 1;
        actual[t] += 1;
        tp[t] += usize::from(r[0] == t);
    }
    let (mut ps, mut rs, mut fs, mut m) = (0.0, 0.0, 0.0, 0);
    for c in 0..NUM_TYPES {
        if predicted[c] + actual[c] == 0 {
            continue;
        }
        let p = if predicted[c] > 0 { tp[c] as f64 / predicted[c] as f64 } else { 0.0 };
        let r = if actual[c] > 0 { tp[c] as f64 / actual[c] as f64 } else { 0.0 };
        ps += p;
        rs += r;
        fs += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        m += 1;
    }
    let m = m as f64;
    Ok(EventReport {
        count: labels.len(),
        type_accuracy: [1, 3].iter().map(|&k| (k, accuracy(&t_ranked, &t_truth, k))).collect(),
        subtype_accuracy: [1, 3, 5].iter().map(|&k| (k, accuracy(&s_ranked, &s_truth, k))).collect(),
        type_recall: [1, 3].iter().map(|&k| recall(&t_ranked, &t_truth, NUM_TYPES, k)).collect(),
        subtype_recall: [1, 3, 5].iter().map(|&k| recall(&s_ranked, &s_truth, NUM_SUBTYPES, k)).collect(),
        type_precision_macro: ps / m,
        type_recall_macro: rs / m,
        type_f1_macro: fs / m,
    })
}

/// Long-format table `level,metric,k,class,value`. Per-class recall rows
/// are written only for classes present in the labels.
pub fn event_report_csv(r: &EventReport) -> String {
    let mut out = String::from("level,metric,k,class,value\n");
    let mut row = |level: &str, metric: &str, k: Option<usize>, class: &str, v: f64| {
        let k = k.map(|k| k.to_string()).unwrap_or_default();
        out.push_str(&format!("{level},{metric},{k},{class},{v:.10}\n"));
    };
    for (level, acc, rec, names) in [
        ("type", &r.type_accuracy, &r.type_recall, TYPES.to_vec()),
        ("subtype", &r.subtype_accuracy, &r.subtype_recall, Taxonomy.all_subtypes().collect()),
    ] {
        for &(k, a) in acc {
            row(level, "accuracy", Some(k), "", a);
        }
        for rk in rec {
            row(level, "recall_macro", Some(rk.k), "", rk.macro_avg);
            for (c, v) in rk.per_class.iter().enumerate() {
                if let Some(v) = v {
                    row(level, "recall", Some(rk.k), names[c], *v);
                }
            }
        }
    }
    row("type", "precision_macro", None, "", r.type_precision_macro);
    row("type", "recall_macro_top1", None, "", r.type_recall_macro);
    row("type", "f1_macro", None, "", r.type_f1_macro);
    out
}
