use crate::corpus::LabelId;

/// Support-weighted mean of per-class F1. Classes with no predictions and
/// no support contribute nothing; an undefined precision or recall counts
/// as 0.
pub fn weighted_f1(gold: &[LabelId], predicted: &[LabelId], n_labels: usize) -> f64 {
    assert_eq!(gold.len(), predicted.len(), "gold and predicted lengths differ");
    if gold.is_empty() {
        return 0.0;
    }
    let mut tp = vec![0usize; n_labels];
    let mut pred_count = vec![0usize; n_labels];
    let mut support = vec![0usize; n_labels];
    for (&g, &p) in gold.iter().zip(predicted) {
        support[g.index()] += 1;
        pred_count[p.index()] += 1;
        if g == p {
            tp[g.index()] += 1;
        }
    }
    let total = gold.len() as f64;
    (0..n_labels)
        .filter(|&c| support[c] > 0)
        .map(|c| {
            let precision = if pred_count[c] == 0 {
                0.0
            } else {
                tp[c] as f64 / pred_count[c] as f64
            };
            let recall = tp[c] as f64 / support[c] as f64;
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            f1 * support[c] as f64 / total
        })
        .sum()
}
