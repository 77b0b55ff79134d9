use ndarray::{Array2, Axis};

/// Row-wise numerically stable softmax.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean negative log-likelihood of the true classes and its gradient
/// `(softmax - onehot) / rows` with respect to the logits.
pub fn softmax_xent(logits: &Array2<f64>, y: &[usize]) -> (f64, Array2<f64>) {
    assert_eq!(logits.nrows(), y.len(), "logit rows must match label count");
    let n = y.len().max(1) as f64;
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    for (i, (mut row, &c)) in grad.axis_iter_mut(Axis(0)).zip(y).enumerate() {
        let logit_row = logits.row(i);
        let max = logit_row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + logit_row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - logit_row[c];
        row[c] -= 1.0;
        row.mapv_inplace(|v| v / n);
    }
    (loss / n, grad)
}
