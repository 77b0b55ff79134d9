use super::{LayerParams, TrainConfig};

/// First and second moment estimates, one entry per parameter layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<LayerParams>,
    pub v: Vec<LayerParams>,
}

impl AdamState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a LayerParams>) -> Self {
        let m: Vec<LayerParams> = params.into_iter().map(LayerParams::zeros_like).collect();
        AdamState { v: m.clone(), m }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(params: &mut [&mut LayerParams], grads: &[LayerParams], state: &mut AdamState, t: u64, cfg: &TrainConfig) {
    assert!(t >= 1, "Adam step counter is 1-based");
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    let (lr, eps) = (cfg.learning_rate, cfg.epsilon);
    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        ndarray::Zip::from(&mut p.w)
            .and(&g.w)
            .and(&mut m.w)
            .and(&mut v.w)
            .for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut p.b)
            .and(&g.b)
            .and(&mut m.b)
            .and(&mut v.b)
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
}
