//! Forward and backward passes through a chain of dense layers.

use ndarray::{Array2, ArrayView2, Axis};

use super::LayerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Activation {
    Relu,
    Identity,
}

/// Cached intermediate values of a forward pass.
pub(crate) struct Trace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    pub output: Array2<f64>,
}

fn affine(x: &ArrayView2<f64>, layer: &LayerParams) -> Array2<f64> {
    let mut z = x.dot(&layer.w);
    z += &layer.b;
    z
}

fn activate(z: &Array2<f64>, act: Activation) -> Array2<f64> {
    match act {
        Activation::Relu => z.mapv(|v| v.max(0.0)),
        Activation::Identity => z.clone(),
    }
}

/// Masks are pre-scaled (0 or 1/(1-p)) and may have one row, in which case
/// they broadcast over the batch.
pub(crate) fn forward(
    layers: &[&LayerParams],
    acts: &[Activation],
    x: ArrayView2<f64>,
    masks: &[Option<&Array2<f64>>],
) -> Trace {
    debug_assert_eq!(layers.len(), acts.len());
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut kept = Vec::with_capacity(layers.len());
    let mut current = x.to_owned();
    for (i, (layer, &act)) in layers.iter().zip(acts).enumerate() {
        let z = affine(&current.view(), layer);
        let mut h = activate(&z, act);
        let mask = masks.get(i).copied().flatten();
        if let Some(m) = mask {
            h = &h * m;
        }
        inputs.push(std::mem::replace(&mut current, h));
        pre.push(z);
        kept.push(mask.cloned());
    }
    Trace {
        inputs,
        pre,
        masks: kept,
        output: current,
    }
}

/// Forward pass without caching, for inference.
pub(crate) fn infer(
    layers: &[&LayerParams],
    acts: &[Activation],
    x: ArrayView2<f64>,
    masks: &[Option<&Array2<f64>>],
) -> Array2<f64> {
    let mut current = x.to_owned();
    for (i, (layer, &act)) in layers.iter().zip(acts).enumerate() {
        let z = affine(&current.view(), layer);
        current = match act {
            Activation::Relu => z.mapv_into(|v| v.max(0.0)),
            Activation::Identity => z,
        };
        if let Some(m) = masks.get(i).copied().flatten() {
            current = &current * m;
        }
    }
    current
}

/// Back-propagates `d_out` (gradient of the loss w.r.t. the stack output).
/// Returns per-layer parameter gradients and the gradient w.r.t. the input.
pub(crate) fn backward(
    layers: &[&LayerParams],
    acts: &[Activation],
    trace: &Trace,
    d_out: Array2<f64>,
) -> (Vec<LayerParams>, Array2<f64>) {
    let mut grads = Vec::with_capacity(layers.len());
    let mut d = d_out;
    for i in (0..layers.len()).rev() {
        if let Some(m) = &trace.masks[i] {
            d = &d * m;
        }
        if acts[i] == Activation::Relu {
            d.zip_mut_with(&trace.pre[i], |g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        let dw = trace.inputs[i].t().dot(&d);
        let db = d.sum_axis(Axis(0));
        let d_in = d.dot(&layers[i].w.t());
        grads.push(LayerParams { w: dw, b: db });
        d = d_in;
    }
    grads.reverse();
    (grads, d)
}
