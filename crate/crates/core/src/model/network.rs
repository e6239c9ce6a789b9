//! Attention over groups, the two MLP towers and the sigmoid dot-product
//! scorer, with hand-derived gradients of the logistic loss.

use std::fmt::Display;
use std::sync::Arc;

use super::{AttributeVector, Mlp, ModelParams};
use crate::linalg::{axpy, dot, Matrix};
use crate::relations::{Group, ItemGroup, UserGroup};
use crate::{Error, Result};

/// Logits are clipped to this magnitude before the sigmoid.
pub const LOGIT_CLIP: f64 = 30.0;

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-12;

pub fn sigmoid(logit: f64) -> f64 {
    let z = logit.clamp(-LOGIT_CLIP, LOGIT_CLIP);
    1.0 / (1.0 + (-z).exp())
}

/// Logistic loss `-y ln ŷ - (1 - y) ln(1 - ŷ)`.
pub fn loss(y: bool, y_hat: f64) -> f64 {
    let p = y_hat.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Attention weights over the non-padding members of a group and the
/// weighted sum they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// One weight per non-padding member, target last.
    pub weights: Vec<f64>,
    pub output: Vec<f64>,
}

/// Bilinear attention anchored on the group's target:
/// `score_i = e_tᵀ W e_i`, `α = softmax(score)` over non-padding members
/// (target included), `a = Σ α_i e_i`.
pub fn attention<I: Clone + PartialEq + Display>(group: &Group<I>, w: &Matrix) -> Result<Attention> {
    let d = group.dim();
    if w.rows() != d || w.cols() != d {
        return Err(Error::Shape(format!(
            "attention matrix is {}x{}, members have {d} components",
            w.rows(),
            w.cols()
        )));
    }
    // e_tᵀ W e_i = (Wᵀ e_t) · e_i
    let query = w.tr_mul_vec(group.target_vector());
    let scores: Vec<f64> = group.members().iter().map(|(_, e)| dot(&query, e)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|a| *a /= total);

    let mut output = vec![0.0; d];
    for (a, (_, e)) in weights.iter().zip(group.members()) {
        axpy(*a, e, &mut output);
    }
    Ok(Attention { weights, output })
}

impl Attention {
    /// Weights for every slot of `group`, padding (weight 0) first.
    pub fn slot_weights<I: Clone + PartialEq + Display>(&self, group: &Group<I>) -> Vec<f64> {
        let mut out = vec![0.0; group.padding()];
        out.extend(&self.weights);
        out
    }
}

/// Accumulates `∂L/∂W` given `∂L/∂a`.
fn attention_backward<I: Clone + PartialEq + Display>(
    group: &Group<I>,
    att: &Attention,
    grad_output: &[f64],
    grad_w: &mut Matrix,
) {
    // ∂L/∂score_i = α_i (g·e_i - g·a); ∂score_i/∂W = e_t e_iᵀ
    let g_mean = dot(grad_output, &att.output);
    let mut r = vec![0.0; group.dim()];
    for (a, (_, e)) in att.weights.iter().zip(group.members()) {
        let ds = a * (dot(grad_output, e) - g_mean);
        axpy(ds, e, &mut r);
    }
    grad_w.add_outer(1.0, group.target_vector(), &r);
}

/// Activations of every layer; `acts[0]` is the input and `acts.last()` the
/// tower output.
#[derive(Debug, Clone)]
struct TowerPass {
    acts: Vec<Vec<f64>>,
}

fn tower_forward(mlp: &Mlp, input: Vec<f64>) -> TowerPass {
    let mut acts = Vec::with_capacity(mlp.layers.len() + 1);
    acts.push(input);
    let last = mlp.layers.len() - 1;
    for (l, layer) in mlp.layers.iter().enumerate() {
        let mut z = layer.bias.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            *zr += dot(layer.weight.row(r), &acts[l]);
        }
        if l < last {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(z);
    }
    TowerPass { acts }
}

/// Accumulates layer gradients and returns `∂L/∂input`.
fn tower_backward(mlp: &Mlp, pass: &TowerPass, grad_output: &[f64], grads: &mut Mlp) -> Vec<f64> {
    let last = mlp.layers.len() - 1;
    let mut grad = grad_output.to_vec();
    for l in (0..mlp.layers.len()).rev() {
        if l < last {
            for (g, a) in grad.iter_mut().zip(&pass.acts[l + 1]) {
                if *a <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        let layer = &mlp.layers[l];
        let g_layer = &mut grads.layers[l];
        g_layer.weight.add_outer(1.0, &grad, &pass.acts[l]);
        axpy(1.0, &grad, &mut g_layer.bias);
        grad = layer.weight.tr_mul_vec(&grad);
    }
    grad
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// One labelled (user, item) impression.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub user_group: Arc<UserGroup>,
    pub item_group: Arc<ItemGroup>,
    pub user_attrs: Arc<AttributeVector>,
    pub item_attrs: Arc<AttributeVector>,
    /// Clicked.
    pub label: bool,
}

/// Result of a forward pass with the intermediates backward needs.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub user_attention: Attention,
    pub item_attention: Attention,
    user_tower: TowerPass,
    item_tower: TowerPass,
    /// `s_u · s_i` before clipping.
    pub logit: f64,
    pub y_hat: f64,
}

impl ForwardPass {
    pub fn s_u(&self) -> &[f64] {
        self.user_tower.acts.last().expect("tower has layers")
    }

    pub fn s_i(&self) -> &[f64] {
        self.item_tower.acts.last().expect("tower has layers")
    }
}

fn check_input(mlp: &Mlp, emb_dim: usize, attrs: &AttributeVector, side: &str) -> Result<()> {
    if mlp.inputs() != emb_dim + attrs.len() {
        return Err(Error::Shape(format!(
            "{side} tower expects {} inputs, got {emb_dim} + {} attributes",
            mlp.inputs(),
            attrs.len()
        )));
    }
    Ok(())
}

/// Latent factor `s_u` (or `s_i`) of one side: attention, concatenation with
/// the attribute vector, then the tower.
pub fn tower_output<I: Clone + PartialEq + Display>(
    group: &Group<I>,
    attrs: &AttributeVector,
    w: &Matrix,
    mlp: &Mlp,
) -> Result<Vec<f64>> {
    check_input(mlp, group.dim(), attrs, "tower")?;
    let att = attention(group, w)?;
    let pass = tower_forward(mlp, concat(&att.output, attrs.values()));
    Ok(pass.acts.last().expect("tower has layers").clone())
}

/// `σ(s_u · s_i)`
pub fn score(s_u: &[f64], s_i: &[f64]) -> f64 {
    sigmoid(dot(s_u, s_i))
}

pub fn forward(sample: &TrainingSample, params: &ModelParams) -> Result<ForwardPass> {
    check_input(&params.user_mlp, sample.user_group.dim(), &sample.user_attrs, "user")?;
    check_input(&params.item_mlp, sample.item_group.dim(), &sample.item_attrs, "item")?;
    let user_attention = attention(&sample.user_group, &params.w_user)?;
    let item_attention = attention(&sample.item_group, &params.w_item)?;
    let user_tower = tower_forward(&params.user_mlp, concat(&user_attention.output, sample.user_attrs.values()));
    let item_tower = tower_forward(&params.item_mlp, concat(&item_attention.output, sample.item_attrs.values()));
    let logit =
        dot(user_tower.acts.last().expect("tower has layers"), item_tower.acts.last().expect("tower has layers"));
    Ok(ForwardPass { user_attention, item_attention, user_tower, item_tower, logit, y_hat: sigmoid(logit) })
}

/// Adds this sample's gradient of the logistic loss into `grads` and returns
/// its loss. Member vectors are inputs and receive no gradient. The logit clip
/// is treated as identity for the gradient, so saturated mistakes still
/// produce a learning signal.
pub fn accumulate_gradients(sample: &TrainingSample, params: &ModelParams, grads: &mut ModelParams) -> Result<f64> {
    let pass = forward(sample, params)?;
    let d_logit = pass.y_hat - if sample.label { 1.0 } else { 0.0 };

    let d_su: Vec<f64> = pass.s_i().iter().map(|v| d_logit * v).collect();
    let d_si: Vec<f64> = pass.s_u().iter().map(|v| d_logit * v).collect();

    let d_vu = tower_backward(&params.user_mlp, &pass.user_tower, &d_su, &mut grads.user_mlp);
    let d_vi = tower_backward(&params.item_mlp, &pass.item_tower, &d_si, &mut grads.item_mlp);

    let d = sample.user_group.dim();
    attention_backward(&sample.user_group, &pass.user_attention, &d_vu[..d], &mut grads.w_user);
    attention_backward(&sample.item_group, &pass.item_attention, &d_vi[..d], &mut grads.w_item);

    Ok(loss(sample.label, pass.y_hat))
}

/// Loss and its gradient with respect to every parameter.
pub fn backward(sample: &TrainingSample, params: &ModelParams) -> Result<(f64, ModelParams)> {
    let mut grads = params.clone();
    grads.fill(0.0);
    let l = accumulate_gradients(sample, params, &mut grads)?;
    Ok((l, grads))
}
