use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Affine layer `W x + b` with `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { weight: Matrix::zeros(outputs, inputs), bias: vec![0.0; outputs] }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }
}

/// Feed-forward tower: ReLU after every layer except the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn inputs(&self) -> usize {
        self.layers.first().map_or(0, Dense::inputs)
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }
}

/// Layer widths of the twin-tower scorer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelShape {
    /// Width of the group member vectors (and of each attention matrix).
    pub emb_dim: usize,
    pub user_attr_dim: usize,
    pub item_attr_dim: usize,
    /// Hidden layer widths shared by both towers.
    pub hidden: Vec<usize>,
    /// Output width of both towers; the latent factor dimension.
    pub latent_dim: usize,
}

impl ModelShape {
    fn tower_widths(&self, attr_dim: usize) -> Vec<usize> {
        let mut w = vec![self.emb_dim + attr_dim];
        w.extend(&self.hidden);
        w.push(self.latent_dim);
        w
    }

    fn validate(&self) -> Result<()> {
        if self.emb_dim == 0 || self.latent_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config(format!("degenerate model shape {self:?}")));
        }
        Ok(())
    }
}

/// All trainable state: one bilinear attention matrix per side plus the two
/// MLP towers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_user: Matrix,
    pub w_item: Matrix,
    pub user_mlp: Mlp,
    pub item_mlp: Mlp,
}

impl ModelParams {
    pub fn zeros(shape: &ModelShape) -> Result<Self> {
        shape.validate()?;
        let tower = |attr_dim| Mlp {
            layers: shape.tower_widths(attr_dim).windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        };
        Ok(ModelParams {
            w_user: Matrix::zeros(shape.emb_dim, shape.emb_dim),
            w_item: Matrix::zeros(shape.emb_dim, shape.emb_dim),
            user_mlp: tower(shape.user_attr_dim),
            item_mlp: tower(shape.item_attr_dim),
        })
    }

    /// Attention matrices start at zero (plain mean pooling); tower weights
    /// are Glorot-uniform and biases zero.
    pub fn init(shape: &ModelShape, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in params.user_mlp.layers.iter_mut().chain(params.item_mlp.layers.iter_mut()) {
            let limit = (6.0 / (layer.inputs() + layer.outputs()) as f64).sqrt();
            for w in layer.weight.as_mut_slice() {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(params)
    }

    pub fn shape(&self) -> ModelShape {
        let hidden = self.user_mlp.layers[..self.user_mlp.layers.len() - 1].iter().map(Dense::outputs).collect();
        let emb_dim = self.w_user.rows();
        ModelShape {
            emb_dim,
            user_attr_dim: self.user_mlp.inputs() - emb_dim,
            item_attr_dim: self.item_mlp.inputs() - emb_dim,
            hidden,
            latent_dim: self.user_mlp.outputs(),
        }
    }

    /// Checks that layer widths chain and both towers agree on the output.
    pub fn validate(&self) -> Result<()> {
        let d = self.w_user.rows();
        if self.w_user.cols() != d || self.w_item.rows() != d || self.w_item.cols() != d {
            return Err(Error::Shape("attention matrices must both be d×d".into()));
        }
        for (name, mlp) in [("user", &self.user_mlp), ("item", &self.item_mlp)] {
            if mlp.layers.is_empty() || mlp.inputs() < d {
                return Err(Error::Shape(format!("{name} tower must accept at least {d} inputs")));
            }
            for w in mlp.layers.windows(2) {
                if w[0].outputs() != w[1].inputs() {
                    return Err(Error::Shape(format!("{name} tower layers do not chain")));
                }
            }
            if mlp.layers.iter().any(|l| l.bias.len() != l.outputs()) {
                return Err(Error::Shape(format!("{name} tower bias width mismatch")));
            }
        }
        if self.user_mlp.outputs() != self.item_mlp.outputs() {
            return Err(Error::Shape("towers end at different widths".into()));
        }
        let hidden = |m: &Mlp| m.layers.iter().map(Dense::outputs).collect::<Vec<_>>();
        if hidden(&self.user_mlp) != hidden(&self.item_mlp) {
            return Err(Error::Shape("towers have different hidden widths".into()));
        }
        if !self.is_finite() {
            return Err(Error::Data("model parameters are not finite".into()));
        }
        Ok(())
    }

    /// Every parameter block, in a fixed order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.w_user.as_slice(), self.w_item.as_slice()];
        for layer in self.user_mlp.layers.iter().chain(&self.item_mlp.layers) {
            out.push(layer.weight.as_slice());
            out.push(&layer.bias);
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.w_user.as_mut_slice(), self.w_item.as_mut_slice()];
        for layer in self.user_mlp.layers.iter_mut().chain(self.item_mlp.layers.iter_mut()) {
            out.push(layer.weight.as_mut_slice());
            out.push(&mut layer.bias);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// `self += alpha * other`; shapes must match.
    pub fn add_scaled(&mut self, alpha: f64, other: &ModelParams) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            crate::linalg::axpy(alpha, src, dst);
        }
    }

    pub fn fill(&mut self, value: f64) {
        for b in self.blocks_mut() {
            b.fill(value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> ModelShape {
        ModelShape { emb_dim: 4, user_attr_dim: 3, item_attr_dim: 5, hidden: vec![6, 2], latent_dim: 3 }
    }

    #[test]
    fn shapes_chain() {
        let p = ModelParams::init(&shape(), 1).unwrap();
        p.validate().unwrap();
        assert_eq!(p.shape(), shape());
        assert_eq!(p.user_mlp.inputs(), 7);
        assert_eq!(p.item_mlp.inputs(), 9);
        // 2 * 16 + (7*6 + 6 + 6*2 + 2 + 2*3 + 3) + (9*6 + 6 + 12 + 2 + 6 + 3)
        assert_eq!(p.num_params(), 32 + 71 + 83);
    }

    #[test]
    fn mismatched_towers_fail_validation() {
        let mut p = ModelParams::init(&shape(), 1).unwrap();
        p.item_mlp.layers.pop();
        assert!(matches!(p.validate(), Err(Error::Shape(_))));
        let mut p = ModelParams::init(&shape(), 1).unwrap();
        p.w_item.as_mut_slice()[0] = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(ModelParams::init(&shape(), 4).unwrap(), ModelParams::init(&shape(), 4).unwrap());
        assert_ne!(ModelParams::init(&shape(), 4).unwrap(), ModelParams::init(&shape(), 5).unwrap());
    }

    #[test]
    fn zero_width_is_rejected() {
        let bad = ModelShape { latent_dim: 0, ..shape() };
        assert!(ModelParams::zeros(&bad).is_err());
    }
}
