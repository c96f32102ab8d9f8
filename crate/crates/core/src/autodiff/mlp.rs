use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParameterSet};
use super::tape::{Tape, Var};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
}

/// Stack of dense layers; inputs are rows, weights are `in x out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// `dims = [in, h1, ..., out]`. Hidden layers use relu, the last uses `last`.
    pub fn new(
        params: &mut ParameterSet,
        prefix: &str,
        dims: &[usize],
        last: Activation,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut layers = Vec::new();
        for (i, w) in dims.windows(2).enumerate() {
            let weight = params.add_weight(format!("{prefix}.{i}.w"), w[0], w[1], rng)?;
            let bias = params.add_zeros(format!("{prefix}.{i}.b"), 1, w[1])?;
            let activation = if i + 2 == dims.len() { last } else { Activation::Relu };
            layers.push(Layer {
                weight,
                bias,
                activation,
            });
        }
        Ok(Mlp { layers })
    }

    pub fn apply(&self, tape: &mut Tape, params: &ParameterSet, x: Var) -> Result<Var> {
        apply_mlp(tape, params, &self.layers, x)
    }
}

pub fn apply_mlp(tape: &mut Tape, params: &ParameterSet, layers: &[Layer], x: Var) -> Result<Var> {
    let mut h = x;
    for l in layers {
        let w = tape.param(params, l.weight);
        let b = tape.param(params, l.bias);
        h = tape.matmul(h, w)?;
        h = tape.add_bias(h, b)?;
        if l.activation == Activation::Relu {
            h = tape.relu(h);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, Tensor};
    use crate::error::Error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_layer(w: Tensor, b: Tensor, act: Activation) -> (ParameterSet, Vec<Layer>) {
        let mut ps = ParameterSet::new();
        let weight = ps.add("w", w).unwrap();
        let bias = ps.add("b", b).unwrap();
        (
            ps,
            vec![Layer {
                weight,
                bias,
                activation: act,
            }],
        )
    }

    fn run(ps: &ParameterSet, layers: &[Layer], x: Tensor) -> Result<Tensor> {
        let mut t = Tape::new();
        let xv = t.constant(x);
        let y = apply_mlp(&mut t, ps, layers, xv)?;
        Ok(t.value(y).clone())
    }

    #[test]
    fn zero_identity_and_hand_layers() {
        let (ps, l) = one_layer(Tensor::zeros(3, 2), Tensor::zeros(1, 2), Activation::Relu);
        assert_eq!(run(&ps, &l, Tensor::row(&[1.0, -2.0, 5.0])).unwrap().data(), &[0.0, 0.0]);

        let eye = Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (ps, l) = one_layer(eye, Tensor::zeros(1, 2), Activation::Identity);
        assert_eq!(run(&ps, &l, Tensor::row(&[-1.5, 4.0])).unwrap().data(), &[-1.5, 4.0]);

        let (ps, l) = one_layer(Tensor::scalar(2.0), Tensor::scalar(1.0), Activation::Relu);
        assert_eq!(run(&ps, &l, Tensor::scalar(3.0)).unwrap().data(), &[7.0]);
    }

    #[test]
    fn chain_mismatch() {
        let (ps, l) = one_layer(Tensor::zeros(3, 2), Tensor::zeros(1, 2), Activation::Relu);
        assert!(matches!(
            run(&ps, &l, Tensor::row(&[1.0, 2.0])),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn two_layer_perceptron_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mut ps = ParameterSet::new();
            let mlp = Mlp::new(&mut ps, "m", &[3, 4, 1], Activation::Identity, &mut rng).unwrap();
            for id in ps.ids().collect::<Vec<_>>() {
                for v in ps.value_mut(id).data_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
            let x: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = grad_check(&mut ps, 1e-5, |t, ps| {
                let xv = t.constant(Tensor::from_vec(5, 3, x.clone())?);
                let p = mlp.apply(t, ps, xv)?;
                t.mse(p, &y)
            })
            .unwrap();
            assert!(r.max_rel_error < 1e-6, "{r:?}");
        }
    }
}
