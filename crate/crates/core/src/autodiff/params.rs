use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Named trainable tensors with one gradient buffer each.
#[derive(Debug, Clone, Default)]
pub struct ParameterSet {
    params: Vec<Parameter>,
    by_name: HashMap<String, ParamId>,
}

/// Serializable form of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedParam {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter `{name}`")));
        }
        let id = ParamId(self.params.len());
        let (r, c) = value.shape();
        self.params.push(Parameter {
            name: name.clone(),
            value,
            grad: Tensor::zeros(r, c),
        });
        self.by_name.insert(name, id);
        Ok(id)
    }

    /// Uniform Glorot initialization for a `fan_in x fan_out` weight.
    pub fn add_weight(&mut self, name: impl Into<String>, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Result<ParamId> {
        let a = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.random_range(-a..=a)).collect();
        self.add(name, Tensor::from_vec(fan_in, fan_out, data)?)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> Result<ParamId> {
        self.add(name, Tensor::zeros(rows, cols))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].grad
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn save(&self) -> Vec<SavedParam> {
        self.params
            .iter()
            .map(|p| SavedParam {
                name: p.name.clone(),
                shape: [p.value.rows(), p.value.cols()],
                values: p.value.data().to_vec(),
            })
            .collect()
    }

    /// Overwrite values from a saved list. Names and shapes must match.
    pub fn load(&mut self, saved: &[SavedParam]) -> Result<()> {
        if saved.len() != self.params.len() {
            return Err(Error::SchemaMismatch(format!(
                "checkpoint has {} parameters, model has {}",
                saved.len(),
                self.params.len()
            )));
        }
        for (p, s) in self.params.iter_mut().zip(saved) {
            if p.name != s.name || [p.value.rows(), p.value.cols()] != s.shape {
                return Err(Error::SchemaMismatch(format!(
                    "parameter `{}` {:?} does not match saved `{}` {:?}",
                    p.name,
                    p.value.shape(),
                    s.name,
                    s.shape
                )));
            }
            p.value = Tensor::from_vec(s.shape[0], s.shape[1], s.values.clone())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicate_names_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParameterSet::new();
        let w = ps.add_weight("w", 3, 2, &mut rng).unwrap();
        assert!(ps.add_zeros("w", 1, 1).is_err());
        let saved = ps.save();
        let mut other = ps.clone();
        other.value_mut(w).fill(0.0);
        other.load(&saved).unwrap();
        assert_eq!(other.value(w), ps.value(w));
        let mut wrong = ParameterSet::new();
        wrong.add_zeros("w", 2, 3).unwrap();
        assert!(matches!(wrong.load(&saved), Err(Error::SchemaMismatch(_))));
    }
}
