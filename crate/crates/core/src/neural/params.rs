use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub type ParamId = usize;

/// One trainable tensor with its Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub first_moment: Tensor,
    pub second_moment: Tensor,
}

/// Named parameters of one agent plus the optimizer step count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    index: BTreeMap<String, ParamId>,
    pub step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor under a unique name.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        let id = self.params.len();
        let (r, c) = value.shape();
        self.params.push(Param {
            name: name.clone(),
            value,
            first_moment: Tensor::zeros(r, c),
            second_moment: Tensor::zeros(r, c),
        });
        self.index.insert(name, id);
        id
    }

    /// Uniform(-bound, bound) initialisation.
    pub fn add_uniform<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, bound: f64, rng: &mut R) -> ParamId {
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
        self.add(name, Tensor::from_vec(rows, cols, data).expect("sized buffer"))
    }

    pub fn add_normal<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, std: f64, rng: &mut R) -> ParamId {
        let dist = Normal::new(0.0, std).expect("finite std");
        let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
        self.add(name, Tensor::from_vec(rows, cols, data).expect("sized buffer"))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id].value
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|id| self.value(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Overwrites values (and moments, when present) from a name-keyed map.
    /// Every parameter must be present with a matching shape.
    pub fn load(&mut self, tensors: &BTreeMap<String, Tensor>, prefix: &str) -> Result<()> {
        for p in &mut self.params {
            let key = format!("{prefix}{}", p.name);
            let t = tensors
                .get(&key)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {key}")))?;
            if t.shape() != p.value.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {key} has shape {:?}, expected {:?}",
                    t.shape(),
                    p.value.shape()
                )));
            }
            p.value = t.clone();
            for (suffix, slot) in [("#m", &mut p.first_moment), ("#v", &mut p.second_moment)] {
                if let Some(m) = tensors.get(&format!("{key}{suffix}")) {
                    if m.shape() != slot.shape() {
                        return Err(Error::Checkpoint(format!("moment {key}{suffix} has wrong shape")));
                    }
                    *slot = m.clone();
                }
            }
        }
        Ok(())
    }

    /// Values and Adam moments keyed as `prefix+name`, `...#m`, `...#v`.
    pub fn export(&self, prefix: &str, out: &mut BTreeMap<String, Tensor>) {
        for p in &self.params {
            let key = format!("{prefix}{}", p.name);
            out.insert(format!("{key}#m"), p.first_moment.clone());
            out.insert(format!("{key}#v"), p.second_moment.clone());
            out.insert(key, p.value.clone());
        }
    }
}

/// Gradient per parameter, indexed like the owning [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            tensors: store.iter().map(|p| Tensor::zeros(p.value.rows(), p.value.cols())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id]
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for x in t.data_mut() {
                *x *= factor;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data().iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}
