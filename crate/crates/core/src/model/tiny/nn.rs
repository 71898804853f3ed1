//! Parameter store and the handful of layers the tiny model needs.

use std::collections::BTreeMap;
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Named trainable tensors, ordered by name for deterministic iteration.
#[derive(Default)]
pub struct Params {
    vars: BTreeMap<String, Var>,
}

impl Params {
    pub fn get(&self, name: &str) -> &Tensor {
        self.vars.get(name).unwrap_or_else(|| panic!("parameter {name} was never created")).as_tensor()
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    fn insert(&mut self, name: &str, data: Vec<f32>, shape: &[usize]) -> Result<()> {
        let t = Tensor::from_vec(data, shape, &Device::Cpu)?;
        self.vars.insert(name.to_owned(), Var::from_tensor(&t)?);
        Ok(())
    }

    pub fn normal(&mut self, name: &str, shape: &[usize], std: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        let dist = Normal::new(0.0f64, std).map_err(|e| Error::Backbone(e.to_string()))?;
        let n = shape.iter().product();
        let data = (0..n).map(|_| dist.sample(rng) as f32).collect();
        self.insert(name, data, shape)
    }

    pub fn constant(&mut self, name: &str, shape: &[usize], value: f32) -> Result<()> {
        self.insert(name, vec![value; shape.iter().product()], shape)
    }

    /// Weight matrix `[fan_in, fan_out]` scaled by `1/sqrt(fan_in)`.
    pub fn dense(&mut self, name: &str, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Result<()> {
        self.normal(name, &[fan_in, fan_out], 1.0 / (fan_in as f64).sqrt(), rng)
    }

    pub fn layer_norm(&mut self, prefix: &str, d: usize) -> Result<()> {
        self.constant(&format!("{prefix}.g"), &[d], 1.0)?;
        self.constant(&format!("{prefix}.b"), &[d], 0.0)
    }

    pub fn save(&self, path: &Path, filter: impl Fn(&str) -> bool) -> Result<()> {
        let map: std::collections::HashMap<String, Tensor> = self
            .vars
            .iter()
            .filter(|(k, _)| filter(k))
            .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
            .collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    pub fn load_into(&mut self, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(Error::Backbone(format!("missing weights file {}", path.display())));
        }
        for (name, t) in candle_core::safetensors::load(path, &Device::Cpu)? {
            self.vars.insert(name, Var::from_tensor(&t.to_dtype(DType::F32)?)?);
        }
        Ok(())
    }

    pub fn require(&self, names: &[String]) -> Result<()> {
        match names.iter().find(|n| !self.vars.contains_key(*n)) {
            Some(n) => Err(Error::Backbone(format!("checkpoint lacks parameter {n}"))),
            None => Ok(()),
        }
    }
}

pub fn linear(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    let y = x.matmul(w)?;
    Ok(match b {
        Some(b) => y.broadcast_add(b)?,
        None => y,
    })
}

pub fn layer_norm(x: &Tensor, g: &Tensor, b: &Tensor) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let xc = x.broadcast_sub(&mean)?;
    let var = xc.sqr()?.mean_keepdim(D::Minus1)?;
    let xn = xc.broadcast_div(&(var + 1e-5)?.sqrt()?)?;
    Ok(xn.broadcast_mul(g)?.broadcast_add(b)?)
}

/// `log(sum(exp(x)))` over the last dimension.
pub fn log_sum_exp(x: &Tensor) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    let s = x.broadcast_sub(&m)?.exp()?.sum_keepdim(D::Minus1)?.log()?;
    Ok(s.broadcast_add(&m)?.squeeze(D::Minus1)?)
}

/// Additive causal mask `[t, t]`.
pub fn causal_mask(t: usize) -> Result<Tensor> {
    let data: Vec<f32> = (0..t * t).map(|i| if i % t > i / t { -1e9 } else { 0.0 }).collect();
    Ok(Tensor::from_vec(data, (t, t), &Device::Cpu)?)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn seed_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random permutation of `0..n`, for tests.
pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}
