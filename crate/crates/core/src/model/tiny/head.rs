use candle_core::Tensor;
use rand_chacha::ChaCha8Rng;

use super::nn::{linear, Params};
use crate::error::Result;

/// Two-layer perceptron over max-pooled encoder states, producing
/// (compositional, non-compositional) logits.
pub struct ClassifierHead;

impl ClassifierHead {
    pub const PREFIX: &'static str = "head.";

    pub fn init(params: &mut Params, d: usize, rng: &mut ChaCha8Rng) -> Result<()> {
        params.dense("head.w1", d, d, rng)?;
        params.constant("head.b1", &[d], 0.0)?;
        params.dense("head.w2", d, 2, rng)?;
        params.constant("head.b2", &[2], 0.0)
    }

    pub fn names() -> Vec<String> {
        ["head.w1", "head.b1", "head.w2", "head.b2"].map(String::from).to_vec()
    }

    /// `hidden` is `[seq, d]`; returns `[1, 2]`.
    pub fn forward(params: &Params, hidden: &Tensor) -> Result<Tensor> {
        let pooled = hidden.max_keepdim(0)?;
        let h = linear(&pooled, params.get("head.w1"), Some(params.get("head.b1")))?.tanh()?;
        linear(&h, params.get("head.w2"), Some(params.get("head.b2")))
    }

    pub fn logits(params: &Params, hidden: &Tensor) -> Result<[f32; 2]> {
        let v = Self::forward(params, hidden)?.squeeze(0)?.to_vec1::<f32>()?;
        Ok([v[0], v[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny::nn::{random_permutation, seed_rng};
    use candle_core::Device;

    #[test]
    fn max_pooling_ignores_position_order() {
        let mut rng = seed_rng(3);
        let mut params = Params::default();
        ClassifierHead::init(&mut params, 8, &mut rng).unwrap();
        let hidden = Tensor::randn(0f32, 1.0, (7, 8), &Device::Cpu).unwrap();
        let base = ClassifierHead::logits(&params, &hidden).unwrap();
        assert!(base.iter().all(|v| v.is_finite()));
        for _ in 0..5 {
            let perm: Vec<u32> = random_permutation(7, &mut rng).into_iter().map(|i| i as u32).collect();
            let idx = Tensor::new(perm.as_slice(), &Device::Cpu).unwrap();
            let shuffled = hidden.index_select(&idx, 0).unwrap();
            assert_eq!(ClassifierHead::logits(&params, &shuffled).unwrap(), base);
        }
    }
}
