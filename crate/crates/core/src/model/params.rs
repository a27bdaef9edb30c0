use super::config::ModelConfig;
use crate::linking::rng_from_seed;
use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, NdFloat};
use num_traits::FromPrimitive;
use rand::Rng;

/// Float type usable for model math. f64 for gradient checks, f32 for
/// training speed.
pub trait Scalar: NdFloat + FromPrimitive {
    const DTYPE: &'static str;
    fn to_le_bytes(self) -> Vec<u8>;
    fn from_le_slice(bytes: &[u8]) -> Self;
    fn width() -> usize;
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";
    fn to_le_bytes(self) -> Vec<u8> {
        f32::to_le_bytes(self).to_vec()
    }
    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().unwrap())
    }
    fn width() -> usize {
        4
    }
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";
    fn to_le_bytes(self) -> Vec<u8> {
        f64::to_le_bytes(self).to_vec()
    }
    fn from_le_slice(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().unwrap())
    }
    fn width() -> usize {
        8
    }
}

/// One gated recurrence: weights over `[input, hidden]` producing the four
/// gates in order (input, forget, cell, output).
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm<F> {
    pub w: Array2<F>,
    pub b: Array1<F>,
}

impl<F: Scalar> Lstm<F> {
    fn new(input: usize, hidden: usize, init: &mut impl FnMut() -> F) -> Self {
        Lstm {
            w: Array2::from_shape_simple_fn((input + hidden, 4 * hidden), &mut *init),
            b: Array1::from_shape_simple_fn(4 * hidden, init),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len() / 4
    }
}

/// All trainable tensors. Shapes are determined solely by the config and
/// the two vocabulary sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<F> {
    pub src_embed: Array2<F>,
    pub tgt_embed: Array2<F>,
    /// Per layer: [forward, backward] direction weights.
    pub enc: Vec<[Lstm<F>; 2]>,
    pub dec: Lstm<F>,
    pub attn_query: Array2<F>,
    pub attn_key: Array2<F>,
    pub attn_score: Array1<F>,
    pub out_w: Array2<F>,
    pub out_b: Array1<F>,
}

impl<F: Scalar> Params<F> {
    /// Seeded uniform initialization in [-0.08, 0.08].
    pub fn init(cfg: &ModelConfig, src_vocab: usize, tgt_vocab: usize) -> Self {
        let mut rng = rng_from_seed(cfg.seed);
        let mut draw = move || F::from_f64(rng.gen_range(-0.08..0.08)).unwrap();
        let enc_out = 2 * cfg.enc_hidden_per_dir;
        let enc = (0..cfg.enc_layers)
            .map(|l| {
                let input = if l == 0 { cfg.embed_dim } else { enc_out };
                [
                    Lstm::new(input, cfg.enc_hidden_per_dir, &mut draw),
                    Lstm::new(input, cfg.enc_hidden_per_dir, &mut draw),
                ]
            })
            .collect();
        Params {
            src_embed: Array2::from_shape_simple_fn((src_vocab, cfg.embed_dim), &mut draw),
            tgt_embed: Array2::from_shape_simple_fn((tgt_vocab, cfg.embed_dim), &mut draw),
            enc,
            dec: Lstm::new(cfg.embed_dim, cfg.dec_hidden, &mut draw),
            attn_query: Array2::from_shape_simple_fn((cfg.dec_hidden, cfg.attn_dim), &mut draw),
            attn_key: Array2::from_shape_simple_fn((enc_out, cfg.attn_dim), &mut draw),
            attn_score: Array1::from_shape_simple_fn(cfg.attn_dim, &mut draw),
            out_w: Array2::from_shape_simple_fn((cfg.dec_hidden + enc_out, tgt_vocab), &mut draw),
            out_b: Array1::from_shape_simple_fn(tgt_vocab, &mut draw),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|_, mut a| a.fill(F::zero()));
        z
    }

    pub fn n_params(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, a| n += a.len());
        n
    }

    /// Visits every tensor in a fixed declared order.
    pub fn for_each(&self, mut f: impl FnMut(String, ArrayViewD<'_, F>)) {
        f("src_embed".into(), self.src_embed.view().into_dyn());
        f("tgt_embed".into(), self.tgt_embed.view().into_dyn());
        for (l, dirs) in self.enc.iter().enumerate() {
            for (d, name) in ["fwd", "bwd"].iter().enumerate() {
                f(format!("enc{l}_{name}_w"), dirs[d].w.view().into_dyn());
                f(format!("enc{l}_{name}_b"), dirs[d].b.view().into_dyn());
            }
        }
        f("dec_w".into(), self.dec.w.view().into_dyn());
        f("dec_b".into(), self.dec.b.view().into_dyn());
        f("attn_query".into(), self.attn_query.view().into_dyn());
        f("attn_key".into(), self.attn_key.view().into_dyn());
        f("attn_score".into(), self.attn_score.view().into_dyn());
        f("out_w".into(), self.out_w.view().into_dyn());
        f("out_b".into(), self.out_b.view().into_dyn());
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(String, ArrayViewMutD<'_, F>)) {
        f("src_embed".into(), self.src_embed.view_mut().into_dyn());
        f("tgt_embed".into(), self.tgt_embed.view_mut().into_dyn());
        for (l, dirs) in self.enc.iter_mut().enumerate() {
            for (d, name) in ["fwd", "bwd"].iter().enumerate() {
                f(format!("enc{l}_{name}_w"), dirs[d].w.view_mut().into_dyn());
                f(format!("enc{l}_{name}_b"), dirs[d].b.view_mut().into_dyn());
            }
        }
        f("dec_w".into(), self.dec.w.view_mut().into_dyn());
        f("dec_b".into(), self.dec.b.view_mut().into_dyn());
        f("attn_query".into(), self.attn_query.view_mut().into_dyn());
        f("attn_key".into(), self.attn_key.view_mut().into_dyn());
        f("attn_score".into(), self.attn_score.view_mut().into_dyn());
        f("out_w".into(), self.out_w.view_mut().into_dyn());
        f("out_b".into(), self.out_b.view_mut().into_dyn());
    }

    /// Global l2 norm across all tensors.
    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0f64;
        self.for_each(|_, a| {
            for &x in a.iter() {
                let x = x.to_f64().unwrap();
                acc += x * x;
            }
        });
        acc.sqrt()
    }

    pub fn scale(&mut self, factor: F) {
        self.for_each_mut(|_, mut a| a.mapv_inplace(|x| x * factor));
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|_, a| {
            if a.iter().any(|x| !x.is_finite()) {
                ok = false;
            }
        });
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape_sum(cfg: &ModelConfig, vs: usize, vt: usize) -> usize {
        let h = cfg.enc_hidden_per_dir;
        let eo = 2 * h;
        let d = cfg.dec_hidden;
        let mut n = vs * cfg.embed_dim + vt * cfg.embed_dim;
        for l in 0..cfg.enc_layers {
            let input = if l == 0 { cfg.embed_dim } else { eo };
            n += 2 * ((input + h) * 4 * h + 4 * h);
        }
        n += (cfg.embed_dim + d) * 4 * d + 4 * d;
        n += d * cfg.attn_dim + eo * cfg.attn_dim + cfg.attn_dim;
        n += (d + eo) * vt + vt;
        n
    }

    #[test]
    fn desk_count_matches_closed_form() {
        let cfg = ModelConfig::desk_default();
        let p: Params<f32> = Params::init(&cfg, 57, 10);
        assert_eq!(p.n_params(), shape_sum(&cfg, 57, 10));
    }

    #[test]
    fn paper_scale_count_near_published_total() {
        // SCAN vocabularies with 40 variants: 13 + 40 + 4 reserved source
        // tokens, 6 + 4 target tokens.
        let cfg = ModelConfig::paper_scale();
        let n = shape_sum(&cfg, 57, 10) as f64;
        let published = 5.29e6;
        assert!(
            (n - published).abs() / published < 0.05,
            "param count {n} deviates more than 5% from {published}"
        );
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let cfg = ModelConfig::tiny();
        let a: Params<f64> = Params::init(&cfg, 8, 8);
        let b: Params<f64> = Params::init(&cfg, 8, 8);
        assert_eq!(a, b);
        a.for_each(|_, t| {
            for &x in t.iter() {
                assert!(x.abs() <= 0.08);
            }
        });
    }
}
