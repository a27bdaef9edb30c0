//! Batched greedy decoding.

use super::config::ModelConfig;
use super::net::{lstm_step, Batch};
use super::params::{Params, Scalar};
use super::vocab::{Vocab, EOS, PAD, SOS};
use crate::token::Token;
use ndarray::{concatenate, s, Array2, Axis};

/// Greedy argmax decode for a batch of sources. Each output stops at the
/// first EOS or at `max_len` tokens, whichever comes first.
pub fn greedy_decode<F: Scalar>(
    params: &Params<F>,
    cfg: &ModelConfig,
    batch: &Batch,
    tgt_vocab: &Vocab,
    max_len: usize,
) -> Vec<Vec<Token>> {
    let b = batch.batch_size();
    let s_len = batch.src.ncols();
    let enc_out = 2 * cfg.enc_hidden_per_dir;
    let hid = cfg.enc_hidden_per_dir;

    let src_masks: Vec<Array2<F>> = (0..s_len)
        .map(|t| {
            Array2::from_shape_fn((b, 1), |(i, _)| {
                if t < batch.src_len[i] {
                    F::one()
                } else {
                    F::zero()
                }
            })
        })
        .collect();

    let mut xs: Vec<Array2<F>> = (0..s_len)
        .map(|t| {
            let mut x = Array2::zeros((b, cfg.embed_dim));
            for i in 0..b {
                x.row_mut(i).assign(&params.src_embed.row(batch.src[[i, t]]));
            }
            x
        })
        .collect();

    let mut final_h = Array2::zeros((b, 2 * hid));
    let mut final_c = Array2::zeros((b, 2 * hid));
    for layer in &params.enc {
        let mut outs: Vec<Array2<F>> = Vec::with_capacity(s_len);
        for dir in 0..2 {
            let lstm = &layer[dir];
            let mut h = Array2::zeros((b, hid));
            let mut c = Array2::zeros((b, hid));
            let order: Vec<usize> = if dir == 1 {
                (0..s_len).rev().collect()
            } else {
                (0..s_len).collect()
            };
            let mut dir_outs: Vec<Array2<F>> = vec![Array2::zeros((b, hid)); s_len];
            for &t in &order {
                let (h2, c2, _) = lstm_step(lstm, &xs[t], &h, &c, Some(&src_masks[t]));
                h = h2;
                c = c2;
                dir_outs[t] = h.clone();
            }
            final_h
                .slice_mut(s![.., dir * hid..(dir + 1) * hid])
                .assign(&h);
            final_c
                .slice_mut(s![.., dir * hid..(dir + 1) * hid])
                .assign(&c);
            if dir == 0 {
                outs = dir_outs;
            } else {
                outs = outs
                    .into_iter()
                    .zip(dir_outs)
                    .map(|(f, bk)| concatenate![Axis(1), f.view(), bk.view()])
                    .collect();
            }
        }
        xs = outs;
    }
    let henc = xs;
    let keys: Vec<Array2<F>> = henc.iter().map(|h| h.dot(&params.attn_key)).collect();

    let mut h = final_h;
    let mut c = final_c;
    let neg_big = F::from_f64(-1e9).unwrap();
    let mut toks = vec![SOS; b];
    let mut done = vec![false; b];
    let mut outputs: Vec<Vec<usize>> = vec![Vec::new(); b];

    for _step in 0..max_len {
        let mut x = Array2::zeros((b, cfg.embed_dim));
        for i in 0..b {
            x.row_mut(i).assign(&params.tgt_embed.row(toks[i]));
        }
        let (h2, c2, _) = lstm_step(&params.dec, &x, &h, &c, None);
        h = h2;
        c = c2;
        let q = h.dot(&params.attn_query);
        let mut scores = Array2::zeros((b, s_len));
        for (si, key) in keys.iter().enumerate() {
            let e = ((&q + key).mapv(F::tanh) * &params.attn_score).sum_axis(Axis(1));
            for i in 0..b {
                scores[[i, si]] = if si < batch.src_len[i] { e[i] } else { neg_big };
            }
        }
        for mut row in scores.rows_mut() {
            let mx = row.iter().cloned().fold(F::neg_infinity(), F::max);
            row.mapv_inplace(|v| (v - mx).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        let mut ctx: Array2<F> = Array2::zeros((b, enc_out));
        for (si, hs) in henc.iter().enumerate() {
            ctx += &(hs * &scores.slice(s![.., si..si + 1]));
        }
        let cat = concatenate![Axis(1), h.view(), ctx.view()];
        let mut logits = cat.dot(&params.out_w);
        logits += &params.out_b;
        for i in 0..b {
            if done[i] {
                toks[i] = PAD;
                continue;
            }
            let row = logits.row(i);
            let mut best = 0;
            let mut best_v = row[0];
            for (j, &v) in row.iter().enumerate() {
                if v > best_v {
                    best = j;
                    best_v = v;
                }
            }
            if best == EOS {
                done[i] = true;
            } else {
                outputs[i].push(best);
            }
            toks[i] = best;
        }
        if done.iter().all(|&d| d) {
            break;
        }
    }
    outputs
        .into_iter()
        .map(|ids| tgt_vocab.decode(&ids))
        .collect()
}
