//! Encoder-decoder transformer with hand-written backpropagation.
//!
//! Pre-norm residual blocks: `x + Attn(LN(x))`, `x + FFN(LN(x))`, with a
//! final layer norm on each stack. Token embeddings are shared between
//! encoder input, decoder input and the output projection, scaled by
//! `sqrt(d_model)` on input and summed with fixed sinusoidal positions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::tensor::Mat;
use super::vocab::PAD;
use super::TinyError;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Mat,
    pub bias: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub wq: Mat,
    pub wk: Mat,
    pub wv: Mat,
    pub wo: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub norm1: LayerNorm,
    pub attn: Attention,
    pub norm2: LayerNorm,
    pub ffn: FeedForward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLayer {
    pub norm1: LayerNorm,
    pub self_attn: Attention,
    pub norm2: LayerNorm,
    pub cross_attn: Attention,
    pub norm3: LayerNorm,
    pub ffn: FeedForward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// vocab × d_model; also the output projection.
    pub embedding: Mat,
    pub encoder: Vec<EncoderLayer>,
    pub encoder_norm: LayerNorm,
    pub decoder: Vec<DecoderLayer>,
    pub decoder_norm: LayerNorm,
}

impl LayerNorm {
    fn new(d: usize) -> Self {
        Self {
            gain: Mat::filled(1, d, 1.0),
            bias: Mat::zeros(1, d),
        }
    }
}

impl Attention {
    fn init<R: Rng>(d: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            wq: Mat::uniform(d, d, bound, rng),
            wk: Mat::uniform(d, d, bound, rng),
            wv: Mat::uniform(d, d, bound, rng),
            wo: Mat::uniform(d, d, bound, rng),
        }
    }
}

impl FeedForward {
    fn init<R: Rng>(d: usize, f: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            w1: Mat::uniform(d, f, bound, rng),
            b1: Mat::uniform(1, f, bound, rng),
            w2: Mat::uniform(f, d, bound, rng),
            b2: Mat::uniform(1, d, bound, rng),
        }
    }
}

fn visit_ln<'a>(prefix: &str, ln: &'a LayerNorm, f: &mut dyn FnMut(String, &'a Mat)) {
    f(format!("{prefix}.gain"), &ln.gain);
    f(format!("{prefix}.bias"), &ln.bias);
}

fn visit_attn<'a>(prefix: &str, a: &'a Attention, f: &mut dyn FnMut(String, &'a Mat)) {
    f(format!("{prefix}.wq"), &a.wq);
    f(format!("{prefix}.wk"), &a.wk);
    f(format!("{prefix}.wv"), &a.wv);
    f(format!("{prefix}.wo"), &a.wo);
}

fn visit_ffn<'a>(prefix: &str, p: &'a FeedForward, f: &mut dyn FnMut(String, &'a Mat)) {
    f(format!("{prefix}.w1"), &p.w1);
    f(format!("{prefix}.b1"), &p.b1);
    f(format!("{prefix}.w2"), &p.w2);
    f(format!("{prefix}.b2"), &p.b2);
}

impl ModelParams {
    /// Weights and biases uniform in ±1/sqrt(d_model); layer norms start
    /// at gain 1, bias 0.
    pub fn init<R: Rng>(config: &ModelConfig, vocab_size: usize, rng: &mut R) -> ModelParams {
        let d = config.d_model;
        let bound = 1.0 / (d as f64).sqrt();
        let embedding = Mat::uniform(vocab_size, d, bound, rng);
        let encoder = (0..config.encoder_layers)
            .map(|_| EncoderLayer {
                norm1: LayerNorm::new(d),
                attn: Attention::init(d, bound, rng),
                norm2: LayerNorm::new(d),
                ffn: FeedForward::init(d, config.ffn_dim, bound, rng),
            })
            .collect();
        let decoder = (0..config.decoder_layers)
            .map(|_| DecoderLayer {
                norm1: LayerNorm::new(d),
                self_attn: Attention::init(d, bound, rng),
                norm2: LayerNorm::new(d),
                cross_attn: Attention::init(d, bound, rng),
                norm3: LayerNorm::new(d),
                ffn: FeedForward::init(d, config.ffn_dim, bound, rng),
            })
            .collect();
        ModelParams {
            embedding,
            encoder,
            encoder_norm: LayerNorm::new(d),
            decoder,
            decoder_norm: LayerNorm::new(d),
        }
    }

    /// Visits every tensor in the fixed serialization order.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(String, &'a Mat)) {
        f("embedding".into(), &self.embedding);
        for (i, l) in self.encoder.iter().enumerate() {
            let p = format!("encoder.{i}");
            visit_ln(&format!("{p}.norm1"), &l.norm1, f);
            visit_attn(&format!("{p}.attn"), &l.attn, f);
            visit_ln(&format!("{p}.norm2"), &l.norm2, f);
            visit_ffn(&format!("{p}.ffn"), &l.ffn, f);
        }
        visit_ln("encoder_norm", &self.encoder_norm, f);
        for (i, l) in self.decoder.iter().enumerate() {
            let p = format!("decoder.{i}");
            visit_ln(&format!("{p}.norm1"), &l.norm1, f);
            visit_attn(&format!("{p}.self_attn"), &l.self_attn, f);
            visit_ln(&format!("{p}.norm2"), &l.norm2, f);
            visit_attn(&format!("{p}.cross_attn"), &l.cross_attn, f);
            visit_ln(&format!("{p}.norm3"), &l.norm3, f);
            visit_ffn(&format!("{p}.ffn"), &l.ffn, f);
        }
        visit_ln("decoder_norm", &self.decoder_norm, f);
    }

    pub fn named_tensors(&self) -> Vec<(String, &Mat)> {
        let mut out = Vec::new();
        self.visit(&mut |name, m| out.push((name, m)));
        out
    }

    /// Mutable tensors in the same order as [`ModelParams::visit`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Mat> {
        fn ln(l: &mut LayerNorm) -> [&mut Mat; 2] {
            [&mut l.gain, &mut l.bias]
        }
        fn attn(a: &mut Attention) -> [&mut Mat; 4] {
            [&mut a.wq, &mut a.wk, &mut a.wv, &mut a.wo]
        }
        fn ffn(p: &mut FeedForward) -> [&mut Mat; 4] {
            [&mut p.w1, &mut p.b1, &mut p.w2, &mut p.b2]
        }
        let mut out: Vec<&mut Mat> = vec![&mut self.embedding];
        for l in &mut self.encoder {
            out.extend(ln(&mut l.norm1));
            out.extend(attn(&mut l.attn));
            out.extend(ln(&mut l.norm2));
            out.extend(ffn(&mut l.ffn));
        }
        out.extend(ln(&mut self.encoder_norm));
        for l in &mut self.decoder {
            out.extend(ln(&mut l.norm1));
            out.extend(attn(&mut l.self_attn));
            out.extend(ln(&mut l.norm2));
            out.extend(attn(&mut l.cross_attn));
            out.extend(ln(&mut l.norm3));
            out.extend(ffn(&mut l.ffn));
        }
        out.extend(ln(&mut self.decoder_norm));
        out
    }

    pub fn zeros_like(&self) -> ModelParams {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, m)| m.all_finite())
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows
    }

    /// Checks tensor shapes against `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<(), TinyError> {
        let expected = ModelParams::init(config, self.vocab_size(), &mut ChaCha8Rng::seed_from_u64(0));
        let ours = self.named_tensors();
        let theirs = expected.named_tensors();
        if ours.len() != theirs.len() {
            return Err(TinyError::Format(format!(
                "expected {} tensors, found {}",
                theirs.len(),
                ours.len()
            )));
        }
        for ((n1, a), (n2, b)) in ours.iter().zip(&theirs) {
            if n1 != n2 || a.rows != b.rows || a.cols != b.cols {
                return Err(TinyError::Format(format!(
                    "tensor {n1} is {}x{}, expected {n2} {}x{}",
                    a.rows, a.cols, b.rows, b.cols
                )));
            }
        }
        Ok(())
    }
}

/// Boolean attention mask; `true` means the query may attend to the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub rows: usize,
    pub cols: usize,
    pub allowed: Vec<bool>,
}

impl Mask {
    pub fn full(rows: usize, cols: usize) -> Mask {
        Mask {
            rows,
            cols,
            allowed: vec![true; rows * cols],
        }
    }

    /// Lower-triangular: position i sees keys 0..=i.
    pub fn causal(n: usize) -> Mask {
        let mut m = Mask::full(n, n);
        for i in 0..n {
            for j in i + 1..n {
                m.allowed[i * n + j] = false;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.allowed[r * self.cols + c]
    }
}

/// Row-wise softmax of `scores/sqrt(d)` with masked entries at -inf.
/// A fully masked row gets all-zero weights.
fn masked_softmax(scores: &Mat, mask: Option<&Mask>) -> Mat {
    let mut p = scores.clone();
    for r in 0..p.rows {
        let row = p.row_mut(r);
        let mut max = f64::NEG_INFINITY;
        for (c, v) in row.iter_mut().enumerate() {
            if mask.is_some_and(|m| !m.get(r, c)) {
                *v = f64::NEG_INFINITY;
            } else if *v > max {
                max = *v;
            }
        }
        if max == f64::NEG_INFINITY {
            row.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    p
}

/// Scaled dot-product attention for one head.
/// Returns the output and the attention weights.
pub fn attention_weights(queries: &Mat, keys: &Mat, values: &Mat, mask: Option<&Mask>) -> Result<(Mat, Mat), TinyError> {
    if queries.cols != keys.cols {
        return Err(TinyError::Shape(format!(
            "query width {} != key width {}",
            queries.cols, keys.cols
        )));
    }
    if keys.rows != values.rows {
        return Err(TinyError::Shape(format!("{} keys but {} values", keys.rows, values.rows)));
    }
    if let Some(m) = mask {
        if (m.rows, m.cols) != (queries.rows, keys.rows) {
            return Err(TinyError::Shape(format!(
                "mask is {}x{}, scores are {}x{}",
                m.rows, m.cols, queries.rows, keys.rows
            )));
        }
    }
    let mut scores = queries.matmul_t(keys);
    scores.scale(1.0 / (queries.cols as f64).sqrt());
    let probs = masked_softmax(&scores, mask);
    Ok((probs.matmul(values), probs))
}

/// `softmax(mask(Q·Kᵀ/sqrt(d))) · V`.
pub fn attention(queries: &Mat, keys: &Mat, values: &Mat, mask: &Mask) -> Result<Mat, TinyError> {
    attention_weights(queries, keys, values, Some(mask)).map(|(out, _)| out)
}

pub fn sinusoidal_positions(len: usize, d: usize) -> Mat {
    let mut pe = Mat::zeros(len, d);
    for pos in 0..len {
        for i in 0..d {
            let pair = (i / 2) as f64;
            let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
            *pe.at_mut(pos, i) = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}

// ---- layer forward/backward ------------------------------------------------

struct LnCache {
    xhat: Mat,
    inv_std: Vec<f64>,
}

fn ln_forward(p: &LayerNorm, x: &Mat) -> (Mat, LnCache) {
    let d = x.cols;
    let mut xhat = Mat::zeros(x.rows, d);
    let mut inv_std = Vec::with_capacity(x.rows);
    let mut y = Mat::zeros(x.rows, d);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        inv_std.push(is);
        for c in 0..d {
            let h = (row[c] - mean) * is;
            *xhat.at_mut(r, c) = h;
            *y.at_mut(r, c) = h * p.gain.data[c] + p.bias.data[c];
        }
    }
    (y, LnCache { xhat, inv_std })
}

fn ln_backward(p: &LayerNorm, g: &mut LayerNorm, c: &LnCache, dy: &Mat) -> Mat {
    let d = dy.cols;
    let mut dx = Mat::zeros(dy.rows, d);
    for r in 0..dy.rows {
        let mut sum_dh = 0.0;
        let mut sum_dh_h = 0.0;
        let mut dh = vec![0.0; d];
        for k in 0..d {
            let dyv = dy.at(r, k);
            let h = c.xhat.at(r, k);
            g.gain.data[k] += dyv * h;
            g.bias.data[k] += dyv;
            dh[k] = dyv * p.gain.data[k];
            sum_dh += dh[k];
            sum_dh_h += dh[k] * h;
        }
        let is = c.inv_std[r];
        for k in 0..d {
            *dx.at_mut(r, k) = is / d as f64 * (d as f64 * dh[k] - sum_dh - c.xhat.at(r, k) * sum_dh_h);
        }
    }
    dx
}

struct AttnCache {
    xq: Mat,
    xkv: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    probs: Vec<Mat>,
    concat: Mat,
}

fn attn_forward(p: &Attention, xq: &Mat, xkv: &Mat, mask: Option<&Mask>, heads: usize) -> (Mat, AttnCache) {
    let q = xq.matmul(&p.wq);
    let k = xkv.matmul(&p.wk);
    let v = xkv.matmul(&p.wv);
    let d = q.cols;
    let dh = d / heads;
    let mut concat = Mat::zeros(xq.rows, d);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let (out, pr) = attention_weights(&q.cols_slice(h * dh, dh), &k.cols_slice(h * dh, dh), &v.cols_slice(h * dh, dh), mask)
            .expect("shapes fixed by the parameters");
        concat.set_cols(h * dh, &out);
        probs.push(pr);
    }
    let out = concat.matmul(&p.wo);
    (
        out,
        AttnCache {
            xq: xq.clone(),
            xkv: xkv.clone(),
            q,
            k,
            v,
            probs,
            concat,
        },
    )
}

/// Returns (d xq, d xkv).
fn attn_backward(p: &Attention, g: &mut Attention, c: &AttnCache, dout: &Mat, heads: usize) -> (Mat, Mat) {
    g.wo.add_assign(&c.concat.t_matmul(dout));
    let dconcat = dout.matmul_t(&p.wo);
    let d = c.q.cols;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut dq = Mat::zeros(c.q.rows, d);
    let mut dk = Mat::zeros(c.k.rows, d);
    let mut dv = Mat::zeros(c.v.rows, d);
    for h in 0..heads {
        let qh = c.q.cols_slice(h * dh, dh);
        let kh = c.k.cols_slice(h * dh, dh);
        let vh = c.v.cols_slice(h * dh, dh);
        let doh = dconcat.cols_slice(h * dh, dh);
        let pr = &c.probs[h];
        dv.set_cols(h * dh, &pr.t_matmul(&doh));
        let dp = doh.matmul_t(&vh);
        let mut ds = Mat::zeros(pr.rows, pr.cols);
        for r in 0..pr.rows {
            let dot: f64 = pr.row(r).iter().zip(dp.row(r)).map(|(a, b)| a * b).sum();
            for col in 0..pr.cols {
                *ds.at_mut(r, col) = pr.at(r, col) * (dp.at(r, col) - dot) * scale;
            }
        }
        dq.set_cols(h * dh, &ds.matmul(&kh));
        dk.set_cols(h * dh, &ds.t_matmul(&qh));
    }
    g.wq.add_assign(&c.xq.t_matmul(&dq));
    g.wk.add_assign(&c.xkv.t_matmul(&dk));
    g.wv.add_assign(&c.xkv.t_matmul(&dv));
    let dxq = dq.matmul_t(&p.wq);
    let mut dxkv = dk.matmul_t(&p.wk);
    dxkv.add_assign(&dv.matmul_t(&p.wv));
    (dxq, dxkv)
}

struct FfnCache {
    x: Mat,
    pre: Mat,
    h: Mat,
}

fn ffn_forward(p: &FeedForward, x: &Mat) -> (Mat, FfnCache) {
    let mut pre = x.matmul(&p.w1);
    pre.add_row_assign(&p.b1);
    let mut h = pre.clone();
    h.data.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut out = h.matmul(&p.w2);
    out.add_row_assign(&p.b2);
    (out, FfnCache { x: x.clone(), pre, h })
}

fn ffn_backward(p: &FeedForward, g: &mut FeedForward, c: &FfnCache, dout: &Mat) -> Mat {
    g.w2.add_assign(&c.h.t_matmul(dout));
    g.b2.add_assign(&dout.sum_rows());
    let mut dpre = dout.matmul_t(&p.w2);
    for (dv, pv) in dpre.data.iter_mut().zip(&c.pre.data) {
        if *pv <= 0.0 {
            *dv = 0.0;
        }
    }
    g.w1.add_assign(&c.x.t_matmul(&dpre));
    g.b1.add_assign(&dpre.sum_rows());
    dpre.matmul_t(&p.w1)
}

/// Inverted-dropout multipliers, or `None` when dropout is off.
fn dropout_mask<R: Rng>(rows: usize, cols: usize, p: f64, rng: Option<&mut R>) -> Option<Mat> {
    let rng = rng?;
    if p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    let data = (0..rows * cols).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
    Some(Mat::from_vec(rows, cols, data))
}

fn apply_mask(x: &mut Mat, mask: &Option<Mat>) {
    if let Some(m) = mask {
        for (v, k) in x.data.iter_mut().zip(&m.data) {
            *v *= k;
        }
    }
}

struct EncLayerCache {
    ln1: LnCache,
    attn: AttnCache,
    drop1: Option<Mat>,
    ln2: LnCache,
    ffn: FfnCache,
    drop2: Option<Mat>,
}

struct DecLayerCache {
    ln1: LnCache,
    self_attn: AttnCache,
    drop1: Option<Mat>,
    ln2: LnCache,
    cross_attn: AttnCache,
    drop2: Option<Mat>,
    ln3: LnCache,
    ffn: FfnCache,
    drop3: Option<Mat>,
}

/// Everything needed to backpropagate one (source, target) example.
pub struct ForwardCache {
    source: Vec<usize>,
    target: Vec<usize>,
    enc_layers: Vec<EncLayerCache>,
    enc_norm: LnCache,
    dec_layers: Vec<DecLayerCache>,
    dec_norm: LnCache,
    dec_out: Mat,
}

fn embed(params: &ModelParams, ids: &[usize]) -> Mat {
    let d = params.embedding.cols;
    let scale = (d as f64).sqrt();
    let pe = sinusoidal_positions(ids.len(), d);
    let mut x = Mat::zeros(ids.len(), d);
    for (i, &id) in ids.iter().enumerate() {
        let e = params.embedding.row(id);
        for (k, v) in x.row_mut(i).iter_mut().enumerate() {
            *v = e[k] * scale + pe.at(i, k);
        }
    }
    x
}

fn check_ids(config: &ModelConfig, vocab_size: usize, ids: &[usize], what: &str) -> Result<(), TinyError> {
    if ids.is_empty() {
        return Err(TinyError::Shape(format!("empty {what} sequence")));
    }
    if ids.len() > config.max_len {
        return Err(TinyError::TooLong {
            len: ids.len(),
            max_len: config.max_len,
        });
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= vocab_size) {
        return Err(TinyError::IdOutOfRange { id: bad, vocab_size });
    }
    Ok(())
}

fn encode_impl<R: Rng>(params: &ModelParams, config: &ModelConfig, source: &[usize], mut rng: Option<&mut R>) -> (Mat, Vec<EncLayerCache>, LnCache) {
    let mut x = embed(params, source);
    let mut caches = Vec::with_capacity(params.encoder.len());
    for layer in &params.encoder {
        let (a, ln1) = ln_forward(&layer.norm1, &x);
        let (mut att, attn) = attn_forward(&layer.attn, &a, &a, None, config.heads);
        let drop1 = dropout_mask(att.rows, att.cols, config.dropout, rng.as_deref_mut());
        apply_mask(&mut att, &drop1);
        x.add_assign(&att);
        let (b, ln2) = ln_forward(&layer.norm2, &x);
        let (mut f, ffn) = ffn_forward(&layer.ffn, &b);
        let drop2 = dropout_mask(f.rows, f.cols, config.dropout, rng.as_deref_mut());
        apply_mask(&mut f, &drop2);
        x.add_assign(&f);
        caches.push(EncLayerCache {
            ln1,
            attn,
            drop1,
            ln2,
            ffn,
            drop2,
        });
    }
    let (out, norm) = ln_forward(&params.encoder_norm, &x);
    (out, caches, norm)
}

fn decode_impl<R: Rng>(
    params: &ModelParams,
    config: &ModelConfig,
    memory: &Mat,
    target: &[usize],
    mut rng: Option<&mut R>,
) -> (Mat, Vec<DecLayerCache>, LnCache) {
    let mut y = embed(params, target);
    let causal = Mask::causal(target.len());
    let mut caches = Vec::with_capacity(params.decoder.len());
    for layer in &params.decoder {
        let (a, ln1) = ln_forward(&layer.norm1, &y);
        let (mut sa, self_attn) = attn_forward(&layer.self_attn, &a, &a, Some(&causal), config.heads);
        let drop1 = dropout_mask(sa.rows, sa.cols, config.dropout, rng.as_deref_mut());
        apply_mask(&mut sa, &drop1);
        y.add_assign(&sa);
        let (b, ln2) = ln_forward(&layer.norm2, &y);
        let (mut ca, cross_attn) = attn_forward(&layer.cross_attn, &b, memory, None, config.heads);
        let drop2 = dropout_mask(ca.rows, ca.cols, config.dropout, rng.as_deref_mut());
        apply_mask(&mut ca, &drop2);
        y.add_assign(&ca);
        let (c, ln3) = ln_forward(&layer.norm3, &y);
        let (mut f, ffn) = ffn_forward(&layer.ffn, &c);
        let drop3 = dropout_mask(f.rows, f.cols, config.dropout, rng.as_deref_mut());
        apply_mask(&mut f, &drop3);
        y.add_assign(&f);
        caches.push(DecLayerCache {
            ln1,
            self_attn,
            drop1,
            ln2,
            cross_attn,
            drop2,
            ln3,
            ffn,
            drop3,
        });
    }
    let (out, norm) = ln_forward(&params.decoder_norm, &y);
    (out, caches, norm)
}

/// Encoder states for `source` (source_len × d_model), inference mode.
pub fn encode(params: &ModelParams, config: &ModelConfig, source: &[usize]) -> Result<Mat, TinyError> {
    check_ids(config, params.vocab_size(), source, "source")?;
    Ok(encode_impl::<ChaCha8Rng>(params, config, source, None).0)
}

/// Logits (target_len × vocab) given precomputed encoder states.
pub fn decode_logits(params: &ModelParams, config: &ModelConfig, memory: &Mat, target: &[usize]) -> Result<Mat, TinyError> {
    check_ids(config, params.vocab_size(), target, "target")?;
    let (h, _, _) = decode_impl::<ChaCha8Rng>(params, config, memory, target, None);
    Ok(h.matmul_t(&params.embedding))
}

/// Logits for every target position (target_len × vocab), inference mode.
pub fn forward(params: &ModelParams, config: &ModelConfig, source: &[usize], target: &[usize]) -> Result<Mat, TinyError> {
    let memory = encode(params, config, source)?;
    decode_logits(params, config, &memory, target)
}

/// Forward pass that keeps what backpropagation needs. Passing an RNG
/// enables dropout.
pub fn forward_train<R: Rng>(
    params: &ModelParams,
    config: &ModelConfig,
    source: &[usize],
    target: &[usize],
    mut rng: Option<&mut R>,
) -> Result<(Mat, ForwardCache), TinyError> {
    check_ids(config, params.vocab_size(), source, "source")?;
    check_ids(config, params.vocab_size(), target, "target")?;
    let (memory, enc_layers, enc_norm) = encode_impl(params, config, source, rng.as_deref_mut());
    let (dec_out, dec_layers, dec_norm) = decode_impl(params, config, &memory, target, rng);
    let logits = dec_out.matmul_t(&params.embedding);
    Ok((
        logits,
        ForwardCache {
            source: source.to_vec(),
            target: target.to_vec(),
            enc_layers,
            enc_norm,
            dec_layers,
            dec_norm,
            dec_out,
        },
    ))
}

/// Summed cross-entropy of `logits` against `labels` (PAD labels skipped),
/// the number of counted positions, and d(sum)/d(logits).
pub fn cross_entropy(logits: &Mat, labels: &[usize]) -> (f64, usize, Mat) {
    assert_eq!(logits.rows, labels.len());
    let mut grad = Mat::zeros(logits.rows, logits.cols);
    let mut total = 0.0;
    let mut count = 0;
    for (r, &label) in labels.iter().enumerate() {
        if label == PAD {
            continue;
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - row[label];
        count += 1;
        let g = grad.row_mut(r);
        for (c, gv) in g.iter_mut().enumerate() {
            *gv = (row[c] - log_z).exp();
        }
        g[label] -= 1.0;
    }
    (total, count, grad)
}

/// Accumulates d(loss)/d(params) into `grads`, given d(loss)/d(logits).
pub fn backward(params: &ModelParams, config: &ModelConfig, cache: &ForwardCache, dlogits: &Mat, grads: &mut ModelParams) {
    let heads = config.heads;
    let scale = (config.d_model as f64).sqrt();
    // logits = H · Eᵀ
    grads.embedding.add_assign(&dlogits.t_matmul(&cache.dec_out));
    let dh = dlogits.matmul(&params.embedding);
    let mut dy = ln_backward(&params.decoder_norm, &mut grads.decoder_norm, &cache.dec_norm, &dh);
    let mut dmemory = Mat::zeros(cache.source.len(), config.d_model);
    for ((layer, g), c) in params
        .decoder
        .iter()
        .zip(grads.decoder.iter_mut())
        .zip(&cache.dec_layers)
        .rev()
    {
        let mut df = dy.clone();
        apply_mask(&mut df, &c.drop3);
        let dc = ffn_backward(&layer.ffn, &mut g.ffn, &c.ffn, &df);
        dy.add_assign(&ln_backward(&layer.norm3, &mut g.norm3, &c.ln3, &dc));

        let mut dca = dy.clone();
        apply_mask(&mut dca, &c.drop2);
        let (db, dmem) = attn_backward(&layer.cross_attn, &mut g.cross_attn, &c.cross_attn, &dca, heads);
        dmemory.add_assign(&dmem);
        dy.add_assign(&ln_backward(&layer.norm2, &mut g.norm2, &c.ln2, &db));

        let mut dsa = dy.clone();
        apply_mask(&mut dsa, &c.drop1);
        let (dq, dkv) = attn_backward(&layer.self_attn, &mut g.self_attn, &c.self_attn, &dsa, heads);
        let da = dq.add(&dkv);
        dy.add_assign(&ln_backward(&layer.norm1, &mut g.norm1, &c.ln1, &da));
    }
    for (i, &id) in cache.target.iter().enumerate() {
        let row = grads.embedding.row_mut(id);
        for (gv, dv) in row.iter_mut().zip(dy.row(i)) {
            *gv += dv * scale;
        }
    }

    let mut dx = ln_backward(&params.encoder_norm, &mut grads.encoder_norm, &cache.enc_norm, &dmemory);
    for ((layer, g), c) in params
        .encoder
        .iter()
        .zip(grads.encoder.iter_mut())
        .zip(&cache.enc_layers)
        .rev()
    {
        let mut df = dx.clone();
        apply_mask(&mut df, &c.drop2);
        let db = ffn_backward(&layer.ffn, &mut g.ffn, &c.ffn, &df);
        dx.add_assign(&ln_backward(&layer.norm2, &mut g.norm2, &c.ln2, &db));

        let mut datt = dx.clone();
        apply_mask(&mut datt, &c.drop1);
        let (dq, dkv) = attn_backward(&layer.attn, &mut g.attn, &c.attn, &datt, heads);
        let da = dq.add(&dkv);
        dx.add_assign(&ln_backward(&layer.norm1, &mut g.norm1, &c.ln1, &da));
    }
    for (i, &id) in cache.source.iter().enumerate() {
        let row = grads.embedding.row_mut(id);
        for (gv, dv) in row.iter_mut().zip(dx.row(i)) {
            *gv += dv * scale;
        }
    }
}

/// Mean cross-entropy of one example and, if `grads` is given, its
/// gradient accumulated there. Labels equal to PAD are not counted; an
/// example with no counted labels has loss 0 and zero gradient.
pub fn example_loss(
    params: &ModelParams,
    config: &ModelConfig,
    source: &[usize],
    decoder_input: &[usize],
    labels: &[usize],
    grads: Option<&mut ModelParams>,
) -> Result<f64, TinyError> {
    let (logits, cache) = forward_train::<ChaCha8Rng>(params, config, source, decoder_input, None)?;
    let (sum, count, mut dlogits) = cross_entropy(&logits, labels);
    if count == 0 {
        return Ok(0.0);
    }
    if let Some(g) = grads {
        dlogits.scale(1.0 / count as f64);
        backward(params, config, &cache, &dlogits, g);
    }
    Ok(sum / count as f64)
}
