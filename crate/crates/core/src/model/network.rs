//! Forward pass, analytic backward pass, and prediction.
//!
//! Each branch: token projection plus learned positional terms, `depth`
//! pre-norm encoder blocks (multi-head self-attention and a two-layer GELU
//! feed-forward, both residual), a final layer norm, mean pooling over
//! tokens, and a linear map to the branch feature. The three features are
//! concatenated and fed to a single affine classification layer.

use crate::action::ActionClass;
use crate::model::layout::{BranchLayout, Params, BRANCH_NAMES};
use crate::model::math::{
    gelu, gelu_grad, layernorm, layernorm_backward, linear, linear_backward, matmul,
    matmul_at_acc, matmul_bt, softmax_rows, softmax_rows_backward,
};
use crate::model::{Ablation, FusionConfig, ModelError, IMU_STEP_DIM};
use crate::pipeline::window::Window;

/// Raw per-window model input: two video volumes and the inertial block,
/// all row-major f64.
#[derive(Debug, Clone)]
pub struct ModelInput {
    /// T x side x side, [t][y][x].
    pub video_top: Vec<f64>,
    pub video_bottom: Vec<f64>,
    /// T x 72, [t][module * 9 + channel].
    pub imu: Vec<f64>,
}

impl ModelInput {
    pub fn from_window(window: &Window, config: &FusionConfig) -> Result<ModelInput, ModelError> {
        if window.len() != config.window_len {
            return Err(ModelError::InputShape(format!(
                "window has {} samples, model expects {}",
                window.len(),
                config.window_len
            )));
        }
        let frame_len = config.side * config.side;
        let mut video_top = Vec::with_capacity(config.window_len * frame_len);
        let mut video_bottom = Vec::with_capacity(config.window_len * frame_len);
        let mut imu = Vec::with_capacity(config.window_len * IMU_STEP_DIM);
        for sample in window.samples() {
            for frame in [&sample.frame_top, &sample.frame_bottom] {
                if frame.side as usize != config.side {
                    return Err(ModelError::InputShape(format!(
                        "frame side {} does not match model side {}",
                        frame.side, config.side
                    )));
                }
            }
            video_top.extend(sample.frame_top.pixels.iter().map(|&p| p as f64));
            video_bottom.extend(sample.frame_bottom.pixels.iter().map(|&p| p as f64));
            for module in &sample.imu_block {
                imu.extend(module.iter().map(|&v| v as f64));
            }
        }
        Ok(ModelInput {
            video_top,
            video_bottom,
            imu,
        })
    }
}

/// Classifier output for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub label: ActionClass,
    pub confidence: f64,
}

/// Argmax with ties broken by the lowest class index.
pub fn argmax_label(values: &[f64]) -> ActionClass {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    ActionClass::from_index(best).expect("class count checked by config")
}

/// Cut a video volume into tubelet token vectors, [N x t*p*p].
/// Token n = (ti * gp + pi) * gp + pj where gp = side / p; each token is its
/// voxel block flattened in (t, y, x) order.
pub fn video_tokens(volume: &[f64], config: &FusionConfig) -> Vec<f64> {
    let side = config.side;
    let (tt, p) = (config.tubelet_t, config.patch);
    let gp = side / p;
    let token_dim = config.video_token_dim();
    let n_tokens = config.video_tokens();
    debug_assert_eq!(volume.len(), config.window_len * side * side);

    let mut out = vec![0.0; n_tokens * token_dim];
    for ti in 0..config.window_len / tt {
        for pi in 0..gp {
            for pj in 0..gp {
                let n = (ti * gp + pi) * gp + pj;
                let token = &mut out[n * token_dim..(n + 1) * token_dim];
                let mut at = 0;
                for dt in 0..tt {
                    let t = ti * tt + dt;
                    for dy in 0..p {
                        let row = (t * side + pi * p + dy) * side + pj * p;
                        token[at..at + p].copy_from_slice(&volume[row..row + p]);
                        at += p;
                    }
                }
            }
        }
    }
    out
}

/// Group consecutive IMU timesteps into token vectors, [T/g x g*72].
pub fn imu_tokens(imu: &[f64], config: &FusionConfig) -> Vec<f64> {
    debug_assert_eq!(imu.len(), config.window_len * IMU_STEP_DIM);
    // Timesteps are already contiguous, so grouping is a reshape.
    imu.to_vec()
}

struct BlockCache {
    xhat1: Vec<f64>,
    inv1: Vec<f64>,
    h1: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// heads x N x N attention rows (post softmax).
    attn: Vec<f64>,
    o_pre: Vec<f64>,
    xhat2: Vec<f64>,
    inv2: Vec<f64>,
    h2: Vec<f64>,
    z1: Vec<f64>,
    g: Vec<f64>,
}

struct BranchCache {
    tokens: Vec<f64>,
    blocks: Vec<BlockCache>,
    xhat_f: Vec<f64>,
    inv_f: Vec<f64>,
    pooled: Vec<f64>,
}

fn check_finite(buf: &[f64], place: impl Fn() -> String) -> Result<(), ModelError> {
    if buf.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite { place: place() })
    }
}

/// Multi-head self-attention forward. Returns the concatenated head outputs
/// (before the output projection) and caches the attention rows.
#[allow(clippy::too_many_arguments)]
fn attention_forward(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    n: usize,
    d: usize,
    heads: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut o_pre = vec![0.0; n * d];
    let mut attn = vec![0.0; heads * n * n];
    let mut qh = vec![0.0; n * dh];
    let mut kh = vec![0.0; n * dh];
    let mut vh = vec![0.0; n * dh];
    let mut oh = vec![0.0; n * dh];

    for h in 0..heads {
        for row in 0..n {
            let src = row * d + h * dh;
            qh[row * dh..(row + 1) * dh].copy_from_slice(&q[src..src + dh]);
            kh[row * dh..(row + 1) * dh].copy_from_slice(&k[src..src + dh]);
            vh[row * dh..(row + 1) * dh].copy_from_slice(&v[src..src + dh]);
        }
        let scores = &mut attn[h * n * n..(h + 1) * n * n];
        matmul_bt(scores, &qh, &kh, n, dh, n);
        for s in scores.iter_mut() {
            *s *= scale;
        }
        softmax_rows(scores, n, n);
        matmul(&mut oh, scores, &vh, n, n, dh);
        for row in 0..n {
            let dst = row * d + h * dh;
            o_pre[dst..dst + dh].copy_from_slice(&oh[row * dh..(row + 1) * dh]);
        }
    }
    (o_pre, attn)
}

/// Backward of `attention_forward`: writes dq/dk/dv from d(o_pre).
#[allow(clippy::too_many_arguments)]
fn attention_backward(
    dq: &mut [f64],
    dk: &mut [f64],
    dv: &mut [f64],
    d_o_pre: &[f64],
    q: &[f64],
    k: &[f64],
    v: &[f64],
    attn: &[f64],
    n: usize,
    d: usize,
    heads: usize,
) {
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut qh = vec![0.0; n * dh];
    let mut kh = vec![0.0; n * dh];
    let mut vh = vec![0.0; n * dh];
    let mut doh = vec![0.0; n * dh];
    let mut da = vec![0.0; n * n];
    let mut ds = vec![0.0; n * n];
    let mut dqh = vec![0.0; n * dh];
    let mut dkh = vec![0.0; n * dh];
    let mut dvh = vec![0.0; n * dh];

    for h in 0..heads {
        for row in 0..n {
            let src = row * d + h * dh;
            qh[row * dh..(row + 1) * dh].copy_from_slice(&q[src..src + dh]);
            kh[row * dh..(row + 1) * dh].copy_from_slice(&k[src..src + dh]);
            vh[row * dh..(row + 1) * dh].copy_from_slice(&v[src..src + dh]);
            doh[row * dh..(row + 1) * dh].copy_from_slice(&d_o_pre[src..src + dh]);
        }
        let a = &attn[h * n * n..(h + 1) * n * n];

        // dA = dO * V^T ; dV = A^T * dO
        matmul_bt(&mut da, &doh, &vh, n, dh, n);
        dvh.fill(0.0);
        matmul_at_acc(&mut dvh, a, &doh, n, n, dh);

        // Through softmax, then the 1/sqrt(dh) scale.
        softmax_rows_backward(&mut ds, &da, a, n, n);
        for s in ds.iter_mut() {
            *s *= scale;
        }

        // dQ = dS * K ; dK = dS^T * Q
        matmul(&mut dqh, &ds, &kh, n, n, dh);
        dkh.fill(0.0);
        matmul_at_acc(&mut dkh, &ds, &qh, n, n, dh);

        for row in 0..n {
            let dst = row * d + h * dh;
            dq[dst..dst + dh].copy_from_slice(&dqh[row * dh..(row + 1) * dh]);
            dk[dst..dst + dh].copy_from_slice(&dkh[row * dh..(row + 1) * dh]);
            dv[dst..dst + dh].copy_from_slice(&dvh[row * dh..(row + 1) * dh]);
        }
    }
}

/// Embed raw tokens: linear projection plus positional terms, [N x D].
fn embed_tokens(flat: &[f64], bl: &BranchLayout, config: &FusionConfig, tokens: &[f64]) -> Vec<f64> {
    let (n, d) = (bl.tokens, config.embed_dim);
    let mut x = vec![0.0; n * d];
    linear(
        &mut x,
        tokens,
        &flat[bl.proj_w.clone()],
        &flat[bl.proj_b.clone()],
        n,
        bl.token_dim,
        d,
    );
    let pos = &flat[bl.pos.clone()];
    for (xv, pv) in x.iter_mut().zip(pos) {
        *xv += pv;
    }
    x
}

fn branch_forward(
    flat: &[f64],
    bl: &BranchLayout,
    config: &FusionConfig,
    branch_name: &str,
    tokens: Vec<f64>,
) -> Result<(Vec<f64>, BranchCache), ModelError> {
    let (n, d) = (bl.tokens, config.embed_dim);
    let ffn = config.ffn_dim();
    let mut x = embed_tokens(flat, bl, config, &tokens);
    check_finite(&x, || format!("{branch_name}.embed"))?;

    let mut blocks = Vec::with_capacity(config.depth);
    for (bi, block) in bl.blocks.iter().enumerate() {
        // Attention sublayer (pre-norm, residual).
        let mut h1 = vec![0.0; n * d];
        let mut xhat1 = vec![0.0; n * d];
        let mut inv1 = vec![0.0; n];
        layernorm(
            &mut h1,
            &mut xhat1,
            &mut inv1,
            &x,
            &flat[block.ln1_g.clone()],
            &flat[block.ln1_b.clone()],
            n,
            d,
        );
        let mut q = vec![0.0; n * d];
        let mut k = vec![0.0; n * d];
        let mut v = vec![0.0; n * d];
        linear(&mut q, &h1, &flat[block.wq.clone()], &flat[block.bq.clone()], n, d, d);
        linear(&mut k, &h1, &flat[block.wk.clone()], &flat[block.bk.clone()], n, d, d);
        linear(&mut v, &h1, &flat[block.wv.clone()], &flat[block.bv.clone()], n, d, d);
        let (o_pre, attn) = attention_forward(&q, &k, &v, n, d, config.heads);
        let mut attn_out = vec![0.0; n * d];
        linear(
            &mut attn_out,
            &o_pre,
            &flat[block.wo.clone()],
            &flat[block.bo.clone()],
            n,
            d,
            d,
        );
        for (xv, av) in x.iter_mut().zip(&attn_out) {
            *xv += av;
        }

        // Feed-forward sublayer (pre-norm, residual).
        let mut h2 = vec![0.0; n * d];
        let mut xhat2 = vec![0.0; n * d];
        let mut inv2 = vec![0.0; n];
        layernorm(
            &mut h2,
            &mut xhat2,
            &mut inv2,
            &x,
            &flat[block.ln2_g.clone()],
            &flat[block.ln2_b.clone()],
            n,
            d,
        );
        let mut z1 = vec![0.0; n * ffn];
        linear(&mut z1, &h2, &flat[block.w1.clone()], &flat[block.b1.clone()], n, d, ffn);
        let g: Vec<f64> = z1.iter().map(|&z| gelu(z)).collect();
        let mut ffn_out = vec![0.0; n * d];
        linear(&mut ffn_out, &g, &flat[block.w2.clone()], &flat[block.b2.clone()], n, ffn, d);
        for (xv, fv) in x.iter_mut().zip(&ffn_out) {
            *xv += fv;
        }
        check_finite(&x, || format!("{branch_name}.block{bi}"))?;

        blocks.push(BlockCache {
            xhat1,
            inv1,
            h1,
            q,
            k,
            v,
            attn,
            o_pre,
            xhat2,
            inv2,
            h2,
            z1,
            g,
        });
    }

    // Final norm, mean pool, feature projection.
    let mut y = vec![0.0; n * d];
    let mut xhat_f = vec![0.0; n * d];
    let mut inv_f = vec![0.0; n];
    layernorm(
        &mut y,
        &mut xhat_f,
        &mut inv_f,
        &x,
        &flat[bl.ln_f_g.clone()],
        &flat[bl.ln_f_b.clone()],
        n,
        d,
    );
    let mut pooled = vec![0.0; d];
    for row in 0..n {
        for j in 0..d {
            pooled[j] += y[row * d + j];
        }
    }
    for p in pooled.iter_mut() {
        *p /= n as f64;
    }
    let mut feat = vec![0.0; config.feature_dim];
    linear(
        &mut feat,
        &pooled,
        &flat[bl.feat_w.clone()],
        &flat[bl.feat_b.clone()],
        1,
        d,
        config.feature_dim,
    );
    check_finite(&feat, || format!("{branch_name}.feature"))?;

    Ok((
        feat,
        BranchCache {
            tokens,
            blocks,
            xhat_f,
            inv_f,
            pooled,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn branch_backward(
    flat: &[f64],
    grad: &mut [f64],
    bl: &BranchLayout,
    config: &FusionConfig,
    cache: &BranchCache,
    dfeat: &[f64],
) {
    let (n, d) = (bl.tokens, config.embed_dim);
    let ffn = config.ffn_dim();

    // Feature projection and mean pool.
    let mut dpooled = vec![0.0; d];
    {
        let (dw, rest) = split_two(grad, &bl.feat_w, &bl.feat_b);
        linear_backward(
            &mut dpooled,
            dw,
            rest,
            dfeat,
            &cache.pooled,
            &flat[bl.feat_w.clone()],
            1,
            d,
            config.feature_dim,
        );
    }
    let mut dy = vec![0.0; n * d];
    for row in 0..n {
        for j in 0..d {
            dy[row * d + j] = dpooled[j] / n as f64;
        }
    }

    // Final layer norm.
    let mut dx = vec![0.0; n * d];
    {
        let (dgamma, dbeta) = split_two(grad, &bl.ln_f_g, &bl.ln_f_b);
        layernorm_backward(
            &mut dx,
            dgamma,
            dbeta,
            &dy,
            &cache.xhat_f,
            &cache.inv_f,
            &flat[bl.ln_f_g.clone()],
            n,
            d,
        );
    }

    // Blocks in reverse.
    for (block, bc) in bl.blocks.iter().zip(&cache.blocks).rev() {
        // Feed-forward sublayer.
        let mut dg = vec![0.0; n * ffn];
        {
            let (dw2, db2) = split_two(grad, &block.w2, &block.b2);
            linear_backward(
                &mut dg,
                dw2,
                db2,
                &dx,
                &bc.g,
                &flat[block.w2.clone()],
                n,
                ffn,
                d,
            );
        }
        let mut dz1 = dg;
        for (dzv, &z) in dz1.iter_mut().zip(&bc.z1) {
            *dzv *= gelu_grad(z);
        }
        let mut dh2 = vec![0.0; n * d];
        {
            let (dw1, db1) = split_two(grad, &block.w1, &block.b1);
            linear_backward(
                &mut dh2,
                dw1,
                db1,
                &dz1,
                &bc.h2,
                &flat[block.w1.clone()],
                n,
                d,
                ffn,
            );
        }
        let mut dx_ln2 = vec![0.0; n * d];
        {
            let (dgamma, dbeta) = split_two(grad, &block.ln2_g, &block.ln2_b);
            layernorm_backward(
                &mut dx_ln2,
                dgamma,
                dbeta,
                &dh2,
                &bc.xhat2,
                &bc.inv2,
                &flat[block.ln2_g.clone()],
                n,
                d,
            );
        }
        for (dxv, lv) in dx.iter_mut().zip(&dx_ln2) {
            *dxv += lv;
        }

        // Attention sublayer.
        let mut d_o_pre = vec![0.0; n * d];
        {
            let (dwo, dbo) = split_two(grad, &block.wo, &block.bo);
            linear_backward(
                &mut d_o_pre,
                dwo,
                dbo,
                &dx,
                &bc.o_pre,
                &flat[block.wo.clone()],
                n,
                d,
                d,
            );
        }
        let mut dq = vec![0.0; n * d];
        let mut dk = vec![0.0; n * d];
        let mut dv = vec![0.0; n * d];
        attention_backward(
            &mut dq, &mut dk, &mut dv, &d_o_pre, &bc.q, &bc.k, &bc.v, &bc.attn, n, d,
            config.heads,
        );
        let mut dh1 = vec![0.0; n * d];
        {
            let (dwq, dbq) = split_two(grad, &block.wq, &block.bq);
            linear_backward(&mut dh1, dwq, dbq, &dq, &bc.h1, &flat[block.wq.clone()], n, d, d);
        }
        let mut dh1_part = vec![0.0; n * d];
        {
            let (dwk, dbk) = split_two(grad, &block.wk, &block.bk);
            linear_backward(
                &mut dh1_part,
                dwk,
                dbk,
                &dk,
                &bc.h1,
                &flat[block.wk.clone()],
                n,
                d,
                d,
            );
        }
        for (a, b) in dh1.iter_mut().zip(&dh1_part) {
            *a += b;
        }
        {
            let (dwv, dbv) = split_two(grad, &block.wv, &block.bv);
            linear_backward(
                &mut dh1_part,
                dwv,
                dbv,
                &dv,
                &bc.h1,
                &flat[block.wv.clone()],
                n,
                d,
                d,
            );
        }
        for (a, b) in dh1.iter_mut().zip(&dh1_part) {
            *a += b;
        }
        let mut dx_ln1 = vec![0.0; n * d];
        {
            let (dgamma, dbeta) = split_two(grad, &block.ln1_g, &block.ln1_b);
            layernorm_backward(
                &mut dx_ln1,
                dgamma,
                dbeta,
                &dh1,
                &bc.xhat1,
                &bc.inv1,
                &flat[block.ln1_g.clone()],
                n,
                d,
            );
        }
        for (dxv, lv) in dx.iter_mut().zip(&dx_ln1) {
            *dxv += lv;
        }
    }

    // Embedding: positional terms and token projection.
    for (g, dxv) in grad[bl.pos.clone()].iter_mut().zip(&dx) {
        *g += dxv;
    }
    matmul_at_acc(
        &mut grad[bl.proj_w.clone()],
        &dx,
        &cache.tokens,
        n,
        d,
        bl.token_dim,
    );
    for row in 0..n {
        let dx_row = &dx[row * d..(row + 1) * d];
        for (g, &dv) in grad[bl.proj_b.clone()].iter_mut().zip(dx_row) {
            *g += dv;
        }
    }
}

/// Two disjoint mutable group views into the gradient vector.
fn split_two<'g>(
    grad: &'g mut [f64],
    a: &std::ops::Range<usize>,
    b: &std::ops::Range<usize>,
) -> (&'g mut [f64], &'g mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (left, right) = grad.split_at_mut(b.start);
    (&mut left[a.clone()], &mut right[..b.len()])
}

fn enabled_branches(ablation: Ablation) -> [bool; 3] {
    match ablation {
        Ablation::None => [true, true, true],
        Ablation::ImuOnly => [false, false, true],
        Ablation::VideoOnly => [true, true, false],
    }
}

struct ForwardState {
    caches: [Option<BranchCache>; 3],
    probs: Vec<f64>,
    logits: Vec<f64>,
    concat: Vec<f64>,
}

fn forward_full(params: &Params, input: &ModelInput) -> Result<ForwardState, ModelError> {
    let config = &params.config;
    let flat = &params.flat;
    let f = config.feature_dim;
    let enabled = enabled_branches(config.ablation);

    let mut feats: [Vec<f64>; 3] = [vec![0.0; f], vec![0.0; f], vec![0.0; f]];
    let mut caches: [Option<BranchCache>; 3] = [None, None, None];
    for (i, bl) in params.layout.branches.iter().enumerate() {
        if !enabled[i] {
            continue;
        }
        let tokens = match i {
            0 => video_tokens(&input.video_top, config),
            1 => video_tokens(&input.video_bottom, config),
            _ => imu_tokens(&input.imu, config),
        };
        let (feat, cache) = branch_forward(flat, bl, config, BRANCH_NAMES[i], tokens)?;
        feats[i] = feat;
        caches[i] = Some(cache);
    }

    let mut concat = Vec::with_capacity(3 * f);
    for feat in &feats {
        concat.extend_from_slice(feat);
    }
    let mut logits = vec![0.0; config.classes];
    linear(
        &mut logits,
        &concat,
        &flat[params.layout.head_w.clone()],
        &flat[params.layout.head_b.clone()],
        1,
        3 * f,
        config.classes,
    );
    check_finite(&logits, || "head.logits".to_string())?;
    let mut probs = logits.clone();
    softmax_rows(&mut probs, 1, config.classes);

    Ok(ForwardState {
        caches,
        probs,
        logits,
        concat,
    })
}

/// Full three-branch forward; pure function of (input, params).
pub fn predict(params: &Params, input: &ModelInput) -> Result<Prediction, ModelError> {
    let state = forward_full(params, input)?;
    let label = argmax_label(&state.logits);
    let confidence = state.probs[label.index()];
    Ok(Prediction {
        logits: state.logits,
        probs: state.probs,
        label,
        confidence,
    })
}

/// Predict straight from a pipeline window.
pub fn predict_window(params: &Params, window: &Window) -> Result<Prediction, ModelError> {
    let input = ModelInput::from_window(window, &params.config)?;
    predict(params, &input)
}

/// Labels for a batch of windows, classified in parallel but returned in
/// input order.
pub fn predict_windows(params: &Params, windows: &[Window]) -> Result<Vec<ActionClass>, ModelError> {
    use rayon::prelude::*;
    windows
        .par_iter()
        .map(|w| predict_window(params, w).map(|p| p.label))
        .collect()
}

/// Mean cross-entropy and its gradient over a batch, plus the number of
/// correctly argmax-classified samples.
pub struct BatchGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub correct: usize,
}

fn sample_loss_and_grad(
    params: &Params,
    input: &ModelInput,
    label: ActionClass,
) -> Result<(f64, Vec<f64>, bool), ModelError> {
    let config = &params.config;
    let flat = &params.flat;
    let f = config.feature_dim;
    let state = forward_full(params, input)?;

    let p_true = state.probs[label.index()].max(1e-300);
    let loss = -p_true.ln();
    if !loss.is_finite() {
        return Err(ModelError::NonFinite { place: "loss".into() });
    }
    let correct = argmax_label(&state.logits) == label;

    let mut grad = vec![0.0; params.len()];
    let mut dlogits = state.probs.clone();
    dlogits[label.index()] -= 1.0;

    // Head backward.
    let mut dconcat = vec![0.0; 3 * f];
    {
        let (dw, db) = split_two(&mut grad, &params.layout.head_w, &params.layout.head_b);
        linear_backward(
            &mut dconcat,
            dw,
            db,
            &dlogits,
            &state.concat,
            &flat[params.layout.head_w.clone()],
            1,
            3 * f,
            config.classes,
        );
    }

    for (i, bl) in params.layout.branches.iter().enumerate() {
        if let Some(cache) = &state.caches[i] {
            branch_backward(flat, &mut grad, bl, config, cache, &dconcat[i * f..(i + 1) * f]);
        }
    }
    Ok((loss, grad, correct))
}

/// Analytic gradient of mean cross-entropy over the batch. Per-sample
/// gradients are computed in parallel but reduced in batch order, so the
/// result is deterministic.
pub fn loss_and_grad(
    params: &Params,
    batch: &[(&ModelInput, ActionClass)],
) -> Result<BatchGrad, ModelError> {
    use rayon::prelude::*;
    if batch.is_empty() {
        return Err(ModelError::Dataset("empty batch".into()));
    }
    #[allow(clippy::type_complexity)]
    let per_sample: Vec<Result<(f64, Vec<f64>, bool), ModelError>> = batch
        .par_iter()
        .map(|(input, label)| sample_loss_and_grad(params, input, *label))
        .collect();

    let inv = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    let mut correct = 0;
    for item in per_sample {
        let (l, g, c) = item?;
        loss += l * inv;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += v * inv;
        }
        correct += c as usize;
    }
    Ok(BatchGrad { loss, grad, correct })
}
