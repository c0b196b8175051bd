//! Flat parameter vector and its named layout.
//!
//! All weights live in one `Vec<f64>`; the layout maps named groups to
//! ranges. Gradients use the same layout, which makes optimizers, gradient
//! checking and checkpointing operate on plain vectors.

use crate::model::{FusionConfig, ModelError};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub range: Range<usize>,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub ln1_g: Range<usize>,
    pub ln1_b: Range<usize>,
    pub wq: Range<usize>,
    pub bq: Range<usize>,
    pub wk: Range<usize>,
    pub bk: Range<usize>,
    pub wv: Range<usize>,
    pub bv: Range<usize>,
    pub wo: Range<usize>,
    pub bo: Range<usize>,
    pub ln2_g: Range<usize>,
    pub ln2_b: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct BranchLayout {
    /// Token projection, [D x token_dim].
    pub proj_w: Range<usize>,
    pub proj_b: Range<usize>,
    /// Learned positional terms, [tokens x D].
    pub pos: Range<usize>,
    pub blocks: Vec<BlockLayout>,
    pub ln_f_g: Range<usize>,
    pub ln_f_b: Range<usize>,
    /// Pooled-feature projection, [F x D].
    pub feat_w: Range<usize>,
    pub feat_b: Range<usize>,
    pub tokens: usize,
    pub token_dim: usize,
}

/// Branch order: video top, video bottom, inertial.
pub const BRANCH_NAMES: [&str; 3] = ["video_top", "video_bottom", "imu"];

#[derive(Debug, Clone)]
pub struct Layout {
    pub branches: Vec<BranchLayout>,
    /// Fusion head, [classes x 3F].
    pub head_w: Range<usize>,
    pub head_b: Range<usize>,
    pub total: usize,
    groups: Vec<ParamGroup>,
}

struct Builder {
    at: usize,
    groups: Vec<ParamGroup>,
}

impl Builder {
    fn push(&mut self, name: String, rows: usize, cols: usize) -> Range<usize> {
        let start = self.at;
        self.at += rows * cols;
        let range = start..self.at;
        self.groups.push(ParamGroup {
            name,
            range: range.clone(),
            rows,
            cols,
        });
        range
    }
}

impl Layout {
    pub fn new(config: &FusionConfig) -> Layout {
        let mut b = Builder {
            at: 0,
            groups: Vec::new(),
        };
        let d = config.embed_dim;
        let f = config.feature_dim;
        let ffn = config.ffn_dim();

        let branch = |b: &mut Builder, name: &str, tokens: usize, token_dim: usize| {
            let proj_w = b.push(format!("{name}.proj_w"), d, token_dim);
            let proj_b = b.push(format!("{name}.proj_b"), 1, d);
            let pos = b.push(format!("{name}.pos"), tokens, d);
            let blocks = (0..config.depth)
                .map(|i| BlockLayout {
                    ln1_g: b.push(format!("{name}.block{i}.ln1_g"), 1, d),
                    ln1_b: b.push(format!("{name}.block{i}.ln1_b"), 1, d),
                    wq: b.push(format!("{name}.block{i}.wq"), d, d),
                    bq: b.push(format!("{name}.block{i}.bq"), 1, d),
                    wk: b.push(format!("{name}.block{i}.wk"), d, d),
                    bk: b.push(format!("{name}.block{i}.bk"), 1, d),
                    wv: b.push(format!("{name}.block{i}.wv"), d, d),
                    bv: b.push(format!("{name}.block{i}.bv"), 1, d),
                    wo: b.push(format!("{name}.block{i}.wo"), d, d),
                    bo: b.push(format!("{name}.block{i}.bo"), 1, d),
                    ln2_g: b.push(format!("{name}.block{i}.ln2_g"), 1, d),
                    ln2_b: b.push(format!("{name}.block{i}.ln2_b"), 1, d),
                    w1: b.push(format!("{name}.block{i}.ffn_w1"), ffn, d),
                    b1: b.push(format!("{name}.block{i}.ffn_b1"), 1, ffn),
                    w2: b.push(format!("{name}.block{i}.ffn_w2"), d, ffn),
                    b2: b.push(format!("{name}.block{i}.ffn_b2"), 1, d),
                })
                .collect();
            BranchLayout {
                proj_w,
                proj_b,
                pos,
                blocks,
                ln_f_g: b.push(format!("{name}.ln_f_g"), 1, d),
                ln_f_b: b.push(format!("{name}.ln_f_b"), 1, d),
                feat_w: b.push(format!("{name}.feat_w"), f, d),
                feat_b: b.push(format!("{name}.feat_b"), 1, f),
                tokens,
                token_dim,
            }
        };

        let branches = vec![
            branch(&mut b, BRANCH_NAMES[0], config.video_tokens(), config.video_token_dim()),
            branch(&mut b, BRANCH_NAMES[1], config.video_tokens(), config.video_token_dim()),
            branch(&mut b, BRANCH_NAMES[2], config.imu_tokens(), config.imu_token_dim()),
        ];
        let head_w = b.push("head.w".into(), config.classes, 3 * f);
        let head_b = b.push("head.b".into(), 1, config.classes);

        Layout {
            branches,
            head_w,
            head_b,
            total: b.at,
            groups: b.groups,
        }
    }

    pub fn groups(&self) -> &[ParamGroup] {
        &self.groups
    }
}

/// Model parameters: config, layout and the flat value vector.
#[derive(Debug, Clone)]
pub struct Params {
    pub config: FusionConfig,
    pub layout: Layout,
    pub flat: Vec<f64>,
}

impl Params {
    /// Initialize: scaled-uniform (fan-in) projections, zero biases, unit
    /// layer-norm gains, 0.02-scaled normal positional terms.
    pub fn init(config: &FusionConfig) -> Result<Params, ModelError> {
        config.validate()?;
        let layout = Layout::new(config);
        let mut flat = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        let mut uniform_fan_in = |flat: &mut [f64], range: &Range<usize>, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut flat[range.clone()] {
                *v = rng.random_range(-bound..bound);
            }
        };

        for branch in &layout.branches {
            uniform_fan_in(&mut flat, &branch.proj_w, branch.token_dim);
            for block in &branch.blocks {
                let d = config.embed_dim;
                for w in [&block.wq, &block.wk, &block.wv, &block.wo] {
                    uniform_fan_in(&mut flat, w, d);
                }
                uniform_fan_in(&mut flat, &block.w1, d);
                uniform_fan_in(&mut flat, &block.w2, config.ffn_dim());
                flat[block.ln1_g.clone()].fill(1.0);
                flat[block.ln2_g.clone()].fill(1.0);
            }
            flat[branch.ln_f_g.clone()].fill(1.0);
            uniform_fan_in(&mut flat, &branch.feat_w, config.embed_dim);
        }
        uniform_fan_in(&mut flat, &layout.head_w, 3 * config.feature_dim);

        // Positional terms: standard normal x 0.02 via Box-Muller.
        let mut rng2 = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        for branch in &layout.branches {
            let pos = branch.pos.clone();
            for v in &mut flat[pos] {
                let u1: f64 = rng2.random_range(f64::EPSILON..1.0);
                let u2: f64 = rng2.random_range(0.0..1.0);
                let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                *v = 0.02 * n;
            }
        }

        Ok(Params {
            config: config.clone(),
            layout,
            flat,
        })
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.flat.iter().all(|v| v.is_finite())
    }
}
