//! Room-aware group attention: node-level masks expanded to token blocks and
//! a dense reference attention kernel with circular rotary encoding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::exp;
use crate::panocam::CpropeTable;
use crate::scenegraph::{NodeId, RoomId};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// One context node as seen by the mask builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContextNode {
    pub id: NodeId,
    pub room: RoomId,
    pub boundary: bool,
}

/// Node-pair visibility expanded to a token-pair additive bias.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupMask {
    pub tokens_per_node: usize,
    pub node_rooms: Vec<RoomId>,
    allowed: Vec<bool>,
    logit_bias: Vec<f64>,
}

impl GroupMask {
    pub fn nodes(&self) -> usize {
        self.node_rooms.len()
    }

    pub fn tokens(&self) -> usize {
        self.nodes() * self.tokens_per_node
    }

    pub fn node_allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.nodes() + j]
    }

    pub fn token_allowed(&self, a: usize, b: usize) -> bool {
        self.node_allowed(a / self.tokens_per_node, b / self.tokens_per_node)
    }

    /// `0.0` for visible pairs, `-inf` for masked ones.
    pub fn bias(&self, a: usize, b: usize) -> f64 {
        self.logit_bias[a * self.tokens() + b]
    }
}

/// Nodes may attend to each other when they share a room, or when their rooms
/// are joined by a doorway and at least one of them is a boundary node.
pub fn build_group_mask(
    context: &[ContextNode],
    doorway_pairs: &[(RoomId, RoomId)],
    tokens_per_node: usize,
) -> Result<GroupMask> {
    if context.is_empty() || tokens_per_node == 0 {
        return Err(Error::InvalidArgument("mask needs at least one node and one token".into()));
    }
    let n = context.len();
    let joined = |a: RoomId, b: RoomId| doorway_pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a));
    let mut allowed = vec![false; n * n];
    for (i, a) in context.iter().enumerate() {
        for (j, b) in context.iter().enumerate() {
            allowed[i * n + j] = a.room == b.room || ((a.boundary || b.boundary) && joined(a.room, b.room));
        }
    }
    let t = n * tokens_per_node;
    let mut logit_bias = vec![0.0; t * t];
    for a in 0..t {
        for b in 0..t {
            if !allowed[(a / tokens_per_node) * n + b / tokens_per_node] {
                logit_bias[a * t + b] = f64::NEG_INFINITY;
            }
        }
    }
    Ok(GroupMask {
        tokens_per_node,
        node_rooms: context.iter().map(|c| c.room).collect(),
        allowed,
        logit_bias,
    })
}

fn check_qk(q: &Matrix, k: &Matrix, mask: &GroupMask) -> Result<()> {
    if q.cols != k.cols || q.rows != mask.tokens() || k.rows != mask.tokens() {
        return Err(Error::ShapeMismatch(format!(
            "q {}x{}, k {}x{}, mask over {} tokens",
            q.rows,
            q.cols,
            k.rows,
            k.cols,
            mask.tokens()
        )));
    }
    Ok(())
}

/// Row-stochastic attention weights. Masked keys are left out of the
/// normalization and receive exactly zero weight.
pub fn attention_weights(q: &Matrix, k: &Matrix, mask: &GroupMask, scale: f64) -> Result<Matrix> {
    check_qk(q, k, mask)?;
    let t = q.rows;
    let mut w = Matrix::zeros(t, t);
    let mut logits = vec![0.0; t];
    for i in 0..t {
        let qi = q.row(i);
        let mut max = f64::NEG_INFINITY;
        for j in (0..t).filter(|&j| mask.token_allowed(i, j)) {
            let l = qi.iter().zip(k.row(j)).map(|(a, b)| a * b).sum::<f64>() * scale;
            logits[j] = l;
            max = max.max(l);
        }
        let mut sum = 0.0;
        for j in (0..t).filter(|&j| mask.token_allowed(i, j)) {
            let e = exp(logits[j] - max);
            w.set(i, j, e);
            sum += e;
        }
        for j in (0..t).filter(|&j| mask.token_allowed(i, j)) {
            w.set(i, j, w.get(i, j) / sum);
        }
    }
    Ok(w)
}

/// `softmax(QKᵀ·scale + M) V` with exclusion-based masking.
pub fn masked_attention(q: &Matrix, k: &Matrix, v: &Matrix, mask: &GroupMask, scale: f64) -> Result<Matrix> {
    if v.rows != k.rows {
        return Err(Error::ShapeMismatch(format!("v has {} rows, k has {}", v.rows, k.rows)));
    }
    let w = attention_weights(q, k, mask, scale)?;
    let mut out = Matrix::zeros(q.rows, v.cols);
    for i in 0..q.rows {
        let row = out.row_mut(i);
        for j in (0..k.rows).filter(|&j| mask.token_allowed(i, j)) {
            let wij = w.get(i, j);
            for (o, x) in row.iter_mut().zip(v.row(j)) {
                *o += wij * x;
            }
        }
    }
    Ok(out)
}

/// Default horizontal/vertical rotary pair counts for a feature width.
pub fn default_lane_split(dim: usize) -> (usize, usize) {
    (dim / 8, dim / 8)
}

fn rotate(features: &Matrix, table: &CpropeTable, token_xy: &[(usize, usize)], sign: f64) -> Result<Matrix> {
    let need = 2 * (table.pairs + table.v_pairs);
    if features.cols < need {
        return Err(Error::InvalidArgument(format!(
            "feature width {} too small for {} rotary lanes",
            features.cols, need
        )));
    }
    if token_xy.len() != features.rows {
        return Err(Error::ShapeMismatch(format!(
            "{} token positions for {} rows",
            token_xy.len(),
            features.rows
        )));
    }
    if let Some(&(_, y)) = token_xy.iter().find(|&&(_, y)| table.v_pairs > 0 && y >= table.height_tokens) {
        return Err(Error::InvalidArgument(format!("token row {y} outside the vertical table")));
    }
    let mut out = features.clone();
    for (r, &(x, y)) in token_xy.iter().enumerate() {
        let row = out.row_mut(r);
        let mut lane = 0;
        let turn = |row: &mut [f64], lane: usize, [c, s]: [f64; 2]| {
            let s = s * sign;
            let (a, b) = (row[lane], row[lane + 1]);
            row[lane] = a * c - b * s;
            row[lane + 1] = a * s + b * c;
        };
        for m in 1..=table.pairs {
            turn(row, lane, table.horizontal(m, x));
            lane += 2;
        }
        for k in 0..table.v_pairs {
            turn(row, lane, table.vertical(k, y));
            lane += 2;
        }
    }
    Ok(out)
}

/// Rotates horizontal lane pairs by the circular phase of each token's
/// column and vertical pairs by its row phase. Lanes beyond
/// `2 * (pairs + v_pairs)` pass through unchanged.
pub fn apply_cprope(features: &Matrix, table: &CpropeTable, token_xy: &[(usize, usize)]) -> Result<Matrix> {
    rotate(features, table, token_xy, 1.0)
}

/// Inverse rotation of [`apply_cprope`].
pub fn apply_cprope_inverse(features: &Matrix, table: &CpropeTable, token_xy: &[(usize, usize)]) -> Result<Matrix> {
    rotate(features, table, token_xy, -1.0)
}
