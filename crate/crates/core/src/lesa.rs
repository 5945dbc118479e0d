//! Multi-head self-attention augmented with label-embedding cross-attention.
//!
//! The layer takes the token matrix X ((L+1)×D, sentinel aggregator row
//! first) and the label matrix X_l (n×D). Both are projected through the
//! same learned W_K/W_Q/W_V and split into contiguous per-head column
//! windows. Each head computes ordinary scaled-dot self-attention plus a
//! token-token similarity matrix CoSim derived from token-label affinities:
//!
//!   A_h      = Q_h K_h^T / sqrt(d)         self-attention logits
//!   A^l_h    = Q^l_h K_h^T / sqrt(d)       label-to-token affinities
//!   CoSim_h  = norm(A^l_h)^T norm(A^l_h)   Gram of L2-normalized rows
//!   NewAttn  = softmax(A_h) + CoSim_h      added post-softmax, no renorm
//!   O_h      = NewAttn_h V_h
//!
//! NewAttn rows deliberately do not sum to 1; the additive CoSim term is
//! the whole point of the layer. The backward pass is hand-derived and
//! checked against central finite differences.

use ndarray::{s, Array2};
use thiserror::Error;

use crate::linalg::{
    l2_normalize_rows, l2_normalize_rows_backward, softmax_backward_rows, softmax_rows,
};

/// Pre-softmax logit added at masked key columns. Large enough that the
/// softmax contribution underflows to exactly zero.
pub const MASK_LOGIT: f64 = -1e9;

#[derive(Debug, Error, PartialEq)]
pub enum LesaError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Learnable projection weights for one attention layer. All three are
/// D×D and shared between the token and the label streams.
#[derive(Debug, Clone, PartialEq)]
pub struct LesaParams {
    pub w_k: Array2<f64>,
    pub w_q: Array2<f64>,
    pub w_v: Array2<f64>,
    pub heads: usize,
    pub head_dim: usize,
}

impl LesaParams {
    pub fn new(
        w_k: Array2<f64>,
        w_q: Array2<f64>,
        w_v: Array2<f64>,
        heads: usize,
    ) -> Result<Self, LesaError> {
        let d_model = w_k.nrows();
        for (name, w) in [("w_k", &w_k), ("w_q", &w_q), ("w_v", &w_v)] {
            if w.dim() != (d_model, d_model) {
                return Err(LesaError::Shape(format!(
                    "{name} is {:?}, expected ({d_model}, {d_model})",
                    w.dim()
                )));
            }
        }
        if heads == 0 || d_model % heads != 0 {
            return Err(LesaError::Shape(format!(
                "model dim {d_model} not divisible into {heads} heads"
            )));
        }
        Ok(LesaParams { w_k, w_q, w_v, heads, head_dim: d_model / heads })
    }

    pub fn d_model(&self) -> usize {
        self.w_k.nrows()
    }
}

/// Per-call behavior switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LesaOptions {
    /// Number of valid rows of X counting the sentinel; key columns at and
    /// beyond this index are masked out of both attention terms. `None`
    /// means the whole sequence is valid.
    pub valid_len: Option<usize>,
    /// When false the CoSim term is skipped and the layer reduces to plain
    /// multi-head self-attention.
    pub cosim: bool,
}

impl Default for LesaOptions {
    fn default() -> Self {
        LesaOptions { valid_len: None, cosim: true }
    }
}

/// Every intermediate of the forward pass, kept for the backward pass and
/// for attention-map export.
#[derive(Debug, Clone)]
pub struct LesaActivations {
    pub x: Array2<f64>,
    pub x_l: Array2<f64>,
    pub k: Array2<f64>,
    pub q: Array2<f64>,
    pub v: Array2<f64>,
    pub k_l: Array2<f64>,
    pub q_l: Array2<f64>,
    pub v_l: Array2<f64>,
    /// A_h with mask applied, one (L+1)×(L+1) matrix per head.
    pub attn_logits: Vec<Array2<f64>>,
    /// softmax(A_h); every row sums to 1.
    pub self_attn: Vec<Array2<f64>>,
    /// A^l_h after column masking, n×(L+1) per head.
    pub label_affinity: Vec<Array2<f64>>,
    /// Row-normalized A^l_h (zero rows stay zero).
    pub label_affinity_norm: Vec<Array2<f64>>,
    /// norm(A^l_h)^T norm(A^l_h); empty when CoSim is disabled.
    pub cosim: Vec<Array2<f64>>,
    /// SelfAttn_h + CoSim_h (or SelfAttn_h alone when disabled).
    pub new_attn: Vec<Array2<f64>>,
    /// Concatenated head outputs, (L+1)×D.
    pub output: Array2<f64>,
    pub options: LesaOptions,
}

/// Gradients mirroring the forward inputs.
#[derive(Debug, Clone)]
pub struct LesaGradients {
    pub d_x: Array2<f64>,
    pub d_x_l: Array2<f64>,
    pub d_w_k: Array2<f64>,
    pub d_w_q: Array2<f64>,
    pub d_w_v: Array2<f64>,
}

/// Forward pass with default options (no mask, CoSim on). Returns the
/// output features and the full activation record.
pub fn lesa_forward(
    x: &Array2<f64>,
    x_l: &Array2<f64>,
    params: &LesaParams,
) -> Result<(Array2<f64>, LesaActivations), LesaError> {
    let acts = lesa_forward_with(x, x_l, params, LesaOptions::default())?;
    Ok((acts.output.clone(), acts))
}

pub fn lesa_forward_with(
    x: &Array2<f64>,
    x_l: &Array2<f64>,
    params: &LesaParams,
    options: LesaOptions,
) -> Result<LesaActivations, LesaError> {
    let d_model = params.d_model();
    let rows = x.nrows();
    if x.ncols() != d_model {
        return Err(LesaError::Shape(format!(
            "X has {} columns, expected {d_model}",
            x.ncols()
        )));
    }
    if x_l.ncols() != d_model {
        return Err(LesaError::Shape(format!(
            "X_l has {} columns, expected {d_model}",
            x_l.ncols()
        )));
    }
    if rows < 2 {
        return Err(LesaError::Shape(format!(
            "X has {rows} rows; need the sentinel plus at least one token"
        )));
    }
    if x_l.nrows() == 0 {
        return Err(LesaError::Shape("X_l has no label rows".into()));
    }
    if let Some(valid) = options.valid_len {
        if valid < 2 || valid > rows {
            return Err(LesaError::Shape(format!(
                "valid_len {valid} out of range 2..={rows}"
            )));
        }
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LesaError::NonFinite("X"));
    }
    if !x_l.iter().all(|v| v.is_finite()) {
        return Err(LesaError::NonFinite("X_l"));
    }

    let (heads, d) = (params.heads, params.head_dim);
    let scale = 1.0 / (d as f64).sqrt();
    let valid = options.valid_len.unwrap_or(rows);

    let k = x.dot(&params.w_k);
    let q = x.dot(&params.w_q);
    let v = x.dot(&params.w_v);
    let k_l = x_l.dot(&params.w_k);
    let q_l = x_l.dot(&params.w_q);
    let v_l = x_l.dot(&params.w_v);

    let mut attn_logits = Vec::with_capacity(heads);
    let mut self_attn = Vec::with_capacity(heads);
    let mut label_affinity = Vec::with_capacity(heads);
    let mut label_affinity_norm = Vec::with_capacity(heads);
    let mut cosim = Vec::with_capacity(heads);
    let mut new_attn = Vec::with_capacity(heads);
    let mut output = Array2::<f64>::zeros((rows, d_model));

    for h in 0..heads {
        let cols = s![.., h * d..(h + 1) * d];
        let k_h = k.slice(cols);
        let q_h = q.slice(cols);
        let v_h = v.slice(cols);
        let q_l_h = q_l.slice(cols);

        let mut a_h = q_h.dot(&k_h.t()) * scale;
        for j in valid..rows {
            a_h.column_mut(j).iter_mut().for_each(|x| *x += MASK_LOGIT);
        }
        let s_h = softmax_rows(&a_h);

        let mut a_l_h = q_l_h.dot(&k_h.t()) * scale;
        for j in valid..rows {
            a_l_h.column_mut(j).fill(0.0);
        }
        let m_h = l2_normalize_rows(&a_l_h);

        let na_h = if options.cosim {
            let c_h = m_h.t().dot(&m_h);
            let na = &s_h + &c_h;
            cosim.push(c_h);
            na
        } else {
            s_h.clone()
        };

        output.slice_mut(cols).assign(&na_h.dot(&v_h));
        attn_logits.push(a_h);
        self_attn.push(s_h);
        label_affinity.push(a_l_h);
        label_affinity_norm.push(m_h);
        new_attn.push(na_h);
    }

    Ok(LesaActivations {
        x: x.clone(),
        x_l: x_l.clone(),
        k,
        q,
        v,
        k_l,
        q_l,
        v_l,
        attn_logits,
        self_attn,
        label_affinity,
        label_affinity_norm,
        cosim,
        new_attn,
        output,
        options,
    })
}

/// Backward pass. `upstream` is dLoss/dO with the output's shape; the
/// returned gradients match the shapes of X, X_l, and the three weight
/// matrices.
pub fn lesa_backward(
    params: &LesaParams,
    acts: &LesaActivations,
    upstream: &Array2<f64>,
) -> Result<LesaGradients, LesaError> {
    if upstream.dim() != acts.output.dim() {
        return Err(LesaError::Shape(format!(
            "upstream gradient is {:?}, output is {:?}",
            upstream.dim(),
            acts.output.dim()
        )));
    }
    let (heads, d) = (params.heads, params.head_dim);
    let d_model = params.d_model();
    let rows = acts.x.nrows();
    let n_labels = acts.x_l.nrows();
    let scale = 1.0 / (d as f64).sqrt();
    let valid = acts.options.valid_len.unwrap_or(rows);

    let mut d_k = Array2::<f64>::zeros((rows, d_model));
    let mut d_q = Array2::<f64>::zeros((rows, d_model));
    let mut d_v = Array2::<f64>::zeros((rows, d_model));
    // K_l and V_l are projected for interface fidelity but never read, so
    // their gradients stay zero.
    let d_k_l = Array2::<f64>::zeros((n_labels, d_model));
    let mut d_q_l = Array2::<f64>::zeros((n_labels, d_model));

    for h in 0..heads {
        let cols = s![.., h * d..(h + 1) * d];
        let k_h = acts.k.slice(cols);
        let q_h = acts.q.slice(cols);
        let v_h = acts.v.slice(cols);
        let q_l_h = acts.q_l.slice(cols);
        let d_o_h = upstream.slice(cols);

        let na_h = &acts.new_attn[h];
        let d_new_attn = d_o_h.dot(&v_h.t());
        d_v.slice_mut(cols).assign(&na_h.t().dot(&d_o_h));

        // softmax branch
        let d_a = softmax_backward_rows(&acts.self_attn[h], &d_new_attn);
        {
            let mut d_q_h = d_q.slice_mut(cols);
            d_q_h += &(d_a.dot(&k_h) * scale);
            let mut d_k_h = d_k.slice_mut(cols);
            d_k_h += &(d_a.t().dot(&q_h) * scale);
        }

        // CoSim branch
        if acts.options.cosim {
            let m_h = &acts.label_affinity_norm[h];
            let sym = &d_new_attn + &d_new_attn.t();
            let d_m = m_h.dot(&sym);
            let mut d_a_l =
                l2_normalize_rows_backward(&acts.label_affinity[h], m_h, &d_m);
            for j in valid..rows {
                d_a_l.column_mut(j).fill(0.0);
            }
            let mut d_q_l_h = d_q_l.slice_mut(cols);
            d_q_l_h += &(d_a_l.dot(&k_h) * scale);
            let mut d_k_h = d_k.slice_mut(cols);
            d_k_h += &(d_a_l.t().dot(&q_l_h) * scale);
        }
    }

    let d_w_k = acts.x.t().dot(&d_k) + acts.x_l.t().dot(&d_k_l);
    let d_w_q = acts.x.t().dot(&d_q) + acts.x_l.t().dot(&d_q_l);
    let d_w_v = acts.x.t().dot(&d_v);
    let d_x = d_k.dot(&params.w_k.t()) + d_q.dot(&params.w_q.t()) + d_v.dot(&params.w_v.t());
    let d_x_l = d_k_l.dot(&params.w_k.t()) + d_q_l.dot(&params.w_q.t());

    Ok(LesaGradients { d_x, d_x_l, d_w_k, d_w_q, d_w_v })
}
