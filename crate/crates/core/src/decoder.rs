//! Flooding-schedule sum-product decoder.

use crate::error::{Error, Result};
use crate::protograph::{LiftedCode, ParityCheckMatrix};

/// Magnitude limit applied to a message before it enters `tanh(L / 2)`.
pub const TANH_CLAMP: f64 = 30.0;

/// Largest `|prod tanh|` handed to `atanh`, which bounds check-to-variable
/// messages at about 33.
const MAX_PRODUCT: f64 = 1.0 - 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Hard decisions (0/1), one per variable node.
    pub hard: Vec<u8>,
    pub posterior: Vec<f64>,
    pub iterations: usize,
    /// `true` iff the hard decisions satisfy every parity check.
    pub syndrome_ok: bool,
}

/// Sum-product decoder over a fixed parity-check matrix.
///
/// The decoder holds no mutable state, so one instance may serve concurrent
/// `decode` calls.
#[derive(Debug, Clone, Copy)]
pub struct BpDecoder<'a> {
    h: &'a ParityCheckMatrix,
}

impl<'a> BpDecoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix) -> Self {
        BpDecoder { h }
    }

    /// Decode channel LLRs (positive favours bit 0). Punctured positions are
    /// expected to carry exactly zero.
    pub fn decode(&self, llr: &[f64], max_iter: usize) -> Result<DecodeResult> {
        let h = self.h;
        if llr.len() != h.cols() {
            return Err(Error::DimensionMismatch {
                expected: h.cols(),
                actual: llr.len(),
            });
        }
        if let Some(pos) = llr.iter().position(|l| !l.is_finite()) {
            return Err(Error::NonFiniteLlr(pos));
        }
        if max_iter == 0 {
            return Err(Error::param("max_iter must be at least 1"));
        }

        let edges = h.nnz();
        let mut v2c: Vec<f64> = (0..edges).map(|e| llr[h.edge_var(e)]).collect();
        let mut c2v = vec![0.0; edges];
        let mut posterior = llr.to_vec();
        let mut hard = vec![0u8; h.cols()];
        let mut scratch = Vec::new();
        let mut iterations = 0;
        let mut syndrome_ok = false;

        while iterations < max_iter {
            iterations += 1;

            for r in 0..h.rows() {
                check_update(&v2c[h.row_edges(r)], &mut c2v[h.row_edges(r)], &mut scratch);
            }

            for (v, post) in posterior.iter_mut().enumerate() {
                let incoming = h.col_edges(v);
                let total = llr[v] + incoming.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                for &e in incoming {
                    v2c[e as usize] = total - c2v[e as usize];
                }
                *post = total;
                hard[v] = u8::from(total < 0.0);
            }

            syndrome_ok = h.is_codeword(&hard);
            if syndrome_ok {
                break;
            }
        }

        Ok(DecodeResult {
            hard,
            posterior,
            iterations,
            syndrome_ok,
        })
    }
}

/// `tanh(x / 2)` through `expm1`, which is cheaper than `tanh`.
#[inline]
fn half_tanh(x: f64) -> f64 {
    let e = x.exp_m1();
    e / (e + 2.0)
}

/// Tanh-rule update for one check node. `scratch` holds the prefix
/// products so no division by a near-zero factor is needed.
#[inline]
fn check_update(incoming: &[f64], outgoing: &mut [f64], scratch: &mut Vec<f64>) {
    let deg = incoming.len();
    scratch.clear();
    scratch.extend(
        incoming
            .iter()
            .map(|&l| half_tanh(l.clamp(-TANH_CLAMP, TANH_CLAMP))),
    );
    // outgoing[k] <- prefix product before k, then times the suffix.
    let mut prefix = 1.0;
    for k in 0..deg {
        outgoing[k] = prefix;
        prefix *= scratch[k];
    }
    let mut suffix = 1.0;
    for k in (0..deg).rev() {
        let p = (outgoing[k] * suffix).clamp(-MAX_PRODUCT, MAX_PRODUCT);
        // 2 atanh(p)
        outgoing[k] = ((1.0 + p) / (1.0 - p)).ln();
        suffix *= scratch[k];
    }
}

/// Decode with the code's parity-check matrix.
pub fn bp_decode(code: &LiftedCode, llr: &[f64], max_iter: usize) -> Result<DecodeResult> {
    BpDecoder::new(code.h()).decode(llr, max_iter)
}
