//! Layered encoder and successive-cancellation decoder.
//!
//! The decoder walks the kernel tree: at node `(j, b)` with `n = l^(t-j)`
//! LLRs, output block `r` (positions `r l .. r l + l`) equals
//! `(c_1[r], .., c_l[r]) K` where `c_i` is the codeword of child `i`. Child
//! `i` therefore sees LLR `r` as the local bit-channel LLR of input `i` of
//! block `r`, given the re-encoded words of children `1..i`.

mod llr;

pub use llr::{local_kernel_llr, log_sum_exp};

use crate::construct::ConstructionPlan;
use crate::{Error, Real, Result};

/// Default LLR clamp, natural-log units.
pub const LLR_CLAMP: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitWord {
    bits: Vec<u8>,
}

impl BitWord {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(p) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidArgument(format!("bit {p} is not 0/1")));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    /// Whitespace separated 0/1.
    pub fn to_line(&self) -> String {
        self.bits.iter().map(|b| if *b == 1 { "1" } else { "0" }).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let bits = line
            .split_whitespace()
            .map(|s| match s {
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(Error::Parse(format!("expected 0 or 1, got {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }
}

/// Channel LLRs `ln W(y|0)/W(y|1)`, finite and clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrWord<T> {
    values: Vec<T>,
}

impl<T: Real> LlrWord<T> {
    /// Clamps to `±LLR_CLAMP`; NaN is rejected.
    pub fn new(values: Vec<T>) -> Result<Self> {
        Self::with_clamp(values, T::lit(LLR_CLAMP))
    }

    pub fn with_clamp(mut values: Vec<T>, clamp: T) -> Result<Self> {
        for (i, v) in values.iter_mut().enumerate() {
            if v.is_nan() {
                return Err(Error::NanInput(i));
            }
            *v = v.max(-clamp).min(clamp);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Noiseless observation of a codeword: `+clamp` for 0, `-clamp` for 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let c = T::lit(LLR_CLAMP);
        Self { values: bits.iter().map(|&b| if b == 0 { c } else { -c }).collect() }
    }

    pub fn to_line(&self) -> String {
        self.values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let values = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Parse(format!("expected a number, got {s:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        Self::new(values)
    }
}

/// Scatters `message` into the good positions and applies the layers
/// `D^(t-1), Q^(t-1), .., D^(0)`.
pub fn encode(plan: &ConstructionPlan, message: &[u8]) -> Result<BitWord> {
    let good = plan.good_set().indices();
    if message.len() != good.len() {
        return Err(Error::LengthMismatch { expected: good.len(), got: message.len() });
    }
    let mut u = vec![0u8; plan.n()];
    for (&i, &m) in good.iter().zip(message) {
        if m > 1 {
            return Err(Error::InvalidArgument("message bits must be 0/1".into()));
        }
        u[i] = m;
    }
    Ok(BitWord { bits: transform(plan, u) })
}

/// `u M` through the stored layers.
pub fn transform(plan: &ConstructionPlan, mut v: Vec<u8>) -> Vec<u8> {
    let ell = plan.ell();
    let mut scratch = vec![0u8; v.len()];
    for j in (0..plan.t()).rev() {
        let nodes = ell.pow(j as u32);
        for (b, block) in v.chunks_mut(ell).enumerate() {
            let k = plan.kernel(j, b % nodes);
            let x = k.apply(block);
            block.copy_from_slice(&x);
        }
        if j >= 1 {
            for (&x, &p) in v.iter().zip(plan.permutation(j)) {
                scratch[p as usize] = x;
            }
            std::mem::swap(&mut v, &mut scratch);
        }
    }
    v
}

/// Decoded message and the full estimate of `U`.
pub fn sc_decode<T: Real>(plan: &ConstructionPlan, llrs: &LlrWord<T>) -> Result<(Vec<u8>, BitWord)> {
    let (u, _) = sc_decode_trace(plan, llrs)?;
    let msg = plan.good_set().indices().iter().map(|&i| u.bits[i]).collect();
    Ok((msg, u))
}

/// [`sc_decode`] plus the bit-channel LLR computed for every `U_i`.
pub fn sc_decode_trace<T: Real>(plan: &ConstructionPlan, llrs: &LlrWord<T>) -> Result<(BitWord, Vec<T>)> {
    let n = plan.n();
    if llrs.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: llrs.len() });
    }
    if let Some(i) = llrs.values().iter().position(|v| v.is_nan()) {
        return Err(Error::NanInput(i));
    }
    let mut u = vec![0u8; n];
    let mut trace = vec![T::zero(); n];
    let mut dec = Decoder { plan, good: plan.good_set(), u: &mut u, trace: &mut trace };
    dec.node(0, 0, llrs.values());
    Ok((BitWord { bits: u }, trace))
}

struct Decoder<'a, T> {
    plan: &'a ConstructionPlan,
    good: &'a crate::construct::IndexSet,
    u: &'a mut [u8],
    trace: &'a mut [T],
}

impl<T: Real> Decoder<'_, T> {
    /// Decodes the subtree of node `b` on level `j`; returns its codeword.
    fn node(&mut self, j: usize, b: usize, llr: &[T]) -> Vec<u8> {
        if j == self.plan.t() {
            let l = llr[0];
            self.trace[b] = l;
            let bit = if self.good.contains(b) && l < T::zero() { 1 } else { 0 };
            self.u[b] = bit;
            return vec![bit];
        }
        let ell = self.plan.ell();
        let k = self.plan.kernel(j, b).clone();
        let m = llr.len() / ell;
        let mut words: Vec<Vec<u8>> = Vec::with_capacity(ell);
        let mut child = vec![T::zero(); m];
        let mut prefix = Vec::with_capacity(ell);
        for i in 0..ell {
            for r in 0..m {
                prefix.clear();
                prefix.extend(words.iter().map(|w| w[r]));
                child[r] = local_kernel_llr(&k, &llr[r * ell..(r + 1) * ell], &prefix, i + 1);
            }
            let w = self.node(j + 1, b * ell + i, &child);
            words.push(w);
        }
        let mut x = vec![0u8; llr.len()];
        let mut block = vec![0u8; ell];
        for r in 0..m {
            for i in 0..ell {
                block[i] = words[i][r];
            }
            x[r * ell..(r + 1) * ell].copy_from_slice(&k.apply(&block));
        }
        x
    }
}
