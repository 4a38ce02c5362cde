//! Bit-decoding entropies of random linear codes.
//!
//! For a `k x l` generator `G`, `V` uniform on `{0,1}^k` and `Y = W^l(V G)`,
//! [`bit_entropy_exact`] computes `H(V_1 | Y)`. By channel symmetry and
//! linearity it suffices to sum over outputs of the all-zero codeword:
//! `H(V_1|Y) = Σ_y P(y | 0) h(P(V_1 = 0 | y))`.

mod scan;

pub use scan::{sharp_transition_scan, ConverseScan, ScanRecord};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{binary_entropy, bit_channels_with_budget, BmsChannel};
use crate::kernel::Kernel;
use crate::rng::{derive_seed, SplitMix64};
use crate::{Error, Result, DEFAULT_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    ell: usize,
    /// Row `r` has bit `c` set for `G[r][c] = 1`; row 0 carries `V_1`.
    rows: Vec<u64>,
}

impl GeneratorMatrix {
    pub fn new(ell: usize, rows: Vec<u64>) -> Result<Self> {
        if rows.is_empty() || rows.len() > ell || ell > 63 {
            return Err(Error::InvalidArgument(format!("generator needs 1 <= k <= l <= 63, got k = {}, l = {ell}", rows.len())));
        }
        if rows.iter().any(|&r| r >> ell != 0) {
            return Err(Error::InvalidArgument("generator row has bits beyond column l".into()));
        }
        Ok(Self { ell, rows })
    }

    /// The last `l - i + 1` rows of `K` (`i` is 1-based).
    pub fn from_kernel_suffix(k: &Kernel, i: usize) -> Result<Self> {
        if i < 1 || i > k.ell() {
            return Err(Error::InvalidArgument(format!("position {i} outside 1..={}", k.ell())));
        }
        Self::new(k.ell(), k.rows()[i - 1..].to_vec())
    }

    /// Uniform `k x l` matrix: row `r` is the low `l` bits of the `r`-th
    /// SplitMix64 output.
    pub fn random(k: usize, ell: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mask = (1u64 << ell) - 1;
        Self::new(ell, (0..k).map(|_| rng.next_u64() & mask).collect())
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// `vG` for every `v`, indexed with `v_1` as bit 0.
    pub fn codewords(&self) -> Vec<u64> {
        let k = self.k();
        let mut out = vec![0u64; 1 << k];
        for v in 1..out.len() {
            let low = v.trailing_zeros() as usize;
            out[v] = out[v & (v - 1)] ^ self.rows[low];
        }
        out
    }
}

/// Per-position outcomes under input 0: `(probability, a0, a1)` where the
/// likelihood of the outcome given code bit `c` is proportional to `a_c`.
fn outcomes(w: &BmsChannel<f64>) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &(q, p) in w.mixture().components() {
        if p == 0.0 {
            out.push((q, 1.0, 0.0));
        } else if p == 0.5 {
            out.push((q, 1.0, 1.0));
        } else {
            out.push((q * (1.0 - p), 1.0 - p, p));
            out.push((q * p, p, 1.0 - p));
        }
    }
    out
}

fn check_budget(e: usize, ell: usize, k: usize, budget: u64) -> Result<()> {
    let needed = (e as u128).checked_pow(ell as u32).unwrap_or(u128::MAX).saturating_mul(1u128 << k);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

pub fn bit_entropy_exact(g: &GeneratorMatrix, w: &BmsChannel<f64>) -> Result<f64> {
    bit_entropy_exact_with_budget(g, w, DEFAULT_BUDGET)
}

/// Exact `H(V_1 | Y)` by enumerating every output under the zero codeword
/// and every message. Cost `|E|^l 2^k` with `E` the outcomes per position
/// (a `w0 = w1` symbol counts once, noiseless components once).
pub fn bit_entropy_exact_with_budget(g: &GeneratorMatrix, w: &BmsChannel<f64>, budget: u64) -> Result<f64> {
    let ell = g.ell();
    let outs = outcomes(w);
    let e = outs.len();
    check_budget(e, ell, g.k(), budget)?;
    let words = g.codewords();
    // split the positions: c = (low h bits, high l - h bits)
    let h = ell / 2;
    let (na, nb) = (1usize << h, 1usize << (ell - h));
    let table = |ys: &[usize], size: usize| -> (f64, Vec<f64>) {
        let mut prob = 1.0;
        let mut t = vec![1.0f64; size];
        for (j, &y) in ys.iter().enumerate() {
            let (p, a0, a1) = outs[y];
            prob *= p;
            for (m, v) in t.iter_mut().enumerate() {
                *v *= if m >> j & 1 == 1 { a1 } else { a0 };
            }
        }
        (prob, t)
    };
    let index_to_ys = |mut x: usize, len: usize| {
        let mut ys = vec![0usize; len];
        for y in ys.iter_mut() {
            *y = x % e;
            x /= e;
        }
        ys
    };
    let count_a = e.pow(h as u32);
    let count_b = e.pow((ell - h) as u32);
    let mask_a = (na - 1) as u64;

    let partial = |ia: usize| -> f64 {
        let (pa, ta) = table(&index_to_ys(ia, h), na);
        if pa == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for ib in 0..count_b {
            let (pb, tb) = table(&index_to_ys(ib, ell - h), nb);
            let p = pa * pb;
            if p == 0.0 {
                continue;
            }
            let (mut zero, mut all) = (0.0, 0.0);
            for (v, &c) in words.iter().enumerate() {
                let l = ta[(c & mask_a) as usize] * tb[(c >> h) as usize];
                all += l;
                if v & 1 == 0 {
                    zero += l;
                }
            }
            if all > 0.0 {
                acc += p * binary_entropy(zero / all);
            }
        }
        acc
    };
    let parts: Vec<f64> = (0..count_a).into_par_iter().map(partial).collect();
    Ok(parts.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// `B_g(d, y) = #{v != 0 : wt(v g + y) = d}` for `d = 0..=l`.
pub fn shifted_weight_distribution(g: &GeneratorMatrix, y: u64) -> Result<Vec<u64>> {
    check_budget(1, 0, g.k(), DEFAULT_BUDGET)?;
    if y >> g.ell() != 0 {
        return Err(Error::InvalidArgument("shift has bits beyond column l".into()));
    }
    let mut hist = vec![0u64; g.ell() + 1];
    for &c in &g.codewords()[1..] {
        hist[(c ^ y).count_ones() as usize] += 1;
    }
    Ok(hist)
}

/// `(lhs, rhs, |lhs - rhs|)` with `lhs = H(W_i)` from the bit-channel
/// synthesis and `rhs = H(V_1 | Y)` for the last `l - i + 1` rows of `K`.
pub fn arikan_bit_identity_check(w: &BmsChannel<f64>, k: &Kernel, i: usize) -> Result<(f64, f64, f64)> {
    let g = GeneratorMatrix::from_kernel_suffix(k, i)?;
    let lhs = bit_channels_with_budget(w, k, None, DEFAULT_BUDGET)?[i - 1].entropy();
    let rhs = bit_entropy_exact(&g, w)?;
    Ok((lhs, rhs, (lhs - rhs).abs()))
}

/// Fractions of zero-input outputs meeting the two typicality conditions
/// (logs base 2, `d_i` = positions using component `i`, `t_i` = flips among them):
/// `Σ (l q_i - d_i) h(p_i) <= 2 sqrt(l) log l` and
/// `Σ (p_i d_i - t_i) log((1-p_i)/p_i) <= 3 sqrt(l) log^2 l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub ell: usize,
    pub samples: u64,
    pub entropy_bound: f64,
    pub coordinate_bound: f64,
    pub entropy_ok: u64,
    pub coordinate_ok: u64,
    pub both_ok: u64,
}

impl TypicalityReport {
    fn frac(&self, x: u64) -> Option<f64> {
        (self.samples > 0).then(|| x as f64 / self.samples as f64)
    }

    pub fn entropy_fraction(&self) -> Option<f64> {
        self.frac(self.entropy_ok)
    }

    pub fn coordinate_fraction(&self) -> Option<f64> {
        self.frac(self.coordinate_ok)
    }

    pub fn both_fraction(&self) -> Option<f64> {
        self.frac(self.both_ok)
    }
}

pub fn typicality_stats(w: &BmsChannel<f64>, ell: usize, samples: u64, seed: u64) -> Result<TypicalityReport> {
    if ell < 2 {
        return Err(Error::InvalidArgument("typicality needs l >= 2".into()));
    }
    let comps = w.mixture().components().to_vec();
    let l = ell as f64;
    let lg = l.log2();
    let entropy_bound = 2.0 * l.sqrt() * lg;
    let coordinate_bound = 3.0 * l.sqrt() * lg * lg;
    let weight: Vec<f64> = comps
        .iter()
        .map(|&(_, p)| if p == 0.0 || p == 0.5 { 0.0 } else { ((1.0 - p) / p).log2() })
        .collect();
    let mut cum = Vec::with_capacity(comps.len());
    let mut s = 0.0;
    for &(q, _) in &comps {
        s += q;
        cum.push(s);
    }

    let one = |i: u64| -> (bool, bool) {
        let mut rng = SplitMix64::new(derive_seed(seed, i));
        let mut d = vec![0u32; comps.len()];
        let mut t = vec![0u32; comps.len()];
        for _ in 0..ell {
            let u = rng.next_f64() * s;
            let c = cum.partition_point(|&x| x <= u).min(comps.len() - 1);
            d[c] += 1;
            if rng.next_f64() < comps[c].1 {
                t[c] += 1;
            }
        }
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (c, &(q, p)) in comps.iter().enumerate() {
            s1 += (l * q - d[c] as f64) * binary_entropy(p);
            s2 += (p * d[c] as f64 - t[c] as f64) * weight[c];
        }
        (s1 <= entropy_bound, s2 <= coordinate_bound)
    };
    let (a, b, both) = (0..samples)
        .into_par_iter()
        .map(one)
        .map(|(x, y)| (x as u64, y as u64, (x && y) as u64))
        .reduce(|| (0, 0, 0), |p, q| (p.0 + q.0, p.1 + q.1, p.2 + q.2));
    Ok(TypicalityReport { ell, samples, entropy_bound, coordinate_bound, entropy_ok: a, coordinate_ok: b, both_ok: both })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bec, bsc};

    #[test]
    fn trivial_values() {
        let g = GeneratorMatrix::new(4, vec![1, 2, 4, 8]).unwrap();
        assert_eq!(bit_entropy_exact(&g, &bsc(0.0).unwrap()).unwrap(), 0.0);
        assert!((bit_entropy_exact(&g, &bsc(0.5).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let g0 = GeneratorMatrix::new(4, vec![0, 3, 5]).unwrap();
        assert!((bit_entropy_exact(&g0, &bsc(0.11).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_over_bec() {
        // V_1 repeated on 3 erasure positions is lost only if all are erased
        let g = GeneratorMatrix::new(3, vec![0b111]).unwrap();
        let h = bit_entropy_exact(&g, &bec(0.4).unwrap()).unwrap();
        assert!((h - 0.064).abs() < 1e-15);
    }

    #[test]
    fn weight_histogram_counts() {
        let g = GeneratorMatrix::new(5, vec![0, 0, 0]).unwrap();
        assert_eq!(shifted_weight_distribution(&g, 0).unwrap(), vec![7, 0, 0, 0, 0, 0]);
        let g = GeneratorMatrix::random(4, 7, 3).unwrap();
        for y in 0..128 {
            assert_eq!(shifted_weight_distribution(&g, y).unwrap().iter().sum::<u64>(), 15);
        }
    }

    #[test]
    fn typicality_edge_cases() {
        let r = typicality_stats(&bsc(0.11).unwrap(), 16, 0, 1).unwrap();
        assert_eq!(r.both_fraction(), None);
        let r = typicality_stats(&bsc(0.11).unwrap(), 16, 500, 1).unwrap();
        // a single component always has d = l, so the first sum is 0
        assert_eq!(r.entropy_ok, 500);
    }

    #[test]
    fn identity_kernel_bits_see_the_channel() {
        let w = bsc(0.2).unwrap();
        for i in 1..=4 {
            let (lhs, rhs, gap) = arikan_bit_identity_check(&w, &Kernel::identity(4), i).unwrap();
            assert!((lhs - w.entropy()).abs() < 1e-12);
            assert!((rhs - w.entropy()).abs() < 1e-12);
            assert!(gap < 1e-12);
        }
    }
}
