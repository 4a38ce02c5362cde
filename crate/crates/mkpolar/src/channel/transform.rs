use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Binner, BmsChannel, BscMixture};
use crate::kernel::Kernel;
use crate::{Error, Real, Result, DEFAULT_BUDGET};

/// Collects `(mass, crossover)` contributions into a mixture, either exactly
/// (equal crossovers merged) or through degraded bins.
#[derive(Debug, Clone)]
pub(crate) enum Accumulator<T> {
    Exact(BTreeMap<u64, (T, T)>),
    Binned(Binner<T>),
}

impl<T: Real> Accumulator<T> {
    pub(crate) fn new(bin_q: Option<usize>) -> Self {
        match bin_q {
            Some(q) => Accumulator::Binned(Binner::new(q)),
            None => Accumulator::Exact(BTreeMap::new()),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, mass: T, p: T) {
        match self {
            Accumulator::Binned(b) => b.add(mass, p),
            Accumulator::Exact(map) => {
                if mass > T::zero() {
                    // crossovers are non-negative, so the bit pattern sorts numerically
                    let e = map.entry(p.f64().to_bits()).or_insert((T::zero(), p));
                    e.0 = e.0 + mass;
                }
            }
        }
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        match (self, other) {
            (Accumulator::Binned(a), Accumulator::Binned(b)) => a.merge(b),
            (Accumulator::Exact(a), Accumulator::Exact(b)) => {
                for (k, &(m, p)) in b {
                    let e = a.entry(*k).or_insert((T::zero(), p));
                    e.0 = e.0 + m;
                }
            }
            _ => unreachable!("mixed accumulator kinds"),
        }
    }

    pub(crate) fn finish(self) -> BscMixture<T> {
        match self {
            Accumulator::Binned(b) => b.finish(),
            Accumulator::Exact(map) => BscMixture::from_weighted(map.into_values().collect()),
        }
    }
}

fn pair_into<T: Real>(w: &BmsChannel<T>, minus: &mut Accumulator<T>, plus: &mut Accumulator<T>) {
    let comps = w.mixture().components();
    let one = T::one();
    let two = T::lit(2.0);
    for (a, &(qa, pa)) in comps.iter().enumerate() {
        for &(qb, pb) in &comps[a..] {
            let same = pa == pb;
            let mass = if same { qa * qa } else { two * qa * qb };
            let cross = pa * (one - pb) + pb * (one - pa);
            minus.add(mass, cross);

            let agree = (one - pa) * (one - pb) + pa * pb;
            plus.add(mass * agree, pa * pb / agree);
            if cross > T::zero() {
                let lo = (pa * (one - pb)).min((one - pa) * pb);
                plus.add(mass * cross, lo / cross);
            }
        }
    }
}

/// The two bit-channels of the 2x2 kernel `[[1,0],[1,1]]`, computed on the
/// mixture form. Returns `(W-, W+)`.
pub fn arikan_pair<T: Real>(w: &BmsChannel<T>) -> (BmsChannel<T>, BmsChannel<T>) {
    let mut minus = Accumulator::new(None);
    let mut plus = Accumulator::new(None);
    pair_into(w, &mut minus, &mut plus);
    (BmsChannel::from_mixture(minus.finish()), BmsChannel::from_mixture(plus.finish()))
}

/// [`arikan_pair`] with both outputs streamed through degraded `Q`-binning.
pub fn arikan_pair_binned<T: Real>(w: &BmsChannel<T>, q: usize) -> Result<(BmsChannel<T>, BmsChannel<T>)> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("bin count must be >= 2, got {q}")));
    }
    let mut minus = Accumulator::new(Some(q));
    let mut plus = Accumulator::new(Some(q));
    pair_into(w, &mut minus, &mut plus);
    Ok((BmsChannel::from_mixture(minus.finish()), BmsChannel::from_mixture(plus.finish())))
}

/// Bit-channels `W_1..W_l` of kernel `k` over channel `w`, with the default
/// enumeration budget.
pub fn bit_channels<T: Real>(w: &BmsChannel<T>, k: &Kernel, bin_q: Option<usize>) -> Result<Vec<BmsChannel<T>>> {
    bit_channels_with_budget(w, k, bin_q, DEFAULT_BUDGET)
}

/// Bit-channels by exhaustive enumeration of `y` in `Y^l`.
///
/// `W_i(y, u_<i | u_i) = 2^-(l-1) Σ_{u_>i} W^l(y | u K)`. For every `y` the
/// joint table `W^l(y | u K)` is built once and the bit-channel outputs
/// for all prefixes come out of running suffix sums, so the cost is about
/// `|Y|^l 2^l` accumulations. With `bin_q` the outputs go straight into
/// degraded bins and memory stays `O(l Q)`.
pub fn bit_channels_with_budget<T: Real>(
    w: &BmsChannel<T>,
    k: &Kernel,
    bin_q: Option<usize>,
    budget: u64,
) -> Result<Vec<BmsChannel<T>>> {
    if !k.is_invertible() {
        return Err(Error::InvalidArgument("bit_channels needs an invertible kernel".into()));
    }
    if let Some(q) = bin_q {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("bin count must be >= 2, got {q}")));
        }
    }
    let ell = k.ell();
    let syms = w.symbols();
    let s = syms.len();
    let needed = (s as u128).checked_pow(ell as u32).unwrap_or(u128::MAX).saturating_mul(1u128 << ell);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let size = 1usize << ell;
    // u is indexed with u_1 as the most significant bit; x with x_j at bit j
    let x_of_u: Vec<usize> = (0..size)
        .map(|u| {
            (0..ell)
                .filter(|r| u >> (ell - 1 - r) & 1 == 1)
                .fold(0u64, |x, r| x ^ k.row(r)) as usize
        })
        .collect();
    let scale = T::lit(0.5f64.powi(ell as i32 - 1));
    let half = T::lit(0.5);

    let chunk = |first: usize| -> Vec<Accumulator<T>> {
        let mut accs: Vec<Accumulator<T>> = (0..ell).map(|_| Accumulator::new(bin_q)).collect();
        // levels[j] holds prod_{m<j} W(y_m | x_m) for all x restricted to bits < j
        let mut levels: Vec<Vec<T>> = (0..=ell).map(|j| vec![T::zero(); 1 << j]).collect();
        levels[0][0] = T::one();
        let mut y = vec![0usize; ell];
        y[0] = first;
        let mut valid_from = 0;
        let mut a = vec![T::zero(); size];
        let mut buf = vec![T::zero(); size];
        loop {
            for j in valid_from..ell {
                let (w0, w1) = syms[y[j]];
                let (lo, hi) = levels.split_at_mut(j + 1);
                let prev = &lo[j];
                let next = &mut hi[0];
                let half_len = prev.len();
                for x in 0..half_len {
                    next[x] = prev[x] * w0;
                    next[x + half_len] = prev[x] * w1;
                }
            }
            let px = &levels[ell];
            for u in 0..size {
                a[u] = px[x_of_u[u]];
            }
            // suffix sums: at step i, a[..2^i] is indexed by u_1..u_i
            let mut len = size;
            for i in (0..ell).rev() {
                for p in 0..len / 2 {
                    let (w0, w1) = (a[2 * p], a[2 * p + 1]);
                    let m = w0 + w1;
                    if m > T::zero() {
                        accs[i].add(m * half * scale, w0.min(w1) / m);
                    }
                    buf[p] = m;
                }
                len /= 2;
                a[..len].copy_from_slice(&buf[..len]);
            }

            // odometer over y_2..y_l, last coordinate fastest
            let mut j = ell;
            loop {
                if j == 1 {
                    return accs;
                }
                j -= 1;
                y[j] += 1;
                if y[j] < s {
                    break;
                }
                y[j] = 0;
            }
            valid_from = j;
        }
    };

    let parts: Vec<Vec<Accumulator<T>>> = if (needed as f64) > 1e5 {
        (0..s).into_par_iter().map(chunk).collect()
    } else {
        (0..s).map(chunk).collect()
    };
    let mut parts = parts.into_iter();
    let mut total = parts.next().expect("channel has at least one symbol");
    for p in parts {
        for (acc, other) in total.iter_mut().zip(&p) {
            acc.merge(other);
        }
    }
    Ok(total.into_iter().map(|a| BmsChannel::from_mixture(a.finish())).collect())
}
