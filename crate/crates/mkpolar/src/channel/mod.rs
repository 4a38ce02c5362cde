//! Binary-input memoryless symmetric channels.
//!
//! A channel is kept as its BSC-mixture decomposition: a list of `(q, p)`
//! with `p` in `[0, 1/2]`, strictly increasing. The symbol table (the pairs
//! `(W(y|0), W(y|1))`) is derived from it in canonical order, ascending in the
//! posterior `p(0|y)` and then by mass. Symbols with `w0 = w1` are carried as
//! two half-mass symbols so every channel has an exact mixture form.

mod binning;
mod io;
mod transform;

pub use binning::{degrade_bin, upgrade_bin};
pub use io::{ChannelFile, MixtureFile, SymbolFile};
pub use transform::{arikan_pair, arikan_pair_binned, bit_channels, bit_channels_with_budget};

pub(crate) use binning::Binner;

use crate::{Error, Real, Result};

/// Binary entropy in bits.
pub fn binary_entropy<T: Real>(p: T) -> T {
    let half = T::lit(0.5);
    let p = if p > half { T::one() - p } else { p };
    if p <= T::zero() {
        return T::zero();
    }
    let inv_ln2 = T::LOG2_E();
    if p < T::lit(1e-12) {
        // -(1-p) log2(1-p) = p/ln2 + O(p^2)
        return p * (-p.log2() + inv_ln2);
    }
    -p * p.log2() - (T::one() - p) * (-p).ln_1p() * inv_ln2
}

/// BSC mixture `Σ q_i BSC(p_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BscMixture<T> {
    components: Vec<(T, T)>,
}

impl<T: Real> BscMixture<T> {
    /// Validates a user supplied mixture. Equal crossovers are merged.
    pub fn new(components: Vec<(T, T)>) -> Result<Self> {
        let tol = T::tolerance();
        let half = T::lit(0.5);
        let mut total = T::zero();
        for (i, &(q, p)) in components.iter().enumerate() {
            if !q.is_finite() || !p.is_finite() {
                return Err(Error::InvalidChannel(format!("component {i} is not finite")));
            }
            if q < T::zero() || q > T::one() + tol {
                return Err(Error::InvalidChannel(format!("component {i}: mass {q} outside [0,1]")));
            }
            if p < -tol || p > half + tol {
                return Err(Error::InvalidChannel(format!(
                    "component {i}: crossover {p} outside [0,1/2]"
                )));
            }
            total = total + q;
        }
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidChannel(format!("mixture masses sum to {total}")));
        }
        let comps = components
            .into_iter()
            .map(|(q, p)| (q, p.max(T::zero()).min(half)))
            .collect();
        Ok(Self::from_weighted(comps))
    }

    /// Sorts, merges equal crossovers, drops empty components and renormalizes.
    pub(crate) fn from_weighted(mut comps: Vec<(T, T)>) -> Self {
        comps.retain(|&(q, _)| q > T::zero());
        comps.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let mut merged: Vec<(T, T)> = Vec::with_capacity(comps.len());
        for (q, p) in comps {
            match merged.last_mut() {
                Some(last) if last.1 == p => last.0 = last.0 + q,
                _ => merged.push((q, p)),
            }
        }
        let total = merged.iter().fold(T::zero(), |s, c| s + c.0);
        // sums already at 1 up to rounding are left alone so files round-trip exactly
        if total > T::zero() && (total - T::one()).abs() > T::epsilon() * T::lit(64.0) {
            for c in &mut merged {
                c.0 = c.0 / total;
            }
        }
        Self { components: merged }
    }

    pub fn components(&self) -> &[(T, T)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn entropy(&self) -> T {
        let h = self
            .components
            .iter()
            .fold(T::zero(), |s, &(q, p)| s + q * binary_entropy(p));
        h.max(T::zero()).min(T::one())
    }

    pub fn bhattacharyya(&self) -> T {
        let two = T::lit(2.0);
        let z = self
            .components
            .iter()
            .fold(T::zero(), |s, &(q, p)| s + q * two * (p * (T::one() - p)).sqrt());
        z.max(T::zero()).min(T::one())
    }
}

/// A BMS channel. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BmsChannel<T> {
    mixture: BscMixture<T>,
}

impl<T: Real> BmsChannel<T> {
    /// Builds a channel from raw `(W(y|0), W(y|1))` pairs.
    ///
    /// All-zero symbols are dropped. Symbols are paired by crossover
    /// `min/(w0+w1)`; within each crossover class the mass with `w0 > w1`
    /// must match the mass with `w0 < w1`.
    pub fn from_symbols(symbols: &[(T, T)]) -> Result<Self> {
        let tol = T::tolerance();
        let half = T::lit(0.5);
        let (mut s0, mut s1) = (T::zero(), T::zero());
        // (crossover, mass, sign) with sign +1 for w0 > w1, -1 for w0 < w1, 0 for ties
        let mut items: Vec<(T, T, i8)> = Vec::with_capacity(symbols.len());
        for (i, &(w0, w1)) in symbols.iter().enumerate() {
            if !w0.is_finite() || !w1.is_finite() {
                return Err(Error::InvalidChannel(format!("symbol {i} is not finite")));
            }
            if w0 < T::zero() || w1 < T::zero() || w0 > T::one() + tol || w1 > T::one() + tol {
                return Err(Error::InvalidChannel(format!("symbol {i}: ({w0}, {w1}) outside [0,1]")));
            }
            s0 = s0 + w0;
            s1 = s1 + w1;
            let m = w0 + w1;
            if m == T::zero() {
                continue;
            }
            let sign = if w0 > w1 {
                1
            } else if w0 < w1 {
                -1
            } else {
                0
            };
            items.push((w0.min(w1) / m, m, sign));
        }
        if (s0 - T::one()).abs() > tol || (s1 - T::one()).abs() > tol {
            return Err(Error::InvalidChannel(format!(
                "transition probabilities sum to ({s0}, {s1}), expected (1, 1)"
            )));
        }
        items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut comps = Vec::new();
        let mut i = 0;
        while i < items.len() {
            let start = items[i].0;
            let (mut plus, mut minus, mut tie, mut moment) = (T::zero(), T::zero(), T::zero(), T::zero());
            let mut j = i;
            while j < items.len() && items[j].0 - start <= tol {
                let (c, m, sign) = items[j];
                match sign {
                    1 => plus = plus + m,
                    -1 => minus = minus + m,
                    _ => tie = tie + m,
                }
                moment = moment + m * c;
                j += 1;
            }
            let mass = plus + minus + tie;
            if half - start <= tol {
                comps.push((mass / T::lit(2.0), half));
            } else {
                if (plus - minus).abs() > tol {
                    return Err(Error::SymmetryViolation(format!(
                        "crossover {start}: mass {plus} with w0 > w1 but {minus} with w0 < w1"
                    )));
                }
                comps.push((mass / T::lit(2.0), (moment / mass).min(half)));
            }
            i = j;
        }
        Ok(Self { mixture: BscMixture::from_weighted(comps) })
    }

    pub fn from_mixture(mixture: BscMixture<T>) -> Self {
        Self { mixture }
    }

    pub fn mixture(&self) -> &BscMixture<T> {
        &self.mixture
    }

    pub fn to_mixture(&self) -> BscMixture<T> {
        self.mixture.clone()
    }

    /// Canonical symbol table, ascending in `p(0|y)`.
    pub fn symbols(&self) -> Vec<(T, T)> {
        let half = T::lit(0.5);
        let comps = self.mixture.components();
        let mut out = Vec::with_capacity(2 * comps.len());
        for &(q, p) in comps {
            if p == half {
                let h = q / T::lit(2.0);
                out.push((h, h));
                out.push((h, h));
            } else {
                out.push((q * p, q * (T::one() - p)));
            }
        }
        for &(q, p) in comps.iter().rev() {
            if p != half {
                out.push((q * (T::one() - p), q * p));
            }
        }
        out
    }

    /// Length of [`symbols`](Self::symbols), counting the split halves of a
    /// `w0 = w1` symbol separately.
    pub fn num_symbols(&self) -> usize {
        2 * self.mixture.len()
    }

    /// Alphabet size with a `w0 = w1` symbol counted once.
    pub fn output_size(&self) -> usize {
        let half = T::lit(0.5);
        let n = 2 * self.mixture.len();
        match self.mixture.components().last() {
            Some(&(_, p)) if p == half => n - 1,
            _ => n,
        }
    }

    pub fn entropy(&self) -> T {
        self.mixture.entropy()
    }

    pub fn bhattacharyya(&self) -> T {
        self.mixture.bhattacharyya()
    }

    pub fn capacity(&self) -> T {
        T::one() - self.entropy()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> BmsChannel<U> {
        let comps = self
            .mixture
            .components()
            .iter()
            .map(|&(q, p)| (U::lit(q.f64()), U::lit(p.f64())))
            .collect();
        BmsChannel { mixture: BscMixture::from_weighted(comps) }
    }

    /// Component-wise comparison of the mixtures.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        let a = self.mixture.components();
        let b = other.mixture.components();
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol)
    }
}

/// Binary symmetric channel with crossover `p`.
pub fn bsc<T: Real>(p: T) -> Result<BmsChannel<T>> {
    if !(p >= T::zero() && p <= T::lit(0.5)) {
        return Err(Error::InvalidArgument(format!("bsc crossover {p} outside [0, 1/2]")));
    }
    BmsChannel::from_symbols(&[(T::one() - p, p), (p, T::one() - p)])
}

/// Binary erasure channel with erasure probability `eps`.
pub fn bec<T: Real>(eps: T) -> Result<BmsChannel<T>> {
    if !(eps >= T::zero() && eps <= T::one()) {
        return Err(Error::InvalidArgument(format!("bec erasure probability {eps} outside [0, 1]")));
    }
    let keep = T::one() - eps;
    BmsChannel::from_symbols(&[(keep, T::zero()), (eps, eps), (T::zero(), keep)])
}

/// The noiseless channel.
pub fn noiseless<T: Real>() -> BmsChannel<T> {
    BmsChannel::from_mixture(BscMixture::from_weighted(vec![(T::one(), T::zero())]))
}
