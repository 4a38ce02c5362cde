use serde::{Deserialize, Serialize};

use super::ConstructionPlan;
use crate::{Error, Result};

/// Bit set over `[N]` (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    bits: Vec<bool>,
}

impl IndexSet {
    pub fn empty(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut s = Self::empty(n);
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidArgument(format!("index {i} outside 0..{n}")));
            }
            s.bits[i] = true;
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.bits.len() == other.bits.len() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Hex bitmap; each character holds four indices, lowest index in the high bit.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|c| {
                let v = c.iter().enumerate().fold(0u32, |v, (k, &b)| v | ((b as u32) << (3 - k)));
                char::from_digit(v, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        if hex.len() != n.div_ceil(4) {
            return Err(Error::Parse(format!("good_set has {} hex digits, expected {}", hex.len(), n.div_ceil(4))));
        }
        let mut bits = vec![false; n];
        for (c, ch) in hex.chars().enumerate() {
            let v = ch.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit {ch:?}")))?;
            for k in 0..4 {
                let i = 4 * c + k;
                let b = v >> (3 - k) & 1 == 1;
                if i < n {
                    bits[i] = b;
                } else if b {
                    return Err(Error::Parse("good_set has bits past N".into()));
                }
            }
        }
        Ok(Self { bits })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorStrategy {
    EntropyThreshold,
    Staged,
}

/// Good-index selection rule.
///
/// `entropy_threshold` keeps leaves with `H_bin <= theta`.
///
/// `staged` (with `s = log2 l` and logs base 2) reads the index digits as
/// branch choices; the good bits of a digit `d` (0-based) are the ones in the
/// binary expansion of `d`. For a stage length `L(n)` (`stage_length` or
/// `floor(sqrt(n))`) an index passes checkpoint `n` when some
/// `m in {L, 2L, ..} <= n - L` has `Z_bin(ancestor at level m) < 2^(-c s m)` and
/// more than `beta s L` good bits among digits `m+1..m+L`. It is selected when
/// some `n in {L(t), 2L(t), ..} <= t - L(t)` passes and the digits `n+1..t`
/// carry more than `alpha_sel s t` good bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorParams {
    pub strategy: SelectorStrategy,
    pub theta: f64,
    pub stage_length: Option<usize>,
    /// `c` in the checkpoint bound `2^(-c s m)`.
    pub checkpoint_exponent: f64,
    pub beta: f64,
    pub alpha_sel: f64,
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self {
            strategy: SelectorStrategy::EntropyThreshold,
            theta: 1e-3,
            stage_length: None,
            checkpoint_exponent: 2.0,
            beta: 1.0 / 20.0,
            alpha_sel: 0.05,
        }
    }
}

impl SelectorParams {
    pub fn threshold(theta: f64) -> Self {
        Self { theta, ..Self::default() }
    }

    pub fn staged() -> Self {
        Self { strategy: SelectorStrategy::Staged, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta {} outside [0, 1]", self.theta)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidArgument(format!("beta {} outside (0, 1)", self.beta)));
        }
        if !(self.alpha_sel >= 0.0) || !(self.checkpoint_exponent >= 0.0) {
            return Err(Error::InvalidArgument("staged selector constants must be non-negative".into()));
        }
        if self.stage_length == Some(0) {
            return Err(Error::InvalidArgument("stage_length must be positive".into()));
        }
        Ok(())
    }
}

fn stage(len: Option<usize>, n: usize) -> usize {
    len.unwrap_or(((n as f64).sqrt().floor() as usize).max(1))
}

/// Selects good indices from the stored `H_bin`/`Z_bin` values.
pub fn select_good_indices(plan: &ConstructionPlan, sel: &SelectorParams) -> Result<IndexSet> {
    sel.validate()?;
    let n = plan.n();
    let t = plan.t();
    let mut set = IndexSet::empty(n);
    match sel.strategy {
        SelectorStrategy::EntropyThreshold => {
            for (i, node) in plan.level(t).iter().enumerate() {
                set.bits[i] = node.h_bin <= sel.theta;
            }
        }
        SelectorStrategy::Staged => {
            let ell = plan.ell();
            let s = ell.trailing_zeros() as f64;
            for i in 0..n {
                // good[r] = good bits in digits 1..=r
                let mut good = vec![0u32; t + 1];
                let mut x = i;
                let mut digits = vec![0usize; t];
                for d in digits.iter_mut().rev() {
                    *d = x % ell;
                    x /= ell;
                }
                for r in 0..t {
                    good[r + 1] = good[r] + digits[r].count_ones();
                }
                let between = |a: usize, b: usize| (good[b] - good[a]) as f64;
                let checkpoint = |m: usize| {
                    let z = plan.level(m)[i / ell.pow((t - m) as u32)].z_bin;
                    z < (-sel.checkpoint_exponent * s * m as f64).exp2()
                };
                let passes = |n_lvl: usize| {
                    let l = stage(sel.stage_length, n_lvl);
                    (1..)
                        .map(|k| k * l)
                        .take_while(|&m| m + l <= n_lvl)
                        .any(|m| checkpoint(m) && between(m, m + l) > sel.beta * s * l as f64)
                };
                let lt = stage(sel.stage_length, t);
                set.bits[i] = (1..)
                    .map(|k| k * lt)
                    .take_while(|&m| m + lt <= t)
                    .any(|m| passes(m) && between(m, t) > sel.alpha_sel * s * t as f64);
            }
        }
    }
    Ok(set)
}

/// Threshold that keeps the `k` leaves of smallest `H_bin` (ties may add more).
pub fn threshold_for_dimension(plan: &ConstructionPlan, k: usize) -> Result<f64> {
    let mut h: Vec<f64> = plan.level(plan.t()).iter().map(|n| n.h_bin).collect();
    if k == 0 {
        return Ok(0.0);
    }
    if k > h.len() {
        return Err(Error::InvalidArgument(format!("dimension {k} exceeds N = {}", h.len())));
    }
    h.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(h[k - 1])
}

/// Mean of `(H(1-H))^alpha` over the nodes of each level.
pub fn potential_trace(plan: &ConstructionPlan, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1/2)")));
    }
    Ok((0..=plan.t())
        .map(|j| {
            let nodes = plan.level(j);
            nodes.iter().map(|n| (n.h_bin * (1.0 - n.h_bin)).max(0.0).powf(alpha)).sum::<f64>() / nodes.len() as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_layout() {
        let s = IndexSet::from_indices(6, &[0, 3, 5]).unwrap();
        assert_eq!(s.to_hex(), "94");
        assert_eq!(IndexSet::from_hex(6, "94").unwrap(), s);
        assert!(IndexSet::from_hex(6, "95").is_err());
        assert!(IndexSet::from_hex(6, "9").is_err());
        assert!(IndexSet::from_hex(6, "9g").is_err());
    }
}
