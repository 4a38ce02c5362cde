use super::{BmsChannel, BscMixture};
use crate::{Error, Real, Result};

/// Streaming degraded binning with `Q` posterior bins.
///
/// A mixture component `(q, p)` stands for a symbol with posterior `p(0|y) = p`
/// and its mirror with posterior `1 - p`. The first lands in bin
/// `k = max(1, ceil(Q p))`, the mirror in bin `Q + 1 - k`, so only the lower
/// half of the bins is stored. When `Q` is odd the middle bin receives both
/// members of each pair and the merged symbol has `w0 = w1`.
#[derive(Debug, Clone)]
pub(crate) struct Binner<T> {
    q: usize,
    mass: Vec<T>,
    moment: Vec<T>,
}

impl<T: Real> Binner<T> {
    pub(crate) fn new(q: usize) -> Self {
        let bins = q.div_ceil(2);
        Self { q, mass: vec![T::zero(); bins], moment: vec![T::zero(); bins] }
    }

    #[inline]
    pub(crate) fn add(&mut self, mass: T, p: T) {
        if mass <= T::zero() {
            return;
        }
        let k = (T::lit(self.q as f64) * p).ceil().to_usize().unwrap_or(1).max(1);
        let k = k.min(self.mass.len());
        self.mass[k - 1] = self.mass[k - 1] + mass;
        self.moment[k - 1] = self.moment[k - 1] + mass * p;
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        for k in 0..self.mass.len() {
            self.mass[k] = self.mass[k] + other.mass[k];
            self.moment[k] = self.moment[k] + other.moment[k];
        }
    }

    pub(crate) fn finish(self) -> BscMixture<T> {
        let half = T::lit(0.5);
        let middle = if self.q % 2 == 1 { Some(self.mass.len() - 1) } else { None };
        let comps = self
            .mass
            .iter()
            .zip(&self.moment)
            .enumerate()
            .filter(|(_, (m, _))| **m > T::zero())
            .map(|(k, (&m, &mo))| {
                let p = if Some(k) == middle { half } else { (mo / m).min(half) };
                (m, p)
            })
            .collect();
        BscMixture::from_weighted(comps)
    }
}

/// Degraded binning of the posterior axis into `Q` bins.
///
/// The result is degraded with respect to `w` and
/// `H(w) <= H(result) <= H(w) + 2 log2(Q) / Q`.
pub fn degrade_bin<T: Real>(w: &BmsChannel<T>, q: usize) -> Result<BmsChannel<T>> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("degrade_bin needs Q >= 2, got {q}")));
    }
    let mut b = Binner::new(q);
    for &(mass, p) in w.mixture().components() {
        b.add(mass, p);
    }
    Ok(BmsChannel::from_mixture(b.finish()))
}

/// Upgraded binning onto the crossover grid `{(j-1)/(2m) : j = 1..m}`.
///
/// Each crossover is rounded down to the grid, which can only make the
/// channel better: `H(w) - h(1/(2m)) <= H(result) <= H(w)`.
pub fn upgrade_bin<T: Real>(w: &BmsChannel<T>, m: usize) -> Result<BmsChannel<T>> {
    if m < 1 {
        return Err(Error::InvalidArgument("upgrade_bin needs m >= 1".into()));
    }
    let two_m = T::lit(2.0 * m as f64);
    let mut mass = vec![T::zero(); m];
    for &(q, p) in w.mixture().components() {
        let j = (p * two_m).floor().to_usize().unwrap_or(0).min(m - 1);
        mass[j] = mass[j] + q;
    }
    let comps = mass
        .into_iter()
        .enumerate()
        .map(|(j, q)| (q, T::lit(j as f64) / two_m))
        .collect();
    Ok(BmsChannel::from_mixture(BscMixture::from_weighted(comps)))
}
