use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::channel::{arikan_pair, arikan_pair_binned, bit_channels_with_budget, BmsChannel};
use crate::rng::derive_seed;
use crate::{Error, Result, DEFAULT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// All matrices in lexicographic order; first one meeting the stop conditions wins.
    Exhaustive,
    /// Seeded random matrices; first one meeting the stop conditions wins.
    Randomized,
    /// Minimizes the number of unpolarized bit-channels over the candidates
    /// (all matrices for `l <= 3`, otherwise `max_candidates` random ones).
    BestEffort,
}

/// Bit-channel targets for a kernel at parent entropy `H`, indices 1-based:
/// `H_i <= low_entropy` for every `i >= l H + low_offset` and
/// `H_i >= 1 - high_gap` for every `i <= l H - high_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopConditions {
    pub low_entropy: f64,
    pub low_offset: f64,
    pub high_gap: f64,
    pub high_offset: f64,
}

impl StopConditions {
    /// Thresholds `l^(-log l / 5)` and `l^(-log l / high_divisor)` with offsets
    /// `sqrt(l) log^3 l` and `14 sqrt(l) log^3 l` (logs base 2).
    pub fn asymptotic(ell: usize, high_divisor: f64) -> Self {
        let l = ell as f64;
        let lg = l.log2();
        Self {
            low_entropy: l.powf(-lg / 5.0),
            low_offset: l.sqrt() * lg.powi(3),
            high_gap: l.powf(-lg / high_divisor),
            high_offset: 14.0 * l.sqrt() * lg.powi(3),
        }
    }

    /// Desk-scale preset: 0.1 / 0.9 targets with `sqrt(l)` offsets.
    pub fn relaxed(ell: usize) -> Self {
        let r = (ell as f64).sqrt();
        Self { low_entropy: 0.1, low_offset: r, high_gap: 0.1, high_offset: r }
    }

    pub fn satisfied(&self, parent_entropy: f64, entropies: &[f64]) -> bool {
        let lh = entropies.len() as f64 * parent_entropy;
        entropies.iter().enumerate().all(|(i, &h)| {
            let i = (i + 1) as f64;
            (i < lh + self.low_offset || h <= self.low_entropy)
                && (i > lh - self.high_offset || h >= 1.0 - self.high_gap)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum StopRule {
    /// [`StopConditions::asymptotic`] with the given divisor (20 or 21).
    Asymptotic { high_divisor: f64 },
    Relaxed,
    Custom(StopConditions),
}

impl StopRule {
    pub fn resolve(&self, ell: usize) -> StopConditions {
        match *self {
            StopRule::Asymptotic { high_divisor } => StopConditions::asymptotic(ell, high_divisor),
            StopRule::Relaxed => StopConditions::relaxed(ell),
            StopRule::Custom(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchPolicy {
    pub mode: SearchMode,
    pub max_candidates: u64,
    /// Suction threshold; `None` means `l^-4`.
    pub near0: Option<f64>,
    pub stop: StopRule,
    /// Best-effort: an index is unpolarized when its entropy lies in `(theta, 1 - theta)`.
    pub theta: f64,
    pub seed: u64,
    /// Degraded bins applied to the bit-channels while they are enumerated.
    pub bin_q: Option<usize>,
    pub budget: u64,
}

impl SearchPolicy {
    /// Exhaustive for `l <= 3`, randomized otherwise, with the asymptotic stop rule.
    pub fn for_ell(ell: usize) -> Self {
        Self {
            mode: if ell <= 3 { SearchMode::Exhaustive } else { SearchMode::Randomized },
            ..Self::default()
        }
    }

    pub fn best_effort() -> Self {
        Self { mode: SearchMode::BestEffort, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_candidates < 1 {
            return Err(Error::InvalidArgument("max_candidates must be >= 1".into()));
        }
        if !(self.theta > 0.0 && self.theta < 0.5) {
            return Err(Error::InvalidArgument(format!("theta {} outside (0, 1/2)", self.theta)));
        }
        if let Some(n) = self.near0 {
            if !(n > 0.0) {
                return Err(Error::InvalidArgument("suction threshold must be positive".into()));
            }
        }
        if let Some(q) = self.bin_q {
            if q < 2 {
                return Err(Error::InvalidArgument(format!("bin count must be >= 2, got {q}")));
            }
        }
        Ok(())
    }
}

impl Default for SearchPolicy {
    fn default() -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            max_candidates: 64,
            near0: None,
            stop: StopRule::Asymptotic { high_divisor: 20.0 },
            theta: 0.1,
            seed: 0,
            bin_q: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchBranch {
    SuctionLow,
    SuctionHigh,
    StopConditions,
    BestEffort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub branch: SearchBranch,
    /// Invertible candidates whose bit-channels were evaluated.
    pub candidates_tried: u64,
    pub entropies: Vec<f64>,
    pub unpolarized: usize,
    /// Whether the winner also meets the stop conditions.
    pub satisfies_stop: bool,
}

/// Runs the kernel search and returns the winner with its report.
pub fn kernel_search(wq: &BmsChannel<f64>, delta: f64, ell: usize, policy: &SearchPolicy) -> Result<(Kernel, SearchReport)> {
    let (k, report, _) = search_with_channels(wq, delta, ell, policy)?;
    Ok((k, report))
}

/// Bit-channels of `k`; the two 2x2 classes go through [`arikan_pair`].
fn evaluate(w: &BmsChannel<f64>, k: &Kernel, policy: &SearchPolicy) -> Result<Vec<BmsChannel<f64>>> {
    if k.ell() == 2 {
        // Row 2 = 11 mixes; otherwise each U_i sees one copy of W.
        if k.row(1) == 0b11 {
            let (m, p) = match policy.bin_q {
                Some(q) => arikan_pair_binned(w, q)?,
                None => arikan_pair(w),
            };
            return Ok(vec![m, p]);
        }
        let c = match policy.bin_q {
            Some(q) => crate::channel::degrade_bin(w, q)?,
            None => w.clone(),
        };
        return Ok(vec![c.clone(), c]);
    }
    bit_channels_with_budget(w, k, policy.bin_q, policy.budget)
}

struct Scored {
    kernel: Kernel,
    channels: Vec<BmsChannel<f64>>,
    entropies: Vec<f64>,
    unpolarized: usize,
    spread: f64,
    stop: bool,
}

fn score(w: &BmsChannel<f64>, h: f64, k: Kernel, stop: &StopConditions, policy: &SearchPolicy) -> Result<Scored> {
    let channels = evaluate(w, &k, policy)?;
    let entropies: Vec<f64> = channels.iter().map(BmsChannel::entropy).collect();
    let theta = policy.theta;
    let unpolarized = entropies.iter().filter(|&&x| x > theta && x < 1.0 - theta).count();
    let spread = entropies.iter().map(|&x| (x * (1.0 - x)).sqrt()).sum();
    let ok = stop.satisfied(h, &entropies);
    Ok(Scored { kernel: k, channels, entropies, unpolarized, spread, stop: ok })
}

/// Candidate stream in search order. Singular and non-polarizing matrices are skipped.
struct Candidates {
    ell: usize,
    exhaustive: bool,
    next: u64,
    end: u64,
    seed: u64,
    emitted: u64,
    cap: u64,
    lead: Option<Kernel>,
}

impl Candidates {
    fn new(ell: usize, exhaustive: bool, policy: &SearchPolicy) -> Result<Self> {
        let end = if exhaustive {
            if ell * ell > 62 {
                return Err(Error::InvalidArgument(format!("exhaustive search is impossible at l = {ell}")));
            }
            1u64 << (ell * ell)
        } else {
            // enough draws for max_candidates invertible matrices
            policy.max_candidates.saturating_mul(64)
        };
        let cap = if exhaustive { u64::MAX } else { policy.max_candidates };
        // random draws start from the Arikan power so best effort never does worse
        let lead = (!exhaustive && policy.max_candidates > 0).then(|| Kernel::arikan(ell.trailing_zeros()));
        Ok(Self { ell, exhaustive, next: 0, end, seed: policy.seed, emitted: 0, cap, lead })
    }
}

impl Iterator for Candidates {
    type Item = Kernel;
    fn next(&mut self) -> Option<Kernel> {
        if let Some(k) = self.lead.take() {
            self.emitted += 1;
            return Some(k);
        }
        while self.next < self.end && self.emitted < self.cap {
            let n = self.next;
            self.next += 1;
            let k = if self.exhaustive {
                Kernel::lex_candidate(self.ell, n)
            } else {
                Kernel::random(self.ell, derive_seed(self.seed, n))
            };
            if k.is_invertible() && k.is_polarizing() {
                self.emitted += 1;
                return Some(k);
            }
        }
        None
    }
}

/// Kernel search that also hands back the winner's bit-channels.
pub(crate) fn search_with_channels(
    wq: &BmsChannel<f64>,
    delta: f64,
    ell: usize,
    policy: &SearchPolicy,
) -> Result<(Kernel, SearchReport, Vec<BmsChannel<f64>>)> {
    if ell < 2 || !ell.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("kernel size {ell} is not a power of two >= 2")));
    }
    policy.validate()?;
    let h = wq.entropy();
    let stop = policy.stop.resolve(ell);
    let near0 = policy.near0.unwrap_or((ell as f64).powi(-4));

    let suction = if h < near0 {
        Some(SearchBranch::SuctionLow)
    } else if h > 1.0 - near0 + delta {
        Some(SearchBranch::SuctionHigh)
    } else {
        None
    };
    if let Some(branch) = suction {
        let k = Kernel::arikan(ell.trailing_zeros());
        let s = score(wq, h, k, &stop, policy)?;
        let report = SearchReport {
            branch,
            candidates_tried: 0,
            entropies: s.entropies,
            unpolarized: s.unpolarized,
            satisfies_stop: s.stop,
        };
        return Ok((s.kernel, report, s.channels));
    }

    let exhaustive = match policy.mode {
        SearchMode::Exhaustive => true,
        SearchMode::Randomized => false,
        SearchMode::BestEffort => ell <= 3,
    };
    let mut cands = Candidates::new(ell, exhaustive, policy)?;
    let batch = if ell == 2 { 1 } else { 2 * rayon::current_num_threads().max(1) };
    let mut tried = 0u64;
    let mut best: Option<Scored> = None;
    loop {
        let chunk: Vec<Kernel> = cands.by_ref().take(batch).collect();
        if chunk.is_empty() {
            break;
        }
        let scored: Vec<Scored> = if chunk.len() == 1 {
            vec![score(wq, h, chunk.into_iter().next().unwrap(), &stop, policy)?]
        } else {
            chunk
                .into_par_iter()
                .map(|k| score(wq, h, k, &stop, policy))
                .collect::<Result<_>>()?
        };
        for s in scored {
            tried += 1;
            if policy.mode == SearchMode::BestEffort {
                let better = match &best {
                    None => true,
                    Some(b) => (s.unpolarized, s.spread) < (b.unpolarized, b.spread),
                };
                if better {
                    best = Some(s);
                }
            } else if s.stop {
                let report = SearchReport {
                    branch: SearchBranch::StopConditions,
                    candidates_tried: tried,
                    entropies: s.entropies,
                    unpolarized: s.unpolarized,
                    satisfies_stop: true,
                };
                return Ok((s.kernel, report, s.channels));
            }
        }
    }
    match best {
        Some(s) => {
            let report = SearchReport {
                branch: SearchBranch::BestEffort,
                candidates_tried: tried,
                entropies: s.entropies,
                unpolarized: s.unpolarized,
                satisfies_stop: s.stop,
            };
            Ok((s.kernel, report, s.channels))
        }
        None => Err(Error::SearchExhausted { tried }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bec, bsc, bit_channels};

    #[test]
    fn suction_returns_arikan_without_search() {
        let (k, r) = kernel_search(&bsc(0.0).unwrap(), 0.0, 4, &SearchPolicy::best_effort()).unwrap();
        assert_eq!(k, Kernel::arikan(2));
        assert_eq!(r.candidates_tried, 0);
        assert_eq!(r.branch, SearchBranch::SuctionLow);
        let (k, r) = kernel_search(&bsc(0.5).unwrap(), 0.0, 2, &SearchPolicy::default()).unwrap();
        assert_eq!(k, Kernel::arikan(1));
        assert_eq!(r.branch, SearchBranch::SuctionHigh);
    }

    #[test]
    fn best_effort_two_by_two() {
        let w = bsc(0.11).unwrap();
        let (k, r) = kernel_search(&w, 0.0, 2, &SearchPolicy::best_effort()).unwrap();
        assert_eq!(k.row(1), 0b11);
        assert!(k.is_invertible());
        assert_eq!(r.unpolarized, 2);
        // only two invertible 2x2 matrices polarize
        assert_eq!(r.candidates_tried, 2);
        assert_eq!(k.to_strings(), ["01", "11"]);
    }

    #[test]
    fn exhaustive_asymptotic_rule_is_vacuous_at_two() {
        // Neither asymptotic condition constrains any index at l = 2, so the first
        // polarizing matrix in lexicographic order is accepted.
        let w = bsc(0.11).unwrap();
        let (k, r) = kernel_search(&w, 0.0, 2, &SearchPolicy::default()).unwrap();
        assert_eq!(k.to_strings(), ["01", "11"]);
        assert_eq!(r.candidates_tried, 1);
        assert_eq!(r.branch, SearchBranch::StopConditions);
    }

    #[test]
    fn impossible_conditions_exhaust() {
        let w = bsc(0.11).unwrap();
        let policy = SearchPolicy {
            stop: StopRule::Custom(StopConditions { low_entropy: 0.0, low_offset: -10.0, high_gap: 0.0, high_offset: -10.0 }),
            ..SearchPolicy::default()
        };
        assert!(matches!(kernel_search(&w, 0.0, 2, &policy), Err(Error::SearchExhausted { tried: 2 })));
    }

    #[test]
    fn report_entropies_reproduce() {
        let w = bec(0.5).unwrap();
        let policy = SearchPolicy { theta: 0.1, max_candidates: 16, seed: 5, bin_q: Some(16), ..SearchPolicy::best_effort() };
        let (k, r) = kernel_search(&w, 0.0, 4, &policy).unwrap();
        assert!(k.is_invertible());
        assert!(r.unpolarized <= 2);
        let again: Vec<f64> = bit_channels(&w, &k, Some(16)).unwrap().iter().map(|c| c.entropy()).collect();
        for (a, b) in again.iter().zip(&r.entropies) {
            assert!((a - b).abs() < 1e-12);
        }
        let (k2, r2) = kernel_search(&w, 0.0, 4, &policy).unwrap();
        assert_eq!(k, k2);
        assert_eq!(r, r2);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(kernel_search(&bsc(0.1).unwrap(), 0.0, 3, &SearchPolicy::default()).is_err());
    }
}
