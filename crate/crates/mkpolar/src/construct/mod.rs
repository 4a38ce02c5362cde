//! The kernel tree and its layer factorization.
//!
//! Node `b` (0-based) of level `j` has path `tau_j(b + 1)`; its children are
//! `b l + i` for `i < l`, and leaf `b` is input `U_{b+1}`. The encoding matrix
//! is `M = D^(t-1) Q^(t-1) ... Q^(1) D^(0)` where block `b` of `D^(j)` is the
//! kernel of level-`j` node `b mod l^j` and `Q^(j)` moves entry `i` to
//! position `pi^(j)(i)`. This is the direction in which the `l` copies of a
//! level-`j` node's input line up behind its kernel; the opposite reading
//! agrees with it only for `t <= 2`. Only the kernels and the permutation
//! tables are stored.

mod index;
mod io;
mod select;

pub use index::{pi_perm, tau, tau_inv};
pub use io::{NodeFile, PlanFile};
pub use select::{potential_trace, select_good_indices, threshold_for_dimension, IndexSet, SelectorParams, SelectorStrategy};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{bit_channels_with_budget, degrade_bin, BmsChannel};
use crate::kernel::{search_with_channels, Kernel, SearchPolicy};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Degraded bins per node; `None` keeps every channel exact.
    #[serde(rename = "Q")]
    pub q: Option<usize>,
    /// Entropy slack for the upper suction guard; `None` uses [`PlanConfig::default_delta`].
    pub delta: Option<f64>,
    pub policy: SearchPolicy,
    pub selector: SelectorParams,
    pub seed: u64,
}

impl PlanConfig {
    /// `Q = min(N^3, 4096)` (further capped for `l >= 4`, see
    /// [`default_q`](Self::default_q)), best-effort search, threshold selector.
    pub fn new(ell: usize, t: usize) -> Self {
        Self {
            q: Some(Self::default_q(ell, t)),
            delta: None,
            policy: SearchPolicy::best_effort(),
            selector: SelectorParams::default(),
            seed: 0,
        }
    }

    /// `min(N^3, 4096)`, and for `l >= 4` also the largest `Q` with
    /// `Q^l 2^l <= 2^24` so one candidate kernel costs at most ~16M steps.
    pub fn default_q(ell: usize, t: usize) -> usize {
        let n = (ell as u128).saturating_pow(t as u32);
        let mut q = n.saturating_pow(3).min(4096) as usize;
        if ell >= 4 {
            let per_symbol = (24.0 - ell as f64) / ell as f64;
            q = q.min((per_symbol.exp2().floor() as usize).max(2));
        }
        q
    }

    /// Accumulated binning error bound at the leaves:
    /// `(2 log2 Q / Q) (l^(t+1) - 1) / (l - 1)`.
    pub fn default_delta(q: Option<usize>, ell: usize, t: usize) -> f64 {
        match q {
            None => 0.0,
            Some(q) => {
                let q = q as f64;
                let l = ell as f64;
                2.0 * q.log2() / q * (l.powi(t as i32 + 1) - 1.0) / (l - 1.0)
            }
        }
    }

    pub fn delta_for(&self, ell: usize, t: usize) -> f64 {
        self.delta.unwrap_or_else(|| Self::default_delta(self.q, ell, t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    /// 1-based branch digits from the root.
    pub path: Vec<usize>,
    /// Present on levels `0..t`.
    pub kernel: Option<Kernel>,
    pub h_bin: f64,
    pub z_bin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionPlan {
    ell: usize,
    t: usize,
    config: PlanConfig,
    levels: Vec<Vec<PlanNode>>,
    /// `perms[j]` is the zero-based table of `pi^(j)`, `perms[0]` unused.
    perms: Vec<Vec<u32>>,
    good: IndexSet,
}

fn node_seed(master: u64, path: &[usize]) -> u64 {
    path.iter().fold(master, |s, &d| derive_seed(s, d as u64))
}

fn check_shape(ell: usize, t: usize) -> Result<usize> {
    if ell < 2 || !ell.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("l = {ell} is not a power of two >= 2")));
    }
    if t < 1 {
        return Err(Error::InvalidArgument("t must be >= 1".into()));
    }
    ell.checked_pow(t as u32)
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| Error::InvalidArgument(format!("N = {ell}^{t} is too large")))
}

type Chooser<'a> = dyn Fn(&[usize], &BmsChannel<f64>, &SearchPolicy, f64) -> Result<(Kernel, Vec<BmsChannel<f64>>)> + Sync + 'a;

/// Builds the tree by kernel search at every node.
pub fn build_plan(w: &BmsChannel<f64>, ell: usize, t: usize, config: &PlanConfig) -> Result<ConstructionPlan> {
    build(w, ell, t, config, &|_, ch, policy, delta| {
        let (k, _, chans) = search_with_channels(ch, delta, ell, policy)?;
        Ok((k, chans))
    })
}

/// Builds the tree with caller-chosen kernels, keyed by node path.
pub fn build_plan_with_kernels<F>(w: &BmsChannel<f64>, ell: usize, t: usize, config: &PlanConfig, kernel_for: F) -> Result<ConstructionPlan>
where
    F: Fn(&[usize]) -> Kernel + Sync,
{
    build(w, ell, t, config, &|path, ch, policy, _| {
        let k = kernel_for(path);
        if k.ell() != ell || !k.is_invertible() {
            return Err(Error::InvalidArgument("supplied kernel is not an invertible l x l matrix".into()));
        }
        let chans = bit_channels_with_budget(ch, &k, policy.bin_q, policy.budget)?;
        Ok((k, chans))
    })
}

fn build(w: &BmsChannel<f64>, ell: usize, t: usize, config: &PlanConfig, choose: &Chooser) -> Result<ConstructionPlan> {
    let n = check_shape(ell, t)?;
    config.selector.validate()?;
    if let Some(q) = config.q {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("Q must be >= 2, got {q}")));
        }
    }
    let delta = config.delta_for(ell, t);
    let root = match config.q {
        Some(q) => degrade_bin(w, q)?,
        None => w.clone(),
    };

    let mut levels: Vec<Vec<PlanNode>> = Vec::with_capacity(t + 1);
    let mut current = vec![root];
    for j in 0..t {
        let results: Vec<Result<(Kernel, Vec<BmsChannel<f64>>)>> = current
            .par_iter()
            .enumerate()
            .map(|(b, ch)| {
                let path = tau(j, b + 1, ell)?;
                let policy = SearchPolicy { seed: node_seed(config.seed, &path), bin_q: config.q, ..config.policy.clone() };
                choose(&path, ch, &policy, delta).map_err(|e| Error::AtNode { path, source: Box::new(e) })
            })
            .collect();
        let mut nodes = Vec::with_capacity(current.len());
        let mut next = Vec::with_capacity(current.len() * ell);
        for (b, (ch, r)) in current.iter().zip(results).enumerate() {
            let (k, chans) = r?;
            nodes.push(PlanNode {
                path: tau(j, b + 1, ell)?,
                kernel: Some(k),
                h_bin: ch.entropy(),
                z_bin: ch.bhattacharyya(),
            });
            next.extend(chans);
        }
        levels.push(nodes);
        current = next;
    }
    let leaves = current
        .iter()
        .enumerate()
        .map(|(b, ch)| {
            Ok(PlanNode { path: tau(t, b + 1, ell)?, kernel: None, h_bin: ch.entropy(), z_bin: ch.bhattacharyya() })
        })
        .collect::<Result<Vec<_>>>()?;
    levels.push(leaves);

    let mut plan = ConstructionPlan {
        ell,
        t,
        config: config.clone(),
        levels,
        perms: ConstructionPlan::perm_tables(ell, t),
        good: IndexSet::empty(n),
    };
    plan.good = select_good_indices(&plan, &config.selector)?;
    Ok(plan)
}

impl ConstructionPlan {
    fn perm_tables(ell: usize, t: usize) -> Vec<Vec<u32>> {
        (0..t).map(|j| if j == 0 { Vec::new() } else { index::pi_table(j, t, ell) }).collect()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.ell.pow(self.t as u32)
    }

    pub fn config(&self) -> &PlanConfig {
        &self.config
    }

    pub fn level(&self, j: usize) -> &[PlanNode] {
        &self.levels[j]
    }

    pub fn kernel(&self, j: usize, b: usize) -> &Kernel {
        self.levels[j][b].kernel.as_ref().expect("internal node has a kernel")
    }

    /// Zero-based table of `pi^(j)` for `1 <= j < t`.
    pub fn permutation(&self, j: usize) -> &[u32] {
        &self.perms[j]
    }

    pub fn leaf_entropies(&self) -> Vec<f64> {
        self.levels[self.t].iter().map(|n| n.h_bin).collect()
    }

    pub fn good_set(&self) -> &IndexSet {
        &self.good
    }

    pub fn dimension(&self) -> usize {
        self.good.len()
    }

    pub fn rate(&self) -> f64 {
        self.good.len() as f64 / self.n() as f64
    }

    /// Re-runs selection with a different rule.
    pub fn reselect(&mut self, selector: SelectorParams) -> Result<()> {
        self.good = select_good_indices(self, &selector)?;
        self.config.selector = selector;
        Ok(())
    }

    /// Replaces the good set directly.
    pub fn set_good_set(&mut self, good: IndexSet) -> Result<()> {
        if good.universe() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), got: good.universe() });
        }
        self.good = good;
        Ok(())
    }

    /// Dense `M` as rows of 0/1 bytes, multiplied out layer by layer.
    /// Meant for checks at small `N`.
    pub fn dense_transform(&self) -> Vec<Vec<u8>> {
        let n = self.n();
        let ell = self.ell;
        let d_layer = |j: usize| {
            let mut m = vec![vec![0u8; n]; n];
            for b in 0..n / ell {
                let k = self.kernel(j, b % ell.pow(j as u32));
                for r in 0..ell {
                    for c in 0..ell {
                        m[b * ell + r][b * ell + c] = k.get(r, c) as u8;
                    }
                }
            }
            m
        };
        let q_layer = |j: usize| {
            // (U Q)_pi(i) = U_i  <=>  Q[i][pi(i)] = 1
            let mut m = vec![vec![0u8; n]; n];
            for (i, &p) in self.perms[j].iter().enumerate() {
                m[i][p as usize] = 1;
            }
            m
        };
        let mul = |a: &[Vec<u8>], b: &[Vec<u8>]| {
            let mut c = vec![vec![0u8; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if a[i][k] == 1 {
                        for j in 0..n {
                            c[i][j] ^= b[k][j];
                        }
                    }
                }
            }
            c
        };
        let mut m = d_layer(self.t - 1);
        for j in (0..self.t - 1).rev() {
            m = mul(&m, &q_layer(j + 1));
            m = mul(&m, &d_layer(j));
        }
        m
    }
}
