use serde::{Deserialize, Serialize};

use super::{tau, ConstructionPlan, IndexSet, PlanConfig, PlanNode, SelectorParams};
use crate::kernel::{Kernel, SearchPolicy};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub path: Vec<usize>,
    pub kernel: Option<Kernel>,
    #[serde(rename = "H_bin")]
    pub h_bin: f64,
    #[serde(rename = "Z_bin")]
    pub z_bin: f64,
}

/// On-disk plan. Nodes are listed level by level, each level in index order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub ell: usize,
    pub t: usize,
    #[serde(rename = "Q")]
    pub q: Option<usize>,
    pub delta: Option<f64>,
    pub nodes: Vec<NodeFile>,
    pub good_set: String,
    pub selector: SelectorParams,
    pub policy: SearchPolicy,
    pub seed: u64,
}

impl ConstructionPlan {
    pub fn to_file(&self) -> PlanFile {
        let nodes = self
            .levels
            .iter()
            .flatten()
            .map(|n| NodeFile { path: n.path.clone(), kernel: n.kernel.clone(), h_bin: n.h_bin, z_bin: n.z_bin })
            .collect();
        PlanFile {
            ell: self.ell,
            t: self.t,
            q: self.config.q,
            delta: self.config.delta,
            nodes,
            good_set: self.good.to_hex(),
            selector: self.config.selector,
            policy: self.config.policy.clone(),
            seed: self.config.seed,
        }
    }

    pub fn from_file(f: PlanFile) -> Result<Self> {
        let (ell, t) = (f.ell, f.t);
        let n = super::check_shape(ell, t)?;
        let total = (n * ell - 1) / (ell - 1);
        if f.nodes.len() != total {
            return Err(Error::Parse(format!("plan lists {} nodes, expected {total}", f.nodes.len())));
        }
        let mut nodes = f.nodes.into_iter();
        let mut levels = Vec::with_capacity(t + 1);
        for j in 0..=t {
            let count = ell.pow(j as u32);
            let mut level = Vec::with_capacity(count);
            for b in 0..count {
                let node = nodes.next().expect("count checked");
                if node.path != tau(j, b + 1, ell)? {
                    return Err(Error::Parse(format!("node {b} of level {j} has path {:?}", node.path)));
                }
                match (&node.kernel, j < t) {
                    (Some(k), true) if k.ell() == ell && k.is_invertible() => {}
                    (None, false) => {}
                    _ => return Err(Error::Parse(format!("node {:?}: missing, extra or invalid kernel", node.path))),
                }
                for v in [node.h_bin, node.z_bin] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Parse(format!("node {:?}: value {v} outside [0, 1]", node.path)));
                    }
                }
                level.push(PlanNode { path: node.path, kernel: node.kernel, h_bin: node.h_bin, z_bin: node.z_bin });
            }
            levels.push(level);
        }
        f.selector.validate()?;
        let good = IndexSet::from_hex(n, &f.good_set)?;
        let config = PlanConfig { q: f.q, delta: f.delta, policy: f.policy, selector: f.selector, seed: f.seed };
        Ok(Self { ell, t, config, levels, perms: Self::perm_tables(ell, t), good })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PlanFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("plan file: {e}")))?;
        Self::from_file(f)
    }
}
