use serde::{Deserialize, Serialize};

use super::{bit_entropy_exact, GeneratorMatrix};
use crate::channel::BmsChannel;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub k: usize,
    pub samples: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_error: f64,
}

/// `H(V_1|Y)` over random `k x l` generators for a range of `k`.
///
/// `capacity_point = l (1 - H(W))`. The two margins are the widths of the
/// transition window around it for BSC (`8 sqrt(l) log^2 l`) and general BMS
/// (`14 sqrt(l) log^3 l`) channels; for small `l` they exceed `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseScan {
    pub ell: usize,
    pub seed: u64,
    pub channel_digest: String,
    pub capacity_point: f64,
    pub bsc_margin: f64,
    pub bms_margin: f64,
    pub records: Vec<ScanRecord>,
}

impl ConverseScan {
    pub const CSV_HEADER: &'static str = "k,samples,mean,min,max,std_error";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!("{},{},{},{},{},{}\n", r.k, r.samples, r.mean, r.min, r.max, r.std_error));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan serializes")
    }

    /// Is `k` outside the window by the given margin, below or above?
    pub fn outside(&self, k: usize, margin: f64) -> Option<bool> {
        let k = k as f64;
        if k <= self.capacity_point - margin {
            Some(false)
        } else if k >= self.capacity_point + margin {
            Some(true)
        } else {
            None
        }
    }
}

/// Sample `s` at dimension `k` draws its generator from
/// `derive_seed(derive_seed(seed, k), s)`. With `samples == 0` no records are produced.
pub fn sharp_transition_scan(
    w: &BmsChannel<f64>,
    ell: usize,
    k_range: std::ops::RangeInclusive<usize>,
    samples: u64,
    seed: u64,
) -> Result<ConverseScan> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 1 || hi > ell || lo > hi {
        return Err(Error::InvalidArgument(format!("k range {lo}..={hi} must lie in 1..={ell}")));
    }
    let l = ell as f64;
    let lg = l.log2();
    let mut records = Vec::new();
    if samples > 0 {
        for k in lo..=hi {
            let ks = derive_seed(seed, k as u64);
            let vals = (0..samples)
                .map(|s| {
                    let g = GeneratorMatrix::random(k, ell, derive_seed(ks, s))?;
                    bit_entropy_exact(&g, w)
                })
                .collect::<Result<Vec<f64>>>()?;
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            records.push(ScanRecord {
                k,
                samples,
                mean,
                min: vals.iter().cloned().fold(f64::INFINITY, f64::min),
                max: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                std_error: (var / n).sqrt(),
            });
        }
    }
    Ok(ConverseScan {
        ell,
        seed,
        channel_digest: w.digest(),
        capacity_point: l * (1.0 - w.entropy()),
        bsc_margin: 8.0 * l.sqrt() * lg * lg,
        bms_margin: 14.0 * l.sqrt() * lg.powi(3),
        records,
    })
}
