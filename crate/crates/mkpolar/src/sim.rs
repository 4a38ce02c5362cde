//! Seeded Monte Carlo frame and bit error rates.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::BmsChannel;
use crate::codec::{encode, sc_decode, LlrWord, LLR_CLAMP};
use crate::construct::ConstructionPlan;
use crate::rng::{derive_seed, SplitMix64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageMode {
    AllZero,
    Random,
}

#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub plan: &'a ConstructionPlan,
    pub channel: &'a BmsChannel<f64>,
    pub trials: u64,
    pub seed: u64,
    pub message_mode: MessageMode,
    /// Stop once this many frame errors are seen (at least 100). Off when `None`.
    pub early_stop: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub seed: u64,
    pub message_mode: MessageMode,
    pub channel_digest: String,
    pub config_digest: String,
    pub wall_time_s: f64,
}

impl SimReport {
    /// Standard error of the frame error rate.
    pub fn fer_std_error(&self) -> f64 {
        (self.fer * (1.0 - self.fer) / self.trials as f64).sqrt()
    }

    /// JSON without the wall-clock field, for byte comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("wall_time_s");
        v.to_string()
    }

    pub const CSV_HEADER: &'static str = "N,rate,channel_digest,fer,ber,trials,seed";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{},{}", self.n, self.rate, self.channel_digest, self.fer, self.ber, self.trials, self.seed)
    }

    /// Appends one CSV row, writing the header if the file is new or empty.
    pub fn append_csv(&self, path: &Path) -> std::io::Result<()> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "{}", Self::CSV_HEADER)?;
        }
        writeln!(f, "{}", self.csv_row())
    }
}

/// Per-symbol sampling table for one channel.
pub struct Sampler {
    cdf0: Vec<f64>,
    cdf1: Vec<f64>,
    llr: Vec<f64>,
}

impl Sampler {
    pub fn new(w: &BmsChannel<f64>) -> Self {
        let syms = w.symbols();
        let cum = |f: fn(&(f64, f64)) -> f64| {
            let mut s = 0.0;
            syms.iter()
                .map(|x| {
                    s += f(x);
                    s
                })
                .collect::<Vec<f64>>()
        };
        let llr = syms
            .iter()
            .map(|&(a, b)| {
                if b == 0.0 {
                    LLR_CLAMP
                } else if a == 0.0 {
                    -LLR_CLAMP
                } else {
                    (a / b).ln().clamp(-LLR_CLAMP, LLR_CLAMP)
                }
            })
            .collect();
        Self { cdf0: cum(|x| x.0), cdf1: cum(|x| x.1), llr }
    }

    /// Draws a symbol from `W(.|x)`; returns its index and LLR.
    pub fn sample(&self, x: u8, rng: &mut SplitMix64) -> (usize, f64) {
        let cdf = if x == 0 { &self.cdf0 } else { &self.cdf1 };
        let u = rng.next_f64() * cdf[cdf.len() - 1];
        // the first index whose cumulative mass exceeds u has positive mass
        let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        (i, self.llr[i])
    }
}

/// Draws one channel output for input bit `x`.
pub fn sample_output(w: &BmsChannel<f64>, x: u8, rng: &mut SplitMix64) -> (usize, f64) {
    Sampler::new(w).sample(x, rng)
}

fn config_digest(cfg: &SimConfig) -> String {
    let plan = cfg.plan;
    let kernels: Vec<Vec<String>> = (0..plan.t())
        .flat_map(|j| plan.level(j).iter().map(|n| n.kernel.as_ref().unwrap().to_strings()))
        .collect();
    let doc = serde_json::json!({
        "ell": plan.ell(),
        "t": plan.t(),
        "kernels": kernels,
        "good_set": plan.good_set().to_hex(),
        "channel": cfg.channel.to_mixture_file().mixture,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "message_mode": cfg.message_mode,
        "early_stop": cfg.early_stop,
    });
    hex::encode(&Sha256::digest(doc.to_string().as_bytes())[..8])
}

/// Runs `trials` independent frames; trial `i` uses `derive_seed(seed, i)`.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    if cfg.trials < 1 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let start = Instant::now();
    let plan = cfg.plan;
    let n = plan.n();
    let k = plan.dimension();
    let sampler = Sampler::new(cfg.channel);

    let trial = |i: u64| -> Result<(u64, u64)> {
        let mut rng = SplitMix64::new(derive_seed(cfg.seed, i));
        let msg: Vec<u8> = match cfg.message_mode {
            MessageMode::AllZero => vec![0; k],
            MessageMode::Random => (0..k).map(|_| rng.next_bit()).collect(),
        };
        let x = encode(plan, &msg)?;
        let llr: Vec<f64> = x.bits().iter().map(|&b| sampler.sample(b, &mut rng).1).collect();
        let (dec, _) = sc_decode(plan, &LlrWord::new(llr)?)?;
        let errs = dec.iter().zip(&msg).filter(|(a, b)| a != b).count() as u64;
        Ok(((errs > 0) as u64, errs))
    };

    let (trials, frame_errors, bit_errors) = match cfg.early_stop {
        None => {
            let (f, b) = (0..cfg.trials)
                .into_par_iter()
                .map(trial)
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
            (cfg.trials, f, b)
        }
        Some(limit) => {
            // fixed-size batches in trial order keep the stopping point deterministic
            let limit = limit.max(100);
            let batch = 256u64;
            let (mut done, mut f, mut b) = (0u64, 0u64, 0u64);
            while done < cfg.trials && f < limit {
                let end = (done + batch).min(cfg.trials);
                let res: Vec<(u64, u64)> = (done..end).into_par_iter().map(trial).collect::<Result<_>>()?;
                for (fe, be) in res {
                    done += 1;
                    f += fe;
                    b += be;
                    if f >= limit {
                        break;
                    }
                }
            }
            (done, f, b)
        }
    };

    let bits = trials * k as u64;
    Ok(SimReport {
        n,
        k,
        rate: k as f64 / n as f64,
        trials,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / trials as f64,
        ber: if bits == 0 { 0.0 } else { bit_errors as f64 / bits as f64 },
        seed: cfg.seed,
        message_mode: cfg.message_mode,
        channel_digest: cfg.channel.digest(),
        config_digest: config_digest(cfg),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
