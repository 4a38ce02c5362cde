use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BmsChannel, BscMixture};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolFile {
    pub symbols: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureFile {
    pub mixture: Vec<[f64; 2]>,
}

/// On-disk channel: `{"symbols": [[w0, w1], ...]}` or `{"mixture": [[q, p], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelFile {
    Symbols(SymbolFile),
    Mixture(MixtureFile),
}

impl ChannelFile {
    pub fn into_channel<T: Real>(self) -> Result<BmsChannel<T>> {
        match self {
            ChannelFile::Symbols(f) => {
                let syms: Vec<(T, T)> = f.symbols.iter().map(|s| (T::lit(s[0]), T::lit(s[1]))).collect();
                BmsChannel::from_symbols(&syms)
            }
            ChannelFile::Mixture(f) => {
                let comps = f.mixture.iter().map(|c| (T::lit(c[0]), T::lit(c[1]))).collect();
                Ok(BmsChannel::from_mixture(BscMixture::new(comps)?))
            }
        }
    }
}

impl<T: Real> BmsChannel<T> {
    /// Parses either accepted JSON layout.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ChannelFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("channel file: {e}")))?;
        f.into_channel()
    }

    /// Canonical mixture document.
    pub fn to_mixture_file(&self) -> MixtureFile {
        MixtureFile {
            mixture: self.mixture().components().iter().map(|&(q, p)| [q.f64(), p.f64()]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_mixture_file()).expect("plain floats serialize")
    }

    /// Hex SHA-256 of the canonical mixture JSON, truncated to 16 characters.
    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&h[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bec, bsc};

    #[test]
    fn both_layouts_parse() {
        let a: BmsChannel<f64> = BmsChannel::from_json(r#"{"symbols": [[0.89, 0.11], [0.11, 0.89]]}"#).unwrap();
        let b: BmsChannel<f64> = BmsChannel::from_json(r#"{"mixture": [[1.0, 0.11]]}"#).unwrap();
        assert!(a.approx_eq(&b, 1e-15));
        assert!(a.approx_eq(&bsc(0.11).unwrap(), 1e-15));
    }

    #[test]
    fn rejects_unknown_layouts() {
        assert!(BmsChannel::<f64>::from_json(r#"{"weights": []}"#).is_err());
        assert!(BmsChannel::<f64>::from_json(r#"{"mixture": [[1.0, 0.11]], "x": 1}"#).is_err());
        assert!(BmsChannel::<f64>::from_json("[").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let w = bec(0.3).unwrap();
        let back: BmsChannel<f64> = BmsChannel::from_json(&w.to_json()).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.digest(), w.digest());
        assert_ne!(w.digest(), bec(0.31).unwrap().digest());
    }
}
