//! Square GF(2) kernels.
//!
//! Row `r` is a `u64` whose bit `c` is the entry `K[r][c]`, so `l <= 64`.
//! Text form is `l` lines of `l` characters `0`/`1`, column 0 first.

mod search;

pub use search::{kernel_search, SearchBranch, SearchMode, SearchPolicy, SearchReport, StopConditions, StopRule};
pub(crate) use search::search_with_channels;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Kernel {
    ell: usize,
    rows: Vec<u64>,
}

fn row_mask(ell: usize) -> u64 {
    if ell == 64 {
        u64::MAX
    } else {
        (1u64 << ell) - 1
    }
}

/// Rank over GF(2) of a list of row bit-vectors.
pub fn gf2_rank(rows: &[u64]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in 0..64 {
        let pivot = 1u64 << bit;
        let Some(p) = (rank..rows.len()).find(|&i| rows[i] & pivot != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let r = rows[rank];
        for row in rows.iter_mut().skip(rank + 1) {
            if *row & pivot != 0 {
                *row ^= r;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

impl Kernel {
    pub fn new(ell: usize, rows: Vec<u64>) -> Result<Self> {
        if ell == 0 || ell > 64 {
            return Err(Error::InvalidArgument(format!("kernel size {ell} outside 1..=64")));
        }
        if rows.len() != ell {
            return Err(Error::InvalidArgument(format!("kernel needs {ell} rows, got {}", rows.len())));
        }
        if rows.iter().any(|&r| r & !row_mask(ell) != 0) {
            return Err(Error::InvalidArgument("kernel row has bits beyond column l".into()));
        }
        Ok(Self { ell, rows })
    }

    pub fn identity(ell: usize) -> Self {
        Self { ell, rows: (0..ell).map(|r| 1u64 << r).collect() }
    }

    /// `[[1,0],[1,1]]` raised to the `s`-th Kronecker power.
    pub fn arikan(s: u32) -> Self {
        let a2 = Self { ell: 2, rows: vec![0b01, 0b11] };
        let mut k = a2.clone();
        for _ in 1..s {
            k = k.kronecker(&a2);
        }
        k
    }

    /// `self ⊗ other`.
    pub fn kronecker(&self, other: &Kernel) -> Kernel {
        let (a, b) = (self.ell, other.ell);
        let mut rows = vec![0u64; a * b];
        for ra in 0..a {
            for rb in 0..b {
                let mut row = 0u64;
                for ca in 0..a {
                    if self.get(ra, ca) {
                        row |= other.rows[rb] << (ca * b);
                    }
                }
                rows[ra * b + rb] = row;
            }
        }
        Kernel { ell: a * b, rows }
    }

    /// Uniform random bits: row `r` is the low `l` bits of the `r`-th
    /// SplitMix64 output for `seed`. Not necessarily invertible.
    pub fn random(ell: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mask = row_mask(ell);
        Self { ell, rows: (0..ell).map(|_| rng.next_u64() & mask).collect() }
    }

    /// The `n`-th matrix in lexicographic order of its row-major bit string,
    /// first entry most significant. `l^2 <= 63`.
    pub fn lex_candidate(ell: usize, n: u64) -> Self {
        let total = ell * ell;
        let mut rows = vec![0u64; ell];
        for (r, row) in rows.iter_mut().enumerate() {
            for c in 0..ell {
                let pos = total - 1 - (r * ell + c);
                if n >> pos & 1 == 1 {
                    *row |= 1 << c;
                }
            }
        }
        Self { ell, rows }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn row(&self, r: usize) -> u64 {
        self.rows[r]
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r] >> c & 1 == 1
    }

    pub fn rank(&self) -> usize {
        gf2_rank(&self.rows)
    }

    /// False when some column order makes `K` upper triangular; such kernels
    /// give bit-channels that are all copies of `W`. For invertible `K` that is
    /// the case iff the rows `r..l` always span exactly `l - r` columns.
    pub fn is_polarizing(&self) -> bool {
        let mut support = 0u64;
        (0..self.ell).rev().any(|r| {
            support |= self.rows[r];
            support.count_ones() as usize > self.ell - r
        })
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.ell
    }

    /// Row vector times kernel. `u` has bit `r` set for `u_r = 1`; the result
    /// has bit `c` set for `x_c = 1`.
    #[inline]
    pub fn mul_mask(&self, u: u64) -> u64 {
        let mut x = 0;
        let mut u = u;
        while u != 0 {
            let r = u.trailing_zeros() as usize;
            x ^= self.rows[r];
            u &= u - 1;
        }
        x
    }

    /// Row vector times kernel on 0/1 bytes.
    pub fn apply(&self, u: &[u8]) -> Vec<u8> {
        let mask = u.iter().enumerate().fold(0u64, |m, (r, &b)| m | ((b as u64 & 1) << r));
        let x = self.mul_mask(mask);
        (0..self.ell).map(|c| (x >> c & 1) as u8).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        (0..self.ell)
            .map(|r| (0..self.ell).map(|c| if self.get(r, c) { '1' } else { '0' }).collect())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = self.to_strings().join("\n");
        s.push('\n');
        s
    }

    pub fn from_strings<S: AsRef<str>>(lines: &[S]) -> Result<Self> {
        let ell = lines.len();
        let mut rows = Vec::with_capacity(ell);
        for (r, line) in lines.iter().enumerate() {
            let line = line.as_ref().trim();
            if line.chars().count() != ell {
                return Err(Error::Parse(format!(
                    "kernel row {r} has {} entries, expected {ell}",
                    line.chars().count()
                )));
            }
            let mut row = 0u64;
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => row |= 1 << c,
                    _ => return Err(Error::Parse(format!("kernel row {r}: unexpected {ch:?}"))),
                }
            }
            rows.push(row);
        }
        Kernel::new(ell, rows)
    }

    /// Accepts the line format or a JSON array of row strings.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('[') {
            let lines: Vec<String> = serde_json::from_str(t)?;
            return Self::from_strings(&lines);
        }
        let lines: Vec<&str> = t.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        Self::from_strings(&lines)
    }
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lines = Vec::<String>::deserialize(d)?;
        Kernel::from_strings(&lines).map_err(serde::de::Error::custom)
    }
}
