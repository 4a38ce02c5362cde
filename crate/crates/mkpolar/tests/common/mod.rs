//! Brute-force references shared by the integration tests and the
//! acceptance run. Nothing here calls into the library's transforms.
#![allow(dead_code)]

use mkpolar::construct::ConstructionPlan;
use mkpolar::rng::SplitMix64;
use mkpolar::{BmsChannel, Kernel};

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Symmetric table with `pairs` mirrored symbol pairs and, optionally, one
/// `w0 = w1` symbol. Every entry is strictly positive.
pub fn random_symbols(rng: &mut SplitMix64, pairs: usize, with_tie: bool) -> Vec<(f64, f64)> {
    let mut raw = Vec::new();
    for _ in 0..pairs {
        let a = 0.05 + rng.next_f64();
        let b = 0.05 + rng.next_f64();
        raw.push((a, b));
        raw.push((b, a));
    }
    if with_tie {
        let c = 0.05 + rng.next_f64();
        raw.push((c, c));
    }
    let s: f64 = raw.iter().map(|x| x.0).sum();
    raw.iter().map(|&(a, b)| (a / s, b / s)).collect()
}

pub fn random_channel(rng: &mut SplitMix64, max_symbols: usize) -> BmsChannel<f64> {
    let pairs = 1 + rng.below((max_symbols / 2) as u64) as usize;
    let tie = 2 * pairs < max_symbols && rng.next_bit() == 1;
    BmsChannel::from_symbols(&random_symbols(rng, pairs, tie)).unwrap()
}

/// Row vector times a 0/1 matrix over GF(2).
pub fn row_times(u: &[u8], m: &[Vec<u8>]) -> Vec<u8> {
    let mut x = vec![0u8; m[0].len()];
    for (i, &b) in u.iter().enumerate() {
        if b == 1 {
            for (xj, &mij) in x.iter_mut().zip(&m[i]) {
                *xj ^= mij;
            }
        }
    }
    x
}

fn bits_of(v: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| (v >> k & 1) as u8).collect()
}

/// `H(U_i | U_1..U_{i-1}, Y)` for `X = U M`, `U` uniform, every `i`, by
/// enumerating the joint law of `(U, Y)`.
pub fn dense_bit_entropies(m: &[Vec<u8>], syms: &[(f64, f64)]) -> Vec<f64> {
    let n = m.len();
    let s = syms.len();
    let ys = s.pow(n as u32);
    let mut joint = vec![0.0f64; (1 << n) * ys];
    for u in 0..1usize << n {
        let x = row_times(&bits_of(u, n), m);
        for y in 0..ys {
            let mut p = 1.0 / (1u64 << n) as f64;
            let mut rest = y;
            for &xj in &x {
                let sym = syms[rest % s];
                rest /= s;
                p *= if xj == 0 { sym.0 } else { sym.1 };
            }
            joint[u * ys + y] = p;
        }
    }
    let entropy_of_prefix = |len: usize| -> f64 {
        let mask = (1usize << len) - 1;
        let mut marg = vec![0.0f64; (1 << len) * ys];
        for u in 0..1usize << n {
            for y in 0..ys {
                marg[(u & mask) * ys + y] += joint[u * ys + y];
            }
        }
        marg.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
    };
    let h: Vec<f64> = (0..=n).map(entropy_of_prefix).collect();
    (0..n).map(|i| h[i + 1] - h[i]).collect()
}

/// Exact `ln P(y | u_<i = prefix, u_i = 0) / P(y | .., u_i = 1)` with the
/// later inputs uniform; `y` indexes `syms`.
pub fn exact_bit_llr(m: &[Vec<u8>], syms: &[(f64, f64)], prefix: &[u8], y: &[usize]) -> f64 {
    let n = m.len();
    let i = prefix.len();
    let mut num = [0.0f64; 2];
    for tail in 0..1usize << (n - i) {
        let mut u = prefix.to_vec();
        u.extend(bits_of(tail, n - i));
        let x = row_times(&u, m);
        let p: f64 = x.iter().zip(y).map(|(&xj, &yj)| if xj == 0 { syms[yj].0 } else { syms[yj].1 }).product();
        num[u[i] as usize] += p;
    }
    (num[0] / num[1]).ln()
}

/// Codeword of the subtree at `(j, b)` for its leaf inputs, straight from the
/// tree: children split `u` into `l` consecutive parts and block `r` of the
/// output is `(c_1[r], .., c_l[r]) K`.
pub fn tree_encode(plan: &ConstructionPlan, j: usize, b: usize, u: &[u8]) -> Vec<u8> {
    if j == plan.t() {
        return u.to_vec();
    }
    let ell = plan.ell();
    let k = plan.kernel(j, b);
    let part = u.len() / ell;
    let children: Vec<Vec<u8>> =
        (0..ell).map(|i| tree_encode(plan, j + 1, b * ell + i, &u[i * part..(i + 1) * part])).collect();
    let mut x = vec![0u8; u.len()];
    for r in 0..part {
        for c in 0..ell {
            let mut bit = 0;
            for (i, ch) in children.iter().enumerate() {
                bit ^= ch[r] & k.get(i, c) as u8;
            }
            x[r * ell + c] = bit;
        }
    }
    x
}

/// Whether `v` lies in the GF(2) span of `rows`.
pub fn in_span(v: u64, rows: &[u64]) -> bool {
    let mut basis: Vec<u64> = Vec::new();
    for &r in rows {
        let mut x = r;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    let mut x = v;
    for &b in &basis {
        x = x.min(x ^ b);
    }
    x == 0
}

/// `H(V_1 | Y)` over BEC(eps) for generator rows (row 0 carries `V_1`):
/// the probability that row 0, restricted to the unerased columns, lies in the
/// span of the other restricted rows.
pub fn bec_rank_entropy(rows: &[u64], ell: usize, eps: f64) -> f64 {
    let mut h = 0.0;
    for seen in 0u64..1 << ell {
        let k = seen.count_ones() as i32;
        let w = (1.0 - eps).powi(k) * eps.powi(ell as i32 - k);
        let restricted: Vec<u64> = rows[1..].iter().map(|r| r & seen).collect();
        if in_span(rows[0] & seen, &restricted) {
            h += w;
        }
    }
    h
}

pub fn random_invertible(ell: usize, rng: &mut SplitMix64) -> Kernel {
    loop {
        let k = Kernel::random(ell, rng.next_u64());
        if k.is_invertible() {
            return k;
        }
    }
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
