use crate::kernel::Kernel;
use crate::Real;

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_sum_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// LLR of input `i` (1-based) of kernel `k`, given the channel LLRs of its
/// `l` outputs and the already decided inputs `1..i`.
///
/// Sums over all `2^(l-i)` completions of the later inputs in the log domain;
/// a codeword `x` scores `-Σ_{x_j = 1} priors[j]`.
pub fn local_kernel_llr<T: Real>(k: &Kernel, priors: &[T], prefix: &[u8], i: usize) -> T {
    let ell = k.ell();
    debug_assert!(i >= 1 && i <= ell && prefix.len() == i - 1 && priors.len() == ell);
    if ell == 2 {
        if let Some(v) = two_by_two(k, priors, prefix) {
            return v;
        }
    }
    exhaustive(k, priors, prefix, i)
}

/// Closed forms for `[[1,0],[1,1]]` and its column swap.
#[inline]
fn two_by_two<T: Real>(k: &Kernel, priors: &[T], prefix: &[u8]) -> Option<T> {
    let (a, b) = match (k.row(0), k.row(1)) {
        (0b01, 0b11) => (priors[0], priors[1]),
        (0b10, 0b11) => (priors[1], priors[0]),
        _ => return None,
    };
    Some(match prefix.first() {
        None => log_sum_exp(T::zero(), a + b) - log_sum_exp(a, b),
        Some(&u1) => {
            if u1 & 1 == 0 {
                b + a
            } else {
                b - a
            }
        }
    })
}

pub(crate) fn exhaustive<T: Real>(k: &Kernel, priors: &[T], prefix: &[u8], i: usize) -> T {
    let ell = k.ell();
    let base = prefix
        .iter()
        .enumerate()
        .filter(|(_, &b)| b & 1 == 1)
        .fold(0u64, |x, (r, _)| x ^ k.row(r));
    let score = |x: u64| {
        let mut s = T::zero();
        let mut x = x;
        while x != 0 {
            let c = x.trailing_zeros() as usize;
            s = s - priors[c];
            x &= x - 1;
        }
        s
    };
    let free = ell - i;
    let mut acc = [T::neg_infinity(), T::neg_infinity()];
    for (ui, slot) in acc.iter_mut().enumerate() {
        let head = if ui == 1 { base ^ k.row(i - 1) } else { base };
        for v in 0..1u64 << free {
            let mut x = head;
            let mut v = v;
            while v != 0 {
                let r = v.trailing_zeros() as usize;
                x ^= k.row(i + r);
                v &= v - 1;
            }
            *slot = log_sum_exp(*slot, score(x));
        }
    }
    acc[0] - acc[1]
}
