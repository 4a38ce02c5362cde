use crate::{Error, Result};

fn power(ell: usize, j: usize) -> Result<usize> {
    ell.checked_pow(j as u32)
        .ok_or_else(|| Error::InvalidArgument(format!("{ell}^{j} overflows")))
}

/// Digits of `i - 1` in base `l`, most significant first, each plus one.
pub fn tau(j: usize, i: usize, ell: usize) -> Result<Vec<usize>> {
    let n = power(ell, j)?;
    if i < 1 || i > n {
        return Err(Error::InvalidArgument(format!("index {i} outside 1..={n}")));
    }
    let mut digits = vec![0; j];
    let mut x = i - 1;
    for d in digits.iter_mut().rev() {
        *d = x % ell + 1;
        x /= ell;
    }
    Ok(digits)
}

/// Inverse of [`tau`].
pub fn tau_inv(digits: &[usize], ell: usize) -> Result<usize> {
    let mut x = 0usize;
    for &d in digits {
        if d < 1 || d > ell {
            return Err(Error::InvalidArgument(format!("digit {d} outside 1..={ell}")));
        }
        x = x * ell + (d - 1);
    }
    Ok(x + 1)
}

/// `pi^(j)(i)`: keeps the first `t-j-1` digits and moves the last digit in
/// front of the remaining `j`.
pub fn pi_perm(j: usize, t: usize, ell: usize, i: usize) -> Result<usize> {
    if j < 1 || j + 1 > t {
        return Err(Error::InvalidArgument(format!("permutation level {j} outside 1..={}", t.saturating_sub(1))));
    }
    let mut d = tau(t, i, ell)?;
    d[t - j - 1..].rotate_right(1);
    tau_inv(&d, ell)
}

/// Zero-based table of `pi^(j)`.
pub(crate) fn pi_table(j: usize, t: usize, ell: usize) -> Vec<u32> {
    let n = ell.pow(t as u32);
    (1..=n).map(|i| (pi_perm(j, t, ell, i).expect("valid index") - 1) as u32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_base_three() {
        assert_eq!(tau(2, 1, 3).unwrap(), vec![1, 1]);
        assert_eq!(tau(2, 5, 3).unwrap(), vec![2, 2]);
        assert_eq!(tau(2, 9, 3).unwrap(), vec![3, 3]);
        assert!(tau(2, 10, 3).is_err());
        assert!(tau(2, 0, 3).is_err());
        for i in 1..=27 {
            assert_eq!(tau_inv(&tau(3, i, 3).unwrap(), 3).unwrap(), i);
        }
    }

    #[test]
    fn pi_examples() {
        // digits (1,2) -> (2,1)
        assert_eq!(pi_perm(1, 2, 3, 2).unwrap(), 4);
        for (j, t, ell) in [(1, 2, 3), (1, 3, 2), (2, 3, 2), (3, 4, 2), (1, 3, 4)] {
            assert_eq!(pi_perm(j, t, ell, 1).unwrap(), 1);
        }
        let mut all: Vec<usize> = (1..=8).map(|i| pi_perm(2, 3, 2, i).unwrap()).collect();
        all.sort();
        assert_eq!(all, (1..=8).collect::<Vec<_>>());
        assert!(pi_perm(0, 3, 2, 1).is_err());
        assert!(pi_perm(3, 3, 2, 1).is_err());
    }

    #[test]
    fn pi_top_level_rotates_everything() {
        // pi^(t-1)(i) = tau^-1(i_t, i_1, ..., i_{t-1})
        let (t, ell) = (4, 3);
        for i in 1..=81 {
            let d = tau(t, i, ell).unwrap();
            let want = tau_inv(&[d[3], d[0], d[1], d[2]], ell).unwrap();
            assert_eq!(pi_perm(t - 1, t, ell, i).unwrap(), want);
        }
    }
}
