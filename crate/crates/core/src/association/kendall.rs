use crate::error::{Error, Result};

fn check_inputs(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::invalid("rank correlation needs at least two observations"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("rank correlation input contains NaN"));
    }
    Ok(())
}

/// Pairs tied within each run of equal values, summed over runs.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in sorted {
        if prev.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
        }
        prev = Some(v);
    }
    total + run * (run.saturating_sub(1)) / 2
}

/// Sorts `v` and returns the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_inputs(a, b)?;
    let n = a.len() as u64;
    // Adding 0.0 folds -0.0 into 0.0 so bit patterns identify ties.
    let mut pairs: Vec<(f64, f64)> = a.iter().zip(b).map(|(x, y)| (x + 0.0, y + 0.0)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let n0 = n * (n - 1) / 2;
    let ties_a = tied_pairs(pairs.iter().map(|p| p.0.to_bits()));
    let ties_joint = tied_pairs(pairs.iter().map(|p| (p.0.to_bits(), p.1.to_bits())));
    let mut bs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; bs.len()];
    let swaps = merge_count(&mut bs, &mut buf);
    let ties_b = tied_pairs(bs.iter().map(|v| v.to_bits()));
    if ties_a == n0 || ties_b == n0 {
        return Err(Error::invalid("Kendall's tau is undefined for a constant input"));
    }
    let s = n0 as i128 - ties_a as i128 - ties_b as i128 + ties_joint as i128 - 2 * swaps as i128;
    let denom = ((n0 - ties_a) as f64).sqrt() * ((n0 - ties_b) as f64).sqrt();
    Ok((s as f64 / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cases() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(kendall_tau(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn negative_zero_ties_with_zero() {
        // total_cmp orders -0 before 0, but they must still count as a tie.
        let t = kendall_tau(&[-0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        let u = kendall_tau(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t, u);
    }
}
