//! Pulse search: the codeword on the pyramid closest in angle to a target.

use crate::error::{contract, Result};

/// Finds `y` with `sum |y| = k` maximising `<x, y>^2 / <y, y>`.
///
/// Starts from the truncated L1 projection, then adds the remaining pulses
/// one at a time where they raise the objective the most. Ties go to the
/// lowest index. The projection rounded by largest remainders is kept instead
/// when it scores strictly higher. A zero target puts every pulse on the
/// first coefficient.
pub fn pvq_search(x: &[f64], k: u32) -> Result<Vec<i32>> {
    if k == 0 {
        return Err(contract("pvq search needs at least one pulse"));
    }
    if x.is_empty() {
        return Err(contract("pvq search on an empty vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(contract("pvq search target is not finite"));
    }
    let mut y = vec![0i32; x.len()];
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 == 0.0 {
        y[0] = k as i32;
        return Ok(y);
    }
    let scale = f64::from(k) / l1;
    let scaled: Vec<f64> = x.iter().map(|v| v.abs() * scale).collect();
    let mut placed = 0u32;
    for ((yi, xi), s) in y.iter_mut().zip(x).zip(&scaled) {
        let m = s.trunc() as u32;
        placed += m;
        *yi = if *xi < 0.0 { -(m as i32) } else { m as i32 };
    }
    // rounding noise can overshoot in pathological cases
    while placed > k {
        let i = (0..y.len()).max_by_key(|&i| y[i].unsigned_abs()).unwrap();
        y[i] -= y[i].signum();
        placed -= 1;
    }
    let mut rxy: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, &b)| a.abs() * f64::from(b.unsigned_abs()))
        .sum();
    let mut ryy: f64 = y.iter().map(|&b| f64::from(b) * f64::from(b)).sum();
    for _ in placed..k {
        let mut best = 0;
        let (mut best_num, mut best_den) = (-1.0, 1.0);
        for (i, xi) in x.iter().enumerate() {
            let num = (rxy + xi.abs()).powi(2);
            let den = ryy + 2.0 * f64::from(y[i].unsigned_abs()) + 1.0;
            if num * best_den > best_num * den {
                best = i;
                best_num = num;
                best_den = den;
            }
        }
        rxy += x[best].abs();
        ryy = best_den;
        y[best] += if x[best] < 0.0 { -1 } else { 1 };
    }
    let rounded = round_projection(x, &scaled, k);
    if score(x, &rounded) > score(x, &y) {
        return Ok(rounded);
    }
    Ok(y)
}

/// `<x, y>^2 / <y, y>` with the signs of `y` following `x`.
fn score(x: &[f64], y: &[i32]) -> f64 {
    let (mut xy, mut yy) = (0.0, 0.0);
    for (a, &b) in x.iter().zip(y) {
        xy += a.abs() * f64::from(b.unsigned_abs());
        yy += f64::from(b) * f64::from(b);
    }
    xy * xy / yy
}

/// Largest-remainder rounding of `scaled` (which sums to `k`) to `k` pulses.
fn round_projection(x: &[f64], scaled: &[f64], k: u32) -> Vec<i32> {
    let mut mags: Vec<u32> = scaled.iter().map(|s| s.trunc() as u32).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| scaled[j].fract().total_cmp(&scaled[i].fract()));
    let placed: u32 = mags.iter().sum();
    // rounding noise can leave the floors one off in either direction
    if placed > k {
        return largest_first(x, k);
    }
    for &i in order.iter().cycle().take((k - placed) as usize) {
        mags[i] += 1;
    }
    mags.iter()
        .zip(x)
        .map(|(&m, v)| if *v < 0.0 { -(m as i32) } else { m as i32 })
        .collect()
}

fn largest_first(x: &[f64], k: u32) -> Vec<i32> {
    let i = (0..x.len())
        .max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()).then(b.cmp(&a)))
        .unwrap();
    let mut y = vec![0; x.len()];
    y[i] = if x[i] < 0.0 { -(k as i32) } else { k as i32 };
    y
}

/// `y / |y|`. Fails for the zero vector.
pub fn pvq_normalize(y: &[i32]) -> Result<Vec<f64>> {
    let norm = y
        .iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(contract("cannot normalize the zero codeword"));
    }
    Ok(y.iter().map(|&v| f64::from(v) / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_direction_found() {
        let y = pvq_search(&[0.6, -0.8, 0.0], 7).unwrap();
        assert_eq!(y.iter().map(|v| v.unsigned_abs()).sum::<u32>(), 7);
        assert_eq!(y, vec![3, -4, 0]);
    }

    #[test]
    fn zero_target_goes_to_first_bin() {
        assert_eq!(pvq_search(&[0.0; 4], 3).unwrap(), vec![3, 0, 0, 0]);
    }

    #[test]
    fn signs_follow_target() {
        let x = [-0.1, 0.5, -0.7, 0.2, 0.0];
        let y = pvq_search(&x, 9).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!(*b == 0 || (a.signum() == f64::from(*b).signum()));
        }
    }

    #[test]
    fn never_worse_than_rounded_projection() {
        let x = [0.42, 0.31, -0.27, 0.2];
        for k in 1..12 {
            let y = pvq_search(&x, k).unwrap();
            assert_eq!(y.iter().map(|v| v.unsigned_abs()).sum::<u32>(), k);
            let scale = f64::from(k) / x.iter().map(|v| v.abs()).sum::<f64>();
            let scaled: Vec<f64> = x.iter().map(|v| v.abs() * scale).collect();
            let r = round_projection(&x, &scaled, k);
            assert!(score(&x, &y) >= score(&x, &r));
        }
    }

    #[test]
    fn contract_errors() {
        assert!(pvq_search(&[1.0], 0).is_err());
        assert!(pvq_search(&[], 1).is_err());
        assert!(pvq_search(&[f64::NAN, 1.0], 1).is_err());
        assert!(pvq_normalize(&[0, 0]).is_err());
    }

    #[test]
    fn normalize_unit() {
        let u = pvq_normalize(&[3, -4]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] + 0.8).abs() < 1e-15);
    }
}
