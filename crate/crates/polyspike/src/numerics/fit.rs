//! Small dense least-squares fits.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares line through `(x, y)`.
pub fn line(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LinearFit { slope, intercept, r_squared }
}

#[derive(Debug, Clone)]
pub struct LstsqFit {
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    pub condition: f64,
}

/// Solves `min ||A c - b||` for a tall design matrix given by rows.
/// Columns are scaled to unit norm before the SVD, and `condition` refers to
/// the scaled problem. Returns `None` if the design is numerically rank deficient.
pub fn least_squares(rows: &[Vec<f64>], b: &[f64]) -> Option<LstsqFit> {
    let m = rows.len();
    let n = rows.first()?.len();
    if m < n {
        return None;
    }
    let mut a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mut scale = vec![1.0; n];
    for j in 0..n {
        let s = a.column(j).norm();
        if s == 0.0 {
            return None;
        }
        scale[j] = s;
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let bv = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-13 * smax {
        return None;
    }
    let c = svd.solve(&bv, 1e-15 * smax).ok()?;
    let res = &a * &c - &bv;
    let coefficients = (0..n).map(|j| c[j] / scale[j]).collect();
    Some(LstsqFit {
        coefficients,
        residual_rms: (res.norm_squared() / m as f64).sqrt(),
        condition: smax / smin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = line(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recovers_exact_model() {
        let rows: Vec<Vec<f64>> = (1..10).map(|i| vec![1.0, 1.0 / i as f64, (i as f64).sqrt()]).collect();
        let b: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - 2.0 * r[1] + 0.25 * r[2]).collect();
        let f = least_squares(&rows, &b).unwrap();
        for (c, e) in f.coefficients.iter().zip([3.0, -2.0, 0.25]) {
            assert!((c - e).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert!(least_squares(&rows, &[0.0; 5]).is_none());
    }
}
