//! Piecewise cubic Hermite interpolation with Fritsch-Carlson slope limiting.

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    uniform_step: Option<f64>,
}

impl MonotoneCubic {
    /// Builds from nodes and slope estimates. Slopes are limited so that the
    /// interpolant is monotone on every interval where the data are.
    pub fn new(x: Vec<f64>, y: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == slopes.len());
        let n = x.len();
        let mut d = slopes;
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            let delta = (y[i + 1] - y[i]) / h;
            if delta == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            if d[i] * delta < 0.0 {
                d[i] = 0.0;
            }
            if d[i + 1] * delta < 0.0 {
                d[i + 1] = 0.0;
            }
            let a = d[i] / delta;
            let b = d[i + 1] / delta;
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                d[i] = t * a * delta;
                d[i + 1] = t * b * delta;
            }
        }
        let h0 = x[1] - x[0];
        let uniform = x
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-12 * h0.max(1.0));
        MonotoneCubic { x, y, d, uniform_step: uniform.then_some(h0) }
    }

    /// Builds with three-point finite-difference slopes.
    pub fn from_points(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut d = vec![0.0; n];
        for i in 0..n {
            d[i] = if i == 0 {
                (y[1] - y[0]) / (x[1] - x[0])
            } else if i == n - 1 {
                (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2])
            } else {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let d0 = (y[i] - y[i - 1]) / h0;
                let d1 = (y[i + 1] - y[i]) / h1;
                (h1 * d0 + h0 * d1) / (h0 + h1)
            };
        }
        Self::new(x, y, d)
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        if let Some(h) = self.uniform_step {
            let k = ((t - self.x[0]) / h).floor();
            return (k.max(0.0) as usize).min(n - 2);
        }
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and first derivative at `t` (clamped to the table range).
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(self.x[0], self.x_max());
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1];
        let dh00 = 6.0 * s2 - 6.0 * s;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let dv = (dh00 * self.y[i] + dh01 * self.y[i + 1]) / h + dh10 * self.d[i] + dh11 * self.d[i + 1];
        (v, dv)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_derivative(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let f = |t: f64| 1.0 - t * t * t;
        let df = |t: f64| -3.0 * t * t;
        let c = MonotoneCubic::new(x.clone(), x.iter().map(|&t| f(t)).collect(), x.iter().map(|&t| df(t)).collect());
        for k in 0..100 {
            let t = k as f64 * 0.01;
            assert!((c.eval(t) - f(t)).abs() < 1e-14);
            assert!((c.eval_with_derivative(t).1 - df(t)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(steps in proptest::collection::vec(0.0f64..1.0, 3..20)) {
            let mut y = vec![0.0];
            for s in &steps { let last = *y.last().unwrap(); y.push(last + s); }
            let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
            let c = MonotoneCubic::from_points(x.clone(), y);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=(10 * (x.len() - 1)) {
                let v = c.eval(k as f64 * 0.1);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
