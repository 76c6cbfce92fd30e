//! Generic numerical building blocks shared by the solvers.

pub mod fit;
pub mod interp;
pub mod ode;
pub mod quadrature;

/// Quintic smoothstep `10x^3 - 15x^4 + 6x^5`, clamped to `[0, 1]`.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

pub fn smoothstep_d1(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

/// Antiderivative of [`smoothstep`] vanishing at 0, valid on `[0, 1]`.
pub fn smoothstep_integral(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x.powi(4) * (2.5 + x * (-3.0 + x))
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// `Gamma(n/2)` for positive integer `n`.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n >= 1);
    let mut g = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if n.is_multiple_of(2) { 2 } else { 1 };
    while k + 2 <= n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * pi * pi).abs() < 1e-13);
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep_integral(1.0) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for &x in &[0.2, 0.5, 0.9] {
            let fd = (smoothstep_integral(x + h) - smoothstep_integral(x - h)) / (2.0 * h);
            assert!((fd - smoothstep(x)).abs() < 1e-9);
            let fd1 = (smoothstep(x + h) - smoothstep(x - h)) / (2.0 * h);
            assert!((fd1 - smoothstep_d1(x)).abs() < 1e-8);
        }
    }
}
