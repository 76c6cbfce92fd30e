//! Adaptive Gauss-Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = hl * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * hl, ((rk - rg) * hl).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Integrates `f` over `[a, b]` to `max(abs_tol, rel_tol*|I|)` by interval bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    let (v0, e0) = gk15(&f, a, b);
    let mut segs = vec![(a, b, v0, e0)];
    let mut value = v0;
    let mut error = e0;
    for _ in 0..2000 {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return QuadResult { value, error, converged: true };
        }
        let (i, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (sa, sb, sv, se) = segs.swap_remove(i);
        let m = 0.5 * (sa + sb);
        let (v1, e1) = gk15(&f, sa, m);
        let (v2, e2) = gk15(&f, m, sb);
        value += v1 + v2 - sv;
        error += e1 + e2 - se;
        segs.push((sa, m, v1, e1));
        segs.push((m, sb, v2, e2));
    }
    let converged = error <= abs_tol.max(rel_tol * value.abs());
    QuadResult { value, error, converged }
}

/// Sums adaptive integrals over consecutive breakpoints.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    let mut out = QuadResult { value: 0.0, error: 0.0, converged: true };
    let pieces = (breaks.len().max(2) - 1) as f64;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = integrate(&f, w[0], w[1], abs_tol / pieces, rel_tol);
        out.value += r.value;
        out.error += r.error;
        out.converged &= r.converged;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14);
        assert!((r.value - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        let r = integrate(|x: f64| (-1000.0 * (x - 0.3).powi(2)).exp(), 0.0, 1.0, 1e-13, 1e-12);
        let exact = (std::f64::consts::PI / 1000.0).sqrt();
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn pieces_match_whole() {
        let f = |x: f64| x.sin().abs();
        let r = integrate_pieces(f, &[0.0, std::f64::consts::PI, 2.0 * std::f64::consts::PI], 1e-13, 1e-13);
        assert!((r.value - 4.0).abs() < 1e-11);
    }
}
