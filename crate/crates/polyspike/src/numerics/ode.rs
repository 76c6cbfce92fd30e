//! Dormand-Prince 5(4) integrator with event-style early exit.

/// Outcome of an integration run.
#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    /// Reached the requested end point.
    Finished,
    /// The `halt` predicate fired on an accepted step.
    Halted,
    /// Step size collapsed below the floor.
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub stop: Stop,
}

impl<const D: usize> Trajectory<D> {
    pub fn last(&self) -> (f64, [f64; D]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-12, atol: 1e-15, h_init: 1e-4, h_max: 0.05 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`, recording every accepted step.
/// `halt(t, y)` is checked after each accepted step.
pub fn integrate<const D: usize, F, H>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    tol: Tolerances,
    mut halt: H,
) -> Trajectory<D>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    H: FnMut(f64, &[f64; D]) -> bool,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = tol.h_init.min(t1 - t0);
    let mut k1 = f(t, &y);
    let mut traj = Trajectory { t: vec![t], y: vec![y], stop: Stop::Finished };
    while t < t1 {
        if h < 1e-14 * t.abs().max(1.0) {
            traj.stop = Stop::StepUnderflow;
            return traj;
        }
        let h_eff = h.min(t1 - t);
        let k2 = f(t + C2 * h_eff, &axpy(&y, h_eff, &[(A21, &k1)]));
        let k3 = f(t + C3 * h_eff, &axpy(&y, h_eff, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h_eff, &axpy(&y, h_eff, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h_eff,
            &axpy(&y, h_eff, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h_eff,
            &axpy(&y, h_eff, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h_eff, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h_eff, &y_new);
        let mut err = 0.0f64;
        for i in 0..D {
            let e = h_eff
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            t += h_eff;
            y = y_new;
            k1 = k7;
            traj.t.push(t);
            traj.y.push(y);
            if halt(t, &y) {
                traj.stop = Stop::Halted;
                return traj;
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h_eff * fac).min(tol.h_max);
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let tol = Tolerances { rtol: 1e-12, atol: 1e-14, h_init: 1e-3, h_max: 0.1 };
        let tr = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            tol,
            |_, _| false,
        );
        let (_, y) = tr.last();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn halt_predicate_stops_early() {
        let tr = integrate(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            10.0,
            Tolerances::default(),
            |_, y| y[0] < 0.5,
        );
        assert_eq!(tr.stop, Stop::Halted);
        let (t, _) = tr.last();
        assert!(t > 2f64.ln() - 0.06 && t < 2f64.ln() + 0.06);
    }
}
