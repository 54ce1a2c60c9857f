//! Adaptive Dormand–Prince 5(4) integrator for small autonomous systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

fn lin(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates `y' = f(y)` from `x0` to `x1`, calling `observe(x, y)` after
/// every accepted step (including the final one at `x1`).
pub(crate) fn integrate<F, O>(
    f: F,
    x0: f64,
    x1: f64,
    y0: State,
    tol: Tolerances,
    mut observe: O,
) -> Result<State>
where
    F: Fn(&State) -> State,
    O: FnMut(f64, &State),
{
    let span = x1 - x0;
    let h_min = 1e-15 * span.abs().max(1e-300);
    let mut h = span * 1e-3;
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut steps = 0usize;
    while x < x1 {
        if x + h > x1 {
            h = x1 - x;
        }
        let k2 = f(&lin(&y, &[(A21, &k1)], h));
        let k3 = f(&lin(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(&lin(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(&lin(
            &y,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            h,
        ));
        let k6 = f(&lin(
            &y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ));
        let y_new = lin(
            &y,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            h,
        );
        let k7 = f(&y_new);
        let mut err = 0.0f64;
        for i in 0..2 {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            x = if x1 - (x + h) < h_min { x1 } else { x + h };
            y = y_new;
            k1 = k7;
            observe(x, &y);
            steps += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min && x < x1 {
            return Err(Error::IntegrationFailure { x });
        }
        if steps > 10_000_000 {
            return Err(Error::IntegrationFailure { x });
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let tol = Tolerances {
            rtol: 1e-11,
            atol: 1e-13,
        };
        let y = integrate(|y| [y[1], -y[0]], 0.0, 10.0, [0.0, 1.0], tol, |_, _| {}).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-9);
        assert!((y[1] - 10f64.cos()).abs() < 1e-9);
    }
}
