//! Time-domain cell current for a sampled voltage waveform.
//!
//! The applied voltage is treated as piecewise linear between samples. The
//! admittance is split into `k_inf·dv/dt + k0·v + dynamic part`. A first-order
//! dynamic part (at most one independent capacitor) is discretized exactly for
//! piecewise-linear input; higher orders use the trapezoidal rule.

use super::rational::{AdmittanceModel, Poly};
use super::CellNetwork;
use crate::error::{Error, Result};
use crate::signal::Waveform;

/// State of the cell's capacitors before the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// All capacitors discharged.
    #[default]
    Rest,
    /// Capacitors charged to the DC operating point of the first sample.
    Equilibrium,
}

/// Current through `network` (amperes) for the applied voltage `v` (volts),
/// sampled on the same grid as `v`.
pub fn time_domain_current(
    network: &CellNetwork,
    v: &Waveform,
    initial: InitialState,
) -> Result<Waveform> {
    network.validate()?;
    if v.is_empty() {
        return Err(Error::invalid("empty voltage waveform"));
    }
    if network.resistor_count() == 0 {
        return Err(Error::UnsupportedTopology(
            "network has no resistive path".into(),
        ));
    }
    let model = AdmittanceModel::of(network);
    let h = v.step();
    let u = &v.samples;

    let mut out: Vec<f64> = u.iter().map(|&x| model.k0 * x).collect();

    if model.k_inf != 0.0 {
        for (n, o) in out.iter_mut().enumerate() {
            *o += model.k_inf * slope(u, n, h);
        }
    }

    match model.order() {
        0 => {}
        1 => first_order(&model, u, h, initial, &mut out),
        _ => trapezoidal(&model, u, h, initial, &mut out),
    }

    Waveform::new(v.t0, v.rate, out)
}

/// Mean of the left and right slopes of the piecewise-linear input.
fn slope(u: &[f64], n: usize, h: f64) -> f64 {
    let len = u.len();
    if len < 2 {
        0.0
    } else if n == 0 {
        (u[1] - u[0]) / h
    } else if n == len - 1 {
        (u[n] - u[n - 1]) / h
    } else {
        (u[n + 1] - u[n - 1]) / (2.0 * h)
    }
}

/// Exact response of `x' = -σx + u`, `y = r·x` to a piecewise-linear `u`.
fn first_order(model: &AdmittanceModel, u: &[f64], h: f64, initial: InitialState, out: &mut [f64]) {
    let sigma = model.den.coeff(0);
    let r = model.rem.coeff(0);
    let a = sigma * h;

    // x1 = phi·x0 + w0·u0 + w1·u1
    let (phi, w0, w1) = if a == 0.0 {
        (1.0, h / 2.0, h / 2.0)
    } else {
        let phi = (-a).exp();
        let one_minus_phi = -(-a).exp_m1();
        // a - (1 - phi), by series when cancellation would dominate
        let excess = if a < 1e-3 {
            a * a / 2.0 - a * a * a / 6.0 + a.powi(4) / 24.0 - a.powi(5) / 120.0
        } else {
            a - one_minus_phi
        };
        let i0 = one_minus_phi / sigma;
        let i1 = excess / (sigma * a);
        (phi, i0 - i1, i1)
    };

    let mut x = match initial {
        InitialState::Equilibrium if sigma > 0.0 => u[0] / sigma,
        _ => 0.0,
    };
    out[0] += r * x;
    for n in 1..u.len() {
        x = phi * x + w0 * u[n - 1] + w1 * u[n];
        out[n] += r * x;
    }
}

fn binomial_product(minus: usize, plus: usize) -> Poly {
    let mut p = Poly::constant(1.0);
    for _ in 0..minus {
        p = p.mul(&Poly(vec![1.0, -1.0]));
    }
    for _ in 0..plus {
        p = p.mul(&Poly(vec![1.0, 1.0]));
    }
    p
}

/// Bilinear-transform IIR filter for a proper dynamic part of order >= 2.
fn trapezoidal(model: &AdmittanceModel, u: &[f64], h: f64, initial: InitialState, out: &mut [f64]) {
    let order = model.den.degree();
    let c = 2.0 / h;
    let mut b = vec![0.0; order + 1];
    let mut a = vec![0.0; order + 1];
    let mut ck = 1.0;
    for k in 0..=order {
        let basis = binomial_product(k, order - k);
        let pk = model.rem.coeff(k) * ck;
        let dk = model.den.coeff(k) * ck;
        for (j, &coef) in basis.0.iter().enumerate() {
            b[j] += pk * coef;
            a[j] += dk * coef;
        }
        ck *= c;
    }
    let a0 = a[0];
    for v in b.iter_mut().chain(a.iter_mut()) {
        *v /= a0;
    }

    let (u_init, y_init) = match initial {
        InitialState::Equilibrium if model.den.coeff(0) != 0.0 => {
            (u[0], model.rem.coeff(0) / model.den.coeff(0) * u[0])
        }
        _ => (0.0, 0.0),
    };
    let mut u_hist = vec![u_init; order];
    let mut y_hist = vec![y_init; order];
    for (n, &un) in u.iter().enumerate() {
        let mut y = b[0] * un;
        for j in 1..=order {
            y += b[j] * u_hist[j - 1] - a[j] * y_hist[j - 1];
        }
        u_hist.rotate_right(1);
        u_hist[0] = un;
        y_hist.rotate_right(1);
        y_hist[0] = y;
        out[n] += y;
    }
}

/// Longest time the network needs to forget its initial state, taken as the
/// sum of the dynamic part's time constants.
pub fn settling_time_constant(network: &CellNetwork) -> Result<f64> {
    network.validate()?;
    Ok(AdmittanceModel::of(network).time_constant_sum())
}
