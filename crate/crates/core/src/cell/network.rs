use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::wrap_degrees;

/// A two-terminal resistor/capacitor network standing in for the cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellNetwork {
    Resistor(f64),
    Capacitor(f64),
    Series(Vec<CellNetwork>),
    Parallel(Vec<CellNetwork>),
}

impl CellNetwork {
    pub fn resistor(ohms: f64) -> Self {
        CellNetwork::Resistor(ohms)
    }

    pub fn capacitor(farads: f64) -> Self {
        CellNetwork::Capacitor(farads)
    }

    pub fn series(children: impl IntoIterator<Item = CellNetwork>) -> Self {
        CellNetwork::Series(children.into_iter().collect())
    }

    pub fn parallel(children: impl IntoIterator<Item = CellNetwork>) -> Self {
        CellNetwork::Parallel(children.into_iter().collect())
    }

    /// `R ∥ C`, the topology of the decade-box test cells.
    pub fn parallel_rc(ohms: f64, farads: f64) -> Self {
        Self::parallel([Self::resistor(ohms), Self::capacitor(farads)])
    }

    /// Checks element values and that composite nodes are non-empty.
    pub fn validate(&self) -> Result<()> {
        match self {
            CellNetwork::Resistor(v) | CellNetwork::Capacitor(v) => {
                if v.is_finite() && *v > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "element value must be positive and finite, got {v}"
                    )))
                }
            }
            CellNetwork::Series(ch) | CellNetwork::Parallel(ch) => {
                if ch.is_empty() {
                    return Err(Error::invalid("series/parallel node without children"));
                }
                ch.iter().try_for_each(CellNetwork::validate)
            }
        }
    }

    pub fn resistor_count(&self) -> usize {
        match self {
            CellNetwork::Resistor(_) => 1,
            CellNetwork::Capacitor(_) => 0,
            CellNetwork::Series(ch) | CellNetwork::Parallel(ch) => {
                ch.iter().map(CellNetwork::resistor_count).sum()
            }
        }
    }

    pub fn capacitor_count(&self) -> usize {
        match self {
            CellNetwork::Resistor(_) => 0,
            CellNetwork::Capacitor(_) => 1,
            CellNetwork::Series(ch) | CellNetwork::Parallel(ch) => {
                ch.iter().map(CellNetwork::capacitor_count).sum()
            }
        }
    }

    fn impedance_unchecked(&self, omega: f64) -> Complex64 {
        match self {
            CellNetwork::Resistor(r) => Complex64::new(*r, 0.0),
            CellNetwork::Capacitor(c) => Complex64::new(0.0, -1.0 / (omega * c)),
            CellNetwork::Series(ch) => ch.iter().map(|n| n.impedance_unchecked(omega)).sum(),
            CellNetwork::Parallel(ch) => {
                let y: Complex64 = ch.iter().map(|n| n.impedance_unchecked(omega).inv()).sum();
                y.inv()
            }
        }
    }
}

/// Renders the network in the s-expression notation accepted by
/// [`crate::cell::parse_cell`].
impl fmt::Display for CellNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellNetwork::Resistor(v) => write!(f, "(r {v})"),
            CellNetwork::Capacitor(v) => write!(f, "(c {v})"),
            CellNetwork::Series(ch) | CellNetwork::Parallel(ch) => {
                let head = if matches!(self, CellNetwork::Series(_)) {
                    "series"
                } else {
                    "parallel"
                };
                write!(f, "({head}")?;
                for c in ch {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Complex impedance with polar accessors. Phase is reported in `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexImpedance(pub Complex64);

impl ComplexImpedance {
    pub fn from_polar_deg(magnitude: f64, phase_deg: f64) -> Self {
        ComplexImpedance(Complex64::from_polar(magnitude, phase_deg.to_radians()))
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn phase_deg(&self) -> f64 {
        wrap_degrees(self.0.im.atan2(self.0.re).to_degrees())
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "frequency must be positive and finite, got {f}"
        )))
    }
}

/// Impedance of an arbitrary series/parallel network at frequency `f` (Hz).
pub fn impedance_at(network: &CellNetwork, f: f64) -> Result<ComplexImpedance> {
    check_frequency(f)?;
    network.validate()?;
    Ok(ComplexImpedance(network.impedance_unchecked(2.0 * PI * f)))
}

fn check_rc(r: f64, c: f64, f: f64) -> Result<()> {
    check_frequency(f)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!(
            "resistance must be positive, got {r}"
        )));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::invalid(format!(
            "capacitance must be non-negative, got {c}"
        )));
    }
    Ok(())
}

/// `|Z| = 1 / sqrt(1/R² + (2πfC)²)` for a resistor in parallel with a capacitor.
pub fn parallel_rc_magnitude(r: f64, c: f64, f: f64) -> Result<f64> {
    check_rc(r, c, f)?;
    let wc = 2.0 * PI * f * c;
    Ok(1.0 / (1.0 / (r * r) + wc * wc).sqrt())
}

/// `φ = atan(-2πfRC)` in degrees for a resistor in parallel with a capacitor.
pub fn parallel_rc_phase(r: f64, c: f64, f: f64) -> Result<f64> {
    check_rc(r, c, f)?;
    Ok((-2.0 * PI * f * r * c).atan().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn redox() -> CellNetwork {
        CellNetwork::series([
            CellNetwork::resistor(560.0),
            CellNetwork::parallel_rc(10e3, 33e-9),
        ])
    }

    #[test]
    fn decade_rc_rows() {
        let z = impedance_at(&CellNetwork::parallel_rc(1e3, 10e-9), 10_080.0).unwrap();
        assert!((z.magnitude() - 844.81).abs() < 0.01);
        assert!((z.phase_deg() + 32.35).abs() < 0.005);

        let z = impedance_at(&CellNetwork::parallel_rc(10e3, 8.2e-9), 10_080.0).unwrap();
        assert!((z.magnitude() - 1890.78).abs() < 0.01);
        assert!((z.phase_deg() + 79.10).abs() < 0.005);

        assert!((parallel_rc_magnitude(1e3, 8.2e-9, 10_080.0).unwrap() - 887.46).abs() < 0.01);
        assert!((parallel_rc_magnitude(10e3, 4.4e-9, 10_080.0).unwrap() - 3377.57).abs() < 0.01);
        assert!((parallel_rc_phase(1e3, 10e-9, 10_080.0).unwrap() + 32.35).abs() < 0.005);
        assert!((parallel_rc_phase(10e3, 5.55e-9, 10_080.0).unwrap() + 74.12).abs() < 0.005);
    }

    #[test]
    fn open_capacitor_limits() {
        assert_eq!(parallel_rc_magnitude(470.0, 0.0, 123.0).unwrap(), 470.0);
        assert_eq!(parallel_rc_phase(470.0, 0.0, 123.0).unwrap(), 0.0);
    }

    #[test]
    fn resistor_is_real() {
        for f in [1e-3, 1.0, 1e3, 1e9] {
            let z = impedance_at(&CellNetwork::resistor(2200.0), f).unwrap();
            assert_eq!(z.magnitude(), 2200.0);
            assert_eq!(z.phase_deg(), 0.0);
        }
    }

    #[test]
    fn redox_dummy_values() {
        // Xc = 1/(2π·1k·33n) = 4822.9 Ω; 10k ∥ -jXc, plus 560 Ω
        let z = impedance_at(&redox(), 1000.0).unwrap();
        assert!((z.magnitude() - 4614.9649).abs() < 1e-3);
        assert!((z.phase_deg() + 57.97777).abs() < 1e-4);

        let z = impedance_at(&redox(), 1e12).unwrap();
        assert!((z.magnitude() - 560.0).abs() < 1e-3);
        assert!(z.phase_deg().abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(impedance_at(&CellNetwork::resistor(1.0), 0.0).is_err());
        assert!(impedance_at(&CellNetwork::resistor(1.0), f64::NAN).is_err());
        assert!(impedance_at(&CellNetwork::resistor(-1.0), 1.0).is_err());
        assert!(impedance_at(&CellNetwork::capacitor(f64::INFINITY), 1.0).is_err());
        assert!(impedance_at(&CellNetwork::Series(vec![]), 1.0).is_err());
        assert!(parallel_rc_magnitude(0.0, 1e-9, 1.0).is_err());
        assert!(parallel_rc_phase(1.0, -1e-9, 1.0).is_err());
    }

    #[test]
    fn display_is_sexpr() {
        assert_eq!(
            redox().to_string(),
            "(series (r 560) (parallel (r 10000) (c 0.000000033)))"
        );
    }
}
