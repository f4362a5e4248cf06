//! Driving-point admittance of a network as a rational function of `s`.

use super::CellNetwork;

/// Real polynomial, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn trimmed(mut self) -> Self {
        let d = self.degree();
        self.0.truncate(d + 1);
        if self.0.is_empty() {
            self.0.push(0.0);
        }
        self
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect()).trimmed()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trimmed()
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * k).collect())
    }
}

/// `num(s) / den(s)`.
#[derive(Debug, Clone)]
pub(crate) struct Rational {
    pub num: Poly,
    pub den: Poly,
}

impl Rational {
    fn add(&self, other: &Rational) -> Rational {
        Rational {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    fn recip(self) -> Rational {
        Rational {
            num: self.den,
            den: self.num,
        }
    }
}

fn impedance(network: &CellNetwork) -> Rational {
    match network {
        CellNetwork::Resistor(r) => Rational {
            num: Poly::constant(*r),
            den: Poly::constant(1.0),
        },
        CellNetwork::Capacitor(c) => Rational {
            num: Poly::constant(1.0),
            den: Poly(vec![0.0, *c]),
        },
        CellNetwork::Series(ch) => {
            let mut it = ch.iter().map(impedance);
            let first = it.next().expect("validated network");
            it.fold(first, |acc, z| acc.add(&z))
        }
        CellNetwork::Parallel(ch) => {
            let mut it = ch.iter().map(|c| impedance(c).recip());
            let first = it.next().expect("validated network");
            it.fold(first, |acc, y| acc.add(&y)).recip()
        }
    }
}

/// Admittance split as `Y(s) = k_inf·s + k0 + rem(s)/den(s)` with
/// `deg rem < deg den`.
#[derive(Debug, Clone)]
pub(crate) struct AdmittanceModel {
    pub k_inf: f64,
    pub k0: f64,
    pub rem: Poly,
    pub den: Poly,
}

impl AdmittanceModel {
    pub fn of(network: &CellNetwork) -> AdmittanceModel {
        let z = impedance(network);
        // Y = den_z / num_z
        let num = z.den.trimmed();
        let mut den = z.num.trimmed();
        let lead = den.coeff(den.degree());
        let num = num.scale(1.0 / lead);
        den = den.scale(1.0 / lead);

        let dd = den.degree();
        let mut rem = num.0.clone();
        rem.resize(rem.len().max(dd + 2), 0.0);
        let mut quotient = [0.0f64; 2];
        // long division by a monic denominator; RC admittances have deg num <= deg den + 1
        for q in (0..=1).rev() {
            let k = dd + q;
            let c = rem[k];
            if c != 0.0 {
                quotient[q] = c;
                for (j, d) in den.0.iter().enumerate() {
                    rem[j + q] -= c * d;
                }
                rem[k] = 0.0;
            }
        }
        rem.truncate(dd.max(1));
        if dd == 0 {
            rem = vec![0.0];
        }
        AdmittanceModel {
            k_inf: quotient[1],
            k0: quotient[0],
            rem: Poly(rem),
            den,
        }
    }

    /// Order of the dynamic (proper) part.
    pub fn order(&self) -> usize {
        if self.rem.0.iter().all(|&c| c == 0.0) {
            0
        } else {
            self.den.degree()
        }
    }

    /// Sum of the dynamic part's time constants, an upper bound on the slowest one.
    pub fn time_constant_sum(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        let d0 = self.den.coeff(0);
        let d1 = self.den.coeff(1);
        if d0 == 0.0 {
            f64::INFINITY
        } else {
            (d1 / d0).abs()
        }
    }

    #[cfg(test)]
    pub fn dc_gain(&self) -> f64 {
        let d0 = self.den.coeff(0);
        if self.order() == 0 || d0 == 0.0 {
            self.k0
        } else {
            self.k0 + self.rem.coeff(0) / d0
        }
    }
}
