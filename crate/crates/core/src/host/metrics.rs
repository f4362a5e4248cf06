use crate::error::{Error, Result};

/// `(measured − expected) / expected · 100`.
pub fn percent_error(measured: f64, expected: f64) -> Result<f64> {
    if expected == 0.0 {
        return Err(Error::DivisionByZero("expected value is zero".into()));
    }
    Ok((measured - expected) / expected * 100.0)
}

/// `measured − expected`, in degrees, unwrapped.
pub fn phase_error(measured: f64, expected: f64) -> f64 {
    measured - expected
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn table2_values() {
        assert!((percent_error(935.29, 1000.0).unwrap() + 6.471).abs() < 1e-9);
        assert!((percent_error(4956.0, 5000.0).unwrap() + 0.88).abs() < 1e-9);
        assert_eq!(percent_error(42.0, 42.0).unwrap(), 0.0);
        assert!(matches!(
            percent_error(1.0, 0.0),
            Err(Error::DivisionByZero(_))
        ));
    }

    #[test]
    fn phase_error_as_written() {
        assert_eq!(phase_error(-12.0, -12.0), 0.0);
        assert!((phase_error(-30.51, -32.35) - 1.84).abs() < 1e-9);
        assert!((phase_error(-76.57, -79.10) - 2.53).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn scale_invariant(m in -1e6f64..1e6, e in 1e-3f64..1e6, k in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
            let a = percent_error(m, e).unwrap();
            let b = percent_error(k * m, k * e).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
