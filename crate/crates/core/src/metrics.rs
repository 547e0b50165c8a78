//! Average integral absolute metrics on a recorded grid.

use crate::error::{Error, Result};

/// `(1/T) ∫ |v| dt` by left rectangles over `time`, with `T = t_last − t_first`.
pub fn average_abs(time: &[f64], values: &[f64]) -> Result<f64> {
    if time.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "metric signal",
            expected: time.len(),
            got: values.len(),
        });
    }
    if time.len() < 2 {
        return Err(Error::invalid("trace", "needs at least two samples"));
    }
    let span = time[time.len() - 1] - time[0];
    if !(span > 0.0) {
        return Err(Error::invalid("trace", "time span must be positive"));
    }
    let sum: f64 = time
        .windows(2)
        .zip(values)
        .map(|(w, v)| (w[1] - w[0]) * v.abs())
        .sum();
    Ok(sum / span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    #[test]
    fn constants_and_ramp() {
        let t: Vec<f64> = (0..=2400).map(|k| k as f64 * 0.1).collect();
        assert_relative_eq!(average_abs(&t, &vec![1.0; t.len()]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(average_abs(&t, &vec![-2800.0; t.len()]).unwrap(), 2800.0, epsilon = 1e-9);
        // Left rectangles under-estimate a rising ramp by half a cell.
        let ramp: Vec<f64> = t.iter().map(|x| *x).collect();
        assert_relative_eq!(average_abs(&t, &ramp).unwrap(), (240.0 * 240.0 / 2.0 - 0.5 * 0.1 * 240.0) / 240.0, epsilon = 1e-9);
        assert!(average_abs(&t[..1], &ramp[..1]).is_err());
    }
}
