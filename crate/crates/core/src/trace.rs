use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the independent variable of a trace measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceAxis {
    /// Hz (not angular).
    Frequency,
    /// Watts.
    Power,
    /// Radians.
    Phase,
    /// Seconds.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Transmission,
    Reflection,
    RawVoltage,
}

/// Complex samples against a strictly monotone independent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct IqTrace {
    axis: TraceAxis,
    kind: ValueKind,
    x: Vec<f64>,
    values: Vec<Complex64>,
}

impl IqTrace {
    pub fn new(axis: TraceAxis, kind: ValueKind, x: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if x.len() != values.len() {
            return Err(Error::Usage(format!(
                "trace length mismatch: {} abscissae, {} values",
                x.len(),
                values.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("trace contains non-finite samples".into()));
        }
        let increasing = x.windows(2).all(|w| w[1] > w[0]);
        let decreasing = x.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::Usage("trace abscissa must be strictly monotone".into()));
        }
        Ok(Self { axis, kind, x, values })
    }

    pub fn axis(&self) -> TraceAxis {
        self.axis
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.x.iter().copied().zip(self.values.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_traces() {
        let c = Complex64::new(1.0, 0.0);
        let t = |x: Vec<f64>, n| IqTrace::new(TraceAxis::Time, ValueKind::RawVoltage, x, vec![c; n]);
        assert!(t(vec![0.0, 1.0], 1).is_err());
        assert!(t(vec![0.0, 1.0, 1.0], 3).is_err());
        assert!(t(vec![0.0, 2.0, 1.0], 3).is_err());
        assert!(t(vec![2.0, 1.0, 0.0], 3).is_ok());
        assert!(t(vec![], 0).is_ok());
    }
}
