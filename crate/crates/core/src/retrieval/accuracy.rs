//! Expected accuracy of graph-expanded retrieval: baseline vector accuracy plus
//! the dependency gain, scaled by the share of discovered tools that fit in
//! the final list.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AccuracyError {
    #[error("number of discovered tools must be at least 1")]
    NoTools,
    #[error("{field} must be a probability in [0, 1], got {value}")]
    NotProbability { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyModel {
    /// First-pass size.
    pub k: usize,
    /// Dependency limit per seed.
    pub d: usize,
    /// Final list cap.
    pub final_k: usize,
    /// Tools discovered before truncation, seeds and dependencies together.
    pub discovered: usize,
    /// Expected accuracy of the first pass alone.
    pub vector_accuracy: f64,
    /// Expected extra accuracy from dependencies before truncation.
    pub dependency_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyEstimate {
    /// Clamped to [0, 1].
    pub value: f64,
    /// The unclamped sum.
    pub raw: f64,
    /// Set when `raw` fell outside [0, 1].
    pub clamped: bool,
}

impl AccuracyModel {
    /// `min(1, K / N)`.
    pub fn truncation_factor(&self) -> Result<f64, AccuracyError> {
        if self.discovered == 0 {
            return Err(AccuracyError::NoTools);
        }
        Ok((self.final_k as f64 / self.discovered as f64).min(1.0))
    }

    fn check(&self) -> Result<(), AccuracyError> {
        for (field, value) in [
            ("vector_accuracy", self.vector_accuracy),
            ("dependency_gain", self.dependency_gain),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(AccuracyError::NotProbability { field, value });
            }
        }
        Ok(())
    }
}

pub fn expected_accuracy(m: &AccuracyModel) -> Result<AccuracyEstimate, AccuracyError> {
    m.check()?;
    let raw = m.vector_accuracy + m.dependency_gain * m.truncation_factor()?;
    let value = raw.clamp(0.0, 1.0);
    Ok(AccuracyEstimate {
        value,
        raw,
        clamped: value != raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(final_k: usize, discovered: usize, va: f64, gain: f64) -> AccuracyModel {
        AccuracyModel {
            k: 3,
            d: 10,
            final_k,
            discovered,
            vector_accuracy: va,
            dependency_gain: gain,
        }
    }

    #[test]
    fn full_coverage_adds_whole_gain() {
        let e = expected_accuracy(&model(30, 12, 0.440, 0.25)).unwrap();
        assert!((e.value - 0.690).abs() < 1e-12);
        assert!(!e.clamped);
    }

    #[test]
    fn half_coverage() {
        let m = model(5, 10, 0.5, 0.4);
        assert_eq!(m.truncation_factor().unwrap(), 0.5);
        assert!((expected_accuracy(&m).unwrap().value - 0.70).abs() < 1e-12);
    }

    #[test]
    fn zero_gain_is_baseline() {
        for (k, n) in [(1, 50), (10, 10), (40, 3)] {
            assert_eq!(expected_accuracy(&model(k, n, 0.37, 0.0)).unwrap().value, 0.37);
        }
    }

    #[test]
    fn clamps_with_flag() {
        let e = expected_accuracy(&model(10, 5, 0.8, 0.6)).unwrap();
        assert_eq!(e.value, 1.0);
        assert!((e.raw - 1.4).abs() < 1e-12);
        assert!(e.clamped);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(
            expected_accuracy(&model(10, 0, 0.5, 0.1)),
            Err(AccuracyError::NoTools)
        );
        assert!(matches!(
            expected_accuracy(&model(10, 5, 1.2, 0.1)),
            Err(AccuracyError::NotProbability { field: "vector_accuracy", .. })
        ));
    }
}
