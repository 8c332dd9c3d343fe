use crate::distance::Metric;
use crate::error::{IndexError, Result};

/// Build knobs for a [`LayeredGraph`](crate::LayeredGraph).
#[derive(Debug, Clone, PartialEq)]
pub struct IndexParams {
    /// Maximum out-degree at layers >= 1.
    pub m: usize,
    /// Maximum out-degree at layer 0.
    pub m_max0: usize,
    /// Beam width used while linking new points.
    pub ef_construction: usize,
    pub metric: Metric,
    /// Level normalization; the level of a new point is `floor(-ln(u) * level_lambda)`.
    pub level_lambda: f64,
    pub rng_seed: u64,
}

impl IndexParams {
    /// `m_max0 = 2 * m` and `level_lambda = 1 / ln(m)`, squared L2, seed 0.
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            m,
            m_max0: 2 * m,
            ef_construction,
            metric: Metric::L2,
            level_lambda: 1.0 / (m.max(2) as f64).ln(),
            rng_seed: 0,
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_m_max0(mut self, m_max0: usize) -> Self {
        self.m_max0 = m_max0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(IndexError::InvalidParams(format!(
                "M must be >= 2, got {}",
                self.m
            )));
        }
        if self.m_max0 < self.m {
            return Err(IndexError::InvalidParams(format!(
                "M_max0 ({}) must be >= M ({})",
                self.m_max0, self.m
            )));
        }
        if self.ef_construction < self.m {
            return Err(IndexError::InvalidParams(format!(
                "ef_construction ({}) must be >= M ({})",
                self.ef_construction, self.m
            )));
        }
        if !(self.level_lambda.is_finite() && self.level_lambda > 0.0) {
            return Err(IndexError::InvalidParams(format!(
                "level_lambda must be positive and finite, got {}",
                self.level_lambda
            )));
        }
        Ok(())
    }

    /// Degree bound for `layer`.
    #[inline]
    pub fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            self.m_max0
        } else {
            self.m
        }
    }
}

impl Default for IndexParams {
    fn default() -> Self {
        Self::new(16, 200)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_conventions() {
        let p = IndexParams::new(16, 200);
        assert_eq!(p.m_max0, 32);
        assert!((p.level_lambda - 1.0 / 16f64.ln()).abs() < 1e-15);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_small_m() {
        assert!(matches!(
            IndexParams::new(1, 200).validate(),
            Err(IndexError::InvalidParams(_))
        ));
    }

    #[test]
    fn rejects_small_ef_construction() {
        assert!(IndexParams::new(16, 8).validate().is_err());
    }

    #[test]
    fn rejects_m_max0_below_m() {
        assert!(IndexParams::new(16, 200).with_m_max0(8).validate().is_err());
    }
}
