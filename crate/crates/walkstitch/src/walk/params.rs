//! Walk parameters and the defaults the round bounds are proved for.

use crate::graph::Graph;
use crate::util::log2_ceil;

use super::WalkError;

/// Parameters of a stitched walk: length, short-walk base length, coupon
/// multiplier, and walk count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkParams {
    /// Long-walk length.
    pub ell: u64,
    /// Short-walk base length; short walks have length in `[lambda, 2*lambda-1]`.
    pub lambda: u64,
    /// Coupon multiplier: each node prepares `eta * deg(v)` coupons.
    pub eta: u64,
    /// Number of walks.
    pub k: usize,
}

impl WalkParams {
    pub fn new(ell: u64, lambda: u64, eta: u64) -> Self {
        WalkParams {
            ell,
            lambda,
            eta,
            k: 1,
        }
    }

    /// Single-walk defaults: eta = 1 and lambda = 32 * sqrt(ell * D) *
    /// ceil(log2 n)^3, clamped to ell. A clamped lambda admits no stitch, so
    /// such walks run naively.
    pub fn for_length(g: &Graph, ell: u64) -> Self {
        let d = crate::graph::diameter(g).max(1) as f64;
        let logn = log2_ceil(g.n() as u64).max(1) as f64;
        let raw = (32.0 * (ell as f64 * d).sqrt() * logn.powi(3)).ceil() as u64;
        WalkParams {
            ell,
            lambda: raw.clamp(1, ell.max(1)),
            eta: 1,
            k: 1,
        }
    }

    /// Many-walk defaults: eta = 1 and
    /// lambda = (32 * sqrt(k * ell * D + 1) * log2(n) + k) * log2(n)^2,
    /// unclamped: when it exceeds ell the walks run naively and concurrently.
    pub fn for_many(g: &Graph, ell: u64, k: usize) -> Self {
        let d = crate::graph::diameter(g).max(1) as f64;
        let logn = log2_ceil(g.n() as u64).max(1) as f64;
        let raw = ((32.0 * ((k as u64 * ell) as f64 * d + 1.0).sqrt() * logn + k as f64)
            * logn
            * logn)
            .ceil() as u64;
        WalkParams {
            ell,
            lambda: raw.max(1),
            eta: 1,
            k,
        }
    }

    pub fn with_overrides(mut self, lambda: Option<u64>, eta: Option<u64>) -> Self {
        if let Some(l) = lambda {
            self.lambda = l;
        }
        if let Some(e) = eta {
            self.eta = e;
        }
        self
    }

    /// Largest length the stitching path handles; longer walks route to
    /// `fallback_collect` (beta = 1, i.e. ell <= m^2).
    pub fn max_stitchable_length(g: &Graph) -> u64 {
        let m = g.m() as u64;
        m * m
    }

    /// At least one stitch fits: Phase 2's loop runs while the completed
    /// length is at most `ell - 2*lambda`.
    pub fn stitching_enabled(&self) -> bool {
        self.ell >= 2 * self.lambda
    }

    pub fn validate(&self, g: &Graph) -> Result<(), WalkError> {
        if self.ell == 0 {
            return Ok(());
        }
        if self.lambda == 0 || self.lambda > self.ell {
            return Err(WalkError::InvalidParams(format!(
                "lambda {} not in [1, ell = {}]",
                self.lambda, self.ell
            )));
        }
        if self.eta == 0 {
            return Err(WalkError::InvalidParams("eta must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(WalkError::InvalidParams("k must be >= 1".into()));
        }
        let limit = Self::max_stitchable_length(g);
        if self.ell > limit {
            return Err(WalkError::LengthBeyondRange {
                ell: self.ell,
                limit,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn default_lambda_clamps_to_ell_at_desk_scale() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::for_length(&g, 12);
        assert_eq!(p.lambda, 12);
        assert!(!p.stitching_enabled());
    }

    #[test]
    fn explicit_small_lambda_enables_stitching() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::new(12, 3, 2);
        p.validate(&g).unwrap();
        assert!(p.stitching_enabled());
    }

    #[test]
    fn length_beyond_m_squared_is_rejected() {
        let g = generate(GraphKind::Path, 4, 0).unwrap();
        let p = WalkParams::new(10, 2, 1);
        assert!(matches!(
            p.validate(&g),
            Err(WalkError::LengthBeyondRange { limit: 9, .. })
        ));
        // The boundary itself stays on the stitching path.
        let p = WalkParams::new(9, 2, 1);
        p.validate(&g).unwrap();
    }
}
