//! Radial functions carrying value and first four radial derivatives.

use std::sync::Arc;

use crate::jet::Jet;

/// Value and first four radial derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channels {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub d3u: f64,
    pub d4u: f64,
}

impl Channels {
    pub fn zero() -> Self {
        Channels {
            u: 0.0,
            du: 0.0,
            d2u: 0.0,
            d3u: 0.0,
            d4u: 0.0,
        }
    }

    pub fn from_jet(j: &Jet) -> Self {
        Channels {
            u: j.d[0],
            du: j.d[1],
            d2u: j.d[2],
            d3u: j.d[3],
            d4u: j.d[4],
        }
    }

    /// Radial Laplacian `u'' + (N-1) u' / r`.
    pub fn laplacian(&self, n: u32, r: f64) -> f64 {
        self.d2u + f64::from(n - 1) * self.du / r
    }
}

/// A radial function on `(0, infinity)` with derivatives up to order four.
///
/// `support_hint` holds the decay exponents `(alpha0, alpha_inf)` meaning
/// `u ~ r^{alpha0}` near zero and `u ~ r^{-alpha_inf}` near infinity; the
/// quadrature engine uses them only as a sanity hint.
#[derive(Clone)]
pub struct RadialProfile {
    eval: Arc<dyn Fn(f64) -> Channels + Send + Sync>,
    pub support_hint: Option<(f64, f64)>,
}

impl RadialProfile {
    pub fn new(
        eval: impl Fn(f64) -> Channels + Send + Sync + 'static,
        support_hint: Option<(f64, f64)>,
    ) -> Self {
        RadialProfile {
            eval: Arc::new(eval),
            support_hint,
        }
    }

    pub fn zero() -> Self {
        RadialProfile::new(|_| Channels::zero(), None)
    }

    pub fn eval(&self, r: f64) -> Channels {
        (self.eval)(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).u
    }

    /// `c1 * self + c2 * other`, channel by channel.
    pub fn linear_combination(&self, c1: f64, other: &RadialProfile, c2: f64) -> RadialProfile {
        let a = self.clone();
        let b = other.clone();
        let hint = match (self.support_hint, other.support_hint) {
            (Some((a0, ai)), Some((b0, bi))) => Some((a0.min(b0), ai.min(bi))),
            _ => None,
        };
        RadialProfile::new(
            move |r| {
                let x = a.eval(r);
                let y = b.eval(r);
                Channels {
                    u: c1 * x.u + c2 * y.u,
                    du: c1 * x.du + c2 * y.du,
                    d2u: c1 * x.d2u + c2 * y.d2u,
                    d3u: c1 * x.d3u + c2 * y.d3u,
                    d4u: c1 * x.d4u + c2 * y.d4u,
                }
            },
            hint,
        )
    }

    pub fn scaled(&self, c: f64) -> RadialProfile {
        let a = self.clone();
        let hint = self.support_hint;
        RadialProfile::new(
            move |r| {
                let x = a.eval(r);
                Channels {
                    u: c * x.u,
                    du: c * x.du,
                    d2u: c * x.d2u,
                    d3u: c * x.d3u,
                    d4u: c * x.d4u,
                }
            },
            hint,
        )
    }

    /// Log-Gaussian bump `exp(-w (ln r - ln r0)^2)`: smooth on `(0, inf)`,
    /// decays faster than any power at both ends.
    pub fn log_gaussian(center: f64, width: f64) -> RadialProfile {
        let lc = center.ln();
        RadialProfile::new(
            move |r| {
                let t = Jet::variable(r).ln();
                let arg = t.sub(&Jet::constant(lc));
                Channels::from_jet(&arg.mul(&arg).scale(-width).exp())
            },
            Some((f64::INFINITY, f64::INFINITY)),
        )
    }

    /// Checks that the reported derivative channels are consistent with
    /// central finite differences of the value channel. Returns the maximum
    /// relative mismatch over first and second derivatives at `radii`.
    pub fn derivative_consistency(&self, radii: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &r in radii {
            let h = 1e-5 * r;
            let c = self.eval(r);
            let up = self.value(r + h);
            let um = self.value(r - h);
            let fd1 = (up - um) / (2.0 * h);
            let fd2 = (up - 2.0 * c.u + um) / (h * h);
            let scale1 = c.du.abs().max(c.u.abs() / r).max(1e-300);
            let scale2 = c.d2u.abs().max(c.u.abs() / (r * r)).max(1e-300);
            worst = worst.max((fd1 - c.du).abs() / scale1);
            worst = worst.max((fd2 - c.d2u).abs() / scale2);
        }
        worst
    }
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile")
            .field("support_hint", &self.support_hint)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_gaussian_channels_consistent() {
        let p = RadialProfile::log_gaussian(1.0, 1.0);
        let worst = p.derivative_consistency(&[0.2, 0.7, 1.3, 4.0]);
        assert!(worst < 1e-5, "finite-difference mismatch {worst}");
    }

    #[test]
    fn linear_combination_is_pointwise() {
        let p = RadialProfile::log_gaussian(1.0, 1.0);
        let q = RadialProfile::log_gaussian(2.0, 0.5);
        let c = p.linear_combination(2.0, &q, -0.5);
        let r = 1.7;
        assert_relative_eq!(
            c.value(r),
            2.0 * p.value(r) - 0.5 * q.value(r),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c.eval(r).d3u,
            2.0 * p.eval(r).d3u - 0.5 * q.eval(r).d3u,
            max_relative = 1e-14
        );
    }
}
