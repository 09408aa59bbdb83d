//! Admissible parameter range and every closed-form constant of the
//! inequality, each a pure function of `(N, mu)`.

use serde::Serialize;

use crate::error::{HrlError, Result};

/// Lanczos approximation (g = 7, 9 terms). Relative error below 1e-13 on
/// [1, 50], which is the range the sharp-constant formulas need.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> f64 {
    assert!(x > 0.0, "gamma requires a positive argument");
    if x < 0.5 {
        // reflection, only hit for arguments below the Lanczos sweet spot
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Surface area of the unit sphere in dimension `n`.
pub fn sphere_area(n: u32) -> f64 {
    let nf = f64::from(n);
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / gamma(nf / 2.0)
}

/// `Gamma_N = (N-4)(N-2)N(N+2)`, the quartic product entering the sharp
/// constants and the dimension-lift comparison.
pub fn gamma_product(n: u32) -> Result<f64> {
    if n < 5 {
        return Err(HrlError::Domain(format!(
            "gamma_product requires N >= 5, got {n}"
        )));
    }
    Ok(gamma_product_unchecked(n))
}

pub(crate) fn gamma_product_unchecked(n: u32) -> f64 {
    let n = u64::from(n);
    ((n - 4) * (n - 2) * n * (n + 2)) as f64
}

/// k-th eigenvalue `lambda_k = k(N-2+k)` of the sphere Laplacian together
/// with its multiplicity `m_k`.
pub fn sphere_eigen(k: u32, n: u32) -> Result<(f64, u64)> {
    if n < 5 {
        return Err(HrlError::Domain(format!(
            "sphere_eigen requires N >= 5, got {n}"
        )));
    }
    let lambda = f64::from(k) * f64::from(n - 2 + k);
    // m_k = (N+2k-2) (N+k-3)! / ((N-2)! k!) = (N+2k-2) C(N+k-3, k) / (N-2)
    let nk = u64::from(n) + u64::from(k);
    let mut binom: u64 = 1;
    for j in 1..=u64::from(k) {
        binom = binom * (nk - 3 - u64::from(k) + j) / j;
    }
    let mult = (u64::from(n) + 2 * u64::from(k) - 2) * binom / (u64::from(n) - 2);
    Ok((lambda, mult))
}

/// All derived constants of the weighted inequality for one `(N, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterSet {
    /// Space dimension, `N >= 5`.
    pub n: u32,
    /// Hardy strength, `0 < mu < N - 4`.
    pub mu: f64,
    /// Transform exponent `a = -mu/2`.
    pub a: f64,
    /// Transform exponent `b = 1 - mu/(N-4)`.
    pub b: f64,
    /// Critical exponent `2** = 2N/(N-4)`.
    pub two_crit: f64,
    /// Gradient-weight constant `C_{mu,1}`.
    pub c1: f64,
    /// Potential-weight constant `C_{mu,2}`.
    pub c2: f64,
    /// Sharp constant of the unweighted fourth-order Sobolev inequality.
    pub s0: f64,
    /// Sharp constant of the weighted inequality, `s_mu = b^{4-4/N} s0`.
    pub s_mu: f64,
    /// Extremal amplitude `K = [b^4 (N-4)(N-2)N(N+2)]^{(N-4)/8}`.
    pub k_coeff: f64,
}

/// Evaluates every closed-form constant for `(N, mu)`.
pub fn derive_constants(n: u32, mu: f64) -> Result<ParameterSet> {
    if n < 5 {
        return Err(HrlError::Domain(format!("N must be >= 5, got {n}")));
    }
    let nf = f64::from(n);
    if !(mu > 0.0 && mu < nf - 4.0) || !mu.is_finite() {
        return Err(HrlError::Domain(format!(
            "mu must lie in (0, N-4) = (0, {}), got {mu}",
            nf - 4.0
        )));
    }
    let a = -mu / 2.0;
    let b = 1.0 - mu / (nf - 4.0);
    let two_crit = 2.0 * nf / (nf - 4.0);
    let q = mu * (2.0 * (nf - 4.0) - mu);
    let c1 = (nf * nf - 4.0 * nf + 8.0) / (2.0 * (nf - 4.0) * (nf - 4.0)) * q;
    let c2 = nf * nf / (16.0 * (nf - 4.0) * (nf - 4.0)) * q * q - (nf - 2.0) / 2.0 * q;
    let gamma_n = gamma_product_unchecked(n);
    // Sharp constant of the unweighted inequality, written directly from the
    // extremal profile: S0 = Gamma_N pi^2 (Gamma(N/2)/Gamma(N))^{4/N}.
    let s0 = gamma_n
        * std::f64::consts::PI.powi(2)
        * (gamma(nf / 2.0) / gamma(nf)).powf(4.0 / nf);
    let s_mu = b.powf(4.0 - 4.0 / nf) * s0;
    let k_coeff = (b.powi(4) * gamma_n).powf((nf - 4.0) / 8.0);
    Ok(ParameterSet {
        n,
        mu,
        a,
        b,
        two_crit,
        c1,
        c2,
        s0,
        s_mu,
        k_coeff,
    })
}

impl ParameterSet {
    pub fn new(n: u32, mu: f64) -> Result<Self> {
        derive_constants(n, mu)
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// The dimensional product `(N-4)(N-2)N(N+2)`.
    pub fn gamma_n(&self) -> f64 {
        gamma_product_unchecked(self.n)
    }

    /// Sphere-corrected sharp constant for pure radial integrals:
    /// `s_mu * omega_{N-1}^{-4/N}`, so that
    /// `int (Delta_r u)^2 r^{N-1} dr - ... >= s_mu_radial (int |u|^{2**} r^{N-1} dr)^{2/2**}`.
    pub fn s_mu_radial(&self) -> f64 {
        self.s_mu * sphere_area(self.n).powf(-4.0 / self.nf())
    }

    /// Sphere-corrected unweighted constant, same convention.
    pub fn s0_radial(&self) -> f64 {
        self.s0 * sphere_area(self.n).powf(-4.0 / self.nf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_reference_points() {
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
        // Gamma(2.5) = 3 sqrt(pi) / 4
        assert_relative_eq!(
            gamma(2.5),
            0.75 * std::f64::consts::PI.sqrt(),
            max_relative = 1e-13
        );
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-13);
        // functional equation across the working range
        for i in 1..50 {
            let x = i as f64 * 0.97 + 0.3;
            assert_relative_eq!(gamma(x + 1.0), x * gamma(x), max_relative = 1e-13);
        }
    }

    #[test]
    fn constants_n5_mu_half() {
        let p = derive_constants(5, 0.5).unwrap();
        assert_relative_eq!(p.c1, 4.875, max_relative = 1e-14);
        assert_relative_eq!(p.c2, -0.24609375, max_relative = 1e-14);
        assert_relative_eq!(p.b, 0.5, max_relative = 1e-15);
        assert_relative_eq!(p.a, -0.25, max_relative = 1e-15);
        assert_relative_eq!(p.two_crit, 10.0, max_relative = 1e-15);
        // K = (b^4 * 105)^{1/8} = 6.5625^{1/8}
        assert_relative_eq!(p.k_coeff, 6.5625f64.powf(0.125), max_relative = 1e-14);
    }

    #[test]
    fn constants_n6_mu_one() {
        let p = derive_constants(6, 1.0).unwrap();
        assert_relative_eq!(p.c1, 7.5, max_relative = 1e-14);
        assert_relative_eq!(p.c2, -0.9375, max_relative = 1e-14);
        assert_relative_eq!(p.b, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn mu_to_zero_collapses_to_unweighted() {
        let p = derive_constants(5, 1e-13).unwrap();
        assert!(p.c1.abs() < 1e-11);
        assert!(p.c2.abs() < 1e-11);
        assert_relative_eq!(p.s_mu, p.s0, max_relative = 1e-12);
    }

    #[test]
    fn domain_rejection() {
        assert!(derive_constants(4, 0.1).is_err());
        assert!(derive_constants(5, 0.0).is_err());
        assert!(derive_constants(5, 1.0).is_err());
        assert!(derive_constants(5, 1.5).is_err());
        assert!(derive_constants(5, -0.5).is_err());
        assert!(derive_constants(5, f64::NAN).is_err());
    }

    #[test]
    fn gamma_products() {
        assert_eq!(gamma_product(5).unwrap(), 105.0);
        assert_eq!(gamma_product(6).unwrap(), 384.0);
        assert_eq!(gamma_product(7).unwrap(), 945.0);
        assert!(gamma_product(4).is_err());
    }

    #[test]
    fn sphere_eigenvalues_and_multiplicities() {
        assert_eq!(sphere_eigen(0, 5).unwrap(), (0.0, 1));
        assert_eq!(sphere_eigen(1, 5).unwrap(), (4.0, 5));
        assert_eq!(sphere_eigen(2, 5).unwrap(), (10.0, 14));
        assert_eq!(sphere_eigen(3, 5).unwrap(), (18.0, 30));
        assert_eq!(sphere_eigen(1, 7).unwrap(), (6.0, 7));
        // lambda_k strictly increasing, m_k >= 1
        for n in [5u32, 6, 8, 11] {
            let mut prev = -1.0;
            for k in 0..8 {
                let (l, m) = sphere_eigen(k, n).unwrap();
                assert!(l > prev);
                assert!(m >= 1);
                prev = l;
            }
        }
    }

    #[test]
    fn s_mu_monotone_decreasing_in_mu() {
        for n in [5u32, 6, 9] {
            let nf = f64::from(n);
            let mut prev = f64::INFINITY;
            for i in 1..=100 {
                let mu = (nf - 4.0) * i as f64 / 101.0;
                let p = derive_constants(n, mu).unwrap();
                assert!(p.s_mu < prev, "s_mu not decreasing at N={n}, mu={mu}");
                assert!(p.s_mu > 0.0);
                assert!(p.c1 > 0.0);
                assert!(p.c2.is_finite());
                assert!(p.b > 0.0 && p.b < 1.0);
                assert!(p.a < 0.0 && p.a > -(nf - 4.0) / 2.0);
                prev = p.s_mu;
            }
        }
    }

    #[test]
    fn derivation_is_pure() {
        let p1 = derive_constants(7, 1.234567).unwrap();
        let p2 = derive_constants(7, 1.234567).unwrap();
        assert_eq!(p1, p2);
    }
}
