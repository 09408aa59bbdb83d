//! The explicit extremal family, its exact derivative ladder, the radial
//! Euler-Lagrange residual, and the equality-case checks.

use crate::error::{HrlError, Result};
use crate::jet::Jet;
use crate::params::ParameterSet;
use crate::profile::{Channels, RadialProfile};
use crate::quadrature::{inner_product_mu, integrate_radial, QuadratureConfig};

/// One member of the two-parameter extremal family `c U_{mu,lambda}` with
/// `c = 1`: `U_{mu,lambda}(r) = lambda^{(N-4)/2} U_mu(lambda r)`.
#[derive(Debug, Clone)]
pub struct ExtremalBubble {
    pub params: ParameterSet,
    pub lam: f64,
    pub profile: RadialProfile,
}

fn bubble_channels(params: &ParameterSet, lam: f64, r: f64) -> Channels {
    let (a, b, k) = (params.a, params.b, params.k_coeff);
    let m = (params.nf() - 4.0) / 2.0;
    let amp = lam.powf(m);
    // evaluate through jets of rho = lam * r; all factors positive
    let rho = Jet::variable(r).scale(lam);
    let outer = bubble_jet(a, b, m, k, &rho);
    Channels::from_jet(&outer.scale(amp))
}

/// Jet of `K rho^a (1 + rho^{2b})^{-m}` in the variable the jet was built on.
pub(crate) fn bubble_jet(a: f64, b: f64, m: f64, k: f64, rho: &Jet) -> Jet {
    let power = rho.powf(a);
    let one_plus = rho.powf(2.0 * b).add(&Jet::constant(1.0));
    power.mul(&one_plus.powf(-m)).scale(k)
}

/// Builds `U_{mu,lambda}` with exact closed-form derivative channels.
pub fn make_bubble(params: &ParameterSet, lam: f64) -> Result<ExtremalBubble> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(HrlError::Domain(format!("lambda must be positive, got {lam}")));
    }
    let p = *params;
    let decay_zero = -p.a; // value ~ r^{a}, a < 0
    let decay_inf = p.mu / 2.0 + (p.nf() - 4.0) * p.b;
    let profile = RadialProfile::new(
        move |r| bubble_channels(&p, lam, r),
        Some((-decay_zero, decay_inf)),
    );
    Ok(ExtremalBubble {
        params: p,
        lam,
        profile,
    })
}

/// The scaling generator `G = (N-4)/2 U_{mu,lam} + r U_{mu,lam}'`, equal to
/// `lam d/d lam U_{mu,lam}`. Spans the nontrivial tangent direction of the
/// extremal manifold at fixed amplitude.
pub fn scaling_generator(params: &ParameterSet, lam: f64) -> Result<RadialProfile> {
    if !(lam > 0.0) {
        return Err(HrlError::Domain("lambda must be positive".into()));
    }
    let p = *params;
    let m = (p.nf() - 4.0) / 2.0;
    let amp = lam.powf(m);
    Ok(RadialProfile::new(
        move |r| {
            let rho = Jet::variable(r).scale(lam);
            let u = bubble_jet(p.a, p.b, m, p.k_coeff, &rho).scale(amp);
            // G = m u + r u'; k-th derivative = (m + k) u^(k) + r u^(k+1)
            let mut d = [0.0; crate::jet::JET_LEN];
            for k in 0..5 {
                d[k] = (m + k as f64) * u.d[k] + r * u.d[k + 1];
            }
            Channels {
                u: d[0],
                du: d[1],
                d2u: d[2],
                d3u: d[3],
                d4u: d[4],
            }
        },
        Some((p.a, p.mu / 2.0 + (p.nf() - 4.0) * p.b)),
    ))
}

/// Radial Euler-Lagrange residual
/// `u'''' + 2(N-1)u'''/r + [(N-1)(N-3)+C1]u''/r^2 - (N-3)(N-1-C1)u'/r^3 + C2 u/r^4 - u^{(N+4)/(N-4)}`.
pub fn el_residual(u: &RadialProfile, params: &ParameterSet, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(HrlError::Domain(format!("el_residual needs r > 0, got {r}")));
    }
    let nf = params.nf();
    let c = u.eval(r);
    if ![c.u, c.du, c.d2u, c.d3u, c.d4u].iter().all(|v| v.is_finite()) {
        return Err(HrlError::Domain(format!("non-finite channels at r = {r}")));
    }
    let linear = c.d4u
        + 2.0 * (nf - 1.0) * c.d3u / r
        + ((nf - 1.0) * (nf - 3.0) + params.c1) * c.d2u / (r * r)
        - (nf - 3.0) * (nf - 1.0 - params.c1) * c.du / (r * r * r)
        + params.c2 * c.u / (r * r * r * r);
    let p = (nf + 4.0) / (nf - 4.0);
    let nonlinear = if c.u == 0.0 {
        0.0
    } else {
        c.u.signum() * (p * c.u.abs().ln()).exp()
    };
    Ok(linear - nonlinear)
}

/// Residual normalized by the nonlinear term, which makes it invariant under
/// the critical scaling.
pub fn el_residual_relative(u: &RadialProfile, params: &ParameterSet, r: f64) -> Result<f64> {
    let res = el_residual(u, params, r)?;
    let v = u.value(r).abs();
    let p = (params.nf() + 4.0) / (params.nf() - 4.0);
    let scale = if v == 0.0 { 1.0 } else { (p * v.ln()).exp() };
    Ok(res / scale)
}

/// Both sides of the equality case: `lhs = ||U||_mu^2`,
/// `rhs = s_mu_radial (int U^{2**} r^{N-1} dr)^{2/2**}`, and their gap.
pub fn equality_case_check(
    params: &ParameterSet,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64, f64)> {
    let bubble = make_bubble(params, 1.0)?;
    let lhs = inner_product_mu(&bubble.profile, &bubble.profile, params, cfg)?;
    let crit = integrate_radial(
        |r| {
            let v = bubble.profile.value(r);
            (params.two_crit * v.ln()).exp()
        },
        params.n,
        0,
        cfg,
    )?;
    let rhs = params.s_mu_radial() * crit.powf(2.0 / params.two_crit);
    Ok((lhs, rhs, lhs - rhs))
}

/// `||U_mu||_mu^{2 - 4/2**}` computed by quadrature; agrees with the
/// sphere-corrected sharp constant.
pub fn sharp_constant_identity(params: &ParameterSet, cfg: &QuadratureConfig) -> Result<f64> {
    let bubble = make_bubble(params, 1.0)?;
    let norm_sq = inner_product_mu(&bubble.profile, &bubble.profile, params, cfg)?;
    Ok(norm_sq.powf(1.0 - 2.0 / params.two_crit))
}
