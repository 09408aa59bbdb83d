//! Cross-module property tests: scaling laws, transform round trips, and
//! the spectral-gap inequality on randomized profiles.

use hrl::emden_fowler;
use hrl::extremals;
use hrl::params::{derive_constants, sphere_eigen};
use hrl::profile::RadialProfile;
use hrl::quadrature::{integrate_radial, inner_product_mu, lp_norm, QuadratureConfig};
use hrl::spectrum;
use hrl::stability;
use proptest::prelude::*;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default().with_nodes(1024)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lp_norm_is_absolutely_homogeneous(
        c in -3.0f64..3.0,
        center in 0.3f64..3.0,
        width in 0.2f64..0.8,
    ) {
        prop_assume!(c.abs() > 1e-3);
        let u = RadialProfile::log_gaussian(center, width);
        let scaled = u.scaled(c);
        let base = lp_norm(&u, 2.5, 5, &cfg()).unwrap();
        let big = lp_norm(&scaled, 2.5, 5, &cfg()).unwrap();
        prop_assert!((big - c.abs() * base).abs() <= 1e-9 * base.max(1.0) * c.abs().max(1.0));
    }

    #[test]
    fn radial_integral_scaling_law(lam in 0.2f64..5.0, n in 5u32..9) {
        // int f(lam r) r^{N-1} dr = lam^{-N} int f(r) r^{N-1} dr
        let f = RadialProfile::log_gaussian(1.0, 0.5);
        let base = integrate_radial(|r| f.value(r), n, 0, &cfg()).unwrap();
        let shifted = integrate_radial(|r| f.value(lam * r), n, 0, &cfg()).unwrap();
        let expected = lam.powi(-(n as i32)) * base;
        prop_assert!((shifted - expected).abs() <= 1e-8 * expected.abs());
    }

    #[test]
    fn transform_round_trip_random_params(
        n in 5u32..10,
        frac in 0.05f64..0.95,
        center in 0.4f64..2.5,
    ) {
        let p = derive_constants(n, frac * (f64::from(n) - 4.0)).unwrap();
        let u = RadialProfile::log_gaussian(center, 0.5);
        let back = emden_fowler::pull_back(&emden_fowler::push_forward(&u, &p), &p);
        for r in [0.3, 1.0, 2.0, 6.0] {
            let (a, b) = (u.value(r), back.value(r));
            prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-30));
        }
    }

    #[test]
    fn bubble_norm_scale_invariant_random(lam in 0.1f64..10.0) {
        let p = derive_constants(5, 0.5).unwrap();
        let b1 = extremals::make_bubble(&p, 1.0).unwrap();
        let b2 = extremals::make_bubble(&p, lam).unwrap();
        let n1 = inner_product_mu(&b1.profile, &b1.profile, &p, &cfg()).unwrap();
        let n2 = inner_product_mu(&b2.profile, &b2.profile, &p, &cfg()).unwrap();
        prop_assert!((n1 - n2).abs() <= 1e-7 * n1);
    }

    #[test]
    fn sphere_eigen_recurrence(k in 1u32..8, n in 5u32..10) {
        // multiplicities satisfy m_k = C(N+k-1, k) - C(N+k-3, k-2)
        let binom = |top: u64, pick: u64| -> u64 {
            if pick > top {
                return 0;
            }
            let mut acc = 1u64;
            for i in 0..pick {
                acc = acc * (top - i) / (i + 1);
            }
            acc
        };
        let (lam, mult) = sphere_eigen(k, n).unwrap();
        let nn = u64::from(n);
        let kk = u64::from(k);
        let expected = binom(nn + kk - 1, kk)
            - if kk >= 2 { binom(nn + kk - 3, kk - 2) } else { 0 };
        prop_assert_eq!(mult, expected);
        prop_assert_eq!(lam, f64::from(k) * (f64::from(n) - 2.0 + f64::from(k)));
    }
}

#[test]
fn spectral_gap_inequality_on_random_profiles() {
    // after removing the components along the extremal and its scaling
    // generator, the quadratic form dominates nu3 times the mass term
    let p = derive_constants(5, 0.5).unwrap();
    let quad = cfg();
    let spec = spectrum::SectorGridSpec::default().with_elements(200);
    let result = spectrum::sector_spectrum(0, &p, &spec, 3).unwrap();
    let nu3 = result.eigenvalues[2];
    let bubble = extremals::make_bubble(&p, 1.0).unwrap();
    let gen = extremals::scaling_generator(&p, 1.0).unwrap();
    let tangent = [bubble.profile.clone(), gen];
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut tested = 0;
    while tested < 20 {
        let center: f64 = rng.gen_range(0.3..3.0);
        let width = rng.gen_range(0.25..0.8);
        let bump = RadialProfile::log_gaussian(center, width);
        let w = match stability::orthonormalize_against(&bump, &tangent, &p, &quad) {
            Ok(w) => w,
            Err(_) => continue,
        };
        let norm_sq = inner_product_mu(&w, &w, &p, &quad).unwrap();
        let q = p.two_crit;
        let b = bubble.profile.clone();
        let w2 = w.clone();
        let mass = integrate_radial(
            move |r| {
                let uv = b.value(r);
                let wv = w2.value(r);
                ((q - 2.0) * uv.ln()).exp() * wv * wv
            },
            p.n,
            0,
            &quad,
        )
        .unwrap();
        assert!(
            nu3 * mass <= norm_sq * (1.0 + 1e-3),
            "profile {tested}: nu3 * mass = {} exceeds norm^2 = {}",
            nu3 * mass,
            norm_sq
        );
        tested += 1;
    }
}

#[test]
fn transform_maps_equation_solutions() {
    // the pushed-forward extremal solves the unweighted radial equation:
    // residual of the mu -> 0 equation on push_forward(U) scaled by b^{-4}
    let p = derive_constants(6, 1.0).unwrap();
    let v = emden_fowler::push_forward(
        &extremals::make_bubble(&p, 1.0).unwrap().profile,
        &p,
    );
    let nf = p.nf();
    for s in [0.3, 1.0, 3.0] {
        let c = v.eval(s);
        let linear = c.d4u
            + 2.0 * (nf - 1.0) * c.d3u / s
            + (nf - 1.0) * (nf - 3.0) * c.d2u / (s * s)
            - (nf - 1.0) * (nf - 3.0) * c.du / (s * s * s);
        let q = (nf + 4.0) / (nf - 4.0);
        let rhs = c.u.powf(q) / p.b.powi(4);
        assert!(
            (linear - rhs).abs() <= 1e-6 * rhs.abs(),
            "residual at s = {s}: {} vs {}",
            linear,
            rhs
        );
    }
}
