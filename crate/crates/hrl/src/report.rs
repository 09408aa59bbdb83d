//! Machine-readable verification reports: every subcommand produces a list
//! of named check rows plus a map of computed values, serialized as JSON or
//! CSV with no volatile content, so identical configurations give
//! byte-identical reports.

use crate::emden_fowler;
use crate::error::Result;
use crate::extremals;
use crate::params::{derive_constants, ParameterSet};
use crate::profile::RadialProfile;
use crate::quadrature::{inner_product_mu, QuadratureConfig};
use crate::spectrum;
use crate::stability;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// One verification row.  `passed` is `value <= expected + tolerance` for
/// upper-bound checks and `value >= expected - tolerance` for lower-bound
/// checks; the direction is baked in by the producer.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl CheckRow {
    fn upper(check: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        CheckRow {
            check: check.to_string(),
            passed: value <= expected + tolerance,
            value,
            expected,
            tolerance,
        }
    }

    fn lower(check: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        CheckRow {
            check: check.to_string(),
            passed: value >= expected - tolerance,
            value,
            expected,
            tolerance,
        }
    }
}

/// Full report for one subcommand run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Report {
    pub subject: String,
    pub n: u32,
    pub mu: f64,
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<CheckRow>,
    pub passed: bool,
}

impl Report {
    fn new(subject: &str, params: &ParameterSet) -> Self {
        Report {
            subject: subject.to_string(),
            n: params.n,
            mu: params.mu,
            values: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    fn push(&mut self, row: CheckRow) {
        self.passed &= row.passed;
        self.checks.push(row);
    }

    fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    fn absorb(&mut self, other: Report) {
        for (k, v) in other.values {
            self.values.insert(format!("{}.{k}", other.subject), v);
        }
        for mut row in other.checks {
            row.check = format!("{}.{}", other.subject, row.check);
            self.push(row);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,passed,value,expected,tolerance\n");
        for (k, v) in &self.values {
            let _ = writeln!(out, "value:{k},true,{v:.17e},{v:.17e},0");
        }
        for row in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e}",
                row.check, row.passed, row.value, row.expected, row.tolerance
            );
        }
        out
    }
}

/// Derived-constant report: all closed-form quantities plus basic sanity
/// checks on their relations.
pub fn constants_report(n: u32, mu: f64) -> Result<Report> {
    let p = derive_constants(n, mu)?;
    let mut rep = Report::new("constants", &p);
    rep.set("a", p.a);
    rep.set("b", p.b);
    rep.set("two_crit", p.two_crit);
    rep.set("c1", p.c1);
    rep.set("c2", p.c2);
    rep.set("s0", p.s0);
    rep.set("s_mu", p.s_mu);
    rep.set("s_mu_radial", p.s_mu_radial());
    rep.set("k_coeff", p.k_coeff);
    rep.set("gamma_n", p.gamma_n());
    rep.push(CheckRow::upper("sharp-constant-below-unweighted", p.s_mu, p.s0, 0.0));
    rep.push(CheckRow::lower("sharp-constant-positive", p.s_mu, 0.0, 0.0));
    let relative = p.s_mu / p.s0;
    rep.push(CheckRow::upper(
        "relative-constant-matches-exponent-rule",
        (relative - p.b.powf(4.0 - 4.0 / p.nf())).abs(),
        0.0,
        1e-12,
    ));
    Ok(rep)
}

/// Extremal-family report: pointwise equation residuals, the equality case,
/// and the sharp-constant identity.
pub fn extremal_report(n: u32, mu: f64, cfg: &QuadratureConfig) -> Result<Report> {
    let p = derive_constants(n, mu)?;
    let mut rep = Report::new("extremal", &p);
    let bubble = extremals::make_bubble(&p, 1.0)?;

    let mut worst = 0.0f64;
    for i in 0..50 {
        let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
        worst = worst.max(extremals::el_residual_relative(&bubble.profile, &p, r)?.abs());
    }
    rep.set("max_equation_residual", worst);
    rep.push(CheckRow::upper("equation-residual", worst, 0.0, 1e-6));

    let (lhs, _rhs, gap) = extremals::equality_case_check(&p, cfg)?;
    rep.set("norm_squared", lhs);
    rep.set("equality_gap_relative", gap / lhs);
    rep.push(CheckRow::upper("equality-case", (gap / lhs).abs(), 0.0, 1e-6));

    let ident = extremals::sharp_constant_identity(&p, cfg)?;
    let rel = (ident - p.s_mu_radial()).abs() / p.s_mu_radial();
    rep.set("sharp_constant_from_norm", ident);
    rep.push(CheckRow::upper("sharp-constant-identity", rel, 0.0, 1e-6));

    let norms: Vec<f64> = [0.25, 1.0, 4.0]
        .iter()
        .map(|&l| {
            let b = extremals::make_bubble(&p, l)?;
            inner_product_mu(&b.profile, &b.profile, &p, cfg)
        })
        .collect::<Result<_>>()?;
    let spread = norms
        .iter()
        .map(|v| (v - norms[1]).abs() / norms[1])
        .fold(0.0, f64::max);
    rep.set("scale_invariance_spread", spread);
    rep.push(CheckRow::upper("scale-invariance", spread, 0.0, 1e-7));
    Ok(rep)
}

/// Transform report: coefficient collapse, norm relations, round trip, and
/// the weighted/unweighted deficit comparison.
pub fn transform_report(n: u32, mu: f64, cfg: &QuadratureConfig) -> Result<Report> {
    let p = derive_constants(n, mu)?;
    let mut rep = Report::new("transform", &p);

    let coeffs = emden_fowler::raw_coefficients(&p);
    rep.set("coef_a", coeffs.a_coef);
    rep.set("coef_b", coeffs.b_coef);
    rep.set("coef_c", coeffs.c_coef);
    rep.set("coef_d", coeffs.d_coef);
    let dev = emden_fowler::collapse_deviation(&p);
    rep.set("collapse_deviation", dev);
    rep.push(CheckRow::upper("coefficient-collapse", dev, 0.0, 1e-9));

    let bubble = extremals::make_bubble(&p, 1.0)?;
    let v = emden_fowler::push_forward(&bubble.profile, &p);
    let left = crate::quadrature::critical_mass(&bubble.profile, p.two_crit, p.n, cfg)?;
    let right = crate::quadrature::critical_mass(&v, p.two_crit, p.n, cfg)?;
    let jac_err =
        (left - emden_fowler::critical_mass_factor(p.b) * right).abs() / left.abs();
    rep.set("jacobian_relation_error", jac_err);
    rep.push(CheckRow::upper("jacobian-relation", jac_err, 0.0, 1e-8));

    let bump = RadialProfile::log_gaussian(1.5, 0.4);
    let back = emden_fowler::pull_back(&emden_fowler::push_forward(&bump, &p), &p);
    let mut rt_err = 0.0f64;
    for r in [0.2, 0.8, 1.5, 4.0, 12.0] {
        let (orig, ret) = (bump.value(r), back.value(r));
        if orig.abs() > 1e-300 {
            rt_err = rt_err.max((ret - orig).abs() / orig.abs());
        }
    }
    rep.set("round_trip_error", rt_err);
    rep.push(CheckRow::upper("round-trip", rt_err, 0.0, 1e-12));

    let u = bubble.profile.linear_combination(1.0, &bump, 0.1);
    let (du, dw, ok) = emden_fowler::deficit_comparison(&u, &p, cfg)?;
    rep.set("deficit_unweighted", du);
    rep.set("deficit_weighted", dw);
    rep.push(CheckRow::lower(
        "deficit-comparison-bound",
        if ok { 1.0 } else { 0.0 },
        1.0,
        0.0,
    ));
    Ok(rep)
}

/// Spectrum report over the requested sectors.
pub fn spectrum_report(
    n: u32,
    mu: f64,
    sectors: &[u32],
    elements: usize,
    cfg: &QuadratureConfig,
) -> Result<Report> {
    let p = derive_constants(n, mu)?;
    let mut rep = Report::new("spectrum", &p);
    let spec = spectrum::SectorGridSpec::default().with_elements(elements);
    let nu2_expected = p.two_crit - 1.0;
    let results = spectrum::sector_sweep(sectors, &p, &spec, 4)?;
    for result in &results {
        let k = result.sector_k;
        for (i, nu) in result.eigenvalues.iter().enumerate() {
            rep.set(&format!("k{k}_nu{}", i + 1), *nu);
        }
        let max_res = result.residuals.iter().cloned().fold(0.0, f64::max);
        rep.set(&format!("k{k}_max_residual"), max_res);
        rep.push(CheckRow::upper(
            &format!("k{k}-eigen-residual"),
            max_res,
            0.0,
            1e-8,
        ));
        if k == 0 {
            rep.push(CheckRow::upper(
                "k0-first-eigenvalue",
                (result.eigenvalues[0] - 1.0).abs(),
                0.0,
                1e-3,
            ));
            rep.push(CheckRow::upper(
                "k0-second-eigenvalue",
                (result.eigenvalues[1] - nu2_expected).abs() / nu2_expected,
                0.0,
                1e-3,
            ));
            rep.push(CheckRow::lower(
                "k0-gap-above-second",
                result.eigenvalues[2] / result.eigenvalues[1],
                1.1,
                0.0,
            ));
            let e1 = result.eigenprofile(0)?;
            let bubble = extremals::make_bubble(&p, 1.0)?;
            let corr1 = spectrum::mu_correlation(&e1, &bubble.profile, &p, cfg)?.abs();
            rep.set("k0_alignment_first", corr1);
            rep.push(CheckRow::lower("k0-alignment-first", corr1, 0.999, 0.0));
            let corr2 = spectrum::eigenfunction_alignment(result, &p, cfg)?;
            rep.set("k0_alignment_second", corr2);
            rep.push(CheckRow::lower("k0-alignment-second", corr2, 0.999, 0.0));
        } else {
            rep.push(CheckRow::lower(
                &format!("k{k}-margin-above-second"),
                result.eigenvalues[0] - nu2_expected,
                1e-2,
                0.0,
            ));
            let (lhs, rhs, factor) = spectrum::lift_conditions(k, &p)?;
            rep.set(&format!("k{k}_lift_lhs"), lhs);
            rep.set(&format!("k{k}_lift_rhs"), rhs);
            rep.set(&format!("k{k}_lift_positivity"), factor);
            rep.push(CheckRow::upper(&format!("k{k}-lift-ordering"), lhs, rhs, 1e-9));
            rep.push(CheckRow::lower(
                &format!("k{k}-lift-positivity"),
                factor,
                0.0,
                0.0,
            ));
        }
    }
    Ok(rep)
}

/// Stability report: ratio study against the spectral bound, the Taylor
/// remainder decay, and projector self-consistency.
pub fn stability_report(
    n: u32,
    mu: f64,
    sample_count: usize,
    seed: u64,
    elements: usize,
    cfg: &QuadratureConfig,
) -> Result<Report> {
    let p = derive_constants(n, mu)?;
    let mut rep = Report::new("stability", &p);

    let study = stability::RatioStudyConfig {
        sample_count,
        seed,
        epsilons: vec![0.02, 0.01, 0.005],
        grid: spectrum::SectorGridSpec::default().with_elements(elements),
    };
    let out = stability::local_ratio_study(&p, cfg, &study)?;
    rep.set("nu2", out.nu2);
    rep.set("nu3", out.nu3);
    rep.set("ratio_bound", out.bound);
    rep.set("min_ratio", out.min_ratio);
    rep.push(CheckRow::lower("ratio-bound", out.min_ratio, out.bound, 0.0));
    let worst_deficit = out
        .samples
        .iter()
        .map(|s| s.deficit)
        .fold(f64::INFINITY, f64::min);
    rep.set("min_sample_deficit", worst_deficit);
    rep.push(CheckRow::lower("deficit-nonnegative", worst_deficit, 0.0, 1e-9));

    let bubble = extremals::make_bubble(&p, 1.0)?;
    let gen = extremals::scaling_generator(&p, 1.0)?;
    let bump = RadialProfile::log_gaussian(1.0, 0.5);
    let w = stability::orthonormalize_against(
        &bump,
        &[bubble.profile.clone(), gen],
        &p,
        cfg,
    )?;
    let records = stability::taylor_check(&w, &[0.02, 0.01, 0.005], &p, cfg)?;
    let reduced: Vec<f64> = records.iter().map(|(e, r)| r.abs() / (e * e)).collect();
    rep.set("taylor_ratio_eps_02", reduced[0]);
    rep.set("taylor_ratio_eps_01", reduced[1]);
    rep.set("taylor_ratio_eps_005", reduced[2]);
    let decay = (reduced[0] / reduced[1].max(1e-300))
        .min(reduced[1] / reduced[2].max(1e-300));
    rep.set("taylor_decay_factor", decay);
    rep.push(CheckRow::lower("taylor-remainder-decay", decay, 1.8, 0.0));

    let on_manifold = extremals::make_bubble(&p, 2.0)?.profile.scaled(1.5);
    let proj = stability::project_to_manifold(&on_manifold, &p, cfg)?;
    let norm = inner_product_mu(&on_manifold, &on_manifold, &p, cfg)?.sqrt();
    rep.set("self_projection_distance", proj.distance / norm);
    rep.push(CheckRow::upper(
        "self-projection",
        proj.distance / norm,
        0.0,
        1e-7,
    ));
    Ok(rep)
}

/// Composite report running every module's check suite.
#[allow(clippy::too_many_arguments)]
pub fn full_report(
    n: u32,
    mu: f64,
    sectors: &[u32],
    elements: usize,
    sample_count: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Report> {
    let p = derive_constants(n, mu)?;
    let mut rep = Report::new("all", &p);
    rep.absorb(constants_report(n, mu)?);
    rep.absorb(extremal_report(n, mu, cfg)?);
    rep.absorb(transform_report(n, mu, cfg)?);
    rep.absorb(spectrum_report(n, mu, sectors, elements, cfg)?);
    rep.absorb(stability_report(n, mu, sample_count, seed, elements, cfg)?);
    Ok(rep)
}
