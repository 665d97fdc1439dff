//! The inequality engine.
//!
//! Three layers, matching the proof structure:
//!
//! 1. an averaging/Cauchy–Schwarz chain valid for every conformal factor:
//!    the mean loop length over heights equals the torus integral of e^u,
//!    which Cauchy–Schwarz caps by geometric means of areas — so the
//!    shortest loop always satisfies (inf_s l_g(γ_s))² ≤ 2√3·area(g);
//! 2. a neighborhood certificate (sup norms of e^u − 1 and ∂_y e^u) under
//!    which the sweep cycles never exceed the loop length, making the sweep
//!    maximum sit at the loop itself;
//! 3. the combined verdict: the diastole upper bound U from the sweep
//!    satisfies U² ≤ 2√3·area(g), with equality exactly for constant
//!    factors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{sphere_area, sup_deviation, sup_slope, torus_mean, CoverError};
use crate::field::ConformalFactorField;
use crate::lattice::{hex_basis, HEX_HEIGHT};
use crate::quad::{CompositeRule, KahanSum};
use crate::report::{InequalityReport, Verdict};
use crate::sweep::{default_alpha_grid, default_s_grid, gamma_length, sweep_cycle, SweepError};

/// area(S², g_c) = 1/(2√3).
pub const FLAT_SPHERE_AREA: f64 = 0.288_675_134_594_812_9;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// Numeric settings shared by the verification suite.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerifySettings {
    /// Grid resolution for areas and sup norms.
    pub resolution: usize,
    /// Number of height samples (offset from marked heights by half a step).
    pub s_count: usize,
    /// Number of contraction samples; odd counts include 1/2 exactly.
    pub alpha_count: usize,
    /// Gauss–Legendre nodes per cycle edge.
    pub arc_nodes: usize,
    /// Inflation applied to grid sup estimates.
    pub safety: f64,
    /// Slack for inequality comparisons.
    pub tolerance: f64,
    /// Margins below `near_equality_rel`·area count as the equality case.
    pub near_equality_rel: f64,
    /// Fields with variance below this count as constant.
    pub variance_tol: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            resolution: 128,
            s_count: 64,
            alpha_count: 129,
            arc_nodes: 64,
            safety: 1.05,
            tolerance: 1e-8,
            near_equality_rel: 1e-7,
            variance_tol: 1e-10,
        }
    }
}

/// Certificate that a conformal factor sits in the verified neighborhood of
/// the flat metric: margin = 1 − ‖e^u−1‖_∞ − (1/(2√3))·sup|∂_y e^u| must be
/// positive after safety inflation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NeighborhoodCertificate {
    pub sup_dev: f64,
    pub sup_slope: f64,
    pub margin: f64,
    pub grid: usize,
    pub safety: f64,
}

impl NeighborhoodCertificate {
    pub fn is_valid(&self) -> bool {
        self.margin > 0.0
    }
}

/// Computes the certificate from grid sup estimates inflated by `safety`.
pub fn neighborhood_certificate(
    u: &ConformalFactorField,
    n: usize,
    safety: f64,
) -> Result<NeighborhoodCertificate, CoverError> {
    let dev = sup_deviation(u, n)?.value * safety;
    let slope = sup_slope(u, n)?.value * safety;
    let margin = 1.0 - dev - 0.5 / 3.0f64.sqrt() * slope;
    Ok(NeighborhoodCertificate {
        sup_dev: dev,
        sup_slope: slope,
        margin,
        grid: n,
        safety,
    })
}

/// Verifies the averaging chain for an arbitrary field:
///
/// (a) ∫ l_g(γ_s) ds over heights equals ∬ e^u over the torus,
/// (b) that integral is at most 3·√(area(g))·√(area(g_c)),
/// (c) therefore (min_s l_g(γ_s))² ≤ 2√3·area(g).
///
/// The headline lhs/rhs are the corollary (c); (a) and (b) live in the
/// details. Holds for every field, certified or not.
pub fn averaged_inequality_check(
    u: &ConformalFactorField,
    n: usize,
) -> Result<InequalityReport, VerifyError> {
    let area = sphere_area(u, n)?;
    let two_sqrt3 = 2.0 * 3.0f64.sqrt();

    // route 1: heights average of loop lengths, on the rectangle grid
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let s = (j as f64 + 0.5) * HEX_HEIGHT / n as f64;
            let mut acc = KahanSum::new();
            for i in 0..n {
                let q = crate::lattice::PlanePoint::new(i as f64 / n as f64, s);
                acc.add(u.eval(q).value.exp());
            }
            acc.value() / n as f64
        })
        .collect();
    let mut loop_mean = KahanSum::new();
    for row in &rows {
        loop_mean.add(*row);
    }
    let identity_lhs = loop_mean.value() / n as f64 * HEX_HEIGHT;

    // route 2: the torus integral of e^u on the lattice-adapted grid
    let identity_rhs = hex_basis().area() * torus_mean(n, |q| u.eval(q).value.exp());

    // Cauchy–Schwarz cap
    let cs_rhs = 3.0 * area.sqrt() * FLAT_SPHERE_AREA.sqrt();

    // corollary: the flat-measure minimum loop length obeys the area bound
    let rule = CompositeRule::single_panel(64);
    let min_len = default_s_grid(n)
        .par_iter()
        .map(|&s| gamma_length(u, s, &rule).expect("grid heights are in range"))
        .reduce(|| f64::INFINITY, f64::min);

    let tol = 1e-9;
    let identity_ok = (identity_lhs - identity_rhs).abs() <= tol * identity_rhs.max(1.0);
    let cs_ok = identity_rhs <= cs_rhs + tol;
    let corollary_ok = min_len * min_len <= two_sqrt3 * area + tol;

    let mut report = InequalityReport::new(
        "averaged-inequality",
        min_len * min_len,
        two_sqrt3 * area,
        Verdict::from_holds(identity_ok && cs_ok && corollary_ok),
        tol,
    );
    report.push_input("resolution", format!("{n}"));
    report.push_detail("identity_lhs", identity_lhs);
    report.push_detail("identity_rhs", identity_rhs);
    report.push_detail("identity_residual", (identity_lhs - identity_rhs).abs());
    report.push_detail("cauchy_schwarz_lhs", identity_rhs);
    report.push_detail("cauchy_schwarz_rhs", cs_rhs);
    report.push_detail("min_loop_length", min_len);
    report.push_detail("area", area);
    Ok(report)
}

/// The sweep-based diastole upper bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiastoleBound {
    /// U = min over heights of the sweep maximum.
    pub value: f64,
    /// The minimizing height.
    pub s_star: f64,
    /// |max_α l_g(z^α) − l_g(γ)| at the minimizing height; small for
    /// certified fields, where the sweep maximum sits at α = 1/2.
    pub midpoint_gap: f64,
}

/// Computes U = min_s max_α l_g(z_s^α) over the given grids.
pub fn diastole_upper_bound(
    u: &ConformalFactorField,
    s_grid: &[f64],
    alpha_grid: &[f64],
    arc_nodes: usize,
) -> Result<DiastoleBound, VerifyError> {
    assert!(!s_grid.is_empty() && !alpha_grid.is_empty(), "grids must be nonempty");
    let rule = CompositeRule::single_panel(arc_nodes);
    let per_height: Result<Vec<(f64, f64)>, SweepError> = s_grid
        .par_iter()
        .map(|&s| {
            let mut sweep_max = f64::NEG_INFINITY;
            for &alpha in alpha_grid {
                let cycle = sweep_cycle(s, alpha)?;
                sweep_max = sweep_max.max(cycle.cycle.length_under(u, &rule));
            }
            let loop_len = gamma_length(u, s, &rule)?;
            Ok((sweep_max, loop_len))
        })
        .collect();
    let per_height = per_height?;
    let mut best = f64::INFINITY;
    let mut s_star = s_grid[0];
    let mut gap = 0.0;
    for (&s, &(sweep_max, loop_len)) in s_grid.iter().zip(&per_height) {
        if sweep_max < best {
            best = sweep_max;
            s_star = s;
            gap = (sweep_max - loop_len).abs();
        }
    }
    Ok(DiastoleBound {
        value: best,
        s_star,
        midpoint_gap: gap,
    })
}

/// Flat-measure mean and variance of the exponent u over the torus.
pub fn field_variance(u: &ConformalFactorField, n: usize) -> f64 {
    let mean = torus_mean(n, |q| u.eval(q).value);
    torus_mean(n, |q| {
        let d = u.eval(q).value - mean;
        d * d
    })
}

/// Full verdict for one field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub report: InequalityReport,
    pub certificate: NeighborhoodCertificate,
    pub area: f64,
    pub diastole_bound: DiastoleBound,
    pub variance: f64,
    pub near_equality: bool,
}

/// Combines certificate, area and sweep bound into the final check
/// U² ≤ 2√3·area(g), flagging near-equality and cross-checking that it only
/// occurs for (numerically) constant conformal factors.
///
/// An invalid certificate downgrades the verdict to outside-regime; the
/// inequality is still evaluated and reported.
pub fn theorem_check(
    u: &ConformalFactorField,
    settings: &VerifySettings,
) -> Result<TheoremVerdict, VerifyError> {
    let certificate = neighborhood_certificate(u, settings.resolution, settings.safety)?;
    let area = sphere_area(u, settings.resolution)?;
    let bound = diastole_upper_bound(
        u,
        &default_s_grid(settings.s_count),
        &default_alpha_grid(settings.alpha_count),
        settings.arc_nodes,
    )?;
    let two_sqrt3 = 2.0 * 3.0f64.sqrt();
    let lhs = bound.value * bound.value;
    let rhs = two_sqrt3 * area;
    let margin = rhs - lhs;
    let near_equality = margin.abs() < settings.near_equality_rel * area.max(f64::MIN_POSITIVE);
    let variance = field_variance(u, settings.resolution);
    let equality_consistent = !near_equality || variance < settings.variance_tol;

    let holds = lhs <= rhs + settings.tolerance && equality_consistent;
    let verdict = if !certificate.is_valid() {
        Verdict::OutsideRegime
    } else {
        Verdict::from_holds(holds)
    };

    let mut report = InequalityReport::new("diastole-area", lhs, rhs, verdict, settings.tolerance);
    report.push_input("resolution", format!("{}", settings.resolution));
    report.push_input("s_count", format!("{}", settings.s_count));
    report.push_input("alpha_count", format!("{}", settings.alpha_count));
    report.push_input("arc_nodes", format!("{}", settings.arc_nodes));
    report.push_input("safety", format!("{}", settings.safety));
    report.push_detail("area", area);
    report.push_detail("diastole_bound", bound.value);
    report.push_detail("s_star", bound.s_star);
    report.push_detail("midpoint_gap", bound.midpoint_gap);
    report.push_detail("certificate_margin", certificate.margin);
    report.push_detail("sup_deviation", certificate.sup_dev);
    report.push_detail("sup_slope", certificate.sup_slope);
    report.push_detail("variance", variance);
    report.push_detail("near_equality", if near_equality { 1.0 } else { 0.0 });

    Ok(TheoremVerdict {
        report,
        certificate,
        area,
        diastole_bound: bound,
        variance,
        near_equality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn small_settings() -> VerifySettings {
        VerifySettings {
            resolution: 64,
            s_count: 16,
            alpha_count: 33,
            arc_nodes: 32,
            ..VerifySettings::default()
        }
    }

    #[test]
    fn zero_field_chain_is_exact() {
        let report = averaged_inequality_check(&ConformalFactorField::zero(), 64).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert_relative_eq!(report.details["identity_lhs"], HEX_HEIGHT, epsilon = 1e-12);
        assert_relative_eq!(report.details["identity_rhs"], HEX_HEIGHT, epsilon = 1e-12);
        // corollary is an equality at the flat metric: 1 = 2√3·(1/(2√3))
        assert_relative_eq!(report.lhs, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.rhs, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_field_chain_is_equality() {
        let c = 0.3;
        let report =
            averaged_inequality_check(&ConformalFactorField::constant(c), 64).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert_abs_diff_eq!(report.margin, 0.0, epsilon = 1e-9);
        assert_relative_eq!(
            report.details["cauchy_schwarz_lhs"],
            report.details["cauchy_schwarz_rhs"],
            epsilon = 1e-12
        );
    }

    #[test]
    fn random_fields_hold_with_strict_margin() {
        for seed in 0..8 {
            let u = ConformalFactorField::random(seed, 0.4, 3);
            let report = averaged_inequality_check(&u, 64).unwrap();
            assert_eq!(report.verdict, Verdict::Holds, "seed {seed}");
            assert!(
                report.margin > 1e-6,
                "nonconstant field must have strict margin, got {}",
                report.margin
            );
            assert!(report.details["identity_residual"] < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn certificate_for_simple_fields() {
        let zero = neighborhood_certificate(&ConformalFactorField::zero(), 64, 1.05).unwrap();
        assert_relative_eq!(zero.margin, 1.0);
        assert!(zero.is_valid());

        let c = neighborhood_certificate(
            &ConformalFactorField::constant(1.5f64.ln()),
            64,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(c.sup_dev, 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.sup_slope, 0.0);
        assert_relative_eq!(c.margin, 0.5, epsilon = 1e-12);
        assert!(c.is_valid());

        let wild = neighborhood_certificate(&ConformalFactorField::random(1, 2.0, 3), 64, 1.05)
            .unwrap();
        assert!(!wild.is_valid(), "amplitude-2 fields sit outside the regime");
    }

    #[test]
    fn diastole_bound_flat_and_constant() {
        let grids = (default_s_grid(16), default_alpha_grid(17));
        let flat = diastole_upper_bound(&ConformalFactorField::zero(), &grids.0, &grids.1, 32)
            .unwrap();
        assert_relative_eq!(flat.value, 1.0, epsilon = 1e-12);
        assert!(flat.midpoint_gap < 1e-12);

        let c = 0.4;
        let scaled =
            diastole_upper_bound(&ConformalFactorField::constant(c), &grids.0, &grids.1, 32)
                .unwrap();
        assert_relative_eq!(scaled.value, c.exp(), epsilon = 1e-12);
    }

    #[test]
    fn diastole_bound_refinement_is_monotone() {
        let u = ConformalFactorField::random(17, 0.05, 3);
        let s_coarse = default_s_grid(8);
        let mut s_fine = s_coarse.clone();
        s_fine.extend(s_coarse.iter().map(|s| (s + 0.013).min(HEX_HEIGHT)));
        let alpha_coarse = default_alpha_grid(17);
        let alpha_fine = default_alpha_grid(33); // superset of the 17-grid

        let base = diastole_upper_bound(&u, &s_coarse, &alpha_coarse, 32).unwrap();
        let more_alpha = diastole_upper_bound(&u, &s_coarse, &alpha_fine, 32).unwrap();
        assert!(more_alpha.value >= base.value - 1e-12, "max over superset grows");
        let more_s = diastole_upper_bound(&u, &s_fine, &alpha_coarse, 32).unwrap();
        assert!(more_s.value <= base.value + 1e-12, "min over superset shrinks");
    }

    #[test]
    fn theorem_check_flat_metric_equality() {
        let verdict = theorem_check(&ConformalFactorField::zero(), &small_settings()).unwrap();
        assert_eq!(verdict.report.verdict, Verdict::Holds);
        assert_abs_diff_eq!(verdict.report.margin, 0.0, epsilon = 1e-9);
        assert!(verdict.near_equality);
        assert_abs_diff_eq!(verdict.variance, 0.0, epsilon = 1e-15);
        assert_relative_eq!(verdict.area, FLAT_SPHERE_AREA, epsilon = 1e-12);
        assert_relative_eq!(verdict.diastole_bound.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn theorem_check_is_homothety_invariant() {
        let u = ConformalFactorField::random(23, 0.04, 3);
        let settings = small_settings();
        let base = theorem_check(&u, &settings).unwrap();
        let c = 0.35;
        let shifted = theorem_check(&u.clone().offset(c), &settings).unwrap();
        assert_eq!(base.report.verdict, shifted.report.verdict);
        assert_eq!(base.near_equality, shifted.near_equality);
        assert_relative_eq!(
            shifted.report.margin,
            (2.0 * c).exp() * base.report.margin,
            max_relative = 1e-6
        );
    }

    #[test]
    fn theorem_check_constant_field_is_equality_case() {
        let verdict =
            theorem_check(&ConformalFactorField::constant(0.2), &small_settings()).unwrap();
        assert_eq!(verdict.report.verdict, Verdict::Holds);
        assert!(verdict.near_equality);
        assert!(verdict.variance < 1e-15);
    }

    #[test]
    fn theorem_check_certified_field_strict() {
        let u = ConformalFactorField::random(31, 0.05, 3);
        let verdict = theorem_check(&u, &small_settings()).unwrap();
        assert!(verdict.certificate.is_valid());
        assert_eq!(verdict.report.verdict, Verdict::Holds);
        assert!(!verdict.near_equality, "nonconstant fields have strict margin");
        assert!(verdict.report.margin > 0.0);
        assert!(verdict.diastole_bound.midpoint_gap < 1e-8);
    }

    #[test]
    fn theorem_check_outside_regime() {
        let u = ConformalFactorField::random(5, 2.0, 3);
        let verdict = theorem_check(&u, &small_settings()).unwrap();
        assert!(!verdict.certificate.is_valid());
        assert_eq!(verdict.report.verdict, Verdict::OutsideRegime);
        // the report still carries the evaluated inequality
        assert!(verdict.report.lhs.is_finite() && verdict.report.rhs.is_finite());
    }
}
