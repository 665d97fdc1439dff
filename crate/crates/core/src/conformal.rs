//! The conformal-plane picture of the flat cone metric.
//!
//! On the Riemann sphere the two-triangle flat metric reads, up to scale,
//! (|z+1|·|z|·|z−1|)^{−4/3}·|dz|², with integrable density singularities at
//! the three marked points −1, 0, 1, each a cone point of angle 2π/3. Only
//! scale-invariant quantities are checked here: cone angles measured as
//! circumference-to-radius ratios of small metric disks, and the ratio
//! relating the density to the round-sphere density.

use thiserror::Error;

use crate::quad::CompositeRule;

/// The three singular points on the real axis.
pub const SINGULAR_POINTS: [(f64, f64); 3] = [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)];

const SINGULAR_TOL: f64 = 1e-12;
const MAX_RADIUS: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ConformalError {
    #[error("({re}, {im}) is a singular point of the density")]
    SingularPoint { re: f64, im: f64 },
    #[error("radius {r} invalid: must be positive and keep the disk {max} away from other singular points")]
    InvalidRadius { r: f64, max: f64 },
    #[error("coordinates must be finite")]
    NonFinite,
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// |z+1| · |z| · |z−1|.
fn moduli_product(re: f64, im: f64) -> f64 {
    (re + 1.0).hypot(im) * re.hypot(im) * (re - 1.0).hypot(im)
}

fn check_regular(re: f64, im: f64) -> Result<(), ConformalError> {
    if !re.is_finite() || !im.is_finite() {
        return Err(ConformalError::NonFinite);
    }
    for p in SINGULAR_POINTS {
        if distance((re, im), p) < SINGULAR_TOL {
            return Err(ConformalError::SingularPoint { re, im });
        }
    }
    Ok(())
}

/// The conformal density λ(z) = (|z+1|·|z|·|z−1|)^{−4/3}.
pub fn density(re: f64, im: f64) -> Result<f64, ConformalError> {
    check_regular(re, im)?;
    Ok(moduli_product(re, im).powf(-4.0 / 3.0))
}

/// √λ, the length density.
fn length_density(re: f64, im: f64) -> f64 {
    moduli_product(re, im).powf(-2.0 / 3.0)
}

/// Ratio of a small metric circle's circumference to its metric radius,
/// measured at distance `r` from `center`. Converges to the cone angle as
/// r → 0: 2π/3 at the singular points, 2π elsewhere. The radius is measured
/// along the upward ray, with the radial integral graded by the substitution
/// ρ = τ³ so the integrable density singularity costs no accuracy.
pub fn cone_angle_estimate(center: (f64, f64), r: f64) -> Result<f64, ConformalError> {
    if !center.0.is_finite() || !center.1.is_finite() {
        return Err(ConformalError::NonFinite);
    }
    if !(r > 0.0 && r < MAX_RADIUS) {
        return Err(ConformalError::InvalidRadius { r, max: MAX_RADIUS });
    }
    // every singular point other than the center itself must stay clear of
    // the disk
    for p in SINGULAR_POINTS {
        let d = distance(center, p);
        if d >= SINGULAR_TOL && d <= r * 2.0 {
            return Err(ConformalError::InvalidRadius { r, max: d / 2.0 });
        }
    }

    let circumference = refine_to_tolerance(64, 8192, 1e-12, |n| {
        let mut acc = crate::quad::KahanSum::new();
        for j in 0..n {
            let theta = std::f64::consts::TAU * j as f64 / n as f64;
            let z = (center.0 + r * theta.cos(), center.1 + r * theta.sin());
            acc.add(length_density(z.0, z.1));
        }
        acc.value() * std::f64::consts::TAU * r / n as f64
    });

    let cb = r.cbrt();
    let radius = refine_to_tolerance(32, 4096, 1e-13, |n| {
        CompositeRule::single_panel(n.min(192))
            .integrate_unit(|t| {
                let tau = cb * t;
                let rho = tau * tau * tau;
                let z = (center.0, center.1 + rho);
                3.0 * tau * tau * cb * length_density(z.0, z.1)
            })
    });

    Ok(circumference / radius)
}

/// Doubles `n` until two successive evaluations agree to `tol`.
fn refine_to_tolerance<F: Fn(usize) -> f64>(start: usize, max: usize, tol: f64, eval: F) -> f64 {
    let mut n = start;
    let mut prev = eval(n);
    while n < max {
        n *= 2;
        let next = eval(n);
        if (next - prev).abs() <= tol * prev.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

/// The round density, and its ratio to the cone density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDensityRelation {
    /// (2/(1+|z|²))², the round-sphere density.
    pub round: f64,
    /// Conformal factor carrying the cone metric to the round one; vanishes
    /// at the three singular points.
    pub ratio: f64,
}

pub fn round_density_relation(re: f64, im: f64) -> Result<RoundDensityRelation, ConformalError> {
    check_regular(re, im)?;
    let norm_sq = re * re + im * im;
    let round = (2.0 / (1.0 + norm_sq)).powi(2);
    let ratio = round * moduli_product(re, im).powf(4.0 / 3.0);
    Ok(RoundDensityRelation { round, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    const TWO_PI: f64 = std::f64::consts::TAU;
    const CONE: f64 = TWO_PI / 3.0;

    #[test]
    fn density_frozen_values() {
        // |i+1| = |i-1| = √2, |i| = 1 → (2)^{-4/3}... (√2·1·√2) = 2
        assert_relative_eq!(
            density(0.0, 1.0).unwrap(),
            0.396_850_262_992_049_9,
            epsilon = 1e-14
        );
        // |2+1|·|2|·|2-1| = 6
        assert_relative_eq!(
            density(2.0, 0.0).unwrap(),
            0.091_720_201_358_184_08,
            epsilon = 1e-14
        );
    }

    #[test]
    fn density_is_even() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let re = rng.gen_range(-3.0..3.0);
            let im = rng.gen_range(-3.0..3.0);
            if check_regular(re, im).is_err() || check_regular(-re, -im).is_err() {
                continue;
            }
            assert_relative_eq!(
                density(re, im).unwrap(),
                density(-re, -im).unwrap(),
                epsilon = 1e-12
            );
            assert!(density(re, im).unwrap() > 0.0);
        }
    }

    #[test]
    fn density_rejects_singular_points() {
        for p in SINGULAR_POINTS {
            assert!(matches!(
                density(p.0, p.1),
                Err(ConformalError::SingularPoint { .. })
            ));
        }
        assert!(density(1.0 + 1e-14, 0.0).is_err());
    }

    #[test]
    fn cone_angles_at_singular_points() {
        for p in SINGULAR_POINTS {
            let angle = cone_angle_estimate(p, 1e-3).unwrap();
            assert_abs_diff_eq!(angle, CONE, epsilon = 1e-3);
        }
    }

    #[test]
    fn cone_angle_at_regular_points() {
        // on the real axis the upward ray is a symmetry direction, so the
        // ray bias vanishes and the estimate converges at second order
        let angle = cone_angle_estimate((0.5, 0.0), 1e-3).unwrap();
        assert_abs_diff_eq!(angle, TWO_PI, epsilon = 1e-3);
        // off-axis points carry a first-order ray bias of size
        // π·(∂_y ln√λ)·r, a few 1e-3 here
        let angle = cone_angle_estimate((0.5, 0.5), 1e-3).unwrap();
        assert_abs_diff_eq!(angle, TWO_PI, epsilon = 1e-2);
    }

    #[test]
    fn cone_angle_estimates_converge() {
        for (center, target) in [
            ((0.0, 0.0), CONE),
            ((1.0, 0.0), CONE),
            ((0.5, 0.0), TWO_PI),
        ] {
            let errors: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&r| (cone_angle_estimate(center, r).unwrap() - target).abs())
                .collect();
            assert!(
                errors[0] > errors[1] && errors[1] > errors[2],
                "monotone approach at {center:?}: {errors:?}"
            );
            assert!(
                errors[1] * 5.0 <= errors[0] && errors[2] * 5.0 <= errors[1],
                "successive errors shrink 5x at {center:?}: {errors:?}"
            );
        }
    }

    #[test]
    fn cone_angle_radius_validation() {
        assert!(matches!(
            cone_angle_estimate((0.0, 0.0), 0.6),
            Err(ConformalError::InvalidRadius { .. })
        ));
        assert!(matches!(
            cone_angle_estimate((0.0, 0.0), 0.0),
            Err(ConformalError::InvalidRadius { .. })
        ));
        // regular center too close to a singular point for this radius
        assert!(matches!(
            cone_angle_estimate((0.9, 0.0), 0.2),
            Err(ConformalError::InvalidRadius { .. })
        ));
    }

    #[test]
    fn round_relation_vanishes_toward_ramification() {
        let mut prev = f64::INFINITY;
        for &x in &[0.1, 0.01, 0.001] {
            let rel = round_density_relation(x, 0.0).unwrap();
            assert!(rel.ratio < prev, "ratio decreases toward the singular point");
            assert!(rel.ratio > 0.0);
            prev = rel.ratio;
        }
    }

    #[test]
    fn round_relation_frozen_and_symmetric() {
        let rel = round_density_relation(0.0, 1.0).unwrap();
        // round density at |z| = 1 is 1; moduli product is 2
        assert_relative_eq!(rel.round, 1.0, epsilon = 1e-14);
        assert_relative_eq!(rel.ratio, 2.0f64.powf(4.0 / 3.0), epsilon = 1e-14);

        let plus = round_density_relation(2.0, 0.0).unwrap();
        let minus = round_density_relation(-2.0, 0.0).unwrap();
        assert_relative_eq!(plus.ratio, minus.ratio, epsilon = 1e-14);

        // consistency: round = ratio · density
        let z = (0.7, 0.4);
        let rel = round_density_relation(z.0, z.1).unwrap();
        assert_relative_eq!(
            rel.round,
            rel.ratio * density(z.0, z.1).unwrap(),
            epsilon = 1e-12
        );
    }
}
