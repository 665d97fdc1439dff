//! Quadrature building blocks: Gauss–Legendre rules, composite panels and
//! compensated (Neumaier) summation.
//!
//! Every routine here accumulates in a fixed order, so results do not depend
//! on how callers distribute work across threads.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use crate::lattice::PlanePoint;

/// Compensated accumulator (Neumaier variant of Kahan summation).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sum an iterator with compensation, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial,
    /// seeded with the Chebyshev-angle approximation of the roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // root estimate, refined to machine precision
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (p2, d2) = legendre_with_derivative(n, x);
                    dp = d2;
                    x -= p2 / d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static RULE_CACHE: RwLock<BTreeMap<usize, Arc<GaussLegendre>>> = RwLock::new(BTreeMap::new());

/// Shared, cached Gauss–Legendre rule.
pub fn gl_rule(n: usize) -> Arc<GaussLegendre> {
    if let Some(rule) = RULE_CACHE.read().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(GaussLegendre::new(n));
    RULE_CACHE
        .write()
        .unwrap()
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// Composite Gauss–Legendre description: `panels` equal subintervals, each
/// carrying a `points_per_panel`-point rule. A single panel gives the
/// spectrally accurate plain rule; many low-order panels give a fixed
/// algebraic convergence order, which refinement studies rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeRule {
    pub points_per_panel: usize,
    pub panels: usize,
}

impl CompositeRule {
    pub fn single_panel(points: usize) -> Self {
        Self {
            points_per_panel: points.max(1),
            panels: 1,
        }
    }

    /// Splits a total node budget into 2-point panels (order-4 convergence).
    pub fn order4(total_nodes: usize) -> Self {
        Self {
            points_per_panel: 2,
            panels: (total_nodes / 2).max(1),
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.points_per_panel * self.panels
    }

    /// ∫₀¹ f(t) dt.
    pub fn integrate_unit<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let rule = gl_rule(self.points_per_panel);
        let h = 1.0 / self.panels as f64;
        let mut acc = KahanSum::new();
        for p in 0..self.panels {
            let left = p as f64 * h;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = left + 0.5 * h * (x + 1.0);
                acc.add(0.5 * h * w * f(t));
            }
        }
        acc.value()
    }

    /// Line integral ∫ f(q) dℓ over the straight segment from `a` to `b`.
    pub fn integrate_segment<F: FnMut(PlanePoint) -> f64>(
        &self,
        a: PlanePoint,
        b: PlanePoint,
        mut f: F,
    ) -> f64 {
        let len = a.distance(b);
        if len == 0.0 {
            return 0.0;
        }
        len * self.integrate_unit(|t| f(a.lerp(b, t)))
    }

    /// Integral of `f dx` over the segment (the horizontal coordinate form).
    pub fn integrate_segment_dx<F: FnMut(PlanePoint) -> f64>(
        &self,
        a: PlanePoint,
        b: PlanePoint,
        mut f: F,
    ) -> f64 {
        let dx = b.x - a.x;
        if dx == 0.0 {
            return 0.0;
        }
        dx * self.integrate_unit(|t| f(a.lerp(b, t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1
        for n in 1..=20 {
            let rule = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let got = kahan_sum(
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg as i32)),
            );
            assert_relative_eq!(got, exact, epsilon = 1e-13);
            let weight_total = kahan_sum(rule.weights.iter().copied());
            assert_relative_eq!(weight_total, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_rule_integrates_oscillatory_function() {
        let rule = CompositeRule::single_panel(48);
        let got = rule.integrate_unit(|t| (20.0 * t).sin());
        let exact = (1.0 - (20.0f64).cos()) / 20.0;
        assert_relative_eq!(got, exact, epsilon = 1e-13);
    }

    #[test]
    fn order4_refinement_shrinks_error_16x() {
        let exact = (1.0 - (30.0f64).cos()) / 30.0;
        let coarse = (CompositeRule::order4(64).integrate_unit(|t| (30.0 * t).sin()) - exact).abs();
        let fine = (CompositeRule::order4(128).integrate_unit(|t| (30.0 * t).sin()) - exact).abs();
        assert!(coarse > 1e-13, "coarse error {coarse} already at floor");
        assert!(fine * 8.0 < coarse, "order-4 rule should shrink >= 8x");
    }

    #[test]
    fn segment_integral_matches_length() {
        let rule = CompositeRule::single_panel(8);
        let a = PlanePoint::new(0.0, 0.0);
        let b = PlanePoint::new(3.0, 4.0);
        assert_relative_eq!(rule.integrate_segment(a, b, |_| 1.0), 5.0, epsilon = 1e-14);
        assert_relative_eq!(
            rule.integrate_segment_dx(a, b, |_| 1.0),
            3.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn kahan_recovers_catastrophic_sum() {
        let mut acc = KahanSum::new();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10.0);
    }
}
