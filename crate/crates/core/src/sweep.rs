//! The geodesic family, the sweep-out cycles and the Stokes estimate.
//!
//! The horizontal circle at height s projects to a closed geodesic loop on
//! the quotient sphere of flat length 1. The marked heights 0, 1/(2√3) and
//! 1/√3 (where the circle meets a cone point) cut the height range into three
//! intervals. Inside an interval the projected loop is a figure eight made
//! of two simple loops: one of length a_low = 2√3·s' around the cone point at
//! the interval's lower height, one of length a_high = 1 − a_low around the
//! upper one (s' is the offset into the interval).
//!
//! Each simple loop lifts to a closed deck-invariant polygon around a fixed
//! point of the deck rotation — the loop around the lower point to an
//! inverted equilateral triangle, the one around the upper point to an
//! upright triangle — carried with weight 1/3 because the covering wraps the
//! polygon three times over the loop. The whole figure eight, developed
//! around the remaining fixed point, closes into a convex hexagon with sides
//! alternating between the two loop lengths (degenerating to a triangle when
//! s' = 0).
//!
//! The sweep cycle z_s^α contracts the two triangles homothetically to their
//! centers for α < 1/2 and the hexagon for α > 1/2, which realizes the
//! length law l(z_s^α) = 1 − 2·|α − 1/2| exactly.
//!
//! Between matched arcs of the full-scale and contracted cycles lies a
//! planar trapezoid whose legs sit on rays through the homothety center;
//! integrating d(e^u) ∧ dx over it turns length differences under a
//! conformal factor e^u into boundary terms (the Stokes identity checked by
//! [`stokes_residual`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{fixed_point_lifts, sup_deviation, sup_slope, DECK_ROTATION, MARKED_SHIFT};
use crate::field::ConformalFactorField;
use crate::lattice::{
    hex_basis, reduce_mod_hex, torus_distance, PlanePoint, TorusPoint, HEX_HEIGHT, MARKED_STEP,
};
use crate::quad::{CompositeRule, KahanSum};
use crate::report::{InequalityReport, Verdict};

/// 2√3, the factor converting interval offsets to loop lengths.
const TWO_SQRT3: f64 = 3.464_101_615_137_754_6;

/// ¼·tan(π/6) = 1/(4√3), the coefficient of the quadratic area law.
pub const QUARTER_TAN_PI_6: f64 = 0.144_337_567_297_406_46;

/// Offsets below this count as sitting exactly on a marked height.
const SPECIAL_TOL: f64 = 1e-12;

/// Polygon sides below this length collapse to point cycles.
const POINT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("parameter {name} = {value} outside its valid range")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("s = {s} sits on a marked height; the loop does not split there")]
    SpecialHeight { s: f64 },
}

/// Which construction the cycle at height s follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepCase {
    /// s on a marked height: the loop passes through a cone point.
    First,
    /// s strictly inside an interval: the loop is a figure eight.
    Second,
}

impl SweepCase {
    pub fn label(&self) -> &'static str {
        match self {
            SweepCase::First => "first",
            SweepCase::Second => "second",
        }
    }
}

/// Multiplicity with which a planar development covers its sphere cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleWeight {
    One,
    OneThird,
}

impl CycleWeight {
    pub fn factor(&self) -> f64 {
        match self {
            CycleWeight::One => 1.0,
            CycleWeight::OneThird => 1.0 / 3.0,
        }
    }
}

/// One closed polygonal component of a cycle, in planar development.
///
/// `vertices` is a closed chain: the last vertex equals the first modulo the
/// lattice. A single vertex denotes a point cycle. `center` records the
/// fixed-point lift about which a weight-1/3 component is deck-invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleComponent {
    pub vertices: Vec<PlanePoint>,
    pub center: Option<PlanePoint>,
}

impl CycleComponent {
    pub fn point(p: PlanePoint) -> Self {
        Self {
            vertices: vec![p],
            center: Some(p),
        }
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (PlanePoint, PlanePoint)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn perimeter(&self) -> f64 {
        crate::quad::kahan_sum(self.edges().map(|(a, b)| a.distance(b)))
    }

    /// Torus distance between the chain's first and last vertices.
    pub fn closure_residual(&self) -> f64 {
        match (self.vertices.first(), self.vertices.last()) {
            (Some(a), Some(b)) => torus_distance(*a, *b),
            _ => 0.0,
        }
    }

    /// Strict convexity check: all turns share one sign (point cycles and
    /// segments pass trivially).
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        if n < 4 {
            return true;
        }
        let loop_vertices = &self.vertices[..n - 1];
        let m = loop_vertices.len();
        let mut sign = 0.0f64;
        for i in 0..m {
            let a = loop_vertices[i];
            let b = loop_vertices[(i + 1) % m];
            let c = loop_vertices[(i + 2) % m];
            let cross = b.sub(a).cross(c.sub(b));
            if cross.abs() < 1e-14 {
                continue;
            }
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                return false;
            }
        }
        true
    }

    /// True when `q` lies inside the closed polygon (winding test).
    pub fn contains(&self, q: PlanePoint) -> bool {
        let n = self.vertices.len();
        if n < 4 {
            return false;
        }
        let mut winding = 0i32;
        for (a, b) in self.edges() {
            if a.y <= q.y {
                if b.y > q.y && b.sub(a).cross(q.sub(a)) > 0.0 {
                    winding += 1;
                }
            } else if b.y <= q.y && b.sub(a).cross(q.sub(a)) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    fn homothety(&self, center: PlanePoint, factor: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.homothety(center, factor))
                .collect(),
            center: self.center,
        }
    }

    /// Collapses to a point cycle when every side is shorter than the point
    /// tolerance.
    fn collapse_if_degenerate(self) -> Self {
        if self.vertices.len() > 1 && self.edges().all(|(a, b)| a.distance(b) < POINT_TOL) {
            let center = self.center.unwrap_or(self.vertices[0]);
            CycleComponent::point(center)
        } else {
            self
        }
    }
}

/// A one-cycle on the sphere, represented by its planar development.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneCycleLift {
    pub components: Vec<CycleComponent>,
    pub weight: CycleWeight,
}

impl OneCycleLift {
    /// Length in the flat background metric.
    pub fn flat_length(&self) -> f64 {
        self.weight.factor()
            * crate::quad::kahan_sum(self.components.iter().map(|c| c.perimeter()))
    }

    /// Length under the metric e^{2u}·g: weight × Σ ∫ e^u dℓ over all edges.
    pub fn length_under(&self, u: &ConformalFactorField, rule: &CompositeRule) -> f64 {
        let mut acc = KahanSum::new();
        for component in &self.components {
            for (a, b) in component.edges() {
                acc.add(rule.integrate_segment(a, b, |q| u.eval(q).value.exp()));
            }
        }
        self.weight.factor() * acc.value()
    }
}

/// The projected geodesic loop at height s: the horizontal unit segment from
/// (0, s) to (1, s), carried with weight 1.
pub fn gamma(s: f64) -> Result<OneCycleLift, SweepError> {
    check_range("s", s, 0.0, HEX_HEIGHT)?;
    Ok(OneCycleLift {
        components: vec![CycleComponent {
            vertices: vec![PlanePoint::new(0.0, s), PlanePoint::new(1.0, s)],
            center: None,
        }],
        weight: CycleWeight::One,
    })
}

/// Flat length of the loop at height s under the field u.
pub fn gamma_length(u: &ConformalFactorField, s: f64, rule: &CompositeRule) -> Result<f64, SweepError> {
    Ok(gamma(s)?.length_under(u, rule))
}

/// How the figure eight at height s splits, and where it contracts.
#[derive(Debug, Clone, Copy)]
pub struct SplitLengths {
    pub interval_index: usize,
    pub a_low: f64,
    pub a_high: f64,
    /// Cone point encircled by the short (lower) loop.
    pub lower: TorusPoint,
    /// Cone point encircled by the complementary (upper) loop.
    pub upper: TorusPoint,
    /// Remaining cone point, the contraction target for α > 1/2.
    pub contraction_target: TorusPoint,
}

/// Interval decomposition of a height parameter.
#[derive(Debug, Clone, Copy)]
struct Frame {
    /// Interval index modulo 3; labels the fixed points.
    k: usize,
    /// Offset into the interval.
    s_prime: f64,
    /// Planar translation placing the base picture at this interval.
    shift: PlanePoint,
    special: bool,
}

fn frame(s: f64) -> Result<Frame, SweepError> {
    check_range("s", s, 0.0, HEX_HEIGHT)?;
    let mut k_eff = (s / MARKED_STEP).floor() as i64;
    k_eff = k_eff.clamp(0, 3);
    let mut s_prime = s - k_eff as f64 * MARKED_STEP;
    if s_prime < SPECIAL_TOL {
        s_prime = 0.0;
    } else if MARKED_STEP - s_prime < SPECIAL_TOL {
        k_eff += 1;
        s_prime = 0.0;
    }
    let shift = MARKED_SHIFT.scale(k_eff as f64);
    Ok(Frame {
        k: (k_eff % 3) as usize,
        s_prime,
        shift,
        special: s_prime == 0.0,
    })
}

/// Splits the loop at a non-marked height into its two simple loops.
///
/// Errors with [`SweepError::SpecialHeight`] on marked heights, where the
/// loop passes through a cone point instead of splitting.
pub fn split_lengths(s: f64) -> Result<SplitLengths, SweepError> {
    let fr = frame(s)?;
    if fr.special {
        return Err(SweepError::SpecialHeight { s });
    }
    Ok(split_from_frame(&fr))
}

fn split_from_frame(fr: &Frame) -> SplitLengths {
    let lifts = fixed_point_lifts();
    let reduce = |p: PlanePoint| reduce_mod_hex(p).expect("fixed point lifts are finite");
    SplitLengths {
        interval_index: fr.k,
        a_low: TWO_SQRT3 * fr.s_prime,
        a_high: 1.0 - TWO_SQRT3 * fr.s_prime,
        lower: reduce(lifts[fr.k]),
        upper: reduce(lifts[(fr.k + 1) % 3]),
        contraction_target: reduce(lifts[(fr.k + 2) % 3]),
    }
}

/// The sweep cycle z_s^α together with its construction data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCycle {
    pub s: f64,
    pub alpha: f64,
    pub case: SweepCase,
    pub interval_index: usize,
    pub a_low: f64,
    pub a_high: f64,
    pub cycle: OneCycleLift,
}

impl SweepCycle {
    /// The exact flat length the construction must reproduce.
    pub fn expected_flat_length(&self) -> f64 {
        1.0 - 2.0 * (self.alpha - 0.5).abs()
    }
}

/// Base-picture geometry for one interval frame.
struct IntervalGeometry {
    /// Inverted triangle around the lower fixed point (side a_low).
    low_triangle: CycleComponent,
    low_center: PlanePoint,
    /// Upright triangle around the upper fixed point (side a_high).
    high_triangle: CycleComponent,
    high_center: PlanePoint,
    /// Hexagon around the remaining fixed point (sides alternate a_low, a_high).
    hexagon: CycleComponent,
    hex_center: PlanePoint,
}

/// Closed deck orbit of seed vertices about a center: the seeds followed by
/// their two rotated copies, then closed back to the first seed.
fn deck_orbit_polygon(center: PlanePoint, seeds: &[PlanePoint]) -> CycleComponent {
    let mut vertices = Vec::with_capacity(3 * seeds.len() + 1);
    let mut current: Vec<PlanePoint> = seeds.to_vec();
    for _ in 0..3 {
        vertices.extend(current.iter().copied());
        current = current
            .iter()
            .map(|p| DECK_ROTATION.apply_about(center, *p))
            .collect();
    }
    vertices.push(vertices[0]);
    CycleComponent {
        vertices,
        center: Some(center),
    }
}

fn interval_geometry(fr: &Frame) -> IntervalGeometry {
    let sp = fr.s_prime;
    // √3·s' is the half-width of the inverted triangle's top side
    let w = TWO_SQRT3 * sp / 2.0;
    let a_high = 1.0 - TWO_SQRT3 * sp;

    let low_center = fr.shift;
    let low_seed = PlanePoint::new(w, sp).add(fr.shift);
    let low_triangle = if sp == 0.0 {
        CycleComponent::point(low_center)
    } else {
        deck_orbit_polygon(low_center, &[low_seed])
    };

    let high_center = PlanePoint::new(0.5, MARKED_STEP).add(fr.shift);
    let high_seed = PlanePoint::new(0.5 - a_high / 2.0, sp).add(fr.shift);
    let high_triangle = deck_orbit_polygon(high_center, &[high_seed]);

    let hex_center = PlanePoint::new(0.0, 2.0 * MARKED_STEP).add(fr.shift);
    let hexagon = if sp == 0.0 {
        // the hexagon degenerates to a triangle: the a_low sides vanish
        deck_orbit_polygon(hex_center, &[PlanePoint::new(0.0, 0.0).add(fr.shift)])
    } else {
        let a = PlanePoint::new(-w, sp).add(fr.shift);
        let b = PlanePoint::new(w, sp).add(fr.shift);
        deck_orbit_polygon(hex_center, &[a, b])
    };

    IntervalGeometry {
        low_triangle,
        low_center,
        high_triangle,
        high_center,
        hexagon,
        hex_center,
    }
}

/// Builds the sweep cycle z_s^α.
///
/// For α ≤ 1/2 the cycle is the two loop triangles contracted by the factor
/// 2α about their centers; for α > 1/2 it is the development hexagon
/// contracted by 2 − 2α about its center. Marked heights reuse the same path
/// with the lower loop collapsed to a point.
pub fn sweep_cycle(s: f64, alpha: f64) -> Result<SweepCycle, SweepError> {
    check_range("alpha", alpha, 0.0, 1.0)?;
    let fr = frame(s)?;
    let split = split_from_frame(&fr);
    let geometry = interval_geometry(&fr);
    let case = if fr.special {
        SweepCase::First
    } else {
        SweepCase::Second
    };

    let components = if alpha <= 0.5 {
        let lambda = 2.0 * alpha;
        vec![
            geometry
                .low_triangle
                .homothety(geometry.low_center, lambda)
                .collapse_if_degenerate(),
            geometry
                .high_triangle
                .homothety(geometry.high_center, lambda)
                .collapse_if_degenerate(),
        ]
    } else {
        let mu = 2.0 - 2.0 * alpha;
        vec![geometry
            .hexagon
            .homothety(geometry.hex_center, mu)
            .collapse_if_degenerate()]
    };

    Ok(SweepCycle {
        s,
        alpha,
        case,
        interval_index: split.interval_index,
        a_low: split.a_low,
        a_high: split.a_high,
        cycle: OneCycleLift {
            components,
            weight: CycleWeight::OneThird,
        },
    })
}

/// The development hexagon at height s, full scale (for geometry checks).
pub fn development_hexagon(s: f64) -> Result<CycleComponent, SweepError> {
    let fr = frame(s)?;
    Ok(interval_geometry(&fr).hexagon)
}

/// Planar trapezoid between matched arcs of the loop and of the contracted
/// cycle. The legs lie on rays through the homothety apex.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrapezoidDomain {
    /// 1 for the lower-loop arc, 2 for the upper-loop arc.
    pub component: usize,
    /// Arc of the loop lift, oriented toward increasing x.
    pub outer: (PlanePoint, PlanePoint),
    /// Matching arc of the contracted cycle, same orientation.
    pub inner: (PlanePoint, PlanePoint),
    /// Homothety center the legs point at.
    pub apex: PlanePoint,
    /// Contraction factor carrying outer to inner.
    pub scale: f64,
    /// True when the inner arc lies below the outer one; fixes the sign of
    /// the area term in the Stokes identity.
    pub downward: bool,
}

impl TrapezoidDomain {
    pub fn outer_length(&self) -> f64 {
        self.outer.0.distance(self.outer.1)
    }

    pub fn inner_length(&self) -> f64 {
        self.inner.0.distance(self.inner.1)
    }

    /// Legs of the boundary: outer start → inner start, inner end → outer end.
    pub fn legs(&self) -> [(PlanePoint, PlanePoint); 2] {
        [(self.outer.0, self.inner.0), (self.inner.1, self.outer.1)]
    }

    pub fn polygon(&self) -> [PlanePoint; 4] {
        [self.outer.0, self.outer.1, self.inner.1, self.inner.0]
    }

    /// Euclidean area by the shoelace formula.
    pub fn area(&self) -> f64 {
        let poly = self.polygon();
        let mut acc = KahanSum::new();
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            acc.add(a.cross(b));
        }
        0.5 * acc.value().abs()
    }
}

/// ¼·tan(π/6)·(outer² − inner²), the quadratic area law. Exact whenever the
/// apex sits at distance outer/(2√3) from the outer arc, which holds for
/// every triangle-contraction trapezoid.
pub fn quadratic_area_law(outer_len: f64, inner_len: f64) -> f64 {
    QUARTER_TAN_PI_6 * (outer_len * outer_len - inner_len * inner_len)
}

/// The trapezoid domains swept between the loop at height s and the cycle
/// z_s^α. Empty at α = 1/2; degenerate components are omitted, as on marked
/// heights where one domain is reduced to a point.
pub fn trapezoid_domains(s: f64, alpha: f64) -> Result<Vec<TrapezoidDomain>, SweepError> {
    check_range("alpha", alpha, 0.0, 1.0)?;
    let fr = frame(s)?;
    if (alpha - 0.5).abs() < SPECIAL_TOL {
        return Ok(Vec::new());
    }
    let sp = fr.s_prime;
    let w = TWO_SQRT3 * sp / 2.0; // √3·s'
    let y = sp;
    let low_outer = (
        PlanePoint::new(-w, y).add(fr.shift),
        PlanePoint::new(w, y).add(fr.shift),
    );
    let high_outer = (
        PlanePoint::new(w, y).add(fr.shift),
        PlanePoint::new(1.0 - w, y).add(fr.shift),
    );

    let (scale, low_apex, high_apex, low_downward, high_downward) = if alpha < 0.5 {
        // contraction toward the two loop centers
        (
            2.0 * alpha,
            fr.shift,
            PlanePoint::new(0.5, MARKED_STEP).add(fr.shift),
            true,
            false,
        )
    } else {
        // contraction of the development hexagon toward the remaining
        // fixed point; the upper arc develops about the lift (1/2, -1/(2√3))
        (
            2.0 - 2.0 * alpha,
            PlanePoint::new(0.0, 2.0 * MARKED_STEP).add(fr.shift),
            PlanePoint::new(0.5, -MARKED_STEP).add(fr.shift),
            false,
            true,
        )
    };

    let mut domains = Vec::with_capacity(2);
    if sp > 0.0 {
        domains.push(TrapezoidDomain {
            component: 1,
            outer: low_outer,
            inner: (
                low_outer.0.homothety(low_apex, scale),
                low_outer.1.homothety(low_apex, scale),
            ),
            apex: low_apex,
            scale,
            downward: low_downward,
        });
    }
    domains.push(TrapezoidDomain {
        component: 2,
        outer: high_outer,
        inner: (
            high_outer.0.homothety(high_apex, scale),
            high_outer.1.homothety(high_apex, scale),
        ),
        apex: high_apex,
        scale,
        downward: high_downward,
    });
    Ok(domains)
}

/// Quadrature resolution for the Stokes check: `arc_nodes` per boundary
/// edge, `domain_nodes` per dimension of the two-dimensional rule. Both are
/// composite rules of 2-point panels, so refinement converges at a fixed
/// fourth order instead of collapsing to rounding noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureParams {
    pub arc_nodes: usize,
    pub domain_nodes: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            arc_nodes: 64,
            domain_nodes: 64,
        }
    }
}

impl QuadratureParams {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            arc_nodes: nodes,
            domain_nodes: nodes,
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            arc_nodes: self.arc_nodes * 2,
            domain_nodes: self.domain_nodes * 2,
        }
    }

    fn arc_rule(&self) -> CompositeRule {
        CompositeRule::order4(self.arc_nodes)
    }

    fn domain_rule(&self) -> CompositeRule {
        CompositeRule::order4(self.domain_nodes)
    }
}

/// Both sides of the Stokes identity on one trapezoid domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StokesResidual {
    pub component: usize,
    /// l_g(outer arc) − l_g(inner arc).
    pub length_drop: f64,
    /// ∫ e^u dx over the legs plus the signed area term.
    pub boundary_side: f64,
    pub residual: f64,
}

/// Evaluates the Stokes identity
/// l_g(γ_i) − l_g(z_i) = ∫_legs e^u dx ± ∬ ∂_y(e^u) dA
/// on every trapezoid domain of (s, α) and returns the defects. Empty at
/// α = 1/2.
pub fn stokes_residual(
    u: &ConformalFactorField,
    s: f64,
    alpha: f64,
    params: &QuadratureParams,
) -> Result<Vec<StokesResidual>, SweepError> {
    let domains = trapezoid_domains(s, alpha)?;
    let arc_rule = params.arc_rule();
    let domain_rule = params.domain_rule();
    Ok(domains
        .iter()
        .map(|d| stokes_on_domain(u, d, &arc_rule, &domain_rule))
        .collect())
}

fn stokes_on_domain(
    u: &ConformalFactorField,
    domain: &TrapezoidDomain,
    arc_rule: &CompositeRule,
    domain_rule: &CompositeRule,
) -> StokesResidual {
    let factor = |q: PlanePoint| u.eval(q).value.exp();
    let outer_len = arc_rule.integrate_segment(domain.outer.0, domain.outer.1, factor);
    let inner_len = arc_rule.integrate_segment(domain.inner.0, domain.inner.1, factor);
    let [leg1, leg2] = domain.legs();
    let legs_dx = arc_rule.integrate_segment_dx(leg1.0, leg1.1, factor)
        + arc_rule.integrate_segment_dx(leg2.0, leg2.1, factor);
    let slope = |q: PlanePoint| {
        let fv = u.eval(q);
        fv.value.exp() * fv.gradient.y
    };
    let area_term = integrate_trapezoid(domain, domain_rule, slope);
    let sign = if domain.downward { 1.0 } else { -1.0 };
    let length_drop = outer_len - inner_len;
    let boundary_side = legs_dx + sign * area_term;
    StokesResidual {
        component: domain.component,
        length_drop,
        boundary_side,
        residual: (length_drop - boundary_side).abs(),
    }
}

/// ∬ f dA over the trapezoid via the ruled map
/// P(ξ,η) = (1−η)·outer(ξ) + η·inner(ξ).
fn integrate_trapezoid<F: Fn(PlanePoint) -> f64>(
    domain: &TrapezoidDomain,
    rule: &CompositeRule,
    f: F,
) -> f64 {
    let o0 = domain.outer.0;
    let o1 = domain.outer.1;
    let i0 = domain.inner.0;
    let i1 = domain.inner.1;
    let d_outer = o1.sub(o0);
    let d_inner = i1.sub(i0);
    rule.integrate_unit(|xi| {
        let outer_pt = o0.lerp(o1, xi);
        let inner_pt = i0.lerp(i1, xi);
        let d_eta = inner_pt.sub(outer_pt);
        rule.integrate_unit(|eta| {
            let p = outer_pt.lerp(inner_pt, eta);
            let d_xi = d_outer.lerp(d_inner, eta);
            f(p) * d_xi.cross(d_eta).abs()
        })
    })
}

/// Lower bound check: the metric length drop of each component dominates the
/// flat drop times 1 − ‖e^u−1‖_∞ − (1/(2√3))·sup|∂_y e^u|. A nonpositive
/// factor is reported as outside the proof regime instead of as a failure.
pub fn stokes_lower_bound_check(
    u: &ConformalFactorField,
    s: f64,
    alpha: f64,
    n: usize,
) -> Result<InequalityReport, SweepError> {
    let dev = sup_deviation(u, n)
        .map_err(|_| SweepError::ParameterOutOfRange {
            name: "n",
            value: n as f64,
        })?
        .value;
    let slope = sup_slope(u, n)
        .map_err(|_| SweepError::ParameterOutOfRange {
            name: "n",
            value: n as f64,
        })?
        .value;
    let factor = 1.0 - dev - 2.0 * QUARTER_TAN_PI_6 * slope;

    let domains = trapezoid_domains(s, alpha)?;
    let rule = CompositeRule::single_panel(64);
    let tol = 1e-9;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut report = InequalityReport::new("stokes-lower-bound", 0.0, 0.0, Verdict::Holds, tol);
    for d in &domains {
        let factor_fn = |q: PlanePoint| u.eval(q).value.exp();
        let metric_drop = rule.integrate_segment(d.outer.0, d.outer.1, factor_fn)
            - rule.integrate_segment(d.inner.0, d.inner.1, factor_fn);
        let flat_drop = d.outer_length() - d.inner_length();
        let claimed = factor * flat_drop;
        worst_gap = worst_gap.max(claimed - metric_drop);
        let key = format!("component{}_", d.component);
        report.push_detail(&format!("{key}flat_drop"), flat_drop);
        report.push_detail(&format!("{key}metric_drop"), metric_drop);
        report.push_detail(&format!("{key}claimed"), claimed);
    }
    if domains.is_empty() {
        worst_gap = 0.0;
    }
    report.lhs = worst_gap;
    report.rhs = 0.0;
    report.margin = -worst_gap;
    report.verdict = if factor <= 0.0 {
        Verdict::OutsideRegime
    } else {
        Verdict::from_holds(worst_gap <= tol)
    };
    report.push_detail("factor", factor);
    report.push_detail("sup_deviation", dev);
    report.push_detail("sup_slope", slope);
    report.push_input("s", format!("{s}"));
    report.push_input("alpha", format!("{alpha}"));
    report.push_input("sup_grid", format!("{n}"));
    Ok(report)
}

/// One row of the exported sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTableRow {
    pub s: f64,
    pub alpha: f64,
    pub case: &'static str,
    pub k: usize,
    pub a_low: f64,
    pub a_high: f64,
    pub length_gc: f64,
    pub length_g: f64,
}

/// Tabulates the sweep over a parameter grid. Rows are ordered by (s, α)
/// regardless of how the computation is scheduled.
pub fn sweep_table(
    u: &ConformalFactorField,
    s_values: &[f64],
    alpha_values: &[f64],
    arc_nodes: usize,
) -> Result<Vec<SweepTableRow>, SweepError> {
    let rule = CompositeRule::single_panel(arc_nodes);
    let rows: Result<Vec<Vec<SweepTableRow>>, SweepError> = s_values
        .par_iter()
        .map(|&s| {
            alpha_values
                .iter()
                .map(|&alpha| {
                    let cycle = sweep_cycle(s, alpha)?;
                    Ok(SweepTableRow {
                        s,
                        alpha,
                        case: cycle.case.label(),
                        k: cycle.interval_index,
                        a_low: cycle.a_low,
                        a_high: cycle.a_high,
                        length_gc: cycle.cycle.flat_length(),
                        length_g: cycle.cycle.length_under(u, &rule),
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// The default height grid: `count` values offset from the marked heights by
/// half a step.
pub fn default_s_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (i as f64 + 0.5) * HEX_HEIGHT / count as f64)
        .collect()
}

/// The default contraction grid: `count` evenly spaced values in [0, 1];
/// odd counts contain 1/2 exactly.
pub fn default_alpha_grid(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5];
    }
    (0..count)
        .map(|i| i as f64 / (count as f64 - 1.0))
        .collect()
}

/// Directed sample distance from the points of `a` to the segments of `b`,
/// both read as subsets of the quotient sphere (minimum over the deck orbit
/// and nearby lattice translates).
fn directed_cycle_distance(a: &OneCycleLift, b: &OneCycleLift, samples_per_edge: usize) -> f64 {
    let samples = samples_per_edge.max(2);
    let mut worst: f64 = 0.0;
    for component in &a.components {
        let points: Vec<PlanePoint> = if component.is_point() {
            component.vertices.clone()
        } else {
            component
                .edges()
                .flat_map(|(p, q)| {
                    (0..samples).map(move |i| p.lerp(q, i as f64 / (samples - 1) as f64))
                })
                .collect()
        };
        for p in points {
            worst = worst.max(sphere_point_to_cycle(p, b));
        }
    }
    worst
}

fn sphere_point_to_cycle(p: PlanePoint, cycle: &OneCycleLift) -> f64 {
    let hex = hex_basis();
    let mut best = f64::INFINITY;
    let mut rotated = reduce_mod_hex(p).map(|t| t.point()).unwrap_or(p);
    for _ in 0..3 {
        for component in &cycle.components {
            if component.is_point() {
                best = best.min(torus_distance(rotated, component.vertices[0]));
                continue;
            }
            for (a, b) in component.edges() {
                for m in -2..=2_i64 {
                    for n in -2..=2_i64 {
                        let q = rotated.add(hex.vector(m, n));
                        best = best.min(point_segment_distance(q, a, b));
                    }
                }
            }
        }
        rotated = DECK_ROTATION.apply_plane(rotated);
    }
    best
}

fn point_segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let ab = b.sub(a);
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a.add(ab.scale(t)))
}

/// Symmetric Hausdorff-type distance between two cycles on the sphere.
pub fn cycle_hausdorff(a: &OneCycleLift, b: &OneCycleLift, samples_per_edge: usize) -> f64 {
    directed_cycle_distance(a, b, samples_per_edge)
        .max(directed_cycle_distance(b, a, samples_per_edge))
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), SweepError> {
    if !value.is_finite() || value < lo - 1e-12 || value > hi + 1e-12 {
        return Err(SweepError::ParameterOutOfRange { name, value });
    }
    Ok(())
}
