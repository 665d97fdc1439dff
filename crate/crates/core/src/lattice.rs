//! Planar lattice arithmetic for the hexagonal torus.
//!
//! The torus underlying every construction in this crate is ℝ² modulo the
//! hexagonal lattice spanned by (1, 0) and (1/2, √3/2). This module provides
//! the canonical fundamental-domain reduction, Lagrange–Gauss basis
//! reduction, the flat-torus systole (shortest nonzero lattice vector) and a
//! checker for Loewner's torus inequality area ≥ (√3/2)·sys².

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{InequalityReport, Verdict};

/// Height of the fundamental rectangle: √3/2.
pub const HEX_HEIGHT: f64 = 0.866_025_403_784_438_6;

/// Vertical spacing between the marked heights on the torus: 1/(2√3).
pub const MARKED_STEP: f64 = 0.288_675_134_594_812_9;

/// Loewner constant √3/2.
pub const LOEWNER_CONSTANT: f64 = HEX_HEIGHT;

const DET_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("coordinates must be finite, got ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("degenerate lattice basis: |det| = {det:e} below {floor:e}")]
    DegenerateLattice { det: f64, floor: f64 },
}

/// A point of the Euclidean plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(&self, other: PlanePoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, twice the signed triangle area.
    pub fn cross(&self, other: PlanePoint) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn add(&self, other: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(&self, other: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(&self, factor: f64) -> PlanePoint {
        PlanePoint::new(self.x * factor, self.y * factor)
    }

    pub fn distance(&self, other: PlanePoint) -> f64 {
        self.sub(other).norm()
    }

    pub fn lerp(&self, other: PlanePoint, t: f64) -> PlanePoint {
        PlanePoint::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }

    /// Image under the homothety of the given `factor` about `center`.
    pub fn homothety(&self, center: PlanePoint, factor: f64) -> PlanePoint {
        center.add(self.sub(center).scale(factor))
    }
}

/// An ordered basis of a two-dimensional lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeBasis {
    pub b1: PlanePoint,
    pub b2: PlanePoint,
}

impl LatticeBasis {
    pub fn new(b1: PlanePoint, b2: PlanePoint) -> Result<Self, LatticeError> {
        for p in [b1, b2] {
            if !p.is_finite() {
                return Err(LatticeError::NonFinite { x: p.x, y: p.y });
            }
        }
        let det = b1.cross(b2);
        if det.abs() <= DET_FLOOR {
            return Err(LatticeError::DegenerateLattice {
                det,
                floor: DET_FLOOR,
            });
        }
        Ok(Self { b1, b2 })
    }

    pub fn det(&self) -> f64 {
        self.b1.cross(self.b2)
    }

    /// Covolume |det|, the area of the quotient torus.
    pub fn area(&self) -> f64 {
        self.det().abs()
    }

    pub fn vector(&self, m: i64, n: i64) -> PlanePoint {
        self.b1.scale(m as f64).add(self.b2.scale(n as f64))
    }
}

/// The hexagonal lattice spanned by (1, 0) and (1/2, √3/2).
pub fn hex_basis() -> LatticeBasis {
    LatticeBasis {
        b1: PlanePoint::new(1.0, 0.0),
        b2: PlanePoint::new(0.5, HEX_HEIGHT),
    }
}

/// A point reduced to the fundamental rectangle [0,1) × [0,√3/2) of the
/// hexagonal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint(PlanePoint);

impl TorusPoint {
    pub fn point(&self) -> PlanePoint {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }
}

impl From<TorusPoint> for PlanePoint {
    fn from(p: TorusPoint) -> Self {
        p.0
    }
}

/// Reduces a plane point to its canonical representative in
/// [0,1) × [0,√3/2): first the y-coordinate by (1/2,√3/2) steps, then the
/// x-coordinate by (1,0) steps.
pub fn reduce_mod_hex(q: PlanePoint) -> Result<TorusPoint, LatticeError> {
    if !q.is_finite() {
        return Err(LatticeError::NonFinite { x: q.x, y: q.y });
    }
    let n = (q.y / HEX_HEIGHT).floor();
    let mut x = q.x - 0.5 * n;
    let mut y = q.y - HEX_HEIGHT * n;
    // guard against rounding placing y on the wrong side of the boundary
    if y >= HEX_HEIGHT {
        y -= HEX_HEIGHT;
        x -= 0.5;
    } else if y < 0.0 {
        y += HEX_HEIGHT;
        x += 0.5;
    }
    x -= x.floor();
    if x >= 1.0 {
        x -= 1.0;
    }
    Ok(TorusPoint(PlanePoint::new(x, y)))
}

/// Distance on the hexagonal torus, by minimizing over nearby lattice
/// translates of the difference.
pub fn torus_distance(a: PlanePoint, b: PlanePoint) -> f64 {
    let d = reduce_mod_hex(a.sub(b)).map(|t| t.point()).unwrap_or(a);
    let hex = hex_basis();
    let mut best = f64::INFINITY;
    for m in -1..=1_i64 {
        for n in -1..=1_i64 {
            best = best.min(d.sub(hex.vector(m, n)).norm());
        }
    }
    best
}

/// Lagrange–Gauss reduction. Returns a basis of the same lattice with
/// |b1| ≤ |b2| and |⟨b1,b2⟩| ≤ |b1|²/2; |b1| is then the length of a
/// shortest nonzero lattice vector.
pub fn lagrange_reduce(basis: &LatticeBasis) -> Result<LatticeBasis, LatticeError> {
    let checked = LatticeBasis::new(basis.b1, basis.b2)?;
    let mut u = checked.b1;
    let mut v = checked.b2;
    if u.norm_sq() > v.norm_sq() {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        let mu = (u.dot(v) / u.norm_sq()).round();
        v = v.sub(u.scale(mu));
        if v.norm_sq() >= u.norm_sq() {
            break;
        }
        std::mem::swap(&mut u, &mut v);
    }
    LatticeBasis::new(u, v)
}

/// Homotopy systole of the flat torus ℝ²/Λ: the shortest nonzero vector of Λ.
pub fn flat_torus_systole(basis: &LatticeBasis) -> Result<f64, LatticeError> {
    Ok(lagrange_reduce(basis)?.b1.norm())
}

/// Checks Loewner's inequality area ≥ (√3/2)·sys² for the flat torus of the
/// given lattice, reporting the ratio and whether the hexagonal equality case
/// is attained.
pub fn loewner_check(basis: &LatticeBasis, tol: f64) -> Result<InequalityReport, LatticeError> {
    let area = basis.area();
    let sys = flat_torus_systole(basis)?;
    let ratio = area / (sys * sys);
    let equality = (ratio - LOEWNER_CONSTANT).abs() < tol;
    let mut report = InequalityReport::new(
        "loewner",
        LOEWNER_CONSTANT,
        ratio,
        Verdict::from_holds(LOEWNER_CONSTANT <= ratio + tol),
        tol,
    );
    report.push_input("b1", format!("({}, {})", basis.b1.x, basis.b1.y));
    report.push_input("b2", format!("({}, {})", basis.b2.x, basis.b2.y));
    report.push_detail("area", area);
    report.push_detail("sys", sys);
    report.push_detail("ratio", ratio);
    report.push_detail("equality", if equality { 1.0 } else { 0.0 });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn brute_force_shortest(basis: &LatticeBasis, range: i64) -> f64 {
        let mut best = f64::INFINITY;
        for m in -range..=range {
            for n in -range..=range {
                if m == 0 && n == 0 {
                    continue;
                }
                best = best.min(basis.vector(m, n).norm());
            }
        }
        best
    }

    #[test]
    fn reduce_identity_and_lattice_vectors() {
        let p = reduce_mod_hex(PlanePoint::ORIGIN).unwrap();
        assert_eq!(p.point(), PlanePoint::ORIGIN);
        // (1.5, √3/2) = (1,0) + (1/2, √3/2)
        let q = reduce_mod_hex(PlanePoint::new(1.5, HEX_HEIGHT)).unwrap();
        assert_abs_diff_eq!(q.x(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reduce_negative_point_matches_brute_force() {
        // oracle: search coefficients in [-3,3]^2 for the in-range representative
        let q = PlanePoint::new(-0.3, 1.0);
        let hex = hex_basis();
        let mut expected = None;
        for m in -3..=3_i64 {
            for n in -3..=3_i64 {
                let cand = q.sub(hex.vector(m, n));
                if (0.0..1.0).contains(&cand.x) && (0.0..HEX_HEIGHT).contains(&cand.y) {
                    expected = Some(cand);
                }
            }
        }
        let expected = expected.expect("brute force finds the representative");
        let got = reduce_mod_hex(q).unwrap();
        assert_abs_diff_eq!(got.x(), expected.x, epsilon = 1e-12);
        assert_abs_diff_eq!(got.y(), expected.y, epsilon = 1e-12);
        // frozen values: x' = 0.2, y' = 1 - √3/2
        assert_abs_diff_eq!(got.x(), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(got.y(), 0.133_974_596_215_561_4, epsilon = 1e-12);
    }

    #[test]
    fn reduce_is_idempotent() {
        for &(x, y) in &[(-0.3, 1.0), (2.7, -4.1), (0.999999, 0.8660254), (5.5, 5.5)] {
            let once = reduce_mod_hex(PlanePoint::new(x, y)).unwrap();
            let twice = reduce_mod_hex(once.point()).unwrap();
            assert_eq!(once.point(), twice.point());
        }
    }

    #[test]
    fn reduce_rejects_non_finite() {
        assert!(matches!(
            reduce_mod_hex(PlanePoint::new(f64::NAN, 0.0)),
            Err(LatticeError::NonFinite { .. })
        ));
        assert!(matches!(
            reduce_mod_hex(PlanePoint::new(0.0, f64::INFINITY)),
            Err(LatticeError::NonFinite { .. })
        ));
    }

    #[test]
    fn lagrange_reduce_fixes_hexagonal_basis() {
        let reduced = lagrange_reduce(&hex_basis()).unwrap();
        assert_relative_eq!(reduced.b1.norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(reduced.b2.norm(), 1.0, epsilon = 1e-15);
        assert!(reduced.b1.dot(reduced.b2).abs() <= 0.5 + 1e-15);
    }

    #[test]
    fn lagrange_reduce_shears_skew_basis() {
        let basis = LatticeBasis::new(PlanePoint::new(1.0, 0.0), PlanePoint::new(10.0, 1.0))
            .unwrap();
        let reduced = lagrange_reduce(&basis).unwrap();
        assert_relative_eq!(reduced.b1.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            reduced.b1.norm(),
            brute_force_shortest(&basis, 12),
            epsilon = 1e-12
        );
        // same lattice: determinant preserved up to sign
        assert_relative_eq!(reduced.det().abs(), basis.det().abs(), epsilon = 1e-12);
    }

    #[test]
    fn lagrange_reduce_keeps_orthogonal_basis() {
        let basis =
            LatticeBasis::new(PlanePoint::new(2.0, 0.0), PlanePoint::new(0.0, 3.0)).unwrap();
        let reduced = lagrange_reduce(&basis).unwrap();
        assert_relative_eq!(reduced.b1.norm(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(reduced.b2.norm(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_basis_is_rejected() {
        let err = LatticeBasis::new(PlanePoint::new(1.0, 2.0), PlanePoint::new(2.0, 4.0));
        assert!(matches!(err, Err(LatticeError::DegenerateLattice { .. })));
    }

    #[test]
    fn systole_of_hexagonal_torus_is_one() {
        assert_relative_eq!(flat_torus_systole(&hex_basis()).unwrap(), 1.0);
    }

    #[test]
    fn systole_orthogonal_and_skew() {
        let basis =
            LatticeBasis::new(PlanePoint::new(2.0, 0.0), PlanePoint::new(0.0, 3.0)).unwrap();
        assert_relative_eq!(flat_torus_systole(&basis).unwrap(), 2.0);

        let skew =
            LatticeBasis::new(PlanePoint::new(1.0, 0.0), PlanePoint::new(0.5, 0.9)).unwrap();
        let expected = brute_force_shortest(&skew, 12);
        assert_relative_eq!(flat_torus_systole(&skew).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn loewner_equality_on_hexagonal_lattice() {
        let report = loewner_check(&hex_basis(), 1e-12).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert_relative_eq!(report.details["area"], HEX_HEIGHT, epsilon = 1e-15);
        assert_relative_eq!(report.details["sys"], 1.0, epsilon = 1e-15);
        assert_relative_eq!(report.details["ratio"], LOEWNER_CONSTANT, epsilon = 1e-15);
        assert_eq!(report.details["equality"], 1.0);
    }

    #[test]
    fn loewner_square_torus_strict() {
        let square =
            LatticeBasis::new(PlanePoint::new(1.0, 0.0), PlanePoint::new(0.0, 1.0)).unwrap();
        let report = loewner_check(&square, 1e-12).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert_relative_eq!(report.details["ratio"], 1.0, epsilon = 1e-15);
        assert_eq!(report.details["equality"], 0.0);
    }

    #[test]
    fn torus_distance_identifies_lattice_translates() {
        let a = PlanePoint::new(0.25, 0.25);
        let b = a.add(hex_basis().vector(3, -2));
        assert_abs_diff_eq!(torus_distance(a, b), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            torus_distance(PlanePoint::new(0.95, 0.1), PlanePoint::new(0.05, 0.1)),
            0.1,
            epsilon = 1e-12
        );
    }
}
