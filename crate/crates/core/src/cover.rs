//! The order-3 deck rotation of the hexagonal torus and quadrature over the
//! quotient sphere.
//!
//! Rotation by 2π/3 about the origin preserves the hexagonal lattice, so it
//! descends to the torus, where it has exactly three fixed points — the
//! images of the three cone points of the quotient sphere. Deck-invariant
//! fields on the torus are exactly the pullbacks of fields on the sphere,
//! and every sphere integral is a third of the corresponding torus integral.

use rayon::prelude::*;
use thiserror::Error;

use crate::field::ConformalFactorField;
use crate::lattice::{hex_basis, reduce_mod_hex, PlanePoint, TorusPoint, MARKED_STEP};
use crate::quad::KahanSum;

#[derive(Debug, Error, PartialEq)]
pub enum CoverError {
    #[error("grid resolution {n} is below the minimum {min}")]
    ResolutionTooSmall { n: usize, min: usize },
}

/// Rotation by 2π/3 about the origin; generates the deck group of the
/// degree-3 quotient.
#[derive(Debug, Clone, Copy)]
pub struct DeckRotation;

/// cos(2π/3) and sin(2π/3), written out so the matrix is exact.
const COS: f64 = -0.5;
const SIN: f64 = 0.866_025_403_784_438_6;

pub const DECK_ROTATION: DeckRotation = DeckRotation;

impl DeckRotation {
    /// Applies the rotation on the plane.
    pub fn apply_plane(&self, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(COS * p.x - SIN * p.y, SIN * p.x + COS * p.y)
    }

    /// Applies the inverse rotation (the transpose) on the plane.
    pub fn apply_transposed(&self, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(COS * p.x + SIN * p.y, -SIN * p.x + COS * p.y)
    }

    /// Rotation about an arbitrary center.
    pub fn apply_about(&self, center: PlanePoint, p: PlanePoint) -> PlanePoint {
        self.apply_plane(p.sub(center)).add(center)
    }

    /// Induced map on the torus.
    pub fn apply(&self, p: TorusPoint) -> TorusPoint {
        reduce_mod_hex(self.apply_plane(p.point())).expect("rotation of a finite point is finite")
    }
}

/// The three fixed points of the deck rotation on the torus, ordered by
/// height: (0,0), (1/2, 1/(2√3)), (0, 1/√3).
#[derive(Debug, Clone, Copy)]
pub struct FixedPointSet {
    pub points: [TorusPoint; 3],
}

impl FixedPointSet {
    pub fn heights(&self) -> [f64; 3] {
        [
            self.points[0].y(),
            self.points[1].y(),
            self.points[2].y(),
        ]
    }
}

/// Canonical plane lifts of the three fixed points.
pub fn fixed_point_lifts() -> [PlanePoint; 3] {
    [
        PlanePoint::ORIGIN,
        PlanePoint::new(0.5, MARKED_STEP),
        PlanePoint::new(0.0, 2.0 * MARKED_STEP),
    ]
}

/// Translation by (1/2, 1/(2√3)); cycles the three fixed points and shifts
/// the marked heights by one step.
pub const MARKED_SHIFT: PlanePoint = PlanePoint {
    x: 0.5,
    y: MARKED_STEP,
};

/// The fixed points of the deck rotation, as canonical torus representatives.
pub fn fixed_points() -> FixedPointSet {
    let points = fixed_point_lifts()
        .map(|p| reduce_mod_hex(p).expect("canonical lifts are finite"));
    FixedPointSet { points }
}

/// Mean of `f` over the torus, sampled on the lattice-adapted n×n grid
/// q_{ij} = (i/n)·b1 + (j/n)·b2. Spectrally accurate for smooth periodic
/// integrands; rows are evaluated in parallel but combined in index order,
/// so the result does not depend on the thread count.
pub fn torus_mean<F: Fn(PlanePoint) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let hex = hex_basis();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let base = hex.b1.scale(i as f64 / n as f64);
            let mut acc = KahanSum::new();
            for j in 0..n {
                acc.add(f(base.add(hex.b2.scale(j as f64 / n as f64))));
            }
            acc.value()
        })
        .collect();
    let mut total = KahanSum::new();
    for row in rows {
        total.add(row);
    }
    total.value() / (n as f64 * n as f64)
}

/// Grid maximum of `f` over the fundamental domain (same lattice grid).
pub fn torus_grid_max<F: Fn(PlanePoint) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let hex = hex_basis();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let base = hex.b1.scale(i as f64 / n as f64);
            let mut sup = f64::NEG_INFINITY;
            for j in 0..n {
                sup = sup.max(f(base.add(hex.b2.scale(j as f64 / n as f64))));
            }
            sup
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Area of the quotient sphere under the metric e^{2u}·g: one third of
/// ∬ e^{2u} over the torus.
pub fn sphere_area(u: &ConformalFactorField, n: usize) -> Result<f64, CoverError> {
    if n < 8 {
        return Err(CoverError::ResolutionTooSmall { n, min: 8 });
    }
    let cell = hex_basis().area();
    Ok(cell * torus_mean(n, |q| (2.0 * u.eval(q).value).exp()) / 3.0)
}

/// Grid estimate of a supremum, together with the resolution that produced
/// it. Grid maxima converge to the true supremum from below as the grid is
/// refined.
#[derive(Debug, Clone, Copy)]
pub struct SupEstimate {
    pub value: f64,
    pub grid: usize,
}

const SUP_MIN_GRID: usize = 32;

/// Estimate of ‖e^u − 1‖_∞ on an n×n grid.
pub fn sup_deviation(u: &ConformalFactorField, n: usize) -> Result<SupEstimate, CoverError> {
    if n < SUP_MIN_GRID {
        return Err(CoverError::ResolutionTooSmall {
            n,
            min: SUP_MIN_GRID,
        });
    }
    let value = torus_grid_max(n, |q| (u.eval(q).value.exp() - 1.0).abs());
    Ok(SupEstimate { value, grid: n })
}

/// Estimate of sup |∂_y e^u| = sup |e^u · ∂u/∂y| on an n×n grid.
pub fn sup_slope(u: &ConformalFactorField, n: usize) -> Result<SupEstimate, CoverError> {
    if n < SUP_MIN_GRID {
        return Err(CoverError::ResolutionTooSmall {
            n,
            min: SUP_MIN_GRID,
        });
    }
    let value = torus_grid_max(n, |q| {
        let fv = u.eval(q);
        (fv.value.exp() * fv.gradient.y).abs()
    });
    Ok(SupEstimate { value, grid: n })
}
