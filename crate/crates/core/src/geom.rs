//! Pair geometry: the separation `r`, direction `e`, midpoint `m` and the
//! split of any vector into its `e` component and the orthogonal remainder.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// A point (or increment) in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut p = Point::zeros(dim);
        p.0[i] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Exact coordinate-wise equality. Used for meeting detection.
    pub fn bitwise_eq(&self, other: &Point) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

pub(crate) fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance `‖b − a‖`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum()
}

/// Cached decomposition of a state pair `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGeometry {
    /// `‖y − x‖`
    pub r: f64,
    /// Unit vector from `x` towards `y`.
    pub e: Point,
    /// Midpoint `(x + y) / 2`.
    pub m: Point,
    /// `e · m`
    pub m1: f64,
    /// `m − (e · m) e`, shared by `x`, `y` and `m`.
    pub m_perp: Point,
}

impl PairGeometry {
    pub fn dim(&self) -> usize {
        self.e.dim()
    }

    /// Assemble `z1 e + perp`.
    pub fn compose(&self, z1: f64, perp: &[f64]) -> Point {
        self.e
            .iter()
            .zip(perp)
            .map(|(ei, pi)| z1 * ei + pi)
            .collect::<Vec<_>>()
            .into()
    }
}

/// Decompose `(x, y)`. Refuses `x == y`; callers handle that case with the
/// sticky rule.
pub fn pair_geometry(x: &[f64], y: &[f64]) -> Result<PairGeometry> {
    check_dims(x, y)?;
    if x.iter().zip(y).all(|(a, b)| a == b) {
        return Err(Error::DegeneratePair);
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    let r = norm(&diff);
    let e: Point = diff.iter().map(|c| c / r).collect::<Vec<_>>().into();
    let m: Point = x
        .iter()
        .zip(y)
        .map(|(a, b)| 0.5 * (a + b))
        .collect::<Vec<_>>()
        .into();
    let (m1, m_perp) = project(&m, &e)?;
    Ok(PairGeometry {
        r,
        e,
        m,
        m1,
        m_perp,
    })
}

/// Split `z` into `(e · z, z − (e · z) e)`.
pub fn project(z: &[f64], e: &[f64]) -> Result<(f64, Point)> {
    check_dims(e, z)?;
    let z1 = dot(e, z);
    let perp = z
        .iter()
        .zip(e)
        .map(|(zi, ei)| zi - z1 * ei)
        .collect::<Vec<_>>();
    Ok((z1, perp.into()))
}

/// Orthogonal component only.
pub fn orthogonal_part(z: &[f64], e: &[f64]) -> Result<Point> {
    project(z, e).map(|(_, p)| p)
}

/// Householder reflection `(I − 2 e eᵀ) ξ`.
pub fn reflect(xi: &[f64], e: &[f64]) -> Result<Point> {
    check_dims(e, xi)?;
    let c = 2.0 * dot(e, xi);
    Ok(xi
        .iter()
        .zip(e)
        .map(|(x, ei)| x - c * ei)
        .collect::<Vec<_>>()
        .into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn axis_aligned_pairs() {
        let g = pair_geometry(&[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert_eq!(g.r, 2.0);
        assert_eq!(g.e.as_slice(), &[1.0, 0.0]);
        assert_eq!(g.m.as_slice(), &[1.0, 0.0]);
        assert_eq!(g.m1, 1.0);
        assert_eq!(g.m_perp.as_slice(), &[0.0, 0.0]);

        let g = pair_geometry(&[1.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(g.r, 2.0);
        assert_eq!(g.e.as_slice(), &[0.0, 1.0]);
        assert_eq!(g.m.as_slice(), &[1.0, 2.0]);
        assert_eq!(g.m1, 2.0);
        assert_eq!(g.m_perp.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn three_four_five() {
        let g = pair_geometry(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_eq!(g.r, 5.0);
        assert!(close(&g.e, &[0.6, 0.8], 1e-15));
        assert!(close(&g.m, &[1.5, 2.0], 1e-15));
    }

    #[test]
    fn degenerate_and_mismatched() {
        assert_eq!(
            pair_geometry(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::DegeneratePair)
        );
        assert!(matches!(
            pair_geometry(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            project(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            reflect(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let (z1, p) = project(&[3.0, 4.0], &[1.0, 0.0]).unwrap();
        assert_eq!(z1, 3.0);
        assert_eq!(p.as_slice(), &[0.0, 4.0]);

        let (z1, p) = project(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert_eq!(z1, 0.0);
        assert_eq!(p.as_slice(), &[0.0, 0.0]);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (z1, p) = project(&[1.0, 1.0], &[s, s]).unwrap();
        assert!((z1 - 2f64.sqrt()).abs() < 1e-15);
        assert!(close(&p, &[0.0, 0.0], 1e-15));
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(
            reflect(&[1.0, 0.0], &[1.0, 0.0]).unwrap().as_slice(),
            &[-1.0, 0.0]
        );
        assert_eq!(
            reflect(&[0.0, 1.0], &[1.0, 0.0]).unwrap().as_slice(),
            &[0.0, 1.0]
        );
        assert_eq!(
            reflect(&[1.0, 1.0], &[1.0, 0.0]).unwrap().as_slice(),
            &[-1.0, 1.0]
        );
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, d)
    }

    fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d)))
    }

    proptest! {
        #[test]
        fn reflect_is_isometric_involution((z, dir) in pair_strategy()) {
            let n = norm(&dir);
            prop_assume!(n > 1e-3);
            let e: Vec<f64> = dir.iter().map(|c| c / n).collect();
            let once = reflect(&z, &e).unwrap();
            let twice = reflect(&once, &e).unwrap();
            prop_assert!(close(&twice, &z, 1e-12));
            prop_assert!((once.norm() - norm(&z)).abs() <= 1e-12);
        }

        #[test]
        fn projection_round_trip((z, dir) in pair_strategy()) {
            let n = norm(&dir);
            prop_assume!(n > 1e-3);
            let e: Vec<f64> = dir.iter().map(|c| c / n).collect();
            let (z1, perp) = project(&z, &e).unwrap();
            prop_assert!(dot(&e, &perp).abs() <= 1e-12);
            let back: Vec<f64> = e.iter().zip(perp.iter()).map(|(ei, p)| z1 * ei + p).collect();
            prop_assert!(close(&back, &z, 1e-12));
        }

        #[test]
        fn pair_geometry_invariants((x, y) in pair_strategy()) {
            prop_assume!(distance(&x, &y) > 1e-6);
            let g = pair_geometry(&x, &y).unwrap();
            prop_assert!((g.e.norm() - 1.0).abs() <= 1e-12);
            prop_assert!(dot(&g.e, &g.m_perp).abs() <= 1e-12);
            let xr: Vec<f64> = g.m.iter().zip(g.e.iter()).map(|(m, e)| m - 0.5 * g.r * e).collect();
            let yr: Vec<f64> = g.m.iter().zip(g.e.iter()).map(|(m, e)| m + 0.5 * g.r * e).collect();
            prop_assert!(close(&xr, &x, 1e-12));
            prop_assert!(close(&yr, &y, 1e-12));

            let h = pair_geometry(&y, &x).unwrap();
            prop_assert_eq!(h.r, g.r);
            prop_assert!(close(&h.m, &g.m, 0.0));
            let neg: Vec<f64> = g.e.iter().map(|c| -c).collect();
            prop_assert!(close(&h.e, &neg, 1e-15));
        }
    }
}
