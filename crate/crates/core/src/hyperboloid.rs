//! Real hyperbolic space `H^n` in the hyperboloid model.
//!
//! Points are future unit timelike vectors of Minkowski space `R^{n,1}`
//! with the form `<x, y> = -x_0 y_0 + x_1 y_1 + ... + x_n y_n`. Isometries
//! are the matrices of `O+(n,1)` and act linearly. Ideal points are null
//! vectors scaled so that `<xi, o> = -1`, i.e. `xi = (1, s)` with `|s| = 1`;
//! with that normalization the Busemann function pointed at the basepoint
//! `o = (1, 0, ..., 0)` is simply `log(-<a, xi>)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating raw coordinates handed in from outside.
const INPUT_TOL: f64 = 1e-8;

/// Minkowski form of signature `(-, +, ..., +)`.
#[inline]
pub fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = -a[0] * b[0];
    for i in 1..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn check_finite(coords: &[f64], what: &str) -> Result<()> {
    if coords.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidPoint(format!("{what} has non-finite coordinates")))
    }
}

/// A point of `H^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HPoint {
    coords: Vec<f64>,
}

impl HPoint {
    /// Validates `coords` as a point of the upper sheet and re-projects it.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension(format!(
                "a point of H^n needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        check_finite(&coords, "point")?;
        if coords[0] <= 0.0 {
            return Err(Error::InvalidPoint("point is not on the upper sheet".into()));
        }
        let q = minkowski(&coords, &coords);
        let scale = 1.0 + coords[0] * coords[0];
        if (q + 1.0).abs() > INPUT_TOL * scale {
            return Err(Error::InvalidPoint(format!(
                "<a,a> = {q} is not -1 (deviation {:e})",
                q + 1.0
            )));
        }
        Ok(Self::normalized(coords))
    }

    /// Rescales a future timelike vector onto the hyperboloid.
    ///
    /// Only for internal use on vectors already known to be timelike.
    pub(crate) fn normalized(mut coords: Vec<f64>) -> Self {
        let q = -minkowski(&coords, &coords);
        debug_assert!(q > 0.0, "vector is not timelike");
        let s = q.sqrt();
        coords.iter_mut().for_each(|c| *c /= s);
        Self { coords }
    }

    /// Re-projects a future timelike vector; errors on anything else.
    pub fn from_timelike(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords, "vector")?;
        if coords.len() < 2 || coords[0] <= 0.0 || minkowski(&coords, &coords) >= 0.0 {
            return Err(Error::InvalidPoint("vector is not future timelike".into()));
        }
        Ok(Self::normalized(coords))
    }

    /// The basepoint `o = (1, 0, ..., 0)` of `H^n`.
    pub fn origin(n: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[0] = 1.0;
        Self { coords }
    }

    /// The point at distance `r` from `o` in the unit direction `dir`.
    pub fn from_polar(dir: &[f64], r: f64) -> Result<Self> {
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidPoint("zero direction".into()));
        }
        let mut coords = Vec::with_capacity(dir.len() + 1);
        coords.push(r.cosh());
        coords.extend(dir.iter().map(|d| r.sinh() * d / norm));
        Ok(Self::normalized(coords))
    }

    /// Lifts a point of the Poincare ball.
    pub fn from_ball(y: &[f64]) -> Result<Self> {
        check_finite(y, "ball point")?;
        let r2: f64 = y.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return Err(Error::InvalidPoint("ball point outside the unit ball".into()));
        }
        let den = 1.0 - r2;
        let mut coords = Vec::with_capacity(y.len() + 1);
        coords.push((1.0 + r2) / den);
        coords.extend(y.iter().map(|v| 2.0 * v / den));
        Ok(Self::normalized(coords))
    }

    /// Poincare ball coordinates, for output and plotting.
    pub fn to_ball(&self) -> Vec<f64> {
        let den = 1.0 + self.coords[0];
        self.coords[1..].iter().map(|v| v / den).collect()
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Exponential map at `self` applied to an ambient tangent vector.
    pub fn exp(&self, v: &[f64]) -> HPoint {
        let len2 = minkowski(v, v).max(0.0);
        let len = len2.sqrt();
        if len < 1e-300 {
            return self.clone();
        }
        let (c, s) = (len.cosh(), len.sinh() / len);
        let coords = self
            .coords
            .iter()
            .zip(v)
            .map(|(x, vi)| c * x + s * vi)
            .collect();
        Self::normalized(coords)
    }

    /// Inverse of [`HPoint::exp`]: the tangent vector at `self` pointing to `b`
    /// with length `d(self, b)`.
    pub fn log(&self, b: &HPoint) -> Vec<f64> {
        let ab = minkowski(&self.coords, &b.coords);
        let mut v: Vec<f64> = b
            .coords
            .iter()
            .zip(&self.coords)
            .map(|(bi, ai)| bi + ab * ai)
            .collect();
        let n = minkowski(&v, &v).max(0.0).sqrt();
        let d = self.dist(b);
        if n > 0.0 {
            v.iter_mut().for_each(|c| *c *= d / n);
        }
        v
    }

    /// Geodesic distance; both points are assumed valid and of equal dimension.
    pub fn dist(&self, b: &HPoint) -> f64 {
        stable_distance(&self.coords, &b.coords)
    }

    /// Orthonormal frame of `T_a H^n`: the columns `1..=n` of the pure boost
    /// taking `o` to `a`. Returned as an `(n+1) x n` matrix.
    pub fn frame(&self) -> DMatrix<f64> {
        let n = self.dim();
        let a = &self.coords;
        let mut f = DMatrix::zeros(n + 1, n);
        for k in 0..n {
            f[(0, k)] = a[k + 1];
            for i in 0..n {
                let delta = if i == k { 1.0 } else { 0.0 };
                f[(i + 1, k)] = delta + a[i + 1] * a[k + 1] / (1.0 + a[0]);
            }
        }
        f
    }

    /// Maps tangent frame coordinates to the ambient tangent vector.
    pub fn tangent_from_frame(&self, c: &[f64]) -> Vec<f64> {
        let f = self.frame();
        let mut v = vec![0.0; self.coords.len()];
        for (k, ck) in c.iter().enumerate() {
            for i in 0..v.len() {
                v[i] += ck * f[(i, k)];
            }
        }
        v
    }
}

impl TryFrom<Vec<f64>> for HPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        HPoint::new(v)
    }
}

impl From<HPoint> for Vec<f64> {
    fn from(p: HPoint) -> Self {
        p.coords
    }
}

/// Frame coordinates `<f_k, xi>` at `x`, without forming the frame.
#[inline]
pub(crate) fn frame_pairings(x: &[f64], xi: &[f64], out: &mut [f64]) {
    let mut ss = 0.0;
    for k in 1..x.len() {
        ss += x[k] * xi[k];
    }
    let t = ss / (1.0 + x[0]) - xi[0];
    for k in 0..out.len() {
        out[k] = xi[k + 1] + x[k + 1] * t;
    }
}

/// `d(a, b)` from the Minkowski norm of `a - b`: `|a - b|^2 = 4 sinh^2(d/2)`.
/// Avoids the cancellation of `arccosh(-<a,b>)` for nearby points.
pub(crate) fn stable_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut q = 0.0;
    let d0 = a[0] - b[0];
    q -= d0 * d0;
    for i in 1..a.len() {
        let d = a[i] - b[i];
        q += d * d;
    }
    2.0 * (q.max(0.0).sqrt() / 2.0).asinh()
}

/// An ideal point of `H^n`, normalized to `<xi, o> = -1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HBoundaryPoint {
    coords: Vec<f64>,
}

impl HBoundaryPoint {
    /// Validates a null vector and rescales it to `xi_0 = 1`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension("ideal point needs at least 2 coordinates".into()));
        }
        check_finite(&coords, "ideal point")?;
        if coords[0] <= 0.0 {
            return Err(Error::InvalidPoint("ideal point must be future pointing".into()));
        }
        let q = minkowski(&coords, &coords);
        if q.abs() > INPUT_TOL * coords[0] * coords[0] {
            return Err(Error::InvalidPoint(format!("<xi,xi> = {q} is not null")));
        }
        Self::from_direction(&coords[1..])
    }

    /// The ideal point `(1, s/|s|)`.
    pub fn from_direction(s: &[f64]) -> Result<Self> {
        check_finite(s, "direction")?;
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidPoint("zero direction".into()));
        }
        let mut coords = Vec::with_capacity(s.len() + 1);
        coords.push(1.0);
        coords.extend(s.iter().map(|v| v / norm));
        Ok(Self { coords })
    }

    /// Renormalizes a future null vector (trusted input).
    pub(crate) fn from_null(v: &[f64]) -> Self {
        let norm = v[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut coords = Vec::with_capacity(v.len());
        coords.push(1.0);
        coords.extend(v[1..].iter().map(|c| c / norm));
        Self { coords }
    }

    /// The direction on the unit sphere `S^{n-1}` (spatial part).
    pub fn direction(&self) -> &[f64] {
        &self.coords[1..]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Chordal distance between directions on the sphere.
    pub fn chordal(&self, other: &HBoundaryPoint) -> f64 {
        self.direction()
            .iter()
            .zip(other.direction())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<Vec<f64>> for HBoundaryPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        HBoundaryPoint::new(v)
    }
}

impl From<HBoundaryPoint> for Vec<f64> {
    fn from(p: HBoundaryPoint) -> Self {
        p.coords
    }
}

/// A tangent vector `vec` at `base`, with `<base, vec> = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HTangent {
    pub base: HPoint,
    pub vec: Vec<f64>,
}

impl HTangent {
    pub fn new(base: HPoint, vec: Vec<f64>) -> Result<Self> {
        if vec.len() != base.coords.len() {
            return Err(Error::Dimension("tangent vector length".into()));
        }
        let ip = minkowski(base.coords(), &vec);
        let scale = 1.0 + vec.iter().map(|v| v.abs()).fold(0.0, f64::max) * base.coords[0];
        if ip.abs() > 1e-12 * scale {
            return Err(Error::InvalidPoint(format!("vector is not tangent: <a,v> = {ip:e}")));
        }
        Ok(Self { base, vec })
    }

    /// Riemannian norm.
    pub fn norm(&self) -> f64 {
        minkowski(&self.vec, &self.vec).max(0.0).sqrt()
    }

    /// Coordinates in the orthonormal frame of [`HPoint::frame`].
    pub fn frame_coords(&self) -> Vec<f64> {
        let f = self.base.frame();
        (0..f.ncols())
            .map(|k| {
                let col: Vec<f64> = f.column(k).iter().copied().collect();
                minkowski(&col, &self.vec)
            })
            .collect()
    }
}

/// An element of `O+(n,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HIsometry {
    matrix: DMatrix<f64>,
}

impl Serialize for HIsometry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HIsometry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        HIsometry::from_row_major(&v).map_err(serde::de::Error::custom)
    }
}

fn minkowski_gram_defect(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let mut s = -m[(0, i)] * m[(0, j)];
            for r in 1..k {
                s += m[(r, i)] * m[(r, j)];
            }
            let target = if i != j {
                0.0
            } else if i == 0 {
                -1.0
            } else {
                1.0
            };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}

impl HIsometry {
    /// Validates `M^T J M = J` (within `1e-10` relative to the entry scale)
    /// and that the upper sheet is preserved.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() < 2 {
            return Err(Error::Dimension("isometry matrix must be square of size >= 2".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidIsometry("non-finite entries".into()));
        }
        let scale = matrix.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let defect = minkowski_gram_defect(&matrix);
        if defect > 1e-10 * scale * scale {
            return Err(Error::InvalidIsometry(format!("M^T J M - J has defect {defect:e}")));
        }
        if matrix[(0, 0)] <= 0.0 {
            return Err(Error::InvalidIsometry("does not preserve the upper sheet".into()));
        }
        Ok(Self { matrix })
    }

    /// Row-major flat entries; the dimension is inferred from the length.
    pub fn from_row_major(v: &[f64]) -> Result<Self> {
        let k = (v.len() as f64).sqrt().round() as usize;
        if k * k != v.len() || k < 2 {
            return Err(Error::Dimension(format!(
                "{} entries do not form a square matrix",
                v.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(k, k, v))
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let k = self.matrix.nrows();
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n + 1, n + 1) }
    }

    /// Hyperbolic translation by `t` along the geodesic through `o` in the
    /// spatial direction `axis` (0-based).
    pub fn boost(n: usize, axis: usize, t: f64) -> Self {
        assert!(axis < n);
        let mut m = DMatrix::identity(n + 1, n + 1);
        let (c, s) = (t.cosh(), t.sinh());
        m[(0, 0)] = c;
        m[(0, axis + 1)] = s;
        m[(axis + 1, 0)] = s;
        m[(axis + 1, axis + 1)] = c;
        Self { matrix: m }
    }

    /// Rotation by `theta` in the spatial plane `(i, j)` (0-based), fixing `o`.
    pub fn rotation(n: usize, i: usize, j: usize, theta: f64) -> Self {
        assert!(i < n && j < n && i != j);
        let mut m = DMatrix::identity(n + 1, n + 1);
        let (c, s) = (theta.cos(), theta.sin());
        m[(i + 1, i + 1)] = c;
        m[(i + 1, j + 1)] = -s;
        m[(j + 1, i + 1)] = s;
        m[(j + 1, j + 1)] = c;
        Self { matrix: m }
    }

    /// The pure boost taking `o` to `a`.
    pub fn translation_to(a: &HPoint) -> Self {
        let n = a.dim();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = a.coords[0];
        let f = a.frame();
        for i in 0..=n {
            m[(i, 0)] = a.coords[i];
            for k in 0..n {
                m[(i, k + 1)] = f[(i, k)];
            }
        }
        Self { matrix: m }
    }

    /// Embeds an orthogonal `n x n` matrix as an isometry fixing `o`.
    pub fn from_orthogonal(q: &DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        let mut m = DMatrix::identity(n + 1, n + 1);
        m.view_mut((1, 1), (n, n)).copy_from(q);
        Self::new(m)
    }

    /// A random isometry: random rotation, boost of length in `[0, max_dist]`,
    /// random rotation.
    pub fn random<R: Rng + ?Sized>(n: usize, max_dist: f64, rng: &mut R) -> Self {
        let rot = |rng: &mut R| {
            let mut g = Self::identity(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    g = g.compose(&Self::rotation(n, i, j, rng.gen_range(0.0..std::f64::consts::TAU)));
                }
            }
            g
        };
        let r1 = rot(rng);
        let r2 = rot(rng);
        let t = rng.gen_range(0.0..=max_dist);
        r1.compose(&Self::boost(n, 0, t)).compose(&r2)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &HIsometry) -> HIsometry {
        Self { matrix: &self.matrix * &other.matrix }
    }

    /// `J M^T J`.
    pub fn inverse(&self) -> HIsometry {
        let mut inv = self.matrix.transpose();
        let k = inv.nrows();
        for i in 1..k {
            inv[(0, i)] = -inv[(0, i)];
            inv[(i, 0)] = -inv[(i, 0)];
        }
        Self { matrix: inv }
    }

    /// Largest entry of `M^T J M - J`.
    pub fn defect(&self) -> f64 {
        minkowski_gram_defect(&self.matrix)
    }

    /// Applies the matrix to a raw vector.
    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let k = self.matrix.nrows();
        let mut out = vec![0.0; k];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, vj) in v.iter().enumerate() {
                s += self.matrix[(i, j)] * vj;
            }
            *o = s;
        }
        out
    }

    /// `g . a`, re-projected onto the hyperboloid.
    pub fn act(&self, a: &HPoint) -> HPoint {
        // Lift from the spatial part: <v, v> itself cancels catastrophically
        // far from o.
        let mut v = self.apply_vec(a.coords());
        v[0] = (1.0 + v[1..].iter().map(|c| c * c).sum::<f64>()).sqrt();
        HPoint { coords: v }
    }

    /// Boundary action, renormalized to `<g xi, o> = -1`.
    pub fn act_boundary(&self, xi: &HBoundaryPoint) -> HBoundaryPoint {
        HBoundaryPoint::from_null(&self.apply_vec(xi.coords()))
    }

    /// Differential of the action on a tangent vector (linear, so the matrix itself).
    pub fn act_tangent(&self, v: &HTangent) -> HTangent {
        HTangent { base: self.act(&v.base), vec: self.apply_vec(&v.vec) }
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &HIsometry) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Distance `arccosh(-<a,b>)`, computed stably.
pub fn distance(a: &HPoint, b: &HPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("H^{} vs H^{}", a.dim(), b.dim())));
    }
    let x = -minkowski(a.coords(), b.coords());
    if x < 1.0 - 1e-9 * a.coords[0] * b.coords[0] {
        return Err(Error::InvalidPoint(format!("arccosh argument {x} < 1")));
    }
    Ok(a.dist(b))
}

/// Busemann function `beta_b(a, xi) = log(<a,xi> / <b,xi>)`.
pub fn busemann(b: &HPoint, a: &HPoint, xi: &HBoundaryPoint) -> f64 {
    (minkowski(a.coords(), xi.coords()) / minkowski(b.coords(), xi.coords())).ln()
}

/// Riemannian gradient of `a -> beta(a, xi)`: `a + xi / <a, xi>`.
/// Independent of the basepoint; always a unit vector.
pub fn busemann_grad(a: &HPoint, xi: &HBoundaryPoint) -> HTangent {
    let p = minkowski(a.coords(), xi.coords());
    let vec = a.coords().iter().zip(xi.coords()).map(|(ai, xii)| ai + xii / p).collect();
    HTangent { base: a.clone(), vec }
}

/// Riemannian Hessian `g(u,v) - dbeta(u) dbeta(v)` (sectional curvature -1).
pub fn busemann_hess(a: &HPoint, xi: &HBoundaryPoint, u: &HTangent, v: &HTangent) -> f64 {
    let p = minkowski(a.coords(), xi.coords());
    let du = minkowski(&u.vec, xi.coords()) / p;
    let dv = minkowski(&v.vec, xi.coords()) / p;
    minkowski(&u.vec, &v.vec) - du * dv
}

/// The upper-left corner injection `O+(n,1) -> O+(m,1)`.
pub fn corner_inject(g: &HIsometry, m: usize) -> Result<HIsometry> {
    let n = g.dim();
    if m < n {
        return Err(Error::Dimension(format!("cannot inject H^{n} isometries into H^{m}")));
    }
    let mut mat = DMatrix::identity(m + 1, m + 1);
    mat.view_mut((0, 0), (n + 1, n + 1)).copy_from(g.matrix());
    Ok(HIsometry { matrix: mat })
}

/// The totally geodesic embedding `H^n -> H^m` by zero padding.
pub fn geodesic_embed(a: &HPoint, m: usize) -> Result<HPoint> {
    let n = a.dim();
    if m < n {
        return Err(Error::Dimension(format!("cannot embed H^{n} into H^{m}")));
    }
    let mut coords = a.coords().to_vec();
    coords.resize(m + 1, 0.0);
    Ok(HPoint { coords })
}

/// Boundary extension of [`geodesic_embed`].
pub fn boundary_embed(xi: &HBoundaryPoint, m: usize) -> Result<HBoundaryPoint> {
    let n = xi.dim();
    if m < n {
        return Err(Error::Dimension(format!("cannot embed the boundary of H^{n} into H^{m}")));
    }
    let mut coords = xi.coords().to_vec();
    coords.resize(m + 1, 0.0);
    Ok(HBoundaryPoint { coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_point<R: Rng>(n: usize, rmax: f64, rng: &mut R) -> HPoint {
        HIsometry::random(n, rmax, rng).act(&HPoint::origin(n))
    }

    fn random_ideal<R: Rng>(n: usize, rng: &mut R) -> HBoundaryPoint {
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        HBoundaryPoint::from_direction(&s).unwrap()
    }

    #[test]
    fn distance_base_cases() {
        let o = HPoint::origin(3);
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let p = HPoint::new(vec![1f64.cosh(), 1f64.sinh(), 0.0, 0.0]).unwrap();
        assert!((distance(&o, &p).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_off_sheet_points() {
        assert!(HPoint::new(vec![1.0, 1.0]).is_err());
        assert!(HPoint::new(vec![-1.0, 0.0]).is_err());
        assert!(HPoint::new(vec![f64::NAN, 0.0]).is_err());
        assert!(HPoint::new(vec![1.0]).is_err());
        assert!(distance(&HPoint::origin(2), &HPoint::origin(3)).is_err());
    }

    #[test]
    fn busemann_along_its_own_ray() {
        let o = HPoint::origin(2);
        let dir = [0.6, 0.8];
        let xi = HBoundaryPoint::from_direction(&dir).unwrap();
        assert_eq!(busemann(&o, &o, &xi), 0.0);
        for t in [0.1, 1.0, 3.5] {
            let c = HPoint::from_polar(&dir, t).unwrap();
            assert!((busemann(&o, &c, &xi) + t).abs() < 1e-12);
        }
    }

    #[test]
    fn busemann_gradient_is_unit_and_hessian_kills_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            for _ in 0..20 {
                let a = random_point(n, 3.0, &mut rng);
                let xi = random_ideal(n, &mut rng);
                let g = busemann_grad(&a, &xi);
                assert!((g.norm() - 1.0).abs() < 1e-10);
                assert!(busemann_hess(&a, &xi, &g, &g).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn isometry_inverse_and_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = HIsometry::random(3, 2.0, &mut rng);
        let h = HIsometry::random(3, 2.0, &mut rng);
        assert!(g.compose(&g.inverse()).max_abs_diff(&HIsometry::identity(3)) < 1e-12);
        assert!(g.compose(&h).defect() < 1e-9);
        assert!(HIsometry::new(g.compose(&h).matrix().clone()).is_ok());
    }

    #[test]
    fn rejects_non_lorentz_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(HIsometry::new(m).is_err());
        let flip = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(HIsometry::new(flip).is_err());
        assert!(HIsometry::from_row_major(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn translation_to_moves_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_point(3, 2.5, &mut rng);
        let g = HIsometry::translation_to(&a);
        assert!(g.defect() < 1e-12);
        assert!(g.act(&HPoint::origin(3)).dist(&a) < 1e-12);
    }

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_point(4, 3.0, &mut rng);
        let f = a.frame();
        for i in 0..4 {
            let ci: Vec<f64> = f.column(i).iter().copied().collect();
            assert!(minkowski(a.coords(), &ci).abs() < 1e-12);
            for j in 0..4 {
                let cj: Vec<f64> = f.column(j).iter().copied().collect();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((minkowski(&ci, &cj) - expect).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_point(3, 2.0, &mut rng);
        let b = random_point(3, 2.0, &mut rng);
        let v = a.log(&b);
        assert!(a.exp(&v).dist(&b) < 1e-10);
    }

    #[test]
    fn embeddings() {
        let o2 = HPoint::origin(2);
        assert_eq!(geodesic_embed(&o2, 4).unwrap(), HPoint::origin(4));
        assert_eq!(corner_inject(&HIsometry::identity(2), 4).unwrap(), HIsometry::identity(4));
        assert!(corner_inject(&HIsometry::identity(3), 2).is_err());
        assert!(geodesic_embed(&HPoint::origin(3), 2).is_err());
    }

    #[test]
    fn ball_round_trip() {
        let p = HPoint::from_ball(&[0.3, -0.2]).unwrap();
        let y = p.to_ball();
        assert!((y[0] - 0.3).abs() < 1e-15 && (y[1] + 0.2).abs() < 1e-15);
        assert!(HPoint::from_ball(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn json_arrays() {
        let g = HIsometry::boost(2, 1, 0.5);
        let s = serde_json::to_string(&g).unwrap();
        let back: HIsometry = serde_json::from_str(&s).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-15);
        let p: HPoint = serde_json::from_str("[1.0, 0.0, 0.0]").unwrap();
        assert_eq!(p.dim(), 2);
        assert!(serde_json::from_str::<HPoint>("[2.0, 0.0]").is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn point() -> impl Strategy<Value = HPoint> {
        (0.0..std::f64::consts::TAU, 0.0..3.0f64).prop_map(|(t, r)| HPoint::from_polar(&[t.cos(), t.sin()], r).unwrap())
    }

    fn ideal() -> impl Strategy<Value = HBoundaryPoint> {
        (0.0..std::f64::consts::TAU).prop_map(|t| HBoundaryPoint::from_direction(&[t.cos(), t.sin()]).unwrap())
    }

    proptest! {
        #[test]
        fn exp_log_round_trip(a in point(), b in point()) {
            prop_assert!(a.exp(&a.log(&b)).dist(&b) < 1e-9);
        }

        #[test]
        fn busemann_is_a_cocycle(a in point(), b in point(), c in point(), xi in ideal()) {
            let lhs = busemann(&b, &a, &xi);
            let rhs = busemann(&c, &a, &xi) - busemann(&c, &b, &xi);
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn busemann_is_one_lipschitz(a in point(), b in point(), xi in ideal()) {
            prop_assert!(busemann(&b, &a, &xi).abs() <= a.dist(&b) + 1e-9);
        }
    }
}
