//! Origin-symmetric convex bodies and centered ellipsoids: gauges, support
//! functions and sampled Hausdorff distance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{conditioning, inverse, symmetrize};
use crate::lp::solve_standard;
use crate::{Error, Exec, Result};

/// Smallest admissible ratio of extreme singular values (bodies) or
/// eigenvalues (ellipsoid shapes).
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Default direction counts for [`DirectionSampling`].
pub const CIRCLE_DIRECTIONS: usize = 4096;
pub const SPHERE_DIRECTIONS: usize = 16384;

/// The body `conv(V ∪ −V)` for a finite spanning vertex list `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBody {
    dim: usize,
    vertices: Vec<DVector<f64>>,
}

impl SymmetricBody {
    /// Validates and wraps a vertex list. Each stored vertex stands for the
    /// pair `±v`, so the list may not contain both `v` and `−v`.
    pub fn new(vertices: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::Degenerate("empty vertex list".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Degenerate("zero-dimensional vertices".into()));
        }
        for v in &vertices {
            Error::check_dim(dim, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite vertex coordinate"));
            }
        }
        let scale = vertices.iter().map(|v| v.amax()).fold(0.0, f64::max);
        for (i, v) in vertices.iter().enumerate() {
            if v.amax() <= 1e-14 * scale {
                return Err(Error::invalid(format!("vertex {i} is the zero vector")));
            }
        }
        let tol = 1e-12 * scale;
        for i in 0..vertices.len() {
            for j in 0..i {
                let (a, b) = (&vertices[i], &vertices[j]);
                if (a - b).amax() <= tol || (a + b).amax() <= tol {
                    return Err(Error::invalid(format!(
                        "vertices {j} and {i} coincide up to sign"
                    )));
                }
            }
        }
        let cond = conditioning(&vertices, dim);
        if cond < DEGENERACY_TOL {
            return Err(Error::Degenerate(format!(
                "vertices do not span R^{dim} (singular value ratio {cond:e})"
            )));
        }
        Ok(SymmetricBody { dim, vertices })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    /// `conv(±e₁, …, ±eₙ)`, the unit ball of ℓ¹.
    pub fn cross_polytope(dim: usize) -> Self {
        let vertices = (0..dim)
            .map(|i| DVector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 }))
            .collect();
        SymmetricBody { dim, vertices }
    }

    /// `[-1, 1]ⁿ`, the unit ball of ℓ^∞, as the `2ⁿ⁻¹` sign patterns with a
    /// leading `+1`.
    pub fn cube(dim: usize) -> Self {
        let vertices = (0..1usize << (dim - 1))
            .map(|mask| {
                DVector::from_fn(dim, |k, _| {
                    if k == 0 || mask >> (k - 1) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
            })
            .collect();
        SymmetricBody { dim, vertices }
    }

    /// `count` standard-Gaussian vertices; redraws until the list spans.
    pub fn random<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Self {
        assert!(count >= dim && dim > 0, "need at least `dim` vertices");
        loop {
            let vertices: Vec<DVector<f64>> = (0..count)
                .map(|_| DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal)))
                .collect();
            if let Ok(body) = Self::new(vertices) {
                return body;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    /// Image of the body under the linear map `l`.
    pub fn transform(&self, l: &DMatrix<f64>) -> Result<Self> {
        Error::check_dim(self.dim, l.ncols())?;
        Self::new(self.vertices.iter().map(|v| l * v).collect())
    }

    /// Minkowski functional `min{t ≥ 0 : x ∈ t·K}`.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.gauge_with_dual(x)?.0)
    }

    /// Gauge together with a maximizer `y` of `⟨x, y⟩` over the polar body
    /// `{y : |⟨v, y⟩| ≤ 1}`. When the LP basis is non-degenerate `y` is a
    /// facet normal of the body (a vertex of the polar).
    pub fn gauge_with_dual(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        Error::check_dim(self.dim, x.len())?;
        if x.amax() == 0.0 {
            return Ok((0.0, DVector::zeros(self.dim)));
        }
        let m = self.vertices.len();
        let mut a = DMatrix::<f64>::zeros(self.dim, 2 * m);
        for (i, v) in self.vertices.iter().enumerate() {
            a.set_column(i, v);
            a.set_column(m + i, &(-v));
        }
        let sol = solve_standard(&a, x, &vec![1.0; 2 * m])?;
        Ok((sol.value, sol.dual))
    }

    pub fn support(&self, u: &Direction) -> Result<f64> {
        Error::check_dim(self.dim, u.dim())?;
        Ok(self.support_value(u.as_vector()))
    }
}

/// Centered ellipsoid `{x : xᵀAx ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    shape: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(shape: DMatrix<f64>) -> Result<Self> {
        if !shape.is_square() || shape.nrows() == 0 {
            return Err(Error::invalid("shape matrix must be square and non-empty"));
        }
        if shape.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite shape entry"));
        }
        let scale = shape.amax().max(1.0);
        if (&shape - shape.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("shape matrix is not symmetric"));
        }
        let shape = symmetrize(&shape);
        let eig = shape.clone().symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if hi <= 0.0 || lo <= DEGENERACY_TOL * hi {
            return Err(Error::Degenerate(format!(
                "shape matrix is not positive definite (eigenvalues in [{lo:e}, {hi:e}])"
            )));
        }
        let inverse = symmetrize(&inverse(&shape)?);
        Ok(Ellipsoid { shape, inverse })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) / (radius * radius))
    }

    pub fn dim(&self) -> usize {
        self.shape.nrows()
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn inverse_shape(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Hilbert norm `√(xᵀAx)` whose unit ball is this ellipsoid.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(self.gauge_value(x))
    }

    pub(crate) fn gauge_value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.shape * x)).max(0.0).sqrt()
    }

    pub fn support(&self, u: &Direction) -> Result<f64> {
        Error::check_dim(self.dim(), u.dim())?;
        Ok(self.support_value(u.as_vector()))
    }

    /// The polar ellipsoid `{y : yᵀA⁻¹y ≤ 1}`.
    pub fn polar(&self) -> Ellipsoid {
        Ellipsoid { shape: self.inverse.clone(), inverse: self.shape.clone() }
    }

    /// Image under the invertible map `l`: shape `l⁻ᵀ A l⁻¹`.
    pub fn transform(&self, l: &DMatrix<f64>) -> Result<Self> {
        Error::check_dim(self.dim(), l.ncols())?;
        let li = inverse(l)?;
        Self::new(symmetrize(&(li.transpose() * &self.shape * &li)))
    }

    /// Boundary point maximizing `⟨x, y⟩`, i.e. `A⁻¹y / √(yᵀA⁻¹y)`.
    pub fn extreme_point(&self, y: &DVector<f64>) -> DVector<f64> {
        let ay = &self.inverse * y;
        let h = y.dot(&ay).max(f64::MIN_POSITIVE).sqrt();
        ay / h
    }

    /// Boundary points `A^{-1/2}u` for the given unit directions.
    pub fn boundary_points(&self, directions: &[Direction]) -> Vec<DVector<f64>> {
        let root = crate::linalg::sym_inv_sqrt(&self.shape);
        directions.iter().map(|u| &root * u.as_vector()).collect()
    }

    pub fn volume_ratio(&self, other: &Ellipsoid) -> f64 {
        (other.shape.determinant() / self.shape.determinant()).sqrt()
    }

    /// Semi-axis lengths in increasing order.
    pub fn semi_axes(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.shape.clone());
        let mut axes: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
        axes.sort_by(f64::total_cmp);
        axes
    }
}

/// Anything with a support function `h(u) = max_{x∈K} ⟨x, u⟩`.
pub trait ConvexSet: Sync {
    fn dim(&self) -> usize;
    /// Support value; `u` must have length [`ConvexSet::dim`].
    fn support_value(&self, u: &DVector<f64>) -> f64;
}

impl ConvexSet for SymmetricBody {
    fn dim(&self) -> usize {
        self.dim
    }

    fn support_value(&self, u: &DVector<f64>) -> f64 {
        self.vertices.iter().map(|v| v.dot(u).abs()).fold(0.0, f64::max)
    }
}

impl ConvexSet for Ellipsoid {
    fn dim(&self) -> usize {
        self.shape.nrows()
    }

    fn support_value(&self, u: &DVector<f64>) -> f64 {
        u.dot(&(&self.inverse * u)).max(0.0).sqrt()
    }
}

/// Unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(DVector<f64>);

impl Direction {
    /// Accepts `u` only if `‖u‖₂ = 1` within `1e-12`.
    pub fn new(u: DVector<f64>) -> Result<Self> {
        if (u.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("direction is not a unit vector"));
        }
        Ok(Direction(u))
    }

    pub fn normalize(u: DVector<f64>) -> Result<Self> {
        let n = u.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        Ok(Direction(u / n))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Deterministic direction set: equally spaced angles on the circle, and a
/// seeded Halton sequence pushed to the sphere in dimension ≥ 3.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DirectionSampling {
    pub count: Option<usize>,
    pub seed: u64,
}

impl DirectionSampling {
    pub fn with_count(count: usize) -> Self {
        DirectionSampling { count: Some(count), seed: 0 }
    }

    pub fn directions(&self, dim: usize) -> Vec<Direction> {
        match dim {
            0 => Vec::new(),
            1 => vec![Direction(DVector::from_element(1, 1.0)), Direction(DVector::from_element(1, -1.0))],
            2 => circle_directions(self.count.unwrap_or(CIRCLE_DIRECTIONS)),
            _ => sphere_directions(dim, self.count.unwrap_or(SPHERE_DIRECTIONS), self.seed),
        }
    }
}

pub fn circle_directions(m: usize) -> Vec<Direction> {
    (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            Direction(DVector::from_vec(vec![t.cos(), t.sin()]))
        })
        .collect()
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points with a seeded Cranley–Patterson shift, mapped to normals by
/// Box–Muller and projected to the unit sphere.
pub fn sphere_directions(dim: usize, count: usize, seed: u64) -> Vec<Direction> {
    let pairs = dim.div_ceil(2);
    assert!(2 * pairs <= PRIMES.len(), "dimension {dim} exceeds the Halton base table");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..2 * pairs).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let mut g = Vec::with_capacity(2 * pairs);
        for p in 0..pairs {
            let u1 = (radical_inverse(i, PRIMES[2 * p]) + shift[2 * p]).fract().max(1e-300);
            let u2 = (radical_inverse(i, PRIMES[2 * p + 1]) + shift[2 * p + 1]).fract();
            let r = (-2.0 * u1.ln()).sqrt();
            g.push(r * (2.0 * PI * u2).cos());
            g.push(r * (2.0 * PI * u2).sin());
        }
        g.truncate(dim);
        i += 1;
        if let Ok(d) = Direction::normalize(DVector::from_vec(g)) {
            out.push(d);
        }
    }
    out
}

pub fn support<K: ConvexSet + ?Sized>(set: &K, u: &Direction) -> Result<f64> {
    Error::check_dim(set.dim(), u.dim())?;
    Ok(set.support_value(u.as_vector()))
}

/// `max_u |h_P(u) − h_Q(u)|` over the sampled directions, a lower bound on
/// the Hausdorff distance that converges under refinement.
pub fn hausdorff_distance<P, Q>(p: &P, q: &Q, sampling: &DirectionSampling) -> Result<f64>
where
    P: ConvexSet + ?Sized,
    Q: ConvexSet + ?Sized,
{
    Error::check_dim(p.dim(), q.dim())?;
    hausdorff_on(p, q, &sampling.directions(p.dim()), Exec::default())
}

pub fn hausdorff_on<P, Q>(p: &P, q: &Q, directions: &[Direction], exec: Exec) -> Result<f64>
where
    P: ConvexSet + ?Sized,
    Q: ConvexSet + ?Sized,
{
    Error::check_dim(p.dim(), q.dim())?;
    if let Some(u) = directions.first() {
        Error::check_dim(p.dim(), u.dim())?;
    }
    let diffs = exec.map(directions, |u| {
        (p.support_value(u.as_vector()) - q.support_value(u.as_vector())).abs()
    });
    Ok(diffs.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn square() -> SymmetricBody {
        SymmetricBody::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn gauge_examples() {
        let cross = SymmetricBody::cross_polytope(2);
        assert_relative_eq!(cross.gauge(&v(&[0.5, 0.5])).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cross.gauge(&v(&[0.0, 0.0])).unwrap(), 0.0);
        for vert in cross.vertices() {
            assert_relative_eq!(cross.gauge(vert).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(square().gauge(&v(&[0.3, -2.0])).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gauge_dual_is_a_polar_point() {
        let body = square();
        let x = v(&[0.7, 0.2]);
        let (g, y) = body.gauge_with_dual(&x).unwrap();
        assert_relative_eq!(x.dot(&y), g, epsilon = 1e-12);
        for vert in body.vertices() {
            assert!(vert.dot(&y).abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gauge_dimension_mismatch() {
        let err = square().gauge(&v(&[1.0, 2.0, 3.0])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 3 });
    }

    #[test]
    fn ellipsoid_gauge_examples() {
        let id = Ellipsoid::new(DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(id.gauge(&v(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(id.gauge(&v(&[0.0, 0.0])).unwrap(), 0.0);
        let d = Ellipsoid::new(DMatrix::from_diagonal(&v(&[4.0, 1.0]))).unwrap();
        assert_relative_eq!(d.gauge(&v(&[1.0, 0.0])).unwrap(), 2.0);
    }

    #[test]
    fn support_examples() {
        let e1 = Direction::new(v(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(square().support(&e1).unwrap(), 1.0);
        let id = Ellipsoid::new(DMatrix::identity(2, 2)).unwrap();
        let u = Direction::normalize(v(&[0.3, -0.8])).unwrap();
        assert_relative_eq!(id.support(&u).unwrap(), 1.0, epsilon = 1e-15);
        let d = Ellipsoid::new(DMatrix::from_diagonal(&v(&[0.25, 1.0]))).unwrap();
        assert_relative_eq!(d.support(&e1).unwrap(), 2.0);
    }

    #[test]
    fn hausdorff_examples() {
        let s = DirectionSampling::default();
        let disc = Ellipsoid::ball(2, 1.0).unwrap();
        let big = Ellipsoid::ball(2, 1.7).unwrap();
        assert_relative_eq!(hausdorff_distance(&disc, &big, &s).unwrap(), 0.7, epsilon = 1e-12);
        assert_eq!(hausdorff_distance(&square(), &square(), &s).unwrap(), 0.0);
        let loewner = Ellipsoid::ball(2, 2f64.sqrt()).unwrap();
        assert_relative_eq!(
            hausdorff_distance(&square(), &loewner, &s).unwrap(),
            2f64.sqrt() - 1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_bad_bodies() {
        assert!(matches!(
            SymmetricBody::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            SymmetricBody::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            SymmetricBody::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            Ellipsoid::new(DMatrix::from_diagonal(&v(&[1.0, -1.0]))),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            Ellipsoid::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn direction_sets_are_unit_and_deterministic() {
        for dim in 2..=6 {
            let s = DirectionSampling { count: Some(500), seed: 7 };
            let a = s.directions(dim);
            assert_eq!(a.len(), 500);
            for u in &a {
                assert!((u.as_vector().norm() - 1.0).abs() < 1e-12);
            }
            assert_eq!(a, s.directions(dim));
        }
    }

    #[test]
    fn cube_has_all_sign_patterns() {
        let c = SymmetricBody::cube(3);
        assert_eq!(c.vertices().len(), 4);
        assert_relative_eq!(c.gauge(&v(&[0.2, -0.9, 0.5])).unwrap(), 0.9, epsilon = 1e-12);
    }
}
