//! Trivialized homogeneous Banach bundles over an interval and their
//! fiberwise Löwner renorming.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::convex::{hausdorff_on, sphere_directions, DirectionSampling, SymmetricBody};
use crate::ellipsoid::{bm_bound_with, john_certificate, loewner, BmBound, LoewnerResult};
use crate::{Error, Exec, Result};

/// Stored (one of each ± pair) vertices per ℓ_p fiber.
pub const LP_VERTICES_2D: usize = 64;
pub const LP_VERTICES_HIGHER: usize = 256;

const LP_SAMPLE_SEED: u64 = 0x1f_2e_3d;

#[derive(Debug, Clone)]
pub struct DiscretizedBundle {
    grid: Vec<f64>,
    dim: usize,
    fibers: Vec<SymmetricBody>,
}

impl DiscretizedBundle {
    pub fn new(grid: Vec<f64>, fibers: Vec<SymmetricBody>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("bundle needs at least one grid point"));
        }
        if grid.len() != fibers.len() {
            return Err(Error::invalid(format!("{} grid points but {} fibers", grid.len(), fibers.len())));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("grid points must be finite"));
        }
        if let Some(k) = grid.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("grid is not strictly increasing at index {}", k + 1)));
        }
        let dim = fibers[0].dim();
        for (i, f) in fibers.iter().enumerate() {
            if f.dim() != dim {
                return Err(Error::Fiber {
                    index: i,
                    x: grid[i],
                    source: Box::new(Error::DimensionMismatch { expected: dim, got: f.dim() }),
                });
            }
        }
        Ok(DiscretizedBundle { grid, dim, fibers })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fibers(&self) -> &[SymmetricBody] {
        &self.fibers
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest gap between consecutive grid points.
    pub fn spacing(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Applies the same chart change `L` to every fiber.
    pub fn transform(&self, l: &DMatrix<f64>) -> Result<Self> {
        let fibers = self.fibers.iter().map(|f| f.transform(l)).collect::<Result<_>>()?;
        Self::new(self.grid.clone(), fibers)
    }
}

/// Generator for test families of fiber bodies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Raw per-point vertex lists; cannot be refined.
    Explicit { grid: Vec<f64>, fibers: Vec<Vec<Vec<f64>>> },
    /// Unit balls of `ℓ_{p(x)}` with `p` piecewise linear through `knots`
    /// `(x, p)` and clamped outside them.
    Lp {
        interval: [f64; 2],
        points: usize,
        dim: usize,
        knots: Vec<[f64; 2]>,
        vertices: Option<usize>,
    },
    /// Vertexwise linear interpolation `(1−t)·start + t·end` across the
    /// interval.
    Interpolate { interval: [f64; 2], points: usize, start: Vec<Vec<f64>>, end: Vec<Vec<f64>> },
}

fn uniform_grid(interval: [f64; 2], points: usize) -> Result<Vec<f64>> {
    let [a, b] = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!("interval [{a}, {b}] is not a proper interval")));
    }
    if points < 2 {
        return Err(Error::invalid("a family needs at least two grid points"));
    }
    let m = (points - 1) as f64;
    Ok((0..points).map(|k| if k + 1 == points { b } else { a + (b - a) * k as f64 / m }).collect())
}

/// Piecewise-linear interpolation through sorted knots, clamped at the ends.
pub fn piecewise_linear(knots: &[[f64; 2]], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    let k = knots.windows(2).position(|w| x <= w[1][0]).unwrap_or(knots.len() - 2);
    let ([x0, y0], [x1, y1]) = (knots[k], knots[k + 1]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

pub fn lp_norm(x: &DVector<f64>, p: f64) -> f64 {
    let m = x.amax();
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Unit directions that sample the ℓ_p spheres: angles `kπ/m` in the plane;
/// coordinate axes plus a fixed-seed hemisphere sample otherwise.
pub fn lp_directions(dim: usize, count: usize) -> Vec<DVector<f64>> {
    match dim {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            let mut dirs: Vec<DVector<f64>> = (0..dim)
                .map(|i| {
                    let mut e = DVector::zeros(dim);
                    e[i] = 1.0;
                    e
                })
                .collect();
            for d in sphere_directions(dim, count.saturating_sub(dim), LP_SAMPLE_SEED) {
                let mut u = d.as_vector().clone();
                if u.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0) {
                    u = -u;
                }
                dirs.push(u);
            }
            dirs
        }
    }
}

pub fn lp_body(dim: usize, p: f64, count: usize) -> Result<SymmetricBody> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must lie in [1, ∞)")));
    }
    SymmetricBody::new(lp_directions(dim, count).into_iter().map(|u| &u / lp_norm(&u, p)).collect())
}

fn rows_to_vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_column_slice(r)).collect()
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::Explicit { .. } => Ok(()),
            FamilySpec::Lp { interval, points, dim, knots, vertices } => {
                uniform_grid(*interval, *points)?;
                if *dim == 0 {
                    return Err(Error::invalid("dim must be positive"));
                }
                if knots.is_empty() {
                    return Err(Error::invalid("ℓ_p family needs at least one knot"));
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::invalid("knot positions must be strictly increasing"));
                }
                if let Some(k) = knots.iter().find(|k| !(k[1].is_finite() && k[1] >= 1.0)) {
                    return Err(Error::invalid(format!("knot exponent {} outside [1, ∞)", k[1])));
                }
                if vertices.is_some_and(|v| v < *dim) {
                    return Err(Error::invalid("vertex count below dimension"));
                }
                Ok(())
            }
            FamilySpec::Interpolate { interval, points, start, end } => {
                uniform_grid(*interval, *points)?;
                if start.len() != end.len() {
                    return Err(Error::invalid(format!(
                        "interpolation endpoints have {} and {} vertices",
                        start.len(),
                        end.len()
                    )));
                }
                SymmetricBody::from_rows(start)?;
                SymmetricBody::from_rows(end)?;
                Ok(())
            }
        }
    }

    pub fn is_refinable(&self) -> bool {
        !matches!(self, FamilySpec::Explicit { .. })
    }

    /// Same family at half the grid spacing.
    pub fn refine(&self) -> Option<FamilySpec> {
        let mut next = self.clone();
        match &mut next {
            FamilySpec::Explicit { .. } => return None,
            FamilySpec::Lp { points, .. } | FamilySpec::Interpolate { points, .. } => {
                *points = 2 * (*points - 1) + 1;
            }
        }
        Some(next)
    }

    /// ℓ_p family with a different per-fiber vertex count.
    pub fn with_vertices(&self, count: usize) -> Option<FamilySpec> {
        match self {
            FamilySpec::Lp { interval, points, dim, knots, .. } => Some(FamilySpec::Lp {
                interval: *interval,
                points: *points,
                dim: *dim,
                knots: knots.clone(),
                vertices: Some(count),
            }),
            _ => None,
        }
    }

    pub fn discretize(&self) -> Result<DiscretizedBundle> {
        self.validate()?;
        let at = |i: usize, x: f64, r: Result<SymmetricBody>| {
            r.map_err(|e| Error::Fiber { index: i, x, source: Box::new(e) })
        };
        match self {
            FamilySpec::Explicit { grid, fibers } => {
                if grid.len() != fibers.len() {
                    return Err(Error::invalid(format!("{} grid points but {} fibers", grid.len(), fibers.len())));
                }
                let bodies = fibers
                    .iter()
                    .enumerate()
                    .map(|(i, rows)| at(i, grid[i], SymmetricBody::from_rows(rows)))
                    .collect::<Result<_>>()?;
                DiscretizedBundle::new(grid.clone(), bodies)
            }
            FamilySpec::Lp { interval, points, dim, knots, vertices } => {
                let grid = uniform_grid(*interval, *points)?;
                let count = vertices.unwrap_or(if *dim <= 2 { LP_VERTICES_2D } else { LP_VERTICES_HIGHER });
                let bodies = grid
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| at(i, x, lp_body(*dim, piecewise_linear(knots, x), count)))
                    .collect::<Result<_>>()?;
                DiscretizedBundle::new(grid, bodies)
            }
            FamilySpec::Interpolate { interval, points, start, end } => {
                let grid = uniform_grid(*interval, *points)?;
                let (v0, v1) = (rows_to_vectors(start), rows_to_vectors(end));
                let [a, b] = *interval;
                let bodies = grid
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let t = (x - a) / (b - a);
                        let verts = v0.iter().zip(&v1).map(|(p, q)| p * (1.0 - t) + q * t).collect();
                        at(i, x, SymmetricBody::new(verts))
                    })
                    .collect::<Result<_>>()?;
                DiscretizedBundle::new(grid, bodies)
            }
        }
    }
}

/// Per-fiber Löwner ellipsoids, each carrying a passing John certificate.
#[derive(Debug, Clone)]
pub struct HilbertRenorming {
    pub eps: f64,
    pub fibers: Vec<LoewnerResult>,
}

impl HilbertRenorming {
    pub fn ellipsoids(&self) -> impl Iterator<Item = &crate::convex::Ellipsoid> {
        self.fibers.iter().map(|r| &r.ellipsoid)
    }
}

pub fn renorm(bundle: &DiscretizedBundle, eps: f64) -> Result<HilbertRenorming> {
    renorm_with(bundle, eps, Exec::default())
}

pub fn renorm_with(bundle: &DiscretizedBundle, eps: f64, exec: Exec) -> Result<HilbertRenorming> {
    let idx: Vec<usize> = (0..bundle.len()).collect();
    let fibers = exec.try_map(&idx, |&i| {
        let r = loewner(&bundle.fibers[i], eps).and_then(|r| john_certificate(&r).map(|_| r));
        r.map_err(|e| Error::Fiber { index: i, x: bundle.grid[i], source: Box::new(e) })
    })?;
    Ok(HilbertRenorming { eps, fibers })
}

#[derive(Debug, Clone, Serialize)]
pub struct BmDistance {
    /// Sup over the grid of the certified `log(‖T‖·√n)`.
    pub certified: f64,
    /// Sup over the grid of the sampled `log(‖T‖·‖T⁻¹‖)` estimate.
    pub sampled: f64,
    /// Grid index attaining `sampled`.
    pub argmax: usize,
    /// `½·log n`.
    pub reference: f64,
    pub per_fiber: Vec<BmBound>,
}

/// Upper bound on the bounded Banach–Mazur distance realized by the
/// identity map onto the Löwner renorming.
pub fn bounded_bm_distance(
    bundle: &DiscretizedBundle,
    renorming: &HilbertRenorming,
    sampling: &DirectionSampling,
) -> Result<BmDistance> {
    bounded_bm_distance_with(bundle, renorming, sampling, Exec::default())
}

pub fn bounded_bm_distance_with(
    bundle: &DiscretizedBundle,
    renorming: &HilbertRenorming,
    sampling: &DirectionSampling,
    exec: Exec,
) -> Result<BmDistance> {
    if renorming.fibers.len() != bundle.len() {
        return Err(Error::invalid(format!(
            "renorming has {} fibers, bundle has {}",
            renorming.fibers.len(),
            bundle.len()
        )));
    }
    let idx: Vec<usize> = (0..bundle.len()).collect();
    let per_fiber = exec.try_map(&idx, |&i| {
        bm_bound_with(&bundle.fibers[i], &renorming.fibers[i], sampling, Exec::Sequential)
            .map_err(|e| Error::Fiber { index: i, x: bundle.grid[i], source: Box::new(e) })
    })?;
    let certified = per_fiber.iter().map(|b| b.product_log).fold(f64::NEG_INFINITY, f64::max);
    let (argmax, sampled) = per_fiber
        .iter()
        .map(|b| b.sampled_product_log)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    Ok(BmDistance {
        certified,
        sampled,
        argmax,
        reference: 0.5 * (bundle.dim() as f64).ln(),
        per_fiber,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub spacing: f64,
    pub body_distance: f64,
    pub ellipsoid_distance: f64,
}

fn adjacent_maxima(
    bundle: &DiscretizedBundle,
    renorming: &HilbertRenorming,
    sampling: &DirectionSampling,
    exec: Exec,
) -> Result<ContinuityRow> {
    let dirs = sampling.directions(bundle.dim());
    let pairs: Vec<usize> = (1..bundle.len()).collect();
    let rows = exec.try_map(&pairs, |&i| {
        let b = hausdorff_on(&bundle.fibers[i - 1], &bundle.fibers[i], &dirs, Exec::Sequential)?;
        let e = hausdorff_on(
            &renorming.fibers[i - 1].ellipsoid,
            &renorming.fibers[i].ellipsoid,
            &dirs,
            Exec::Sequential,
        )?;
        Ok::<_, Error>((b, e))
    })?;
    Ok(ContinuityRow {
        spacing: bundle.spacing(),
        body_distance: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        ellipsoid_distance: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// Max adjacent-fiber Hausdorff distances of bodies and of their Löwner
/// ellipsoids, at `levels` successive halvings of the grid spacing.
pub fn continuity_report(
    family: &FamilySpec,
    eps: f64,
    levels: usize,
    sampling: &DirectionSampling,
    exec: Exec,
) -> Result<Vec<ContinuityRow>> {
    if levels == 0 {
        return Err(Error::invalid("levels must be at least 1"));
    }
    if levels > 1 && !family.is_refinable() {
        return Err(Error::invalid("explicit-list bundles support only a single-level report"));
    }
    let mut out = Vec::with_capacity(levels);
    let mut spec = family.clone();
    for level in 0..levels {
        let bundle = spec.discretize()?;
        let renorming = renorm_with(&bundle, eps, exec)?;
        out.push(adjacent_maxima(&bundle, &renorming, sampling, exec)?);
        if level + 1 < levels {
            spec = spec.refine().expect("refinable family");
        }
    }
    Ok(out)
}

/// Largest per-fiber change of the Löwner ellipsoid (Hausdorff distance)
/// when an ℓ_p family's vertex count is doubled.
pub fn vertex_sensitivity(family: &FamilySpec, eps: f64, sampling: &DirectionSampling, exec: Exec) -> Result<Option<f64>> {
    let FamilySpec::Lp { dim, vertices, .. } = family else {
        return Ok(None);
    };
    let base = vertices.unwrap_or(if *dim <= 2 { LP_VERTICES_2D } else { LP_VERTICES_HIGHER });
    let coarse = renorm_with(&family.discretize()?, eps, exec)?;
    let fine_spec = family.with_vertices(2 * base).expect("lp family");
    let fine = renorm_with(&fine_spec.discretize()?, eps, exec)?;
    let dirs = sampling.directions(*dim);
    let d = exec.try_map(&(0..coarse.fibers.len()).collect::<Vec<_>>(), |&i| {
        hausdorff_on(&coarse.fibers[i].ellipsoid, &fine.fibers[i].ellipsoid, &dirs, Exec::Sequential)
    })?;
    Ok(Some(d.into_iter().fold(0.0, f64::max)))
}
