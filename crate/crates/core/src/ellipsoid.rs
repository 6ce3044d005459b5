//! Löwner (minimal enclosing) and John (maximal inscribed) ellipsoids of
//! symmetric bodies, with John-decomposition certificates and the
//! Banach–Mazur bound they imply.
//!
//! The Löwner ellipsoid of `conv(±V)` is `{x : xᵀ M(u*)⁻¹ x ≤ n}` where `u*`
//! maximizes `log det M(u)`, `M(u) = Σ uᵢ vᵢvᵢᵀ`, over the simplex. The
//! optimizer is the Khachiyan coordinate ascent with Todd–Yildirim away
//! steps; once within tolerance the support is reduced to at most
//! `n(n+1)/2` points and the optimality system `vᵢᵀM(u)⁻¹vᵢ = n` on that
//! support is solved by Newton's method.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::convex::{DirectionSampling, Ellipsoid, SymmetricBody};
use crate::linalg::{inverse, sym_sqrt};
use crate::{Error, Exec, Result};

/// Contact weights below `WEIGHT_FLOOR · n` are treated as inactive.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// Residual and weight-sum thresholds used by [`john_certificate`].
pub const RESIDUAL_TOL: f64 = 1e-5;
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

const REFRESH_EVERY: usize = 64;
const HARD_ITERATION_CAP: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipsoidKind {
    /// Minimal-volume ellipsoid containing the body.
    Circumscribed,
    /// Maximal-volume ellipsoid contained in the body.
    Inscribed,
}

/// A contact point `x` with John weight `c > 0`. For circumscribed results
/// `index` is the body vertex the point came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub index: Option<usize>,
    pub point: DVector<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct LoewnerResult {
    pub kind: EllipsoidKind,
    pub ellipsoid: Ellipsoid,
    pub contacts: Vec<Contact>,
    /// `‖Σ cᵢ wᵢwᵢᵀ − I‖_F` with `wᵢ = A^{1/2} xᵢ`.
    pub contact_residual: f64,
    pub iterations: usize,
    pub eps: f64,
}

impl LoewnerResult {
    pub fn dim(&self) -> usize {
        self.ellipsoid.dim()
    }

    pub fn weight_sum(&self) -> f64 {
        self.contacts.iter().map(|c| c.weight).sum()
    }

    /// Tolerance for `|‖xᵢ‖_E − 1|` on contact points.
    pub fn contact_tolerance(&self) -> f64 {
        (10.0 * self.eps).max(1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnCertificate {
    pub residual: f64,
    pub weight_sum: f64,
    pub contact_count: usize,
    /// Largest `|‖xᵢ‖_E − 1|` over contact points.
    pub boundary_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BmBound {
    /// `‖id : (ℝⁿ, ‖·‖_K) → (ℝⁿ, ‖·‖_E)‖`, the largest vertex gauge in `E`.
    pub norm_into_hilbert: f64,
    /// Certified bound `√n` on the inverse, backed by the John certificate.
    pub norm_back: f64,
    /// Largest body gauge seen on sampled boundary points of `E`.
    pub norm_back_sampled: f64,
    /// `log(norm_into_hilbert · norm_back)`.
    pub product_log: f64,
    /// `log(norm_into_hilbert · norm_back_sampled)`.
    pub sampled_product_log: f64,
}

fn moment(points: &[DVector<f64>], u: &[f64], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for (p, &w) in points.iter().zip(u) {
        if w != 0.0 {
            m.ger(w, p, p, 1.0);
        }
    }
    m
}

fn leverages(points: &[DVector<f64>], minv: &DMatrix<f64>) -> Vec<f64> {
    points.iter().map(|p| p.dot(&(minv * p))).collect()
}

fn first_argmax(xs: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    xs.fold((usize::MAX, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}

struct Ascent {
    u: Vec<f64>,
    iterations: usize,
}

/// Khachiyan ascent with away steps. Stops once
/// `max κᵢ ≤ n(1+eps)` and `min_{uᵢ>0} κᵢ ≥ n(1−eps)`, `κᵢ = vᵢᵀM(u)⁻¹vᵢ`.
fn khachiyan(points: &[DVector<f64>], eps: f64) -> Result<Ascent> {
    let n = points[0].len();
    let nf = n as f64;
    let m = points.len();
    let mut u = vec![1.0 / m as f64; m];
    let cap = ((100.0 * nf / eps).min(HARD_ITERATION_CAP as f64)) as usize;

    let mut minv = inverse(&moment(points, &u, n))?;
    let mut kappa = leverages(points, &minv);
    let mut since_refresh = 0usize;
    for it in 0..cap {
        if since_refresh >= REFRESH_EVERY {
            minv = inverse(&moment(points, &u, n))?;
            kappa = leverages(points, &minv);
            since_refresh = 0;
        }
        let (jp, kmax) = first_argmax(kappa.iter().copied().enumerate());
        let (jm, kmin) = first_argmax(
            kappa.iter().enumerate().filter(|(i, _)| u[*i] > 0.0).map(|(i, &k)| (i, -k)),
        );
        let kmin = -kmin;
        let up = kmax / nf - 1.0;
        let down = 1.0 - kmin / nf;
        if up <= eps && down <= eps {
            if since_refresh == 0 {
                return Ok(Ascent { u, iterations: it });
            }
            since_refresh = REFRESH_EVERY;
            continue;
        }
        let (j, alpha) = if up >= down {
            (jp, (kmax - nf) / (nf * (kmax - 1.0)))
        } else {
            let lo = -u[jm] / (1.0 - u[jm]);
            // for κ ≤ 1 the objective decreases along the whole segment
            let step = if kmin > 1.0 { ((kmin - nf) / (nf * (kmin - 1.0))).max(lo) } else { lo };
            (jm, step)
        };
        if !alpha.is_finite() || alpha == 0.0 {
            // flat direction; a fresh factorization settles rounding noise
            since_refresh = REFRESH_EVERY;
            continue;
        }
        let dropped = alpha <= -u[j] / (1.0 - u[j]);
        for w in u.iter_mut() {
            *w *= 1.0 - alpha;
        }
        u[j] += alpha;
        if dropped {
            u[j] = 0.0;
            // the rank-one downdate is ill-conditioned here; refactor instead
            since_refresh = REFRESH_EVERY;
            continue;
        }
        // rank-one update of M⁻¹ and the leverages
        let t = alpha / (1.0 - alpha);
        let mv = &minv * &points[j];
        let denom = 1.0 + t * kappa[j];
        let scale = 1.0 / (1.0 - alpha);
        for (k, p) in kappa.iter_mut().zip(points) {
            let c = p.dot(&mv);
            *k = scale * (*k - t * c * c / denom);
        }
        minv.ger(-t / denom, &mv, &mv, 1.0);
        minv *= scale;
        since_refresh += 1;
    }
    Err(Error::NonConvergence { what: "Khachiyan ascent", iterations: cap })
}

fn sym_vec(p: &DVector<f64>) -> Vec<f64> {
    let n = p.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(p[i] * p[j]);
        }
    }
    out
}

/// Carathéodory reduction: moves weight along null vectors of
/// `u ↦ Σ uᵢ vᵢvᵢᵀ` until at most `n(n+1)/2` points carry weight. `M(u)` is
/// unchanged.
fn reduce_support(points: &[DVector<f64>], support: &mut Vec<usize>, u: &mut [f64]) {
    let n = points[0].len();
    let d = n * (n + 1) / 2;
    while support.len() > d {
        let chunk: Vec<usize> = support[..=d].to_vec();
        let cols: Vec<Vec<f64>> = chunk.iter().map(|&i| sym_vec(&points[i])).collect();
        let b = DMatrix::from_fn(d, d + 1, |r, c| cols[c][r]);
        let eig = SymmetricEigen::new(b.transpose() * &b);
        let k = eig.eigenvalues.imin();
        let mut delta: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        if delta.iter().all(|&x| x <= 0.0) {
            delta.iter_mut().for_each(|x| *x = -*x);
        }
        let mut step = f64::INFINITY;
        let mut hit = 0;
        for (pos, &i) in chunk.iter().enumerate() {
            if delta[pos] > 0.0 {
                let s = u[i] / delta[pos];
                if s < step {
                    step = s;
                    hit = pos;
                }
            }
        }
        for (pos, &i) in chunk.iter().enumerate() {
            u[i] = (u[i] - step * delta[pos]).max(0.0);
        }
        u[chunk[hit]] = 0.0;
        support.retain(|&i| u[i] > 0.0);
    }
}

/// Newton's method on `κᵢ(u) = n` over the support. The Jacobian is
/// `−(G∘G)` with `G` the Gram matrix of the support in the `M(u)⁻¹` metric.
fn newton_polish(points: &[DVector<f64>], support: &[usize], u: &[f64]) -> Option<Vec<f64>> {
    let n = points[0].len();
    let nf = n as f64;
    let sp: Vec<DVector<f64>> = support.iter().map(|&i| points[i].clone()).collect();
    let mut w: Vec<f64> = support.iter().map(|&i| u[i]).collect();
    for _ in 0..40 {
        let minv = inverse(&moment(&sp, &w, n)).ok()?;
        let k = sp.len();
        let g = DMatrix::from_fn(k, k, |a, b| sp[a].dot(&(&minv * &sp[b])));
        let f = DVector::from_fn(k, |a, _| g[(a, a)] - nf);
        if f.amax() <= 1e-13 * nf {
            return Some(w);
        }
        let h = g.map(|x| x * x);
        let delta = h.lu().solve(&f)?;
        let mut step = 1.0;
        loop {
            let cand: Vec<f64> = w.iter().zip(delta.iter()).map(|(a, b)| a + step * b).collect();
            if cand.iter().all(|&x| x > 0.0) {
                w = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-6 {
                return None;
            }
        }
    }
    None
}

fn residual(ellipsoid: &Ellipsoid, contacts: &[Contact]) -> f64 {
    let n = ellipsoid.dim();
    let root = sym_sqrt(ellipsoid.shape());
    let mut acc = -DMatrix::<f64>::identity(n, n);
    for c in contacts {
        let w = &root * &c.point;
        acc.ger(c.weight, &w, &w, 1.0);
    }
    acc.norm()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Löwner ellipsoid of `conv(±V)` for an arbitrary spanning point list.
/// Ellipsoid, `(point index, weight)` support and iteration count.
type PointFit = (Ellipsoid, Vec<(usize, f64)>, usize);

fn loewner_points(points: &[DVector<f64>], eps: f64) -> Result<PointFit> {
    let n = points[0].len();
    let nf = n as f64;
    let ascent = khachiyan(points, eps)?;
    let mut u = ascent.u.clone();

    let mut support: Vec<usize> = (0..u.len()).filter(|&i| u[i] >= WEIGHT_FLOOR).collect();
    for (i, w) in u.iter_mut().enumerate() {
        if *w < WEIGHT_FLOOR {
            *w = 0.0;
        }
        let _ = i;
    }
    reduce_support(points, &mut support, &mut u);

    let polished = newton_polish(points, &support, &u).and_then(|w| {
        let mut full = vec![0.0; u.len()];
        for (&i, &x) in support.iter().zip(&w) {
            full[i] = x;
        }
        let minv = inverse(&moment(points, &full, n)).ok()?;
        let kmax = leverages(points, &minv).into_iter().fold(0.0, f64::max);
        (kmax <= nf * (1.0 + eps)).then_some((full, minv))
    });

    let (weights, minv) = match polished {
        Some((full, minv)) => (full, minv),
        None => {
            log::debug!("Newton polish rejected; keeping ascent iterate");
            (u, inverse(&moment(points, &ascent.u, n))?)
        }
    };
    let total: f64 = support.iter().map(|&i| weights[i]).sum();
    let contacts = support.iter().map(|&i| (i, nf * weights[i] / total)).collect();
    let ellipsoid = Ellipsoid::new(crate::linalg::symmetrize(&(minv / nf)))?;
    Ok((ellipsoid, contacts, ascent.iterations))
}

/// Minimal-volume centered ellipsoid containing `conv(V ∪ −V)`.
///
/// Every vertex satisfies `‖v‖_E ≤ 1 + eps`; the returned weights are the
/// John decomposition `Σ cᵢ wᵢwᵢᵀ = I`, `Σ cᵢ = n`.
pub fn loewner(body: &SymmetricBody, eps: f64) -> Result<LoewnerResult> {
    check_eps(eps)?;
    let points = body.vertices();
    let (ellipsoid, weights, iterations) = loewner_points(points, eps)?;
    let contacts: Vec<Contact> = weights
        .into_iter()
        .map(|(i, c)| Contact { index: Some(i), point: points[i].clone(), weight: c })
        .collect();
    let contact_residual = residual(&ellipsoid, &contacts);
    Ok(LoewnerResult {
        kind: EllipsoidKind::Circumscribed,
        ellipsoid,
        contacts,
        contact_residual,
        iterations,
        eps,
    })
}

fn dedup_push(set: &mut Vec<DVector<f64>>, y: DVector<f64>) -> bool {
    let scale = y.amax().max(1.0);
    if y.amax() == 0.0 || set.iter().any(|z| (z - &y).amax() <= 1e-9 * scale || (z + &y).amax() <= 1e-9 * scale) {
        return false;
    }
    set.push(y);
    true
}

/// Default number of probe directions for [`john_inscribed`].
fn probe_count(dim: usize) -> usize {
    match dim {
        1 | 2 => 720,
        3 => 2048,
        _ => 4096,
    }
}

/// Maximal-volume centered ellipsoid inside `conv(V ∪ −V)`.
///
/// Computed by polarity: the John ellipsoid of `K` is the polar of the
/// Löwner ellipsoid of `K° = {y : |⟨vᵢ, y⟩| ≤ 1}`. The vertices of `K°`
/// (facet normals of `K`) are discovered lazily as LP duals of gauge
/// evaluations at probe points on the current candidate's boundary, until
/// no probe point lies outside `K` by more than `eps`.
pub fn john_inscribed(body: &SymmetricBody, eps: f64) -> Result<LoewnerResult> {
    john_inscribed_with(body, eps, &DirectionSampling::with_count(probe_count(body.dim())), Exec::default())
}

pub fn john_inscribed_with(
    body: &SymmetricBody,
    eps: f64,
    probes: &DirectionSampling,
    exec: Exec,
) -> Result<LoewnerResult> {
    check_eps(eps)?;
    let n = body.dim();
    let dirs = probes.directions(n);
    let outer = loewner(body, eps)?;
    // E_L / n lies inside the body by John's theorem
    let start = Ellipsoid::new(outer.ellipsoid.shape() * n as f64)?;
    let mut polar: Vec<DVector<f64>> = Vec::new();
    for r in exec.try_map(&start.boundary_points(&dirs), |x| body.gauge_with_dual(x))? {
        dedup_push(&mut polar, r.1);
    }

    let mut total_iterations = outer.iterations;
    for _round in 0..200 {
        let (fit, weights, iterations) = loewner_points(&polar, eps)?;
        total_iterations += iterations;
        let inner = fit.polar();
        let probes = inner.boundary_points(&dirs);
        let found: Vec<Option<DVector<f64>>> = exec.try_map(&probes, |x| {
            let (g, y) = body.gauge_with_dual(x)?;
            if g <= 1.0 + eps {
                return Ok::<_, Error>(None);
            }
            // local ascent of the body gauge along the ellipsoid boundary
            let (mut g, mut y) = (g, y);
            for _ in 0..50 {
                let x2 = inner.extreme_point(&y);
                let (g2, y2) = body.gauge_with_dual(&x2)?;
                if g2 <= g * (1.0 + 1e-12) {
                    break;
                }
                g = g2;
                y = y2;
            }
            Ok(Some(y))
        })?;
        let mut added = false;
        for y in found.into_iter().flatten() {
            added |= dedup_push(&mut polar, y);
        }
        if !added {
            let shape = inner.inverse_shape();
            let contacts: Vec<Contact> = weights
                .into_iter()
                .map(|(i, c)| Contact { index: None, point: shape * &polar[i], weight: c })
                .collect();
            let contact_residual = residual(&inner, &contacts);
            return Ok(LoewnerResult {
                kind: EllipsoidKind::Inscribed,
                ellipsoid: inner,
                contacts,
                contact_residual,
                iterations: total_iterations,
                eps,
            });
        }
    }
    Err(Error::NonConvergence { what: "inscribed-ellipsoid cutting planes", iterations: 200 })
}

/// Recomputes the John decomposition residual and checks
/// `n ≤ N ≤ n(n+1)/2`, `|Σcᵢ − n| ≤ 1e-6`, residual `≤ 1e-5` and that every
/// contact point lies on the ellipsoid boundary.
pub fn john_certificate(result: &LoewnerResult) -> Result<JohnCertificate> {
    let n = result.dim();
    let nf = n as f64;
    let live: Vec<Contact> = result
        .contacts
        .iter()
        .filter(|c| c.weight >= WEIGHT_FLOOR * nf)
        .cloned()
        .collect();
    let residual = residual(&result.ellipsoid, &live);
    let weight_sum: f64 = live.iter().map(|c| c.weight).sum();
    let boundary_defect = live
        .iter()
        .map(|c| (result.ellipsoid.gauge_value(&c.point) - 1.0).abs())
        .fold(0.0, f64::max);
    let cert = JohnCertificate { residual, weight_sum, contact_count: live.len(), boundary_defect };
    let fail = |what: String| Err(Error::Certificate(what));
    if live.len() < n || live.len() > n * (n + 1) / 2 {
        return fail(format!("contact count {} outside [{n}, {}]", live.len(), n * (n + 1) / 2));
    }
    if (weight_sum - nf).abs() > WEIGHT_SUM_TOL {
        return fail(format!("weights sum to {weight_sum}, expected {n}"));
    }
    if residual > RESIDUAL_TOL {
        return fail(format!("decomposition residual {residual:e}"));
    }
    if boundary_defect > result.contact_tolerance() {
        return fail(format!("contact point off the boundary by {boundary_defect:e}"));
    }
    Ok(cert)
}

/// Norms of the identity between the body norm and the Löwner norm.
pub fn bm_bound(body: &SymmetricBody, result: &LoewnerResult, sampling: &DirectionSampling) -> Result<BmBound> {
    bm_bound_with(body, result, sampling, Exec::default())
}

pub fn bm_bound_with(
    body: &SymmetricBody,
    result: &LoewnerResult,
    sampling: &DirectionSampling,
    exec: Exec,
) -> Result<BmBound> {
    Error::check_dim(body.dim(), result.dim())?;
    if result.kind != EllipsoidKind::Circumscribed {
        return Err(Error::invalid("bm_bound needs a circumscribed (Löwner) result"));
    }
    john_certificate(result)?;
    let e = &result.ellipsoid;
    let norm_into_hilbert = body.vertices().iter().map(|v| e.gauge_value(v)).fold(0.0, f64::max);
    let norm_back = (body.dim() as f64).sqrt();
    let probes = e.boundary_points(&sampling.directions(body.dim()));
    let norm_back_sampled = exec
        .try_map(&probes, |x| body.gauge(x))?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(BmBound {
        norm_into_hilbert,
        norm_back,
        norm_back_sampled,
        product_log: (norm_into_hilbert * norm_back).ln(),
        sampled_product_log: (norm_into_hilbert * norm_back_sampled).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square() -> SymmetricBody {
        SymmetricBody::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn cross_polytope_gives_unit_disc() {
        let r = loewner(&SymmetricBody::cross_polytope(2), 1e-9).unwrap();
        assert_relative_eq!(r.ellipsoid.shape(), &DMatrix::identity(2, 2), epsilon = 1e-12);
        let mut w: Vec<_> = r.contacts.iter().map(|c| (c.index.unwrap(), c.weight)).collect();
        w.sort_by_key(|p| p.0);
        assert_eq!(w.len(), 2);
        assert_relative_eq!(w[0].1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1].1, 1.0, epsilon = 1e-12);
        assert!(r.contact_residual < 1e-12);
    }

    #[test]
    fn square_gives_radius_sqrt2_disc() {
        let r = loewner(&square(), 1e-9).unwrap();
        assert_relative_eq!(r.ellipsoid.shape(), &(DMatrix::identity(2, 2) * 0.5), epsilon = 1e-12);
        let cert = john_certificate(&r).unwrap();
        assert_eq!(cert.contact_count, 2);
        assert_relative_eq!(cert.weight_sum, 2.0, epsilon = 1e-12);
        assert!(cert.residual < 1e-12);
    }

    #[test]
    fn ellipse_vertices_reproduce_the_ellipse() {
        // 12 points on ∂{x : xᵀAx ≤ 1}, spread so they carry a John decomposition
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let e = Ellipsoid::new(a.clone()).unwrap();
        let dirs = crate::convex::circle_directions(24);
        let pts: Vec<_> = e.boundary_points(&dirs[..12]);
        let r = loewner(&SymmetricBody::new(pts).unwrap(), 1e-10).unwrap();
        assert!(crate::linalg::relative_frobenius(r.ellipsoid.shape(), &a) < 1e-9);
        john_certificate(&r).unwrap();
    }

    #[test]
    fn random_body_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let body = SymmetricBody::random(3, 20, &mut rng);
        let r = loewner(&body, 1e-7).unwrap();
        let cert = john_certificate(&r).unwrap();
        assert!(cert.residual <= 1e-5);
        assert!((3..=6).contains(&cert.contact_count));
        assert!((cert.weight_sum - 3.0).abs() <= 1e-5);
        for v in body.vertices() {
            assert!(r.ellipsoid.gauge(v).unwrap() <= 1.0 + 1e-7);
        }
    }

    #[test]
    fn john_of_cross_polytope_is_radius_inv_sqrt2() {
        let r = john_inscribed(&SymmetricBody::cross_polytope(2), 1e-9).unwrap();
        assert_relative_eq!(r.ellipsoid.shape(), &(DMatrix::identity(2, 2) * 2.0), epsilon = 1e-9);
        john_certificate(&r).unwrap();
    }

    #[test]
    fn john_of_square_is_unit_disc() {
        let r = john_inscribed(&square(), 1e-9).unwrap();
        assert_relative_eq!(r.ellipsoid.shape(), &DMatrix::identity(2, 2), epsilon = 1e-9);
    }

    #[test]
    fn john_of_fine_polygon_is_nearly_the_disc() {
        let dirs = crate::convex::circle_directions(4096);
        let pts = dirs[..2048].iter().map(|d| d.as_vector().clone()).collect();
        let body = SymmetricBody::new(pts).unwrap();
        let r = john_inscribed(&body, 1e-6).unwrap();
        for a in r.ellipsoid.semi_axes() {
            assert!((a - 1.0).abs() < 1e-3, "semi-axis {a}");
        }
    }

    #[test]
    fn bm_bound_cross_polytope_is_tight() {
        let body = SymmetricBody::cross_polytope(2);
        let r = loewner(&body, 1e-9).unwrap();
        let b = bm_bound(&body, &r, &DirectionSampling::default()).unwrap();
        assert_relative_eq!(b.norm_into_hilbert, 1.0, epsilon = 1e-12);
        assert_relative_eq!(b.norm_back_sampled, 2f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(b.product_log, 0.5 * 2f64.ln(), epsilon = 1e-9);
        assert_relative_eq!(b.sampled_product_log, 0.5 * 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn bm_bound_square_is_tight() {
        let body = square();
        let r = loewner(&body, 1e-9).unwrap();
        let b = bm_bound(&body, &r, &DirectionSampling::default()).unwrap();
        assert_relative_eq!(b.norm_into_hilbert, 1.0, epsilon = 1e-12);
        assert_relative_eq!(b.norm_back_sampled, 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn bm_bound_of_near_ellipse_is_near_zero() {
        let e = Ellipsoid::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0])).unwrap();
        let dirs = crate::convex::circle_directions(1024);
        let body = SymmetricBody::new(e.boundary_points(&dirs[..512])).unwrap();
        let r = loewner(&body, 1e-9).unwrap();
        let b = bm_bound(&body, &r, &DirectionSampling::default()).unwrap();
        assert!(b.sampled_product_log.abs() < 1e-4, "{}", b.sampled_product_log);
    }

    #[test]
    fn bad_eps_and_kind_are_rejected() {
        let body = square();
        assert!(matches!(loewner(&body, 0.0), Err(Error::Invalid(_))));
        assert!(matches!(loewner(&body, 1.5), Err(Error::Invalid(_))));
        let inner = john_inscribed(&body, 1e-9).unwrap();
        assert!(bm_bound(&body, &inner, &DirectionSampling::default()).is_err());
    }

    #[test]
    fn certificate_catches_premature_results() {
        let mut r = loewner(&SymmetricBody::cross_polytope(2), 1e-9).unwrap();
        r.contacts[0].weight = 0.5;
        assert!(matches!(john_certificate(&r), Err(Error::Certificate(_))));
    }
}
