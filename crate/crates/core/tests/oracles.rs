//! Cross-checks against independent brute-force computations.

use hilbertize::convex::{hausdorff_distance, DirectionSampling, Ellipsoid, SymmetricBody};
use hilbertize::ellipsoid::loewner;
use hilbertize::multimatrix::{k_constant, CMatrix, MultiMatrixAlgebra, State, C64};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Facets of a centrally symmetric polygon from all vertex pairs whose line
/// keeps every point on one side.
fn polygon_facets(verts: &[DVector<f64>]) -> Vec<[f64; 2]> {
    let pts: Vec<[f64; 2]> = verts.iter().flat_map(|v| [[v[0], v[1]], [-v[0], -v[1]]]).collect();
    let mut facets = Vec::new();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            // normal a with a·p_i = a·p_j = 1
            let det = pts[i][0] * pts[j][1] - pts[i][1] * pts[j][0];
            if det.abs() < 1e-12 {
                continue;
            }
            let a = [(pts[j][1] - pts[i][1]) / det, (pts[i][0] - pts[j][0]) / det];
            if pts.iter().all(|p| a[0] * p[0] + a[1] * p[1] <= 1.0 + 1e-12) {
                facets.push(a);
            }
        }
    }
    facets
}

#[test]
fn gauge_matches_facet_oracle_in_the_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..40 {
        let count = rng.random_range(2..9);
        let body = SymmetricBody::random(2, count, &mut rng);
        let facets = polygon_facets(body.vertices());
        assert!(!facets.is_empty());
        for _ in 0..10 {
            let x = DVector::from_vec(vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
            let oracle = facets.iter().map(|a| a[0] * x[0] + a[1] * x[1]).fold(0.0, f64::max);
            let g = body.gauge(&x).unwrap();
            assert!((g - oracle).abs() <= 1e-9 * oracle.max(1.0), "{g} vs {oracle}");
        }
    }
}

#[test]
fn cross_polytope_gauge_by_bisection() {
    let body = SymmetricBody::cross_polytope(2);
    let x = DVector::from_vec(vec![0.5, 0.5]);
    // membership of x/t in the ℓ¹ ball, bisected on t
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..100 {
        let t = 0.5 * (lo + hi);
        if (x[0] / t).abs() + (x[1] / t).abs() <= 1.0 {
            hi = t;
        } else {
            lo = t;
        }
    }
    assert!((body.gauge(&x).unwrap() - hi).abs() < 1e-12);
    assert!((hi - 1.0).abs() < 1e-12);
}

#[test]
fn no_smaller_enclosing_ellipse_on_a_grid() {
    // enclosing e1, e2 means a ≤ 1, c ≤ 1 for A = [[a, b], [b, c]]
    let r = loewner(&SymmetricBody::cross_polytope(2), 1e-9).unwrap();
    let best = r.ellipsoid.shape().determinant();
    let steps = 81;
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..steps {
                let a = 0.05 + 1.2 * i as f64 / (steps - 1) as f64;
                let c = 0.05 + 1.2 * j as f64 / (steps - 1) as f64;
                let b = -0.6 + 1.2 * k as f64 / (steps - 1) as f64;
                let det = a * c - b * b;
                if det <= 0.0 {
                    continue;
                }
                if a <= 1.0 && c <= 1.0 {
                    // larger det is smaller volume
                    assert!(det <= best + 1e-12, "({a}, {b}, {c}) beats the optimum");
                }
            }
        }
    }
    assert!((best - 1.0).abs() < 1e-12);
}

#[test]
fn square_to_disc_hausdorff_by_dense_sweep() {
    let square = SymmetricBody::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let disc = Ellipsoid::ball(2, 2f64.sqrt()).unwrap();
    let d = hausdorff_distance(&square, &disc, &DirectionSampling::default()).unwrap();
    // support difference √2 − max(|cos|+|sin|) over a fine sweep
    let m = 100_000;
    let sweep = (0..m)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / m as f64;
            2f64.sqrt() - (t.cos().abs() + t.sin().abs())
        })
        .fold(0.0, f64::max);
    assert!((d - sweep).abs() < 1e-9);
    assert!((d - (2f64.sqrt() - 1.0)).abs() < 1e-12);
}

/// Minimum of the Rayleigh quotient `v*ρv` by inverse iteration.
fn min_rayleigh(rho: &CMatrix, rng: &mut ChaCha8Rng) -> (f64, nalgebra::DVector<C64>) {
    let n = rho.nrows();
    let lu = rho.clone().lu();
    let mut v = nalgebra::DVector::<C64>::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    v /= C64::new(v.norm(), 0.0);
    for _ in 0..400 {
        let w = lu.solve(&v).expect("faithful density is invertible");
        v = &w / C64::new(w.norm(), 0.0);
    }
    ((v.adjoint() * rho * &v)[(0, 0)].re, v)
}

/// `sup ‖a‖/φ(a)` over random positive `a` and rank-one projections onto
/// the Rayleigh minimizers of each block.
fn k_oracle(state: &State, rng: &mut ChaCha8Rng) -> f64 {
    let mut best: f64 = 0.0;
    for rho in state.densities() {
        let n = rho.nrows();
        let (q, _v) = min_rayleigh(rho, rng);
        // φ(vv*) = v*ρ_bi v and ‖vv*‖ = 1
        best = best.max(1.0 / q);
        for _ in 0..4 {
            let b = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let a = &b * b.adjoint();
            let norm = a.clone().singular_values().max();
            let phi = (rho * &a).trace().re;
            if phi > 0.0 {
                best = best.max(norm / phi);
            }
        }
    }
    best
}

fn compositions(max_total: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        for k in 1..=rest {
            cur.push(k);
            rec(rest - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(max_total, &mut Vec::new(), &mut out);
    out
}

#[test]
fn k_constant_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let comps: Vec<Vec<usize>> = compositions(8).into_iter().filter(|c| c.len() <= 4).collect();
    for t in 0..200 {
        let alg = MultiMatrixAlgebra::new(comps[t % comps.len()].clone()).unwrap();
        let s = State::random_faithful(&alg, &mut rng);
        let k = k_constant(&s);
        let o = k_oracle(&s, &mut rng);
        assert!((k - o).abs() <= 1e-6 * k, "{alg}: {k} vs {o}");
    }
}

#[test]
fn k_constant_of_diagonal_states() {
    let alg = MultiMatrixAlgebra::new(vec![3]).unwrap();
    let s = State::from_diagonals(alg, &[vec![0.25, 0.25, 0.5]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((k_oracle(&s, &mut rng) - 4.0).abs() < 1e-9);
    assert_eq!(k_constant(&s), 4.0);
}
