//! Multi-matrix algebras `M_n = M_{n₁} × ⋯ × M_{n_k}`, their states as
//! block density matrices, and Bratteli matrices of unital embeddings.
//!
//! Embeddings are kept in standard form: block `i` of the target holds, for
//! `j = 1..ℓ(m)` in order, `T_ij` consecutive diagonal copies of `M_{m_j}`.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// A state is faithful when every block density has minimum eigenvalue above
/// this floor.
pub const FAITHFUL_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiMatrixAlgebra {
    blocks: Vec<usize>,
}

impl MultiMatrixAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Composition("an algebra needs at least one block".into()));
        }
        if blocks.contains(&0) {
            return Err(Error::Composition(format!("block sizes must be positive: {blocks:?}")));
        }
        Ok(MultiMatrixAlgebra { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Number of blocks `ℓ(n)`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|n| = Σ nᵢ`, the sum of the dimensions of the irreducible
    /// representations.
    pub fn rank(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Vector-space dimension `Σ nᵢ²`.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Isomorphism type: the block sizes as a sorted multiset.
    pub fn iso_type(&self) -> Vec<usize> {
        let mut t = self.blocks.clone();
        t.sort_unstable();
        t
    }
}

impl std::fmt::Display for MultiMatrixAlgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|&n| if n == 1 { "C".to_string() } else { format!("M{n}") })
            .collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

pub fn rank(a: &MultiMatrixAlgebra) -> usize {
    a.rank()
}

/// Element `(a₁, …, a_k)` of a multi-matrix algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    blocks: Vec<CMatrix>,
}

impl Element {
    pub fn new(algebra: &MultiMatrixAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        check_blocks(algebra, &blocks)?;
        Ok(Element { blocks })
    }

    pub fn from_real(algebra: &MultiMatrixAlgebra, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(algebra, blocks.into_iter().map(|b| b.map(|x| C64::new(x, 0.0))).collect())
    }

    pub fn scalar(algebra: &MultiMatrixAlgebra, c: C64) -> Self {
        Element { blocks: algebra.blocks.iter().map(|&n| CMatrix::identity(n, n) * c).collect() }
    }

    pub fn identity(algebra: &MultiMatrixAlgebra) -> Self {
        Self::scalar(algebra, C64::new(1.0, 0.0))
    }

    pub fn zero(algebra: &MultiMatrixAlgebra) -> Self {
        Self::scalar(algebra, C64::new(0.0, 0.0))
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn composition(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Element {
        Element { blocks: self.blocks.iter().map(|b| b * C64::new(c, 0.0)).collect() }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        if self.composition() != other.composition() {
            return Err(Error::Composition("adding elements of different algebras".into()));
        }
        Ok(Element { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() })
    }

    /// Largest entrywise difference, for compatibility checks.
    pub fn distance(&self, other: &Element) -> f64 {
        if self.composition() != other.composition() {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Random positive element `b b*` with Gaussian `b`.
    pub fn random_positive<R: Rng + ?Sized>(algebra: &MultiMatrixAlgebra, rng: &mut R) -> Self {
        Element {
            blocks: algebra
                .blocks
                .iter()
                .map(|&n| {
                    let b = random_gaussian(n, rng);
                    &b * b.adjoint()
                })
                .collect(),
        }
    }
}

fn random_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn check_blocks(algebra: &MultiMatrixAlgebra, blocks: &[CMatrix]) -> Result<()> {
    if blocks.len() != algebra.len() {
        return Err(Error::Composition(format!(
            "expected {} blocks, got {}",
            algebra.len(),
            blocks.len()
        )));
    }
    for (k, (b, &n)) in blocks.iter().zip(&algebra.blocks).enumerate() {
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::Composition(format!(
                "block {k} is {}×{}, expected {n}×{n}",
                b.nrows(),
                b.ncols()
            )));
        }
    }
    Ok(())
}

fn is_diagonal(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Smallest eigenvalue of a Hermitian block.
fn min_eigenvalue(m: &CMatrix) -> f64 {
    if is_diagonal(m) {
        return m.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    }
    m.clone().symmetric_eigenvalues().min()
}

/// State `a ↦ Σᵢ Tr(ρᵢ aᵢ)` on a multi-matrix algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    algebra: MultiMatrixAlgebra,
    densities: Vec<CMatrix>,
    min_eigenvalue: f64,
}

impl State {
    /// Checks Hermitian (1e-12), positive semidefinite (eigenvalues ≥
    /// −1e-12) and total trace one (1e-12).
    pub fn new(algebra: MultiMatrixAlgebra, densities: Vec<CMatrix>) -> Result<Self> {
        check_blocks(&algebra, &densities)?;
        let mut trace = 0.0;
        let mut lam = f64::INFINITY;
        for (k, d) in densities.iter().enumerate() {
            if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::invalid(format!("density block {k} has non-finite entries")));
            }
            let skew = (d - d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if skew > HERMITIAN_TOL {
                return Err(Error::invalid(format!("density block {k} is not Hermitian ({skew:e})")));
            }
            trace += d.trace().re;
            lam = lam.min(min_eigenvalue(d));
        }
        if lam < -HERMITIAN_TOL {
            return Err(Error::invalid(format!("density has negative eigenvalue {lam:e}")));
        }
        if (trace - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::invalid(format!("total trace is {trace}, expected 1")));
        }
        Ok(State { algebra, densities, min_eigenvalue: lam })
    }

    /// State with diagonal block densities.
    pub fn from_diagonals(algebra: MultiMatrixAlgebra, diagonals: &[Vec<f64>]) -> Result<Self> {
        let densities = diagonals
            .iter()
            .map(|d| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0)))))
            .collect();
        Self::new(algebra, densities)
    }

    /// Random faithful state: `ρᵢ ∝ bᵢbᵢ* + δ I` with Gaussian `bᵢ`.
    pub fn random_faithful<R: Rng + ?Sized>(algebra: &MultiMatrixAlgebra, rng: &mut R) -> Self {
        let mut dens: Vec<CMatrix> = algebra
            .blocks
            .iter()
            .map(|&n| {
                let b = random_gaussian(n, rng);
                let delta = rng.random_range(0.05..1.0);
                &b * b.adjoint() + CMatrix::identity(n, n) * C64::new(delta, 0.0)
            })
            .collect();
        // random block weights so the trace split is not tied to block size
        for d in dens.iter_mut() {
            let w: f64 = rng.random_range(0.2..1.0);
            *d *= C64::new(w, 0.0);
        }
        let total: f64 = dens.iter().map(|d| d.trace().re).sum();
        for d in dens.iter_mut() {
            *d /= C64::new(total, 0.0);
            *d = (&*d + d.adjoint()) * C64::new(0.5, 0.0);
        }
        State::new(algebra.clone(), dens).expect("random density is a valid state")
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn densities(&self) -> &[CMatrix] {
        &self.densities
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_faithful(&self) -> bool {
        self.min_eigenvalue > FAITHFUL_TOL
    }

    /// Traces of the block densities.
    pub fn block_weights(&self) -> Vec<f64> {
        self.densities.iter().map(|d| d.trace().re).collect()
    }

    pub fn eval(&self, a: &Element) -> Result<C64> {
        check_blocks(&self.algebra, a.blocks())?;
        Ok(self
            .densities
            .iter()
            .zip(a.blocks())
            .map(|(r, x)| (r * x).trace())
            .sum())
    }

    /// `t·self + (1−t)·other` on the same algebra.
    pub fn blend(&self, other: &State, t: f64) -> Result<State> {
        if self.algebra != other.algebra {
            return Err(Error::Composition("blending states on different algebras".into()));
        }
        let dens = self
            .densities
            .iter()
            .zip(&other.densities)
            .map(|(a, b)| a * C64::new(t, 0.0) + b * C64::new(1.0 - t, 0.0))
            .collect();
        State::new(self.algebra.clone(), dens)
    }

    pub fn max_distance(&self, other: &State) -> f64 {
        if self.algebra != other.algebra {
            return f64::INFINITY;
        }
        self.densities
            .iter()
            .zip(&other.densities)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// `Σᵢ (nᵢ/|n|)·(normalized trace on M_{nᵢ})`, i.e. `ρᵢ = I/|n|`.
pub fn optimal_state(a: &MultiMatrixAlgebra) -> State {
    let r = a.rank() as f64;
    let diags: Vec<Vec<f64>> = a.blocks.iter().map(|&n| vec![1.0 / r; n]).collect();
    State::from_diagonals(a.clone(), &diags).expect("optimal state is valid")
}

/// Least `K` with `K·φ(a) ≥ ‖a‖` for all positive `a`: `1/λ_min` over the
/// block densities, `+∞` for non-faithful states.
pub fn k_constant(state: &State) -> f64 {
    if state.is_faithful() {
        1.0 / state.min_eigenvalue
    } else {
        f64::INFINITY
    }
}

/// Integer multiplicity matrix of a unital embedding `M_m ↪ M_n`
/// (`ℓ(n) × ℓ(m)`, rows indexed by target blocks).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BratteliMatrix {
    source: MultiMatrixAlgebra,
    target: MultiMatrixAlgebra,
    entries: Vec<Vec<u32>>,
}

impl BratteliMatrix {
    /// Checks the shape, unitality `Σⱼ T_ij mⱼ = nᵢ`, and injectivity (every
    /// column sum positive).
    pub fn new(source: MultiMatrixAlgebra, target: MultiMatrixAlgebra, entries: Vec<Vec<u32>>) -> Result<Self> {
        if entries.len() != target.len() || entries.iter().any(|r| r.len() != source.len()) {
            return Err(Error::Composition(format!(
                "Bratteli matrix must be {}×{}",
                target.len(),
                source.len()
            )));
        }
        for (i, row) in entries.iter().enumerate() {
            let filled: usize = row.iter().zip(&source.blocks).map(|(&t, &m)| t as usize * m).sum();
            if filled != target.blocks[i] {
                return Err(Error::Composition(format!(
                    "row {i} fills {filled} of {} (embedding is not unital)",
                    target.blocks[i]
                )));
            }
        }
        let t = BratteliMatrix { source, target, entries };
        if let Some(j) = t.column_sums().iter().position(|&c| c == 0) {
            return Err(Error::Composition(format!("source block {j} is not embedded")));
        }
        Ok(t)
    }

    pub fn identity(a: &MultiMatrixAlgebra) -> Self {
        let k = a.len();
        let entries = (0..k).map(|i| (0..k).map(|j| u32::from(i == j)).collect()).collect();
        BratteliMatrix { source: a.clone(), target: a.clone(), entries }
    }

    pub fn source(&self) -> &MultiMatrixAlgebra {
        &self.source
    }

    pub fn target(&self) -> &MultiMatrixAlgebra {
        &self.target
    }

    pub fn entries(&self) -> &[Vec<u32>] {
        &self.entries
    }

    /// `(Σᵢ T_ij)ⱼ`.
    pub fn column_sums(&self) -> Vec<u32> {
        (0..self.source.len()).map(|j| self.entries.iter().map(|r| r[j]).sum()).collect()
    }

    /// Every column has a single nonzero entry, equal to one.
    pub fn is_multiplicity_free(&self) -> bool {
        (0..self.source.len()).all(|j| {
            let col: Vec<u32> = self.entries.iter().map(|r| r[j]).collect();
            col.iter().filter(|&&x| x != 0).count() == 1 && col.iter().all(|&x| x <= 1)
        })
    }

    /// Square permutation matrix between equal compositions.
    pub fn is_isomorphism(&self) -> bool {
        self.source.rank() == self.target.rank()
            && self.source.len() == self.target.len()
            && self.is_multiplicity_free()
            && self.source.dimension() == self.target.dimension()
    }

    /// Diagonal copies `(target block, source block, offset)` in standard
    /// order.
    fn copies(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            let mut off = 0;
            for (j, &t) in row.iter().enumerate() {
                for _ in 0..t {
                    out.push((i, j, off));
                    off += self.source.blocks[j];
                }
            }
        }
        out
    }

    /// Image of `a ∈ M_m` under the standard-form embedding.
    pub fn embed(&self, a: &Element) -> Result<Element> {
        check_blocks(&self.source, a.blocks())?;
        let mut blocks: Vec<CMatrix> = self.target.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for (i, j, off) in self.copies() {
            let m = self.source.blocks[j];
            blocks[i].view_mut((off, off), (m, m)).copy_from(&a.blocks()[j]);
        }
        Ok(Element { blocks })
    }
}

pub fn column_sums(t: &BratteliMatrix) -> Vec<u32> {
    t.column_sums()
}

/// Bratteli matrix of `M_m ↪ M_{m'} ↪ M_n`: the product `T₂·T₁`.
pub fn compose_bratteli(t2: &BratteliMatrix, t1: &BratteliMatrix) -> Result<BratteliMatrix> {
    if t1.target != t2.source {
        return Err(Error::Composition(format!(
            "cannot chain {:?} → {:?} after {:?} → {:?}",
            t2.source.blocks, t2.target.blocks, t1.source.blocks, t1.target.blocks
        )));
    }
    let entries = t2
        .entries
        .iter()
        .map(|row| {
            (0..t1.source.len())
                .map(|j| row.iter().zip(&t1.entries).map(|(&a, r)| a * r[j]).sum())
                .collect()
        })
        .collect();
    BratteliMatrix::new(t1.source.clone(), t2.target.clone(), entries)
}

/// Restriction of `ψ` on `M_n` along the standard embedding of `M_m`: the
/// pinching `ρ̃ⱼ = Σ` (diagonal `mⱼ×mⱼ` sub-blocks at each copy of `M_{mⱼ}`).
pub fn restrict_state(psi: &State, t: &BratteliMatrix) -> Result<State> {
    if psi.algebra != t.target {
        return Err(Error::Composition(format!(
            "state lives on {:?}, embedding targets {:?}",
            psi.algebra.blocks, t.target.blocks
        )));
    }
    let mut dens: Vec<CMatrix> = t.source.blocks.iter().map(|&m| CMatrix::zeros(m, m)).collect();
    for (i, j, off) in t.copies() {
        let m = t.source.blocks[j];
        dens[j] += psi.densities[i].view((off, off), (m, m));
    }
    State::new(t.source.clone(), dens)
}

/// Canonical extension of a faithful `φ` on `M_m` to `M_n`: each copy of
/// `M_{mⱼ}` receives `ρⱼ / (Σᵢ T_ij)`, off-diagonal blocks vanish.
pub fn extend_state(phi: &State, t: &BratteliMatrix) -> Result<State> {
    if phi.algebra != t.source {
        return Err(Error::Composition(format!(
            "state lives on {:?}, embedding starts at {:?}",
            phi.algebra.blocks, t.source.blocks
        )));
    }
    if !phi.is_faithful() {
        return Err(Error::NotFaithful { min_eigenvalue: phi.min_eigenvalue });
    }
    let cols = t.column_sums();
    let mut dens: Vec<CMatrix> = t.target.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
    for (i, j, off) in t.copies() {
        let m = t.source.blocks[j];
        let nu = C64::new(1.0 / cols[j] as f64, 0.0);
        dens[i].view_mut((off, off), (m, m)).copy_from(&(&phi.densities[j] * nu));
    }
    State::new(t.target.clone(), dens)
}

/// `Σⱼ (colsumⱼ/|n|)·Tr_{M_{mⱼ}}`, the restriction of the optimal state of
/// the target along `t`.
pub fn optimal_restriction_by_columns(t: &BratteliMatrix) -> State {
    let r = t.target.rank() as f64;
    let diags: Vec<Vec<f64>> = t
        .column_sums()
        .iter()
        .zip(&t.source.blocks)
        .map(|(&c, &m)| vec![c as f64 / r; m])
        .collect();
    State::from_diagonals(t.source.clone(), &diags).expect("column-sum restriction is a state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alg(b: &[usize]) -> MultiMatrixAlgebra {
        MultiMatrixAlgebra::new(b.to_vec()).unwrap()
    }

    fn diag_weights(s: &State) -> Vec<f64> {
        s.densities().iter().flat_map(|d| d.diagonal().iter().map(|z| z.re).collect::<Vec<_>>()).collect()
    }

    fn t21() -> BratteliMatrix {
        BratteliMatrix::new(alg(&[1, 1]), alg(&[3]), vec![vec![2, 1]]).unwrap()
    }

    fn t12() -> BratteliMatrix {
        BratteliMatrix::new(alg(&[1, 1]), alg(&[3]), vec![vec![1, 2]]).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&alg(&[3])), 3);
        assert_eq!(rank(&alg(&[1, 1])), 2);
        assert_eq!(rank(&alg(&[1])), 1);
    }

    #[test]
    fn optimal_state_examples() {
        assert_eq!(diag_weights(&optimal_state(&alg(&[3]))), vec![1.0 / 3.0; 3]);
        assert_eq!(optimal_state(&alg(&[1, 1])).block_weights(), vec![0.5, 0.5]);
        let s = optimal_state(&alg(&[2, 1]));
        assert_eq!(diag_weights(&s), vec![1.0 / 3.0; 3]);
        assert!(s.is_faithful());
    }

    #[test]
    fn k_constant_examples() {
        assert_eq!(k_constant(&optimal_state(&alg(&[3]))), 3.0);
        let s = State::from_diagonals(alg(&[3]), &[vec![0.25, 0.25, 0.5]]).unwrap();
        assert_eq!(k_constant(&s), 4.0);
        assert_eq!(k_constant(&optimal_state(&alg(&[1, 1]))), 2.0);
        let pure = State::from_diagonals(alg(&[2]), &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(k_constant(&pure), f64::INFINITY);
    }

    #[test]
    fn restriction_examples() {
        let psi = optimal_state(&alg(&[3]));
        assert_eq!(restrict_state(&psi, &t21()).unwrap().block_weights(), vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(restrict_state(&psi, &t12()).unwrap().block_weights(), vec![1.0 / 3.0, 2.0 / 3.0]);
        let id = BratteliMatrix::identity(&alg(&[3]));
        assert_eq!(restrict_state(&psi, &id).unwrap(), psi);
    }

    #[test]
    fn extension_examples() {
        let phi = optimal_state(&alg(&[1, 1]));
        let e = extend_state(&phi, &t21()).unwrap();
        assert_eq!(diag_weights(&e), vec![0.25, 0.25, 0.5]);
        assert_eq!(k_constant(&e), 4.0);
        let e = extend_state(&phi, &t12()).unwrap();
        assert_eq!(diag_weights(&e), vec![0.5, 0.25, 0.25]);
        assert_eq!(k_constant(&e), 4.0);
        let id = BratteliMatrix::identity(&alg(&[1, 1]));
        assert_eq!(extend_state(&phi, &id).unwrap(), phi);
    }

    #[test]
    fn extension_rejects_non_faithful() {
        let phi = State::from_diagonals(alg(&[1, 1]), &[vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(extend_state(&phi, &t21()), Err(Error::NotFaithful { .. })));
    }

    #[test]
    fn column_sum_examples() {
        assert_eq!(column_sums(&t21()), vec![2, 1]);
        assert_eq!(column_sums(&t12()), vec![1, 2]);
        assert_eq!(column_sums(&BratteliMatrix::identity(&alg(&[2, 1, 3]))), vec![1, 1, 1]);
    }

    #[test]
    fn composition_examples() {
        let id2 = BratteliMatrix::identity(&alg(&[1, 1]));
        assert_eq!(compose_bratteli(&t21(), &id2).unwrap(), t21());
        let t1 = BratteliMatrix::new(alg(&[1]), alg(&[1, 1]), vec![vec![1], vec![1]]).unwrap();
        let c = compose_bratteli(&t21(), &t1).unwrap();
        assert_eq!(c.entries(), &[vec![3]]);
        assert_eq!(c.source(), &alg(&[1]));
        assert!(compose_bratteli(&t1, &t21()).is_err());
    }

    #[test]
    fn columns_restriction_examples() {
        assert_eq!(optimal_restriction_by_columns(&t21()).block_weights(), vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(optimal_restriction_by_columns(&t12()).block_weights(), vec![1.0 / 3.0, 2.0 / 3.0]);
        let a = alg(&[2, 1]);
        assert_eq!(optimal_restriction_by_columns(&BratteliMatrix::identity(&a)), optimal_state(&a));
    }

    #[test]
    fn unitality_is_enforced() {
        // (1,1) → (2,1) with the identity pattern does not fill block 0
        let r = BratteliMatrix::new(alg(&[1, 1]), alg(&[2, 1]), vec![vec![1, 0], vec![0, 1]]);
        assert!(matches!(r, Err(Error::Composition(_))));
        let r = BratteliMatrix::new(alg(&[1, 1]), alg(&[2]), vec![vec![2, 0]]);
        assert!(matches!(r, Err(Error::Composition(_))));
        assert!(MultiMatrixAlgebra::new(vec![]).is_err());
        assert!(MultiMatrixAlgebra::new(vec![2, 0]).is_err());
    }

    #[test]
    fn embedding_places_copies_in_order() {
        let a = Element::from_real(
            &alg(&[1, 1]),
            vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 0.0)],
        )
        .unwrap();
        let img = t21().embed(&a).unwrap();
        let d: Vec<f64> = img.blocks()[0].diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![1.0, 1.0, 0.0]);
        let img = t12().embed(&a).unwrap();
        let d: Vec<f64> = img.blocks()[0].diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn restriction_is_the_pullback_of_the_functional() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        use rand::SeedableRng;
        let t = BratteliMatrix::new(alg(&[2, 1]), alg(&[4, 3]), vec![vec![1, 2], vec![1, 1]]).unwrap();
        let psi = State::random_faithful(t.target(), &mut rng);
        let phi = restrict_state(&psi, &t).unwrap();
        for _ in 0..5 {
            let a = Element::random_positive(t.source(), &mut rng);
            let lhs = phi.eval(&a).unwrap();
            let rhs = psi.eval(&t.embed(&a).unwrap()).unwrap();
            assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(State::from_diagonals(alg(&[2]), &[vec![0.5, 0.4]]).is_err());
        assert!(State::from_diagonals(alg(&[2]), &[vec![1.5, -0.5]]).is_err());
        let mut m = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(State::new(alg(&[2]), vec![m]).is_err());
    }
}
