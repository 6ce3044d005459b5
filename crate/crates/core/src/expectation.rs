//! Stratified subhomogeneous C*-bundles over an interval and conditional
//! expectations onto the base function algebra.
//!
//! A bundle is a tiling of `[a, b]` by generic intervals carrying a fixed
//! multi-matrix fiber, separated by exceptional points with smaller fibers.
//! Each exceptional point embeds into its neighbors through a Bratteli
//! matrix (its germ on that side). An expectation is a field of faithful
//! states `x ↦ φ_x`, sampled on a grid; its index is `sup_x K(φ_x)`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::multimatrix::{
    extend_state, k_constant, optimal_restriction_by_columns, optimal_state, BratteliMatrix, CMatrix, Element,
    MultiMatrixAlgebra, State, C64,
};
use crate::{Error, Exec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericSpec {
    pub span: [f64; 2],
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalSpec {
    pub point: f64,
    pub blocks: Vec<usize>,
    pub germs: Vec<(Side, Vec<Vec<u32>>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericInterval {
    pub span: [f64; 2],
    pub algebra: MultiMatrixAlgebra,
}

impl GenericInterval {
    pub fn len(&self) -> f64 {
        self.span[1] - self.span[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.span[0] + self.span[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalPoint {
    pub point: f64,
    pub algebra: MultiMatrixAlgebra,
    /// Germ into the generic interval ending at `point`.
    pub left: Option<BratteliMatrix>,
    /// Germ into the generic interval starting at `point`.
    pub right: Option<BratteliMatrix>,
}

impl ExceptionalPoint {
    pub fn germs(&self) -> impl Iterator<Item = (Side, &BratteliMatrix)> {
        [(Side::Left, &self.left), (Side::Right, &self.right)]
            .into_iter()
            .filter_map(|(s, g)| g.as_ref().map(|g| (s, g)))
    }

    pub fn germ(&self, side: Side) -> Option<&BratteliMatrix> {
        match side {
            Side::Left => self.left.as_ref(),
            Side::Right => self.right.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedBundle {
    interval: [f64; 2],
    generic: Vec<GenericInterval>,
    exceptional: Vec<ExceptionalPoint>,
}

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

impl StratifiedBundle {
    /// Validates the tiling and the germs. Exceptional points whose germs are
    /// all isomorphisms onto identical neighbors are removed and their
    /// neighboring intervals merged.
    pub fn from_spec(interval: [f64; 2], generic: &[GenericSpec], exceptional: &[ExceptionalSpec]) -> Result<Self> {
        let [a, b] = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return fail(format!("interval [{a}, {b}] is not a proper interval"));
        }
        if generic.is_empty() {
            return fail("at least one generic interval is required");
        }
        let mut gens = Vec::with_capacity(generic.len());
        for (k, g) in generic.iter().enumerate() {
            let [s, e] = g.span;
            if !(s.is_finite() && e.is_finite() && s < e) {
                return fail(format!("generic interval {k} has empty span [{s}, {e}]"));
            }
            let algebra = MultiMatrixAlgebra::new(g.blocks.clone())
                .map_err(|e| Error::Invalid(format!("generic interval {k}: {e}")))?;
            gens.push(GenericInterval { span: g.span, algebra });
        }
        if gens[0].span[0] != a || gens[gens.len() - 1].span[1] != b {
            return fail(format!("generic intervals must cover [{a}, {b}] from end to end"));
        }
        for k in 1..gens.len() {
            if gens[k - 1].span[1] != gens[k].span[0] {
                return fail(format!(
                    "generic intervals {} and {k} do not meet ({} vs {})",
                    k - 1,
                    gens[k - 1].span[1],
                    gens[k].span[0]
                ));
            }
        }
        if exceptional.windows(2).any(|w| w[1].point <= w[0].point) {
            return fail("exceptional points must be strictly increasing");
        }
        // every interior junction must carry an exceptional point
        for g in &gens[1..] {
            let x = g.span[0];
            if !exceptional.iter().any(|p| p.point == x) {
                return fail(format!("junction at x = {x} has no exceptional point"));
            }
        }

        let mut exc = Vec::with_capacity(exceptional.len());
        for (k, p) in exceptional.iter().enumerate() {
            let x = p.point;
            let left = gens.iter().position(|g| g.span[1] == x);
            let right = gens.iter().position(|g| g.span[0] == x);
            if left.is_none() && right.is_none() {
                return fail(format!("exceptional point {k} at x = {x} is not at a junction or endpoint"));
            }
            let algebra = MultiMatrixAlgebra::new(p.blocks.clone())
                .map_err(|e| Error::Invalid(format!("exceptional point {k}: {e}")))?;
            let germ = |side: Side, neighbor: Option<usize>| -> Result<Option<BratteliMatrix>> {
                let given: Vec<&Vec<Vec<u32>>> =
                    p.germs.iter().filter(|(s, _)| *s == side).map(|(_, m)| m).collect();
                match (neighbor, given.as_slice()) {
                    (None, []) => Ok(None),
                    (None, _) => fail(format!("exceptional point {k} has a {side:?} germ but no {side:?} neighbor")),
                    (Some(_), []) => fail(format!("exceptional point {k} is missing its {side:?} germ")),
                    (Some(g), [m]) => BratteliMatrix::new(algebra.clone(), gens[g].algebra.clone(), (*m).clone())
                        .map(Some)
                        .map_err(|e| Error::Invalid(format!("exceptional point {k}, {side:?} germ: {e}"))),
                    (Some(_), _) => fail(format!("exceptional point {k} has several {side:?} germs")),
                }
            };
            let left_germ = germ(Side::Left, left)?;
            let right_germ = germ(Side::Right, right)?;
            exc.push(ExceptionalPoint { point: x, algebra, left: left_germ, right: right_germ });
        }

        // normalize away points that are not genuinely exceptional
        let mut k = 0;
        while k < exc.len() {
            let isos: Vec<bool> = exc[k].germs().map(|(_, g)| g.is_isomorphism()).collect();
            if isos.iter().all(|&i| i) {
                let x = exc[k].point;
                let left = gens.iter().position(|g| g.span[1] == x);
                let right = gens.iter().position(|g| g.span[0] == x);
                if let (Some(l), Some(r)) = (left, right) {
                    if gens[l].algebra != gens[r].algebra {
                        return fail(format!(
                            "point x = {x} has isomorphic germs into differently ordered fibers"
                        ));
                    }
                    gens[l].span[1] = gens[r].span[1];
                    gens.remove(r);
                }
                exc.remove(k);
                continue;
            }
            if isos.iter().any(|&i| i) {
                return fail(format!(
                    "exceptional point x = {} must be strictly smaller than both neighbors",
                    exc[k].point
                ));
            }
            k += 1;
        }
        Ok(StratifiedBundle { interval, generic: gens, exceptional: exc })
    }

    /// Two generic intervals `[−1, 0]`, `[0, 1]` glued at an exceptional
    /// point `0` through `left` and `right`.
    pub fn two_sided(left: &BratteliMatrix, right: &BratteliMatrix) -> Result<Self> {
        if left.source() != right.source() {
            return Err(Error::Composition("germs have different sources".into()));
        }
        Self::from_spec(
            [-1.0, 1.0],
            &[
                GenericSpec { span: [-1.0, 0.0], blocks: left.target().blocks().to_vec() },
                GenericSpec { span: [0.0, 1.0], blocks: right.target().blocks().to_vec() },
            ],
            &[ExceptionalSpec {
                point: 0.0,
                blocks: left.source().blocks().to_vec(),
                germs: vec![(Side::Left, left.entries().to_vec()), (Side::Right, right.entries().to_vec())],
            }],
        )
    }

    pub fn interval(&self) -> [f64; 2] {
        self.interval
    }

    pub fn generic(&self) -> &[GenericInterval] {
        &self.generic
    }

    pub fn exceptional(&self) -> &[ExceptionalPoint] {
        &self.exceptional
    }

    pub fn all_germs(&self) -> impl Iterator<Item = &BratteliMatrix> {
        self.exceptional.iter().flat_map(|p| p.germs().map(|(_, g)| g))
    }

    fn exceptional_at(&self, x: f64) -> Option<usize> {
        self.exceptional.iter().position(|p| p.point == x)
    }
}

/// `r(A)`: the largest fiber rank.
pub fn bundle_rank(b: &StratifiedBundle) -> usize {
    b.generic
        .iter()
        .map(|g| g.algebra.rank())
        .chain(b.exceptional.iter().map(|p| p.algebra.rank()))
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prescribed {
    pub point: f64,
    pub column_sums: Vec<u32>,
    /// Block traces of the prescribed state.
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: f64,
    pub index: usize,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Yes { prescribed: Vec<Prescribed> },
    No { witness: Witness },
    HypothesisFailure { reason: String },
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No { .. })
    }
}

/// Existence of an expectation whose index equals the rank: the generic
/// fibers must all have full rank and, at every exceptional point, the germs
/// on both sides must have equal column-sum tuples.
pub fn check_optimal(b: &StratifiedBundle) -> Verdict {
    let r = bundle_rank(b);
    if let Some(g) = b.generic.iter().find(|g| g.algebra.rank() != r) {
        return Verdict::HypothesisFailure {
            reason: format!(
                "generic fiber {} on [{}, {}] has rank {} below the bundle rank {r}",
                g.algebra,
                g.span[0],
                g.span[1],
                g.algebra.rank()
            ),
        };
    }
    let mut prescribed = Vec::with_capacity(b.exceptional.len());
    for (index, p) in b.exceptional.iter().enumerate() {
        let (left, right) = (p.left.as_ref(), p.right.as_ref());
        if let (Some(l), Some(rt)) = (left, right) {
            if l.column_sums() != rt.column_sums() {
                return Verdict::No {
                    witness: Witness { point: p.point, index, left: l.column_sums(), right: rt.column_sums() },
                };
            }
        }
        let g = left.or(right).expect("exceptional point has a germ");
        let state = optimal_restriction_by_columns(g);
        prescribed.push(Prescribed {
            point: p.point,
            column_sums: g.column_sums(),
            weights: state.block_weights(),
            state,
        });
    }
    Verdict::Yes { prescribed }
}

/// Every germ has singleton columns with entry one.
pub fn check_multiplicity_free(b: &StratifiedBundle) -> bool {
    b.all_germs().all(|g| g.is_multiplicity_free())
}

/// Whether the optimal traces of the two targets agree on the common source.
pub fn check_pullback_cone(i0: &BratteliMatrix, i1: &BratteliMatrix) -> Verdict {
    if i0.source() != i1.source() {
        return Verdict::HypothesisFailure {
            reason: format!("germs start at {} and {}", i0.source(), i1.source()),
        };
    }
    let (r0, r1) = (i0.target().rank(), i1.target().rank());
    if r0 != r1 {
        return Verdict::HypothesisFailure { reason: format!("target ranks differ: {r0} vs {r1}") };
    }
    let s0 = optimal_restriction_by_columns(i0);
    let s1 = optimal_restriction_by_columns(i1);
    if s0.max_distance(&s1) <= 1e-12 {
        Verdict::Yes {
            prescribed: vec![Prescribed {
                point: 0.0,
                column_sums: i0.column_sums(),
                weights: s0.block_weights(),
                state: s0,
            }],
        }
    } else {
        Verdict::No {
            witness: Witness { point: 0.0, index: 0, left: i0.column_sums(), right: i1.column_sums() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Blend,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stratum {
    Generic { interval: usize },
    Exceptional { point: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSample {
    pub x: f64,
    pub stratum: Stratum,
    /// For the end samples of a generic interval at an exceptional point:
    /// that point's index and the side of it the sample lies on.
    pub limit: Option<(usize, Side)>,
    #[serde(skip)]
    pub state: State,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberClass {
    pub blocks: Vec<usize>,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub mode: Mode,
    pub spacing: f64,
    pub classes: Vec<FiberClass>,
    pub samples: Vec<GridSample>,
    pub k_value: f64,
}

impl Expectation {
    pub fn recompute_k(&mut self) {
        for s in &mut self.samples {
            s.k = k_constant(&s.state);
        }
        self.k_value = self.samples.iter().map(|s| s.k).fold(0.0, f64::max);
    }
}

/// Fiber types ordered by germ containment: a type has class 0 when no germ
/// lands in it, otherwise one more than the largest class embedding into it.
pub fn fiber_classes(b: &StratifiedBundle) -> Vec<FiberClass> {
    let mut class: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for g in &b.generic {
        class.insert(g.algebra.blocks().to_vec(), 0);
    }
    for p in &b.exceptional {
        class.insert(p.algebra.blocks().to_vec(), 0);
    }
    let edges: Vec<(Vec<usize>, Vec<usize>)> = b
        .all_germs()
        .map(|g| (g.source().blocks().to_vec(), g.target().blocks().to_vec()))
        .collect();
    // germs strictly increase rank, so this relaxation stabilizes
    loop {
        let mut changed = false;
        for (s, t) in &edges {
            let want = class[s] + 1;
            if class[t] < want {
                class.insert(t.clone(), want);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<FiberClass> = class.into_iter().map(|(blocks, class)| FiberClass { blocks, class }).collect();
    out.sort_by(|a, b| a.class.cmp(&b.class).then_with(|| a.blocks.cmp(&b.blocks)));
    out
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    x: f64,
    stratum: Stratum,
    limit: Option<(usize, Side)>,
}

fn grid_slots(b: &StratifiedBundle, h: f64) -> Result<Vec<Slot>> {
    if !(h.is_finite() && h > 0.0) {
        return fail(format!("grid spacing {h} must be positive"));
    }
    let shortest = b.generic.iter().map(|g| g.len()).fold(f64::INFINITY, f64::min);
    if h > shortest {
        return fail(format!("grid spacing {h} exceeds the shortest generic interval ({shortest})"));
    }
    let mut slots = Vec::new();
    for (gi, g) in b.generic.iter().enumerate() {
        let [s, e] = g.span;
        let start_exc = b.exceptional_at(s);
        if let Some(p) = start_exc {
            if gi == 0 {
                slots.push(Slot { x: s, stratum: Stratum::Exceptional { point: p }, limit: None });
            }
        }
        let n = ((e - s) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 0..=n {
            let x = if k == n { e } else { s + (e - s) * k as f64 / n as f64 };
            let limit = match k {
                0 => start_exc.map(|p| (p, Side::Right)),
                _ if k == n => b.exceptional_at(e).map(|p| (p, Side::Left)),
                _ => None,
            };
            slots.push(Slot { x, stratum: Stratum::Generic { interval: gi }, limit });
        }
        if let Some(p) = b.exceptional_at(e) {
            slots.push(Slot { x: e, stratum: Stratum::Exceptional { point: p }, limit: None });
        }
    }
    Ok(slots)
}

/// Builds a field of faithful states on a grid of spacing at most `h`.
///
/// `Blend`: exceptional points carry the optimal state of their fiber; on a
/// generic interval the state moves linearly from the canonical extension of
/// the endpoint state through the germ to the generic optimal state at the
/// midpoint. `Optimal`: requires a Yes verdict and uses the column-sum states
/// at exceptional points and optimal states elsewhere, so the index equals
/// the bundle rank.
pub fn build_expectation(b: &StratifiedBundle, h: f64, mode: Mode) -> Result<Expectation> {
    build_expectation_with(b, h, mode, Exec::default())
}

pub fn build_expectation_with(b: &StratifiedBundle, h: f64, mode: Mode, exec: Exec) -> Result<Expectation> {
    let classes = fiber_classes(b);
    let slots = grid_slots(b, h)?;

    let point_states: Vec<State> = match mode {
        Mode::Blend => b.exceptional.iter().map(|p| optimal_state(&p.algebra)).collect(),
        Mode::Optimal => match check_optimal(b) {
            Verdict::Yes { prescribed } => prescribed.into_iter().map(|p| p.state).collect(),
            Verdict::No { witness } => {
                return Err(Error::NoOptimal { point: witness.point, left: witness.left, right: witness.right })
            }
            Verdict::HypothesisFailure { reason } => return Err(Error::Hypothesis(reason)),
        },
    };

    // endpoint anchors per generic interval
    let mut anchors: Vec<[State; 2]> = Vec::with_capacity(b.generic.len());
    for g in &b.generic {
        let opt = optimal_state(&g.algebra);
        let anchor = |x: f64, side: Side| -> Result<State> {
            match (mode, b.exceptional_at(x)) {
                (Mode::Blend, Some(p)) => {
                    let germ = b.exceptional[p].germ(side).expect("germ toward neighbor");
                    extend_state(&point_states[p], germ)
                }
                _ => Ok(opt.clone()),
            }
        };
        anchors.push([anchor(g.span[0], Side::Right)?, anchor(g.span[1], Side::Left)?]);
    }

    let samples = exec.try_map(&slots, |slot| {
        let state = match slot.stratum {
            Stratum::Exceptional { point } => point_states[point].clone(),
            Stratum::Generic { interval } => {
                let g = &b.generic[interval];
                let opt = optimal_state(&g.algebra);
                let [s, e] = g.span;
                let m = g.midpoint();
                let (anchor, w) = if slot.x <= m {
                    (&anchors[interval][0], (slot.x - s) / (m - s))
                } else {
                    (&anchors[interval][1], (e - slot.x) / (e - m))
                };
                anchor.blend(&opt, 1.0 - w)?
            }
        };
        if !state.is_faithful() {
            return Err(Error::NotFaithful { min_eigenvalue: state.min_eigenvalue() });
        }
        let k = k_constant(&state);
        Ok(GridSample { x: slot.x, stratum: slot.stratum, limit: slot.limit, state, k })
    })?;
    let k_value = samples.iter().map(|s| s.k).fold(0.0, f64::max);
    Ok(Expectation { mode, spacing: h, classes, samples, k_value })
}

/// Grid values `s(x) ∈ A_x` of a section, one per expectation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub values: Vec<Element>,
    /// Declared bound on the compatibility residual at exceptional points.
    pub modulus: f64,
}

impl Section {
    /// Section sampled from a closure on the expectation's grid.
    pub fn from_fn(e: &Expectation, modulus: f64, f: impl Fn(&GridSample) -> Element) -> Self {
        Section { values: e.samples.iter().map(f).collect(), modulus }
    }

    /// Constant scalar section `c·1`.
    pub fn scalar(e: &Expectation, c: C64) -> Self {
        Self::from_fn(e, 0.0, |s| Element::scalar(s.state.algebra(), c))
    }

    /// Section that is affine on every generic interval, given its end values
    /// per interval and its values at the exceptional points.
    pub fn piecewise_linear(
        b: &StratifiedBundle,
        e: &Expectation,
        ends: &[[Element; 2]],
        points: &[Element],
        modulus: f64,
    ) -> Result<Self> {
        if ends.len() != b.generic.len() || points.len() != b.exceptional.len() {
            return fail(format!(
                "section needs {} interval pieces and {} point values",
                b.generic.len(),
                b.exceptional.len()
            ));
        }
        let values = e
            .samples
            .iter()
            .map(|s| match s.stratum {
                Stratum::Exceptional { point } => Ok(points[point].clone()),
                Stratum::Generic { interval } => {
                    let [x0, x1] = b.generic[interval].span;
                    let t = (s.x - x0) / (x1 - x0);
                    ends[interval][0].scale(1.0 - t).add(&ends[interval][1].scale(t))
                }
            })
            .collect::<Result<_>>()?;
        let section = Section { values, modulus };
        section.check_compatible(b, e)?;
        Ok(section)
    }

    /// Largest distance between a one-sided limit sample and the germ image of
    /// the value at the exceptional point.
    pub fn compatibility_residual(&self, b: &StratifiedBundle, e: &Expectation) -> Result<f64> {
        if self.values.len() != e.samples.len() {
            return fail(format!("section has {} values for {} grid samples", self.values.len(), e.samples.len()));
        }
        let mut worst: f64 = 0.0;
        for (k, s) in e.samples.iter().enumerate() {
            if self.values[k].composition() != s.state.algebra().blocks() {
                return Err(Error::Composition(format!("section value {k} lives in the wrong fiber")));
            }
            if let Some((p, side)) = s.limit {
                let at_point = e
                    .samples
                    .iter()
                    .position(|q| q.stratum == Stratum::Exceptional { point: p })
                    .expect("grid holds every exceptional point");
                let germ = b.exceptional[p].germ(side).expect("limit sample has a germ");
                let image = germ.embed(&self.values[at_point])?;
                worst = worst.max(image.distance(&self.values[k]));
            }
        }
        Ok(worst)
    }

    pub fn check_compatible(&self, b: &StratifiedBundle, e: &Expectation) -> Result<()> {
        let r = self.compatibility_residual(b, e)?;
        if r > self.modulus {
            return fail(format!("section compatibility residual {r:e} exceeds modulus {:e}", self.modulus));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    /// Largest change between consecutive grid samples.
    pub modulus: f64,
}

/// `x ↦ φ_x(s(x))` on the grid.
pub fn evaluate_expectation(e: &Expectation, s: &Section) -> Result<Evaluation> {
    if s.values.len() != e.samples.len() {
        return fail(format!("section has {} values for {} grid samples", s.values.len(), e.samples.len()));
    }
    let vals: Vec<C64> = e
        .samples
        .iter()
        .zip(&s.values)
        .map(|(g, v)| g.state.eval(v))
        .collect::<Result<_>>()?;
    let modulus = vals.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
    Ok(Evaluation {
        x: e.samples.iter().map(|g| g.x).collect(),
        values: vals.iter().map(|z| [z.re, z.im]).collect(),
        modulus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyFailure {
    pub sample: usize,
    pub x: f64,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub k_used: f64,
    pub samples_per_point: usize,
    /// `max |φ_x(1) − 1|`.
    pub unit_defect: f64,
    /// `max |φ_x(c·1) − c|` over a few scalars.
    pub scalar_defect: f64,
    /// Smallest `φ_x(a)` over tested positive `a` with `‖a‖ = 1`.
    pub min_positive_value: f64,
    /// Largest `‖a‖ / φ_x(a)` seen.
    pub max_index_ratio: f64,
    pub failure: Option<VerifyFailure>,
}

const UNIT_TOL: f64 = 1e-12;
const INDEX_TOL: f64 = 1e-9;

/// Fiberwise expectation axioms: unitality, positivity on random positive
/// elements and the index inequality `K·φ_x(a) ≥ ‖a‖`, which is also tested
/// on every rank-one spectral projection of each density.
pub fn verify_expectation(e: &Expectation, samples: usize, seed: u64, k: Option<f64>) -> VerifyReport {
    let k_used = k.unwrap_or(e.k_value);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        passed: true,
        k_used,
        samples_per_point: samples,
        unit_defect: 0.0,
        scalar_defect: 0.0,
        min_positive_value: f64::INFINITY,
        max_index_ratio: 0.0,
        failure: None,
    };
    let record = |report: &mut VerifyReport, idx: usize, x: f64, check: &'static str, detail: String| {
        if report.failure.is_none() {
            report.failure = Some(VerifyFailure { sample: idx, x, check, detail });
        }
        report.passed = false;
    };

    for (idx, g) in e.samples.iter().enumerate() {
        let alg = g.state.algebra();
        let one = g.state.eval(&Element::identity(alg)).expect("same algebra");
        let d = (one - C64::new(1.0, 0.0)).norm();
        report.unit_defect = report.unit_defect.max(d);
        if d > UNIT_TOL {
            record(&mut report, idx, g.x, "unital", format!("φ(1) = {one}"));
        }
        for c in [-2.5, 0.5, 3.0] {
            let v = g.state.eval(&Element::scalar(alg, C64::new(c, 0.0))).expect("same algebra");
            let d = (v - C64::new(c, 0.0)).norm();
            report.scalar_defect = report.scalar_defect.max(d);
            if d > UNIT_TOL * c.abs().max(1.0) {
                record(&mut report, idx, g.x, "scalar", format!("φ({c}·1) = {v}"));
            }
        }

        let mut tests: Vec<Element> = spectral_projections(&g.state);
        tests.extend((0..samples).map(|_| Element::random_positive(alg, &mut rng)));
        for a in tests {
            let norm = a.norm();
            if norm == 0.0 {
                continue;
            }
            let v = g.state.eval(&a).expect("same algebra").re / norm;
            report.min_positive_value = report.min_positive_value.min(v);
            if v < -UNIT_TOL {
                record(&mut report, idx, g.x, "positive", format!("φ(a)/‖a‖ = {v:e}"));
            }
            let ratio = if v > 0.0 { 1.0 / v } else { f64::INFINITY };
            report.max_index_ratio = report.max_index_ratio.max(ratio);
            if k_used * v < 1.0 - INDEX_TOL {
                record(
                    &mut report,
                    idx,
                    g.x,
                    "index",
                    format!("K·φ(a) = {:.12} < ‖a‖ for K = {k_used}", k_used * v),
                );
            }
        }
    }
    report
}

/// Rank-one projections onto eigenvectors of each block density.
fn spectral_projections(state: &State) -> Vec<Element> {
    let alg = state.algebra();
    let mut out = Vec::new();
    for (bi, rho) in state.densities().iter().enumerate() {
        let n = rho.nrows();
        let eig = rho.clone().symmetric_eigen();
        for c in 0..n {
            let v: DVector<C64> = eig.eigenvectors.column(c).into_owned();
            let mut blocks: Vec<CMatrix> = alg.blocks().iter().map(|&m| CMatrix::zeros(m, m)).collect();
            blocks[bi] = &v * v.adjoint();
            out.push(Element::new(alg, blocks).expect("block shapes match"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn paper_example() -> StratifiedBundle {
        StratifiedBundle::from_spec(
            [-1.0, 1.0],
            &[
                GenericSpec { span: [-1.0, 0.0], blocks: vec![3] },
                GenericSpec { span: [0.0, 1.0], blocks: vec![3] },
            ],
            &[ExceptionalSpec {
                point: 0.0,
                blocks: vec![1, 1],
                germs: vec![(Side::Left, vec![vec![2, 1]]), (Side::Right, vec![vec![1, 2]])],
            }],
        )
        .unwrap()
    }

    fn two_germ(left: Vec<Vec<u32>>, right: Vec<Vec<u32>>, generic: Vec<usize>, exc: Vec<usize>) -> Result<StratifiedBundle> {
        StratifiedBundle::from_spec(
            [-1.0, 1.0],
            &[
                GenericSpec { span: [-1.0, 0.0], blocks: generic.clone() },
                GenericSpec { span: [0.0, 1.0], blocks: generic },
            ],
            &[ExceptionalSpec { point: 0.0, blocks: exc, germs: vec![(Side::Left, left), (Side::Right, right)] }],
        )
    }

    fn constant_m2() -> StratifiedBundle {
        StratifiedBundle::from_spec([0.0, 1.0], &[GenericSpec { span: [0.0, 1.0], blocks: vec![2] }], &[]).unwrap()
    }

    fn real_diag(alg: &MultiMatrixAlgebra, d: &[&[f64]]) -> Element {
        let blocks = d
            .iter()
            .map(|v| nalgebra::DMatrix::from_diagonal(&DVector::from_column_slice(v)))
            .collect();
        Element::from_real(alg, blocks).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(bundle_rank(&paper_example()), 3);
        assert_eq!(bundle_rank(&constant_m2()), 2);
        let comm = two_germ(
            vec![vec![1, 0], vec![1, 0], vec![0, 1]],
            vec![vec![1, 0], vec![0, 1], vec![0, 1]],
            vec![1, 1, 1],
            vec![1, 1],
        )
        .unwrap();
        assert!(check_optimal(&comm).is_no());
        assert_eq!(bundle_rank(&comm), 3);
    }

    #[test]
    fn check_examples() {
        match check_optimal(&paper_example()) {
            Verdict::No { witness } => {
                assert_eq!(witness.left, vec![2, 1]);
                assert_eq!(witness.right, vec![1, 2]);
                assert_eq!(witness.point, 0.0);
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(check_optimal(&constant_m2()), Verdict::Yes { prescribed: vec![] });
        let yes = two_germ(vec![vec![2, 1]], vec![vec![2, 1]], vec![3], vec![1, 1]).unwrap();
        match check_optimal(&yes) {
            Verdict::Yes { prescribed } => assert_eq!(prescribed[0].weights, vec![2.0 / 3.0, 1.0 / 3.0]),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn multiplicity_free_examples() {
        assert!(check_multiplicity_free(&constant_m2()));
        assert!(!check_multiplicity_free(&paper_example()));
        let mf = two_germ(vec![vec![1, 1]], vec![vec![1, 1]], vec![2], vec![1, 1]).unwrap();
        assert!(check_multiplicity_free(&mf));
        assert!(check_optimal(&mf).is_yes());
    }

    #[test]
    fn pullback_cone_examples() {
        let alg = |b: &[usize]| MultiMatrixAlgebra::new(b.to_vec()).unwrap();
        let t21 = BratteliMatrix::new(alg(&[1, 1]), alg(&[3]), vec![vec![2, 1]]).unwrap();
        let t12 = BratteliMatrix::new(alg(&[1, 1]), alg(&[3]), vec![vec![1, 2]]).unwrap();
        assert!(check_pullback_cone(&t21, &t12).is_no());
        assert!(check_pullback_cone(&t21, &t21).is_yes());
        let c0 = BratteliMatrix::new(alg(&[1, 1]), alg(&[1, 1, 1]), vec![vec![1, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let c1 = BratteliMatrix::new(alg(&[1, 1]), alg(&[1, 1, 1]), vec![vec![1, 0], vec![0, 1], vec![0, 1]]).unwrap();
        assert!(check_pullback_cone(&c0, &c1).is_no());
        let m2 = BratteliMatrix::new(alg(&[1, 1]), alg(&[2]), vec![vec![1, 1]]).unwrap();
        assert!(matches!(check_pullback_cone(&t21, &m2), Verdict::HypothesisFailure { .. }));
        // agrees with the two-sided bundle check
        for (a, b) in [(&t21, &t12), (&t21, &t21), (&c0, &c1), (&c0, &c0)] {
            let bundle = StratifiedBundle::two_sided(a, b).unwrap();
            assert_eq!(check_pullback_cone(a, b).is_yes(), check_optimal(&bundle).is_yes());
        }
    }

    #[test]
    fn blend_on_paper_example_has_index_four() {
        let e = build_expectation(&paper_example(), 0.1, Mode::Blend).unwrap();
        assert_eq!(e.k_value, 4.0);
        let mids: Vec<f64> = e.samples.iter().filter(|s| s.x == -0.5 || s.x == 0.5).map(|s| s.k).collect();
        assert_eq!(mids.len(), 2);
        for k in mids {
            assert!((k - 3.0).abs() < 1e-12);
        }
        let r = verify_expectation(&e, 8, 0, None);
        assert!(r.passed, "{r:?}");
        assert!(e.k_value > 3.0 + 1e-9);
    }

    #[test]
    fn optimal_mode_examples() {
        let e = build_expectation(&constant_m2(), 0.25, Mode::Optimal).unwrap();
        assert_eq!(e.k_value, 2.0);
        let yes = two_germ(vec![vec![2, 1]], vec![vec![2, 1]], vec![3], vec![1, 1]).unwrap();
        let e = build_expectation(&yes, 0.25, Mode::Optimal).unwrap();
        assert_eq!(e.k_value, 3.0);
        match build_expectation(&paper_example(), 0.25, Mode::Optimal) {
            Err(Error::NoOptimal { left, right, .. }) => {
                assert_eq!((left, right), (vec![2, 1], vec![1, 2]));
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn verify_index_threshold_on_m2() {
        let e = build_expectation(&constant_m2(), 0.25, Mode::Optimal).unwrap();
        assert!(verify_expectation(&e, 4, 1, Some(2.0)).passed);
        let r = verify_expectation(&e, 4, 1, Some(2.0 - 1e-6));
        assert!(!r.passed);
        assert_eq!(r.failure.unwrap().check, "index");
    }

    #[test]
    fn injected_non_faithful_state_fails() {
        let mut e = build_expectation(&paper_example(), 0.25, Mode::Blend).unwrap();
        let alg = e.samples[1].state.algebra().clone();
        e.samples[1].state = State::from_diagonals(alg, &[vec![0.5, 0.5, 0.0]]).unwrap();
        let r = verify_expectation(&e, 4, 0, None);
        assert!(!r.passed);
        let f = r.failure.unwrap();
        assert_eq!((f.sample, f.check), (1, "index"));
    }

    #[test]
    fn scalar_sections_evaluate_to_constants() {
        let e = build_expectation(&paper_example(), 0.2, Mode::Blend).unwrap();
        for c in [1.0, 0.0] {
            let ev = evaluate_expectation(&e, &Section::scalar(&e, C64::new(c, 0.0))).unwrap();
            assert!(ev.values.iter().all(|v| (v[0] - c).abs() < 1e-14 && v[1] == 0.0));
        }
    }

    #[test]
    fn paper_section_is_continuous_at_the_exceptional_point() {
        let b = paper_example();
        let m3 = MultiMatrixAlgebra::new(vec![3]).unwrap();
        let c2 = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let mut previous = f64::INFINITY;
        for h in [0.2, 0.1, 0.05] {
            let e = build_expectation(&b, h, Mode::Blend).unwrap();
            let ends = [
                [real_diag(&m3, &[&[0.0, 1.0, 1.0]]), real_diag(&m3, &[&[1.0, 1.0, 0.0]])],
                [real_diag(&m3, &[&[1.0, 0.0, 0.0]]), real_diag(&m3, &[&[0.0, 0.0, 1.0]])],
            ];
            let s = Section::piecewise_linear(&b, &e, &ends, &[real_diag(&c2, &[&[1.0], &[0.0]])], 1e-12).unwrap();
            let ev = evaluate_expectation(&e, &s).unwrap();
            let at0: Vec<f64> = ev.x.iter().zip(&ev.values).filter(|(x, _)| **x == 0.0).map(|(_, v)| v[0]).collect();
            assert_eq!(at0.len(), 3);
            for v in at0 {
                assert!((v - 0.5).abs() < 1e-15, "{v}");
            }
            assert!(ev.modulus < previous);
            previous = ev.modulus;
        }
    }

    #[test]
    fn incompatible_sections_are_rejected() {
        let b = paper_example();
        let e = build_expectation(&b, 0.5, Mode::Blend).unwrap();
        let m3 = MultiMatrixAlgebra::new(vec![3]).unwrap();
        let c2 = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let one = real_diag(&m3, &[&[1.0, 1.0, 1.0]]);
        let ends = [[one.clone(), one.clone()], [one.clone(), one]];
        let r = Section::piecewise_linear(&b, &e, &ends, &[real_diag(&c2, &[&[1.0], &[0.0]])], 1e-9);
        assert!(r.is_err());
    }

    #[test]
    fn invalid_bundles_are_rejected() {
        // identity "germs" into equal neighbors are normalized away
        let b = two_germ(vec![vec![1]], vec![vec![1]], vec![2], vec![2]).unwrap();
        assert!(b.exceptional().is_empty());
        assert_eq!(b.generic().len(), 1);
        // one-sided isomorphism is not a genuine exceptional point
        let r = StratifiedBundle::from_spec(
            [-1.0, 1.0],
            &[GenericSpec { span: [-1.0, 0.0], blocks: vec![2] }, GenericSpec { span: [0.0, 1.0], blocks: vec![1, 1] }],
            &[ExceptionalSpec { point: 0.0, blocks: vec![2], germs: vec![(Side::Left, vec![vec![1]]), (Side::Right, vec![vec![1], vec![1]])] }],
        );
        assert!(r.is_err());
        // missing junction point
        let r = StratifiedBundle::from_spec(
            [-1.0, 1.0],
            &[GenericSpec { span: [-1.0, 0.0], blocks: vec![2] }, GenericSpec { span: [0.0, 1.0], blocks: vec![2] }],
            &[],
        );
        assert!(r.is_err());
        // non-unital germ
        assert!(two_germ(vec![vec![2, 0]], vec![vec![1, 2]], vec![3], vec![1, 1]).is_err());
        // spacing larger than the generic intervals
        assert!(build_expectation(&paper_example(), 1.5, Mode::Blend).is_err());
    }

    #[test]
    fn fiber_classes_follow_germs() {
        let c = fiber_classes(&paper_example());
        assert_eq!(c, vec![FiberClass { blocks: vec![1, 1], class: 0 }, FiberClass { blocks: vec![3], class: 1 }]);
    }

    #[test]
    fn density_hypothesis_is_reported() {
        // C ⊕ C at 0 into M2 on the left and C⊕C⊕C on the right: ranks 2 and 3
        let b = StratifiedBundle::from_spec(
            [-1.0, 1.0],
            &[GenericSpec { span: [-1.0, 0.0], blocks: vec![2] }, GenericSpec { span: [0.0, 1.0], blocks: vec![1, 1, 1] }],
            &[ExceptionalSpec {
                point: 0.0,
                blocks: vec![1, 1],
                germs: vec![(Side::Left, vec![vec![1, 1]]), (Side::Right, vec![vec![1, 0], vec![0, 1], vec![0, 1]])],
            }],
        )
        .unwrap();
        assert!(matches!(check_optimal(&b), Verdict::HypothesisFailure { .. }));
        assert!(matches!(build_expectation(&b, 0.25, Mode::Optimal), Err(Error::Hypothesis(_))));
        assert!(build_expectation(&b, 0.25, Mode::Blend).unwrap().k_value.is_finite());
    }
}
