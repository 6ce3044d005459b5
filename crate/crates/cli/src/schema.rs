//! Version-1 JSON input documents.
//!
//! Parsing is two-pass: a loose header read picks the `kind`, then the
//! document is parsed again into the strict per-kind struct so serde_json
//! error positions point at the offending line.

use hilbertize::bundle::{DiscretizedBundle, FamilySpec};
use hilbertize::convex::SymmetricBody;
use hilbertize::expectation::{ExceptionalSpec, GenericSpec, Side, StratifiedBundle};
use hilbertize::multimatrix::{Element, MultiMatrixAlgebra};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub v: u32,
    pub kind: String,
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyEntry {
    Lp {
        points: usize,
        knots: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<usize>,
    },
    Interpolate { points: usize, start: Vec<Vec<f64>>, end: Vec<Vec<f64>> },
}

/// Either an explicit `grid` + `fibers` list or a generating `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanachFile {
    pub v: u32,
    pub kind: String,
    pub interval: [f64; 2],
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibers: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericEntry {
    pub span: [f64; 2],
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermEntry {
    pub side: Side,
    pub matrix: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExceptionalEntry {
    pub point: f64,
    pub blocks: Vec<usize>,
    pub germs: Vec<GermEntry>,
}

/// Real block matrices, one row-major array per block.
pub type ElementEntry = Vec<Vec<Vec<f64>>>;

/// Section affine on each generic interval: `ends[i]` holds its values at
/// the two ends of interval `i`, `points[j]` its value at exceptional point `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionEntry {
    pub ends: Vec<[ElementEntry; 2]>,
    pub points: Vec<ElementEntry>,
    #[serde(default)]
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratifiedFile {
    pub v: u32,
    pub kind: String,
    pub interval: [f64; 2],
    pub generic: Vec<GenericEntry>,
    #[serde(default)]
    pub exceptional: Vec<ExceptionalEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<SectionEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BundleFileV1 {
    Body(BodyFile),
    Banach(BanachFile),
    Stratified(StratifiedFile),
}

#[derive(Deserialize)]
struct Header {
    v: Option<serde_json::Value>,
    kind: Option<String>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn strict<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| schema(e.to_string()))
}

impl BundleFileV1 {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let head: Header = strict(text)?;
        match head.v {
            Some(serde_json::Value::Number(n)) if n.as_u64() == Some(VERSION as u64) => {}
            Some(other) => return Err(schema(format!("unsupported schema version {other}, expected \"v\": 1"))),
            None => return Err(schema("missing schema version field \"v\"")),
        }
        let file = match head.kind.as_deref() {
            Some("symmetric_body") => BundleFileV1::Body(strict(text)?),
            Some("banach_bundle") => BundleFileV1::Banach(strict(text)?),
            Some("stratified_cstar") => BundleFileV1::Stratified(strict(text)?),
            Some(k) => return Err(schema(format!("unknown kind {k:?}"))),
            None => return Err(schema("missing field \"kind\"")),
        };
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let s = match self {
            BundleFileV1::Body(f) => serde_json::to_string_pretty(f),
            BundleFileV1::Banach(f) => serde_json::to_string_pretty(f),
            BundleFileV1::Stratified(f) => serde_json::to_string_pretty(f),
        };
        s.expect("schema types serialize") + "\n"
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BundleFileV1::Body(_) => "symmetric_body",
            BundleFileV1::Banach(_) => "banach_bundle",
            BundleFileV1::Stratified(_) => "stratified_cstar",
        }
    }

    /// Re-runs the library constructors so every module invariant is checked
    /// at load time.
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            BundleFileV1::Body(f) => {
                f.body()?;
            }
            BundleFileV1::Banach(f) => {
                f.family()?.discretize()?;
            }
            BundleFileV1::Stratified(f) => {
                f.bundle()?;
                if let Some(s) = &f.section {
                    s.check_shape(f)?;
                }
            }
        }
        Ok(())
    }
}

impl BodyFile {
    pub fn body(&self) -> Result<SymmetricBody, CliError> {
        Ok(SymmetricBody::from_rows(&self.vertices)?)
    }
}

impl BanachFile {
    pub fn family(&self) -> Result<FamilySpec, CliError> {
        let check_rows = |rows: &[Vec<f64>], what: &str| match rows.iter().find(|r| r.len() != self.dim) {
            Some(r) => Err(schema(format!("{what} vertex of length {} in a dim-{} bundle", r.len(), self.dim))),
            None => Ok(()),
        };
        match (&self.grid, &self.fibers, &self.family) {
            (Some(grid), Some(fibers), None) => {
                if let Some(x) = grid.iter().find(|x| **x < self.interval[0] || **x > self.interval[1]) {
                    return Err(schema(format!("grid point {x} outside the interval")));
                }
                for f in fibers {
                    check_rows(f, "fiber")?;
                }
                Ok(FamilySpec::Explicit { grid: grid.clone(), fibers: fibers.clone() })
            }
            (None, None, Some(FamilyEntry::Lp { points, knots, vertices })) => Ok(FamilySpec::Lp {
                interval: self.interval,
                points: *points,
                dim: self.dim,
                knots: knots.clone(),
                vertices: *vertices,
            }),
            (None, None, Some(FamilyEntry::Interpolate { points, start, end })) => {
                check_rows(start, "start")?;
                check_rows(end, "end")?;
                Ok(FamilySpec::Interpolate {
                    interval: self.interval,
                    points: *points,
                    start: start.clone(),
                    end: end.clone(),
                })
            }
            _ => Err(schema("banach_bundle needs either \"grid\" and \"fibers\" or a \"family\"")),
        }
    }

    pub fn bundle(&self) -> Result<DiscretizedBundle, CliError> {
        Ok(self.family()?.discretize()?)
    }
}

impl StratifiedFile {
    pub fn bundle(&self) -> Result<StratifiedBundle, CliError> {
        let generic: Vec<GenericSpec> =
            self.generic.iter().map(|g| GenericSpec { span: g.span, blocks: g.blocks.clone() }).collect();
        let mut exceptional = Vec::with_capacity(self.exceptional.len());
        for e in &self.exceptional {
            let mut germs = Vec::with_capacity(e.germs.len());
            for g in &e.germs {
                if germs.iter().any(|(s, _)| *s == g.side) {
                    return Err(schema(format!("duplicate {:?} germ at x = {}", g.side, e.point)));
                }
                germs.push((g.side, g.matrix.clone()));
            }
            exceptional.push(ExceptionalSpec { point: e.point, blocks: e.blocks.clone(), germs });
        }
        Ok(StratifiedBundle::from_spec(self.interval, &generic, &exceptional)?)
    }
}

fn element(alg: &MultiMatrixAlgebra, e: &ElementEntry) -> Result<Element, CliError> {
    if e.len() != alg.len() {
        return Err(schema(format!("section value has {} blocks, fiber {alg} has {}", e.len(), alg.len())));
    }
    let mut blocks = Vec::with_capacity(e.len());
    for (rows, &m) in e.iter().zip(alg.blocks()) {
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(schema(format!("section block is not {m}×{m}")));
        }
        blocks.push(DMatrix::from_fn(m, m, |i, j| rows[i][j]));
    }
    Ok(Element::from_real(alg, blocks)?)
}

impl SectionEntry {
    fn check_shape(&self, f: &StratifiedFile) -> Result<(), CliError> {
        let b = f.bundle()?;
        self.elements(&b).map(|_| ())
    }

    /// Interval end values and point values as algebra elements.
    #[allow(clippy::type_complexity)]
    pub fn elements(&self, b: &StratifiedBundle) -> Result<(Vec<[Element; 2]>, Vec<Element>), CliError> {
        if self.ends.len() != b.generic().len() || self.points.len() != b.exceptional().len() {
            return Err(schema(format!(
                "section needs {} interval pieces and {} point values",
                b.generic().len(),
                b.exceptional().len()
            )));
        }
        let ends = self
            .ends
            .iter()
            .zip(b.generic())
            .map(|([l, r], g)| Ok([element(&g.algebra, l)?, element(&g.algebra, r)?]))
            .collect::<Result<_, CliError>>()?;
        let points = self
            .points
            .iter()
            .zip(b.exceptional())
            .map(|(v, p)| element(&p.algebra, v))
            .collect::<Result<_, CliError>>()?;
        Ok((ends, points))
    }
}

macro_rules! fixtures {
    ($($name:literal),* $(,)?) => {
        /// Built-in fixtures as `(name, json)`.
        pub const FIXTURES: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../fixtures/", $name, ".json")))),*
        ];
    };
}

fixtures!(
    "cross2",
    "square2",
    "lp_family",
    "cross_const",
    "disc_const",
    "interpolation",
    "paper_example",
    "paper_example_commutative",
    "m2_trivial",
    "two_germ_21",
);

pub fn fixture(name: &str) -> Result<&'static str, CliError> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let names: Vec<&str> = FIXTURES.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("unknown fixture {name:?}; available: {}", names.join(", ")))
        })
}
