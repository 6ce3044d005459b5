use hilbertize::bundle::{bounded_bm_distance, continuity_report, renorm, vertex_sensitivity, ContinuityRow};
use hilbertize::convex::DirectionSampling;
use hilbertize::ellipsoid::{john_certificate, loewner, JohnCertificate};
use hilbertize::expectation::{
    build_expectation, bundle_rank, check_multiplicity_free, check_optimal, check_pullback_cone, evaluate_expectation,
    fiber_classes, verify_expectation, Evaluation, FiberClass, GridSample, Mode, Section, Side, Stratum, Verdict,
    VerifyReport,
};
use hilbertize::Exec;
use log::info;
use serde::Serialize;

use crate::schema::{BanachFile, BodyFile, BundleFileV1, StratifiedFile};
use crate::{CliError, CommandName, Format, JobSpec, ModeArg};

const VERIFY_SAMPLES: usize = 16;

/// Rendered report. `verify_failed` maps to exit code 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub verify_failed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, verify_failed: false }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn csv_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn wrong_kind(cmd: &str, want: &str, got: &BundleFileV1) -> CliError {
    CliError::Usage(format!("{cmd} needs a {want} input, got {}", got.kind()))
}

pub fn run(job: &JobSpec) -> Result<Output, CliError> {
    let file = job.load()?;
    info!("{:?} on a {} document", job.command, file.kind());
    match (job.command, &file) {
        (CommandName::Loewner, BundleFileV1::Body(f)) => cmd_loewner(f, job),
        (CommandName::Loewner, _) => Err(wrong_kind("loewner", "symmetric_body", &file)),
        (CommandName::Renorm, BundleFileV1::Banach(f)) => cmd_renorm(f, job),
        (CommandName::Renorm, _) => Err(wrong_kind("renorm", "banach_bundle", &file)),
        (CommandName::Continuity, BundleFileV1::Banach(f)) => cmd_continuity(f, job),
        (CommandName::Continuity, _) => Err(wrong_kind("continuity", "banach_bundle", &file)),
        (CommandName::Check, BundleFileV1::Stratified(f)) => cmd_check(f, job),
        (CommandName::Check, _) => Err(wrong_kind("check", "stratified_cstar", &file)),
        (CommandName::Expect, BundleFileV1::Stratified(f)) => cmd_expect(f, job),
        (CommandName::Expect, _) => Err(wrong_kind("expect", "stratified_cstar", &file)),
    }
}

#[derive(Serialize)]
struct ContactRow {
    index: Option<usize>,
    weight: f64,
    point: Vec<f64>,
}

#[derive(Serialize)]
struct LoewnerReport {
    dim: usize,
    eps: f64,
    iterations: usize,
    shape: Vec<Vec<f64>>,
    contacts: Vec<ContactRow>,
    certificate: JohnCertificate,
}

fn cmd_loewner(f: &BodyFile, job: &JobSpec) -> Result<Output, CliError> {
    let body = f.body()?;
    let res = loewner(&body, job.eps)?;
    let certificate = john_certificate(&res)?;
    let n = body.dim();
    let a = res.ellipsoid.shape();
    let report = LoewnerReport {
        dim: n,
        eps: job.eps,
        iterations: res.iterations,
        // + 0.0 turns -0.0 into 0.0
        shape: (0..n).map(|i| (0..n).map(|j| a[(i, j)] + 0.0).collect()).collect(),
        contacts: res
            .contacts
            .iter()
            .map(|c| ContactRow { index: c.index, weight: c.weight, point: c.point.iter().copied().collect() })
            .collect(),
        certificate,
    };
    Ok(Output::ok(match job.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut header = strs(&["index", "weight"]);
            header.extend((0..n).map(|i| format!("x{i}")));
            let rows: Vec<Vec<String>> = report
                .contacts
                .iter()
                .map(|c| {
                    let mut r = vec![c.index.map(|i| i.to_string()).unwrap_or_default(), c.weight.to_string()];
                    r.extend(c.point.iter().map(f64::to_string));
                    r
                })
                .collect();
            csv_table(&header, &rows)
        }
    }))
}

fn sampling(job: &JobSpec) -> DirectionSampling {
    DirectionSampling { count: job.sample.map(|s| s as usize), seed: job.seed }
}

#[derive(Serialize)]
struct FiberRow {
    x: f64,
    product_log: f64,
    sampled_product_log: f64,
    norm_into_hilbert: f64,
    norm_back_sampled: f64,
}

#[derive(Serialize)]
struct RenormReport {
    dim: usize,
    eps: f64,
    points: usize,
    /// Certified upper bound on the bounded Banach-Mazur distance.
    sup_certified: f64,
    sup_sampled: f64,
    argmax_x: f64,
    half_log_n: f64,
    /// Löwner change when ℓ_p fibers get twice the vertices.
    #[serde(skip_serializing_if = "Option::is_none")]
    vertex_sensitivity: Option<f64>,
    per_fiber: Vec<FiberRow>,
}

fn cmd_renorm(f: &BanachFile, job: &JobSpec) -> Result<Output, CliError> {
    let family = f.family()?;
    let bundle = family.discretize()?;
    let sampling = sampling(job);
    let r = renorm(&bundle, job.eps)?;
    let bm = bounded_bm_distance(&bundle, &r, &sampling)?;
    let report = RenormReport {
        dim: bundle.dim(),
        eps: job.eps,
        points: bundle.len(),
        sup_certified: bm.certified,
        sup_sampled: bm.sampled,
        argmax_x: bundle.grid()[bm.argmax],
        half_log_n: bm.reference,
        vertex_sensitivity: vertex_sensitivity(&family, job.eps, &sampling, Exec::default())?,
        per_fiber: bundle
            .grid()
            .iter()
            .zip(&bm.per_fiber)
            .map(|(&x, b)| FiberRow {
                x,
                product_log: b.product_log,
                sampled_product_log: b.sampled_product_log,
                norm_into_hilbert: b.norm_into_hilbert,
                norm_back_sampled: b.norm_back_sampled,
            })
            .collect(),
    };
    info!("renorm: sup certified {}, sampled {}", report.sup_certified, report.sup_sampled);
    Ok(Output::ok(match job.format {
        Format::Json => json(&report),
        Format::Csv => {
            let header = strs(&["x", "product_log", "sampled_product_log", "norm_into_hilbert", "norm_back_sampled"]);
            let rows: Vec<Vec<String>> = report
                .per_fiber
                .iter()
                .map(|r| {
                    [r.x, r.product_log, r.sampled_product_log, r.norm_into_hilbert, r.norm_back_sampled]
                        .iter()
                        .map(f64::to_string)
                        .collect()
                })
                .collect();
            csv_table(&header, &rows)
        }
    }))
}

#[derive(Serialize)]
struct ContinuityReport {
    eps: f64,
    levels: u32,
    rows: Vec<ContinuityRow>,
}

fn cmd_continuity(f: &BanachFile, job: &JobSpec) -> Result<Output, CliError> {
    let family = f.family()?;
    let rows = continuity_report(&family, job.eps, job.levels as usize, &sampling(job), Exec::default())?;
    let report = ContinuityReport { eps: job.eps, levels: job.levels, rows };
    Ok(Output::ok(match job.format {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| vec![r.spacing.to_string(), r.body_distance.to_string(), r.ellipsoid_distance.to_string()])
                .collect();
            csv_table(&strs(&["h", "body_distance", "ellipsoid_distance"]), &rows)
        }
    }))
}

#[derive(Serialize)]
struct PointReport {
    point: f64,
    blocks: Vec<usize>,
    left: Option<Vec<u32>>,
    right: Option<Vec<u32>>,
    /// Pullback-cone verdict for two-sided points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pullback: Option<&'static str>,
}

#[derive(Serialize)]
struct CheckReport {
    #[serde(flatten)]
    verdict: Verdict,
    rank: usize,
    multiplicity_free: bool,
    classes: Vec<FiberClass>,
    points: Vec<PointReport>,
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Yes { .. } => "yes",
        Verdict::No { .. } => "no",
        Verdict::HypothesisFailure { .. } => "hypothesis_failure",
    }
}

fn sums(v: &Option<Vec<u32>>) -> String {
    v.as_ref().map(|s| s.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")).unwrap_or_default()
}

fn cmd_check(f: &StratifiedFile, job: &JobSpec) -> Result<Output, CliError> {
    let b = f.bundle()?;
    let verdict = check_optimal(&b);
    let points = b
        .exceptional()
        .iter()
        .map(|p| PointReport {
            point: p.point,
            blocks: p.algebra.blocks().to_vec(),
            left: p.germ(Side::Left).map(|g| g.column_sums()),
            right: p.germ(Side::Right).map(|g| g.column_sums()),
            pullback: match (&p.left, &p.right) {
                (Some(l), Some(r)) => Some(verdict_name(&check_pullback_cone(l, r))),
                _ => None,
            },
        })
        .collect();
    let report =
        CheckReport { rank: bundle_rank(&b), multiplicity_free: check_multiplicity_free(&b), classes: fiber_classes(&b), points, verdict };
    info!("check: {}", verdict_name(&report.verdict));
    Ok(Output::ok(match job.format {
        Format::Json => json(&report),
        Format::Csv => {
            let head = [verdict_name(&report.verdict).to_string(), report.rank.to_string(), report.multiplicity_free.to_string()];
            let mut rows: Vec<Vec<String>> = report
                .points
                .iter()
                .map(|p| {
                    let mut r = head.to_vec();
                    r.extend([p.point.to_string(), sums(&p.left), sums(&p.right)]);
                    r
                })
                .collect();
            if rows.is_empty() {
                let mut r = head.to_vec();
                r.extend([String::new(), String::new(), String::new()]);
                rows.push(r);
            }
            csv_table(&strs(&["verdict", "rank", "multiplicity_free", "point", "left", "right"]), &rows)
        }
    }))
}

#[derive(Serialize)]
struct ExpectReport<'a> {
    mode: Mode,
    spacing: f64,
    rank: usize,
    k_value: f64,
    classes: &'a [FiberClass],
    verify: VerifyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<Evaluation>,
    samples: &'a [GridSample],
}

fn cmd_expect(f: &StratifiedFile, job: &JobSpec) -> Result<Output, CliError> {
    let b = f.bundle()?;
    let mode = match job.mode {
        ModeArg::Blend => Mode::Blend,
        ModeArg::Optimal => Mode::Optimal,
    };
    let e = build_expectation(&b, job.grid_h, mode)?;
    let samples = job.sample.map(|s| s as usize).unwrap_or(VERIFY_SAMPLES);
    let verify = verify_expectation(&e, samples, job.seed, None);
    let evaluation = match &f.section {
        Some(s) => {
            let (ends, points) = s.elements(&b)?;
            let section = Section::piecewise_linear(&b, &e, &ends, &points, s.modulus)?;
            Some(evaluate_expectation(&e, &section)?)
        }
        None => None,
    };
    info!("expect: k_value {}, verify passed: {}", e.k_value, verify.passed);
    let verify_failed = !verify.passed;
    let report = ExpectReport {
        mode,
        spacing: e.spacing,
        rank: bundle_rank(&b),
        k_value: e.k_value,
        classes: &e.classes,
        verify,
        evaluation,
        samples: &e.samples,
    };
    let text = match job.format {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = e
                .samples
                .iter()
                .map(|s| {
                    let (stratum, index) = match s.stratum {
                        Stratum::Generic { interval } => ("generic", interval),
                        Stratum::Exceptional { point } => ("exceptional", point),
                    };
                    let limit = match s.limit {
                        Some((_, Side::Left)) => "left",
                        Some((_, Side::Right)) => "right",
                        None => "",
                    };
                    vec![s.x.to_string(), stratum.into(), index.to_string(), limit.into(), s.k.to_string()]
                })
                .collect();
            csv_table(&strs(&["x", "stratum", "index", "limit", "k"]), &rows)
        }
    };
    Ok(Output { text, verify_failed })
}
