//! One function per subcommand, each returning the table to emit.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

use kifer_core::combinatorics::{
    en_convergence, event_bl, event_cl, narayana_counts, pascal_table, BlockEvent, EventMode,
    EventProbability,
};
use kifer_core::lyapunov::{bernoulli_conjugate_le, induced_le, le_estimate, CocycleSpec, LeRecord};
use kifer_core::modulus::{fit_breakdown, in_family_control, FitConfig, GapPoint, GapSeries, ModulusFamily};
use kifer_core::quasimode::{blocks_within, gap_experiment, GapRecord};
use kifer_core::spectra::{ids_curve, Potential};
use kifer_core::verify::{self, Scale};
use kifer_core::words::MarkovSpec;
use kifer_core::Error;
use serde_json::{json, Value};

use crate::output::Table;
use crate::{
    CocycleKind, EvalMode, EventKind, FamilyKind, FitArgs, GapArgs, Halves, IdsArgs, LeArgs, PotentialKind,
    TablesArgs, VerifyArgs, WalkArgs,
};

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
    Input(String),
    Verify,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(
                Error::InvalidParameter { .. }
                | Error::SizeCap { .. }
                | Error::InvalidCocycle(_)
                | Error::InvalidMarkov(_)
                | Error::OutOfDomain { .. }
                | Error::InsufficientRecords { .. },
            )
            | Failure::Input(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
            Failure::Input(s) => f.write_str(s),
            Failure::Verify => f.write_str("verification failed"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Out = Result<Table, Failure>;

fn num(x: f64) -> Value {
    // non-finite values have no JSON number form
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn tables(a: &TablesArgs) -> Out {
    if let Some(n) = a.narayana {
        let c = narayana_counts(n);
        let mut t = Table::new(&["n", "a", "b"]);
        for (i, (x, y)) in c.a_seq.iter().zip(&c.b_seq).enumerate() {
            t.push(vec![json!(i), json!(x.to_string()), json!(y.to_string())]);
        }
        return Ok(t);
    }
    let depth = a.pascal.unwrap_or(5);
    let table = pascal_table(depth)?;
    let mut t = Table::new(&["n", "i", "a", "a_plus", "a_minus"]);
    for n in 1..=depth {
        for (i, v) in table.row(n) {
            t.push(vec![
                json!(n),
                json!(i),
                json!(v.to_string()),
                json!(table.a_plus(n, i).to_string()),
                json!(table.a_minus(n, i).to_string()),
            ]);
        }
    }
    Ok(t)
}

fn probability_cells(p: &EventProbability) -> [Value; 3] {
    [
        num(p.value),
        num(p.std_error),
        p.exact.as_ref().map_or(Value::Null, |r| json!(r.to_string())),
    ]
}

pub fn walk(a: &WalkArgs, seed: u64) -> Out {
    if a.event == EventKind::En {
        let c = en_convergence(a.n)?;
        let mut t = Table::new(&["n", "probability", "displayed", "displayed_2n"]);
        for r in &c.rows {
            t.push(vec![json!(r.n), num(r.exact), num(r.displayed), num(r.displayed_2n)]);
        }
        t.note("tail_mean", num(c.tail_mean));
        t.note("tail_from", c.tail_from);
        t.note("full_constant", num(c.full_constant));
        t.note("half_constant", num(c.half_constant));
        t.note("verdict", format!("{:?}", c.verdict).to_lowercase());
        return Ok(t);
    }
    let spec = MarkovSpec::model();
    let mut t = Table::new(&["l", "half_len", "min_kappa", "K_l", "probability", "std_error", "exact"]);
    for (k, &l) in a.l.iter().enumerate() {
        let ev = match a.halves {
            Halves::Standard => BlockEvent::standard(l),
            Halves::Inner => BlockEvent::inner(l),
        };
        let mode = match a.mode {
            EvalMode::Enumeration => EventMode::Enumeration,
            EvalMode::Exact => EventMode::ClosedFormExact,
            EvalMode::ClosedForm => EventMode::ClosedForm,
            EvalMode::MonteCarlo => EventMode::MonteCarlo {
                samples: a.samples,
                seed: seed.wrapping_add(k as u64),
            },
        };
        let p = match a.event {
            EventKind::Bl => event_bl(&ev, &spec, mode)?,
            _ => event_cl(&ev, &spec, mode)?,
        };
        let mut row = vec![json!(l), json!(ev.half_len), json!(ev.min_kappa()), num(ev.k_l())];
        row.extend(probability_cells(&p));
        t.push(row);
    }
    t.note("threshold_4_625", num(4.0 / 625.0));
    Ok(t)
}

pub fn le(a: &LeArgs, seed: u64) -> Out {
    match a.cocycle {
        CocycleKind::Induced => {
            let mut t = Table::new(&[
                "E",
                "n",
                "replicas",
                "induced",
                "induced_se",
                "base",
                "base_se",
                "ratio",
                "ratio_se",
                "mean_return_time",
                "return_time_se",
            ]);
            for &e in &a.energy {
                let r = induced_le(e, a.n, a.replicas, seed)?;
                t.push(vec![
                    num(e),
                    json!(a.n),
                    json!(a.replicas),
                    num(r.induced.value),
                    num(r.induced.std_error),
                    num(r.base.value),
                    num(r.base.std_error),
                    num(r.ratio.value),
                    num(r.ratio.std_error),
                    num(r.mean_return_time.value),
                    num(r.mean_return_time.std_error),
                ]);
            }
            Ok(t)
        }
        kind => {
            let mut t = Table::new(&["spec_hash", "E", "n", "replicas", "value", "std_error"]);
            let energies: Vec<Option<f64>> = if kind == CocycleKind::Kifer {
                vec![None]
            } else {
                a.energy.iter().copied().map(Some).collect()
            };
            for e in energies {
                let (spec, est) = match (kind, e) {
                    (CocycleKind::Kifer, _) => {
                        let s = CocycleSpec::kifer(a.p)?;
                        let est = le_estimate(&s, a.n, a.replicas, seed)?;
                        (s, est)
                    }
                    (CocycleKind::Conjugate, Some(e)) => {
                        (CocycleSpec::conjugate(e), bernoulli_conjugate_le(e, a.n, a.replicas, seed)?)
                    }
                    (CocycleKind::Free, Some(e)) => {
                        let s = CocycleSpec::free(e);
                        let est = le_estimate(&s, a.n, a.replicas, seed)?;
                        (s, est)
                    }
                    (_, e) => {
                        let s = CocycleSpec::schrodinger(e.unwrap_or(0.0));
                        let est = le_estimate(&s, a.n, a.replicas, seed)?;
                        (s, est)
                    }
                };
                let r = LeRecord::new(&spec, &est);
                t.push(vec![
                    json!(r.spec_hash),
                    r.energy.map_or(Value::Null, num),
                    json!(r.n),
                    json!(r.replicas),
                    num(r.value),
                    num(r.std_error),
                ]);
            }
            Ok(t)
        }
    }
}

pub fn ids(a: &IdsArgs, seed: u64) -> Out {
    let energies: Vec<f64> = if a.energy.is_empty() {
        if a.points < 2 || !(a.e_min < a.e_max) {
            return Err(Failure::Input(
                "invalid parameter `points`: need at least 2 points and e_min < e_max".into(),
            ));
        }
        let step = (a.e_max - a.e_min) / (a.points - 1) as f64;
        (0..a.points).map(|k| a.e_min + step * k as f64).collect()
    } else {
        a.energy.clone()
    };
    let potential = match a.potential {
        PotentialKind::Model => Potential::model(),
        PotentialKind::Free => Potential::free(),
    };
    let curve = ids_curve(&MarkovSpec::model(), &potential, &energies, a.dim, a.replicas, seed)?;
    let mut t = Table::new(&["E", "N", "std_error", "dim", "replicas"]);
    for (e, est) in energies.iter().zip(&curve) {
        t.push(vec![num(*e), num(est.value), num(est.std_error), json!(a.dim), json!(a.replicas)]);
    }
    Ok(t)
}

fn run_gap(ls: &[usize], m: Option<usize>, replicas: usize, max_len: usize, seed: u64) -> Result<Vec<GapRecord>, Failure> {
    ls.iter()
        .map(|&l| {
            let m = m.unwrap_or_else(|| blocks_within(l, max_len));
            Ok(gap_experiment(l, m, replicas, seed)?)
        })
        .collect()
}

fn gap_table(records: &[GapRecord]) -> Table {
    let mut t = Table::new(&GapRecord::CSV_HEADER);
    for r in records {
        t.push(r.csv_row().iter().map(|s| json!(s)).collect());
    }
    let violations: usize = records.iter().map(|r| r.violations + r.temple_violations).sum();
    t.note("violations", violations);
    t.note(
        "construction_failures",
        records.iter().map(|r| r.construction_failures).sum::<usize>(),
    );
    t
}

pub fn gap(a: &GapArgs, seed: u64) -> Out {
    let records = run_gap(&a.l, a.m, a.replicas, a.max_len, seed)?;
    if let Some(path) = &a.replica_out {
        let mut w = BufWriter::new(File::create(path)?);
        for r in &records {
            r.write_replicas_csv(&mut w)?;
        }
    }
    let mut t = gap_table(&records);
    for row in &mut t.rows {
        for v in row.iter_mut() {
            let s = v.as_str().unwrap_or_default();
            if let Ok(i) = s.parse::<i64>() {
                *v = json!(i);
            } else if let Ok(x) = s.parse::<f64>() {
                *v = num(x);
            }
        }
    }
    Ok(t)
}

/// Reads `l`, `epsilon` and `lower_bound` from a CSV written by `gap`.
fn read_series(path: &Path) -> Result<GapSeries, Failure> {
    let bad = |what: String| Failure::Input(format!("invalid parameter `input`: {what}"));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (il, ir, ig) = (col("l")?, col("epsilon")?, col("lower_bound")?);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let l = field(il).parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let r = field(ir).parse::<f64>().map_err(|e| bad(e.to_string()))?;
        let gap = field(ig).parse::<f64>().map_err(|e| bad(e.to_string()))?;
        points.push(GapPoint { l, r, gap });
    }
    Ok(GapSeries::new(points)?)
}

fn family_of(a: &FitArgs) -> ModulusFamily {
    match a.family {
        FamilyKind::LogLog => ModulusFamily::GammaBetaLogHolder {
            c: 1.0,
            gamma: a.gamma,
            beta: a.beta,
        },
        FamilyKind::Holder => ModulusFamily::Holder { c: 1.0, alpha: a.alpha },
        FamilyKind::WeakHolder => ModulusFamily::WeakHolder {
            c: 1.0,
            alpha: a.alpha,
            theta: a.theta,
        },
        FamilyKind::LogHolder => ModulusFamily::LogHolder { c: 1.0 },
    }
}

pub fn fit(a: &FitArgs, seed: u64) -> Out {
    let family = family_of(a);
    family.validate()?;
    let series = if a.control {
        in_family_control(family, &a.l)?
    } else if let Some(p) = &a.input {
        read_series(p)?
    } else {
        GapSeries::from_records(&run_gap(&a.l, None, a.replicas, a.max_len, seed)?)?
    };
    let report = fit_breakdown(&series, family, FitConfig::default())?;
    let (gamma, beta) = family.gamma_beta().map_or((Value::Null, Value::Null), |(g, b)| (num(g), num(b)));
    let mut t = Table::new(&["l", "r", "gap", "family", "gamma", "beta", "required_C", "verdict"]);
    for (p, c) in report.points.iter().zip(&report.required_c) {
        t.push(vec![
            json!(p.l),
            num(p.r),
            num(p.gap),
            json!(family.to_string()),
            gamma.clone(),
            beta.clone(),
            num(*c),
            json!(report.verdict.to_string()),
        ]);
    }
    t.note("growth", num(report.growth));
    t.note("verdict", report.verdict.to_string());
    Ok(t)
}

pub fn verify(a: &VerifyArgs, seed: u64) -> Out {
    if let Some(s) = a.suite.iter().find(|s| !verify::SUITES.contains(&s.as_str())) {
        return Err(Failure::Input(format!(
            "invalid parameter `suite`: unknown suite {s:?}; expected one of {}",
            verify::SUITES.join(", ")
        )));
    }
    let scale = if a.full { Scale::Full } else { Scale::Quick };
    let checks = verify::run(scale, seed, &a.suite);
    let mut t = Table::new(&["suite", "check", "passed", "detail"]);
    for c in &checks {
        eprintln!(
            "{} {}/{} ({:.2} s) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.seconds,
            c.detail
        );
        t.push(vec![json!(c.suite), json!(c.name), json!(c.passed), json!(c.detail)]);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    t.note("checks", checks.len());
    t.note("failed", failed);
    Ok(t)
}
