//! Moduli of continuity and the test of whether a measured series of
//! spectral gaps can be dominated by one of them.

use std::f64::consts::E;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quasimode::GapRecord;

/// `ω(r)` for the four families, from strongest to weakest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ModulusFamily {
    /// `C r^α`
    Holder { c: f64, alpha: f64 },
    /// `C exp(-α (log 1/r)^θ)`
    WeakHolder { c: f64, alpha: f64, theta: f64 },
    /// `C exp(-β (log log 1/r)^γ)`
    GammaBetaLogHolder { c: f64, gamma: f64, beta: f64 },
    /// `C / log(1/r)`
    LogHolder { c: f64 },
}

impl fmt::Display for ModulusFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModulusFamily::Holder { .. } => "holder",
            ModulusFamily::WeakHolder { .. } => "weak_holder",
            ModulusFamily::GammaBetaLogHolder { .. } => "gamma_beta_log_holder",
            ModulusFamily::LogHolder { .. } => "log_holder",
        };
        f.write_str(name)
    }
}

impl ModulusFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ModulusFamily::Holder { c, alpha } => c > 0.0 && alpha > 0.0 && alpha <= 1.0,
            ModulusFamily::WeakHolder { c, alpha, theta } => {
                c > 0.0 && alpha > 0.0 && alpha <= 1.0 && theta > 0.0 && theta <= 1.0
            }
            ModulusFamily::GammaBetaLogHolder { c, gamma, beta } => c > 0.0 && gamma >= 1.0 && beta >= 1.0,
            ModulusFamily::LogHolder { c } => c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("modulus", format!("inadmissible parameters {self:?}")))
        }
    }

    pub fn constant(&self) -> f64 {
        match *self {
            ModulusFamily::Holder { c, .. }
            | ModulusFamily::WeakHolder { c, .. }
            | ModulusFamily::GammaBetaLogHolder { c, .. }
            | ModulusFamily::LogHolder { c } => c,
        }
    }

    /// The same family with `C = 1`.
    pub fn shape(&self) -> Self {
        let mut s = *self;
        match &mut s {
            ModulusFamily::Holder { c, .. }
            | ModulusFamily::WeakHolder { c, .. }
            | ModulusFamily::GammaBetaLogHolder { c, .. }
            | ModulusFamily::LogHolder { c } => *c = 1.0,
        }
        s
    }

    /// `(γ, β)` of the log-log family, `None` otherwise.
    pub fn gamma_beta(&self) -> Option<(f64, f64)> {
        match *self {
            ModulusFamily::GammaBetaLogHolder { gamma, beta, .. } => Some((gamma, beta)),
            _ => None,
        }
    }

    /// Upper end `r₀` of the domain `0 < r < r₀`. The log-log family needs
    /// `log log 1/r ≥ 1` when `γ > 1`; at `γ = 1` it reduces to
    /// `C (log 1/r)^{-β}`, defined for all `r < 1`.
    pub fn r0(&self) -> f64 {
        match *self {
            ModulusFamily::GammaBetaLogHolder { gamma, .. } if gamma > 1.0 => (-E).exp(),
            _ => 1.0,
        }
    }

    /// `log ω` as a function of `x = log(1/r)`, valid far below the
    /// smallest positive `f64`.
    pub fn ln_eval(&self, x: f64) -> Result<f64> {
        self.validate()?;
        let x0 = -self.r0().ln();
        if !(x > x0) || !x.is_finite() {
            return Err(Error::OutOfDomain {
                r: (-x).exp(),
                r0: self.r0(),
            });
        }
        Ok(match *self {
            ModulusFamily::Holder { c, alpha } => c.ln() - alpha * x,
            ModulusFamily::WeakHolder { c, alpha, theta } => c.ln() - alpha * x.powf(theta),
            ModulusFamily::GammaBetaLogHolder { c, gamma, beta } => c.ln() - beta * x.ln().powf(gamma),
            ModulusFamily::LogHolder { c } => c.ln() - x.ln(),
        })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::OutOfDomain { r, r0: self.r0() });
        }
        self.ln_eval(-r.ln()).map(f64::exp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapPoint {
    pub l: usize,
    /// `√2 e^{-K_l}`
    pub r: f64,
    pub gap: f64,
}

/// Gap lower bounds at decreasing radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSeries {
    points: Vec<GapPoint>,
}

impl GapSeries {
    /// Sorts by `l`; radii must then strictly decrease and gaps be positive.
    pub fn new(mut points: Vec<GapPoint>) -> Result<Self> {
        points.sort_by_key(|p| p.l);
        if points.iter().any(|p| !(p.gap > 0.0) || !(p.r > 0.0)) {
            return Err(Error::param("gaps", "gaps and radii must be positive"));
        }
        if points.windows(2).any(|w| !(w[1].r < w[0].r)) {
            return Err(Error::param("gaps", "radii must strictly decrease in l"));
        }
        Ok(GapSeries { points })
    }

    /// Radius `ε_l` and certified lower bound of each experiment record.
    pub fn from_records(records: &[GapRecord]) -> Result<Self> {
        Self::new(
            records
                .iter()
                .map(|r| GapPoint {
                    l: r.l,
                    r: r.epsilon,
                    gap: r.lower_bound,
                })
                .collect(),
        )
    }

    /// `gap_l = ω(r_l)` with `r_l = √2 e^{-√(l/3)/10}`.
    pub fn synthetic(ls: &[usize], gap: impl Fn(usize, f64) -> Result<f64>) -> Result<Self> {
        Self::new(
            ls.iter()
                .map(|&l| {
                    let r = 2f64.sqrt() * (-(l as f64 / 3.0).sqrt() / 10.0).exp();
                    Ok(GapPoint { l, r, gap: gap(l, r)? })
                })
                .collect::<Result<_>>()?,
        )
    }

    pub fn points(&self) -> &[GapPoint] {
        &self.points
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Required `C` grows by more than the breakdown factor.
    Breakdown,
    /// Required `C` grows by at most the bounded factor.
    Bounded,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Breakdown => "breakdown",
            Verdict::Bounded => "bounded",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitConfig {
    pub breakdown_factor: f64,
    pub bounded_factor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            breakdown_factor: 5.0,
            bounded_factor: 1.5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub family: ModulusFamily,
    pub points: Vec<GapPoint>,
    /// `gap_l / ω_shape(r_l)`, the smallest `C` consistent with each point.
    pub required_c: Vec<f64>,
    /// Required `C` at the largest `l` over that at the smallest.
    pub growth: f64,
    pub verdict: Verdict,
}

impl FitReport {
    pub const CSV_HEADER: [&'static str; 8] = ["l", "r", "gap", "family", "gamma", "beta", "required_C", "verdict"];

    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        if header {
            w.write_record(Self::CSV_HEADER)?;
        }
        let (gamma, beta) = self
            .family
            .gamma_beta()
            .map(|(g, b)| (g.to_string(), b.to_string()))
            .unwrap_or_default();
        for (p, c) in self.points.iter().zip(&self.required_c) {
            w.write_record([
                p.l.to_string(),
                p.r.to_string(),
                p.gap.to_string(),
                self.family.to_string(),
                gamma.clone(),
                beta.clone(),
                c.to_string(),
                self.verdict.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

/// Smallest constant with `gap_l ≤ C ω_shape(r_l)` at each point, and whether
/// it stays bounded along the series. A finite series cannot prove
/// unboundedness; the verdict reports the growth against fixed factors.
pub fn fit_breakdown(series: &GapSeries, family: ModulusFamily, config: FitConfig) -> Result<FitReport> {
    let pts = series.points();
    if pts.len() < 3 {
        return Err(Error::InsufficientRecords {
            needed: 3,
            got: pts.len(),
        });
    }
    let shape = family.shape();
    let required_c = pts
        .iter()
        .map(|p| Ok((p.gap.ln() - shape.ln_eval(-p.r.ln())?).exp()))
        .collect::<Result<Vec<f64>>>()?;
    let growth = required_c[required_c.len() - 1] / required_c[0];
    let verdict = if growth > config.breakdown_factor {
        Verdict::Breakdown
    } else if growth <= config.bounded_factor {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(FitReport {
        family,
        points: pts.to_vec(),
        required_c,
        growth,
        verdict,
    })
}

/// [`fit_breakdown`] for the `(γ, β)` log-log family.
pub fn fit_log_holder(series: &GapSeries, gamma: f64, beta: f64) -> Result<FitReport> {
    fit_breakdown(
        series,
        ModulusFamily::GammaBetaLogHolder { c: 1.0, gamma, beta },
        FitConfig::default(),
    )
}

/// One representative of each family.
pub fn reference_families() -> [ModulusFamily; 5] {
    [
        ModulusFamily::Holder { c: 1.0, alpha: 0.5 },
        ModulusFamily::WeakHolder {
            c: 1.0,
            alpha: 1.0,
            theta: 0.5,
        },
        ModulusFamily::GammaBetaLogHolder {
            c: 1.0,
            gamma: 1.0,
            beta: 2.5,
        },
        ModulusFamily::GammaBetaLogHolder {
            c: 1.0,
            gamma: 2.0,
            beta: 1.0,
        },
        ModulusFamily::LogHolder { c: 1.0 },
    ]
}

/// Control series `gap_l = ω(r_l)` for `family`, keeping the `l` whose
/// radius lies in the family's domain.
pub fn in_family_control(family: ModulusFamily, ls: &[usize]) -> Result<GapSeries> {
    let keep: Vec<usize> = ls
        .iter()
        .copied()
        .filter(|&l| 2f64.sqrt() * (-(l as f64 / 3.0).sqrt() / 10.0).exp() < family.r0())
        .collect();
    GapSeries::synthetic(&keep, |_, r| family.eval(r))
}
