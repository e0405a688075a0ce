//! Replicated Monte Carlo checks of the limit laws, and size/power tables.
//!
//! An experiment is a pure function of its design: replication `r` draws
//! from stream `(seed, r)`, so any split of the replications over workers
//! gives the same per-replication values. The serial `run_*` functions here
//! are the reference; the companion crate runs [`Prepared::replicate`] in
//! parallel and gathers in index order.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::distribution::TailDistribution;
use crate::family::{builtin_family_with_class, RegularityClass, TailFamily};
use crate::likelihood_ratio::LrPlan;
use crate::math::{abs, exp_m1, ln, powf, round, sqrt};
use crate::sampling::{sample_topk_with, top_uniform_logs, SeededStream};
use crate::special::normal_quantile;
use crate::stats;
use crate::{Error, Result};

/// Which limit law an experiment checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Theorem {
    /// Uncentered statistic, TypeA families.
    T1,
    /// Centered statistic, TypeB families.
    T2,
    /// Normalized threshold `√k · S̃_x(a) · (X_(n-k) - a)`.
    L3,
}

impl Theorem {
    pub fn parse(s: &str) -> Option<Theorem> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Some(Theorem::T1),
            "T2" => Some(Theorem::T2),
            "L3" => Some(Theorem::L3),
            _ => None,
        }
    }
}

/// How `k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum KSpec {
    Fixed(u64),
    /// `k = (ln(n/k))^ε`, solved as a fixed point; `0 < ε < 2`.
    LogRate(f64),
    /// `k = round(n^ε)`; `0 < ε ≤ 1` and `k < n`.
    PowerRate(f64),
}

impl KSpec {
    /// Realize `k` for sample size `n`. The result satisfies `1 <= k < n`.
    pub fn resolve(self, n: u64) -> Result<u64> {
        if n < 2 {
            return Err(Error::config(format!("n = {n} is too small")));
        }
        let k = match self {
            KSpec::Fixed(k) => k,
            KSpec::LogRate(eps) => {
                if !(eps > 0.0 && eps < 2.0) {
                    return Err(Error::config(format!(
                        "epsilon = {eps} violates the logarithmic rate condition k ~ (ln(n/k))^epsilon, \
                         which needs 0 < epsilon < 2"
                    )));
                }
                log_rate_k(n, eps)?
            }
            KSpec::PowerRate(eps) => {
                if !(eps > 0.0 && eps <= 1.0) {
                    return Err(Error::config(format!(
                        "epsilon = {eps} outside (0, 1] for the power rate k = n^epsilon"
                    )));
                }
                round(powf(n as f64, eps)) as u64
            }
        };
        if !(k >= 1 && k < n) {
            return Err(Error::config(format!("realized k = {k} must satisfy 1 <= k < n = {n}")));
        }
        Ok(k)
    }
}

/// Acceptance bands; `None` means the quantity is reported but not judged.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub ks: Option<f64>,
    pub shift: Option<f64>,
}

impl Tolerances {
    /// Defaults per limit law. The bands combine a Monte Carlo budget at
    /// `R = 2000` (standard error of the mean `≈ 0.022`, of the variance
    /// `≈ 0.032`, 5% KS critical value `≈ 0.030`) with room for finite-`n`
    /// bias.
    pub fn defaults(theorem: Theorem) -> Self {
        match theorem {
            Theorem::T1 => Tolerances {
                mean: Some(0.15),
                variance: Some(0.25),
                ks: Some(0.08),
                shift: None,
            },
            Theorem::T2 => Tolerances {
                mean: None,
                variance: None,
                ks: Some(0.10),
                shift: Some(0.05),
            },
            Theorem::L3 => Tolerances {
                mean: Some(0.1),
                variance: Some(0.15),
                ks: Some(0.05),
                shift: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentDesign {
    pub family: String,
    pub gamma0: f64,
    pub u: f64,
    pub n: u64,
    pub k: KSpec,
    pub theorem: Theorem,
    pub replications: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub tolerances: Tolerances,
}

impl ExperimentDesign {
    pub fn new(family: &str, gamma0: f64, u: f64, n: u64, k: KSpec, theorem: Theorem) -> Self {
        ExperimentDesign {
            family: family.into(),
            gamma0,
            u,
            n,
            k,
            theorem,
            replications: 2000,
            seed: 20_140_101,
            alphas: vec![0.05],
            tolerances: Tolerances::defaults(theorem),
        }
    }

    /// Regularity class the theorem needs.
    pub fn class(&self) -> Option<RegularityClass> {
        match self.theorem {
            Theorem::T1 => Some(RegularityClass::TypeA),
            Theorem::T2 => Some(RegularityClass::TypeB),
            Theorem::L3 => None,
        }
    }

    pub fn family(&self) -> Result<TailFamily> {
        builtin_family_with_class(&self.family, self.class())
    }

    /// The realized `k`.
    pub fn resolve_k(&self) -> Result<u64> {
        self.k.resolve(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family().map_err(|e| Error::config(format!("{e}")))?;
        self.resolve_k()?;
        if self.replications == 0 {
            return Err(Error::config("replications must be positive"));
        }
        if self.theorem != Theorem::L3 && self.u == 0.0 {
            return Err(Error::config("u = 0 makes both hypotheses identical; choose u != 0"));
        }
        if !self.u.is_finite() {
            return Err(Error::config("u must be finite"));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::config(format!("alpha = {a} not in (0, 1)")));
        }
        family.check_gamma(self.gamma0).map_err(|e| Error::config(format!("{e}")))?;
        Ok(())
    }
}

/// Solve `k = (ln(n/k))^ε` by fixed-point iteration from `k = ln n`, falling
/// back to bisection if the iteration does not settle, then round and
/// iterate on integers until the value is stable.
fn log_rate_k(n: u64, eps: f64) -> Result<u64> {
    let nf = n as f64;
    let g = |k: f64| powf(ln(nf / k), eps);
    let mut k = ln(nf);
    let mut settled = false;
    for _ in 0..500 {
        let next = g(k);
        if !(next > 0.0 && next < nf) {
            break;
        }
        if abs(next - k) <= 1e-12 * k {
            k = next;
            settled = true;
            break;
        }
        k = next;
    }
    if !settled {
        // k - g(k) is increasing on (0, n).
        let (lo, hi) = crate::roots::bisect(|k| k - g(k), 1e-9, nf * (1.0 - 1e-12), 1e-12, 400)?;
        k = 0.5 * (lo + hi);
    }
    let mut ki = round(k).max(1.0) as u64;
    for _ in 0..50 {
        let next = round(g(ki as f64)).max(1.0) as u64;
        if next == ki {
            return Ok(ki);
        }
        ki = next;
    }
    Ok(ki)
}

/// Rejection rate at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RejectionRate {
    pub alpha: f64,
    pub rate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McSummary {
    pub design: ExperimentDesign,
    pub k: u64,
    pub a: f64,
    pub t: Option<f64>,
    pub replications: usize,
    pub statistic: String,
    pub target_mean: f64,
    pub target_variance: f64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub ks: f64,
    pub ks_pvalue: f64,
    pub rejection: Vec<RejectionRate>,
    pub decomposition_gap_median: Option<f64>,
    pub uncentered_mean: Option<f64>,
    pub centering: Option<f64>,
    /// `uncentered_mean + u²/2 - centering`: how far the centering is from
    /// the drift actually observed.
    pub drift_residual: Option<f64>,
    /// Median of `centering_at_threshold - centering` over replications.
    pub threshold_centering_median: Option<f64>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub runtime_seconds: Option<f64>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// One replication's output.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Replicate {
    pub index: u64,
    /// The studied statistic (centered for T2).
    pub statistic: f64,
    pub uncentered: f64,
    pub gap: Option<f64>,
    pub threshold: f64,
    pub threshold_centering: Option<f64>,
}

/// Design-level quantities computed once before replicating.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub design: ExperimentDesign,
    pub family: TailFamily,
    pub k: u64,
    pub a: f64,
    pub sx_a: f64,
    pub plan: Option<LrPlan>,
    dist: TailDistribution,
}

pub fn prepare(design: &ExperimentDesign) -> Result<Prepared> {
    design.validate()?;
    let family = design.family()?;
    let k = design.resolve_k()?;
    let dist = TailDistribution::new(&family, design.gamma0)?;
    let (a, plan) = if design.theorem == Theorem::L3 {
        let a = crate::asymptotics::intermediate_quantile(&family, design.gamma0, design.n, k)?.a;
        (a, None)
    } else {
        let plan = LrPlan::new(&family, design.gamma0, design.u, design.n, k)?;
        (plan.a, Some(plan))
    };
    Ok(Prepared {
        design: design.clone(),
        family,
        k,
        a,
        sx_a: family.shape_x(a, design.gamma0),
        plan,
        dist,
    })
}

impl Prepared {
    pub fn replications(&self) -> usize {
        self.design.replications
    }

    pub fn replicate(&self, r: u64) -> Result<Replicate> {
        let d = &self.design;
        let mut rng = SeededStream::new(d.seed, r).rng();
        match &self.plan {
            None => {
                let logs = top_uniform_logs(d.n, self.k, &mut rng)?;
                let q = self.dist.inverse_survival(-exp_m1(logs[logs.len() - 1]))?;
                let z = sqrt(self.k as f64) * self.sx_a * (q - self.a);
                Ok(Replicate {
                    index: r,
                    statistic: z,
                    uncentered: z,
                    gap: None,
                    threshold: q,
                    threshold_centering: None,
                })
            }
            Some(plan) => {
                let sample = sample_topk_with(&self.dist, d.n, self.k, &mut rng)?;
                let rep = plan.report(&sample, None, true)?;
                Ok(Replicate {
                    index: r,
                    statistic: rep.centered_log_lr,
                    uncentered: rep.log_lr,
                    gap: rep.decomposition.map(|g| g.gap),
                    threshold: sample.threshold,
                    threshold_centering: rep.centering_at_threshold.map(|c| c - rep.centering),
                })
            }
        }
    }

    pub fn summarize(&self, reps: &[Replicate]) -> McSummary {
        let d = &self.design;
        let xs: Vec<f64> = reps.iter().map(|r| r.statistic).collect();
        let (target_mean, target_variance, label) = match d.theorem {
            Theorem::T1 => (-0.5 * d.u * d.u, d.u * d.u, "log_lr"),
            Theorem::T2 => (-0.5 * d.u * d.u, d.u * d.u, "centered_log_lr"),
            Theorem::L3 => (0.0, 1.0, "normalized_threshold"),
        };
        let mean = stats::mean(&xs);
        let variance = stats::variance(&xs);
        let ks = stats::ks_normal(&xs, target_mean, sqrt(target_variance));
        let rejection = match d.theorem {
            Theorem::L3 => Vec::new(),
            _ => d
                .alphas
                .iter()
                .map(|&alpha| rejection_rate(&xs, d.u, alpha))
                .collect(),
        };
        let gaps: Vec<f64> = reps.iter().filter_map(|r| r.gap).collect();
        let plan = self.plan.as_ref();
        let uncentered_mean = plan.map(|_| stats::mean(&reps.iter().map(|r| r.uncentered).collect::<Vec<_>>()));
        let centering = plan.map(|p| p.centering);
        let drift_residual = match (uncentered_mean, centering) {
            (Some(m), Some(c)) => Some(m + 0.5 * d.u * d.u - c),
            _ => None,
        };
        let tc: Vec<f64> = reps.iter().filter_map(|r| r.threshold_centering).collect();

        let tol = d.tolerances;
        let mut verdicts = Vec::new();
        let mut judge = |name: &str, value: f64, target: f64, tolerance: Option<f64>| {
            if let Some(tolerance) = tolerance {
                verdicts.push(Verdict {
                    name: name.into(),
                    value,
                    target,
                    tolerance,
                    pass: abs(value - target) <= tolerance,
                });
            }
        };
        judge("mean", mean, target_mean, tol.mean);
        judge("variance", variance, target_variance, tol.variance);
        judge("ks", ks, 0.0, tol.ks);
        if let (Some(m), Some(c)) = (uncentered_mean, centering) {
            judge("shift", m - mean, c, tol.shift);
        }
        let pass = verdicts.iter().all(|v| v.pass);
        McSummary {
            design: d.clone(),
            k: self.k,
            a: self.a,
            t: plan.map(|p| p.t),
            replications: xs.len(),
            statistic: label.into(),
            target_mean,
            target_variance,
            mean,
            variance,
            skewness: stats::skewness(&xs),
            ks,
            ks_pvalue: stats::ks_pvalue(ks, xs.len()),
            rejection,
            decomposition_gap_median: (!gaps.is_empty()).then(|| stats::median(&gaps)),
            uncentered_mean,
            centering,
            drift_residual,
            threshold_centering_median: (!tc.is_empty()).then(|| stats::median(&tc)),
            runtime_seconds: None,
            verdicts,
            pass,
        }
    }

    /// All replications in order, on the current thread.
    pub fn run_serial(&self) -> Result<McSummary> {
        let reps = (0..self.design.replications as u64)
            .map(|r| self.replicate(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.summarize(&reps))
    }
}

/// `z = (statistic + u²/2)/|u|` exceeds `Φ⁻¹(1 - α)`.
pub fn rejects(statistic: f64, u: f64, alpha: f64) -> bool {
    (statistic + 0.5 * u * u) / abs(u) > normal_quantile(1.0 - alpha)
}

fn rejection_rate(xs: &[f64], u: f64, alpha: f64) -> RejectionRate {
    let hits = xs.iter().filter(|&&x| rejects(x, u, alpha)).count();
    let rate = hits as f64 / xs.len() as f64;
    RejectionRate {
        alpha,
        rate,
        se: stats::proportion_se(rate, xs.len()),
    }
}

fn run_checked(design: &ExperimentDesign, theorem: Theorem) -> Result<McSummary> {
    if design.theorem != theorem {
        return Err(Error::config(format!(
            "design is for {:?}, not {:?}",
            design.theorem, theorem
        )));
    }
    prepare(design)?.run_serial()
}

pub fn run_theorem1(design: &ExperimentDesign) -> Result<McSummary> {
    run_checked(design, Theorem::T1)
}

pub fn run_theorem2(design: &ExperimentDesign) -> Result<McSummary> {
    run_checked(design, Theorem::T2)
}

pub fn run_lemma3(design: &ExperimentDesign) -> Result<McSummary> {
    run_checked(design, Theorem::L3)
}

/// One row of a size/power table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PowerRow {
    pub u: f64,
    pub t: Option<f64>,
    pub size: Vec<RejectionRate>,
    pub power: Vec<RejectionRate>,
    /// Why the row could not be computed, if it could not.
    pub flagged: Option<String>,
}

/// Plans for every `u` on the grid, plus the alternative distributions.
#[derive(Debug, Clone)]
pub struct PowerPrepared {
    pub design: ExperimentDesign,
    pub k: u64,
    pub u_grid: Vec<f64>,
    null: TailDistribution,
    rows: Vec<core::result::Result<(LrPlan, TailDistribution), String>>,
}

/// Per replication: for each `u`, the statistic under the null and under
/// the alternative (`None` for flagged rows).
pub type PowerReplicate = Vec<Option<(f64, f64)>>;

pub fn prepare_power(design: &ExperimentDesign, u_grid: &[f64]) -> Result<PowerPrepared> {
    design.validate()?;
    if u_grid.is_empty() || u_grid.iter().any(|&u| u == 0.0 || !u.is_finite()) {
        return Err(Error::config("u grid must be non-empty with finite, nonzero entries"));
    }
    let family = design.family()?;
    let k = design.resolve_k()?;
    let null = TailDistribution::new(&family, design.gamma0)?;
    let rows = u_grid
        .iter()
        .map(|&u| {
            let row = LrPlan::new(&family, design.gamma0, u, design.n, k)
                .and_then(|plan| Ok((plan, TailDistribution::new(&family, design.gamma0 + plan.t)?)));
            row.map_err(|e| format!("{e}"))
        })
        .collect();
    Ok(PowerPrepared {
        design: design.clone(),
        k,
        u_grid: u_grid.to_vec(),
        null,
        rows,
    })
}

impl PowerPrepared {
    pub fn replications(&self) -> usize {
        self.design.replications
    }

    /// Replication `r` draws its null sample from stream `r` and, for each
    /// `u`, its alternative sample from stream `r` as well (common random
    /// numbers across hypotheses).
    pub fn replicate(&self, r: u64) -> Result<PowerReplicate> {
        let d = &self.design;
        let stream = SeededStream::new(d.seed, r);
        let null_sample = sample_topk_with(&self.null, d.n, self.k, &mut stream.rng())?;
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            match row {
                Err(_) => out.push(None),
                Ok((plan, alt)) => {
                    let alt_sample = sample_topk_with(alt, d.n, self.k, &mut stream.rng())?;
                    let s0 = plan.report(&null_sample, None, false)?.centered_log_lr;
                    let s1 = plan.report(&alt_sample, None, false)?.centered_log_lr;
                    out.push(Some((s0, s1)));
                }
            }
        }
        Ok(out)
    }

    pub fn summarize(&self, reps: &[PowerReplicate]) -> Vec<PowerRow> {
        let d = &self.design;
        self.u_grid
            .iter()
            .enumerate()
            .map(|(i, &u)| match &self.rows[i] {
                Err(msg) => PowerRow {
                    u,
                    t: None,
                    size: Vec::new(),
                    power: Vec::new(),
                    flagged: Some(msg.clone()),
                },
                Ok((plan, _)) => {
                    let s0: Vec<f64> = reps.iter().filter_map(|r| r[i].map(|p| p.0)).collect();
                    let s1: Vec<f64> = reps.iter().filter_map(|r| r[i].map(|p| p.1)).collect();
                    PowerRow {
                        u,
                        t: Some(plan.t),
                        size: d.alphas.iter().map(|&a| rejection_rate(&s0, u, a)).collect(),
                        power: d.alphas.iter().map(|&a| rejection_rate(&s1, u, a)).collect(),
                        flagged: None,
                    }
                }
            })
            .collect()
    }

    pub fn run_serial(&self) -> Result<Vec<PowerRow>> {
        let reps = (0..self.design.replications as u64)
            .map(|r| self.replicate(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.summarize(&reps))
    }
}

/// Empirical size under `γ₀` and power under `γ₀ + t(k, u)` for each `u`.
pub fn size_power_table(design: &ExperimentDesign, u_grid: &[f64]) -> Result<Vec<PowerRow>> {
    prepare_power(design, u_grid)?.run_serial()
}
