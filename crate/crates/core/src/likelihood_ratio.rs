//! The top-k log-likelihood ratio, its three-factor decomposition and the
//! one-sided test built on its normal limit.
//!
//! Given the threshold `q = X_(n-k)`, the `k` largest observations are
//! i.i.d. from the law above `q`, so the conditional log-likelihood is
//! `-Σ (S̃(X_i) - S̃(q)) - k ln J(q)` with `J(q) = ∫_q^∞ exp(-(S̃ - S̃(q)))`.
//! The `k!` ordering constant is the same under both hypotheses and dropped.
//! `ln C(γ)` cancels as well, so nothing here reads the normalizer except
//! the intermediate quantile.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::asymptotics::{centering_h, intermediate_quantile, local_step};
use crate::distribution::tail_factor;
use crate::family::{RegularityClass, TailFamily};
use crate::math::{abs, ln, sqrt};
use crate::special::{normal_quantile, normal_sf};
use crate::{Error, Result};

/// The `k` largest order statistics of a sample of size `n` and the next one
/// down.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TopKSample {
    pub n: u64,
    pub k: u64,
    /// `X_(n), ..., X_(n-k+1)`, descending.
    pub top: Vec<f64>,
    /// `X_(n-k)`.
    pub threshold: f64,
}

impl TopKSample {
    pub fn new(n: u64, top: Vec<f64>, threshold: f64) -> Result<Self> {
        let s = TopKSample {
            n,
            k: top.len() as u64,
            top,
            threshold,
        };
        s.validate()?;
        Ok(s)
    }

    /// Top `k` and threshold of an unsorted sample.
    pub fn from_values(values: &[f64], k: usize) -> Result<Self> {
        if k == 0 || k >= values.len() {
            return Err(Error::domain(format!(
                "need 1 <= k < number of values, got k = {k} with {} values",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite value {bad} in sample")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let threshold = sorted[k];
        sorted.truncate(k);
        TopKSample::new(values.len() as u64, sorted, threshold)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.n || self.top.len() as u64 != self.k {
            return Err(Error::domain(format!(
                "need 1 <= k < n with k values, got n = {}, k = {}, {} values",
                self.n,
                self.k,
                self.top.len()
            )));
        }
        if !self.threshold.is_finite() || self.top.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample contains non-finite values"));
        }
        if self.top.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("top values must be in descending order"));
        }
        if self.top[self.top.len() - 1] < self.threshold {
            return Err(Error::domain("threshold exceeds the smallest top value"));
        }
        Ok(())
    }

    fn check_against(&self, family: &TailFamily, gamma: f64) -> Result<()> {
        self.validate()?;
        if let Some(bad) = self.top.iter().chain([&self.threshold]).find(|&&v| !family.in_support(v)) {
            return Err(Error::domain(format!("value {bad} outside the support of `{}`", family.name())));
        }
        let x1 = family.x1(gamma);
        if !(self.threshold > x1) {
            return Err(Error::domain(format!(
                "threshold {} is not past x1 = {x1} for gamma = {gamma}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Conditional log-likelihood of the top `k` given the threshold, without
/// the ordering constant.
pub fn topk_loglik(family: &TailFamily, gamma: f64, sample: &TopKSample) -> Result<f64> {
    family.check_gamma(gamma)?;
    sample.check_against(family, gamma)?;
    let q = sample.threshold;
    let sq = family.shape(q, gamma);
    let sum: f64 = sample.top.iter().map(|&x| family.shape(x, gamma) - sq).sum();
    let j = tail_factor(family, gamma, q)?;
    Ok(-sum - sample.k as f64 * ln(j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Decision {
    Reject,
    Retain,
}

/// `ln A₁, ln A₂, ln A₃` and `|ln A₁ + ln A₂ + ln A₃ - log_lr|`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Decomposition {
    pub ln_a1: f64,
    pub ln_a2: f64,
    pub ln_a3: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LrReport {
    pub family: String,
    pub class: RegularityClass,
    pub log_lr: f64,
    pub u: f64,
    pub t: f64,
    pub gamma0: f64,
    pub n: u64,
    pub k: u64,
    /// Intermediate quantile `F̄⁻¹(k/n)` under `γ₀`.
    pub a: f64,
    /// `H(a)`; zero for TypeA runs.
    pub h: f64,
    /// Drift removed from `log_lr`: `-√k·H(a)` for TypeB runs, zero for
    /// TypeA. See the crate README for the sign.
    pub centering: f64,
    pub centered_log_lr: f64,
    /// `-√k·H(q)` at the observed threshold, for comparison with `centering`.
    pub centering_at_threshold: Option<f64>,
    pub decomposition: Option<Decomposition>,
    pub decision: Option<Decision>,
    pub p_value: Option<f64>,
    pub alpha: Option<f64>,
}

/// The parts of the statistic that depend only on the design, not on the
/// sample. Build once and evaluate many samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrPlan {
    pub family: TailFamily,
    pub gamma0: f64,
    pub u: f64,
    pub n: u64,
    pub k: u64,
    pub a: f64,
    pub t: f64,
    pub h: f64,
    pub centering: f64,
}

impl LrPlan {
    pub fn new(family: &TailFamily, gamma0: f64, u: f64, n: u64, k: u64) -> Result<Self> {
        family.check_gamma(gamma0)?;
        if !u.is_finite() {
            return Err(Error::domain(format!("u = {u} is not finite")));
        }
        let a = intermediate_quantile(family, gamma0, n, k)?.a;
        let t = local_step(family, gamma0, a, k, u)?;
        let (h, centering) = match family.regularity_class() {
            RegularityClass::TypeA => (0.0, 0.0),
            RegularityClass::TypeB => {
                let h = centering_h(family, gamma0, a, k, u)?.h;
                (h, -sqrt(k as f64) * h)
            }
        };
        Ok(LrPlan {
            family: *family,
            gamma0,
            u,
            n,
            k,
            a,
            t,
            h,
            centering,
        })
    }

    fn check_sample(&self, sample: &TopKSample) -> Result<()> {
        if sample.n != self.n || sample.k != self.k {
            return Err(Error::domain(format!(
                "sample has n = {}, k = {} but the plan expects n = {}, k = {}",
                sample.n, sample.k, self.n, self.k
            )));
        }
        sample.check_against(&self.family, self.gamma0)?;
        sample.check_against(&self.family, self.gamma0 + self.t)
    }

    /// `ln R = ln L(γ₀ + t) - ln L(γ₀)`, computed directly as a difference
    /// of shapes so the large common terms never appear.
    pub fn log_lr(&self, sample: &TopKSample) -> Result<f64> {
        self.check_sample(sample)?;
        if self.t == 0.0 {
            return Ok(0.0);
        }
        let f = &self.family;
        let (g0, g1) = (self.gamma0, self.gamma0 + self.t);
        let q = sample.threshold;
        let dq = f.shape(q, g1) - f.shape(q, g0);
        let sum: f64 = sample.top.iter().map(|&x| (f.shape(x, g1) - f.shape(x, g0)) - dq).sum();
        let j0 = tail_factor(f, g0, q)?;
        let j1 = tail_factor(f, g1, q)?;
        Ok(-sum - sample.k as f64 * (ln(j1) - ln(j0)))
    }

    pub fn decompose(&self, sample: &TopKSample) -> Result<(f64, f64, f64)> {
        self.check_sample(sample)?;
        let f = &self.family;
        let (g0, g1) = (self.gamma0, self.gamma0 + self.t);
        let q = sample.threshold;
        let k = sample.k as f64;
        if self.t == 0.0 {
            return Ok((0.0, 0.0, 0.0));
        }
        let dq = f.shape(q, g1) - f.shape(q, g0);
        let ln_a1 = -sample.top.iter().map(|&x| f.shape(x, g1) - f.shape(x, g0)).sum::<f64>() + k * dq;
        let p0 = f.partials(q, g0);
        let p1 = f.partials(q, g1);
        let ln_a2 = k * (ln(p1.x) - ln(p0.x));
        let b0 = 1.0 - p0.xx / (p0.x * p0.x);
        let b1 = 1.0 - p1.xx / (p1.x * p1.x);
        if !(b0 > 0.0 && b1 > 0.0) {
            return Err(Error::numerical(
                "1 - S_xx/S_x^2 is not positive at the threshold; the expansion is invalid there",
                b0.min(b1),
            ));
        }
        let ln_a3 = k * (ln(b0) - ln(b1));
        Ok((ln_a1, ln_a2, ln_a3))
    }

    /// Full report for one sample. With `alpha`, the test decision is filled
    /// in; for `u = 0` the hypotheses coincide and the decision is "retain"
    /// with p-value 1.
    pub fn report(&self, sample: &TopKSample, alpha: Option<f64>, decompose: bool) -> Result<LrReport> {
        let log_lr = self.log_lr(sample)?;
        let decomposition = if decompose {
            let (ln_a1, ln_a2, ln_a3) = self.decompose(sample)?;
            Some(Decomposition {
                ln_a1,
                ln_a2,
                ln_a3,
                gap: abs(ln_a1 + ln_a2 + ln_a3 - log_lr),
            })
        } else {
            None
        };
        let centering_at_threshold = match self.family.regularity_class() {
            RegularityClass::TypeB if self.u != 0.0 => {
                let h = centering_h(&self.family, self.gamma0, sample.threshold, self.k, self.u)?.h;
                Some(-sqrt(self.k as f64) * h)
            }
            _ => None,
        };
        let mut report = LrReport {
            family: self.family.name().into(),
            class: self.family.regularity_class(),
            log_lr,
            u: self.u,
            t: self.t,
            gamma0: self.gamma0,
            n: self.n,
            k: self.k,
            a: self.a,
            h: self.h,
            centering: self.centering,
            centered_log_lr: log_lr - self.centering,
            centering_at_threshold,
            decomposition,
            decision: None,
            p_value: None,
            alpha,
        };
        if let Some(alpha) = alpha {
            let (decision, p) = if self.u == 0.0 {
                check_alpha(alpha)?;
                (Decision::Retain, 1.0)
            } else {
                test_decision(&report, alpha)?
            };
            report.decision = Some(decision);
            report.p_value = Some(p);
        }
        Ok(report)
    }
}

/// The statistic for one sample: quantile, step, centering, `ln R` and
/// optionally the test decision.
pub fn log_lr(
    family: &TailFamily,
    gamma0: f64,
    u: f64,
    sample: &TopKSample,
    alpha: Option<f64>,
) -> Result<LrReport> {
    LrPlan::new(family, gamma0, u, sample.n, sample.k)?.report(sample, alpha, true)
}

/// `(ln A₁, ln A₂, ln A₃)` for one sample.
pub fn decompose_a123(family: &TailFamily, gamma0: f64, u: f64, sample: &TopKSample) -> Result<(f64, f64, f64)> {
    LrPlan::new(family, gamma0, u, sample.n, sample.k)?.decompose(sample)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha = {alpha} not in (0, 1)")))
    }
}

/// Standardize `z = (centered_log_lr + u²/2)/|u|` and reject when
/// `z > Φ⁻¹(1 - α)`; the p-value is `1 - Φ(z)`.
pub fn test_decision(report: &LrReport, alpha: f64) -> Result<(Decision, f64)> {
    check_alpha(alpha)?;
    let u = report.u;
    if u == 0.0 {
        return Err(Error::DegenerateStep(
            "u = 0 makes both hypotheses identical; there is nothing to test".into(),
        ));
    }
    let z = (report.centered_log_lr + 0.5 * u * u) / abs(u);
    let p = normal_sf(z);
    let decision = if z > normal_quantile(1.0 - alpha) {
        Decision::Reject
    } else {
        Decision::Retain
    };
    Ok((decision, p))
}
