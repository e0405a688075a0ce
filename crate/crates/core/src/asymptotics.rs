//! Asymptotic machinery around the intermediate order statistic: Laplace
//! expansion of tail integrals, the intermediate quantile `a = F̄⁻¹(k/n)`,
//! the local step `t(k, u)`, the centering term `H`, the Von Mises parts and
//! trend diagnostics for the regularity conditions.
//!
//! Everything here except [`intermediate_quantile`] works with `S̃` alone and
//! never touches `ln C(γ)`.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::distribution::{tail_factor, weighted_tail_factor, TailDistribution, UpperTail};
use crate::family::{Partial, RegularityClass, TailFamily};
use crate::math::{abs, exp, ln, powf, sqrt};
use crate::{Error, Result};

/// Laplace approximation of `∫_q^∞ exp(-S̃(x)) dx`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExpansionResult {
    pub value: f64,
    /// Dimensionless coefficients `c₀, c₁, c₂` (as many as `order`).
    pub terms: Vec<f64>,
    /// `-S̃(q) + ln(Σ c_k)`.
    pub log_value: f64,
    pub order: usize,
}

impl ExpansionResult {
    /// `|c₁/c₀| < 1` and `|c₂/c₁| < 1` where those terms exist. Expected to
    /// hold only for large enough `q`.
    pub fn series_sane(&self) -> bool {
        self.terms
            .windows(2)
            .all(|w| w[1] == 0.0 || abs(w[1] / w[0]) < 1.0)
    }
}

/// `c₀ = 1/S'`, `c₁ = -S''/S'³`, `c₂ = 3S''²/S'⁵ - S'''/S'⁴` at `(q, γ)`.
pub fn laplace_tail(family: &TailFamily, gamma: f64, q: f64, order: usize) -> Result<ExpansionResult> {
    if !(1..=3).contains(&order) {
        return Err(Error::domain(format!("expansion order {order} not in 1..=3")));
    }
    family.check_gamma(gamma)?;
    let p = family.partials(q, gamma);
    if !(p.x > 0.0) {
        return Err(Error::domain(format!(
            "S_x({q}, {gamma}) = {} <= 0: expansion point in the pre-monotone region",
            p.x
        )));
    }
    let s1 = p.x;
    let all = [
        1.0 / s1,
        -p.xx / (s1 * s1 * s1),
        3.0 * p.xx * p.xx / powf(s1, 5.0) - p.xxx / powf(s1, 4.0),
    ];
    let terms = all[..order].to_vec();
    let sum: f64 = terms.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::numerical("Laplace series sum is not positive at this point", sum));
    }
    let log_value = -p.s + ln(sum);
    Ok(ExpansionResult {
        value: exp(log_value),
        terms,
        log_value,
        order,
    })
}

/// Weight in [`weighted_tail_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailWeight {
    SGamma,
    SGammaGamma,
    SGammaSquared,
}

/// `∫_q^∞ w e^{-S̃} dx / ∫_q^∞ e^{-S̃} dx` by quadrature.
pub fn weighted_tail_ratio(family: &TailFamily, gamma: f64, q: f64, weight: TailWeight) -> Result<f64> {
    let j = tail_factor(family, gamma, q)?;
    let num = match weight {
        TailWeight::SGamma => weighted_tail_factor(family, gamma, q, |x| family.shape_gamma(x, gamma))?,
        TailWeight::SGammaGamma => {
            weighted_tail_factor(family, gamma, q, |x| family.shape_gamma_gamma(x, gamma))?
        }
        TailWeight::SGammaSquared => weighted_tail_factor(family, gamma, q, |x| {
            let g = family.shape_gamma(x, gamma);
            g * g
        })?,
    };
    Ok(num / j)
}

/// `E[S̃_γ(X) - S̃_γ(q) | X > q]`, i.e. `I₂/I₁ - S̃_γ(q)` without the
/// cancellation of computing the two terms separately.
pub fn excess_gamma_score(family: &TailFamily, gamma: f64, q: f64) -> Result<f64> {
    let base = family.shape_gamma(q, gamma);
    let j = tail_factor(family, gamma, q)?;
    let num = weighted_tail_factor(family, gamma, q, |x| family.shape_gamma(x, gamma) - base)?;
    Ok(num / j)
}

/// Solution of `F̄(a) = k/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuantileSolution {
    pub a: f64,
    pub tail_prob: f64,
    /// `F̄(a) - k/n` as achieved.
    pub residual: f64,
    pub iterations: usize,
}

/// The intermediate quantile `a = F̄⁻¹(k/n)` of the true normalized law.
///
/// Newton on `ln F̄` is started from the root of the one-term surrogate
/// `S̃(a) + ln S̃_x(a) - ln C = ln(n/k)`.
pub fn intermediate_quantile(family: &TailFamily, gamma: f64, n: u64, k: u64) -> Result<QuantileSolution> {
    if !(k >= 1 && k < n) {
        return Err(Error::domain(format!("need 1 <= k < n, got n = {n}, k = {k}")));
    }
    let tail_prob = k as f64 / n as f64;
    let ln_p = ln(k as f64) - ln(n as f64);
    let tail = UpperTail::new(family, gamma)?;
    if tail.covers(ln_p) {
        let s = tail.solve(ln_p)?;
        return Ok(QuantileSolution {
            a: s.x,
            tail_prob,
            residual: s.residual,
            iterations: s.iterations,
        });
    }
    let dist = TailDistribution::new(family, gamma)?;
    let a = dist.inverse_survival(tail_prob)?;
    Ok(QuantileSolution {
        a,
        tail_prob,
        residual: dist.sf(a)? - tail_prob,
        iterations: 0,
    })
}

/// `t = (u/√k) · S̃_x(a, γ) / S̃_xγ(a, γ)`.
pub fn local_step(family: &TailFamily, gamma: f64, a: f64, k: u64, u: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    family.check_gamma(gamma)?;
    let sxg = family.partials(a, gamma).xg;
    if sxg == 0.0 || !sxg.is_finite() {
        return Err(Error::DegenerateStep(format!("S_xg({a}, {gamma}) = {sxg}; the local step is undefined")));
    }
    let t = u / sqrt(k as f64) * (family.shape_x(a, gamma) / sxg);
    if !t.is_finite() {
        return Err(Error::numerical("local step is not finite", t));
    }
    if !family.gamma_admissible(gamma + t) {
        let (lo, hi) = family.gamma_domain();
        return Err(Error::domain(format!(
            "step t = {t} moves gamma from {gamma} to {} outside the domain ({lo}, {hi})",
            gamma + t
        )));
    }
    Ok(t)
}

/// The centering function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CenteringTerm {
    /// `H(x) = u · (S̃_x/S̃_xγ) · bracket`; multiply by `√k` for the drift.
    pub h: f64,
    /// Leading-order surrogate `-S̃_xx/S̃_x²`.
    pub surrogate: f64,
    /// `I₂/I₁ - S̃_γ - S̃_xγ/S̃_x - S̃_xxγ/S̃_x² + 2 S̃_xx S̃_xγ/S̃_x³`.
    pub bracket: f64,
}

/// `H(x)` with the integral term computed by quadrature.
pub fn centering_h(family: &TailFamily, gamma: f64, x: f64, k: u64, u: f64) -> Result<CenteringTerm> {
    local_step(family, gamma, x, k, u)?;
    let p = family.partials(x, gamma);
    let excess = excess_gamma_score(family, gamma, x)?;
    let sx = p.x;
    let bracket = excess - p.xg / sx - p.xxg / (sx * sx) + 2.0 * p.xx * p.xg / (sx * sx * sx);
    let h = u * (sx / p.xg) * bracket;
    Ok(CenteringTerm {
        h,
        surrogate: -p.xx / (sx * sx),
        bracket,
    })
}

/// Von Mises representation parts at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VonMisesParts {
    /// `1/S̃_x`.
    pub a_aux: f64,
    /// `1 + S̃_xx/S̃_x²`.
    pub g_aux: f64,
    /// `1 - S̃_xx/S̃_x²`.
    pub d_aux: f64,
}

pub fn von_mises_parts(family: &TailFamily, gamma: f64, x: f64) -> Result<VonMisesParts> {
    family.check_gamma(gamma)?;
    if !(x > family.x1(gamma)) {
        return Err(Error::domain(format!("x = {x} is not past x1 = {}", family.x1(gamma))));
    }
    let p = family.partials(x, gamma);
    let r = p.xx / (p.x * p.x);
    Ok(VonMisesParts {
        a_aux: 1.0 / p.x,
        g_aux: 1.0 + r,
        d_aux: 1.0 - r,
    })
}

/// Geometric grid `start · ratio^i`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.start * powf(self.ratio, i as f64)).collect()
    }
}

/// Settings for [`regularity_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegularityOptions {
    pub grid: GridSpec,
    /// `ε` in A1 and B1.
    pub epsilon: f64,
    /// `δ` in B2.
    pub delta: f64,
}

impl RegularityOptions {
    /// Six decades from 10 for most families; the Gumbel-type shape explodes
    /// too fast for that, so it gets a short doubling grid.
    pub fn for_family(family: &TailFamily, gamma: f64) -> Self {
        let grid = match family.builtin() {
            crate::Builtin::GumbelType => GridSpec {
                start: 2.0 / gamma,
                ratio: 2.0,
                count: 6,
            },
            _ => GridSpec {
                start: 10.0,
                ratio: 10.0,
                count: 6,
            },
        };
        RegularityOptions {
            grid,
            epsilon: 0.1,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrendVerdict {
    Approaching,
    Inconclusive,
    Violated,
}

/// One condition evaluated on the grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionDiagnostic {
    pub id: String,
    pub ratio: String,
    /// Stated limit: a number, or `"+inf"`.
    pub limit: String,
    /// Ratio per grid point; `None` where it was not finite.
    pub values: Vec<Option<f64>>,
    pub unusable: Vec<usize>,
    pub verdict: TrendVerdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegularityReport {
    pub family: String,
    pub gamma: f64,
    pub class: RegularityClass,
    pub grid: Vec<f64>,
    pub conditions: Vec<ConditionDiagnostic>,
    pub overall: TrendVerdict,
}

#[derive(Clone, Copy)]
enum Limit {
    Infinity,
    Value(f64),
}

fn classify(values: &[Option<f64>], limit: Limit) -> (TrendVerdict, Option<String>) {
    let usable: Vec<f64> = values.iter().flatten().copied().collect();
    if usable.len() < 3 {
        return (TrendVerdict::Inconclusive, Some("fewer than three usable grid points".into()));
    }
    let m = usable.len();
    if let Limit::Infinity = limit {
        if usable[m - 1] <= 0.0 {
            return (TrendVerdict::Violated, Some("ratio is not positive at the top of the grid".into()));
        }
    }
    let dist: Vec<f64> = usable
        .iter()
        .map(|&r| match limit {
            Limit::Infinity => 1.0 / r,
            Limit::Value(l) => abs(r - l),
        })
        .collect();
    let (d0, d1, d2) = (dist[m - 3], dist[m - 2], dist[m - 1]);
    if d0 > d1 && d1 > d2 {
        (TrendVerdict::Approaching, None)
    } else if d0 < d1 && d1 < d2 {
        (TrendVerdict::Violated, Some("moving away from the limit over the top of the grid".into()))
    } else {
        (TrendVerdict::Inconclusive, Some("no monotone trend over the top of the grid".into()))
    }
}

fn diagnostic(
    id: &str,
    ratio: &str,
    limit: Limit,
    grid: &[f64],
    f: impl Fn(f64) -> f64,
) -> ConditionDiagnostic {
    let values: Vec<Option<f64>> = grid
        .iter()
        .map(|&x| {
            let v = f(x);
            if v.is_finite() {
                Some(v)
            } else {
                None
            }
        })
        .collect();
    let unusable = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.is_none().then_some(i))
        .collect();
    let (verdict, note) = classify(&values, limit);
    ConditionDiagnostic {
        id: id.into(),
        ratio: ratio.into(),
        limit: match limit {
            Limit::Infinity => "+inf".into(),
            Limit::Value(v) => format!("{v}"),
        },
        values,
        unusable,
        verdict,
        note,
    }
}

/// Sign-stability check for every partial up to `S̃_xxxγ` on the grid.
/// A partial that is zero at every point counts as identically zero.
fn sign_diagnostic(id: &str, family: &TailFamily, gamma: f64, grid: &[f64]) -> ConditionDiagnostic {
    let parts: Vec<_> = grid.iter().map(|&x| family.partials(x, gamma)).collect();
    let mut changing = Vec::new();
    let mut values = Vec::with_capacity(grid.len());
    let mut unusable = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let finite = Partial::ALL.iter().all(|&q| p.get(q).is_finite());
        if !finite {
            unusable.push(i);
        }
    }
    for &q in &Partial::ALL {
        let signs: Vec<i8> = parts
            .iter()
            .enumerate()
            .filter(|(i, _)| !unusable.contains(i))
            .map(|(_, p)| {
                let v = p.get(q);
                if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect();
        if signs.iter().all(|&s| s == 0) {
            continue;
        }
        if signs.windows(2).any(|w| w[0] != w[1]) {
            changing.push(q.label());
        }
    }
    for (i, p) in parts.iter().enumerate() {
        if unusable.contains(&i) {
            values.push(None);
            continue;
        }
        let last = &parts[parts.len() - 1];
        let flips = Partial::ALL
            .iter()
            .filter(|&&q| (p.get(q) > 0.0) != (last.get(q) > 0.0) || (p.get(q) == 0.0) != (last.get(q) == 0.0))
            .count();
        values.push(Some(flips as f64));
    }
    let (verdict, note) = if changing.is_empty() {
        (TrendVerdict::Approaching, None)
    } else {
        (
            TrendVerdict::Inconclusive,
            Some(format!("sign changes on the grid: {}", changing.join(", "))),
        )
    };
    ConditionDiagnostic {
        id: id.into(),
        ratio: "number of partials whose sign differs from the top grid point".into(),
        limit: "0".into(),
        values,
        unusable,
        verdict,
        note,
    }
}

/// Evaluate the defining ratio of each regularity condition of `class` on a
/// geometric grid and classify its trend.
///
/// This is a heuristic: a finite grid can neither prove nor refute a limit.
/// "approaching" means the distance to the stated limit fell over the last
/// three usable points, "violated" means it rose over them (or a ratio that
/// must diverge to `+∞` ends non-positive), anything else is "inconclusive".
/// For the sign conditions a sign change on the grid gives "inconclusive".
pub fn regularity_report(
    family: &TailFamily,
    gamma: f64,
    class: RegularityClass,
    options: &RegularityOptions,
) -> Result<RegularityReport> {
    family.check_gamma(gamma)?;
    let g = options.grid;
    if !(g.ratio > 1.0 && g.count >= 2 && g.start > family.support_lower() && g.start.is_finite()) {
        return Err(Error::domain(format!(
            "grid must start inside the support with ratio > 1 and at least two points, got {g:?}"
        )));
    }
    let grid = g.points();
    let eps = options.epsilon;
    let delta = options.delta;
    let s = |x: f64| family.shape(x, gamma);
    let gamma_log_ratio = |k: usize| {
        move |x: f64| {
            let p = family.partials(x, gamma);
            let d = match k {
                1 => p.g,
                2 => p.gg,
                _ => p.ggg,
            };
            ln(abs(d)) / ln(p.s)
        }
    };
    let mut conditions = Vec::new();
    match class {
        RegularityClass::TypeA => {
            conditions.push(diagnostic("A1", &format!("S/x^(1+{eps})"), Limit::Infinity, &grid, |x| {
                s(x) / powf(x, 1.0 + eps)
            }));
            conditions.push(sign_diagnostic("A2", family, gamma, &grid));
            for k in 1..=3 {
                conditions.push(diagnostic(
                    &format!("A3(k={k})"),
                    &format!("ln|d^{k}S/dg^{k}| / ln S"),
                    Limit::Value(1.0),
                    &grid,
                    gamma_log_ratio(k),
                ));
            }
        }
        RegularityClass::TypeB => {
            conditions.push(diagnostic(
                "B1",
                &format!("S/(ln x)^(1+{eps})"),
                Limit::Infinity,
                &grid,
                |x| s(x) / powf(ln(x), 1.0 + eps),
            ));
            conditions.push(diagnostic(
                "B2",
                &format!("ln S_x / S^(1-{delta})"),
                Limit::Value(0.0),
                &grid,
                |x| ln(family.shape_x(x, gamma)) / powf(s(x), 1.0 - delta),
            ));
            conditions.push(sign_diagnostic("B3", family, gamma, &grid));
            for k in 1..=3 {
                conditions.push(diagnostic(
                    &format!("B4(k={k})"),
                    &format!("ln|d^{k}S/dg^{k}| / ln S"),
                    Limit::Value(1.0),
                    &grid,
                    gamma_log_ratio(k),
                ));
            }
            conditions.push(diagnostic(
                "B4(T)",
                "max over partials T up to third order of ln|T| / S",
                Limit::Value(0.0),
                &grid,
                |x| {
                    let p = family.partials(x, gamma);
                    let mut worst: f64 = 0.0;
                    for q in [
                        Partial::X,
                        Partial::G,
                        Partial::XX,
                        Partial::XG,
                        Partial::GG,
                        Partial::XXX,
                        Partial::XXG,
                        Partial::XGG,
                        Partial::GGG,
                    ] {
                        let v = p.get(q);
                        if v != 0.0 {
                            let r = ln(abs(v)) / p.s;
                            if abs(r) > abs(worst) {
                                worst = r;
                            }
                        }
                    }
                    worst
                },
            ));
        }
    }
    let overall = if conditions.iter().any(|c| c.verdict == TrendVerdict::Violated) {
        TrendVerdict::Violated
    } else if conditions.iter().all(|c| c.verdict == TrendVerdict::Approaching) {
        TrendVerdict::Approaching
    } else {
        TrendVerdict::Inconclusive
    };
    Ok(RegularityReport {
        family: family.name().into(),
        gamma,
        class,
        grid,
        conditions,
        overall,
    })
}
