//! The work behind each subcommand, separated from argument parsing so the
//! test suite can call it directly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};
use toplr_core::asymptotics::{
    centering_h, intermediate_quantile, laplace_tail, local_step, regularity_report, von_mises_parts,
    RegularityOptions, RegularityReport,
};
use toplr_core::experiments::{KSpec, Replicate};
use toplr_core::family::{builtin_family, builtin_family_with_class};
use toplr_core::likelihood_ratio::{test_decision, LrPlan};
use toplr_core::{LrReport, RegularityClass, TopKSample};

use crate::{CliError, CliResult};

pub fn parse_class(s: &str) -> CliResult<RegularityClass> {
    match s.to_ascii_lowercase().as_str() {
        "a" | "type_a" | "typea" => Ok(RegularityClass::TypeA),
        "b" | "type_b" | "typeb" => Ok(RegularityClass::TypeB),
        _ => Err(CliError::Input(format!("class must be `a` or `b`, got `{s}`"))),
    }
}

/// `k` given directly or through a rate exponent. The rate follows the
/// class: `k = (ln(n/k))^ε` for TypeA, `k = n^ε` for TypeB.
pub fn k_spec(k: Option<u64>, epsilon: Option<f64>, class: RegularityClass) -> CliResult<KSpec> {
    match (k, epsilon) {
        (Some(k), None) => Ok(KSpec::Fixed(k)),
        (None, Some(eps)) => Ok(match class {
            RegularityClass::TypeA => KSpec::LogRate(eps),
            RegularityClass::TypeB => KSpec::PowerRate(eps),
        }),
        _ => Err(CliError::Input("give exactly one of --k or --epsilon".into())),
    }
}

/// Run the test on a data set.
pub fn test_data(
    values: &[f64],
    family: &str,
    class: Option<RegularityClass>,
    gamma0: f64,
    k: (Option<u64>, Option<f64>),
    u: f64,
    alpha: f64,
) -> CliResult<LrReport> {
    let family = builtin_family_with_class(family, class)?;
    let n = values.len() as u64;
    let k = k_spec(k.0, k.1, family.regularity_class())?;
    let k = match k {
        KSpec::Fixed(k) if k >= n => {
            return Err(CliError::Input(format!(
                "k = {k} needs at least {} values, the data has {n}",
                k + 1
            )));
        }
        spec => spec.resolve(n)?,
    };
    let sample = TopKSample::from_values(values, k as usize)?;
    let plan = LrPlan::new(&family, gamma0, u, n, k)?;
    let mut report = plan.report(&sample, None, true)?;
    let (decision, p) = test_decision(&report, alpha)?;
    report.decision = Some(decision);
    report.p_value = Some(p);
    report.alpha = Some(alpha);
    Ok(report)
}

/// Collects outputs of the individual operations; failures become `null`
/// with the reason recorded under `unavailable`.
struct Sections {
    out: Map<String, Value>,
    unavailable: Map<String, Value>,
}

impl Sections {
    fn put<T: Serialize>(&mut self, key: &str, r: toplr_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => {
                self.out.insert(key.into(), serde_json::to_value(&v).expect("serializable"));
                Some(v)
            }
            Err(e) => {
                self.out.insert(key.into(), Value::Null);
                self.unavailable.insert(key.into(), Value::String(e.to_string()));
                None
            }
        }
    }
}

/// Asymptotic quantities at one design point.
pub fn inspect(
    family: &str,
    class: Option<RegularityClass>,
    gamma: f64,
    n: u64,
    k: (Option<u64>, Option<f64>),
    u: f64,
) -> CliResult<Value> {
    // The regularity report checks the requested class even when the family
    // does not claim it; everything else uses the family's own class.
    let family = builtin_family(family)?;
    family.check_gamma(gamma)?;
    let class = class.unwrap_or(family.regularity_class());
    let k = k_spec(k.0, k.1, class)?.resolve(n)?;
    let mut s = Sections {
        out: Map::new(),
        unavailable: Map::new(),
    };
    s.out.insert(
        "design".into(),
        json!({ "family": family.name(), "class": class, "gamma": gamma, "n": n, "k": k, "u": u }),
    );
    if let Some(q) = s.put("quantile", intermediate_quantile(&family, gamma, n, k)) {
        let a = q.a;
        s.out.insert("a".into(), json!(a));
        s.put("t", local_step(&family, gamma, a, k, u));
        if let Some(c) = s.put("centering", centering_h(&family, gamma, a, k, u)) {
            s.out.insert("sqrt_k_h".into(), json!((k as f64).sqrt() * c.h));
        }
        s.put("laplace", laplace_tail(&family, gamma, a, 3));
        s.put("von_mises", von_mises_parts(&family, gamma, a));
    }
    let options = RegularityOptions::for_family(&family, gamma);
    s.put("regularity", regularity_report(&family, gamma, class, &options));
    s.out.insert("unavailable".into(), Value::Object(s.unavailable));
    Ok(Value::Object(s.out))
}

pub fn regularity(
    family: &str,
    gamma: f64,
    class: Option<RegularityClass>,
    grid: (Option<f64>, Option<f64>, Option<usize>),
    epsilon: Option<f64>,
    delta: Option<f64>,
) -> CliResult<RegularityReport> {
    let family = builtin_family(family)?;
    family.check_gamma(gamma)?;
    let class = class.unwrap_or(family.regularity_class());
    let mut options = RegularityOptions::for_family(&family, gamma);
    options.grid.start = grid.0.unwrap_or(options.grid.start);
    options.grid.ratio = grid.1.unwrap_or(options.grid.ratio);
    options.grid.count = grid.2.unwrap_or(options.grid.count);
    options.epsilon = epsilon.unwrap_or(options.epsilon);
    options.delta = delta.unwrap_or(options.delta);
    Ok(regularity_report(&family, gamma, class, &options)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Replication-level dump, one row per replication.
pub fn replicates_csv(reps: &[Replicate]) -> String {
    let mut s = String::from("index,statistic,uncentered,gap,threshold,threshold_centering\n");
    for r in reps {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{},{:?},{}",
            r.index,
            r.statistic,
            r.uncentered,
            opt(r.gap),
            r.threshold,
            opt(r.threshold_centering)
        );
    }
    s
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Write to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
