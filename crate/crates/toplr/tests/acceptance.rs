//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.

#[path = "../../core/tests/suites/invariants.rs"]
mod invariants;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use toplr::runner::{default_workers, run_experiment, run_size_power};
use toplr_core::asymptotics::laplace_tail;
use toplr_core::distribution::tail_factor;
use toplr_core::experiments::{ExperimentDesign, KSpec, McSummary, Theorem};
use toplr_core::sampling::{sample_topk_by_sorting, sample_topk_with, SeededStream};
use toplr_core::stats::ks_two_sample;
use toplr_core::{builtin_family, Builtin, TailDistribution, TailFamily};

const SEED: u64 = 20_140_101;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn summary(design: &ExperimentDesign) -> McSummary {
    run_experiment(design, default_workers(), false).expect("experiment runs").0
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn criterion1() -> Outcome {
    let design = ExperimentDesign::new("weibull", 2.0, 1.0, 100_000, KSpec::Fixed(25), Theorem::T1);
    let start = Instant::now();
    let s = summary(&design);
    let secs = start.elapsed().as_secs_f64();
    let checks = [
        within(s.mean, -0.5, 0.15),
        within(s.variance, 1.0, 0.25),
        s.ks <= 0.08,
        secs <= 300.0,
    ];
    Outcome {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "mean {:.4} (-0.5 ± 0.15), var {:.4} (1 ± 0.25), KS {:.4} (<= 0.08), {secs:.1} s (<= 300)",
            s.mean, s.variance, s.ks
        ),
    }
}

fn criterion2() -> Outcome {
    let design = ExperimentDesign::new("log_weibull", 2.0, 1.0, 100_000, KSpec::PowerRate(0.4), Theorem::T2);
    let s = summary(&design);
    let centering = s.centering.expect("centered design");
    let shift = s.uncentered_mean.expect("centered design") - s.mean;
    let checks = [s.k == 100, s.ks <= 0.10, within(shift, centering, 0.05)];
    Outcome {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "k {}, centered KS {:.4} (<= 0.10), mean shift {shift:.4} vs drift term {centering:.4} (± 0.05); \
             centered mean {:.4}, var {:.4}",
            s.k, s.ks, s.mean, s.variance
        ),
    }
}

fn criterion3() -> Outcome {
    let design = ExperimentDesign::new("weibull", 2.0, 1.0, 100_000, KSpec::Fixed(1000), Theorem::L3);
    let s = summary(&design);
    let checks = [s.ks <= 0.05, s.mean.abs() <= 0.1, within(s.variance, 1.0, 0.15)];
    Outcome {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "KS {:.4} (<= 0.05), mean {:.4} (|.| <= 0.1), var {:.4} (1 ± 0.15)",
            s.ks, s.mean, s.variance
        ),
    }
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut cases = 0;
    for b in Builtin::ALL {
        let f = TailFamily::new(b, None).unwrap();
        let gammas: [f64; 3] = match b {
            Builtin::Weibull | Builtin::LogWeibull => [1.5, 2.0, 3.0],
            _ => [0.5, 1.0, 2.0],
        };
        for g in gammas {
            let d = TailDistribution::new(&f, g).unwrap();
            let mut prev = f64::INFINITY;
            for p in [1e-2, 1e-3, 1e-4] {
                cases += 1;
                let q = d.inverse_survival(p).unwrap();
                let e = laplace_tail(&f, g, q, 3).unwrap();
                let exact = -f.shape(q, g) + tail_factor(&f, g, q).unwrap().ln();
                let err = (e.log_value - exact).exp_m1().abs();
                let bound = 5.0 * (e.terms[2] / e.terms.iter().sum::<f64>()).abs();
                if err > bound {
                    failures.push(format!("{} γ={g} p={p:e}: error {err:.2e} > bound {bound:.2e}", f.name()));
                }
                if err >= prev {
                    failures.push(format!(
                        "{} γ={g}: error {err:.2e} at p={p:e} not below {prev:.2e}",
                        f.name()
                    ));
                }
                prev = err;
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{cases} cases in {:.2} s; {}",
            start.elapsed().as_secs_f64(),
            if failures.is_empty() { "all within bound and decreasing".into() } else { failures.join("; ") }
        ),
    }
}

fn criterion5() -> Outcome {
    let gap = |n: u64| {
        let mut d = ExperimentDesign::new("weibull", 2.0, 1.0, n, KSpec::LogRate(1.52), Theorem::T1);
        d.replications = 200;
        let s = summary(&d);
        (s.k, s.decomposition_gap_median.expect("T1 records the gap"))
    };
    let (k4, g4) = gap(10_000);
    let (k6, g6) = gap(1_000_000);
    Outcome {
        pass: g6 < g4,
        detail: format!("median gap {g4:.4} at n=1e4 (k={k4}) -> {g6:.4} at n=1e6 (k={k6})"),
    }
}

fn criterion6() -> Outcome {
    let suites: [(&str, fn()); 3] = [
        ("derivatives", invariants::partials_match_central_differences),
        ("normalization", invariants::densities_integrate_to_one),
        ("normalizer invariance", invariants::results_do_not_depend_on_the_normalizer),
    ];
    let failed: Vec<&str> = suites
        .iter()
        .filter(|(_, f)| catch_unwind(AssertUnwindSafe(f)).is_err())
        .map(|(name, _)| *name)
        .collect();
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            "derivative, normalization and normalizer-invariance suites pass".into()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn criterion7() -> Outcome {
    let d = TailDistribution::new(&builtin_family("weibull").unwrap(), 2.0).unwrap();
    let (n, k, reps) = (200u64, 5u64, 20_000u64);
    let mut spacing = vec![Vec::new(); k as usize + 1];
    let mut sorting = vec![Vec::new(); k as usize + 1];
    for r in 0..reps {
        let a = sample_topk_with(&d, n, k, &mut SeededStream::new(SEED, r).rng()).unwrap();
        let b = sample_topk_by_sorting(&d, n, k, &mut SeededStream::new(SEED + 1, r).rng()).unwrap();
        for i in 0..k as usize {
            spacing[i].push(a.top[i]);
            sorting[i].push(b.top[i]);
        }
        spacing[k as usize].push(a.threshold);
        sorting[k as usize].push(b.threshold);
    }
    let ks_max = spacing
        .iter()
        .zip(&sorting)
        .map(|(a, b)| ks_two_sample(a, b))
        .fold(0.0, f64::max);

    let mut design = ExperimentDesign::new("weibull", 2.0, 1.0, 100_000, KSpec::Fixed(25), Theorem::T1);
    design.replications = 200;
    let json = |workers| {
        let s = run_experiment(&design, workers, false).unwrap().0;
        serde_json::to_string(&s).unwrap()
    };
    let identical = json(1) == json(8);
    Outcome {
        pass: ks_max < 0.02 && identical,
        detail: format!(
            "max two-sample KS over the {} order statistics {ks_max:.4} (< 0.02); 1 vs 8 workers JSON identical: {identical}",
            k + 1
        ),
    }
}

fn criterion8() -> Outcome {
    let design = ExperimentDesign::new("weibull", 2.0, 1.0, 100_000, KSpec::Fixed(25), Theorem::T1);
    let rows = run_size_power(&design, &[0.5, 1.0, 2.0], default_workers(), false).unwrap();
    let rate = |u: f64, power: bool| {
        let row = rows.iter().find(|r| r.u == u).unwrap();
        let v = if power { &row.power } else { &row.size };
        v[0].rate
    };
    let size = rate(1.0, false);
    let (p05, p2) = (rate(0.5, true), rate(2.0, true));
    Outcome {
        pass: within(size, 0.05, 0.02) && p2 > p05,
        detail: format!("size {size:.4} at alpha 0.05 (0.05 ± 0.02); power {p05:.4} at u=0.5, {p2:.4} at u=2"),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "weibull log-LR normal limit", criterion1),
        (2, "log_weibull centered log-LR", criterion2),
        (3, "normalized threshold", criterion3),
        (4, "tail expansion vs quadrature", criterion4),
        (5, "decomposition gap shrinks with n", criterion5),
        (6, "family invariant suites", criterion6),
        (7, "sampler agreement and determinism", criterion7),
        (8, "size and power", criterion8),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        println!(
            "criterion {id} [{name}]: {} ({:.1} s) {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
