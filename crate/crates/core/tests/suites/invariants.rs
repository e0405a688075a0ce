//! The family invariant suites: derivatives against central differences,
//! density normalization and independence from the normalizer. Shared by the
//! core integration tests and the acceptance run.

use toplr_core::asymptotics::{centering_h, laplace_tail, local_step, weighted_tail_ratio, TailWeight};
use toplr_core::family::{Partial, Var};
use toplr_core::likelihood_ratio::{topk_loglik, LrPlan};
use toplr_core::{Builtin, Normalizer, TailFamily, TopKSample};

pub fn grid(b: Builtin) -> ([f64; 5], [f64; 5]) {
    match b {
        Builtin::Weibull => ([1.5, 2.0, 3.0, 4.5, 6.0], [1.2, 1.5, 2.0, 2.5, 3.0]),
        Builtin::NormalVariance => ([0.5, 1.0, 2.0, 3.0, 5.0], [0.5, 0.8, 1.0, 1.5, 2.0]),
        Builtin::GumbelType => ([0.5, 1.0, 1.5, 2.0, 3.0], [0.3, 0.5, 1.0, 1.5, 2.0]),
        Builtin::LogWeibull => ([3.0, 10.0, 30.0, 100.0, 1000.0], [1.2, 1.5, 2.0, 2.5, 3.0]),
        Builtin::LogNormal => ([2.0, 5.0, 10.0, 50.0, 200.0], [0.5, 0.8, 1.0, 1.5, 2.0]),
    }
}

fn eval(f: &TailFamily, p: Option<Partial>, x: f64, g: f64) -> f64 {
    let all = f.partials(x, g);
    match p {
        None => all.s,
        Some(p) => all.get(p),
    }
}

pub fn partials_match_central_differences() {
    let eps_cbrt = f64::EPSILON.cbrt();
    for b in Builtin::ALL {
        let f = TailFamily::new(b, None).unwrap();
        let (xs, gs) = grid(b);
        for &x in &xs {
            for &g in &gs {
                for p in Partial::ALL {
                    let (parent, var) = p.parent();
                    let (fd, h, scale) = match var {
                        Var::X => {
                            let h = eps_cbrt * x.abs().max(1.0);
                            let hi = eval(&f, parent, x + h, g);
                            let lo = eval(&f, parent, x - h, g);
                            ((hi - lo) / (2.0 * h), h, hi.abs().max(lo.abs()))
                        }
                        Var::Gamma => {
                            let h = eps_cbrt * g.abs().max(1.0);
                            let hi = eval(&f, parent, x, g + h);
                            let lo = eval(&f, parent, x, g - h);
                            ((hi - lo) / (2.0 * h), h, hi.abs().max(lo.abs()))
                        }
                    };
                    let analytic = eval(&f, Some(p), x, g);
                    // Roundoff floor of the difference quotient itself.
                    let floor = 8.0 * f64::EPSILON * scale / h;
                    assert!(
                        (fd - analytic).abs() <= 1e-6 * analytic.abs() + floor,
                        "{} {} at ({x}, {g}): analytic {analytic}, difference {fd}",
                        f.name(),
                        p.label()
                    );
                }
            }
        }
    }
}

/// Composite Simpson rule, independent of the crate's quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn densities_integrate_to_one() {
    for b in Builtin::ALL {
        let f = TailFamily::new(b, None).unwrap();
        let gammas: [f64; 3] = match b {
            Builtin::Weibull | Builtin::LogWeibull => [1.5, 2.0, 3.0],
            _ => [0.5, 1.0, 2.0],
        };
        for &g in &gammas {
            let ln_c = f.log_normalizer(g).unwrap();
            // Integrate in a variable where the integrand is smooth and
            // compactly concentrated.
            let total = match b {
                Builtin::Weibull | Builtin::GumbelType => {
                    simpson(|x| (ln_c - f.shape(x, g)).exp(), 0.0, 40.0, 400_000)
                }
                Builtin::NormalVariance => {
                    let s = g.sqrt();
                    simpson(|x| (ln_c - f.shape(x, g)).exp(), -40.0 * s, 40.0 * s, 400_000)
                }
                Builtin::LogWeibull | Builtin::LogNormal => {
                    // x = e^y, dx = e^y dy.
                    let lo = if b == Builtin::LogWeibull { 0.0 } else { -60.0 };
                    simpson(|y| (ln_c - f.shape(y.exp(), g) + y).exp(), lo, 60.0, 400_000)
                }
            };
            assert!((total - 1.0).abs() < 1e-8, "{} gamma={g}: {total}", f.name());
        }
    }
}

pub fn results_do_not_depend_on_the_normalizer() {
    for b in Builtin::ALL {
        let exact = TailFamily::new(b, None).unwrap();
        let zero = exact.with_normalizer(Normalizer::Constant(0.0));
        let g = match b {
            Builtin::Weibull | Builtin::LogWeibull => 2.0,
            _ => 1.0,
        };
        let x = match b {
            Builtin::LogWeibull => 20.0,
            Builtin::LogNormal => 8.0,
            _ => 2.5,
        };
        assert_eq!(
            local_step(&exact, g, x, 25, 1.0).unwrap().to_bits(),
            local_step(&zero, g, x, 25, 1.0).unwrap().to_bits()
        );
        let (he, hz) = (
            centering_h(&exact, g, x, 25, 1.0).unwrap(),
            centering_h(&zero, g, x, 25, 1.0).unwrap(),
        );
        assert_eq!(he.h.to_bits(), hz.h.to_bits());
        assert_eq!(
            laplace_tail(&exact, g, x, 3).unwrap().log_value.to_bits(),
            laplace_tail(&zero, g, x, 3).unwrap().log_value.to_bits()
        );
        for w in [TailWeight::SGamma, TailWeight::SGammaGamma, TailWeight::SGammaSquared] {
            assert_eq!(
                weighted_tail_ratio(&exact, g, x, w).unwrap().to_bits(),
                weighted_tail_ratio(&zero, g, x, w).unwrap().to_bits()
            );
        }
        let sample = TopKSample::new(1000, vec![x * 1.3, x * 1.2, x * 1.1], x).unwrap();
        assert_eq!(
            topk_loglik(&exact, g, &sample).unwrap().to_bits(),
            topk_loglik(&zero, g, &sample).unwrap().to_bits()
        );
        // The statistic itself, at a fixed step.
        let plan = LrPlan::new(&exact, g, 1.0, 1000, 3).unwrap();
        let plan_zero = LrPlan { family: zero, ..plan };
        assert_eq!(
            plan.log_lr(&sample).unwrap().to_bits(),
            plan_zero.log_lr(&sample).unwrap().to_bits()
        );
    }
}
