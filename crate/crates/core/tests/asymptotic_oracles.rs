//! Asymptotic quantities checked against closed forms and independent
//! quadrature.

use toplr_core::asymptotics::{
    centering_h, intermediate_quantile, local_step, von_mises_parts, weighted_tail_ratio, TailWeight,
};
use toplr_core::{builtin_family, Builtin, TailDistribution, TailFamily};

fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Closed-form `F̄` where one is available.
fn closed_sf(b: Builtin, g: f64, x: f64) -> Option<f64> {
    Some(match b {
        Builtin::Weibull if g == 2.0 => erfc(x),
        Builtin::Weibull if g == 1.0 => (-x).exp(),
        Builtin::NormalVariance => 0.5 * erfc(x / (2.0 * g).sqrt()),
        Builtin::GumbelType => (1.0 - (g * x).exp()).exp(),
        Builtin::LogNormal => 0.5 * erfc(x.ln() / (2.0 * g).sqrt()),
        Builtin::LogWeibull if g == 2.0 => erfc(x.ln() - 0.5) / erfc(-0.5),
        _ => return None,
    })
}

#[test]
fn quantile_round_trip_against_closed_forms() {
    let cases = [
        (Builtin::Weibull, 2.0),
        (Builtin::Weibull, 1.0),
        (Builtin::NormalVariance, 0.5),
        (Builtin::NormalVariance, 2.0),
        (Builtin::GumbelType, 0.5),
        (Builtin::GumbelType, 2.0),
        (Builtin::LogNormal, 1.0),
        (Builtin::LogWeibull, 2.0),
    ];
    for (b, g) in cases {
        let f = TailFamily::new(b, None).unwrap();
        for (n, k) in [(100_000u64, 25u64), (100_000, 1000), (1_000_000, 30), (10_000, 3000), (1_000, 500)] {
            let s = intermediate_quantile(&f, g, n, k).unwrap();
            let p = k as f64 / n as f64;
            assert!(s.residual.abs() <= 1e-12 * p, "{} g={g} n={n} k={k}: {}", f.name(), s.residual);
            let oracle = closed_sf(b, g, s.a).unwrap();
            assert!((oracle - p).abs() <= 1e-9 * p, "{} g={g} n={n} k={k}: {oracle} vs {p}", f.name());
        }
    }
}

#[test]
fn step_scales_linearly_in_u_and_inverse_root_k() {
    for b in Builtin::ALL {
        let f = TailFamily::new(b, None).unwrap();
        let g = if f.gamma_domain().0 >= 1.0 { 2.0 } else { 1.0 };
        let a = intermediate_quantile(&f, g, 100_000, 25).unwrap().a;
        let t1 = local_step(&f, g, a, 25, 1.0).unwrap();
        for u in [0.25, 0.5, -0.5, 2.0] {
            let tu = local_step(&f, g, a, 25, u).unwrap();
            assert!((tu - u * t1).abs() <= 4.0 * f64::EPSILON * tu.abs(), "{}", f.name());
            let t4 = local_step(&f, g, a, 100, u).unwrap();
            assert_eq!(t4, tu / 2.0, "{}", f.name());
        }
    }
}

#[test]
fn weibull_step_closed_form() {
    let w = builtin_family("weibull").unwrap();
    let a = intermediate_quantile(&w, 2.0, 100_000, 25).unwrap().a;
    let t = local_step(&w, 2.0, a, 25, 1.0).unwrap();
    assert!((t - 0.2 * 2.0 / (1.0 + 2.0 * a.ln())).abs() < 1e-15);
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn centering_bracket_against_independent_quadrature() {
    // log_weibull at γ = 2: S̃ = L², S̃_γ = L² ln L with L = ln x.
    let f = builtin_family("log_weibull").unwrap();
    let g = 2.0;
    let x: f64 = 15.5188;
    let l0 = x.ln();
    let s_g = |l: f64| l * l * l.ln();
    // Substitute x = e^l.
    let w = |l: f64| (-(l * l - l0 * l0) + (l - l0)).exp();
    let num = simpson(|l| (s_g(l) - s_g(l0)) * w(l), l0, l0 + 20.0, 200_000);
    let den = simpson(w, l0, l0 + 20.0, 200_000);
    let excess = num / den;
    let p = f.partials(x, g);
    let bracket = excess - p.xg / p.x - p.xxg / (p.x * p.x) + 2.0 * p.xx * p.xg / p.x.powi(3);
    let c = centering_h(&f, g, x, 100, 1.0).unwrap();
    assert!((c.bracket - bracket).abs() < 1e-9 * bracket.abs(), "{} vs {bracket}", c.bracket);
    assert!((c.h - (p.x / p.xg) * bracket).abs() < 1e-9 * c.h.abs());
}

#[test]
fn centering_and_surrogate_both_vanish() {
    // The exact H and the surrogate -S_xx/S_x² both tend to zero; the exact
    // term is the smaller of the two along the grid.
    for (name, g, xs) in [
        ("weibull", 2.0, [4.0, 8.0, 16.0]),
        ("log_weibull", 2.0, [1e3, 1e6, 1e12]),
        ("log_normal", 1.0, [1e3, 1e6, 1e12]),
    ] {
        let f = builtin_family(name).unwrap();
        let hs: Vec<_> = xs.iter().map(|&x| centering_h(&f, g, x, 100, 1.0).unwrap()).collect();
        for w in hs.windows(2) {
            assert!(w[1].h.abs() < w[0].h.abs(), "{name}");
            assert!(w[1].surrogate.abs() < w[0].surrogate.abs(), "{name}");
        }
        for h in &hs {
            assert!(h.h.abs() < h.surrogate.abs(), "{name}");
        }
    }
}

#[test]
fn von_mises_parts_approach_one() {
    for b in Builtin::ALL {
        let f = TailFamily::new(b, None).unwrap();
        let g = if f.gamma_domain().0 >= 1.0 { 2.0 } else { 1.0 };
        let xs: Vec<f64> = match b {
            Builtin::GumbelType => vec![1.0, 2.0, 4.0, 8.0],
            Builtin::LogWeibull | Builtin::LogNormal => vec![1e2, 1e4, 1e8, 1e16],
            _ => vec![2.0, 4.0, 8.0, 16.0],
        };
        let parts: Vec<_> = xs.iter().map(|&x| von_mises_parts(&f, g, x).unwrap()).collect();
        for w in parts.windows(2) {
            assert!((w[1].g_aux - 1.0).abs() <= (w[0].g_aux - 1.0).abs(), "{}", f.name());
            assert!((w[1].d_aux - 1.0).abs() <= (w[0].d_aux - 1.0).abs(), "{}", f.name());
        }
    }
}

#[test]
fn weighted_ratio_second_moment_oracle() {
    // weibull γ = 1: ∫_q^∞ (x ln x)² e^{-x} dx / e^{-q}, by Simpson.
    let w = builtin_family("weibull").unwrap();
    let q = 2.0;
    let r = weighted_tail_ratio(&w, 1.0, q, TailWeight::SGammaSquared).unwrap();
    let oracle = simpson(|x: f64| (x * x.ln()).powi(2) * (-(x - q)).exp(), q, q + 80.0, 400_000);
    assert!((r - oracle).abs() < 1e-9 * oracle, "{r} vs {oracle}");
    let r2 = weighted_tail_ratio(&w, 1.0, q, TailWeight::SGammaGamma).unwrap();
    let oracle2 = simpson(|x: f64| x * x.ln().powi(2) * (-(x - q)).exp(), q, q + 80.0, 400_000);
    assert!((r2 - oracle2).abs() < 1e-9 * oracle2);
}

#[test]
fn table_inversion_matches_closed_form_at_probe_points() {
    let d = TailDistribution::new(&builtin_family("weibull").unwrap(), 2.0).unwrap();
    let n = TailDistribution::new(&builtin_family("normal_variance").unwrap(), 1.0).unwrap();
    for i in 1..=64 {
        let p = i as f64 / 65.0;
        let x = d.inverse_cdf(p).unwrap();
        assert!((1.0 - erfc(x) - p).abs() < 1e-10, "weibull p={p}");
        let z = n.inverse_cdf(p).unwrap();
        let exact = toplr_core::special::normal_quantile(p);
        assert!((z - exact).abs() < 1e-8, "normal p={p}: {z} vs {exact}");
    }
}
