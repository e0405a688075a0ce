//! Adaptive Gauss–Kronrod quadrature and the tail integrals built on it.
//!
//! Every tail integral in the crate has the shape
//! `∫_q^∞ w(x) exp(-(S(x) - S(q))) dx` with `S` increasing on `[q, ∞)`.
//! [`tail_integral`] cuts `[q, ∞)` at points where `S` has risen by
//! 0.5, 1.5, 3.5, ... and stops once it has risen by [`TAIL_DEPTH`]; the
//! dropped remainder is below `e^-60` relative. The pieces then go through a
//! globally adaptive 21-point Gauss–Kronrod rule.

use alloc::vec::Vec;

use crate::math::{abs, max, min, powf};
use crate::{Error, Result};

/// How far (in units of `S`) the tail integrals are carried past the threshold.
pub const TAIL_DEPTH: f64 = 60.0;

const MAX_INTERVALS: usize = 2000;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = abs(err);
    if res_asc != 0.0 && err != 0.0 {
        let scale = powf(200.0 * err / res_asc, 1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = max(err, 50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// One 21-point Gauss–Kronrod panel on `[a, b]`: `(value, error estimate)`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = abs(res_k);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (abs(f1) + abs(f2));
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * abs(f_center - mean);
    for j in 0..10 {
        res_asc += WGK[j] * (abs(fv1[j] - mean) + abs(fv2[j] - mean));
    }
    let h = abs(half);
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    (value, err)
}

/// Globally adaptive Gauss–Kronrod integration over the partition given by
/// `points` (at least two, increasing). Stops when the summed error estimate
/// is below `max(eps_abs, eps_rel · |value|)`, or at the roundoff floor.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    eps_abs: f64,
    eps_rel: f64,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::domain("integration needs at least two points"));
    }
    let mut pieces: Vec<Piece> = Vec::with_capacity(points.len() + 16);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b < a || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain("integration points must be finite and increasing"));
        }
        if b == a {
            continue;
        }
        let (value, error) = gk21(&mut f, a, b);
        pieces.push(Piece { a, b, value, error });
    }
    let mut evaluations = 21 * pieces.len();
    loop {
        let (value, error) = pieces
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::numerical("non-finite integrand", error));
        }
        // Requests tighter than the per-panel roundoff floor are clamped to it.
        let target = max(max(eps_abs, eps_rel * abs(value)), 100.0 * f64::EPSILON * abs(value));
        if error <= target || pieces.is_empty() {
            return Ok(QuadResult {
                value,
                abs_error: error,
                evaluations,
            });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::numerical(
                "adaptive quadrature exhausted its interval budget",
                error / max(abs(value), f64::MIN_POSITIVE),
            ));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = pieces[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval at machine resolution; accept what we have.
            return Ok(QuadResult {
                value,
                abs_error: error,
                evaluations,
            });
        }
        let (v1, e1) = gk21(&mut f, p.a, mid);
        let (v2, e2) = gk21(&mut f, mid, p.b);
        evaluations += 42;
        pieces[worst] = Piece { a: p.a, b: mid, value: v1, error: e1 };
        pieces.push(Piece { a: mid, b: p.b, value: v2, error: e2 });
    }
}

/// Breakpoints `q = x₀ < x₁ < ...` at which `shape` has risen by roughly
/// 0.5, 1.5, 3.5, ... above `shape(q)`, ending once the rise reaches `depth`.
///
/// `slope` must be the derivative of `shape` and positive on `[q, ∞)`.
pub fn tail_breakpoints<S, D>(shape: S, slope: D, q: f64, depth: f64) -> Result<Vec<f64>>
where
    S: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let s0 = shape(q);
    if !s0.is_finite() {
        return Err(Error::domain("shape is not finite at the threshold"));
    }
    let mut points = Vec::with_capacity(24);
    points.push(q);
    let mut x = q;
    let mut rise = 0.0;
    let mut step = 0.5;
    for _ in 0..400 {
        if rise >= depth {
            return Ok(points);
        }
        let d = slope(x);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain("shape is not increasing on the tail"));
        }
        let mut next = x + step / d;
        if next <= x {
            // Step below resolution of x; move by one relative ulp-scale notch.
            next = x + max(abs(x), 1.0) * 1e-12;
        }
        let s = shape(next);
        rise = if s.is_finite() { s - s0 } else { f64::INFINITY };
        points.push(next);
        x = next;
        step = min(2.0 * step, 16.0);
    }
    Err(Error::numerical("tail breakpoints did not reach the target depth", rise))
}

/// `∫_q^∞ w(x) exp(-(S(x) - S(q))) dx` for `S` increasing past `q`.
pub fn tail_integral<S, D, W>(shape: S, slope: D, q: f64, weight: W, eps_rel: f64) -> Result<QuadResult>
where
    S: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let s0 = shape(q);
    let points = tail_breakpoints(&shape, slope, q, TAIL_DEPTH)?;
    integrate(
        |x| {
            let s = shape(x) - s0;
            if s > 745.0 {
                0.0
            } else {
                weight(x) * crate::math::exp(-s)
            }
        },
        &points,
        0.0,
        eps_rel,
    )
}
