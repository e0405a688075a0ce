//! Parametric tail families `f(x, γ) = exp(-S(x, γ))`.
//!
//! `S` is split as `S(x, γ) = S̃(x, γ) - ln C(γ)`: the shape `S̃` carries all
//! the `x` dependence and the normalizer `C(γ)` none. Likelihood ratios of
//! top order statistics only ever see differences of `S̃` at fixed `x` or
//! `x`-derivatives, so that path never needs `C(γ)`; quantiles do.

use alloc::format;
use alloc::string::String;

use crate::math::{exp, exp_m1, ln, powf, sqrt};
use crate::quadrature::{integrate, tail_integral};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The builtin families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Builtin {
    /// `S̃ = x^γ`, `x ≥ 0`, `γ ≥ 1` (`γ = 1` is the exponential law).
    Weibull,
    /// `S̃ = x² / (2γ)`, `x ∈ ℝ`, `γ > 0` (γ is the variance).
    NormalVariance,
    /// `S̃ = e^{γx} - γx`, `x ≥ 0`, `γ > 0`.
    GumbelType,
    /// `S̃ = (ln x)^γ`, `x ≥ 1`, `γ > 1`.
    LogWeibull,
    /// `S̃ = (ln x)² / (2γ) + ln x`, `x > 0`, `γ > 0`.
    LogNormal,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Weibull,
        Builtin::NormalVariance,
        Builtin::GumbelType,
        Builtin::LogWeibull,
        Builtin::LogNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Weibull => "weibull",
            Builtin::NormalVariance => "normal_variance",
            Builtin::GumbelType => "gumbel_type",
            Builtin::LogWeibull => "log_weibull",
            Builtin::LogNormal => "log_normal",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }
}

/// Which set of regularity conditions a family is claimed to satisfy:
/// polynomial-type growth of `S` (A1–A3) or logarithmic-type growth (B1–B4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RegularityClass {
    TypeA,
    TypeB,
}

/// Source of `ln C(γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalizer {
    /// Closed form where one exists, adaptive quadrature otherwise.
    Exact,
    /// A constant injected in place of `ln C(γ)`. Only meaningful for
    /// checking that a computation does not depend on the normalizer.
    Constant(f64),
}

/// Which partial derivative of `S̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partial {
    X,
    G,
    XX,
    XG,
    GG,
    XXX,
    XXG,
    XGG,
    GGG,
    XXXG,
}

/// Variable a partial is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Gamma,
}

impl Partial {
    pub const ALL: [Partial; 10] = [
        Partial::X,
        Partial::G,
        Partial::XX,
        Partial::XG,
        Partial::GG,
        Partial::XXX,
        Partial::XXG,
        Partial::XGG,
        Partial::GGG,
        Partial::XXXG,
    ];

    /// The next-lower derivative and the variable that lifts it to `self`.
    /// `None` as parent means `S̃` itself.
    pub fn parent(self) -> (Option<Partial>, Var) {
        use Partial::*;
        match self {
            X => (None, Var::X),
            G => (None, Var::Gamma),
            XX => (Some(X), Var::X),
            XG => (Some(X), Var::Gamma),
            GG => (Some(G), Var::Gamma),
            XXX => (Some(XX), Var::X),
            XXG => (Some(XX), Var::Gamma),
            XGG => (Some(XG), Var::Gamma),
            GGG => (Some(GG), Var::Gamma),
            XXXG => (Some(XXX), Var::Gamma),
        }
    }

    pub fn label(self) -> &'static str {
        use Partial::*;
        match self {
            X => "S_x",
            G => "S_g",
            XX => "S_xx",
            XG => "S_xg",
            GG => "S_gg",
            XXX => "S_xxx",
            XXG => "S_xxg",
            XGG => "S_xgg",
            GGG => "S_ggg",
            XXXG => "S_xxxg",
        }
    }
}

/// `S̃` and its partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Partials {
    pub s: f64,
    pub x: f64,
    pub g: f64,
    pub xx: f64,
    pub xg: f64,
    pub gg: f64,
    pub xxx: f64,
    pub xxg: f64,
    pub xgg: f64,
    pub ggg: f64,
    pub xxxg: f64,
}

impl Partials {
    pub fn get(&self, p: Partial) -> f64 {
        use Partial::*;
        match p {
            X => self.x,
            G => self.g,
            XX => self.xx,
            XG => self.xg,
            GG => self.gg,
            XXX => self.xxx,
            XXG => self.xxg,
            XGG => self.xgg,
            GGG => self.ggg,
            XXXG => self.xxxg,
        }
    }
}

/// Partials of `h(x)^γ` from `h` and its first three derivatives.
fn power_of(h: f64, h1: f64, h2: f64, h3: f64, g: f64) -> Partials {
    let l = ln(h);
    let p0 = powf(h, g);
    let p1 = powf(h, g - 1.0);
    let p2 = powf(h, g - 2.0);
    let p3 = powf(h, g - 3.0);
    let a1 = 1.0 + g * l;
    let a2 = (2.0 * g - 1.0) + g * (g - 1.0) * l;
    let a3 = (3.0 * g * g - 6.0 * g + 2.0) + g * (g - 1.0) * (g - 2.0) * l;
    Partials {
        s: p0,
        x: g * p1 * h1,
        g: p0 * l,
        xx: g * (g - 1.0) * p2 * h1 * h1 + g * p1 * h2,
        xg: h1 * p1 * a1,
        gg: p0 * l * l,
        xxx: g * (g - 1.0) * (g - 2.0) * p3 * h1 * h1 * h1
            + 3.0 * g * (g - 1.0) * p2 * h1 * h2
            + g * p1 * h3,
        xxg: h1 * h1 * p2 * a2 + h2 * p1 * a1,
        xgg: h1 * p1 * l * (2.0 + g * l),
        ggg: p0 * l * l * l,
        xxxg: h1 * h1 * h1 * p3 * a3 + 3.0 * h1 * h2 * p2 * a2 + h3 * p1 * a1,
    }
}

/// A parametric tail family together with the regularity class it is used
/// under and the source of its normalizer.
///
/// Values are immutable and cheap to copy; every method is pure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFamily {
    builtin: Builtin,
    class: RegularityClass,
    normalizer: Normalizer,
}

/// Looks up a builtin family by name, with its default regularity class
/// (TypeA when admissible).
pub fn builtin_family(name: &str) -> Result<TailFamily> {
    builtin_family_with_class(name, None)
}

/// Like [`builtin_family`], with an explicit regularity class.
pub fn builtin_family_with_class(name: &str, class: Option<RegularityClass>) -> Result<TailFamily> {
    let builtin = Builtin::from_name(name).ok_or_else(|| Error::NotFound(String::from(name)))?;
    TailFamily::new(builtin, class)
}

impl TailFamily {
    pub fn new(builtin: Builtin, class: Option<RegularityClass>) -> Result<Self> {
        let mut family = TailFamily {
            builtin,
            class: RegularityClass::TypeA,
            normalizer: Normalizer::Exact,
        };
        let class = match class {
            Some(c) => c,
            None if family.admits(RegularityClass::TypeA) => RegularityClass::TypeA,
            None => RegularityClass::TypeB,
        };
        if !family.admits(class) {
            return Err(Error::domain(format!(
                "family `{}` does not satisfy the {:?} regularity conditions",
                builtin.name(),
                class
            )));
        }
        family.class = class;
        Ok(family)
    }

    /// The same family with `ln C(γ)` replaced by a constant.
    pub fn with_normalizer(self, normalizer: Normalizer) -> Self {
        TailFamily { normalizer, ..self }
    }

    pub fn builtin(&self) -> Builtin {
        self.builtin
    }

    pub fn name(&self) -> &'static str {
        self.builtin.name()
    }

    pub fn regularity_class(&self) -> RegularityClass {
        self.class
    }

    pub fn normalizer(&self) -> Normalizer {
        self.normalizer
    }

    pub fn admits(&self, class: RegularityClass) -> bool {
        use Builtin::*;
        match class {
            RegularityClass::TypeA => matches!(self.builtin, Weibull | NormalVariance | GumbelType),
            RegularityClass::TypeB => matches!(self.builtin, Weibull | LogWeibull | LogNormal),
        }
    }

    /// Lower end of the support (`-∞` for the normal family).
    pub fn support_lower(&self) -> f64 {
        match self.builtin {
            Builtin::Weibull | Builtin::GumbelType | Builtin::LogNormal => 0.0,
            Builtin::NormalVariance => f64::NEG_INFINITY,
            Builtin::LogWeibull => 1.0,
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self.builtin {
            Builtin::LogNormal => x > 0.0 && x.is_finite(),
            _ => x >= self.support_lower() && x.is_finite(),
        }
    }

    /// Interval of admissible `γ`, open except that `weibull` also accepts
    /// its lower end `γ = 1` (the exponential law).
    pub fn gamma_domain(&self) -> (f64, f64) {
        match self.builtin {
            Builtin::Weibull | Builtin::LogWeibull => (1.0, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn gamma_admissible(&self, gamma: f64) -> bool {
        let (lo, hi) = self.gamma_domain();
        let lower_ok = gamma > lo || (gamma == lo && self.builtin == Builtin::Weibull);
        lower_ok && gamma < hi
    }

    pub fn check_gamma(&self, gamma: f64) -> Result<()> {
        if self.gamma_admissible(gamma) {
            Ok(())
        } else {
            let (lo, hi) = self.gamma_domain();
            let open = if self.builtin == Builtin::Weibull { "[" } else { "(" };
            Err(Error::domain(format!(
                "gamma = {gamma} outside {open}{lo}, {hi}) for family `{}`",
                self.name()
            )))
        }
    }

    /// `x₁(γ)`: beyond it `S̃` is strictly increasing and `S̃_xγ` has no zeros.
    pub fn x1(&self, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::Weibull => exp(-1.0 / gamma),
            Builtin::NormalVariance | Builtin::GumbelType => 0.0,
            Builtin::LogWeibull => exp(exp(-1.0 / gamma)),
            Builtin::LogNormal => 1.0,
        }
    }

    /// A point past `x₁` in the body of the distribution, used to split the
    /// normalizing integral into a finite piece and a tail piece.
    pub(crate) fn body_split(&self, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::Weibull | Builtin::NormalVariance | Builtin::LogNormal => 1.0 + self.x1(gamma),
            Builtin::GumbelType => 1.0 / gamma,
            Builtin::LogWeibull => core::f64::consts::E * self.x1(gamma),
        }
    }

    /// Left end used for numerical integration over the body: the support
    /// bound, or for unbounded support the point where `S̃` has risen 80
    /// units above its minimum.
    pub(crate) fn body_lower(&self, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::NormalVariance => -sqrt(2.0 * gamma * 80.0),
            _ => self.support_lower(),
        }
    }

    /// The shape `S̃(x, γ)`.
    #[inline]
    pub fn shape(&self, x: f64, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::Weibull => powf(x, gamma),
            Builtin::NormalVariance => x * x / (2.0 * gamma),
            Builtin::GumbelType => exp(gamma * x) - gamma * x,
            Builtin::LogWeibull => powf(ln(x), gamma),
            Builtin::LogNormal => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                let l = ln(x);
                l * l / (2.0 * gamma) + l
            }
        }
    }

    /// `S̃_x(x, γ)`.
    #[inline]
    pub fn shape_x(&self, x: f64, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::Weibull => gamma * powf(x, gamma - 1.0),
            Builtin::NormalVariance => x / gamma,
            Builtin::GumbelType => gamma * exp_m1(gamma * x),
            Builtin::LogWeibull => gamma * powf(ln(x), gamma - 1.0) / x,
            Builtin::LogNormal => (ln(x) / gamma + 1.0) / x,
        }
    }

    /// `S̃_γ(x, γ)`.
    #[inline]
    pub fn shape_gamma(&self, x: f64, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::Weibull => powf(x, gamma) * ln(x),
            Builtin::NormalVariance => -x * x / (2.0 * gamma * gamma),
            Builtin::GumbelType => x * exp_m1(gamma * x),
            Builtin::LogWeibull => {
                let l = ln(x);
                powf(l, gamma) * ln(l)
            }
            Builtin::LogNormal => {
                let l = ln(x);
                -l * l / (2.0 * gamma * gamma)
            }
        }
    }

    /// `S̃_γγ(x, γ)`.
    #[inline]
    pub fn shape_gamma_gamma(&self, x: f64, gamma: f64) -> f64 {
        match self.builtin {
            Builtin::Weibull => {
                let l = ln(x);
                powf(x, gamma) * l * l
            }
            Builtin::NormalVariance => x * x / (gamma * gamma * gamma),
            Builtin::GumbelType => x * x * exp(gamma * x),
            Builtin::LogWeibull => {
                let l = ln(x);
                let ll = ln(l);
                powf(l, gamma) * ll * ll
            }
            Builtin::LogNormal => {
                let l = ln(x);
                l * l / (gamma * gamma * gamma)
            }
        }
    }

    /// All partials of `S̃` at `(x, γ)`.
    pub fn partials(&self, x: f64, gamma: f64) -> Partials {
        let g = gamma;
        match self.builtin {
            Builtin::Weibull => power_of(x, 1.0, 0.0, 0.0, g),
            Builtin::LogWeibull => power_of(ln(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), g),
            Builtin::NormalVariance => {
                let g2 = g * g;
                Partials {
                    s: x * x / (2.0 * g),
                    x: x / g,
                    g: -x * x / (2.0 * g2),
                    xx: 1.0 / g,
                    xg: -x / g2,
                    gg: x * x / (g2 * g),
                    xxx: 0.0,
                    xxg: -1.0 / g2,
                    xgg: 2.0 * x / (g2 * g),
                    ggg: -3.0 * x * x / (g2 * g2),
                    xxxg: 0.0,
                }
            }
            Builtin::GumbelType => {
                let e = exp(g * x);
                Partials {
                    s: e - g * x,
                    x: g * (e - 1.0),
                    g: x * (e - 1.0),
                    xx: g * g * e,
                    xg: e * (1.0 + g * x) - 1.0,
                    gg: x * x * e,
                    xxx: g * g * g * e,
                    xxg: g * e * (2.0 + g * x),
                    xgg: x * e * (2.0 + g * x),
                    ggg: x * x * x * e,
                    xxxg: g * g * e * (3.0 + g * x),
                }
            }
            Builtin::LogNormal => {
                let l = ln(x);
                let g2 = g * g;
                let x2 = x * x;
                let x3 = x2 * x;
                Partials {
                    s: l * l / (2.0 * g) + l,
                    x: (l / g + 1.0) / x,
                    g: -l * l / (2.0 * g2),
                    xx: ((1.0 - l) / g - 1.0) / x2,
                    xg: -l / (g2 * x),
                    gg: l * l / (g2 * g),
                    xxx: ((2.0 * l - 3.0) / g + 2.0) / x3,
                    xxg: -(1.0 - l) / (g2 * x2),
                    xgg: 2.0 * l / (g2 * g * x),
                    ggg: -3.0 * l * l / (g2 * g2),
                    xxxg: -(2.0 * l - 3.0) / (g2 * x3),
                }
            }
        }
    }

    /// Closed-form `ln C(γ)` where the family has one.
    pub fn closed_form_log_normalizer(&self, gamma: f64) -> Option<f64> {
        match self.builtin {
            Builtin::NormalVariance | Builtin::LogNormal => Some(-0.5 * (LN_2PI + ln(gamma))),
            // γ e^{γx} exp(-e^{γx}) integrates to e^{-1} over x ≥ 0, hence the +1.
            Builtin::GumbelType => Some(ln(gamma) + 1.0),
            Builtin::Weibull | Builtin::LogWeibull => None,
        }
    }

    /// `ln C(γ)` according to the configured [`Normalizer`].
    pub fn log_normalizer(&self, gamma: f64) -> Result<f64> {
        self.check_gamma(gamma)?;
        match self.normalizer {
            Normalizer::Constant(c) => Ok(c),
            Normalizer::Exact => match self.closed_form_log_normalizer(gamma) {
                Some(v) => Ok(v),
                None => normalizer_quadrature(self, gamma),
            },
        }
    }

    /// `ln f(x, γ) = -S̃(x, γ) + ln C(γ)`.
    pub fn log_density(&self, x: f64, gamma: f64) -> Result<f64> {
        Ok(-self.shape(x, gamma) + self.log_normalizer(gamma)?)
    }
}

/// `ln C(γ) = -ln ∫ exp(-S̃(x, γ)) dx` over the support, by adaptive
/// quadrature (relative accuracy ~1e-13).
pub fn normalizer_quadrature(family: &TailFamily, gamma: f64) -> Result<f64> {
    family.check_gamma(gamma)?;
    let split = family.body_split(gamma);
    let lower = family.body_lower(gamma);
    let body = integrate(|x| exp(-family.shape(x, gamma)), &[lower, split], 0.0, 1e-14)?;
    let tail = tail_integral(
        |x| family.shape(x, gamma),
        |x| family.shape_x(x, gamma),
        split,
        |_| 1.0,
        1e-14,
    )?;
    let total = body.value + exp(-family.shape(split, gamma)) * tail.value;
    let err = body.abs_error + exp(-family.shape(split, gamma)) * tail.abs_error;
    if !(total > 0.0) || !total.is_finite() || err > 1e-10 * total {
        return Err(Error::numerical("normalizing integral did not converge", err / total));
    }
    Ok(-ln(total))
}
