//! One-dimensional laws with closed-form tails, quantiles and moments.
//!
//! Every family is sampled by inverse transform from a *tail* uniform: a
//! uniform `u` maps to `quantile(u) = inf{x : tail(x) <= u}`, so small
//! uniforms produce large values. This keeps full floating-point resolution
//! in the upper tail, which is where every estimator in the crate lives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::UniformSource;
use crate::textual::{self, serde_via_text, Args, Call};

#[derive(Debug, Clone, PartialEq)]
pub enum MarginalSpec {
    /// `P(X > x) = (scale / x)^alpha` for `x >= scale`.
    Pareto { alpha: f64, scale: f64 },
    /// Log-periodic step tail with period 4, see [`step_pareto_tail`].
    StepPareto { alpha: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Point mass at `value`.
    Degenerate { value: f64 },
    /// `X = Y - offset`.
    Shifted { base: Box<MarginalSpec>, offset: f64 },
    /// `X = Y - c * Z` with `Y ~ base` and `Z ~ companion` independent.
    /// No closed-form tail.
    NetLossEmpirical {
        base: Box<MarginalSpec>,
        companion: Box<MarginalSpec>,
        c: f64,
    },
}

/// Theoretical membership of a law in the heavy-tail classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndices {
    /// `L_F = lim_{y -> 1} liminf F(xy)/F(x)`; 0 outside the dominated class.
    #[serde(rename = "L")]
    pub l: f64,
    pub j_plus: f64,
    pub j_minus: f64,
    /// Moment index; `+inf` when every positive moment is finite.
    pub moment_index: f64,
    pub in_d: bool,
    pub in_c: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// `E X^+`
    pub mean_pos: f64,
    /// `E X^-`
    pub mean_neg: f64,
    /// Supremum of `r` with `E (X^+)^r < inf`.
    pub r_max: f64,
}

const LN4: f64 = std::f64::consts::LN_2 * 2.0;

#[inline]
fn pow4(j: i32) -> f64 {
    4f64.powi(j)
}

/// Plateau level `4^{-alpha j}`.
#[inline]
fn step_level(alpha: f64, j: i32) -> f64 {
    4f64.powf(-alpha * f64::from(j))
}

/// Tail of the step-Pareto law:
/// `1` for `x < 1`; `4^{-alpha j}` on `[4^j, 2 4^j)`;
/// `4^{-alpha j} / 2` on `[2 4^j, 4^{j+1})`, for integers `j >= 0`.
/// The law is discrete with atoms at `2 * 4^j` and `4^{j+1}`.
pub fn step_pareto_tail(alpha: f64, x: f64) -> f64 {
    if x < 2.0 {
        return 1.0;
    }
    let mut j = (x.ln() / LN4).floor() as i32;
    while j > 0 && pow4(j) > x {
        j -= 1;
    }
    while pow4(j + 1) <= x {
        j += 1;
    }
    let a = step_level(alpha, j);
    if x < 2.0 * pow4(j) {
        a
    } else {
        0.5 * a
    }
}

/// Plateaus of the step-Pareto tail in increasing `x`: index 0 is the
/// region below the support (level 1, left end 2 by convention); odd
/// `2m+1` starts at `2 4^m`, even `2m >= 2` starts at `4^m`.
fn step_plateau(alpha: f64, i: i32) -> (f64, f64) {
    if i == 0 {
        return (2.0, 1.0);
    }
    let m = i / 2;
    if i % 2 == 1 {
        (2.0 * pow4(m), 0.5 * step_level(alpha, m))
    } else {
        (pow4(m), step_level(alpha, m))
    }
}

fn step_pareto_quantile(alpha: f64, p: f64) -> f64 {
    let m0 = ((1.0 / p).ln() / (alpha * LN4)).floor().max(0.0) as i32;
    let mut i = (2 * m0 - 2).max(0);
    loop {
        let (start, level) = step_plateau(alpha, i);
        if level <= p {
            return start;
        }
        i += 1;
    }
}

/// `int_0^o tail(y) dy` for the step-Pareto law, by summing plateaus.
fn step_pareto_integrated_tail(alpha: f64, o: f64) -> f64 {
    if o <= 2.0 {
        return o.max(0.0);
    }
    let mut acc = 2.0;
    let mut i = 1;
    loop {
        let (start, level) = step_plateau(alpha, i);
        let (end, _) = step_plateau(alpha, i + 1);
        if o <= end {
            return acc + level * (o - start);
        }
        acc += level * (end - start);
        i += 1;
    }
}

impl MarginalSpec {
    pub fn pareto(alpha: f64, scale: f64) -> Result<Self> {
        let s = MarginalSpec::Pareto { alpha, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn step_pareto(alpha: f64) -> Result<Self> {
        let s = MarginalSpec::StepPareto { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let s = MarginalSpec::Exponential { rate };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let s = MarginalSpec::Uniform { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        let s = MarginalSpec::Degenerate { value };
        s.validate()?;
        Ok(s)
    }

    pub fn shifted(base: MarginalSpec, offset: f64) -> Result<Self> {
        let s = MarginalSpec::Shifted {
            base: Box::new(base),
            offset,
        };
        s.validate()?;
        Ok(s)
    }

    /// `base` shifted by its own mean, so the result has mean zero.
    pub fn centered(base: MarginalSpec) -> Result<Self> {
        let mean = base.moments().mean;
        if !mean.is_finite() {
            return Err(Error::PreconditionViolated(format!("`{base}` has infinite mean")));
        }
        Self::shifted(base, mean)
    }

    pub fn net_loss(base: MarginalSpec, companion: MarginalSpec, c: f64) -> Result<Self> {
        let s = MarginalSpec::NetLossEmpirical {
            base: Box::new(base),
            companion: Box::new(companion),
            c,
        };
        s.validate()?;
        Ok(s)
    }

    fn is_simple(&self) -> bool {
        !matches!(self, MarginalSpec::Shifted { .. } | MarginalSpec::NetLossEmpirical { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            MarginalSpec::Pareto { alpha, scale } => {
                pos("alpha", *alpha)?;
                pos("scale", *scale)
            }
            MarginalSpec::StepPareto { alpha } => {
                pos("alpha", *alpha)?;
                if *alpha < 0.5 {
                    return Err(Error::invalid(format!(
                        "step_pareto needs alpha >= 1/2 for a nonincreasing tail, got {alpha}"
                    )));
                }
                Ok(())
            }
            MarginalSpec::Exponential { rate } => pos("rate", *rate),
            MarginalSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) {
                    return Err(Error::invalid(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]")));
                }
                Ok(())
            }
            MarginalSpec::Degenerate { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::invalid(format!("degenerate value must be finite and >= 0, got {value}")));
                }
                Ok(())
            }
            MarginalSpec::Shifted { base, offset } => {
                if !base.is_simple() {
                    return Err(Error::invalid("shifted composition depth is limited to 1"));
                }
                if !offset.is_finite() {
                    return Err(Error::invalid("offset must be finite"));
                }
                base.validate()
            }
            MarginalSpec::NetLossEmpirical { base, companion, c } => {
                if !base.is_simple() || !companion.is_simple() {
                    return Err(Error::invalid("net_loss components must be plain families"));
                }
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::invalid(format!("net_loss c must be finite and >= 0, got {c}")));
                }
                base.validate()?;
                companion.validate()?;
                if !companion.moments().mean.is_finite() {
                    return Err(Error::invalid("net_loss companion must have a finite mean"));
                }
                Ok(())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            MarginalSpec::Pareto { .. } => "pareto",
            MarginalSpec::StepPareto { .. } => "step_pareto",
            MarginalSpec::Exponential { .. } => "exponential",
            MarginalSpec::Uniform { .. } => "uniform",
            MarginalSpec::Degenerate { .. } => "degenerate",
            MarginalSpec::Shifted { .. } => "shifted",
            MarginalSpec::NetLossEmpirical { .. } => "net_loss",
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self, MarginalSpec::NetLossEmpirical { .. })
    }

    /// True when the law has no atoms.
    pub fn is_continuous(&self) -> bool {
        match self {
            MarginalSpec::Pareto { .. } | MarginalSpec::Exponential { .. } | MarginalSpec::Uniform { .. } => true,
            MarginalSpec::StepPareto { .. } | MarginalSpec::Degenerate { .. } => false,
            MarginalSpec::Shifted { base, .. } => base.is_continuous(),
            MarginalSpec::NetLossEmpirical { base, companion, c } => {
                base.is_continuous() || (*c > 0.0 && companion.is_continuous())
            }
        }
    }

    /// Left end of the support.
    pub fn support_min(&self) -> f64 {
        match self {
            MarginalSpec::Pareto { scale, .. } => *scale,
            MarginalSpec::StepPareto { .. } => 2.0,
            MarginalSpec::Exponential { .. } => 0.0,
            MarginalSpec::Uniform { lo, .. } => *lo,
            MarginalSpec::Degenerate { value } => *value,
            MarginalSpec::Shifted { base, offset } => base.support_min() - offset,
            MarginalSpec::NetLossEmpirical { base, companion, c } => {
                if *c == 0.0 {
                    base.support_min()
                } else if companion.support_max().is_finite() {
                    base.support_min() - c * companion.support_max()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn support_max(&self) -> f64 {
        match self {
            MarginalSpec::Uniform { hi, .. } => *hi,
            MarginalSpec::Degenerate { value } => *value,
            MarginalSpec::Shifted { base, offset } => base.support_max() - offset,
            MarginalSpec::NetLossEmpirical { base, companion, c } => base.support_max() - c * companion.support_min(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.support_min() >= 0.0
    }

    /// Exact `P(X > x)`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        if !self.has_closed_form() {
            return Err(Error::NoClosedFormTail(self.to_string()));
        }
        Ok(self.tail_closed(x))
    }

    /// `P(X > x)` for closed-form families; NaN for `NetLossEmpirical`.
    #[inline]
    pub fn tail_closed(&self, x: f64) -> f64 {
        match self {
            MarginalSpec::Pareto { alpha, scale } => {
                if x <= *scale {
                    1.0
                } else {
                    if *alpha == 2.0 {
                        (scale * scale) / (x * x)
                    } else {
                        (scale / x).powf(*alpha)
                    }
                }
            }
            MarginalSpec::StepPareto { alpha } => step_pareto_tail(*alpha, x),
            MarginalSpec::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            MarginalSpec::Uniform { lo, hi } => {
                if x < *lo {
                    1.0
                } else if x >= *hi {
                    0.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            MarginalSpec::Degenerate { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            MarginalSpec::Shifted { base, offset } => base.tail_closed(x + offset),
            MarginalSpec::NetLossEmpirical { .. } => f64::NAN,
        }
    }

    /// Exact `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.tail(x)?)
    }

    /// `inf{x : tail(x) <= p}` for `p` in `(0, 1]`; at `p = 1` the left end
    /// of the support. Plateaus resolve to their left endpoint.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !self.has_closed_form() {
            return Err(Error::NoClosedFormTail(self.to_string()));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1], got {p}")));
        }
        Ok(self.inverse(p))
    }

    /// Unchecked inverse transform of a tail uniform (closed-form families).
    #[inline]
    pub fn inverse(&self, u: f64) -> f64 {
        match self {
            MarginalSpec::Pareto { alpha, scale } => {
                if *alpha == 2.0 {
                    scale / u.sqrt()
                } else {
                    scale * u.powf(-1.0 / alpha)
                }
            }
            MarginalSpec::StepPareto { alpha } => step_pareto_quantile(*alpha, u),
            MarginalSpec::Exponential { rate } => -u.ln() / rate,
            MarginalSpec::Uniform { lo, hi } => hi - u * (hi - lo),
            MarginalSpec::Degenerate { value } => *value,
            MarginalSpec::Shifted { base, offset } => base.inverse(u) - offset,
            MarginalSpec::NetLossEmpirical { .. } => f64::NAN,
        }
    }

    /// Inverse-transform sample. Closed-form families consume one uniform;
    /// `NetLossEmpirical` consumes two: the base draw first, then the
    /// companion draw.
    #[inline]
    pub fn sample<S: UniformSource + ?Sized>(&self, src: &mut S) -> Result<f64> {
        match self {
            MarginalSpec::NetLossEmpirical { base, companion, c } => {
                let y = base.inverse(src.draw()?);
                let z = companion.inverse(src.draw()?);
                Ok(y - c * z)
            }
            _ => Ok(self.inverse(src.draw()?)),
        }
    }

    /// `int_0^o tail(y) dy` for `o >= 0`, i.e. `E min(Y, o)`, for the plain
    /// nonnegative families.
    fn integrated_tail(&self, o: f64) -> f64 {
        if o <= 0.0 {
            return 0.0;
        }
        match self {
            MarginalSpec::Pareto { alpha, scale } => {
                let (a, s) = (*alpha, *scale);
                if o <= s {
                    o
                } else if a == 1.0 {
                    s + s * (o / s).ln()
                } else {
                    s + s.powf(a) * (o.powf(1.0 - a) - s.powf(1.0 - a)) / (1.0 - a)
                }
            }
            MarginalSpec::StepPareto { alpha } => step_pareto_integrated_tail(*alpha, o),
            MarginalSpec::Exponential { rate } => -(-rate * o).exp_m1() / rate,
            MarginalSpec::Uniform { lo, hi } => {
                if o <= *lo {
                    o
                } else if o >= *hi {
                    0.5 * (lo + hi)
                } else {
                    let w = hi - lo;
                    lo + (w * w - (hi - o) * (hi - o)) / (2.0 * w)
                }
            }
            MarginalSpec::Degenerate { value } => value.min(o),
            _ => f64::NAN,
        }
    }

    /// `E (Y - o)^+` for the plain nonnegative families.
    fn upper_partial(&self, o: f64) -> f64 {
        let mean = self.plain_mean();
        if o <= 0.0 {
            return mean - o;
        }
        if mean.is_infinite() {
            return f64::INFINITY;
        }
        (mean - self.integrated_tail(o)).max(0.0)
    }

    /// `E (o - Y)^+` for the plain nonnegative families.
    fn lower_partial(&self, o: f64) -> f64 {
        if o <= 0.0 {
            0.0
        } else {
            (o - self.integrated_tail(o)).max(0.0)
        }
    }

    fn plain_mean(&self) -> f64 {
        match self {
            MarginalSpec::Pareto { alpha, scale } => {
                if *alpha > 1.0 {
                    alpha * scale / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            // 1 + 2 * sum_j 4^{j(1 - alpha)}
            MarginalSpec::StepPareto { alpha } => {
                if *alpha > 1.0 {
                    1.0 + 2.0 / (1.0 - 4f64.powf(1.0 - alpha))
                } else {
                    f64::INFINITY
                }
            }
            MarginalSpec::Exponential { rate } => 1.0 / rate,
            MarginalSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            MarginalSpec::Degenerate { value } => *value,
            _ => f64::NAN,
        }
    }

    fn r_max(&self) -> f64 {
        match self {
            MarginalSpec::Pareto { alpha, .. } | MarginalSpec::StepPareto { alpha } => *alpha,
            MarginalSpec::Shifted { base, .. } | MarginalSpec::NetLossEmpirical { base, .. } => base.r_max(),
            _ => f64::INFINITY,
        }
    }

    /// Exact moments. Infinite values are represented, not errors.
    pub fn moments(&self) -> Moments {
        let r_max = self.r_max();
        match self {
            MarginalSpec::Shifted { base, offset } => {
                let mean = base.plain_mean() - offset;
                let mean_pos = base.upper_partial(*offset);
                let mean_neg = if mean.is_finite() {
                    (mean_pos - mean).max(0.0)
                } else {
                    base.lower_partial(*offset)
                };
                Moments {
                    mean,
                    mean_pos,
                    mean_neg,
                    r_max,
                }
            }
            MarginalSpec::NetLossEmpirical { base, companion, c } => {
                let mean = base.plain_mean() - c * companion.plain_mean();
                // E (Y - cZ)^+ = E_Z[ E (Y - cZ)^+ | Z ], midpoint rule over
                // the companion's tail uniform.
                const M: usize = 1 << 14;
                let h = 1.0 / M as f64;
                let (mut pos, mut neg) = (0.0, 0.0);
                for k in 0..M {
                    let o = c * companion.inverse((k as f64 + 0.5) * h);
                    pos += base.upper_partial(o);
                    neg += base.lower_partial(o);
                }
                let mean_pos = pos * h;
                let mean_neg = if mean.is_finite() {
                    (mean_pos - mean).max(0.0)
                } else {
                    neg * h
                };
                Moments {
                    mean,
                    mean_pos,
                    mean_neg,
                    r_max,
                }
            }
            _ => {
                let mean = self.plain_mean();
                Moments {
                    mean,
                    mean_pos: mean,
                    mean_neg: 0.0,
                    r_max,
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments().mean
    }

    /// Theoretical class membership and indices.
    pub fn theoretical_indices(&self) -> Result<TailIndices> {
        match self {
            MarginalSpec::Pareto { alpha, .. } => Ok(TailIndices {
                l: 1.0,
                j_plus: *alpha,
                j_minus: *alpha,
                moment_index: *alpha,
                in_d: true,
                in_c: true,
            }),
            // The two jumps per period scale the tail by 1/2 and 2 * 4^-alpha.
            MarginalSpec::StepPareto { alpha } => {
                let l = 0.5f64.min(2.0 * 4f64.powf(-alpha));
                Ok(TailIndices {
                    l,
                    j_plus: *alpha,
                    j_minus: *alpha,
                    moment_index: *alpha,
                    in_d: true,
                    in_c: false,
                })
            }
            MarginalSpec::Exponential { .. } | MarginalSpec::Uniform { .. } | MarginalSpec::Degenerate { .. } => {
                Ok(TailIndices {
                    l: 0.0,
                    j_plus: f64::INFINITY,
                    j_minus: f64::INFINITY,
                    moment_index: f64::INFINITY,
                    in_d: false,
                    in_c: false,
                })
            }
            MarginalSpec::Shifted { base, .. } => base.theoretical_indices(),
            MarginalSpec::NetLossEmpirical { .. } => Err(Error::NoClosedFormTail(self.to_string())),
        }
    }

    pub(crate) fn from_call(call: &Call) -> Result<Self> {
        let mut a = Args::new(call);
        let spec = match call.name.as_str() {
            "pareto" => MarginalSpec::Pareto {
                alpha: a.number("alpha")?,
                scale: a.opt_number("scale")?.unwrap_or(1.0),
            },
            "step_pareto" => MarginalSpec::StepPareto {
                alpha: a.number("alpha")?,
            },
            "exponential" => MarginalSpec::Exponential {
                rate: a.opt_number("rate")?.unwrap_or(1.0),
            },
            "uniform" => MarginalSpec::Uniform {
                lo: a.opt_number("lo")?.unwrap_or(0.0),
                hi: a.opt_number("hi")?.unwrap_or(1.0),
            },
            "degenerate" => MarginalSpec::Degenerate {
                value: a.number("value")?,
            },
            "shifted" => {
                let base = Self::from_call(a.call("base")?)?;
                MarginalSpec::Shifted {
                    base: Box::new(base),
                    offset: a.number("offset")?,
                }
            }
            "centered" => {
                let base = Self::from_call(a.call("base")?)?;
                a.finish()?;
                return Self::centered(base);
            }
            "net_loss" => {
                let base = Self::from_call(a.call("base")?)?;
                let companion = Self::from_call(a.call("companion")?)?;
                MarginalSpec::NetLossEmpirical {
                    base: Box::new(base),
                    companion: Box::new(companion),
                    c: a.opt_number("c")?.unwrap_or(1.0),
                }
            }
            other => return Err(Error::parse(other, "unknown marginal family")),
        };
        a.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for MarginalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginalSpec::Pareto { alpha, scale } => write!(f, "pareto(alpha={alpha}, scale={scale})"),
            MarginalSpec::StepPareto { alpha } => write!(f, "step_pareto(alpha={alpha})"),
            MarginalSpec::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            MarginalSpec::Uniform { lo, hi } => write!(f, "uniform(lo={lo}, hi={hi})"),
            MarginalSpec::Degenerate { value } => write!(f, "degenerate(value={value})"),
            MarginalSpec::Shifted { base, offset } => write!(f, "shifted({base}, offset={offset})"),
            MarginalSpec::NetLossEmpirical { base, companion, c } => write!(f, "net_loss({base}, {companion}, c={c})"),
        }
    }
}

impl FromStr for MarginalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_call(&textual::parse(s)?)
    }
}

serde_via_text!(MarginalSpec, "a marginal spec such as `pareto(alpha=2, scale=1)`");
