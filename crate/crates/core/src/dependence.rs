//! Dependent sequences with a common marginal, and empirical dominating
//! coefficients.
//!
//! Dependence is imposed on the *tail* uniforms `T_i = F̄(X_i)` before the
//! marginal inverse transform. The FGM copula is radially symmetric, so
//! coupling tail uniforms with an FGM copula gives the same copula for the
//! `X_i` themselves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::mc::{run_replications, Counts};
use crate::stream::{Role, StreamKey, UniformSource};
use crate::textual::{self, serde_via_text, Args, Call};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DependenceKind {
    Independent,
    /// Bivariate FGM copula; only defined for sequences of length 2.
    FgmPair { theta: f64 },
    /// Markov chain whose neighbours are coupled by the FGM copula.
    FgmChain { theta: f64 },
    /// Latent standard-normal AR(1) mapped through its survival function.
    GaussianAr1 { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceSpec {
    pub kind: DependenceKind,
    /// Claimed growth exponent `a` in `g_U(n) = O(n^a)`. Metadata only.
    pub claimed_gu_exponent: Option<f64>,
    /// Claimed growth exponent `b` in `g_L(n) = O(n^b)`. Metadata only.
    pub claimed_gl_exponent: Option<f64>,
}

impl Default for DependenceSpec {
    fn default() -> Self {
        Self::independent()
    }
}

impl From<DependenceKind> for DependenceSpec {
    fn from(kind: DependenceKind) -> Self {
        Self {
            kind,
            claimed_gu_exponent: None,
            claimed_gl_exponent: None,
        }
    }
}

/// FGM conditional inverse: the `v` solving `v (1 + a (1 - v)) = w` with
/// `a = theta (1 - 2u)`, written in the cancellation-free form of the root
/// in `[0, 1]`. Exactly `w` when `a = 0`.
#[inline]
pub fn fgm_conditional_inverse(theta: f64, u: f64, w: f64) -> f64 {
    let a = theta * (1.0 - 2.0 * u);
    let b = 1.0 + a;
    2.0 * w / (b + (b * b - 4.0 * a * w).max(0.0).sqrt())
}

/// Standard-normal survival function.
#[inline]
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Inverse of [`normal_sf`].
#[inline]
pub fn normal_isf(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

impl DependenceSpec {
    pub fn independent() -> Self {
        DependenceKind::Independent.into()
    }

    pub fn fgm_pair(theta: f64) -> Result<Self> {
        let s: Self = DependenceKind::FgmPair { theta }.into();
        s.validate()?;
        Ok(s)
    }

    pub fn fgm_chain(theta: f64) -> Result<Self> {
        let s: Self = DependenceKind::FgmChain { theta }.into();
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian_ar1(rho: f64) -> Result<Self> {
        let s: Self = DependenceKind::GaussianAr1 { rho }.into();
        s.validate()?;
        Ok(s)
    }

    pub fn with_claimed_exponents(mut self, gu: Option<f64>, gl: Option<f64>) -> Result<Self> {
        self.claimed_gu_exponent = gu;
        self.claimed_gl_exponent = gl;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DependenceKind::Independent => {}
            DependenceKind::FgmPair { theta } | DependenceKind::FgmChain { theta } => {
                if !(-1.0..=1.0).contains(&theta) {
                    return Err(Error::invalid(format!("FGM theta must lie in [-1, 1], got {theta}")));
                }
            }
            DependenceKind::GaussianAr1 { rho } => {
                if !(rho > -1.0 && rho < 1.0) {
                    return Err(Error::invalid(format!("rho must lie in (-1, 1), got {rho}")));
                }
            }
        }
        for e in [self.claimed_gu_exponent, self.claimed_gl_exponent].into_iter().flatten() {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::invalid(format!("claimed exponents must be finite and >= 0, got {e}")));
            }
        }
        Ok(())
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.kind, DependenceKind::Independent)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            DependenceKind::Independent => "independent",
            DependenceKind::FgmPair { .. } => "fgm_pair",
            DependenceKind::FgmChain { .. } => "fgm_chain",
            DependenceKind::GaussianAr1 { .. } => "gaussian_ar1",
        }
    }

    /// Certified `(g_U(n), g_L(n))`, when one is known.
    pub fn certified(&self, n: usize) -> Option<(f64, f64)> {
        match self.kind {
            DependenceKind::Independent => Some((1.0, 1.0)),
            DependenceKind::FgmPair { theta } if n == 2 => Some((1.0 + theta.abs(), 1.0 + theta.abs())),
            _ => None,
        }
    }

    /// An unbounded dependent sequence with common law `marginal`.
    ///
    /// Independent sequences use `marginal.sample`, so any family works.
    /// Dependent kinds couple tail uniforms and need a closed-form quantile.
    pub fn stream<'a>(&'a self, marginal: &'a MarginalSpec) -> Result<DependentStream<'a>> {
        if !self.is_independent() && !marginal.has_closed_form() {
            return Err(Error::MethodUnsupported {
                method: format!("{self} sampling"),
                reason: format!("`{marginal}` has no closed-form quantile"),
            });
        }
        Ok(DependentStream {
            chain: Chain::new(self),
            marginal,
        })
    }

    /// One sequence of length `n`. Consumes `n` uniforms (`2n` for an
    /// independent `net_loss` marginal).
    pub fn sample_sequence<U: UniformSource + ?Sized>(
        &self,
        marginal: &MarginalSpec,
        n: usize,
        src: &mut U,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n];
        self.sample_into(marginal, &mut out, src)?;
        Ok(out)
    }

    pub(crate) fn from_call(call: &Call) -> Result<Self> {
        let mut a = Args::new(call);
        let kind = match call.name.as_str() {
            "independent" => DependenceKind::Independent,
            "fgm_pair" => DependenceKind::FgmPair {
                theta: a.number("theta")?,
            },
            "fgm_chain" => DependenceKind::FgmChain {
                theta: a.number("theta")?,
            },
            "gaussian_ar1" => DependenceKind::GaussianAr1 { rho: a.number("rho")? },
            other => return Err(Error::parse(other, "unknown dependence kind")),
        };
        let spec = DependenceSpec {
            kind,
            claimed_gu_exponent: a.opt_number("gu_exponent")?,
            claimed_gl_exponent: a.opt_number("gl_exponent")?,
        };
        a.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DependenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut args = Vec::new();
        match self.kind {
            DependenceKind::Independent => {}
            DependenceKind::FgmPair { theta } | DependenceKind::FgmChain { theta } => args.push(format!("theta={theta}")),
            DependenceKind::GaussianAr1 { rho } => args.push(format!("rho={rho}")),
        }
        if let Some(e) = self.claimed_gu_exponent {
            args.push(format!("gu_exponent={e}"));
        }
        if let Some(e) = self.claimed_gl_exponent {
            args.push(format!("gl_exponent={e}"));
        }
        f.write_str(self.kind_name())?;
        if !args.is_empty() {
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

impl FromStr for DependenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_call(&textual::parse(s)?)
    }
}

serde_via_text!(DependenceSpec, "a dependence spec such as `fgm_chain(theta=0.5)`");

/// Markov state of a dependent sequence of tail uniforms.
#[derive(Debug, Clone)]
pub struct Chain {
    kind: DependenceKind,
    /// Previous tail uniform (FGM) or latent normal (AR(1)); NaN at start.
    prev: f64,
}

impl Chain {
    pub fn new(spec: &DependenceSpec) -> Self {
        Self {
            kind: spec.kind,
            prev: f64::NAN,
        }
    }

    /// Next tail uniform; consumes exactly one uniform.
    #[inline]
    pub fn next_tail_uniform<U: UniformSource + ?Sized>(&mut self, src: &mut U) -> Result<f64> {
        let w = src.draw()?;
        let started = !self.prev.is_nan();
        Ok(match self.kind {
            DependenceKind::Independent => w,
            DependenceKind::FgmPair { theta } | DependenceKind::FgmChain { theta } => {
                let v = if started {
                    fgm_conditional_inverse(theta, self.prev, w)
                } else {
                    w
                };
                self.prev = v;
                v
            }
            DependenceKind::GaussianAr1 { rho } => {
                let e = normal_isf(w);
                let z = if started {
                    rho * self.prev + (1.0 - rho * rho).sqrt() * e
                } else {
                    e
                };
                self.prev = z;
                // Keep the tail uniform strictly inside (0, 1).
                normal_sf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            }
        })
    }
}

/// Values of a dependent sequence, one at a time.
#[derive(Debug, Clone)]
pub struct DependentStream<'a> {
    chain: Chain,
    marginal: &'a MarginalSpec,
}

impl DependentStream<'_> {
    #[inline]
    pub fn next<U: UniformSource + ?Sized>(&mut self, src: &mut U) -> Result<f64> {
        if matches!(self.chain.kind, DependenceKind::Independent) {
            self.marginal.sample(src)
        } else {
            Ok(self.marginal.inverse(self.chain.next_tail_uniform(src)?))
        }
    }
}

/// Anything that produces finite sequences with a prescribed common law.
/// Implemented by [`DependenceSpec`]; tests add structures outside the
/// configurable set, such as comonotone pairs.
pub trait SequenceSampler: Sync {
    fn sample_into<U: UniformSource + ?Sized>(&self, marginal: &MarginalSpec, out: &mut [f64], src: &mut U) -> Result<()>;

    fn certified(&self, _n: usize) -> Option<(f64, f64)> {
        None
    }
}

impl SequenceSampler for DependenceSpec {
    fn sample_into<U: UniformSource + ?Sized>(&self, marginal: &MarginalSpec, out: &mut [f64], src: &mut U) -> Result<()> {
        if matches!(self.kind, DependenceKind::FgmPair { .. }) && out.len() != 2 {
            return Err(Error::invalid(format!("fgm_pair generates pairs only, asked for n={}", out.len())));
        }
        let mut s = self.stream(marginal)?;
        for o in out.iter_mut() {
            *o = s.next(src)?;
        }
        Ok(())
    }

    fn certified(&self, n: usize) -> Option<(f64, f64)> {
        DependenceSpec::certified(self, n)
    }
}

/// One orthant-ratio cell of a dominating-coefficient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub ratio: f64,
    pub stderr: f64,
    /// Estimated joint orthant probability.
    pub joint: f64,
    /// Product of marginal orthant probabilities.
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominatingEstimate {
    pub n: usize,
    pub gu_hat: f64,
    pub gl_hat: f64,
    pub grid: Vec<Vec<f64>>,
    /// Upper-orthant cells per grid vector; `None` where skipped.
    pub upper: Vec<Option<RatioCell>>,
    pub lower: Vec<Option<RatioCell>>,
    pub samples: u64,
    pub stderr_max: f64,
    pub exact_denominators: bool,
    /// Upper ratios rise by at least a factor 2 along the grid: evidence
    /// against a bounded `g_U`.
    pub growth_detected: bool,
    pub certified: Option<(f64, f64)>,
}

impl DominatingEstimate {
    pub fn skipped(&self) -> usize {
        self.upper.iter().chain(&self.lower).filter(|c| c.is_none()).count()
    }
}

/// Estimates `g_U(n)` and `g_L(n)` as the largest orthant ratio over a grid
/// of threshold vectors. Grid vectors whose marginal product falls below
/// `10 / samples` are skipped.
pub fn estimate_dominating_coefficients<D: SequenceSampler + ?Sized>(
    dep: &D,
    marginal: &MarginalSpec,
    n: usize,
    grid: &[Vec<f64>],
    samples: u64,
    key: &StreamKey,
) -> Result<DominatingEstimate> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if samples < 10_000 {
        return Err(Error::invalid(format!("need at least 10^4 samples, got {samples}")));
    }
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if let Some(v) = grid.iter().find(|v| v.len() != n) {
        return Err(Error::invalid(format!("threshold vector of length {} for n={n}", v.len())));
    }
    let g = grid.len();
    // Per grid vector: [joint upper, joint lower, per-coordinate exceedances...]
    let stride = 2 + n;
    let counts = run_replications(
        samples,
        || Counts::new(g * stride),
        || vec![0.0; n],
        |rep, buf: &mut Vec<f64>, acc: &mut Counts| {
            let mut src = key.substream(Role::Dominating, rep);
            dep.sample_into(marginal, buf, &mut src)?;
            for (k, th) in grid.iter().enumerate() {
                let base = k * stride;
                let mut all_up = true;
                let mut all_low = true;
                for (i, (&x, &t)) in buf.iter().zip(th).enumerate() {
                    let up = x > t;
                    all_up &= up;
                    all_low &= !up;
                    acc.0[base + 2 + i] += u64::from(up);
                }
                acc.0[base] += u64::from(all_up);
                acc.0[base + 1] += u64::from(all_low);
            }
            Ok(())
        },
    )?;

    let exact = marginal.has_closed_form();
    let nf = samples as f64;
    let floor = 10.0 / nf;
    let cell = |hits: u64, product: f64| {
        if product < floor {
            return None;
        }
        let p = hits as f64 / nf;
        Some(RatioCell {
            ratio: p / product,
            stderr: (p * (1.0 - p) / nf).sqrt() / product,
            joint: p,
            product,
        })
    };
    let mut upper = Vec::with_capacity(g);
    let mut lower = Vec::with_capacity(g);
    for (k, th) in grid.iter().enumerate() {
        let c = &counts.0[k * stride..(k + 1) * stride];
        let (mut pu, mut pl) = (1.0, 1.0);
        for (i, &t) in th.iter().enumerate() {
            let tail = if exact {
                marginal.tail_closed(t)
            } else {
                c[2 + i] as f64 / nf
            };
            pu *= tail;
            pl *= 1.0 - tail;
        }
        upper.push(cell(c[0], pu));
        lower.push(cell(c[1], pl));
    }
    let side_max = |cells: &[Option<RatioCell>]| cells.iter().flatten().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max);
    let gu_hat = side_max(&upper);
    let gl_hat = side_max(&lower);
    if !gu_hat.is_finite() || !gl_hat.is_finite() {
        return Err(Error::AllGridPointsSkipped { samples });
    }
    let stderr_max = upper.iter().chain(&lower).flatten().map(|c| c.stderr).fold(0.0, f64::max);
    let up: Vec<f64> = upper.iter().flatten().map(|c| c.ratio).collect();
    let growth_detected = up.len() >= 2 && up[up.len() - 1] >= 2.0 * up[0];
    Ok(DominatingEstimate {
        n,
        gu_hat,
        gl_hat,
        grid: grid.to_vec(),
        upper,
        lower,
        samples,
        stderr_max,
        exact_denominators: exact,
        growth_detected,
        certified: dep.certified(n),
    })
}
