//! Renewal risk model with dependent claims and inter-arrival times.
//!
//! Claims `Y_i ~ G` arrive after inter-arrival times `Z_i ~ H`; premiums
//! come in at rate `c`. The net loss after `n` claims is
//! `S_n = sum_{i<=n} (Y_i - c Z_i)` and ruin within a horizon means
//! `max_{0<=n<=N(horizon)} S_n > x`, checked at claim instants.
//!
//! Replication `r` draws inter-arrivals from `(Interarrivals, r)`, claims
//! from `(Claims, r)` and a random horizon from `(Horizon, r)`; the renewal
//! function comes from the cached curve on `LambdaCache` substreams. Claims
//! and arrivals are therefore independent, and every estimator that shares
//! a key sees the same paths.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counting::{random_sum_entry, Arrivals, CountingSpec, LambdaCurve};
use crate::dependence::DependenceSpec;
use crate::deviation::{regime_of, validate_multipliers, Method, RatioReport, TailEstimate, Tolerances, Verdict, MIN_HITS};
use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::mc::{run_replications, Tally};
use crate::stream::{Role, StreamKey, UniformSource};
use crate::textual::{self, serde_via_text, Args, Call};
use crate::trend::{TrendPoint, TrendReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskModelSpec {
    /// Claim-size law `G` on `[0, inf)`.
    pub claim: MarginalSpec,
    #[serde(default)]
    pub claim_dep: DependenceSpec,
    /// Arrival process; its inter-arrival law is `H`.
    pub arrivals: CountingSpec,
    /// Premium rate `c`.
    pub premium_rate: f64,
    #[serde(default = "one")]
    pub q1: f64,
    #[serde(default = "one")]
    pub q2: f64,
    /// Excess-of-loss retention `D`.
    #[serde(default)]
    pub retention: f64,
    /// Accept models without a safety loading.
    #[serde(default)]
    pub allow_unsafe: bool,
}

fn one() -> f64 {
    1.0
}

impl RiskModelSpec {
    /// A model with `q1 = q2 = 1`, no retention, validated.
    pub fn new(claim: MarginalSpec, claim_dep: DependenceSpec, arrivals: CountingSpec, premium_rate: f64) -> Result<Self> {
        let m = Self {
            claim,
            claim_dep,
            arrivals,
            premium_rate,
            q1: 1.0,
            q2: 1.0,
            retention: 0.0,
            allow_unsafe: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.claim.validate()?;
        self.claim_dep.validate()?;
        self.arrivals.validate()?;
        if !self.claim.is_nonnegative() {
            return Err(Error::invalid(format!("claim law `{}` must live on [0, inf)", self.claim)));
        }
        self.claim_dep.stream(&self.claim)?;
        if !(self.premium_rate >= 0.0 && self.premium_rate.is_finite()) {
            return Err(Error::invalid(format!("premium rate must be finite and >= 0, got {}", self.premium_rate)));
        }
        for (name, q) in [("q1", self.q1), ("q2", self.q2)] {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {q}")));
            }
        }
        if !(self.retention >= 0.0 && self.retention.is_finite()) {
            return Err(Error::invalid(format!("retention must be finite and >= 0, got {}", self.retention)));
        }
        let mean_claim = self.claim.mean();
        let mean_interarrival = self.arrivals.mean_interarrival();
        if !self.allow_unsafe && !(mean_claim < self.premium_rate * mean_interarrival) {
            return Err(Error::SafetyLoading {
                mean_claim,
                premium_rate: self.premium_rate,
                mean_interarrival,
            });
        }
        Ok(())
    }

    /// Expected net loss per claim, `mu_G - c mu_H`.
    pub fn drift(&self) -> f64 {
        self.claim.mean() - self.premium_rate * self.arrivals.mean_interarrival()
    }
}

/// Horizon of a random-time ruin problem, independent of the model.
#[derive(Debug, Clone, PartialEq)]
pub enum TauSpec {
    Fixed { t: f64 },
    Exponential { rate: f64 },
    /// `P(tau >= k) = (1 - p)^k` on `{0, 1, 2, ...}`.
    Geometric { p: f64 },
    /// Any nonnegative closed-form law.
    Law(MarginalSpec),
}

impl TauSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TauSpec::Fixed { t } => {
                if !(*t > 0.0 && t.is_finite()) {
                    return Err(Error::invalid(format!("fixed horizon must be positive, got {t}")));
                }
            }
            TauSpec::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid(format!("horizon rate must be positive, got {rate}")));
                }
            }
            TauSpec::Geometric { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::invalid(format!("geometric p must lie in (0, 1), got {p}")));
                }
            }
            TauSpec::Law(m) => {
                m.validate()?;
                if !m.has_closed_form() || !m.is_nonnegative() {
                    return Err(Error::invalid(format!("horizon law `{m}` must be closed-form and nonnegative")));
                }
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TauSpec::Fixed { .. } => "fixed",
            TauSpec::Exponential { .. } => "exponential",
            TauSpec::Geometric { .. } => "geometric",
            TauSpec::Law(_) => "law",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            TauSpec::Fixed { t } => *t,
            TauSpec::Exponential { rate } => 1.0 / rate,
            TauSpec::Geometric { p } => (1.0 - p) / p,
            TauSpec::Law(m) => m.mean(),
        }
    }

    /// Smallest `t` with `P(tau > t) <= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            TauSpec::Fixed { t } => *t,
            TauSpec::Exponential { rate } => -p.ln() / rate,
            TauSpec::Geometric { p: q } => (p.ln() / (1.0 - q).ln()).ceil() - 1.0,
            TauSpec::Law(m) => m.inverse(p),
        }
    }

    /// Draws one horizon. `Fixed` consumes no uniforms; the others one.
    pub fn sample<U: UniformSource + ?Sized>(&self, src: &mut U) -> Result<f64> {
        Ok(match self {
            TauSpec::Fixed { t } => *t,
            TauSpec::Exponential { rate } => -src.draw()?.ln() / rate,
            TauSpec::Geometric { p } => (src.draw()?.ln() / (1.0 - p).ln()).floor(),
            TauSpec::Law(m) => m.sample(src)?,
        })
    }

    pub(crate) fn from_call(call: &Call) -> Result<Self> {
        let mut a = Args::new(call);
        let spec = match call.name.as_str() {
            "fixed" => TauSpec::Fixed { t: a.number("t")? },
            "exponential" => TauSpec::Exponential { rate: a.number("rate")? },
            "geometric" => TauSpec::Geometric { p: a.number("p")? },
            "law" => TauSpec::Law(MarginalSpec::from_call(a.call("law")?)?),
            other => return Err(Error::parse(other, "unknown horizon kind")),
        };
        a.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for TauSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSpec::Fixed { t } => write!(f, "fixed(t={t})"),
            TauSpec::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            TauSpec::Geometric { p } => write!(f, "geometric(p={p})"),
            TauSpec::Law(m) => write!(f, "law({m})"),
        }
    }
}

impl FromStr for TauSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_call(&textual::parse(s)?)
    }
}

serde_via_text!(TauSpec, "a horizon such as `exponential(rate=0.1)`");

/// One simulated surplus path up to a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPath {
    pub arrival_times: Vec<f64>,
    pub interarrivals: Vec<f64>,
    pub claims: Vec<f64>,
    /// `S_1, ..., S_{N(t)}`.
    pub partial_sums: Vec<f64>,
}

impl RiskPath {
    /// `max_{0<=n<=N} S_n`, with `S_0 = 0`.
    pub fn max_partial_sum(&self) -> f64 {
        self.partial_sums.iter().copied().fold(0.0, f64::max)
    }
}

/// Path of replication `replication` up to time `t`.
pub fn simulate_path(model: &RiskModelSpec, t: f64, key: &StreamKey, replication: u64) -> Result<RiskPath> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {t}")));
    }
    let (im, idep) = model.arrivals.renewal_parts();
    let mut asrc = key.substream(Role::Interarrivals, replication);
    let mut csrc = key.substream(Role::Claims, replication);
    let mut arr = Arrivals::new(&im, &idep, t)?;
    let mut claims = model.claim_dep.stream(&model.claim)?;
    let mut path = RiskPath {
        arrival_times: Vec::new(),
        interarrivals: Vec::new(),
        claims: Vec::new(),
        partial_sums: Vec::new(),
    };
    let mut s = 0.0;
    while let Some(z) = arr.next(&mut asrc)? {
        let y = claims.next(&mut csrc)?;
        s += y - model.premium_rate * z;
        path.arrival_times.push(arr.time());
        path.interarrivals.push(z);
        path.claims.push(y);
        path.partial_sums.push(s);
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Functional {
    /// Reinsurer's proportional share `q1 sum Y_i`.
    R11,
    /// Proportional net loss `sum (q1 Y_i - q2 c Z_i)`.
    R12,
    /// Excess-of-loss total `sum (Y_i - D)^+`.
    R21,
    /// Excess-of-loss net loss `sum ((Y_i - D)^+ - q2 c Z_i)`.
    R22,
}

impl Functional {
    /// Whether a precise large-deviation result backs the ratio.
    pub fn has_theorem(self) -> bool {
        matches!(self, Functional::R11 | Functional::R12)
    }

    pub fn name(self) -> &'static str {
        match self {
            Functional::R11 => "R11",
            Functional::R12 => "R12",
            Functional::R21 => "R21",
            Functional::R22 => "R22",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R11" | "r11" => Ok(Functional::R11),
            "R12" | "r12" => Ok(Functional::R12),
            "R21" | "r21" => Ok(Functional::R21),
            "R22" | "r22" => Ok(Functional::R22),
            _ => Err(Error::parse(s, "expected one of R11, R12, R21, R22")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinsuranceScanConfig {
    pub gamma: f64,
    pub t_list: Vec<f64>,
    pub x_multipliers: Vec<f64>,
    pub samples: u64,
    pub lambda_replications: u64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinsuranceReport {
    pub functional: Functional,
    pub q1: f64,
    pub q2: f64,
    pub c: f64,
    pub retention: f64,
    /// False for the excess-of-loss functionals, whose denominator
    /// `lambda(t) G̅(x + D)` is a heuristic; their verdict is Inconclusive.
    pub theorem_available: bool,
    pub report: RatioReport,
}

/// Ratios of a reinsurance functional's tail against
/// `lambda(t) G̅(x / q1)` (proportional) or `lambda(t) G̅(x + D)`
/// (excess of loss), with `x = multiplier * gamma * lambda(t)`.
pub fn reinsurance_tail_scan(
    model: &RiskModelSpec,
    which: Functional,
    config: &ReinsuranceScanConfig,
    key: &StreamKey,
) -> Result<(ReinsuranceReport, LambdaCurve)> {
    model.validate()?;
    if !(config.gamma > 0.0) || config.t_list.is_empty() || config.t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("need gamma > 0 and a nonempty list of positive horizons"));
    }
    validate_multipliers(&config.x_multipliers)?;
    let regime = regime_of(&model.claim)?;
    if which.has_theorem() && !model.claim.theoretical_indices()?.in_c {
        return Err(Error::PreconditionViolated(format!(
            "{which} asymptotics need a consistently varying claim law, got `{}`",
            model.claim
        )));
    }
    let curve = LambdaCurve::build(&model.arrivals, &config.t_list, config.lambda_replications, key)?;
    let (im, idep) = model.arrivals.renewal_parts();
    let (q1, q2, c, d) = (model.q1, model.q2, model.premium_rate, model.retention);
    let mut entries = Vec::new();
    for &t in &config.t_list {
        let lambda = curve.eval(t);
        let xs: Vec<f64> = config.x_multipliers.iter().map(|m| m * config.gamma * lambda).collect();
        let k = xs.len();
        let tally = run_replications(
            config.samples,
            || Tally::new(k),
            || (),
            |rep, _, acc: &mut Tally| {
                let mut asrc = key.substream(Role::Interarrivals, rep);
                let mut csrc = key.substream(Role::Claims, rep);
                let mut arr = Arrivals::new(&im, &idep, t)?;
                let mut claims = model.claim_dep.stream(&model.claim)?;
                let mut r = 0.0;
                while let Some(z) = arr.next(&mut asrc)? {
                    let y = claims.next(&mut csrc)?;
                    r += match which {
                        Functional::R11 => q1 * y,
                        Functional::R12 => q1 * y - q2 * c * z,
                        Functional::R21 => (y - d).max(0.0),
                        Functional::R22 => (y - d).max(0.0) - q2 * c * z,
                    };
                }
                acc.reps += 1;
                for (j, &x) in xs.iter().enumerate() {
                    acc.indicator(j, r > x);
                }
                Ok(())
            },
        )?;
        for (j, &x) in xs.iter().enumerate() {
            let est = TailEstimate::from_tally(&tally, j, Method::CrudeMc);
            let tail = if which.has_theorem() {
                model.claim.tail_closed(x / q1)
            } else {
                model.claim.tail_closed(x + d)
            };
            entries.push(random_sum_entry(t, lambda, x, est, tail));
        }
    }
    let mut report = RatioReport::assemble(entries, &model.claim, regime, config.tolerances)?;
    if !which.has_theorem() {
        report.verdict = Verdict::Inconclusive;
    }
    Ok((
        ReinsuranceReport {
            functional: which,
            q1,
            q2,
            c,
            retention: d,
            theorem_available: which.has_theorem(),
            report,
        },
        curve,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    /// Initial capital.
    pub x: f64,
    pub horizon: TauSpec,
    pub psi_hat: f64,
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
    /// `lambda(t)`, or `E lambda(tau)` for random horizons.
    pub lambda: f64,
    /// `psi_hat / (lambda G̅(x))`
    pub ratio_vs_asymptotic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinReport {
    pub horizon: TauSpec,
    pub estimates: Vec<RuinEstimate>,
    /// `P(S_{N} > x)` on the same paths.
    pub lower: Vec<TailEstimate>,
    /// `P(sum_{i<=N} Y_i > x)` on the same paths.
    pub upper: Vec<TailEstimate>,
    /// Replication-threshold pairs where `S_N <= max S_n <= sum Y_i` failed.
    pub sandwich_violations: u64,
    /// `E lambda(tau)` averaged over the sampled horizons.
    pub lambda_mean: f64,
    pub lambda_stderr: f64,
    pub lambda_curve: LambdaCurve,
}

/// Node grid for the renewal-function cache over a horizon law.
fn lambda_nodes(tau: &TauSpec) -> Vec<f64> {
    if let TauSpec::Fixed { t } = tau {
        return vec![*t];
    }
    let top = tau.quantile(1e-4).max(tau.quantile(0.5)).max(1e-9);
    (1..=128).map(|k| top * k as f64 / 128.0).collect()
}

/// Ruin probabilities `psi(x; tau)` for every capital in `xs`, from one
/// coupled set of paths. A fixed horizon gives the finite-time probability.
pub fn ruin_scan(
    model: &RiskModelSpec,
    xs: &[f64],
    tau: &TauSpec,
    samples: u64,
    lambda_replications: u64,
    key: &StreamKey,
) -> Result<RuinReport> {
    model.validate()?;
    tau.validate()?;
    if xs.is_empty() || xs.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::invalid("initial capitals must be positive"));
    }
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 10^3 samples, got {samples}")));
    }
    let horizon_lambda = expected_lambda(model, tau, samples, lambda_replications, key)?;
    let lambda_mean = horizon_lambda.mean;
    let (im, idep) = model.arrivals.renewal_parts();
    let c = model.premium_rate;
    let k = xs.len();
    // Metrics: ruin per x, then lower and upper bounds per x.
    let (tally, violations) = run_replications(
        samples,
        || (Tally::new(3 * k), 0u64),
        || (),
        |rep, _, acc: &mut (Tally, u64)| {
            let horizon = tau.sample(&mut key.substream(Role::Horizon, rep))?;
            let mut asrc = key.substream(Role::Interarrivals, rep);
            let mut csrc = key.substream(Role::Claims, rep);
            let (mut s, mut max, mut g) = (0.0f64, 0.0f64, 0.0f64);
            if horizon > 0.0 {
                let mut arr = Arrivals::new(&im, &idep, horizon)?;
                let mut claims = model.claim_dep.stream(&model.claim)?;
                while let Some(z) = arr.next(&mut asrc)? {
                    let y = claims.next(&mut csrc)?;
                    s += y - c * z;
                    g += y;
                    max = max.max(s);
                }
            }
            let (t, v) = acc;
            t.reps += 1;
            for (j, &x) in xs.iter().enumerate() {
                let (lo, mid, hi) = (s > x, max > x, g > x);
                t.indicator(j, mid);
                t.indicator(k + j, lo);
                t.indicator(2 * k + j, hi);
                *v += u64::from((lo && !mid) || (mid && !hi));
            }
            Ok(())
        },
    )?;
    let estimates = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let e = TailEstimate::from_tally(&tally, j, Method::CrudeMc);
            RuinEstimate {
                x,
                horizon: tau.clone(),
                psi_hat: e.p_hat,
                stderr: e.stderr,
                samples,
                hits: e.hits,
                lambda: lambda_mean,
                ratio_vs_asymptotic: e.p_hat / (lambda_mean * model.claim.tail_closed(x)),
            }
        })
        .collect();
    Ok(RuinReport {
        horizon: tau.clone(),
        estimates,
        lower: (0..k).map(|j| TailEstimate::from_tally(&tally, k + j, Method::CrudeMc)).collect(),
        upper: (0..k).map(|j| TailEstimate::from_tally(&tally, 2 * k + j, Method::CrudeMc)).collect(),
        sandwich_violations: violations,
        lambda_mean,
        lambda_stderr: horizon_lambda.stderr,
        lambda_curve: horizon_lambda.curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonLambda {
    pub mean: f64,
    /// Horizon sampling error combined with the curve's own error.
    pub stderr: f64,
    pub curve: LambdaCurve,
}

/// `E lambda(tau)`: the cached renewal function averaged over the horizons
/// of replications `0..samples`, exactly as [`ruin_scan`] sees them.
pub fn expected_lambda(model: &RiskModelSpec, tau: &TauSpec, samples: u64, lambda_replications: u64, key: &StreamKey) -> Result<HorizonLambda> {
    tau.validate()?;
    let curve = LambdaCurve::build(&model.arrivals, &lambda_nodes(tau), lambda_replications, key)?;
    let tally = run_replications(
        samples,
        || Tally::new(2),
        || (),
        |rep, _, acc: &mut Tally| {
            let horizon = tau.sample(&mut key.substream(Role::Horizon, rep))?;
            acc.reps += 1;
            acc.add(0, curve.eval(horizon));
            acc.add(1, curve.eval_stderr(horizon));
            Ok(())
        },
    )?;
    let spread = if matches!(tau, TauSpec::Fixed { .. }) { 0.0 } else { tally.stderr(0) };
    Ok(HorizonLambda {
        mean: tally.mean(0),
        stderr: spread.hypot(tally.mean(1)),
        curve,
    })
}

/// `psi(x; t)` at one capital and fixed horizon.
pub fn finite_time_ruin(model: &RiskModelSpec, x: f64, t: f64, samples: u64, lambda_replications: u64, key: &StreamKey) -> Result<RuinEstimate> {
    let r = ruin_scan(model, &[x], &TauSpec::Fixed { t }, samples, lambda_replications, key)?;
    Ok(r.estimates.into_iter().next().expect("one capital"))
}

/// `psi(x; tau)` at one capital and a random horizon.
pub fn random_time_ruin(model: &RiskModelSpec, x: f64, tau: &TauSpec, samples: u64, lambda_replications: u64, key: &StreamKey) -> Result<RuinEstimate> {
    let r = ruin_scan(model, &[x], tau, samples, lambda_replications, key)?;
    Ok(r.estimates.into_iter().next().expect("one capital"))
}

/// Evidence that `P(N(tau) > x) = o(G̅(x))`: the ratio on an increasing
/// grid. Points where `G̅(x) = 1` or with fewer than 10 (but some) hits
/// are inconclusive.
pub fn check_random_time_condition(model: &RiskModelSpec, tau: &TauSpec, x_grid: &[f64], samples: u64, key: &StreamKey) -> Result<TrendReport> {
    tau.validate()?;
    if x_grid.is_empty() || x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("x_grid must be increasing and nonempty"));
    }
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 10^3 samples, got {samples}")));
    }
    let (im, idep) = model.arrivals.renewal_parts();
    let k = x_grid.len();
    let top = x_grid[k - 1];
    let tally = run_replications(
        samples,
        || Tally::new(k),
        || (),
        |rep, _, acc: &mut Tally| {
            let horizon = tau.sample(&mut key.substream(Role::Horizon, rep))?;
            let mut asrc = key.substream(Role::Interarrivals, rep);
            let mut n = 0u64;
            if horizon > 0.0 {
                let mut arr = Arrivals::new(&im, &idep, horizon)?;
                // Counting past the largest threshold changes no indicator.
                while (n as f64) <= top && arr.next(&mut asrc)?.is_some() {
                    n += 1;
                }
            }
            acc.reps += 1;
            for (j, &x) in x_grid.iter().enumerate() {
                acc.indicator(j, n as f64 > x);
            }
            Ok(())
        },
    )?;
    let points = x_grid
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let g = model.claim.tail_closed(x);
            let hits = tally.hits[j];
            TrendPoint {
                at: x,
                value: tally.mean(j) / g,
                stderr: Some(if hits == 0 { 0.0 } else { tally.stderr(j) / g }),
                conclusive: g < 1.0 && !(hits > 0 && hits < MIN_HITS),
            }
        })
        .collect();
    Ok(TrendReport::new("P(N(tau) > x) / G(x)", points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p21() -> MarginalSpec {
        MarginalSpec::pareto(2.0, 1.0).unwrap()
    }

    fn model(c: f64) -> RiskModelSpec {
        RiskModelSpec::new(p21(), DependenceSpec::independent(), CountingSpec::poisson(1.0).unwrap(), c).unwrap()
    }

    #[test]
    fn safety_loading_is_enforced() {
        let r = RiskModelSpec::new(p21(), DependenceSpec::independent(), CountingSpec::poisson(1.0).unwrap(), 1.5);
        assert!(matches!(r, Err(Error::SafetyLoading { .. })));
        let mut m = model(2.2);
        m.premium_rate = 1.0;
        assert!(m.validate().is_err());
        m.allow_unsafe = true;
        assert!(m.validate().is_ok());
        m.q1 = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn degenerate_path_arithmetic() {
        let arrivals = CountingSpec::renewal(MarginalSpec::degenerate(1.0).unwrap(), DependenceSpec::independent()).unwrap();
        let m = RiskModelSpec::new(MarginalSpec::degenerate(1.0).unwrap(), DependenceSpec::independent(), arrivals, 2.0).unwrap();
        let p = simulate_path(&m, 3.5, &StreamKey::from_seed(0), 0).unwrap();
        assert_eq!(p.partial_sums, vec![-1.0, -2.0, -3.0]);
        assert_eq!(p.max_partial_sum(), 0.0);
    }

    #[test]
    fn empty_path() {
        let arrivals = CountingSpec::renewal(MarginalSpec::degenerate(10.0).unwrap(), DependenceSpec::independent()).unwrap();
        let m = RiskModelSpec::new(p21(), DependenceSpec::independent(), arrivals, 1.0).unwrap();
        let p = simulate_path(&m, 5.0, &StreamKey::from_seed(0), 0).unwrap();
        assert!(p.claims.is_empty());
        assert_eq!(p.max_partial_sum(), 0.0);
    }

    #[test]
    fn mean_drift_follows_wald() {
        let m = RiskModelSpec::new(
            MarginalSpec::exponential(0.5).unwrap(),
            DependenceSpec::independent(),
            CountingSpec::poisson(1.0).unwrap(),
            2.5,
        )
        .unwrap();
        let key = StreamKey::from_seed(3);
        let t = 100.0;
        let reps = 10_000;
        let vals: Vec<f64> = (0..reps)
            .map(|r| simulate_path(&m, t, &key, r).unwrap().partial_sums.last().copied().unwrap_or(0.0) / t)
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let sd = (var / reps as f64).sqrt();
        // The last partial sum stops before the premium of the pending
        // inter-arrival, so E S_N(t) / t = (mu_G - c mu_H) / mu_H + c E(t - T_N) / t.
        let want = (2.0 - 2.5) + 2.5 * (1.0 - (-t).exp()) / t;
        assert!((mean - want).abs() < 3.0 * sd, "{mean} vs {want} (sd {sd})");
    }

    #[test]
    fn tau_sampling() {
        use crate::stream::SliceSource;
        let u = [(-2.0f64).exp()];
        assert_eq!(TauSpec::Exponential { rate: 0.5 }.sample(&mut SliceSource::new(&u)).unwrap(), 4.0);
        let g = TauSpec::Geometric { p: 0.5 };
        let u = [0.3];
        // P(tau >= k) = 0.5^k: 0.3 lies in (0.25, 0.5], so tau = 1.
        assert_eq!(g.sample(&mut SliceSource::new(&u)).unwrap(), 1.0);
        assert_eq!(g.mean(), 1.0);
        assert_eq!(TauSpec::Fixed { t: 3.0 }.sample(&mut SliceSource::new(&[])).unwrap(), 3.0);
        for t in ["fixed(t=100)", "exponential(rate=0.1)", "geometric(p=0.2)", "law(pareto(alpha=1.5, scale=1))"] {
            assert_eq!(t.parse::<TauSpec>().unwrap().to_string(), t);
        }
    }

    #[test]
    fn ruin_sandwich_and_monotonicity() {
        let m = model(2.2);
        let key = StreamKey::from_seed(4);
        let xs = [5.0, 20.0, 50.0, 100.0, 200.0];
        let r = ruin_scan(&m, &xs, &TauSpec::Fixed { t: 50.0 }, 50_000, 2_000, &key).unwrap();
        assert_eq!(r.sandwich_violations, 0);
        for j in 0..xs.len() {
            assert!(r.lower[j].p_hat <= r.estimates[j].psi_hat);
            assert!(r.estimates[j].psi_hat <= r.upper[j].p_hat);
        }
        assert!(r.estimates.windows(2).all(|w| w[0].psi_hat >= w[1].psi_hat));
        let longer = ruin_scan(&m, &xs, &TauSpec::Fixed { t: 80.0 }, 50_000, 2_000, &key).unwrap();
        for (a, b) in r.estimates.iter().zip(&longer.estimates) {
            assert!(a.psi_hat <= b.psi_hat);
        }
    }

    #[test]
    fn fixed_random_horizon_reproduces_finite_time() {
        let m = model(2.2);
        let key = StreamKey::from_seed(5);
        let a = finite_time_ruin(&m, 40.0, 30.0, 20_000, 2_000, &key).unwrap();
        let b = random_time_ruin(&m, 40.0, &TauSpec::Fixed { t: 30.0 }, 20_000, 2_000, &key).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_horizon_lambda_average() {
        let m = model(2.2);
        let key = StreamKey::from_seed(6);
        let r = ruin_scan(&m, &[80.0], &TauSpec::Exponential { rate: 0.1 }, 200_000, 20_000, &key).unwrap();
        assert!((r.lambda_mean - 10.0).abs() < 3.0 * r.lambda_stderr, "{} +- {}", r.lambda_mean, r.lambda_stderr);
    }

    #[test]
    fn proportional_net_loss_without_premium_is_the_claim_share() {
        let mut m = model(2.2);
        m.allow_unsafe = true;
        m.premium_rate = 0.0;
        let key = StreamKey::from_seed(7);
        let cfg = ReinsuranceScanConfig {
            gamma: 1.0,
            t_list: vec![20.0],
            x_multipliers: vec![2.0, 4.0],
            samples: 20_000,
            lambda_replications: 2_000,
            tolerances: Tolerances::default(),
        };
        let (a, _) = reinsurance_tail_scan(&m, Functional::R11, &cfg, &key).unwrap();
        let (b, _) = reinsurance_tail_scan(&m, Functional::R12, &cfg, &key).unwrap();
        assert_eq!(a.report.entries, b.report.entries);
        let rs = crate::counting::RandomSumScanConfig {
            gamma: cfg.gamma,
            t_list: cfg.t_list.clone(),
            x_multipliers: cfg.x_multipliers.clone(),
            samples: cfg.samples,
            lambda_replications: cfg.lambda_replications,
            tolerances: cfg.tolerances,
        };
        let (plain, _) = crate::counting::random_sum_ratio_scan(&m.arrivals, &m.claim, &m.claim_dep, &rs, &key).unwrap();
        assert_eq!(plain.entries, b.report.entries);
        let (e, _) = reinsurance_tail_scan(&m, Functional::R21, &cfg, &key).unwrap();
        assert!(!e.theorem_available);
        assert_eq!(e.report.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn proportional_functionals_need_consistent_variation() {
        let mut m = model(2.2);
        m.claim = MarginalSpec::step_pareto(2.0).unwrap();
        m.premium_rate = 4.0;
        let cfg = ReinsuranceScanConfig {
            gamma: 1.0,
            t_list: vec![20.0],
            x_multipliers: vec![2.0],
            samples: 1000,
            lambda_replications: 1000,
            tolerances: Tolerances::default(),
        };
        let r = reinsurance_tail_scan(&m, Functional::R11, &cfg, &StreamKey::from_seed(0));
        assert!(matches!(r, Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn poisson_exponential_horizon_condition() {
        // N(tau) with tau ~ Exp(0.1), unit-rate arrivals: P(N > x) = (1/1.1)^(floor(x)+1).
        let m = model(2.2);
        let key = StreamKey::from_seed(8);
        let tau = TauSpec::Exponential { rate: 0.1 };
        let grid = [0.5, 5.0, 10.0, 20.0, 40.0, 80.0];
        let r = check_random_time_condition(&m, &tau, &grid, 200_000, &key).unwrap();
        assert!(!r.points[0].conclusive);
        for p in &r.points[1..4] {
            let exact = (1.0f64 / 1.1).powf(p.at.floor() + 1.0) / p21().tail_closed(p.at);
            assert!((p.value - exact).abs() < 3.0 * p.stderr.unwrap(), "{p:?} vs {exact}");
        }
        assert_eq!(r.verdict, crate::trend::TrendVerdict::Pass);

        let heavy = TauSpec::Law(MarginalSpec::pareto(1.2, 1.0).unwrap());
        let r = check_random_time_condition(&m, &heavy, &[5.0, 20.0, 80.0], 100_000, &key).unwrap();
        assert_eq!(r.verdict, crate::trend::TrendVerdict::Fail);
    }
}
