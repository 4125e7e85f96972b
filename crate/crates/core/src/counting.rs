//! Counting processes, the renewal function and random sums.
//!
//! A renewal process here may have dependent inter-arrival times: the
//! inter-arrivals follow any [`DependenceSpec`] with a common nonnegative
//! marginal. Poisson processes are the special case of independent
//! exponential inter-arrivals and are sampled through exactly that path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dependence::{DependenceSpec, DependentStream};
use crate::deviation::{regime_of, validate_multipliers, Method, RatioEntry, RatioReport, TailEstimate, Tolerances};
use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::mc::{run_replications, Tally};
use crate::stream::{Role, StreamKey, UniformSource};
use crate::textual::{self, serde_via_text, Args, Call};
use crate::trend::{TrendPoint, TrendReport, TrendVerdict};

/// Replications behind a cached renewal-function curve.
pub const DEFAULT_LAMBDA_REPLICATIONS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum CountingSpec {
    Poisson { rate: f64 },
    Renewal {
        interarrival: MarginalSpec,
        inter_dep: DependenceSpec,
    },
}

impl CountingSpec {
    pub fn poisson(rate: f64) -> Result<Self> {
        let s = CountingSpec::Poisson { rate };
        s.validate()?;
        Ok(s)
    }

    pub fn renewal(interarrival: MarginalSpec, inter_dep: DependenceSpec) -> Result<Self> {
        let s = CountingSpec::Renewal { interarrival, inter_dep };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CountingSpec::Poisson { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid(format!("Poisson rate must be positive, got {rate}")));
                }
            }
            CountingSpec::Renewal { interarrival, inter_dep } => {
                interarrival.validate()?;
                inter_dep.validate()?;
                if !interarrival.is_nonnegative() {
                    return Err(Error::invalid(format!("inter-arrival law `{interarrival}` must live on [0, inf)")));
                }
                let mean = interarrival.mean();
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(Error::invalid(format!("inter-arrival mean must be positive and finite, got {mean}")));
                }
            }
        }
        Ok(())
    }

    /// The inter-arrival law and its dependence.
    pub fn renewal_parts(&self) -> (MarginalSpec, DependenceSpec) {
        match self {
            CountingSpec::Poisson { rate } => (MarginalSpec::Exponential { rate: *rate }, DependenceSpec::independent()),
            CountingSpec::Renewal { interarrival, inter_dep } => (interarrival.clone(), *inter_dep),
        }
    }

    /// `mu_H`
    pub fn mean_interarrival(&self) -> f64 {
        self.renewal_parts().0.mean()
    }

    pub(crate) fn from_call(call: &Call) -> Result<Self> {
        let mut a = Args::new(call);
        let spec = match call.name.as_str() {
            "poisson" => CountingSpec::Poisson { rate: a.number("rate")? },
            "renewal" => {
                let interarrival = MarginalSpec::from_call(a.call("interarrival")?)?;
                let inter_dep = match a.opt_call("dependence") {
                    Some(c) => DependenceSpec::from_call(c)?,
                    None => DependenceSpec::independent(),
                };
                CountingSpec::Renewal { interarrival, inter_dep }
            }
            other => return Err(Error::parse(other, "unknown counting process")),
        };
        a.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CountingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountingSpec::Poisson { rate } => write!(f, "poisson(rate={rate})"),
            CountingSpec::Renewal { interarrival, inter_dep } => write!(f, "renewal({interarrival}, {inter_dep})"),
        }
    }
}

impl FromStr for CountingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_call(&textual::parse(s)?)
    }
}

serde_via_text!(CountingSpec, "a counting process such as `poisson(rate=1)`");

/// Arrival epochs up to a horizon, one inter-arrival at a time.
#[derive(Debug, Clone)]
pub struct Arrivals<'a> {
    stream: DependentStream<'a>,
    time: f64,
    horizon: f64,
    done: bool,
}

impl<'a> Arrivals<'a> {
    pub fn new(interarrival: &'a MarginalSpec, dep: &'a DependenceSpec, horizon: f64) -> Result<Self> {
        Ok(Self {
            stream: dep.stream(interarrival)?,
            time: 0.0,
            horizon,
            done: false,
        })
    }

    /// The next inter-arrival time whose arrival falls in `[0, horizon]`,
    /// or `None` once the horizon is passed.
    #[inline]
    pub fn next<U: UniformSource + ?Sized>(&mut self, src: &mut U) -> Result<Option<f64>> {
        if self.done {
            return Ok(None);
        }
        let z = self.stream.next(src)?;
        if !(z > 0.0) {
            return Err(Error::NonPositiveInterarrival(z));
        }
        self.time += z;
        if self.time > self.horizon {
            self.done = true;
            return Ok(None);
        }
        Ok(Some(z))
    }

    /// Time of the latest arrival returned so far (or the first one past
    /// the horizon, once exhausted).
    pub fn time(&self) -> f64 {
        self.time
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSample {
    pub count: u64,
    pub arrival_times: Vec<f64>,
}

/// All arrivals in `[0, t]`.
pub fn simulate_arrivals<U: UniformSource + ?Sized>(spec: &CountingSpec, t: f64, src: &mut U) -> Result<CountSample> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {t}")));
    }
    let (m, d) = spec.renewal_parts();
    let mut arr = Arrivals::new(&m, &d, t)?;
    let mut times = Vec::new();
    while arr.next(src)?.is_some() {
        times.push(arr.time());
    }
    Ok(CountSample {
        count: times.len() as u64,
        arrival_times: times,
    })
}

/// `N(t)` for every `t` in an increasing grid, from one path.
pub fn counts_on_grid<U: UniformSource + ?Sized>(
    interarrival: &MarginalSpec,
    dep: &DependenceSpec,
    grid: &[f64],
    src: &mut U,
    out: &mut [u64],
) -> Result<()> {
    let Some(&last) = grid.last() else {
        return Ok(());
    };
    out.fill(0);
    let mut arr = Arrivals::new(interarrival, dep, last)?;
    let mut count = 0u64;
    let mut k = 0;
    while arr.next(src)?.is_some() {
        while arr.time() > grid[k] {
            out[k] = count;
            k += 1;
        }
        count += 1;
    }
    for o in &mut out[k..] {
        *o = count;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub replications: u64,
}

/// Renewal function `lambda(t) = E N(t)` on a node grid, from coupled
/// paths, with linear interpolation between nodes, `lambda(0) = 0`, and
/// proportional extrapolation past the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    pub nodes: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replications: u64,
}

impl LambdaCurve {
    /// Draws from the renewal-function substreams of `key`.
    pub fn build(spec: &CountingSpec, nodes: &[f64], replications: u64, key: &StreamKey) -> Result<Self> {
        if replications < 1000 {
            return Err(Error::invalid(format!("need at least 10^3 replications, got {replications}")));
        }
        let mut nodes: Vec<f64> = nodes.to_vec();
        if nodes.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("renewal-function nodes must be positive and finite"));
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::invalid("renewal-function node grid is empty"));
        }
        let (m, d) = spec.renewal_parts();
        let k = nodes.len();
        let tally = run_replications(
            replications,
            || Tally::new(k),
            || vec![0u64; k],
            |rep, buf: &mut Vec<u64>, acc: &mut Tally| {
                let mut src = key.substream(Role::LambdaCache, rep);
                counts_on_grid(&m, &d, &nodes, &mut src, buf)?;
                acc.reps += 1;
                for (j, &c) in buf.iter().enumerate() {
                    acc.add(j, c as f64);
                }
                Ok(())
            },
        )?;
        Ok(Self {
            mean: (0..k).map(|j| tally.mean(j)).collect(),
            stderr: (0..k).map(|j| if tally.hits[j] == 0 { 0.0 } else { tally.stderr(j) }).collect(),
            nodes,
            replications,
        })
    }

    fn interpolate(&self, t: f64, v: &[f64]) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.nodes.len() - 1;
        if t >= self.nodes[last] {
            return v[last] * t / self.nodes[last];
        }
        let i = self.nodes.partition_point(|&n| n < t);
        let (t0, v0) = if i == 0 { (0.0, 0.0) } else { (self.nodes[i - 1], v[i - 1]) };
        let (t1, v1) = (self.nodes[i], v[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.interpolate(t, &self.mean)
    }

    pub fn eval_stderr(&self, t: f64) -> f64 {
        self.interpolate(t, &self.stderr)
    }

    pub fn at(&self, t: f64) -> LambdaEstimate {
        LambdaEstimate {
            t,
            mean: self.eval(t),
            stderr: self.eval_stderr(t),
            replications: self.replications,
        }
    }
}

/// `lambda(t)` as the mean count over `replications` paths.
pub fn estimate_lambda(spec: &CountingSpec, t: f64, replications: u64, key: &StreamKey) -> Result<LambdaEstimate> {
    Ok(LambdaCurve::build(spec, &[t], replications, key)?.at(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSumScanConfig {
    pub gamma: f64,
    pub t_list: Vec<f64>,
    /// Thresholds are `multiplier * gamma * lambda(t)`.
    pub x_multipliers: Vec<f64>,
    pub samples: u64,
    pub lambda_replications: u64,
    pub tolerances: Tolerances,
}

impl RandomSumScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.t_list.is_empty() || self.t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("t_list must be nonempty with positive entries"));
        }
        validate_multipliers(&self.x_multipliers)?;
        if self.samples < 1000 {
            return Err(Error::invalid(format!("need at least 10^3 samples, got {}", self.samples)));
        }
        Ok(())
    }
}

/// A ratio entry for a random sum. Horizons with `lambda(t) < 1` expect
/// less than one summand, so they never enter a verdict.
pub(crate) fn random_sum_entry(t: f64, lambda: f64, x: f64, estimate: TailEstimate, tail: f64) -> RatioEntry {
    let mut e = RatioEntry::new(None, Some(t), lambda, x, estimate, tail);
    e.well_estimated &= lambda >= 1.0;
    e
}

/// Ratios `P̂(S_{N(t)} > x) / (lambda(t) F̄(x))`.
///
/// Replication `r` takes inter-arrivals from substream `(Interarrivals, r)`
/// and summands from `(Claims, r)`; `lambda` comes from the cached curve.
pub fn random_sum_ratio_scan(
    counting: &CountingSpec,
    summand: &MarginalSpec,
    summand_dep: &DependenceSpec,
    config: &RandomSumScanConfig,
    key: &StreamKey,
) -> Result<(RatioReport, LambdaCurve)> {
    config.validate()?;
    counting.validate()?;
    let regime = regime_of(summand)?;
    if !summand.has_closed_form() {
        return Err(Error::NoClosedFormTail(summand.to_string()));
    }
    summand_dep.stream(summand)?;
    let curve = LambdaCurve::build(counting, &config.t_list, config.lambda_replications, key)?;
    let (im, idep) = counting.renewal_parts();
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
                let mut claims = summand_dep.stream(summand)?;
                let mut sum = 0.0;
                while arr.next(&mut asrc)?.is_some() {
                    sum += claims.next(&mut csrc)?;
                }
                acc.reps += 1;
                for (j, &x) in xs.iter().enumerate() {
                    acc.indicator(j, sum > x);
                }
                Ok(())
            },
        )?;
        for (j, &x) in xs.iter().enumerate() {
            let est = TailEstimate::from_tally(&tally, j, Method::CrudeMc);
            entries.push(random_sum_entry(t, lambda, x, est, summand.tail_closed(x)));
        }
    }
    Ok((RatioReport::assemble(entries, summand, regime, config.tolerances)?, curve))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub t_grid: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub replications: u64,
    pub delta: f64,
    /// `P(|N(t)/lambda(t) - 1| > eps)` per `eps`.
    pub concentration: Vec<TrendReport>,
    /// `E[N(t)^q 1{N(t) > (1+delta) lambda(t)}] / lambda(t)` per `q`.
    pub truncated_moments: Vec<TrendReport>,
    pub concentration_verdict: TrendVerdict,
    pub moment_verdict: TrendVerdict,
}

pub const CONCENTRATION_EPS: [f64; 2] = [0.1, 0.05];

/// Finite-grid evidence that `N(t)/lambda(t) -> 1` and that the truncated
/// moments vanish. Each statistic must fall by a factor 2 from the first
/// to the last `t` (or reach exactly zero).
pub fn check_counting_conditions(
    spec: &CountingSpec,
    t_grid: &[f64],
    q_exponents: &[f64],
    delta: f64,
    replications: u64,
    lambda_replications: u64,
    key: &StreamKey,
) -> Result<ConditionReport> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid[0] <= 0.0 {
        return Err(Error::invalid("t_grid must be increasing, positive, with at least two points"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if q_exponents.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
        return Err(Error::invalid("q exponents must be finite and >= 0"));
    }
    if replications < 1000 {
        return Err(Error::invalid(format!("need at least 10^3 replications, got {replications}")));
    }
    let curve = LambdaCurve::build(spec, t_grid, lambda_replications, key)?;
    let lambda: Vec<f64> = t_grid.iter().map(|&t| curve.eval(t)).collect();
    let (m, d) = spec.renewal_parts();
    let nt = t_grid.len();
    let ne = CONCENTRATION_EPS.len();
    let nq = q_exponents.len();
    // Metric layout: [eps-major concentration | q-major truncated moments], t fastest.
    let metrics = nt * (ne + nq);
    let tally = run_replications(
        replications,
        || Tally::new(metrics),
        || vec![0u64; nt],
        |rep, buf: &mut Vec<u64>, acc: &mut Tally| {
            let mut src = key.substream(Role::Interarrivals, rep);
            counts_on_grid(&m, &d, t_grid, &mut src, buf)?;
            acc.reps += 1;
            for (i, (&c, &lam)) in buf.iter().zip(&lambda).enumerate() {
                let c = c as f64;
                for (e, eps) in CONCENTRATION_EPS.iter().enumerate() {
                    acc.indicator(e * nt + i, lam > 0.0 && (c / lam - 1.0).abs() > *eps);
                }
                if c > (1.0 + delta) * lam {
                    for (j, q) in q_exponents.iter().enumerate() {
                        acc.add((ne + j) * nt + i, c.powf(*q) / lam);
                    }
                }
            }
            Ok(())
        },
    )?;
    let trend = |label: String, block: usize| {
        let points = (0..nt)
            .map(|i| {
                let k = block * nt + i;
                TrendPoint {
                    at: t_grid[i],
                    value: tally.mean(k),
                    stderr: Some(if tally.hits[k] == 0 { 0.0 } else { tally.stderr(k) }),
                    conclusive: lambda[i] > 0.0,
                }
            })
            .collect();
        TrendReport::new(label, points)
    };
    let concentration: Vec<TrendReport> = CONCENTRATION_EPS
        .iter()
        .enumerate()
        .map(|(e, eps)| trend(format!("P(|N/lambda - 1| > {eps})"), e))
        .collect();
    let truncated_moments: Vec<TrendReport> = q_exponents
        .iter()
        .enumerate()
        .map(|(j, q)| trend(format!("E[N^{q} 1(N > (1+{delta}) lambda)] / lambda"), ne + j))
        .collect();
    Ok(ConditionReport {
        t_grid: t_grid.to_vec(),
        lambda_hat: lambda,
        replications,
        delta,
        concentration_verdict: TrendVerdict::all(concentration.iter().map(|r| r.verdict)),
        moment_verdict: TrendVerdict::all(truncated_moments.iter().map(|r| r.verdict)),
        concentration,
        truncated_moments,
    })
}
