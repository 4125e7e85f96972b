//! Tail probabilities of partial sums and uniform ratio scans.
//!
//! A scan estimates `P(S > x)` on a grid of thresholds and compares it with
//! the single-big-jump approximation `scale * F̄(x)`, where `scale` is `n`
//! for fixed-length sums and the renewal function for random sums. The grid
//! shares one set of sampled sums across all thresholds, so estimates are
//! monotone in `x` replication by replication.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dependence::DependenceSpec;
use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::mc::{run_replications, Tally};
use crate::stream::{Role, StreamKey};

/// Two-sided normal quantile for the reported confidence intervals.
pub const CI_Z: f64 = 1.96;

/// Crude estimates need at least this many hits to enter a verdict.
pub const MIN_HITS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CrudeMc,
    AsmussenKroese,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::CrudeMc => "crude_mc",
            Method::AsmussenKroese => "asmussen_kroese",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crude_mc" | "crude" => Ok(Method::CrudeMc),
            "asmussen_kroese" | "ak" => Ok(Method::AsmussenKroese),
            _ => Err(Error::parse(s, "expected `crude_mc` or `asmussen_kroese`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub samples: u64,
    pub method: Method,
    /// Replications with a nonzero contribution.
    pub hits: u64,
}

impl TailEstimate {
    pub(crate) fn from_tally(t: &Tally, metric: usize, method: Method) -> Self {
        let stderr = if t.hits[metric] == 0 { 0.0 } else { t.stderr(metric) };
        Self {
            p_hat: t.mean(metric),
            stderr,
            samples: t.reps,
            method,
            hits: t.hits[metric],
        }
    }

    /// Enough signal to enter a verdict: at least [`MIN_HITS`] crude hits,
    /// or a relative standard error of at most `1/sqrt(MIN_HITS)`.
    pub fn well_estimated(&self) -> bool {
        match self.method {
            Method::CrudeMc => self.hits >= MIN_HITS,
            Method::AsmussenKroese => {
                self.p_hat > 0.0 && self.stderr <= self.p_hat / (MIN_HITS as f64).sqrt()
            }
        }
    }
}

/// Acceptance slack around the theoretical bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed undershoot below `L`.
    pub tol_lo: f64,
    /// Allowed overshoot above `1/L`.
    pub tol_hi: f64,
    /// Allowed `|ratio - 1|` for consistently varying tails.
    pub tol_c: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_lo: 0.1,
            tol_hi: 0.3,
            tol_c: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SandwichPass,
    SandwichFail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::SandwichPass => "SandwichPass",
            Verdict::SandwichFail => "SandwichFail",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Which moment hypothesis the summands satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// `E|X| < inf`.
    FiniteMean { mean: f64 },
    /// Mean zero with `E (X^+)^r < inf` for every `r < r_max`.
    Centered { r_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    /// Number of summands (fixed-length sums).
    pub n: Option<u64>,
    /// Time horizon (random sums).
    pub t: Option<f64>,
    /// `n`, or the renewal function at `t`.
    pub scale: f64,
    pub x: f64,
    pub estimate: TailEstimate,
    /// `scale * F̄(x)`
    pub n_fbar: f64,
    pub ratio: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub well_estimated: bool,
}

impl RatioEntry {
    pub fn new(n: Option<u64>, t: Option<f64>, scale: f64, x: f64, estimate: TailEstimate, tail: f64) -> Self {
        let n_fbar = scale * tail;
        let ratio = estimate.p_hat / n_fbar;
        let half = CI_Z * estimate.stderr / n_fbar;
        Self {
            n,
            t,
            scale,
            x,
            estimate,
            n_fbar,
            ratio,
            ci_lo: ratio - half,
            ci_hi: ratio + half,
            well_estimated: estimate.well_estimated() && n_fbar > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub entries: Vec<RatioEntry>,
    /// Over well-estimated entries; NaN when there are none.
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    /// Theoretical `L_F` of the marginal.
    #[serde(rename = "L")]
    pub l: f64,
    pub in_c: bool,
    pub regime: Regime,
    pub tolerances: Tolerances,
    pub verdict: Verdict,
}

impl RatioReport {
    /// Assembles a report and its verdict. Consistently varying marginals
    /// must keep every well-estimated ratio within `tol_c` of 1; otherwise
    /// ratios must lie in `[L - tol_lo, 1/L + tol_hi]`.
    pub fn assemble(entries: Vec<RatioEntry>, marginal: &MarginalSpec, regime: Regime, tolerances: Tolerances) -> Result<Self> {
        let idx = marginal.theoretical_indices()?;
        let good: Vec<f64> = entries.iter().filter(|e| e.well_estimated).map(|e| e.ratio).collect();
        let (sup_ratio, inf_ratio) = if good.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (
                good.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                good.iter().copied().fold(f64::INFINITY, f64::min),
            )
        };
        let verdict = if good.is_empty() {
            Verdict::Inconclusive
        } else {
            let ok = |r: f64| {
                if idx.in_c {
                    (r - 1.0).abs() <= tolerances.tol_c
                } else {
                    r >= idx.l - tolerances.tol_lo && r <= 1.0 / idx.l + tolerances.tol_hi
                }
            };
            if good.iter().all(|&r| ok(r)) {
                Verdict::SandwichPass
            } else {
                Verdict::SandwichFail
            }
        };
        Ok(Self {
            entries,
            sup_ratio,
            inf_ratio,
            l: idx.l,
            in_c: idx.in_c,
            regime,
            tolerances,
            verdict,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioScanConfig {
    pub gamma: f64,
    pub n_list: Vec<u64>,
    /// Thresholds are `multiplier * gamma * n`.
    pub x_multipliers: Vec<f64>,
    pub samples: u64,
    pub method: Method,
    pub tolerances: Tolerances,
}

impl RatioScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::invalid("n_list must be nonempty with positive entries"));
        }
        validate_multipliers(&self.x_multipliers)?;
        Ok(())
    }
}

pub(crate) fn validate_multipliers(m: &[f64]) -> Result<()> {
    if m.is_empty() {
        return Err(Error::invalid("x_multipliers is empty"));
    }
    if let Some(bad) = m.iter().find(|&&v| !(v >= 1.0 && v.is_finite())) {
        return Err(Error::invalid(format!("x multipliers must be >= 1, got {bad}")));
    }
    Ok(())
}

/// Moment regime of a summand law; infinite means are rejected.
pub fn regime_of(marginal: &MarginalSpec) -> Result<Regime> {
    let m = marginal.moments();
    if !(m.mean_pos.is_finite() && m.mean_neg.is_finite()) {
        return Err(Error::PreconditionViolated(format!("`{marginal}` has infinite mean")));
    }
    let scale = m.mean_pos.max(m.mean_neg).max(1.0);
    if m.mean.abs() <= 1e-12 * scale {
        Ok(Regime::Centered { r_max: m.r_max })
    } else {
        Ok(Regime::FiniteMean { mean: m.mean })
    }
}

fn check_method(method: Method, marginal: &MarginalSpec, dep: &DependenceSpec, samples: u64) -> Result<()> {
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 10^3 samples, got {samples}")));
    }
    if method == Method::AsmussenKroese {
        let reason = if !dep.is_independent() {
            Some("conditioning on the maximum needs independent summands".to_string())
        } else if !marginal.has_closed_form() {
            Some(format!("`{marginal}` has no closed-form tail"))
        } else if !marginal.is_continuous() {
            Some(format!("`{marginal}` has atoms, so ties with the maximum bias the estimator"))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::MethodUnsupported {
                method: method.name().into(),
                reason,
            });
        }
    }
    Ok(())
}

/// `P(S_n > x)` for each threshold in `xs`, from one coupled set of sums.
///
/// Crude Monte Carlo averages indicators of `S_n > x`. The conditional
/// estimator averages `n F̄(max(M_{n-1}, x - S_{n-1}))` over `n - 1` draws.
/// Replication `r` draws from substream `(role, r)`.
pub fn estimate_sum_tails(
    marginal: &MarginalSpec,
    dep: &DependenceSpec,
    n: usize,
    xs: &[f64],
    method: Method,
    samples: u64,
    key: &StreamKey,
    role: Role,
) -> Result<Vec<TailEstimate>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_method(method, marginal, dep, samples)?;
    if method == Method::AsmussenKroese && n == 1 {
        return Ok(xs
            .iter()
            .map(|&x| TailEstimate {
                p_hat: marginal.tail_closed(x),
                stderr: 0.0,
                samples,
                method,
                hits: samples,
            })
            .collect());
    }
    let k = xs.len();
    let tally = match method {
        Method::CrudeMc => run_replications(
            samples,
            || Tally::new(k),
            || (),
            |rep, _, acc: &mut Tally| {
                let mut src = key.substream(role, rep);
                let mut s = dep.stream(marginal)?;
                let mut sum = 0.0;
                for _ in 0..n {
                    sum += s.next(&mut src)?;
                }
                acc.reps += 1;
                for (j, &x) in xs.iter().enumerate() {
                    acc.indicator(j, sum > x);
                }
                Ok(())
            },
        )?,
        Method::AsmussenKroese => {
            let nf = n as f64;
            run_replications(
                samples,
                || Tally::new(k),
                || (),
                |rep, _, acc: &mut Tally| {
                    let mut src = key.substream(role, rep);
                    let mut sum = 0.0;
                    let mut max = f64::NEG_INFINITY;
                    for _ in 1..n {
                        let v = marginal.sample(&mut src)?;
                        sum += v;
                        max = max.max(v);
                    }
                    acc.reps += 1;
                    for (j, &x) in xs.iter().enumerate() {
                        acc.add(j, nf * marginal.tail_closed(max.max(x - sum)));
                    }
                    Ok(())
                },
            )?
        }
    };
    Ok((0..k).map(|j| TailEstimate::from_tally(&tally, j, method)).collect())
}

/// Single-threshold form of [`estimate_sum_tails`].
pub fn estimate_sum_tail(
    marginal: &MarginalSpec,
    dep: &DependenceSpec,
    n: usize,
    x: f64,
    method: Method,
    samples: u64,
    key: &StreamKey,
) -> Result<TailEstimate> {
    Ok(estimate_sum_tails(marginal, dep, n, &[x], method, samples, key, Role::Summands)?[0])
}

/// Ratios `P̂(S_n > x) / (n F̄(x))` over `n_list x multipliers`.
pub fn uniform_ratio_scan(config: &RatioScanConfig, marginal: &MarginalSpec, dep: &DependenceSpec, key: &StreamKey) -> Result<RatioReport> {
    config.validate()?;
    let regime = regime_of(marginal)?;
    if !marginal.has_closed_form() {
        return Err(Error::NoClosedFormTail(marginal.to_string()));
    }
    let mut entries = Vec::new();
    for &n in &config.n_list {
        let xs: Vec<f64> = config.x_multipliers.iter().map(|m| m * config.gamma * n as f64).collect();
        let est = estimate_sum_tails(marginal, dep, n as usize, &xs, config.method, config.samples, key, Role::Summands)?;
        for (&x, e) in xs.iter().zip(est) {
            entries.push(RatioEntry::new(Some(n), None, n as f64, x, e, marginal.tail_closed(x)));
        }
    }
    RatioReport::assemble(entries, marginal, regime, config.tolerances)
}

/// `n F̄(x/u) + g_U(n) (e E X^+ n / x)^u`, an upper bound on `P(S_n > x)`
/// for summands with finite positive mean.
pub fn exponential_upper_bound(n: u64, x: f64, u: f64, mean_pos: f64, gu_n: f64, marginal: &MarginalSpec) -> Result<f64> {
    if !(x > 0.0 && u > 0.0) {
        return Err(Error::Domain(format!("need x > 0 and u > 0, got x={x}, u={u}")));
    }
    if !(mean_pos > 0.0 && mean_pos.is_finite()) {
        return Err(Error::PreconditionViolated(format!("E X^+ must be positive and finite, got {mean_pos}")));
    }
    if gu_n < 1.0 {
        return Err(Error::invalid(format!("dominating coefficient must be >= 1, got {gu_n}")));
    }
    let nf = n as f64;
    Ok(nf * marginal.tail(x / u)? + gu_n * (std::f64::consts::E * mean_pos * nf / x).powf(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p21() -> MarginalSpec {
        MarginalSpec::pareto(2.0, 1.0).unwrap()
    }

    fn indep() -> DependenceSpec {
        DependenceSpec::independent()
    }

    /// `P(X1 + X2 > x)` for iid Pareto(2, 1) by conditioning on `X2 = y`:
    /// `F̄(x - 1) + int_1^{x-1} F̄(x - y) f(y) dy`, where the first term
    /// covers `y >= x - 1` (then `X1 >= 1 >= x - y`). Composite Simpson.
    fn pareto_pair_oracle(x: f64) -> f64 {
        let f = p21();
        let g = |y: f64| f.tail_closed(x - y) * 2.0 / (y * y * y);
        let (a, b, m) = (1.0, x - 1.0, 400_000);
        let h = (b - a) / m as f64;
        let mut s = g(a) + g(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(a + i as f64 * h);
        }
        f.tail_closed(x - 1.0) + s * h / 3.0
    }

    #[test]
    fn single_summand_is_the_tail() {
        let key = StreamKey::from_seed(1);
        let ak = estimate_sum_tail(&p21(), &indep(), 1, 10.0, Method::AsmussenKroese, 1000, &key).unwrap();
        assert_eq!(ak.p_hat, 0.01);
        assert_eq!(ak.stderr, 0.0);
        let c = estimate_sum_tail(&p21(), &indep(), 1, 10.0, Method::CrudeMc, 200_000, &key).unwrap();
        assert!((c.p_hat - 0.01).abs() < 3.0 * c.stderr);
        assert_eq!(c.p_hat, c.hits as f64 / 200_000.0);
    }

    #[test]
    fn conditional_estimator_matches_convolution() {
        let exact = pareto_pair_oracle(10.0);
        // Frozen from an independent 30-digit adaptive quadrature.
        assert!((exact - 0.030_192_225_048).abs() < 1e-9, "oracle {exact}");
        let key = StreamKey::from_seed(4);
        let ak = estimate_sum_tail(&p21(), &indep(), 2, 10.0, Method::AsmussenKroese, 100_000, &key).unwrap();
        assert!((ak.p_hat - exact).abs() < 3.0 * ak.stderr, "{ak:?} vs {exact}");
        assert!((ak.p_hat - exact).abs() < 1e-4);
    }

    #[test]
    fn conditional_estimator_rejects_unsupported_inputs() {
        let key = StreamKey::from_seed(1);
        let fgm = DependenceSpec::fgm_chain(0.5).unwrap();
        let r = estimate_sum_tail(&p21(), &fgm, 2, 10.0, Method::AsmussenKroese, 1000, &key);
        assert!(matches!(r, Err(Error::MethodUnsupported { .. })));
        let step = MarginalSpec::step_pareto(2.0).unwrap();
        let r = estimate_sum_tail(&step, &indep(), 2, 10.0, Method::AsmussenKroese, 1000, &key);
        assert!(matches!(r, Err(Error::MethodUnsupported { .. })));
        let r = estimate_sum_tail(&p21(), &indep(), 0, 10.0, Method::CrudeMc, 1000, &key);
        assert!(matches!(r, Err(Error::InvalidArg(_))));
    }

    #[test]
    fn crude_is_seed_consistent_under_dependence() {
        let fgm = DependenceSpec::fgm_chain(0.5).unwrap();
        let a = estimate_sum_tail(&p21(), &fgm, 2, 10.0, Method::CrudeMc, 1_000_000, &StreamKey::from_seed(1)).unwrap();
        let b = estimate_sum_tail(&p21(), &fgm, 2, 10.0, Method::CrudeMc, 1_000_000, &StreamKey::from_seed(2)).unwrap();
        assert_ne!(a.p_hat, b.p_hat);
        assert!((a.p_hat - b.p_hat).abs() < 3.0 * a.stderr.hypot(b.stderr));
    }

    #[test]
    fn crude_and_conditional_agree() {
        let key = StreamKey::from_seed(8);
        let centered = MarginalSpec::shifted(p21(), 2.0).unwrap();
        for (m, n, xs) in [(p21(), 5usize, vec![15.0, 30.0, 60.0]), (centered, 20, vec![40.0, 80.0])] {
            let c = estimate_sum_tails(&m, &indep(), n, &xs, Method::CrudeMc, 400_000, &key, Role::Summands).unwrap();
            let a = estimate_sum_tails(&m, &indep(), n, &xs, Method::AsmussenKroese, 400_000, &key, Role::Claims).unwrap();
            for (c, a) in c.iter().zip(&a) {
                assert!((c.p_hat - a.p_hat).abs() < 3.0 * c.stderr.hypot(a.stderr), "{m} n={n}: {c:?} {a:?}");
            }
        }
    }

    #[test]
    fn conditional_estimator_reduces_variance_deep_in_the_tail() {
        let key = StreamKey::from_seed(8);
        // F̄(x) = 1e-4 at x = 100.
        let c = estimate_sum_tail(&p21(), &indep(), 5, 100.0, Method::CrudeMc, 200_000, &key).unwrap();
        let a = estimate_sum_tail(&p21(), &indep(), 5, 100.0, Method::AsmussenKroese, 200_000, &key).unwrap();
        assert!(a.stderr <= c.stderr / 3.0, "{a:?} {c:?}");
    }

    #[test]
    fn coupled_estimates_are_monotone_in_x() {
        let key = StreamKey::from_seed(3);
        let fgm = DependenceSpec::fgm_chain(-0.5).unwrap();
        let xs: Vec<f64> = (1..40).map(|k| k as f64 * 3.0).collect();
        let e = estimate_sum_tails(&p21(), &fgm, 10, &xs, Method::CrudeMc, 50_000, &key, Role::Summands).unwrap();
        assert!(e.windows(2).all(|w| w[0].p_hat >= w[1].p_hat));
    }

    #[test]
    fn bound_arithmetic() {
        let b = exponential_upper_bound(10, 100.0, 2.0, 2.0, 1.0, &p21()).unwrap();
        let want = 0.004 + (std::f64::consts::E * 0.2).powi(2);
        assert!((b - want).abs() < 1e-15);
        assert!((b - 0.29956).abs() < 1e-5);
        let b1 = exponential_upper_bound(10, 100.0, 1.0, 2.0, 1.0, &p21()).unwrap();
        assert!((b1 - 0.544656).abs() < 1e-6);
        let nl = MarginalSpec::net_loss(p21(), MarginalSpec::exponential(1.0).unwrap(), 1.0).unwrap();
        assert!(matches!(exponential_upper_bound(10, 100.0, 1.0, 2.0, 1.0, &nl), Err(Error::NoClosedFormTail(_))));
    }

    #[test]
    fn bound_dominates_crude_estimate() {
        let key = StreamKey::from_seed(6);
        let xs = [50.0, 100.0, 200.0];
        let e = estimate_sum_tails(&p21(), &indep(), 10, &xs, Method::CrudeMc, 200_000, &key, Role::Summands).unwrap();
        for (x, est) in xs.iter().zip(&e) {
            for u in [1.0, 2.0, 4.0] {
                let b = exponential_upper_bound(10, *x, u, 2.0, 1.0, &p21()).unwrap();
                assert!(est.p_hat <= b + 3.0 * est.stderr);
            }
        }
    }

    #[test]
    fn one_summand_ratios_are_one_under_any_dependence() {
        let key = StreamKey::from_seed(2);
        let cfg = RatioScanConfig {
            gamma: 1.0,
            n_list: vec![1],
            x_multipliers: vec![2.0, 4.0, 8.0],
            samples: 200_000,
            method: Method::CrudeMc,
            tolerances: Tolerances::default(),
        };
        for dep in [indep(), DependenceSpec::gaussian_ar1(0.7).unwrap()] {
            let r = uniform_ratio_scan(&cfg, &p21(), &dep, &key).unwrap();
            for e in &r.entries {
                assert!((e.ratio - 1.0).abs() < 3.0 * e.estimate.stderr / e.n_fbar);
            }
            assert_eq!(r.regime, Regime::FiniteMean { mean: 2.0 });
        }
    }

    #[test]
    fn verdict_rules() {
        let est = |p: f64, hits: u64| TailEstimate {
            p_hat: p,
            stderr: 0.0,
            samples: 1000,
            method: Method::CrudeMc,
            hits,
        };
        let mk = |ratio: f64, hits: u64| RatioEntry::new(Some(1), None, 1.0, 4.0, est(ratio * 0.0625, hits), 0.0625);
        let step = MarginalSpec::step_pareto(2.0).unwrap();
        let reg = Regime::Centered { r_max: 2.0 };
        let t = Tolerances::default();
        let r = RatioReport::assemble(vec![mk(1.1, 50), mk(1.5, 5)], &p21(), reg, t).unwrap();
        assert_eq!(r.verdict, Verdict::SandwichPass);
        assert_eq!(r.sup_ratio, 1.1);
        let r = RatioReport::assemble(vec![mk(1.5, 50)], &p21(), reg, t).unwrap();
        assert_eq!(r.verdict, Verdict::SandwichFail);
        let r = RatioReport::assemble(vec![mk(1.5, 50)], &step, reg, t).unwrap();
        assert_eq!(r.verdict, Verdict::SandwichPass);
        let r = RatioReport::assemble(vec![mk(1.5, 2)], &step, reg, t).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.sup_ratio.is_nan());
    }

    #[test]
    fn infinite_mean_is_rejected() {
        let key = StreamKey::from_seed(2);
        let cfg = RatioScanConfig {
            gamma: 1.0,
            n_list: vec![5],
            x_multipliers: vec![2.0],
            samples: 10_000,
            method: Method::CrudeMc,
            tolerances: Tolerances::default(),
        };
        let heavy = MarginalSpec::pareto(0.9, 1.0).unwrap();
        assert!(matches!(uniform_ratio_scan(&cfg, &heavy, &indep(), &key), Err(Error::PreconditionViolated(_))));
        let mut bad = cfg.clone();
        bad.x_multipliers = vec![0.5];
        assert!(matches!(uniform_ratio_scan(&bad, &p21(), &indep(), &key), Err(Error::InvalidArg(_))));
    }
}
