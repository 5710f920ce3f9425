//! Monte Carlo experiments: consistency sweeps, CLT and Berry-Esseen
//! distance-to-normal studies, and single-path ASCLT averages.
//!
//! Replicate `r` at length `n` always uses seed `derive_seed(base_seed, n, r)`,
//! and results are gathered in `(n, r)` order, so output does not depend on
//! the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ar1::{Ar1Model, XPathSampler};
use crate::asymptotics::{
    asclt_censored_average, dtv_bounds, dyadic_linear_grid, full_grid, normalized_error_with, running_estimates_slice,
    RateCurve,
};
use crate::covariance::{duality_constant, CovarianceModel};
use crate::error::{LmarError, Result};
use crate::moments::{MomentContext, TruncationPolicy};
use crate::rng::derive_seed;
use crate::special::normal_cdf;

pub const SCHEMA_VERSION: u32 = 1;

/// `E sup|F_m - Phi| ~ sqrt(pi/2) ln 2 / sqrt(m)` under the null.
pub const KS_NULL_MEAN_COEFF: f64 = 0.868_731_160_636_159_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Consistency,
    Clt,
    Asclt,
    BerryEsseen,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Consistency => "consistency",
            Self::Clt => "clt",
            Self::Asclt => "asclt",
            Self::BerryEsseen => "berry_esseen",
        }
    }
}

fn default_z_grid() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}

fn default_epsilon() -> f64 {
    0.01
}

/// Experiment description, read from JSON with `"schema": 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub experiment: ExperimentKind,
    /// `fgn:H`, `arfima:d` or `white`.
    pub model: String,
    pub theta: f64,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    #[serde(default = "default_z_grid")]
    pub z_grid: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Rate fit drops points with `d_n` below this multiple of the MC floor.
    #[serde(default)]
    pub fit_floor_multiple: f64,
    /// ASCLT prefix grid: every k when absent, else every k up to this value
    /// followed by powers of two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asclt_linear_upto: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| LmarError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and reports all offending ones at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        if self.schema != SCHEMA_VERSION {
            bad.push(format!("schema: expected {SCHEMA_VERSION}, got {}", self.schema));
        }
        if let Err(e) = self.model.parse::<CovarianceModel>() {
            bad.push(format!("model: {e}"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            bad.push(format!("theta: must lie in (0, 1), got {}", self.theta));
        }
        if self.replicates < 1 {
            bad.push("replicates: must be at least 1".into());
        }
        if self.n_values.is_empty() {
            bad.push("n_values: must be nonempty".into());
        } else if self.n_values[0] < 1 || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            bad.push("n_values: must be positive and strictly increasing".into());
        }
        if let Err(e) = self.truncation.validate() {
            bad.push(format!("truncation: {e}"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            bad.push(format!("epsilon: must lie in (0, 0.1], got {}", self.epsilon));
        }
        if !(self.fit_floor_multiple >= 0.0 && self.fit_floor_multiple.is_finite()) {
            bad.push("fit_floor_multiple: must be finite and nonnegative".into());
        }
        match self.experiment {
            ExperimentKind::Asclt => {
                if self.z_grid.is_empty() || self.z_grid.iter().any(|z| z.is_nan()) {
                    bad.push("z_grid: must be a nonempty list of numbers".into());
                }
                if self.n_values.last().is_some_and(|&n| n < 2) {
                    bad.push("n_values: ASCLT paths need n >= 2".into());
                }
            }
            ExperimentKind::BerryEsseen => {
                if self.n_values.len() < 3 {
                    bad.push("n_values: Berry-Esseen fits need at least 3 values".into());
                }
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(LmarError::InvalidConfig(bad.join("; ")))
        }
    }

    pub fn noise_model(&self) -> Result<CovarianceModel> {
        self.model.parse()
    }

    pub fn context(&self) -> Result<MomentContext> {
        let model = Ar1Model::new(self.theta, self.noise_model()?)?;
        MomentContext::new(model, self.truncation)
    }
}

/// One replicate at one path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub theta_hat: Option<f64>,
    pub censored: bool,
    pub normalized_error: Option<f64>,
}

/// One ASCLT log-average for one replicate path and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscltRecord {
    pub replicate: usize,
    pub seed: u64,
    pub z: f64,
    /// `None` when the average is undefined.
    pub average: Option<f64>,
    /// Prefixes whose moment left the range of `f`; these enter the average
    /// with the estimate pinned to the nearer end of the admissible interval.
    pub censored_prefixes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NAggregate {
    pub n: usize,
    pub replicates: usize,
    pub retained: usize,
    pub censored: usize,
    pub mean_theta_hat: Option<f64>,
    pub mean_abs_error: Option<f64>,
    pub rmse: Option<f64>,
    pub mean_normalized_error: Option<f64>,
    pub var_normalized_error: Option<f64>,
    /// Exact sup over the empirical CDF jump points.
    pub ks_distance: Option<f64>,
    /// Same sup evaluated on a fixed z grid; a cross-check bounded by the KS value.
    pub sup_cdf_distance: Option<f64>,
    /// Expected KS distance of a sample of this size drawn from Phi itself.
    pub noise_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscltRow {
    pub z: f64,
    pub phi: f64,
    pub replicates_used: usize,
    pub mean_average: Option<f64>,
    /// Mean over replicates of `|average - Phi(z)|`.
    pub mean_abs_deviation: Option<f64>,
    /// `|mean average - Phi(z)|`.
    pub abs_mean_deviation: Option<f64>,
    pub max_abs_deviation: Option<f64>,
}

/// Least-squares fit of `ln d_n` on `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` with fewer than three points.
    pub slope_stderr: Option<f64>,
    pub n_used: Vec<usize>,
    pub floor_multiple: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_n: Vec<NAggregate>,
    pub asclt: Vec<AscltRow>,
    pub rate_fit: Option<SlopeFit>,
    /// Number of `i` with `d_{n_{i+1}} > d_{n_i}`.
    pub ks_inversions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub n: usize,
    pub v_n2: f64,
    pub dtv_bound: f64,
    pub be_rate: Option<f64>,
}

/// Closed-form quantities for one model, alongside empirical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub model: String,
    pub theta: f64,
    pub hurst: Option<f64>,
    pub f: f64,
    pub f_prime: f64,
    /// `None` outside `H < 3/4`.
    #[serde(rename = "sigma_H2")]
    pub sigma_h2: Option<f64>,
    #[serde(rename = "c_H")]
    pub c_h: Option<f64>,
    pub epsilon: f64,
    /// `phi(n) = n^-rate_exponent`.
    pub rate_exponent: Option<f64>,
    pub rows: Vec<TheoryRow>,
}

/// Theory quantities for `ctx` on the given `n` grid. Regime-limited entries
/// are `None`; other numerical failures are errors.
pub fn theory_report(ctx: &MomentContext, ns: &[usize], epsilon: f64) -> Result<TheoryReport> {
    let noise = ctx.noise();
    let hurst = noise.hurst();
    let sigma_h2 = match ctx.sigma_h2() {
        Ok(v) => Some(v),
        Err(LmarError::UnsupportedRegime { .. }) => None,
        Err(e) => return Err(e),
    };
    let c_h = hurst.map(duality_constant).transpose()?;
    let curve = match hurst {
        Some(h) => match RateCurve::new(h, epsilon) {
            Ok(c) => Some(c),
            Err(LmarError::UnsupportedRegime { .. }) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let bounds = dtv_bounds(ctx, ns)?;
    let rows = ns
        .iter()
        .zip(bounds)
        .map(|(&n, dtv_bound)| {
            Ok(TheoryRow {
                n,
                v_n2: ctx.v_n2(n)?,
                dtv_bound,
                be_rate: curve.filter(|_| n >= 2).map(|c| c.rate(n)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoryReport {
        model: noise.tag(),
        theta: ctx.theta(),
        hurst,
        f: ctx.f_value(),
        f_prime: ctx.f_prime_value(),
        sigma_h2,
        c_h,
        epsilon,
        rate_exponent: curve.map(|c| c.exponent()),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub records: Vec<ReplicateRecord>,
    #[serde(default)]
    pub asclt_records: Vec<AscltRecord>,
    pub aggregates: Aggregates,
    pub theory: TheoryReport,
}

impl ExperimentResult {
    /// Aggregates rebuilt from the stored records alone.
    pub fn recompute_aggregates(&self) -> Result<Aggregates> {
        Aggregates::from_records(&self.config, &self.records, &self.asclt_records)
    }

    pub fn censored_count(&self) -> usize {
        self.records.iter().filter(|r| r.censored).count()
    }
}

/// One-sample Kolmogorov-Smirnov distance to the standard normal.
pub fn ks_distance(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(LmarError::EmptyInput("ks_distance"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(LmarError::Domain("ks_distance: NaN in sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = normal_cdf(x);
            let hi = (i + 1) as f64 / m;
            let lo = i as f64 / m;
            (hi - p).abs().max((lo - p).abs())
        })
        .fold(0.0, f64::max))
}

/// `sup_z |F_m(z) - Phi(z)|` over `z` in `[-6, 6]` with step `1e-3`.
pub fn sup_cdf_distance_on_grid(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(LmarError::EmptyInput("sup_cdf_distance_on_grid"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for i in -6000..=6000 {
        let z = i as f64 * 1e-3;
        let count = sorted.partition_point(|&v| v <= z);
        worst = worst.max((count as f64 / m - normal_cdf(z)).abs());
    }
    Ok(worst)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl Aggregates {
    /// Pure function of the per-replicate records.
    pub fn from_records(config: &ExperimentConfig, records: &[ReplicateRecord], asclt: &[AscltRecord]) -> Result<Self> {
        let theta = config.theta;
        let mut per_n = Vec::with_capacity(config.n_values.len());
        for &n in &config.n_values {
            let rows: Vec<&ReplicateRecord> = records.iter().filter(|r| r.n == n).collect();
            let hats: Vec<f64> = rows.iter().filter_map(|r| r.theta_hat).collect();
            let errs: Vec<f64> = rows.iter().filter_map(|r| r.normalized_error).collect();
            let censored = rows.iter().filter(|r| r.censored).count();
            let mean_g = mean(&errs);
            let var_g = mean_g.filter(|_| errs.len() > 1).map(|mu| {
                errs.iter().map(|g| (g - mu).powi(2)).sum::<f64>() / (errs.len() - 1) as f64
            });
            let has_g = !errs.is_empty();
            per_n.push(NAggregate {
                n,
                replicates: rows.len(),
                retained: rows.len() - censored,
                censored,
                mean_theta_hat: mean(&hats),
                mean_abs_error: mean(&hats.iter().map(|h| (h - theta).abs()).collect::<Vec<_>>()),
                rmse: mean(&hats.iter().map(|h| (h - theta).powi(2)).collect::<Vec<_>>()).map(f64::sqrt),
                mean_normalized_error: mean_g,
                var_normalized_error: var_g,
                ks_distance: if has_g { Some(ks_distance(&errs)?) } else { None },
                sup_cdf_distance: if has_g { Some(sup_cdf_distance_on_grid(&errs)?) } else { None },
                noise_floor: has_g.then(|| KS_NULL_MEAN_COEFF / (errs.len() as f64).sqrt()),
            });
        }

        let mut rate_fit = None;
        let mut ks_inversions = None;
        if config.experiment == ExperimentKind::BerryEsseen {
            let d: Vec<(usize, f64, f64)> = per_n
                .iter()
                .filter_map(|a| Some((a.n, a.ks_distance?, a.noise_floor?)))
                .collect();
            ks_inversions = Some(d.windows(2).filter(|w| w[1].1 > w[0].1).count());
            let used: Vec<(usize, f64)> = d
                .iter()
                .filter(|(_, dn, floor)| *dn >= config.fit_floor_multiple * floor && *dn > 0.0)
                .map(|&(n, dn, _)| (n, dn))
                .collect();
            rate_fit = fit_log_log(&used, config.fit_floor_multiple);
        }

        let mut rows = Vec::new();
        if config.experiment == ExperimentKind::Asclt {
            for &z in &config.z_grid {
                let phi = normal_cdf(z);
                let avgs: Vec<f64> = asclt.iter().filter(|a| a.z == z).filter_map(|a| a.average).collect();
                let devs: Vec<f64> = avgs.iter().map(|a| (a - phi).abs()).collect();
                let mean_average = mean(&avgs);
                rows.push(AscltRow {
                    z,
                    phi,
                    replicates_used: avgs.len(),
                    mean_average,
                    mean_abs_deviation: mean(&devs),
                    abs_mean_deviation: mean_average.map(|m| (m - phi).abs()),
                    max_abs_deviation: devs.iter().copied().reduce(f64::max),
                });
            }
        }

        Ok(Self {
            per_n,
            asclt: rows,
            rate_fit,
            ks_inversions,
        })
    }
}

fn fit_log_log(points: &[(usize, f64)], floor_multiple: f64) -> Option<SlopeFit> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, d)| d.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = (points.len() > 2).then(|| {
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (k - 2.0) / sxx).sqrt()
    });
    Some(SlopeFit {
        slope,
        intercept,
        slope_stderr,
        n_used: points.iter().map(|(n, _)| *n).collect(),
        floor_multiple,
    })
}

/// Runs the configured experiment on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.experiment {
        ExperimentKind::Consistency => run_consistency(config),
        ExperimentKind::Clt => run_clt(config),
        ExperimentKind::Asclt => run_asclt(config),
        ExperimentKind::BerryEsseen => run_berry_esseen(config),
    }
}

/// Runs on a dedicated pool of `threads` workers (`None` uses the global pool).
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    match threads {
        None => run_experiment(config),
        Some(0) => Err(LmarError::InvalidConfig("thread count must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| LmarError::ContractViolation(format!("thread pool: {e}")))?
            .install(|| run_experiment(config)),
    }
}

fn prepare(config: &ExperimentConfig, kind: ExperimentKind) -> Result<MomentContext> {
    if config.experiment != kind {
        return Err(LmarError::InvalidConfig(format!(
            "experiment: expected {}, got {}",
            kind.as_str(),
            config.experiment.as_str()
        )));
    }
    config.validate()?;
    config.context()
}

/// Estimates at each `n` in `n_values`, `replicates` paths per `n`.
fn sweep(config: &ExperimentConfig, ctx: &MomentContext, sigma: Option<f64>) -> Result<Vec<ReplicateRecord>> {
    let theta = config.theta;
    let f_prime = ctx.f_prime_value();
    let mut records = Vec::with_capacity(config.n_values.len() * config.replicates);
    for &n in &config.n_values {
        let sampler = XPathSampler::new(ctx.model(), n)?;
        let batch = (0..config.replicates)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |buf, r| {
                    let seed = derive_seed(config.base_seed, n as u64, r as u64);
                    sampler.sample_into(seed, buf);
                    let moment = buf.iter().map(|x| x * x).sum::<f64>() / n as f64;
                    let theta_hat = match ctx.f_inverse(moment) {
                        Ok(v) => Some(v),
                        Err(e) if e.is_range_error() => None,
                        Err(e) => return Err(e),
                    };
                    Ok(ReplicateRecord {
                        n,
                        replicate: r,
                        seed,
                        theta_hat,
                        censored: theta_hat.is_none(),
                        normalized_error: theta_hat
                            .zip(sigma)
                            .map(|(h, s)| normalized_error_with(h, theta, n, f_prime, s)),
                    })
                },
            )
            .collect::<Result<Vec<_>>>()?;
        records.extend(batch);
    }
    Ok(records)
}

fn finish(
    config: &ExperimentConfig,
    ctx: &MomentContext,
    records: Vec<ReplicateRecord>,
    asclt_records: Vec<AscltRecord>,
) -> Result<ExperimentResult> {
    let aggregates = Aggregates::from_records(config, &records, &asclt_records)?;
    Ok(ExperimentResult {
        schema: SCHEMA_VERSION,
        config: config.clone(),
        records,
        asclt_records,
        aggregates,
        theory: theory_report(ctx, &config.n_values, config.epsilon)?,
    })
}

fn require_uncensored(records: &[ReplicateRecord], ns: &[usize]) -> Result<()> {
    for &n in ns {
        if records.iter().filter(|r| r.n == n).all(|r| r.censored) {
            return Err(LmarError::CensoredExperiment);
        }
    }
    Ok(())
}

/// Estimation error against `n`. Normalized errors are filled in when
/// `sigma_H^2` is available.
pub fn run_consistency(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ctx = prepare(config, ExperimentKind::Consistency)?;
    let sigma = ctx.sigma_h2().ok().map(f64::sqrt);
    let records = sweep(config, &ctx, sigma)?;
    finish(config, &ctx, records, Vec::new())
}

/// Distribution of `G_n` against `N(0, 1)`; requires `H < 3/4`.
pub fn run_clt(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ctx = prepare(config, ExperimentKind::Clt)?;
    let sigma = ctx.sigma_h2()?.sqrt();
    let records = sweep(config, &ctx, Some(sigma))?;
    require_uncensored(&records, &config.n_values)?;
    finish(config, &ctx, records, Vec::new())
}

/// KS distance `d_n` across `n` with a log-log slope fit.
pub fn run_berry_esseen(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ctx = prepare(config, ExperimentKind::BerryEsseen)?;
    let sigma = ctx.sigma_h2()?.sqrt();
    let records = sweep(config, &ctx, Some(sigma))?;
    require_uncensored(&records, &config.n_values)?;
    finish(config, &ctx, records, Vec::new())
}

/// Log-averages of `1{G_k <= z}` along single paths of the largest `n`.
pub fn run_asclt(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ctx = prepare(config, ExperimentKind::Asclt)?;
    let sigma = ctx.sigma_h2()?.sqrt();
    let theta = config.theta;
    let f_prime = ctx.f_prime_value();
    let n = *config.n_values.last().expect("validated nonempty");
    let grid = match config.asclt_linear_upto {
        None => full_grid(n),
        Some(m) => dyadic_linear_grid(n, m),
    };
    let sampler = XPathSampler::new(ctx.model(), n)?;

    let per_replicate = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(config.base_seed, n as u64, r as u64);
            let mut x = vec![0.0; n];
            sampler.sample_into(seed, &mut x);
            let est = running_estimates_slice(&ctx, &x, &grid)?;
            let g: Vec<Option<f64>> = est
                .iter()
                .map(|e| Some(normalized_error_with(e.clamped(&ctx), theta, e.k, f_prime, sigma)))
                .collect();
            let censored_prefixes = est.iter().filter(|e| e.theta_hat.is_none()).count();
            let averages = config
                .z_grid
                .iter()
                .map(|&z| {
                    let average = match asclt_censored_average(&grid, &g, z) {
                        Ok(v) => Some(v),
                        Err(LmarError::CensoredExperiment) => None,
                        Err(e) => return Err(e),
                    };
                    Ok(AscltRecord {
                        replicate: r,
                        seed,
                        z,
                        average,
                        censored_prefixes,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let last = est.last().and_then(|e| e.theta_hat);
            let record = ReplicateRecord {
                n,
                replicate: r,
                seed,
                theta_hat: last,
                censored: last.is_none(),
                normalized_error: last.map(|h| normalized_error_with(h, theta, n, f_prime, sigma)),
            };
            Ok((record, averages))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(per_replicate.len());
    let mut asclt_records = Vec::new();
    for (rec, avgs) in per_replicate {
        records.push(rec);
        asclt_records.extend(avgs);
    }
    if asclt_records.iter().all(|a| a.average.is_none()) {
        return Err(LmarError::CensoredExperiment);
    }
    // records are for the largest n only; aggregate over that single length
    let mut agg_config = config.clone();
    agg_config.n_values = vec![n];
    let aggregates = Aggregates::from_records(&agg_config, &records, &asclt_records)?;
    Ok(ExperimentResult {
        schema: SCHEMA_VERSION,
        config: config.clone(),
        records,
        asclt_records,
        aggregates,
        theory: theory_report(&ctx, &[n], config.epsilon)?,
    })
}
