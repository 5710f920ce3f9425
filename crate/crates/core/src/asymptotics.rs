//! Limit-theorem quantities for the second-moment estimator.

use serde::{Deserialize, Serialize};

use crate::error::{domain, LmarError, Result};
use crate::gaussian_sim::SamplePath;
use crate::moments::{MomentContext, THETA_HI, THETA_LO};

/// `V_n = n^-1/2 sum_t (Y_t^2 - E Y_t^2)`.
pub fn breuer_major_vn(y: &[f64], f_theta_value: f64) -> Result<f64> {
    if y.is_empty() {
        return Err(LmarError::EmptyInput("breuer_major_vn"));
    }
    let s: f64 = y.iter().map(|v| v * v - f_theta_value).sum();
    Ok(s / (y.len() as f64).sqrt())
}

/// `G_n = f'(theta) sqrt(n) (theta_hat - theta) / sigma_H`.
pub fn normalized_error(theta_hat: f64, theta: f64, n: usize, ctx: &MomentContext) -> Result<f64> {
    let sigma = ctx.sigma_h2()?.sqrt();
    Ok(normalized_error_with(theta_hat, theta, n, ctx.f_prime_value(), sigma))
}

#[inline]
pub fn normalized_error_with(theta_hat: f64, theta: f64, n: usize, f_prime: f64, sigma: f64) -> f64 {
    f_prime * (n as f64).sqrt() * (theta_hat - theta) / sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateBranch {
    /// `H in (1/2, 5/8)`: `n^-(1/2 - eps)`.
    Sub58,
    /// `H in [5/8, 3/4)`: `n^-(3 - 4H - eps)`.
    Super58,
}

/// Berry-Esseen rate `phi(n)` for a given `H` and exponent slack `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub hurst: f64,
    pub epsilon: f64,
    pub branch: RateBranch,
}

impl RateCurve {
    pub fn new(hurst: f64, epsilon: f64) -> Result<Self> {
        if !(hurst > 0.5 && hurst < 0.75) {
            return Err(LmarError::UnsupportedRegime { hurst });
        }
        if !(epsilon > 0.0 && epsilon <= 0.1) {
            return Err(domain(format!("rate slack epsilon must lie in (0, 0.1], got {epsilon}")));
        }
        let branch = if hurst < 0.625 { RateBranch::Sub58 } else { RateBranch::Super58 };
        let curve = Self { hurst, epsilon, branch };
        if curve.exponent() <= 0.0 {
            return Err(domain(format!("epsilon {epsilon} leaves no decay at H = {hurst}")));
        }
        Ok(curve)
    }

    /// Positive decay exponent: `phi(n) = n^-exponent`.
    pub fn exponent(&self) -> f64 {
        match self.branch {
            RateBranch::Sub58 => 0.5 - self.epsilon,
            RateBranch::Super58 => 3.0 - 4.0 * self.hurst - self.epsilon,
        }
    }

    pub fn rate(&self, n: usize) -> f64 {
        (n as f64).powf(-self.exponent())
    }
}

pub fn berry_esseen_rate(hurst: f64, n: usize, epsilon: f64) -> Result<f64> {
    if n < 2 {
        return Err(domain(format!("rate needs n >= 2, got {n}")));
    }
    Ok(RateCurve::new(hurst, epsilon)?.rate(n))
}

/// Fourth-moment bound on `d_TV(V_n / v_n, Z)`:
/// `4 sqrt(2) / (v_n^2 sqrt(n)) (sum_{|k|<n} |R(k)|^(4/3))^(3/2)`.
pub fn dtv_fourth_moment_bound(ctx: &MomentContext, n: usize) -> Result<f64> {
    Ok(dtv_bounds(ctx, &[n])?[0])
}

/// The bound for several `n` from one `R` table.
pub fn dtv_bounds(ctx: &MomentContext, ns: &[usize]) -> Result<Vec<f64>> {
    let Some(&max_n) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    if ns.contains(&0) {
        return Err(domain("d_TV bound needs n >= 1"));
    }
    let r = ctx.r_table(max_n);
    ns.iter()
        .map(|&n| {
            let v2 = crate::moments::v_n2_from(&r, n);
            if !(v2 > 0.0) {
                return Err(domain("v_n^2 must be positive"));
            }
            let s = r[0].abs().powf(4.0 / 3.0) + 2.0 * r[1..n].iter().map(|v| v.abs().powf(4.0 / 3.0)).sum::<f64>();
            Ok(4.0 * std::f64::consts::SQRT_2 / (v2 * (n as f64).sqrt()) * s.powf(1.5))
        })
        .collect()
}

/// `(1/ln n) sum_{k=1}^n k^-1 1{g_k <= z}` with `g[k-1] = g_k`.
pub fn asclt_log_average(g: &[f64], z: f64) -> Result<f64> {
    if g.is_empty() {
        return Err(LmarError::EmptyInput("asclt_log_average"));
    }
    if g.len() < 2 {
        return Err(domain("log-average needs n >= 2"));
    }
    let hits: f64 = g
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= z)
        .map(|(i, _)| 1.0 / (i + 1) as f64)
        .sum();
    Ok(hits / (g.len() as f64).ln())
}

/// Log-average over a prefix grid with censored points.
///
/// Grid point `k_i` carries weight `sum_{j=k_{i-1}+1}^{k_i} 1/j` (exactly
/// `1/k` on the full grid). Censored points lose their weight from both the
/// numerator and the `ln n` normalizer.
pub fn asclt_censored_average(grid: &[usize], g: &[Option<f64>], z: f64) -> Result<f64> {
    if grid.len() != g.len() {
        return Err(LmarError::LengthMismatch { left: grid.len(), right: g.len() });
    }
    let Some(&n) = grid.last() else {
        return Err(LmarError::EmptyInput("asclt_censored_average"));
    };
    if n < 2 {
        return Err(domain("log-average needs n >= 2"));
    }
    let mut hits = 0.0;
    let mut dropped = 0.0;
    let mut prev = 0usize;
    for (&k, gk) in grid.iter().zip(g) {
        let w: f64 = (prev + 1..=k).map(|j| 1.0 / j as f64).sum();
        prev = k;
        match gk {
            Some(v) if *v <= z => hits += w,
            Some(_) => {}
            None => dropped += w,
        }
    }
    let norm = (n as f64).ln() - dropped;
    if !(norm > 0.0) {
        return Err(LmarError::CensoredExperiment);
    }
    Ok(hits / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixEstimate {
    pub k: usize,
    /// `k^-1 sum_{t<=k} X_t^2`.
    pub moment: f64,
    /// `None` when the prefix moment fell outside the range of `f`.
    pub theta_hat: Option<f64>,
}

impl PrefixEstimate {
    /// The estimate, with censored prefixes pinned to the nearer end of
    /// `(THETA_LO, THETA_HI)`.
    pub fn clamped(&self, ctx: &MomentContext) -> f64 {
        self.theta_hat.unwrap_or(if self.moment < ctx.f_value() { THETA_LO } else { THETA_HI })
    }
}

/// Prefixes `1..=n`.
pub fn full_grid(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

/// Every `k` up to `linear_upto`, then powers of two, ending at `n`.
pub fn dyadic_linear_grid(n: usize, linear_upto: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=linear_upto.min(n)).collect();
    let mut k = linear_upto.max(1).next_power_of_two();
    if k <= linear_upto {
        k *= 2;
    }
    while k < n {
        grid.push(k);
        k *= 2;
    }
    if grid.last() != Some(&n) {
        grid.push(n);
    }
    grid
}

/// `theta_tilde_k` for each prefix length in `grid`, from running sums of
/// `X_t^2` and Newton warm-started at the previous root.
pub fn running_estimates(ctx: &MomentContext, x: &SamplePath, grid: &[usize]) -> Result<Vec<PrefixEstimate>> {
    running_estimates_slice(ctx, &x.values, grid)
}

pub(crate) fn running_estimates_slice(ctx: &MomentContext, x: &[f64], grid: &[usize]) -> Result<Vec<PrefixEstimate>> {
    let n = x.len();
    if grid.is_empty() {
        return Err(LmarError::EmptyInput("prefix grid"));
    }
    if grid[0] < 1 || *grid.last().unwrap() > n || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain(format!("prefix grid must be strictly increasing within [1, {n}]")));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut sum = 0.0;
    let mut t = 0usize;
    let mut guess = None;
    for &k in grid {
        while t < k {
            sum += x[t] * x[t];
            t += 1;
        }
        let moment = sum / k as f64;
        let theta_hat = match ctx.f_inverse_from(moment, guess) {
            Ok(v) => {
                guess = Some(v);
                Some(v)
            }
            Err(e) if e.is_range_error() => None,
            Err(e) => return Err(e),
        };
        out.push(PrefixEstimate { k, moment, theta_hat });
    }
    Ok(out)
}
