//! Second-moment quantities of the stationary AR(1) solution: `f(theta)`,
//! its derivative and inverse, the covariance `R(k)`, `sigma_H^2` and `v_n^2`.
//!
//! The double sums over `i, j >= 0` are evaluated along diagonals:
//!
//! ```text
//! f(theta) = (1 - theta^2)^-1 (1 + 2 sum_{k>=1} theta^k rho(k))
//! R(k)     = (1 - theta^2)^-1 sum_{m in Z} theta^|m| rho(k + m)
//! ```
//!
//! Series in `theta` stop at `M = ceil(ln tol / ln theta)`. Lag sums are
//! capped at `rho_cutoff`; beyond it the tail is extrapolated from the
//! declared power law `rho(k) ~ c k^(2H-2)`.

use std::borrow::Cow;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::ar1::{check_theta, Ar1Model};
use crate::covariance::CovarianceModel;
use crate::error::{domain, LmarError, Result};
use crate::gaussian_sim::SamplePath;
use crate::special::{geometric_power_tail, hurwitz_zeta};

/// Inversion bracket `(theta_lo, theta_hi)`.
pub const THETA_LO: f64 = 1e-6;
pub const THETA_HI: f64 = 1.0 - 1e-6;

/// Relative tolerance allowed for the extrapolated `sigma_H^2` tail.
pub const SIGMA_TAIL_TOLERANCE: f64 = 1e-4;

const MONOTONE_GRID: usize = 99;
const MAX_INVERSION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    /// Series in `theta` are cut once `theta^M` falls below this.
    pub theta_tail_tol: f64,
    /// Cap on lag sums.
    pub rho_cutoff: usize,
    /// Verify the power-law tail fit used by `sigma_H^2`.
    pub sigma_tail_check: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            theta_tail_tol: 1e-14,
            rho_cutoff: 1_000_000,
            sigma_tail_check: true,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_tail_tol > 0.0 && self.theta_tail_tol <= 1e-6) {
            return Err(LmarError::InvalidConfig(format!(
                "theta_tail_tol must lie in (0, 1e-6], got {}",
                self.theta_tail_tol
            )));
        }
        if self.rho_cutoff < 1000 {
            return Err(LmarError::InvalidConfig(format!(
                "rho_cutoff must be at least 1000, got {}",
                self.rho_cutoff
            )));
        }
        Ok(())
    }

    /// Number of terms kept in a series in powers of `theta`.
    pub fn series_len(&self, theta: f64) -> usize {
        ((self.theta_tail_tol.ln() / theta.ln()).ceil() as usize).max(1)
    }
}

/// Immutable moment context for one AR(1) model.
#[derive(Debug)]
pub struct MomentContext {
    model: Ar1Model,
    policy: TruncationPolicy,
    /// `rho(0..short.len())`, enough for every `theta <= 0.99` and the model's own.
    short_rho: Vec<f64>,
    long_rho: OnceLock<Vec<f64>>,
    r_cache: OnceLock<Vec<f64>>,
    f_value: f64,
    f_prime_value: f64,
    grid: Vec<(f64, f64)>,
    monotone_violation: Option<f64>,
    f_lo: f64,
    f_hi: OnceLock<f64>,
    sigma2: OnceLock<Result<f64>>,
}

impl MomentContext {
    pub fn new(model: Ar1Model, policy: TruncationPolicy) -> Result<Self> {
        policy.validate()?;
        let theta = model.theta();
        let short_len = policy
            .series_len(0.99)
            .max(policy.series_len(theta))
            .max(4096)
            .min(policy.rho_cutoff)
            + 2;
        let short_rho = model.noise().autocovariances(short_len);
        let mut ctx = Self {
            model,
            policy,
            short_rho,
            long_rho: OnceLock::new(),
            r_cache: OnceLock::new(),
            f_value: 0.0,
            f_prime_value: 0.0,
            grid: Vec::with_capacity(MONOTONE_GRID),
            monotone_violation: None,
            f_lo: 0.0,
            f_hi: OnceLock::new(),
            sigma2: OnceLock::new(),
        };
        let (f, fp) = ctx.f_and_prime(theta);
        ctx.f_value = f;
        ctx.f_prime_value = fp;
        ctx.f_lo = ctx.f_and_prime(THETA_LO).0;
        for i in 1..=MONOTONE_GRID {
            let t = i as f64 / (MONOTONE_GRID + 1) as f64;
            ctx.grid.push((t, ctx.f_and_prime(t).0));
        }
        let mut prev = ctx.f_lo;
        for &(t, f) in &ctx.grid {
            if !(f > prev) {
                ctx.monotone_violation = Some(t);
                break;
            }
            prev = f;
        }
        Ok(ctx)
    }

    pub fn with_default_policy(model: Ar1Model) -> Result<Self> {
        Self::new(model, TruncationPolicy::default())
    }

    pub fn model(&self) -> &Ar1Model {
        &self.model
    }

    pub fn noise(&self) -> &CovarianceModel {
        self.model.noise()
    }

    pub fn theta(&self) -> f64 {
        self.model.theta()
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    /// `f` at the model's own `theta`.
    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    /// `f'` at the model's own `theta`.
    pub fn f_prime_value(&self) -> f64 {
        self.f_prime_value
    }

    /// Whether `f` increased across the construction grid on `(0.01, 0.99)`.
    pub fn is_monotone(&self) -> bool {
        self.monotone_violation.is_none()
    }

    fn long_rho(&self) -> &[f64] {
        self.long_rho.get_or_init(|| {
            let len = self.policy.rho_cutoff + self.policy.series_len(self.theta()) + 2;
            self.noise().autocovariances(len)
        })
    }

    /// `rho(0..len)`, borrowed from a cache when possible.
    fn rho_upto(&self, len: usize) -> Cow<'_, [f64]> {
        if len <= self.short_rho.len() {
            Cow::Borrowed(&self.short_rho[..len])
        } else if len <= self.policy.rho_cutoff + self.policy.series_len(self.theta()) + 2 {
            Cow::Borrowed(&self.long_rho()[..len])
        } else {
            Cow::Owned(self.noise().autocovariances(len))
        }
    }

    /// `(sum_{k>=1} theta^k rho(k), sum_{k>=1} k theta^(k-1) rho(k))`.
    fn theta_series(&self, theta: f64) -> (f64, f64) {
        let m = self.policy.series_len(theta);
        let cutoff = self.policy.rho_cutoff;
        let kmax = m.min(cutoff);
        let rho = self.rho_upto(kmax + 1);
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut p_prev = 1.0; // theta^(k-1)
        for (k, &r) in rho.iter().enumerate().take(kmax + 1).skip(1) {
            s1 += k as f64 * p_prev * r;
            p_prev *= theta;
            s0 += p_prev * r;
        }
        if m > cutoff {
            if let Some(h) = self.noise().hurst() {
                let c = rho[cutoff] * (cutoff as f64).powf(2.0 - 2.0 * h);
                s0 += c * geometric_power_tail(theta, 2.0 * h - 2.0, cutoff);
                s1 += c / theta * geometric_power_tail(theta, 2.0 * h - 1.0, cutoff);
            }
        }
        (s0, s1)
    }

    fn f_and_prime(&self, theta: f64) -> (f64, f64) {
        let (s0, s1) = self.theta_series(theta);
        let q = 1.0 - theta * theta;
        let base = 1.0 + 2.0 * s0;
        (base / q, 2.0 * theta * base / (q * q) + 2.0 * s1 / q)
    }

    /// `f(theta) = E[Y_t^2]`.
    pub fn f_theta(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.f_and_prime(theta).0)
    }

    /// Analytic derivative of `f`.
    pub fn f_prime(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.f_and_prime(theta).1)
    }

    fn f_hi(&self) -> f64 {
        *self.f_hi.get_or_init(|| self.f_and_prime(THETA_HI).0)
    }

    /// Autocovariance `R(k) = Cov(Y_t, Y_{t+k})` of the stationary solution.
    pub fn r_cov(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        let theta = self.theta();
        let m = self.policy.series_len(theta);
        let needed = k + m + 1;
        let rho: Cow<'_, [f64]> = if needed <= self.short_rho.len()
            || needed <= self.policy.rho_cutoff + m + 2
        {
            self.rho_upto(needed)
        } else {
            // isolated large lag: evaluate only the window it touches
            let noise = self.noise();
            let lo = k.saturating_sub(m);
            let mut window = vec![0.0; needed];
            for (lag, slot) in window.iter_mut().enumerate().skip(lo) {
                *slot = noise.rho(lag as i64);
            }
            for lag in 0..=m.min(k) {
                window[lag] = noise.rho(lag as i64);
            }
            Cow::Owned(window)
        };
        r_at(&rho, k, theta, m)
    }

    /// `R(0..len)`.
    pub fn r_table(&self, len: usize) -> Cow<'_, [f64]> {
        let cached = self.policy.rho_cutoff + 1;
        if len <= 4096.min(cached) {
            let m = self.policy.series_len(self.theta());
            let rho = self.rho_upto(len + m + 1);
            return Cow::Owned(r_table_from(&rho, len, self.theta(), m));
        }
        if len <= cached {
            let table = self.r_cache.get_or_init(|| {
                let m = self.policy.series_len(self.theta());
                let rho = self.rho_upto(cached + m + 1);
                r_table_from(&rho, cached, self.theta(), m)
            });
            Cow::Borrowed(&table[..len])
        } else {
            let m = self.policy.series_len(self.theta());
            let rho = self.rho_upto(len + m + 1);
            Cow::Owned(r_table_from(&rho, len, self.theta(), m))
        }
    }

    /// `sigma_H^2 = 2 sum_{k in Z} R(k)^2`.
    ///
    /// Lags up to `rho_cutoff` are summed directly; the remainder comes from
    /// the power law `R(k) ~ c k^(2H-2)` fitted at the cutoff, and with
    /// `sigma_tail_check` the fit is required to be stable between `K/2` and
    /// `K` to within [`SIGMA_TAIL_TOLERANCE`] of the total.
    pub fn sigma_h2(&self) -> Result<f64> {
        if let Some(h) = self.noise().hurst() {
            if h >= 0.75 {
                return Err(LmarError::UnsupportedRegime { hurst: h });
            }
        }
        self.sigma2.get_or_init(|| self.compute_sigma2()).clone()
    }

    fn compute_sigma2(&self) -> Result<f64> {
        let cutoff = self.policy.rho_cutoff;
        let r = self.r_table(cutoff + 1);
        let head = r[0] * r[0] + 2.0 * r[1..=cutoff].iter().map(|v| v * v).sum::<f64>();
        let Some(h) = self.noise().hurst() else {
            let tail = r[cutoff] * r[cutoff] * cutoff as f64;
            if self.policy.sigma_tail_check && tail > SIGMA_TAIL_TOLERANCE * head {
                return Err(LmarError::TruncationInsufficient(format!(
                    "short-memory covariance still at {:e} at lag {cutoff}",
                    r[cutoff]
                )));
            }
            return Ok(2.0 * head);
        };
        let exponent = 2.0 * h - 2.0;
        let zeta = hurwitz_zeta(-2.0 * exponent, cutoff as f64 + 1.0);
        let tail_from = |k: usize| {
            let c = r[k] * (k as f64).powf(-exponent);
            2.0 * c * c * zeta
        };
        let tail = tail_from(cutoff);
        let total = 2.0 * (head + tail);
        if self.policy.sigma_tail_check {
            let alt = tail_from(cutoff / 2);
            let spread = 2.0 * (tail - alt).abs();
            if spread > SIGMA_TAIL_TOLERANCE * total {
                return Err(LmarError::TruncationInsufficient(format!(
                    "power-law tail of R(k) unstable at cutoff {cutoff}: relative spread {:e}",
                    spread / total
                )));
            }
        }
        Ok(total)
    }

    /// `v_n^2 = 2 sum_{|k|<n} (1 - |k|/n) R(k)^2 = E[V_n^2]`.
    pub fn v_n2(&self, n: usize) -> Result<f64> {
        if n < 1 {
            return Err(domain("v_n^2 needs n >= 1"));
        }
        let r = self.r_table(n);
        Ok(v_n2_from(&r, n))
    }

    /// Root of `f(theta) = y` on `(theta_lo, theta_hi)`.
    pub fn f_inverse(&self, y: f64) -> Result<f64> {
        self.f_inverse_from(y, None)
    }

    /// As [`Self::f_inverse`], starting Newton at `guess` when it lies in the bracket.
    pub fn f_inverse_from(&self, y: f64, guess: Option<f64>) -> Result<f64> {
        if let Some(theta) = self.monotone_violation {
            return Err(LmarError::ModelNotMonotone { theta });
        }
        if !y.is_finite() {
            return Err(domain(format!("cannot invert non-finite moment {y}")));
        }
        if y <= self.f_lo {
            return Err(LmarError::BelowRange { value: y, lower: self.f_lo });
        }
        let last = self.grid[self.grid.len() - 1];
        if y >= last.1 && y >= self.f_hi() {
            return Err(LmarError::AboveRange { value: y, upper: self.f_hi() });
        }

        // tight bracket from the construction grid
        let idx = self.grid.partition_point(|&(_, f)| f < y);
        let (mut lo, mut hi) = match idx {
            0 => (THETA_LO, self.grid[0].0),
            i if i == self.grid.len() => (last.0, THETA_HI),
            i => (self.grid[i - 1].0, self.grid[i].0),
        };
        let tol = 1e-12 * y.max(1.0);
        let mut x = match guess {
            Some(g) if g > lo && g < hi => g,
            _ => 0.5 * (lo + hi),
        };
        for _ in 0..MAX_INVERSION_STEPS {
            let (f, fp) = self.f_and_prime(x);
            let resid = f - y;
            if resid.abs() <= tol {
                return Ok(x);
            }
            if resid > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - resid / fp;
            let next = if fp > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) <= 4.0 * f64::EPSILON * hi || next == x {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Second-moment estimator `f^-1(n^-1 sum X_t^2)`.
    pub fn estimate_theta(&self, x: &SamplePath) -> Result<f64> {
        self.f_inverse(x.second_moment())
    }
}

fn r_at(rho: &[f64], k: usize, theta: f64, m: usize) -> f64 {
    let mut sum = rho[k];
    let mut w = 1.0;
    for j in 1..=m {
        w *= theta;
        let below = rho[k.abs_diff(j)];
        sum += w * (rho[k + j] + below);
    }
    sum / (1.0 - theta * theta)
}

fn r_table_from(rho: &[f64], len: usize, theta: f64, m: usize) -> Vec<f64> {
    let weights: Vec<f64> = std::iter::successors(Some(theta), |w| Some(w * theta)).take(m).collect();
    let q = 1.0 - theta * theta;
    (0..len)
        .map(|k| {
            let mut sum = rho[k];
            for (j, w) in weights.iter().enumerate() {
                let j = j + 1;
                sum += w * (rho[k + j] + rho[k.abs_diff(j)]);
            }
            sum / q
        })
        .collect()
}

pub(crate) fn v_n2_from(r: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    let tail: f64 = r[1..n]
        .iter()
        .enumerate()
        .map(|(i, v)| (1.0 - (i + 1) as f64 / nf) * v * v)
        .sum();
    2.0 * (r[0] * r[0] + 2.0 * tail)
}
