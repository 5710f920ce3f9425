//! Autocovariance models for long-memory stationary Gaussian noise.
//!
//! Every built-in model is normalized so that `rho(0) = 1` and, for the
//! long-memory models, `rho(k) ~ L(k) |k|^(2H-2)` with `H` in `(1/2, 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{domain, LmarError, Result};
use crate::special::gamma;

/// Lags above this use the binomial series for fGn instead of the second
/// difference, which cancels catastrophically for large `k`.
const FGN_SERIES_FROM: u64 = 64;

/// Finite range over which custom evaluators are checked at construction.
const CUSTOM_CHECK_LAGS: i64 = 10_000;

pub type LagFn = Arc<dyn Fn(i64) -> f64 + Send + Sync>;

/// A user-supplied autocovariance with declared long-memory metadata.
///
/// Only finite-range properties are verified; the slowly varying factor is
/// trusted as declared.
#[derive(Clone)]
pub struct CustomCovariance {
    pub name: String,
    pub hurst: f64,
    pub scale: f64,
    eval: LagFn,
}

impl CustomCovariance {
    pub fn rho(&self, k: i64) -> f64 {
        (self.eval)(k)
    }
}

impl fmt::Debug for CustomCovariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCovariance")
            .field("name", &self.name)
            .field("hurst", &self.hurst)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum NoiseKind {
    Fgn { hurst: f64 },
    Arfima { d: f64 },
    /// Not long-memory; kept as an analytic oracle.
    WhiteNoise,
    Custom(CustomCovariance),
}

/// Autocovariance `rho(k) = E[xi_0 xi_k]` of the driving noise.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    kind: NoiseKind,
}

impl CovarianceModel {
    pub fn fgn(hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Ok(Self { kind: NoiseKind::Fgn { hurst } })
    }

    pub fn arfima(d: f64) -> Result<Self> {
        check_d(d)?;
        Ok(Self { kind: NoiseKind::Arfima { d } })
    }

    pub fn white_noise() -> Self {
        Self { kind: NoiseKind::WhiteNoise }
    }

    /// Wraps a user evaluator. Checks `rho(0) = 1`, symmetry and `|rho| <= 1`
    /// on `|k| <= 10^4`, `H` in `(1/2, 1)` and `scale > 0`.
    pub fn custom<F>(name: impl Into<String>, hurst: f64, scale: f64, eval: F) -> Result<Self>
    where
        F: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        check_hurst(hurst)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain(format!("slowly varying scale must be positive, got {scale}")));
        }
        let r0 = eval(0);
        if r0 != 1.0 {
            return Err(domain(format!("custom covariance must have rho(0) = 1, got {r0}")));
        }
        for k in 1..=CUSTOM_CHECK_LAGS {
            let (a, b) = (eval(k), eval(-k));
            if a != b {
                return Err(domain(format!("custom covariance not symmetric at lag {k}: {a} vs {b}")));
            }
            if !(a.abs() <= 1.0) {
                return Err(domain(format!("custom covariance |rho({k})| = {a} exceeds 1")));
            }
        }
        Ok(Self {
            kind: NoiseKind::Custom(CustomCovariance {
                name: name.into(),
                hurst,
                scale,
                eval: Arc::new(eval),
            }),
        })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    /// Declared Hurst index; `None` for white noise.
    pub fn hurst(&self) -> Option<f64> {
        match &self.kind {
            NoiseKind::Fgn { hurst } => Some(*hurst),
            NoiseKind::Arfima { d } => Some(d + 0.5),
            NoiseKind::WhiteNoise => None,
            NoiseKind::Custom(c) => Some(c.hurst),
        }
    }

    pub fn is_long_memory(&self) -> bool {
        self.hurst().is_some()
    }

    /// Limit of `rho(k) k^(2-2H)` where known in closed form.
    pub fn tail_constant(&self) -> Option<f64> {
        match &self.kind {
            NoiseKind::Fgn { hurst } => Some(hurst * (2.0 * hurst - 1.0)),
            NoiseKind::Arfima { d } => Some(gamma(1.0 - d) / gamma(*d)),
            NoiseKind::WhiteNoise => None,
            NoiseKind::Custom(c) => Some(c.scale),
        }
    }

    pub fn rho(&self, k: i64) -> f64 {
        let lag = k.unsigned_abs();
        match &self.kind {
            NoiseKind::Fgn { hurst } => fgn_lag(lag, *hurst),
            NoiseKind::Arfima { d } => arfima_lag(lag, *d),
            NoiseKind::WhiteNoise => {
                if lag == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseKind::Custom(c) => c.rho(k),
        }
    }

    /// `rho(0), ..., rho(len - 1)`; ARFIMA uses the running product.
    pub fn autocovariances(&self, len: usize) -> Vec<f64> {
        match &self.kind {
            NoiseKind::Arfima { d } => {
                let mut out = Vec::with_capacity(len);
                let mut r = 1.0;
                for k in 0..len {
                    if k > 0 {
                        let kf = k as f64;
                        r *= (kf - 1.0 + d) / (kf - d);
                    }
                    out.push(r);
                }
                out
            }
            _ => (0..len as i64).map(|k| self.rho(k)).collect(),
        }
    }

    /// Short text tag, e.g. `fgn:0.7`, `arfima:0.2`, `white`.
    pub fn tag(&self) -> String {
        match &self.kind {
            NoiseKind::Fgn { hurst } => format!("fgn:{hurst}"),
            NoiseKind::Arfima { d } => format!("arfima:{d}"),
            NoiseKind::WhiteNoise => "white".to_string(),
            NoiseKind::Custom(c) => format!("custom:{}", c.name),
        }
    }
}

impl FromStr for CovarianceModel {
    type Err = LmarError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("white") {
            return Ok(Self::white_noise());
        }
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| LmarError::InvalidConfig(format!("model `{s}`: expected fgn:H, arfima:d or white")))?;
        let value: f64 = param
            .parse()
            .map_err(|_| LmarError::InvalidConfig(format!("model `{s}`: `{param}` is not a number")))?;
        match kind.to_ascii_lowercase().as_str() {
            "fgn" => Self::fgn(value),
            "arfima" => Self::arfima(value),
            _ => Err(LmarError::InvalidConfig(format!("unknown model kind `{kind}`"))),
        }
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.5 && h < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("Hurst index must lie in (1/2, 1), got {h}")))
    }
}

fn check_d(d: f64) -> Result<()> {
    if d > 0.0 && d < 0.5 {
        Ok(())
    } else {
        Err(domain(format!("ARFIMA d must lie in (0, 1/2), got {d}")))
    }
}

fn fgn_lag(lag: u64, hurst: f64) -> f64 {
    let a = 2.0 * hurst;
    if lag < FGN_SERIES_FROM {
        let k = lag as f64;
        0.5 * ((k + 1.0).powf(a) + (k - 1.0).abs().powf(a) - 2.0 * k.powf(a))
    } else {
        // (1+x)^a + (1-x)^a - 2 = 2 sum_{j>=1} C(a, 2j) x^(2j), x = 1/k
        let k = lag as f64;
        let x2 = 1.0 / (k * k);
        let mut binom = 1.0;
        let mut xp = 1.0;
        let mut sum = 0.0;
        for m in 1..=60u32 {
            binom *= (a - m as f64 + 1.0) / m as f64;
            if m % 2 == 0 {
                xp *= x2;
                let term = binom * xp;
                sum += term;
                if term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
            }
        }
        k.powf(a) * sum
    }
}

fn arfima_lag(lag: u64, d: f64) -> f64 {
    let mut r = 1.0;
    for j in 1..=lag {
        let j = j as f64;
        r *= (j - 1.0 + d) / (j - d);
    }
    r
}

/// fGn autocovariance `1/2 (|k+1|^2H + |k-1|^2H - 2|k|^2H)`.
pub fn cov_fgn(k: i64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(fgn_lag(k.unsigned_abs(), hurst))
}

/// Normalized ARFIMA(0,d,0) autocorrelation via the product recurrence.
pub fn cov_arfima(k: i64, d: f64) -> Result<f64> {
    check_d(d)?;
    Ok(arfima_lag(k.unsigned_abs(), d))
}

/// `C_H = Gamma(2H - 1) sin(pi - pi H) / pi`, the constant linking the
/// covariance tail to the spectral singularity at the origin.
pub fn duality_constant(hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(gamma(2.0 * hurst - 1.0) * (PI - PI * hurst).sin() / PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub lambda: f64,
    pub value: f64,
    pub truncation_k: usize,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= PI {
        Ok(())
    } else {
        Err(domain(format!("frequency must lie in (0, pi], got {lambda}")))
    }
}

/// Truncated spectral density `(2 pi)^-1 (rho(0) + 2 sum_{k=1}^K rho(k) cos(k lambda))`.
pub fn spectral_density_estimate(
    model: &CovarianceModel,
    lambda: f64,
    truncation_k: usize,
) -> Result<SpectralEstimate> {
    check_lambda(lambda)?;
    if truncation_k < 1 {
        return Err(domain("spectral truncation K must be at least 1"));
    }
    let rho = model.autocovariances(truncation_k + 1);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (k, &r) in rho.iter().enumerate().skip(1) {
        // Kahan summation: K is typically 10^6
        let y = r * (k as f64 * lambda).cos() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(SpectralEstimate {
        lambda,
        value: (rho[0] + 2.0 * sum) / (2.0 * PI),
        truncation_k,
    })
}

/// Spectral density of the stationary AR(1) solution,
/// `|1 - theta e^{-i lambda}|^-2 h_xi(lambda)`.
pub fn transfer_spectral_density(
    theta: f64,
    model: &CovarianceModel,
    lambda: f64,
    truncation_k: usize,
) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    let h = spectral_density_estimate(model, lambda, truncation_k)?;
    let gain = 1.0 - 2.0 * theta * lambda.cos() + theta * theta;
    Ok(h.value / gain)
}
