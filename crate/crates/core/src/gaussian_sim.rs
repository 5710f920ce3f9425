//! Exact sampling of stationary Gaussian sequences with a prescribed
//! autocovariance.
//!
//! The primary route embeds the `n x n` Toeplitz covariance into a circulant
//! matrix of order `m` (next power of two `>= 2(n-1)`), diagonalized by the
//! FFT. When the embedding has genuinely negative eigenvalues the dense
//! Cholesky fallback is used instead.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceModel;
use crate::error::{domain, LmarError, Result};
use crate::rng::{fill_standard_normals, rng_from_seed, standard_normals};

/// Relative tolerance separating FFT rounding from a failed embedding.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Largest `n` accepted by the dense fallback.
pub const FALLBACK_MAX_N: usize = 1 << 13;

const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Noise,
    Stationary,
    Ar1,
}

/// A finite sample path together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub seed: u64,
    pub model_tag: String,
    pub kind: PathKind,
}

impl SamplePath {
    pub fn new(values: Vec<f64>, seed: u64, model_tag: impl Into<String>, kind: PathKind) -> Result<Self> {
        if values.is_empty() {
            return Err(LmarError::EmptyInput("sample path"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LmarError::ContractViolation(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            values,
            seed,
            model_tag: model_tag.into(),
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `n^-1 sum x_t^2`.
    pub fn second_moment(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>() / self.values.len() as f64
    }
}

/// Circulant embedding of a Toeplitz covariance.
#[derive(Clone)]
pub struct EmbeddingPlan {
    pub n: usize,
    pub m: usize,
    /// Circulant eigenvalues, negatives within tolerance clamped to zero.
    pub eigenvalues: Vec<f64>,
    pub psd_ok: bool,
    /// Smallest eigenvalue before clamping.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub tag: String,
    amplitudes: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for EmbeddingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingPlan")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("psd_ok", &self.psd_ok)
            .field("min_eigenvalue", &self.min_eigenvalue)
            .field("max_eigenvalue", &self.max_eigenvalue)
            .field("tag", &self.tag)
            .finish_non_exhaustive()
    }
}

/// Circulant order used for a path of length `n`.
pub fn circulant_order(n: usize) -> usize {
    (2 * (n.max(2) - 1)).next_power_of_two()
}

impl EmbeddingPlan {
    /// Builds the embedding from `acov(k)`, `k = 0..=m/2`. Never fails; check
    /// `psd_ok` or use [`plan_embedding`].
    pub fn new<F>(acov: F, n: usize, tag: impl Into<String>) -> Self
    where
        F: Fn(usize) -> f64,
    {
        let m = circulant_order(n);
        let half = m / 2;
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        for k in 0..=half {
            row.push(Complex::new(acov(k), 0.0));
        }
        for k in (1..half).rev() {
            row.push(Complex::new(acov(k), 0.0));
        }
        debug_assert_eq!(row.len(), m);

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);

        let raw: Vec<f64> = row.iter().map(|c| c.re).collect();
        let min_eigenvalue = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let max_eigenvalue = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let psd_ok = min_eigenvalue >= -PSD_TOLERANCE * max_eigenvalue.abs();
        let eigenvalues: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
        let amplitudes = eigenvalues.iter().map(|&v| (v / m as f64).sqrt()).collect();

        Self {
            n,
            m,
            eigenvalues,
            psd_ok,
            min_eigenvalue,
            max_eigenvalue,
            tag: tag.into(),
            amplitudes,
            fft,
        }
    }

    pub fn from_model(model: &CovarianceModel, n: usize) -> Self {
        let table = model.autocovariances(circulant_order(n) / 2 + 1);
        Self::new(|k| table[k], n, model.tag())
    }

    /// Writes one exact draw into `out[..n]`. The caller guarantees `psd_ok`.
    pub fn sample_into(&self, seed: u64, out: &mut [f64]) {
        let mut rng = rng_from_seed(seed);
        let mut normals = vec![0.0; 2 * self.m];
        fill_standard_normals(&mut rng, &mut normals);
        let mut buf: Vec<Complex<f64>> = normals
            .chunks_exact(2)
            .zip(&self.amplitudes)
            .map(|(z, &a)| Complex::new(z[0] * a, z[1] * a))
            .collect();
        self.fft.process(&mut buf);
        for (dst, c) in out.iter_mut().zip(&buf[..self.n]) {
            *dst = c.re;
        }
    }
}

/// Circulant embedding for `model` on `n` points; errors when the embedding
/// is not PSD so the caller can switch to the dense fallback.
pub fn plan_embedding(model: &CovarianceModel, n: usize) -> Result<EmbeddingPlan> {
    if n < 2 {
        return Err(domain(format!("embedding needs n >= 2, got {n}")));
    }
    checked(EmbeddingPlan::from_model(model, n))
}

/// As [`plan_embedding`] for an arbitrary autocovariance sequence.
pub fn plan_embedding_from<F>(acov: F, n: usize, tag: impl Into<String>) -> Result<EmbeddingPlan>
where
    F: Fn(usize) -> f64,
{
    if n < 2 {
        return Err(domain(format!("embedding needs n >= 2, got {n}")));
    }
    checked(EmbeddingPlan::new(acov, n, tag))
}

fn checked(plan: EmbeddingPlan) -> Result<EmbeddingPlan> {
    if plan.psd_ok {
        Ok(plan)
    } else {
        Err(LmarError::EmbeddingNotPsd {
            min_eigenvalue: plan.min_eigenvalue,
            max_eigenvalue: plan.max_eigenvalue,
        })
    }
}

/// One exact stationary path from a PSD plan.
pub fn sample_stationary(plan: &EmbeddingPlan, seed: u64) -> Result<SamplePath> {
    if !plan.psd_ok {
        return Err(LmarError::ContractViolation(
            "sample_stationary called with a non-PSD embedding plan".into(),
        ));
    }
    let mut values = vec![0.0; plan.n];
    plan.sample_into(seed, &mut values);
    SamplePath::new(values, seed, plan.tag.clone(), PathKind::Noise)
}

/// Lower Cholesky factor of a Toeplitz matrix, packed by rows.
#[derive(Debug, Clone)]
pub struct ToeplitzCholesky {
    n: usize,
    packed: Vec<f64>,
    pub jitter: f64,
}

impl ToeplitzCholesky {
    /// Factors `[acov(|i-j|)]`, retrying with diagonal jitter
    /// `1e-12, 1e-10, 1e-8` before giving up.
    pub fn new<F>(acov: F, n: usize) -> Result<Self>
    where
        F: Fn(usize) -> f64,
    {
        if n == 0 {
            return Err(LmarError::EmptyInput("Toeplitz factorization"));
        }
        if n > FALLBACK_MAX_N {
            return Err(domain(format!("dense fallback limited to n <= {FALLBACK_MAX_N}, got {n}")));
        }
        let lags: Vec<f64> = (0..n).map(&acov).collect();
        for &jitter in &JITTER_LADDER {
            if let Some(packed) = cholesky_packed(&lags, jitter) {
                return Ok(Self { n, packed, jitter });
            }
        }
        Err(LmarError::CovarianceNotPsd {
            n,
            last_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.packed[start..start + i + 1]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `L z` for the given standard normal vector.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).iter().zip(z).map(|(l, x)| l * x).sum();
        }
    }

    pub fn sample_into(&self, seed: u64, out: &mut [f64]) {
        let z = standard_normals(seed, self.n);
        self.apply(&z, out);
    }
}

fn cholesky_packed(lags: &[f64], jitter: f64) -> Option<Vec<f64>> {
    let n = lags.len();
    let mut packed = vec![0.0; n * (n + 1) / 2];
    let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
    for i in 0..n {
        for j in 0..=i {
            let mut s = lags[i - j];
            if i == j {
                s += jitter;
            }
            let (ri, rj) = (idx(i, 0), idx(j, 0));
            for k in 0..j {
                s -= packed[ri + k] * packed[rj + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                packed[idx(i, i)] = s.sqrt();
            } else {
                packed[idx(i, j)] = s / packed[idx(j, j)];
            }
        }
    }
    Some(packed)
}

/// Exact draw by dense factorization; for `n <= 2^13`.
pub fn sample_stationary_fallback<F>(acov: F, n: usize, seed: u64) -> Result<SamplePath>
where
    F: Fn(usize) -> f64,
{
    let factor = ToeplitzCholesky::new(acov, n)?;
    let mut values = vec![0.0; n];
    factor.sample_into(seed, &mut values);
    SamplePath::new(values, seed, "dense", PathKind::Noise)
}

/// Either sampler, prepared once and reused across replicates.
#[derive(Debug, Clone)]
pub enum StationarySampler {
    Circulant(EmbeddingPlan),
    Dense(ToeplitzCholesky),
}

impl StationarySampler {
    /// Prefers circulant embedding; falls back to dense Cholesky when the
    /// embedding is not PSD (or `n < 2`).
    pub fn new<F>(acov: F, n: usize, tag: impl Into<String>) -> Result<Self>
    where
        F: Fn(usize) -> f64,
    {
        if n == 0 {
            return Err(LmarError::EmptyInput("sampler length"));
        }
        if n >= 2 {
            let plan = EmbeddingPlan::new(&acov, n, tag);
            if plan.psd_ok {
                return Ok(Self::Circulant(plan));
            }
            if n > FALLBACK_MAX_N {
                return Err(LmarError::EmbeddingNotPsd {
                    min_eigenvalue: plan.min_eigenvalue,
                    max_eigenvalue: plan.max_eigenvalue,
                });
            }
        }
        Ok(Self::Dense(ToeplitzCholesky::new(acov, n)?))
    }

    pub fn for_model(model: &CovarianceModel, n: usize) -> Result<Self> {
        let len = circulant_order(n) / 2 + 1;
        let table = model.autocovariances(len.max(n));
        Self::new(|k| table[k], n, model.tag())
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Circulant(p) => p.n,
            Self::Dense(c) => c.n(),
        }
    }

    pub fn sample_into(&self, seed: u64, out: &mut [f64]) {
        match self {
            Self::Circulant(p) => p.sample_into(seed, out),
            Self::Dense(c) => c.sample_into(seed, out),
        }
    }

    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.sample_into(seed, &mut out);
        out
    }
}

/// Noise path `xi_1..xi_n` for `model`.
pub fn sample_noise(model: &CovarianceModel, n: usize, seed: u64) -> Result<SamplePath> {
    let sampler = StationarySampler::for_model(model, n)?;
    SamplePath::new(sampler.sample(seed), seed, model.tag(), PathKind::Noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::cov_fgn;

    #[test]
    fn white_noise_embedding_is_identity() {
        let plan = plan_embedding(&CovarianceModel::white_noise(), 4).unwrap();
        assert_eq!(plan.m, 8);
        for &e in &plan.eigenvalues {
            assert!((e - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_row_concentrates_at_zero_frequency() {
        let ones = CovarianceModel::custom("ones", 0.7, 1.0, |_| 1.0).unwrap();
        let plan = plan_embedding(&ones, 8).unwrap();
        assert_eq!(plan.m, 16);
        assert!((plan.eigenvalues[0] - 16.0).abs() < 1e-12);
        for &e in &plan.eigenvalues[1..] {
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn fgn_embedding_is_psd() {
        let plan = plan_embedding(&CovarianceModel::fgn(0.7).unwrap(), 1024).unwrap();
        assert!(plan.psd_ok);
        assert_eq!(plan.m, 2048);
    }

    #[test]
    fn builtin_embeddings_psd_up_to_2_pow_14() {
        let models = [
            CovarianceModel::fgn(0.55).unwrap(),
            CovarianceModel::fgn(0.7).unwrap(),
            CovarianceModel::fgn(0.95).unwrap(),
            CovarianceModel::arfima(0.1).unwrap(),
            CovarianceModel::arfima(0.45).unwrap(),
            CovarianceModel::white_noise(),
        ];
        for model in &models {
            for n in [2usize, 3, 100, 1 << 10, 1 << 14] {
                let plan = EmbeddingPlan::from_model(model, n);
                assert!(
                    plan.min_eigenvalue >= -PSD_TOLERANCE * plan.max_eigenvalue,
                    "{} n={n}: {:?}",
                    model.tag(),
                    plan
                );
            }
        }
    }

    #[test]
    fn indefinite_embedding_is_reported() {
        // rho(1) = -1 with zeros elsewhere: circulant eigenvalue 1 - 2cos(0) < 0
        let res = plan_embedding_from(|k| match k {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        }, 3, "bad");
        assert!(matches!(res, Err(LmarError::EmbeddingNotPsd { .. })));
    }

    #[test]
    fn white_noise_variance_band() {
        let plan = plan_embedding(&CovarianceModel::white_noise(), 100_000).unwrap();
        let path = sample_stationary(&plan, 11).unwrap();
        let var = path.second_moment();
        assert!((0.98..=1.02).contains(&var), "variance {var}");
    }

    #[test]
    fn deterministic_given_seed() {
        let plan = plan_embedding(&CovarianceModel::fgn(0.7).unwrap(), 300).unwrap();
        let a = sample_stationary(&plan, 5).unwrap();
        let b = sample_stationary(&plan, 5).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample_stationary(&plan, 6).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn non_psd_plan_is_contract_violation() {
        let plan = EmbeddingPlan::new(|k| if k == 1 { -1.0 } else if k == 0 { 1.0 } else { 0.0 }, 3, "bad");
        assert!(!plan.psd_ok);
        assert!(matches!(sample_stationary(&plan, 1), Err(LmarError::ContractViolation(_))));
    }

    #[test]
    fn fgn_lag_one_covariance_monte_carlo() {
        let n = 512;
        let plan = plan_embedding(&CovarianceModel::fgn(0.7).unwrap(), n).unwrap();
        let reps = 10_000u64;
        // per-replicate lag-1 sample autocovariance (known zero mean)
        let stats: Vec<f64> = (0..reps)
            .map(|r| {
                let p = sample_stationary(&plan, crate::rng::derive_seed(3, n as u64, r)).unwrap();
                let v = &p.values;
                v.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64
            })
            .collect();
        let mean = stats.iter().sum::<f64>() / reps as f64;
        let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let stderr = (var / reps as f64).sqrt();
        let target = cov_fgn(1, 0.7).unwrap();
        assert!((mean - target).abs() < 3.0 * stderr, "mean {mean} target {target} se {stderr}");
    }

    #[test]
    fn fallback_white_noise_is_raw_normals() {
        let path = sample_stationary_fallback(|k| if k == 0 { 1.0 } else { 0.0 }, 16, 77).unwrap();
        assert_eq!(path.values, standard_normals(77, 16));
    }

    #[test]
    fn fallback_rejects_indefinite() {
        let res = sample_stationary_fallback(|k| match k {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        }, 3, 1);
        assert!(matches!(res, Err(LmarError::CovarianceNotPsd { n: 3, .. })));
    }

    #[test]
    fn fallback_jitter_rescues_singular_matrix() {
        // rank-one Toeplitz (alternating signs), PSD but singular
        let f = ToeplitzCholesky::new(|k| if k % 2 == 0 { 1.0 } else { -1.0 }, 3).unwrap();
        assert!(f.jitter > 0.0);
    }

    #[test]
    fn fallback_cost_guard() {
        assert!(ToeplitzCholesky::new(|k| if k == 0 { 1.0 } else { 0.0 }, FALLBACK_MAX_N + 1).is_err());
    }

    #[test]
    fn fallback_fgn_variance_band() {
        let model = CovarianceModel::fgn(0.6).unwrap();
        let n = 256;
        let factor = ToeplitzCholesky::new(|k| model.rho(k as i64), n).unwrap();
        let reps = 10_000u64;
        let mut out = vec![0.0; n];
        let mut sum = 0.0;
        for r in 0..reps {
            factor.sample_into(crate::rng::derive_seed(9, 0, r), &mut out);
            sum += out[0] * out[0];
        }
        let var = sum / reps as f64;
        assert!((0.97..=1.03).contains(&var), "{var}");
    }

    #[test]
    fn sampler_uses_dense_for_short_and_indefinite() {
        let white = CovarianceModel::white_noise();
        assert!(matches!(StationarySampler::for_model(&white, 1).unwrap(), StationarySampler::Dense(_)));
        assert!(matches!(StationarySampler::for_model(&white, 10).unwrap(), StationarySampler::Circulant(_)));
    }

    #[test]
    fn sample_path_rejects_empty_and_nan() {
        assert!(SamplePath::new(vec![], 0, "x", PathKind::Noise).is_err());
        assert!(SamplePath::new(vec![1.0, f64::NAN], 0, "x", PathKind::Noise).is_err());
    }
}
