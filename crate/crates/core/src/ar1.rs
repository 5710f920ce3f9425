//! AR(1) paths `X_t = theta X_{t-1} + xi_t` started at `X_0 = 0`, and exact
//! draws of the stationary solution `Y_t = sum_j theta^j xi_{t-j}`.

use crate::covariance::CovarianceModel;
use crate::error::{domain, LmarError, Result};
use crate::gaussian_sim::{PathKind, SamplePath, StationarySampler};
use crate::moments::{MomentContext, TruncationPolicy};

#[derive(Debug, Clone)]
pub struct Ar1Model {
    theta: f64,
    noise: CovarianceModel,
}

impl Ar1Model {
    pub fn new(theta: f64, noise: CovarianceModel) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { theta, noise })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn noise(&self) -> &CovarianceModel {
        &self.noise
    }

    pub fn tag(&self) -> String {
        format!("ar1(theta={}, {})", self.theta, self.noise.tag())
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("theta must lie in (0, 1), got {theta}")))
    }
}

/// Runs the recursion from `X_0 = 0` over the given noise; returns `X_1..X_n`.
pub fn x_from_noise(theta: f64, noise: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(noise.len());
    let mut x = 0.0;
    for &xi in noise {
        x = theta * x + xi;
        out.push(x);
    }
    out
}

fn x_in_place(theta: f64, buf: &mut [f64]) {
    let mut x = 0.0;
    for v in buf.iter_mut() {
        x = theta * x + *v;
        *v = x;
    }
}

/// Reusable sampler for X-paths of a fixed length.
#[derive(Debug, Clone)]
pub struct XPathSampler {
    theta: f64,
    noise: StationarySampler,
    tag: String,
}

impl XPathSampler {
    pub fn new(model: &Ar1Model, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(domain("path length must be at least 1"));
        }
        Ok(Self {
            theta: model.theta,
            noise: StationarySampler::for_model(&model.noise, n)?,
            tag: model.tag(),
        })
    }

    pub fn n(&self) -> usize {
        self.noise.n()
    }

    /// Fills `out` with `X_1..X_n` for `seed`.
    pub fn sample_into(&self, seed: u64, out: &mut [f64]) {
        self.noise.sample_into(seed, out);
        x_in_place(self.theta, out);
    }

    /// Noise `xi_1..xi_n` behind the path with the same seed.
    pub fn noise(&self, seed: u64) -> Vec<f64> {
        self.noise.sample(seed)
    }

    pub fn sample(&self, seed: u64) -> Result<SamplePath> {
        let mut values = vec![0.0; self.n()];
        self.sample_into(seed, &mut values);
        SamplePath::new(values, seed, self.tag.clone(), PathKind::Ar1)
    }
}

/// `X_1..X_n` with exactly simulated noise.
pub fn generate_x_path(model: &Ar1Model, n: usize, seed: u64) -> Result<SamplePath> {
    XPathSampler::new(model, n)?.sample(seed)
}

/// Reusable exact sampler of the stationary solution via its covariance `R(k)`.
#[derive(Debug, Clone)]
pub struct YPathSampler {
    sampler: StationarySampler,
    tag: String,
}

impl YPathSampler {
    pub fn new(ctx: &MomentContext, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("stationary path needs n >= 2, got {n}")));
        }
        let len = crate::gaussian_sim::circulant_order(n) / 2 + 1;
        let r = ctx.r_table(len.max(n));
        Ok(Self {
            sampler: StationarySampler::new(|k| r[k], n, ctx.model().tag())?,
            tag: ctx.model().tag(),
        })
    }

    pub fn n(&self) -> usize {
        self.sampler.n()
    }

    pub fn sample_into(&self, seed: u64, out: &mut [f64]) {
        self.sampler.sample_into(seed, out);
    }

    pub fn sample(&self, seed: u64) -> Result<SamplePath> {
        SamplePath::new(self.sampler.sample(seed), seed, self.tag.clone(), PathKind::Stationary)
    }
}

/// Exact stationary path `Y_1..Y_n` with covariance `R(k)`.
pub fn generate_y_path(model: &Ar1Model, n: usize, seed: u64) -> Result<SamplePath> {
    let ctx = MomentContext::new(model.clone(), TruncationPolicy::default())?;
    YPathSampler::new(&ctx, n)?.sample(seed)
}

/// X and Y driven by one noise stream: `y[0]` is `Y_0`, `x[t-1]` is `X_t`.
#[derive(Debug, Clone)]
pub struct CoupledPaths {
    pub noise: Vec<f64>,
    pub x: SamplePath,
    pub y: SamplePath,
}

/// Builds coupled paths from a single noise draw of length `burn_in + n`.
/// `Y` is run through the recursion over the burn-in so that it is stationary
/// up to `theta^burn_in`; the X/Y identity holds exactly regardless.
pub fn coupled_paths(model: &Ar1Model, n: usize, seed: u64, burn_in: usize) -> Result<CoupledPaths> {
    if n < 1 {
        return Err(domain("path length must be at least 1"));
    }
    let total = burn_in + n;
    let sampler = StationarySampler::for_model(&model.noise, total)?;
    let all = sampler.sample(seed);
    let theta = model.theta;
    let mut y = 0.0;
    for &xi in &all[..burn_in] {
        y = theta * y + xi;
    }
    let noise = all[burn_in..].to_vec();
    let mut ys = Vec::with_capacity(n + 1);
    ys.push(y);
    for &xi in &noise {
        y = theta * y + xi;
        ys.push(y);
    }
    let x = x_from_noise(theta, &noise);
    Ok(CoupledPaths {
        x: SamplePath::new(x, seed, model.tag(), PathKind::Ar1)?,
        y: SamplePath::new(ys, seed, model.tag(), PathKind::Stationary)?,
        noise,
    })
}

/// `max_t |X_t - (Y_t - theta^t Y_0)|` for coupled paths; `y` includes `Y_0`.
pub fn decompose_check(x: &SamplePath, y: &SamplePath, theta: f64) -> Result<f64> {
    if y.len() != x.len() + 1 {
        return Err(LmarError::LengthMismatch {
            left: x.len() + 1,
            right: y.len(),
        });
    }
    let y0 = y.values[0];
    let mut power = 1.0;
    let mut worst: f64 = 0.0;
    for (xt, yt) in x.values.iter().zip(&y.values[1..]) {
        power *= theta;
        worst = worst.max((xt - (yt - power * y0)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fgn_model(theta: f64, h: f64) -> Ar1Model {
        Ar1Model::new(theta, CovarianceModel::fgn(h).unwrap()).unwrap()
    }

    #[test]
    fn theta_domain() {
        let w = CovarianceModel::white_noise();
        assert!(Ar1Model::new(0.0, w.clone()).is_err());
        assert!(Ar1Model::new(1.0, w.clone()).is_err());
        assert!(Ar1Model::new(-0.5, w.clone()).is_err());
        assert!(Ar1Model::new(0.5, w).is_ok());
    }

    #[test]
    fn recursion_on_injected_noise() {
        assert_eq!(x_from_noise(0.5, &[0.0; 5]), vec![0.0; 5]);
        assert_eq!(x_from_noise(0.5, &[1.0, 0.0, 0.0, 0.0]), vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn recursion_identity_holds_for_generated_paths() {
        let model = fgn_model(0.7, 0.65);
        let sampler = XPathSampler::new(&model, 2000).unwrap();
        let x = sampler.sample(123).unwrap();
        let xi = sampler.noise(123);
        assert!((x.values[0] - xi[0]).abs() < 1e-12);
        for t in 1..x.len() {
            let resid = x.values[t] - 0.7 * x.values[t - 1] - xi[t];
            assert!(resid.abs() < 1e-12, "t={t}: {resid}");
        }
    }

    #[test]
    fn x_path_second_moment_near_f() {
        let model = fgn_model(0.5, 0.7);
        let ctx = MomentContext::new(model.clone(), TruncationPolicy::default()).unwrap();
        let x = generate_x_path(&model, 10_000, 2024).unwrap();
        let f = ctx.f_value();
        assert!((x.second_moment() / f - 1.0).abs() < 0.10, "{} vs {f}", x.second_moment());
        assert_eq!(x.kind, PathKind::Ar1);
    }

    #[test]
    fn y_path_white_noise_variance() {
        let model = Ar1Model::new(0.5, CovarianceModel::white_noise()).unwrap();
        let y = generate_y_path(&model, 100_000, 8).unwrap();
        assert!((y.second_moment() / (4.0 / 3.0) - 1.0).abs() < 0.02, "{}", y.second_moment());
    }

    #[test]
    fn y_path_small_theta_is_nearly_white() {
        let model = Ar1Model::new(1e-9, CovarianceModel::white_noise()).unwrap();
        let y = generate_y_path(&model, 50_000, 1).unwrap();
        let v = &y.values;
        let var = y.second_moment();
        let lag1 = v.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (v.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.03);
        assert!(lag1.abs() < 0.03);
    }

    #[test]
    fn y_path_requires_two_points() {
        let model = fgn_model(0.5, 0.7);
        assert!(generate_y_path(&model, 1, 0).is_err());
    }

    #[test]
    fn coupled_decomposition_identity() {
        for (theta, h, n) in [(0.5, 0.7, 100), (0.9, 0.6, 500), (0.2, 0.85, 50)] {
            let model = fgn_model(theta, h);
            let c = coupled_paths(&model, n, 77, 200).unwrap();
            let dev = decompose_check(&c.x, &c.y, theta).unwrap();
            assert!(dev < 1e-10, "theta={theta}: {dev}");
        }
    }

    #[test]
    fn decomposition_remainder_decays_geometrically() {
        let model = fgn_model(0.5, 0.7);
        let c = coupled_paths(&model, 60, 5, 200).unwrap();
        let t = 50;
        let diff = (c.x.values[t - 1] - c.y.values[t]).abs();
        assert!(diff <= 0.5f64.powi(50) * c.y.values[0].abs() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn uncoupled_paths_fail_the_check() {
        let model = fgn_model(0.5, 0.7);
        let a = coupled_paths(&model, 100, 1, 200).unwrap();
        let b = coupled_paths(&model, 100, 2, 200).unwrap();
        assert!(decompose_check(&a.x, &b.y, 0.5).unwrap() > 1e-3);
    }

    #[test]
    fn decompose_length_mismatch() {
        let model = fgn_model(0.5, 0.7);
        let c = coupled_paths(&model, 10, 1, 20).unwrap();
        assert!(matches!(
            decompose_check(&c.x, &c.x, 0.5),
            Err(LmarError::LengthMismatch { .. })
        ));
    }
}
