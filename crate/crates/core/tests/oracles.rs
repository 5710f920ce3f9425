use lmar_core::{Ar1Model, CovarianceModel, MomentContext};

/// `E[Y_0 Y_k] = sum_{i,j >= 0} theta^(i+j) rho(k + i - j)`, truncated.
fn double_sum(noise: &CovarianceModel, theta: f64, k: i64, limit: i64) -> f64 {
    let rho: Vec<f64> = (0..=(k + limit)).map(|l| noise.rho(l)).collect();
    let mut total = 0.0;
    let mut wi = 1.0;
    for i in 0..=limit {
        let mut wj = wi;
        for j in 0..=limit {
            total += wj * rho[(k + i - j).unsigned_abs() as usize];
            wj *= theta;
        }
        wi *= theta;
    }
    total
}

#[test]
fn reduced_forms_match_truncated_double_sums() {
    let models = [
        CovarianceModel::fgn(0.6).unwrap(),
        CovarianceModel::fgn(0.7).unwrap(),
        CovarianceModel::arfima(0.2).unwrap(),
    ];
    for noise in &models {
        for theta in [0.2, 0.5, 0.8] {
            let ctx = MomentContext::with_default_policy(Ar1Model::new(theta, noise.clone()).unwrap()).unwrap();
            let f = double_sum(noise, theta, 0, 2000);
            assert!((ctx.f_value() / f - 1.0).abs() < 1e-10, "{} {theta}", noise.tag());
            for k in [1i64, 5, 50] {
                let want = double_sum(noise, theta, k, 2000);
                assert!((ctx.r_cov(k) / want - 1.0).abs() < 1e-10, "{} {theta} k={k}", noise.tag());
            }
        }
    }
}

#[test]
fn derivative_agrees_with_central_difference() {
    let ctx = MomentContext::with_default_policy(Ar1Model::new(0.5, CovarianceModel::arfima(0.2).unwrap()).unwrap()).unwrap();
    let h = 1e-5;
    let fd = (ctx.f_theta(0.5 + h).unwrap() - ctx.f_theta(0.5 - h).unwrap()) / (2.0 * h);
    assert!((ctx.f_prime_value() / fd - 1.0).abs() < 1e-7);
}

#[test]
fn white_noise_closed_forms() {
    let ctx = MomentContext::with_default_policy(Ar1Model::new(0.5, CovarianceModel::white_noise()).unwrap()).unwrap();
    assert!((ctx.f_value() - 4.0 / 3.0).abs() < 1e-10);
    assert!((ctx.f_prime_value() - 16.0 / 9.0).abs() < 1e-10);
    assert!((ctx.r_cov(1) - 2.0 / 3.0).abs() < 1e-10);
    assert!((ctx.sigma_h2().unwrap() - 160.0 / 27.0).abs() < 1e-10);
}

#[test]
fn positive_memory_raises_f_above_white_baseline() {
    let ctx = MomentContext::with_default_policy(Ar1Model::new(0.9, CovarianceModel::arfima(0.2).unwrap()).unwrap()).unwrap();
    assert!(ctx.f_value() > 1.0 / (1.0 - 0.81));
}
