//! Figures for experiment output.

use lmar_core::experiments::ExperimentKind;
use lmar_core::special::normal_cdf;
use lmar_core::ExperimentResult;

use crate::svg::{Axis, Figure, Series, Style};

fn phi_curve(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..=200)
        .map(|i| {
            let z = lo + (hi - lo) * i as f64 / 200.0;
            (z, normal_cdf(z))
        })
        .collect()
}

/// Empirical CDF of `G_n` at the largest `n` against `Phi`.
pub fn ecdf_figure(result: &ExperimentResult) -> Option<Figure> {
    let n = *result.config.n_values.last()?;
    let mut g: Vec<f64> = result
        .records
        .iter()
        .filter(|r| r.n == n)
        .filter_map(|r| r.normalized_error)
        .collect();
    if g.is_empty() {
        return None;
    }
    g.sort_by(f64::total_cmp);
    let m = g.len() as f64;
    let lo = g[0].min(-3.0);
    let hi = g[g.len() - 1].max(3.0);
    let mut steps = vec![(lo, 0.0)];
    steps.extend(g.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / m)));
    steps.push((hi, 1.0));
    Some(Figure {
        title: format!("Empirical CDF of G_n, n = {n}"),
        x: Axis::linear("z"),
        y: Axis::linear("P(G_n <= z)"),
        series: vec![
            Series::new("empirical", "#1f77b4", Style::Step, steps),
            Series::new("standard normal", "#d62728", Style::Line, phi_curve(lo, hi)),
        ],
    })
}

/// `d_n` against `n` with the rate curve (scaled through the first point),
/// the total-variation bound and the Monte Carlo floor.
pub fn rate_figure(result: &ExperimentResult) -> Option<Figure> {
    let agg = &result.aggregates.per_n;
    let d: Vec<(f64, f64)> = agg
        .iter()
        .filter_map(|a| Some((a.n as f64, a.ks_distance?)))
        .collect();
    if d.is_empty() {
        return None;
    }
    let mut series = vec![
        Series::new("d_n", "black", Style::Markers, d.clone()),
        Series::new("d_n", "black", Style::Line, d.clone()),
    ];
    let rows = &result.theory.rows;
    let rates: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.n as f64, r.be_rate?))).collect();
    if let Some(&(_, first)) = rates.first() {
        let scale = d[0].1 / first;
        let label = format!("C n^-{:.3}", result.theory.rate_exponent.unwrap_or(f64::NAN));
        series.push(Series::new(
            label,
            "#d62728",
            Style::Line,
            rates.iter().map(|&(n, r)| (n, scale * r)).collect(),
        ));
    }
    series.push(Series::new(
        "d_TV bound",
        "#2ca02c",
        Style::Line,
        rows.iter().map(|r| (r.n as f64, r.dtv_bound)).collect(),
    ));
    series.push(Series::new(
        "MC floor",
        "gray",
        Style::Dashed,
        agg.iter().filter_map(|a| Some((a.n as f64, a.noise_floor?))).collect(),
    ));
    Some(Figure {
        title: "Distance to normal".into(),
        x: Axis::log("n"),
        y: Axis::log("sup |F_n - Phi|"),
        series,
    })
}

/// Mean log-average against `z`, per-replicate values, and `Phi(z)`.
pub fn asclt_figure(result: &ExperimentResult) -> Option<Figure> {
    let rows = &result.aggregates.asclt;
    if rows.is_empty() {
        return None;
    }
    let zs: Vec<f64> = rows.iter().map(|r| r.z).collect();
    let lo = zs.iter().copied().fold(f64::INFINITY, f64::min).max(-8.0) - 1.0;
    let hi = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(8.0) + 1.0;
    let each: Vec<(f64, f64)> = result
        .asclt_records
        .iter()
        .filter_map(|a| Some((a.z, a.average?)))
        .collect();
    Some(Figure {
        title: "Log-averaged indicators".into(),
        x: Axis::linear("z"),
        y: Axis::linear("average"),
        series: vec![
            Series::new("replicates", "#aaaaaa", Style::Markers, each),
            Series::new(
                "mean",
                "#1f77b4",
                Style::Markers,
                rows.iter().filter_map(|r| Some((r.z, r.mean_average?))).collect(),
            ),
            Series::new("standard normal", "#d62728", Style::Line, phi_curve(lo, hi)),
        ],
    })
}

/// RMSE of the estimate against `n`.
pub fn rmse_figure(result: &ExperimentResult) -> Option<Figure> {
    let pts: Vec<(f64, f64)> = result
        .aggregates
        .per_n
        .iter()
        .filter_map(|a| Some((a.n as f64, a.rmse?)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    Some(Figure {
        title: "Estimation error".into(),
        x: Axis::log("n"),
        y: Axis::log("RMSE"),
        series: vec![
            Series::new("RMSE", "black", Style::Markers, pts.clone()),
            Series::new("RMSE", "black", Style::Line, pts),
        ],
    })
}

/// `(file name, figure)` pairs appropriate for the experiment kind.
pub fn figures(result: &ExperimentResult) -> Vec<(&'static str, Figure)> {
    let mut out = Vec::new();
    match result.config.experiment {
        ExperimentKind::Consistency => {
            out.extend(rmse_figure(result).map(|f| ("rmse.svg", f)));
            out.extend(ecdf_figure(result).map(|f| ("ecdf.svg", f)));
        }
        ExperimentKind::Clt => out.extend(ecdf_figure(result).map(|f| ("ecdf.svg", f))),
        ExperimentKind::BerryEsseen => {
            out.extend(ecdf_figure(result).map(|f| ("ecdf.svg", f)));
            out.extend(rate_figure(result).map(|f| ("rate.svg", f)));
        }
        ExperimentKind::Asclt => out.extend(asclt_figure(result).map(|f| ("asclt.svg", f))),
    }
    out
}
