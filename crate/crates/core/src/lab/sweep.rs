use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geodesics::{sample, BergmanFreeEnergy, GeodesicSample};
use crate::norming::{canonical_log_q, omega_of, ratio_table, TableCache};
use crate::potentials::{geodesic_metric, legendre_dual_with, GeodesicFamily};
use crate::quadrature::LaplaceOptions;

/// Moment-coordinate window for the second-derivative channels.
pub const INTERIOR: (f64, f64) = (0.2, 0.8);

/// Absolute floor for the time and mixed second-derivative channels.
const C2_FLOOR: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub log_corrected: Vec<f64>,
}

/// Least-squares slope of `log err` against `log N`, and `err N / log N`.
pub fn fit_rate(errors: &[f64], ns: &[usize]) -> Result<RateFit> {
    if errors.len() != ns.len() {
        return Err(Error::domain("fit_rate", format!("{} errors for {} heights", errors.len(), ns.len())));
    }
    if errors.len() < 3 {
        return Err(Error::domain("fit_rate", "need at least three points"));
    }
    if let Some(e) = errors.iter().find(|e| e.is_nan() || **e <= 0.0) {
        return Err(Error::domain("fit_rate", format!("non-positive error {e}")));
    }
    if ns.contains(&0) {
        return Err(Error::domain("fit_rate", "heights must be positive"));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit_rate", "all heights are equal"));
    }
    let log_corrected = errors.iter().zip(ns).map(|(e, &n)| e * n as f64 / (n as f64).ln()).collect();
    Ok(RateFit { slope: sxy / sxx, log_corrected })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FittedRates {
    pub c0: Option<RateFit>,
    pub c2_rho: Option<RateFit>,
    pub c2_tt: Option<RateFit>,
    pub c2_mixed: Option<RateFit>,
    pub q: Option<RateFit>,
    pub boundary_q: Option<RateFit>,
}

/// Per-height error channels, aligned with `n_schedule`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_schedule: Vec<usize>,
    /// Sup over the `(t, rho)` grid of `|u_N - U_t|`.
    pub c0_err: Vec<f64>,
    /// Relative gap of `∂²_rho u_N` against `1/G_t''(x)` on the interior grid.
    pub c2_err_rho: Vec<f64>,
    /// Floored relative gap of `∂²_t u_N` against `v'(x)^2/G_t''(x)`.
    pub c2_err_tt: Vec<f64>,
    /// Floored relative gap of `∂_t∂_rho u_N` against `-v'(x)/G_t''(x)`.
    pub c2_err_mixed: Vec<f64>,
    /// Max over lattice and `t_grid` of `|q - Omega|`.
    pub q_err: Vec<f64>,
    /// Same, restricted to `k/N` in the interior window.
    pub q_err_interior: Vec<f64>,
    /// Max over `t_grid` of `|q(1/N) - 1|`.
    pub boundary_q_err: Vec<f64>,
    /// Sup over the interior grid of `|Π_N 2π/N - 1|`.
    pub szego_gap: Vec<f64>,
    pub r_min: Vec<f64>,
    pub r_max: Vec<f64>,
    pub fitted_rates: FittedRates,
}

#[derive(Clone, Copy, Debug, Default)]
struct HeightErrors {
    c0: f64,
    c2_rho: f64,
    c2_tt: f64,
    c2_mixed: f64,
    q: f64,
    q_interior: f64,
    boundary_q: f64,
    szego: f64,
    r_min: f64,
    r_max: f64,
}

struct PointErrors {
    c0: f64,
    interior: Option<[f64; 4]>,
}

fn in_interior(x: f64) -> bool {
    (INTERIOR.0..=INTERIOR.1).contains(&x)
}

fn point_errors(
    cfg: &ExperimentConfig,
    cache: &TableCache,
    family: &GeodesicFamily,
    fe: &BergmanFreeEnergy,
    t: f64,
    rho: f64,
) -> Result<PointErrors> {
    let mt = geodesic_metric(family, t)?;
    let dual = legendre_dual_with(&mt, rho, cfg.tolerances.root)?;
    let s = sample(cache, family, fe, t, rho, cfg.tolerances.identity)?;
    let c0 = (s.u_n - dual.u).abs();
    let x = dual.x;
    if !in_interior(x) {
        return Ok(PointErrors { c0, interior: None });
    }
    let inv_hess = dual.x_one_minus_x() / mt.scaled_hessian(x);
    let dv = family.dv(x);
    let tt_target = dv * dv * inv_hess;
    let mixed_target = -dv * inv_hess;
    let nf = fe.n as f64;
    Ok(PointErrors {
        c0,
        interior: Some([
            (s.d2_rho - inv_hess).abs() / inv_hess,
            (s.d2_t - tt_target).abs() / tt_target.abs().max(C2_FLOOR),
            (s.d2_t_rho - mixed_target).abs() / mixed_target.abs().max(C2_FLOOR),
            (s.log_pi.exp() * 2.0 * std::f64::consts::PI / nf - 1.0).abs(),
        ]),
    })
}

fn height_errors(cfg: &ExperimentConfig, cache: &TableCache, family: &GeodesicFamily, n: usize) -> Result<HeightErrors> {
    let fe = BergmanFreeEnergy::new(&*cache.get(&family.m0, n)?, &*cache.get(&family.m1, n)?)?;
    let grid: Vec<(f64, f64)> =
        cfg.t_grid.iter().flat_map(|&t| cfg.rho_grid.iter().map(move |&r| (t, r))).collect();
    let points = grid
        .par_iter()
        .map(|&(t, rho)| point_errors(cfg, cache, family, &fe, t, rho))
        .collect::<Result<Vec<_>>>()?;

    let mut out = HeightErrors { r_min: f64::INFINITY, ..HeightErrors::default() };
    for p in &points {
        out.c0 = out.c0.max(p.c0);
        if let Some([rho, tt, mixed, szego]) = p.interior {
            out.c2_rho = out.c2_rho.max(rho);
            out.c2_tt = out.c2_tt.max(tt);
            out.c2_mixed = out.c2_mixed.max(mixed);
            out.szego = out.szego.max(szego);
        }
    }

    for &t in &cfg.t_grid {
        let mt = geodesic_metric(family, t)?;
        let table = cache.get(&mt, n)?;
        for k in 0..=n {
            let alpha = table.alpha(k);
            let q = (table.log_q[k] - canonical_log_q(n, k)).exp();
            let gap = (q - omega_of(&mt, alpha)).abs();
            out.q = out.q.max(gap);
            if in_interior(alpha) {
                out.q_interior = out.q_interior.max(gap);
            }
            if k == 1 {
                out.boundary_q = out.boundary_q.max((q - 1.0).abs());
            }
        }
        let ratios = ratio_table(cache, family, t, n)?;
        for &r in &ratios.r {
            out.r_min = out.r_min.min(r);
            out.r_max = out.r_max.max(r);
        }
    }
    Ok(out)
}

fn fit_channel(values: &[f64], ns: &[usize]) -> Option<RateFit> {
    fit_rate(values, ns).ok()
}

/// Runs the full sweep over `n_schedule`. Output is independent of the
/// rayon pool size: parallel stages only produce ordered collections and
/// every reduction runs sequentially in schedule and grid order.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let family = cfg.family()?;
    let cache = TableCache::new(LaplaceOptions { rel_tol: cfg.tolerances.quadrature });
    let per_n = cfg
        .n_schedule
        .par_iter()
        .map(|&n| height_errors(cfg, &cache, &family, n))
        .collect::<Result<Vec<_>>>()?;

    let channel = |f: fn(&HeightErrors) -> f64| per_n.iter().map(f).collect::<Vec<f64>>();
    let ns = &cfg.n_schedule;
    let c0_err = channel(|h| h.c0);
    let c2_err_rho = channel(|h| h.c2_rho);
    let c2_err_tt = channel(|h| h.c2_tt);
    let c2_err_mixed = channel(|h| h.c2_mixed);
    let q_err = channel(|h| h.q);
    let boundary_q_err = channel(|h| h.boundary_q);
    let fitted_rates = FittedRates {
        c0: fit_channel(&c0_err, ns),
        c2_rho: fit_channel(&c2_err_rho, ns),
        c2_tt: fit_channel(&c2_err_tt, ns),
        c2_mixed: fit_channel(&c2_err_mixed, ns),
        q: fit_channel(&q_err, ns),
        boundary_q: fit_channel(&boundary_q_err, ns),
    };
    Ok(ConvergenceReport {
        n_schedule: ns.clone(),
        c0_err,
        c2_err_rho,
        c2_err_tt,
        c2_err_mixed,
        q_err,
        q_err_interior: channel(|h| h.q_interior),
        boundary_q_err,
        szego_gap: channel(|h| h.szego),
        r_min: channel(|h| h.r_min),
        r_max: channel(|h| h.r_max),
        fitted_rates,
    })
}

/// Evaluates every geodesic channel on the configured `(t, rho)` grid at height `n`.
pub fn evaluate_geodesic(cfg: &ExperimentConfig, cache: &TableCache, n: usize) -> Result<Vec<GeodesicSample>> {
    let family = cfg.family()?;
    let fe = BergmanFreeEnergy::new(&*cache.get(&family.m0, n)?, &*cache.get(&family.m1, n)?)?;
    let grid: Vec<(f64, f64)> =
        cfg.t_grid.iter().flat_map(|&t| cfg.rho_grid.iter().map(move |&r| (t, r))).collect();
    grid.par_iter()
        .map(|&(t, rho)| sample(cache, &family, &fe, t, rho, cfg.tolerances.identity))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_rate_examples() {
        let exact = fit_rate(&[1.0, 0.5, 0.25], &[1, 2, 4]).unwrap();
        assert!((exact.slope + 1.0).abs() < 1e-14);

        let ns = [4usize, 16, 64, 256];
        let errs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln() / n as f64).collect();
        let fit = fit_rate(&errs, &ns).unwrap();
        assert!(fit.log_corrected.iter().all(|v| (v - 1.0).abs() < 1e-14));

        assert!(fit_rate(&[0.3, 0.3, 0.3], &[2, 8, 32]).unwrap().slope.abs() < 1e-14);
    }

    #[test]
    fn fit_rate_rejects_bad_input() {
        assert!(fit_rate(&[1.0, 0.0, 0.5], &[2, 4, 8]).is_err());
        assert!(fit_rate(&[1.0, -1.0, 0.5], &[2, 4, 8]).is_err());
        assert!(fit_rate(&[1.0, 0.5], &[2, 4]).is_err());
        assert!(fit_rate(&[1.0, 0.5, 0.2], &[2, 4]).is_err());
        assert!(fit_rate(&[1.0, 0.5, 0.2], &[4, 4, 4]).is_err());
    }
}
