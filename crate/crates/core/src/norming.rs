//! Norming constants of monomial sections and their comparison ratios.
//!
//! For height `N` and lattice index `k` (with `alpha = k/N`), the squared
//! `L^2` norm of `z^k` is
//!
//! ```text
//! 𝒬^N(alpha) = 2π ∫_0^1 e^{-N F_alpha(x)} dx · e^{N G(alpha)},   Q^N(alpha) = 𝒬^N(alpha) e^{-N G(alpha)}.
//! ```
//!
//! For the canonical potential the integral is a Beta function, which gives
//! an exact reference independent of the quadrature.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::potentials::{geodesic_metric, xlogx, GeodesicFamily, MetricId, MetricPotential};
use crate::quadrature::{log_laplace_with, LaplaceOptions};

/// Relative tolerance for the two algebraic routes to `R`.
pub const R_ROUTE_TOL: f64 = 1e-8;

#[inline]
fn ln_2pi() -> f64 {
    (2.0 * PI).ln()
}

#[inline]
fn lattice_alpha(n: usize, k: usize) -> f64 {
    k as f64 / n as f64
}

/// Log norming constants of one metric at one height.
#[derive(Clone, Debug, PartialEq)]
pub struct NormingTable {
    pub n: usize,
    /// `log 𝒬^N(k/N)` for `k = 0..=N`.
    pub log_qcal: Vec<f64>,
    /// `log Q^N(k/N) = log 𝒬^N(k/N) - N G(k/N)`.
    pub log_q: Vec<f64>,
    pub metric_id: MetricId,
}

impl NormingTable {
    pub fn alpha(&self, k: usize) -> f64 {
        lattice_alpha(self.n, k)
    }

    /// Writes `k, alpha, log_Qcal, log_Q, q` rows after a `#` header line
    /// naming the metric and height.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# metric={} N={}", self.metric_id, self.n)?;
        writeln!(w, "k,alpha,log_Qcal,log_Q,q")?;
        for k in 0..=self.n {
            let q = (self.log_q[k] - canonical_log_q(self.n, k)).exp();
            writeln!(
                w,
                "{},{},{},{},{}",
                k,
                fmt_f64(self.alpha(k)),
                fmt_f64(self.log_qcal[k]),
                fmt_f64(self.log_q[k]),
                fmt_f64(q)
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds the norming table for every lattice index, in parallel over `k`.
pub fn build_norming_table(m: &MetricPotential, n: usize) -> Result<NormingTable> {
    build_norming_table_with(m, n, LaplaceOptions::default())
}

pub fn build_norming_table_with(m: &MetricPotential, n: usize, opts: LaplaceOptions) -> Result<NormingTable> {
    if n == 0 {
        return Err(Error::domain("build_norming_table", "N must be positive"));
    }
    let nf = n as f64;
    let log_q = (0..=n)
        .into_par_iter()
        .map(|k| Ok(ln_2pi() + log_laplace_with(m, n, lattice_alpha(n, k), opts)?))
        .collect::<Result<Vec<f64>>>()?;
    let log_qcal = log_q
        .iter()
        .enumerate()
        .map(|(k, lq)| lq + nf * m.g(lattice_alpha(n, k)))
        .collect();
    Ok(NormingTable { n, log_qcal, log_q, metric_id: m.id() })
}

/// Exact `log 𝒬_P^N(k/N) = log 2π + log B(k+1, N-k+1)` for the canonical metric.
pub fn canonical_reference(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::domain("canonical_reference", format!("k = {k} exceeds N = {n}")));
    }
    Ok(ln_2pi() + ln_beta((k + 1) as f64, (n - k + 1) as f64))
}

/// Exact canonical `log Q_P^N(k/N)`; `k <= N` is the caller's responsibility.
pub fn canonical_log_q(n: usize, k: usize) -> f64 {
    let a = lattice_alpha(n, k);
    ln_2pi() + ln_beta((k + 1) as f64, (n - k + 1) as f64) - n as f64 * (xlogx(a) + xlogx(1.0 - a))
}

/// `q^N(k/N) = Q^N(k/N) / Q_P^N(k/N)`.
pub fn q_ratio(table: &NormingTable, n: usize, k: usize) -> Result<f64> {
    if table.n != n {
        return Err(Error::domain("q_ratio", format!("table built at N = {}, asked for N = {n}", table.n)));
    }
    if k > n {
        return Err(Error::domain("q_ratio", format!("k = {k} exceeds N = {n}")));
    }
    Ok((table.log_q[k] - canonical_log_q(n, k)).exp())
}

/// Limit of `q`: `sqrt(G_P''(alpha) / G_t''(alpha))`, equal to 1 at the vertices.
pub fn omega(family: &GeodesicFamily, t: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain("omega", format!("alpha = {alpha} outside [0, 1]")));
    }
    let mt = geodesic_metric(family, t)?;
    Ok(omega_of(&mt, alpha))
}

pub(crate) fn omega_of(m: &MetricPotential, alpha: f64) -> f64 {
    1.0 / m.scaled_hessian(alpha).sqrt()
}

/// Stirling approximation of `log C(N, k)` in the interior regime.
pub fn stirling_reference(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::domain("stirling_reference", format!("k = {k} exceeds N = {n}")));
    }
    let nf = n as f64;
    let floor = nf.powf(0.25);
    if ((k.min(n - k)) as f64) < floor {
        return Err(Error::domain(
            "stirling_reference",
            format!("k = {k} within N^(1/4) = {floor:.3} of a vertex"),
        ));
    }
    let a = lattice_alpha(n, k);
    Ok(-0.5 * (2.0 * PI * nf * a * (1.0 - a)).ln() - nf * (xlogx(a) + xlogx(1.0 - a)))
}

/// `log C(N, k)` through log-gamma.
pub fn log_binomial(n: usize, k: usize) -> f64 {
    ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
}

/// Thread-safe memo of norming tables keyed by metric identity and height.
#[derive(Debug)]
pub struct TableCache {
    opts: LaplaceOptions,
    tables: Mutex<HashMap<(MetricId, usize), Arc<NormingTable>>>,
}

impl Default for TableCache {
    fn default() -> Self {
        TableCache::new(LaplaceOptions::default())
    }
}

impl TableCache {
    pub fn new(opts: LaplaceOptions) -> Self {
        TableCache { opts, tables: Mutex::new(HashMap::new()) }
    }

    pub fn get(&self, m: &MetricPotential, n: usize) -> Result<Arc<NormingTable>> {
        let key = (m.id(), n);
        if let Some(hit) = self.tables.lock().expect("table cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        // Built outside the lock; a racing duplicate build yields the same table.
        let table = Arc::new(build_norming_table_with(m, n, self.opts)?);
        let mut guard = self.tables.lock().expect("table cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(table)))
    }

    /// Table for the geodesic metric at time `t`.
    pub fn get_at(&self, family: &GeodesicFamily, t: f64, n: usize) -> Result<Arc<NormingTable>> {
        self.get(&geodesic_metric(family, t)?, n)
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("table cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `q` at both endpoints and `R` at time `t`, per lattice index.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioTable {
    pub n: usize,
    pub t: f64,
    pub q0: Vec<f64>,
    pub q1: Vec<f64>,
    pub r: Vec<f64>,
}

/// `log R` from the rescaled constants `Q`, and from the raw `𝒬`.
fn log_r_routes(t0: &NormingTable, t1: &NormingTable, tt: &NormingTable, t: f64, k: usize) -> (f64, f64) {
    let via_q = tt.log_q[k] - (1.0 - t) * t0.log_q[k] - t * t1.log_q[k];
    let via_qcal = tt.log_qcal[k] - (1.0 - t) * t0.log_qcal[k] - t * t1.log_qcal[k];
    (via_q, via_qcal)
}

fn checked_r(t0: &NormingTable, t1: &NormingTable, tt: &NormingTable, t: f64, k: usize) -> Result<f64> {
    let (via_q, via_qcal) = log_r_routes(t0, t1, tt, t, k);
    let r = via_q.exp();
    let gap = (via_q - via_qcal).exp_m1().abs();
    if gap.is_nan() || gap > R_ROUTE_TOL {
        return Err(Error::Consistency {
            check: "R via Q vs R via Qcal",
            n: tt.n,
            t,
            rho: f64::NAN,
            k: Some(k),
            gap,
            tol: R_ROUTE_TOL,
        });
    }
    Ok(r)
}

/// `R_t^N(k/N) = Q_t / (Q_0^{1-t} Q_1^t)`, cross-checked against the `𝒬` route.
pub fn r_ratio(cache: &TableCache, family: &GeodesicFamily, t: f64, n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::domain("r_ratio", format!("k = {k} exceeds N = {n}")));
    }
    let t0 = cache.get(&family.m0, n)?;
    let t1 = cache.get(&family.m1, n)?;
    let tt = cache.get_at(family, t, n)?;
    checked_r(&t0, &t1, &tt, t, k)
}

/// All ratios at one `(t, N)`.
pub fn ratio_table(cache: &TableCache, family: &GeodesicFamily, t: f64, n: usize) -> Result<RatioTable> {
    let t0 = cache.get(&family.m0, n)?;
    let t1 = cache.get(&family.m1, n)?;
    let tt = cache.get_at(family, t, n)?;
    let q0 = (0..=n).map(|k| q_ratio(&t0, n, k)).collect::<Result<Vec<_>>>()?;
    let q1 = (0..=n).map(|k| q_ratio(&t1, n, k)).collect::<Result<Vec<_>>>()?;
    let r = (0..=n).map(|k| checked_r(&t0, &t1, &tt, t, k)).collect::<Result<Vec<_>>>()?;
    Ok(RatioTable { n, t, q0, q1, r })
}
