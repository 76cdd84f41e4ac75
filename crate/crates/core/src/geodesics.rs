//! Bergman geodesics of height `N` as lattice free energies.
//!
//! In the radial coordinate the Bergman potential is
//!
//! ```text
//! u_N(t, rho) = (1/N) log Σ_k exp(k rho - (1-t) log 𝒬_0(k/N) - t log 𝒬_1(k/N)),
//! ```
//!
//! a log-partition function over the lattice `{0, ..., N}`. All of its space
//! and time derivatives are moments of the corresponding softmax weights.

use crate::error::{Error, Result};
use crate::norming::{NormingTable, TableCache};
use crate::potentials::{geodesic_metric, legendre_dual, GeodesicFamily};
use crate::quadrature::log_sum_exp;

/// Default relative tolerance for the two routes to `E_N`.
pub const E_ROUTE_TOL: f64 = 1e-8;

/// Endpoint norming data defining `u_N(t, rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BergmanFreeEnergy {
    pub n: usize,
    pub log_qcal0: Vec<f64>,
    pub log_qcal1: Vec<f64>,
    /// `log 𝒬_1 - log 𝒬_0`, the time-direction exponent.
    pub d: Vec<f64>,
}

impl BergmanFreeEnergy {
    pub fn new(table0: &NormingTable, table1: &NormingTable) -> Result<Self> {
        if table0.n != table1.n {
            return Err(Error::domain(
                "BergmanFreeEnergy::new",
                format!("endpoint heights differ: {} vs {}", table0.n, table1.n),
            ));
        }
        let d = table1.log_qcal.iter().zip(&table0.log_qcal).map(|(b, a)| b - a).collect();
        Ok(BergmanFreeEnergy {
            n: table0.n,
            log_qcal0: table0.log_qcal.clone(),
            log_qcal1: table1.log_qcal.clone(),
            d,
        })
    }

    /// Softmax logits `k rho - log 𝒬_0[k] - t d[k]`.
    fn logits(&self, t: f64, rho: f64) -> Vec<f64> {
        self.log_qcal0
            .iter()
            .zip(&self.d)
            .enumerate()
            .map(|(k, (c0, d))| k as f64 * rho - c0 - t * d)
            .collect()
    }
}

fn check_point(op: &'static str, t: f64, rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(op, format!("t = {t} outside [0, 1]")));
    }
    if !rho.is_finite() {
        return Err(Error::domain(op, format!("rho = {rho} is not finite")));
    }
    Ok(())
}

/// `u_N(t, rho)`, the full Bergman potential with the reference weight folded in.
pub fn free_energy(fe: &BergmanFreeEnergy, t: f64, rho: f64) -> Result<f64> {
    check_point("free_energy", t, rho)?;
    Ok(log_sum_exp(&fe.logits(t, rho)) / fe.n as f64)
}

/// Softmax weights over the lattice and their first two moments.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxMoments {
    pub n: usize,
    pub p: Vec<f64>,
    pub mean_alpha: f64,
    pub var_alpha: f64,
    pub mean_d: f64,
    pub var_d: f64,
    pub cov_alpha_d: f64,
}

impl SoftmaxMoments {
    /// `∂_rho u_N`.
    pub fn d_rho(&self) -> f64 {
        self.mean_alpha
    }

    /// `∂²_rho u_N`.
    pub fn d2_rho(&self) -> f64 {
        self.n as f64 * self.var_alpha
    }

    /// `∂_t u_N`.
    pub fn d_t(&self) -> f64 {
        -self.mean_d / self.n as f64
    }

    /// `∂²_t u_N`.
    pub fn d2_t(&self) -> f64 {
        self.var_d / self.n as f64
    }

    /// `∂_t ∂_rho u_N`.
    pub fn d2_t_rho(&self) -> f64 {
        -self.cov_alpha_d
    }
}

pub fn moments(fe: &BergmanFreeEnergy, t: f64, rho: f64) -> Result<SoftmaxMoments> {
    check_point("moments", t, rho)?;
    let logits = fe.logits(t, rho);
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|w| *w /= total);

    let nf = fe.n as f64;
    let (mut mean_alpha, mut mean_d) = (0.0, 0.0);
    for (k, (&w, &d)) in p.iter().zip(&fe.d).enumerate() {
        mean_alpha += w * (k as f64 / nf);
        mean_d += w * d;
    }
    let (mut var_alpha, mut var_d, mut cov) = (0.0, 0.0, 0.0);
    for (k, (&w, &d)) in p.iter().zip(&fe.d).enumerate() {
        let da = k as f64 / nf - mean_alpha;
        let dd = d - mean_d;
        var_alpha += w * da * da;
        var_d += w * dd * dd;
        cov += w * da * dd;
    }
    Ok(SoftmaxMoments {
        n: fe.n,
        p,
        mean_alpha,
        var_alpha,
        mean_d,
        var_d,
        cov_alpha_d: cov,
    })
}

/// `log E_N(t, rho) = N (u_N(t, rho) - U_t(rho))`.
///
/// The value is recomputed as `log Σ_k R_t(k/N) P_k(t, rho)` with
/// `P_k = e^{k rho - N U_t(rho)} / 𝒬_t(k/N)`, and the two must agree to `tol`.
pub fn e_function(
    cache: &TableCache,
    family: &GeodesicFamily,
    fe: &BergmanFreeEnergy,
    t: f64,
    rho: f64,
    tol: f64,
) -> Result<f64> {
    check_point("e_function", t, rho)?;
    let n = fe.n;
    let nf = n as f64;
    let mt = geodesic_metric(family, t)?;
    let big_u = legendre_dual(&mt, rho)?.u;
    let direct = nf * (free_energy(fe, t, rho)? - big_u);

    let t0 = cache.get(&family.m0, n)?;
    let t1 = cache.get(&family.m1, n)?;
    let tt = cache.get(&mt, n)?;
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let log_r = tt.log_q[k] - (1.0 - t) * t0.log_q[k] - t * t1.log_q[k];
            log_r + k as f64 * rho - nf * big_u - tt.log_qcal[k]
        })
        .collect();
    let via_r = log_sum_exp(&terms);
    let gap = (via_r - direct).exp_m1().abs();
    if gap.is_nan() || gap > tol {
        return Err(Error::Consistency {
            check: "E_N direct vs sum of R P",
            n,
            t,
            rho,
            k: None,
            gap,
            tol,
        });
    }
    Ok(direct)
}

/// `log Π_N(t, rho)` with each section normalised by its `L^2` norm `𝒬_t`.
pub fn log_szego(cache: &TableCache, family: &GeodesicFamily, t: f64, n: usize, rho: f64) -> Result<f64> {
    check_point("szego", t, rho)?;
    let mt = geodesic_metric(family, t)?;
    let big_u = legendre_dual(&mt, rho)?.u;
    let tt = cache.get(&mt, n)?;
    let nf = n as f64;
    let terms: Vec<f64> = (0..=n).map(|k| k as f64 * rho - nf * big_u - tt.log_qcal[k]).collect();
    Ok(log_sum_exp(&terms))
}

/// Szegő kernel `Π_N(t, rho)`.
pub fn szego(cache: &TableCache, family: &GeodesicFamily, t: f64, n: usize, rho: f64) -> Result<f64> {
    Ok(log_szego(cache, family, t, n, rho)?.exp())
}

/// One row of a geodesic evaluation dump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicSample {
    pub t: f64,
    pub rho: f64,
    pub u_n: f64,
    pub phi_n: f64,
    pub d_rho: f64,
    pub d2_rho: f64,
    pub d_t: f64,
    pub d2_t: f64,
    pub d2_t_rho: f64,
    pub log_e: f64,
    pub log_pi: f64,
}

impl GeodesicSample {
    pub const CSV_HEADER: &'static str = "t,rho,u_N,phi_N,d_rho,d2_rho,d_t,d2_t,d2_t_rho,log_E,log_Pi";

    pub fn fields(&self) -> [f64; 11] {
        [
            self.t,
            self.rho,
            self.u_n,
            self.phi_n,
            self.d_rho,
            self.d2_rho,
            self.d_t,
            self.d2_t,
            self.d2_t_rho,
            self.log_e,
            self.log_pi,
        ]
    }
}

/// Evaluates every channel at one `(t, rho)`.
///
/// `phi_N` is taken relative to the `t = 0` reference potential `U_0(rho)`.
pub fn sample(
    cache: &TableCache,
    family: &GeodesicFamily,
    fe: &BergmanFreeEnergy,
    t: f64,
    rho: f64,
    tol: f64,
) -> Result<GeodesicSample> {
    let u_n = free_energy(fe, t, rho)?;
    let mom = moments(fe, t, rho)?;
    let u_ref = legendre_dual(&family.m0, rho)?.u;
    Ok(GeodesicSample {
        t,
        rho,
        u_n,
        phi_n: u_n - u_ref,
        d_rho: mom.d_rho(),
        d2_rho: mom.d2_rho(),
        d_t: mom.d_t(),
        d2_t: mom.d2_t(),
        d2_t_rho: mom.d2_t_rho(),
        log_e: e_function(cache, family, fe, t, rho, tol)?,
        log_pi: log_szego(cache, family, t, fe.n, rho)?,
    })
}
