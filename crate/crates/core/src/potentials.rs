//! Torus-invariant metrics on CP^1 through their symplectic potentials.
//!
//! A metric is described by `G(x) = G_P(x) + f(x)` on the moment interval
//! `[0, 1]`, where `G_P(x) = x log x + (1 - x) log(1 - x)` is the canonical
//! potential and `f` is a polynomial perturbation. The Kähler potential in the
//! radial coordinate `rho = log |z|^2` is the Legendre dual
//! `U(rho) = x rho - G(x)` with `G'(x) = rho`. Monge-Ampère geodesics are the
//! straight lines `G_t = (1 - t) G_0 + t G_1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::roots::newton_bisect;

/// Minimum number of grid points used to certify convexity.
pub const MIN_GRID_RESOLUTION: usize = 1000;

/// Safety factor applied to the grid minimum of `x(1-x)G''`.
pub const MARGIN_SAFETY: f64 = 0.99;

/// Relative residual target for `G'(x) = rho`.
pub const ROOT_TOL: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 100;

#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Numerically stable `log(1 + e^s)`.
#[inline]
pub(crate) fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// Logistic function `e^s / (1 + e^s)`.
#[inline]
pub(crate) fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// The canonical potential `G_P` and its first two derivatives.
pub fn canonical_potential(x: f64, order: u8) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("canonical_potential", format!("x = {x} outside [0, 1]")));
    }
    match order {
        0 => Ok(xlogx(x) + xlogx(1.0 - x)),
        1 | 2 if x == 0.0 || x == 1.0 => Err(Error::domain(
            "canonical_potential",
            format!("derivative of order {order} diverges at x = {x}"),
        )),
        1 => Ok((x / (1.0 - x)).ln()),
        2 => Ok(1.0 / (x * (1.0 - x))),
        _ => Err(Error::domain("canonical_potential", format!("unsupported order {order}"))),
    }
}

/// Symplectic potential `G = G_P + f` with a certified convexity margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPotential {
    f: Polynomial,
    df: Polynomial,
    d2f: Polynomial,
    /// Certified lower bound for `x(1-x)G''(x)` on `(0, 1)`.
    pub convexity_margin: f64,
    /// Raw minimum of `x(1-x)G''` over the validation grid.
    pub grid_minimum: f64,
    pub grid_resolution: usize,
}

impl MetricPotential {
    /// The canonical metric, `f = 0`.
    pub fn canonical() -> Self {
        make_metric(&[0.0], MIN_GRID_RESOLUTION).expect("canonical potential is convex")
    }

    pub fn perturbation(&self) -> &Polynomial {
        &self.f
    }

    pub fn f_coeffs(&self) -> &[f64] {
        self.f.coeffs()
    }

    pub fn is_canonical(&self) -> bool {
        self.f.is_zero()
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    #[inline]
    pub fn df(&self, x: f64) -> f64 {
        self.df.eval(x)
    }

    #[inline]
    pub fn d2f(&self, x: f64) -> f64 {
        self.d2f.eval(x)
    }

    /// `G(x)` on the closed interval (`0 log 0 = 0`).
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        xlogx(x) + xlogx(1.0 - x) + self.f(x)
    }

    /// `G'(x)` for `x` in `(0, 1)`.
    #[inline]
    pub fn g1(&self, x: f64) -> f64 {
        (x / (1.0 - x)).ln() + self.df(x)
    }

    /// `G''(x)` for `x` in `(0, 1)`.
    #[inline]
    pub fn g2(&self, x: f64) -> f64 {
        1.0 / (x * (1.0 - x)) + self.d2f(x)
    }

    /// `x(1-x)G''(x) = 1 + x(1-x)f''(x)`, finite on the closed interval.
    #[inline]
    pub fn scaled_hessian(&self, x: f64) -> f64 {
        1.0 + x * (1.0 - x) * self.d2f(x)
    }

    /// Stable identifier derived from the coefficient bits, trailing zeros ignored.
    pub fn id(&self) -> MetricId {
        let coeffs = self.f.coeffs();
        let len = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        MetricId(coeffs[..len].iter().map(|c| c.to_bits()).collect())
    }
}

/// Opaque, hashable identity of a [`MetricPotential`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetricId(Vec<u64>);

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f=[")?;
        for (i, bits) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{:e}", f64::from_bits(*bits))?;
        }
        write!(f, "]")
    }
}

/// Validates a polynomial perturbation and certifies its convexity margin.
pub fn make_metric(f_coeffs: &[f64], grid_resolution: usize) -> Result<MetricPotential> {
    if f_coeffs.is_empty() {
        return Err(Error::domain("make_metric", "empty coefficient list"));
    }
    if let Some(c) = f_coeffs.iter().find(|c| !c.is_finite()) {
        return Err(Error::domain("make_metric", format!("non-finite coefficient {c}")));
    }
    if grid_resolution < MIN_GRID_RESOLUTION {
        return Err(Error::domain(
            "make_metric",
            format!("grid_resolution {grid_resolution} below {MIN_GRID_RESOLUTION}"),
        ));
    }
    let f = Polynomial::new(f_coeffs.to_vec());
    let df = f.derivative();
    let d2f = df.derivative();

    // Endpoints contribute exactly 1; interior points sample 1 + x(1-x)f''.
    let last = (grid_resolution - 1) as f64;
    let (argmin, min) = (0..grid_resolution)
        .map(|i| {
            let x = i as f64 / last;
            (x, 1.0 + x * (1.0 - x) * d2f.eval(x))
        })
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if min <= 0.0 {
        return Err(Error::NonConvex { x: argmin, value: min });
    }
    Ok(MetricPotential {
        f,
        df,
        d2f,
        convexity_margin: MARGIN_SAFETY * min,
        grid_minimum: min,
        grid_resolution,
    })
}

/// Endpoint pair of a Monge-Ampère geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicFamily {
    pub m0: MetricPotential,
    pub m1: MetricPotential,
    velocity: Polynomial,
    dvelocity: Polynomial,
}

impl GeodesicFamily {
    pub fn new(m0: MetricPotential, m1: MetricPotential) -> Self {
        let velocity = Polynomial::sub(m1.perturbation(), m0.perturbation());
        let dvelocity = velocity.derivative();
        GeodesicFamily { m0, m1, velocity, dvelocity }
    }

    /// `v(x) = f_1(x) - f_0(x)`.
    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        self.velocity.eval(x)
    }

    #[inline]
    pub fn dv(&self, x: f64) -> f64 {
        self.dvelocity.eval(x)
    }

    pub fn is_degenerate(&self) -> bool {
        self.velocity.is_zero()
    }
}

/// The metric at time `t` along the geodesic; `f_t = (1 - t) f_0 + t f_1`.
pub fn geodesic_metric(family: &GeodesicFamily, t: f64) -> Result<MetricPotential> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("geodesic_metric", format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(family.m0.clone());
    }
    if t == 1.0 {
        return Ok(family.m1.clone());
    }
    let f = Polynomial::lerp(family.m0.perturbation(), family.m1.perturbation(), t);
    let df = f.derivative();
    let d2f = df.derivative();
    let margin = family.m0.convexity_margin.min(family.m1.convexity_margin);
    Ok(MetricPotential {
        f,
        df,
        d2f,
        convexity_margin: margin,
        grid_minimum: family.m0.grid_minimum.min(family.m1.grid_minimum),
        grid_resolution: family.m0.grid_resolution.max(family.m1.grid_resolution),
    })
}

/// A point of the Legendre correspondence `rho = G'(x)`, `U = x rho - G(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualPoint {
    pub rho: f64,
    pub x: f64,
    /// `U(rho)`.
    pub u: f64,
    /// `log(x / (1 - x))`, kept so `1 - x` is available without cancellation.
    pub log_odds: f64,
}

impl DualPoint {
    pub fn one_minus_x(&self) -> f64 {
        logistic(-self.log_odds)
    }

    /// `x(1 - x)` evaluated without cancellation near `x = 1`.
    pub fn x_one_minus_x(&self) -> f64 {
        self.x * self.one_minus_x()
    }
}

/// Inverts `G'(x) = rho` and evaluates the Kähler potential `U(rho)`.
///
/// The solve runs in log-odds `s = log(x/(1-x))`, where the equation reads
/// `s + f'(logistic(s)) = rho` and its slope is `x(1-x)G''(x) >= margin`.
pub fn legendre_dual(m: &MetricPotential, rho: f64) -> Result<DualPoint> {
    legendre_dual_with(m, rho, ROOT_TOL)
}

/// [`legendre_dual`] with an explicit relative residual target.
pub fn legendre_dual_with(m: &MetricPotential, rho: f64, rel_tol: f64) -> Result<DualPoint> {
    if !rho.is_finite() {
        return Err(Error::domain("legendre_dual", format!("rho = {rho} is not finite")));
    }
    let slope_bound = m.df.abs_bound_unit();
    let tol = rel_tol * rho.abs().max(1.0);
    let root = newton_bisect(
        |s| {
            let x = logistic(s);
            let xm = x * logistic(-s);
            (s + m.df(x) - rho, 1.0 + xm * m.d2f(x))
        },
        rho - slope_bound - 1.0,
        rho + slope_bound + 1.0,
        tol,
        NEWTON_MAX_ITER,
    );
    let s = root.x;
    let x = logistic(s);
    let xm = logistic(-s);
    let g = -x * softplus(-s) - xm * softplus(s) + m.f(x);
    Ok(DualPoint { rho, x, u: x * rho - g, log_odds: s })
}

/// Exact first and second derivatives of the geodesic potential `U_t(rho)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaDerivatives {
    pub x: f64,
    pub u: f64,
    pub du_drho: f64,
    pub d2u_drho2: f64,
    pub du_dt: f64,
    pub d2u_dt2: f64,
    pub d2u_dtdrho: f64,
}

/// `U_t(rho)` together with all first and second space-time derivatives.
pub fn ma_derivatives(family: &GeodesicFamily, t: f64, rho: f64) -> Result<MaDerivatives> {
    let mt = geodesic_metric(family, t)?;
    let dual = legendre_dual(&mt, rho)?;
    let x = dual.x;
    // 1 / G_t''(x), written to stay accurate near the poles
    let inv_hess = dual.x_one_minus_x() / mt.scaled_hessian(x);
    let dv = family.dv(x);
    Ok(MaDerivatives {
        x,
        u: dual.u,
        du_drho: x,
        d2u_drho2: inv_hess,
        du_dt: -family.v(x),
        d2u_dt2: dv * dv * inv_hess,
        d2u_dtdrho: -dv * inv_hess,
    })
}
