//! Phase functions and log-domain Laplace-type integrals on the moment interval.
//!
//! For a metric with potential `G` and a parameter `alpha` in `[0, 1]`, the
//! phase `F_alpha(x) = (x - alpha) G'(x) - (G(x) - G(alpha))` is nonnegative
//! and vanishes only at `x = alpha`. The integral `∫_0^1 e^{-N F_alpha(x)} dx`
//! is a bump of width about `1/sqrt(N G''(alpha))`, so it is integrated with
//! composite Gauss-Legendre panels on a window around `alpha`. Mass outside
//! the window is bounded analytically from the convexity margin.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::potentials::MetricPotential;

/// Gauss-Legendre order used on every panel.
pub const GL_ORDER: usize = 20;

/// Default relative accuracy target for [`log_laplace`].
pub const DEFAULT_REL_TOL: f64 = 1e-13;

/// Certified bound on discarded tail mass relative to the kept mass.
pub const TAIL_TOL: f64 = 1e-14;

const INITIAL_HALF_WIDTHS: f64 = 8.0;
const MAX_DEPTH: u32 = 16;
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Nodes and weights of the order-20 rule on `[-1, 1]`.
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-17 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule[i] = (-x, w);
            rule[n - 1 - i] = (x, w);
        }
        rule
    })
}

/// Numerically stable `log(sum(exp(v)))` over a slice, in slice order.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Value and slope of a phase function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEval {
    pub value: f64,
    pub d1: f64,
    pub alpha: f64,
}

/// `F_alpha(x)` without argument checks.
///
/// The canonical part is written as a relative entropy,
/// `alpha log(alpha/x) + (1-alpha) log((1-alpha)/(1-x))`, which equals
/// `G_P(alpha) - alpha log x - (1-alpha) log(1-x)` with `0 log 0 = 0`.
#[inline]
pub(crate) fn phase_value(m: &MetricPotential, alpha: f64, f_alpha: f64, x: f64) -> f64 {
    let beta = 1.0 - alpha;
    let mut v = 0.0;
    if alpha > 0.0 {
        v += alpha * (alpha / x).ln();
    }
    if beta > 0.0 {
        v += beta * (beta / (1.0 - x)).ln();
    }
    v + f_alpha - m.f(x) + m.df(x) * (x - alpha)
}

/// Evaluates the phase and its slope `F'_alpha(x) = (x - alpha) G''(x)`.
pub fn phase(m: &MetricPotential, alpha: f64, x: f64) -> Result<PhaseEval> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain("phase", format!("alpha = {alpha} outside [0, 1]")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain("phase", format!("x = {x} not in (0, 1)")));
    }
    if x == alpha {
        return Ok(PhaseEval { value: 0.0, d1: 0.0, alpha });
    }
    Ok(PhaseEval {
        value: phase_value(m, alpha, m.f(alpha), x),
        d1: (x - alpha) * m.g2(x),
        alpha,
    })
}

/// Log of one Gauss-Legendre panel on `[a, b]` of `e^{-N F}`.
fn log_panel(m: &MetricPotential, n: f64, alpha: f64, f_alpha: f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut terms = [0.0; GL_ORDER];
    for (term, &(node, weight)) in terms.iter_mut().zip(gauss_legendre()) {
        let x = mid + half * node;
        *term = weight.ln() - n * phase_value(m, alpha, f_alpha, x);
    }
    half.ln() + log_sum_exp(&terms)
}

struct Integrand<'a> {
    m: &'a MetricPotential,
    n: f64,
    alpha: f64,
    f_alpha: f64,
}

impl Integrand<'_> {
    fn panel(&self, a: f64, b: f64) -> f64 {
        log_panel(self.m, self.n, self.alpha, self.f_alpha, a, b)
    }

    /// Bisects a panel until the two-halves estimate agrees with the whole
    /// panel to `rel` times `e^log_scale`. Results are pushed in ascending-x order.
    #[allow(clippy::too_many_arguments)]
    fn refine(&self, a: f64, b: f64, whole: f64, log_scale: f64, rel: f64, depth: u32, out: &mut Vec<f64>) {
        let mid = 0.5 * (a + b);
        let left = self.panel(a, mid);
        let right = self.panel(mid, b);
        let split = log_add(left, right);
        let gap = if split == f64::NEG_INFINITY && whole == f64::NEG_INFINITY {
            0.0
        } else {
            ((whole - log_scale).exp() - (split - log_scale).exp()).abs()
        };
        // Below this the gap is phase round-off amplified by N.
        let noise = (ROUNDOFF + 4.0 * self.n * f64::EPSILON) * (split - log_scale).exp();
        if gap <= rel.max(noise) || depth >= MAX_DEPTH || mid <= a || mid >= b {
            out.push(split);
        } else {
            self.refine(a, mid, left, log_scale, 0.5 * rel, depth + 1, out);
            self.refine(mid, b, right, log_scale, 0.5 * rel, depth + 1, out);
        }
    }

    /// Log-mass on `[lo, hi]` split into `panels` equal panels.
    fn log_mass(&self, lo: f64, hi: f64, panels: usize, rel_tol: f64) -> f64 {
        let width = (hi - lo) / panels as f64;
        let bounds: Vec<(f64, f64)> = (0..panels)
            .map(|i| {
                let a = lo + width * i as f64;
                let b = if i + 1 == panels { hi } else { lo + width * (i + 1) as f64 };
                (a, b)
            })
            .collect();
        let coarse: Vec<f64> = bounds.iter().map(|&(a, b)| self.panel(a, b)).collect();
        let scale = log_sum_exp(&coarse);
        let per_panel = rel_tol / panels as f64;
        let mut pieces = Vec::with_capacity(panels * 2);
        for (&(a, b), &whole) in bounds.iter().zip(&coarse) {
            self.refine(a, b, whole, scale, per_panel, 0, &mut pieces);
        }
        log_sum_exp(&pieces)
    }

    /// Log of an upper bound for the mass beyond `edge` (away from alpha).
    ///
    /// Past the edge `F' >= 4 margin |edge - alpha|`, so the tail is dominated
    /// by an exponential with that slope.
    fn log_tail(&self, edge: f64, room: f64) -> f64 {
        if room <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let slope = 4.0 * self.m.convexity_margin * (edge - self.alpha).abs();
        let reach = room.min(1.0 / (self.n * slope));
        -self.n * phase_value(self.m, self.alpha, self.f_alpha, edge) + reach.ln()
    }
}

/// Options for [`log_laplace_with`].
#[derive(Clone, Copy, Debug)]
pub struct LaplaceOptions {
    pub rel_tol: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions { rel_tol: DEFAULT_REL_TOL }
    }
}

/// `log ∫_0^1 e^{-N F_alpha(x)} dx`, without any `2π` prefactor.
pub fn log_laplace(m: &MetricPotential, n: usize, alpha: f64) -> Result<f64> {
    log_laplace_with(m, n, alpha, LaplaceOptions::default())
}

pub fn log_laplace_with(m: &MetricPotential, n: usize, alpha: f64, opts: LaplaceOptions) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("log_laplace", "N must be positive"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain("log_laplace", format!("alpha = {alpha} outside [0, 1]")));
    }
    let nf = n as f64;
    let integrand = Integrand { m, n: nf, alpha, f_alpha: m.f(alpha) };

    // Bump width; near the vertices the Gaussian scale is replaced by 1/N.
    let gauss = if alpha > 0.0 && alpha < 1.0 {
        1.0 / (nf * m.g2(alpha)).sqrt()
    } else {
        0.0
    };
    let sigma = gauss.max(1.0 / nf);
    let mut half_width = INITIAL_HALF_WIDTHS * sigma;
    loop {
        let lo = (alpha - half_width).max(0.0);
        let hi = (alpha + half_width).min(1.0);
        let panels = (((hi - lo) / sigma).ceil() as usize).clamp(1, 4096);
        let kept = integrand.log_mass(lo, hi, panels, opts.rel_tol);
        let tail = log_add(integrand.log_tail(lo, lo), integrand.log_tail(hi, 1.0 - hi));
        if tail - kept <= TAIL_TOL.ln() || (lo == 0.0 && hi == 1.0) {
            return Ok(kept);
        }
        half_width *= 2.0;
    }
}

/// Leading-order Laplace prediction `½ log(2π / (N G''(alpha)))`.
pub fn laplace_leading(m: &MetricPotential, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("laplace_leading", "N must be positive"));
    }
    let nf = n as f64;
    let floor = nf.powf(-0.75);
    if !(alpha > 0.0 && alpha < 1.0) || alpha.min(1.0 - alpha) < floor {
        return Err(Error::domain(
            "laplace_leading",
            format!("alpha = {alpha} is within N^(-3/4) = {floor} of a vertex"),
        ));
    }
    Ok(0.5 * (2.0 * std::f64::consts::PI / (nf * m.g2(alpha))).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_metric;

    #[test]
    fn gauss_rule_integrates_high_degree_polynomials() {
        let rule = gauss_legendre();
        let w: f64 = rule.iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        // ∫ x^38 over [-1, 1] = 2/39
        let m38: f64 = rule.iter().map(|&(x, w)| w * x.powi(38)).sum();
        assert!((m38 - 2.0 / 39.0).abs() < 1e-15);
    }

    #[test]
    fn phase_examples() {
        let canon = MetricPotential::canonical();
        let p = phase(&canon, 0.5, 0.25).unwrap();
        let expected = 2f64.ln() - 0.5 * 3f64.ln();
        assert!((p.value - expected).abs() < 1e-15);
        assert!(p.d1 < 0.0);
        let q = phase(&canon, 0.5, 0.75).unwrap();
        assert!((q.value - p.value).abs() < 1e-15);

        let m = make_metric(&[0.0, 0.0, -0.15, 0.3], 1000).unwrap();
        let at = phase(&m, 0.4, 0.4).unwrap();
        assert_eq!((at.value, at.d1), (0.0, 0.0));
        assert!(phase(&m, 0.4, 0.0).is_err());
        assert!(phase(&m, 1.2, 0.5).is_err());
        // endpoint alpha uses the 0 log 0 convention
        assert!(phase(&m, 0.0, 0.3).unwrap().value > 0.0);
        assert!(phase(&m, 1.0, 0.3).unwrap().value > 0.0);
    }

    #[test]
    fn log_laplace_examples() {
        let canon = MetricPotential::canonical();
        assert!((log_laplace(&canon, 2, 0.5).unwrap() - (2.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((log_laplace(&canon, 1, 0.0).unwrap() - 0.5f64.ln()).abs() < 1e-12);
        for &(n, a) in &[(7usize, 2.0 / 7.0), (100, 0.01), (33, 0.5)] {
            let l = log_laplace(&canon, n, a).unwrap();
            let r = log_laplace(&canon, n, 1.0 - a).unwrap();
            assert!((l - r).abs() < 1e-12);
        }
        assert!(log_laplace(&canon, 0, 0.5).is_err());
        assert!(log_laplace(&canon, 3, -0.5).is_err());
    }

    #[test]
    fn laplace_leading_examples() {
        let canon = MetricPotential::canonical();
        let n = 4096;
        let lead = laplace_leading(&canon, n, 0.5).unwrap();
        let expect = 0.5 * (2.0 * std::f64::consts::PI / (4.0 * n as f64)).ln();
        assert!((lead - expect).abs() < 1e-15);
        assert!((log_laplace(&canon, n, 0.5).unwrap() - lead).abs() <= 1e-3);

        let linear = make_metric(&[0.3, -1.2], 1000).unwrap();
        assert_eq!(laplace_leading(&linear, 64, 0.3).unwrap(), laplace_leading(&canon, 64, 0.3).unwrap());
        assert!(laplace_leading(&canon, 4096, 0.0).is_err());
        assert!(laplace_leading(&canon, 4096, 1.0 / 4096.0).is_err());
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[-1e4, 0.0]) - 0.0).abs() < 1e-15);
    }
}
