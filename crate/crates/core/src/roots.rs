//! Safeguarded Newton iteration for monotone increasing scalar functions.

/// Outcome of a bracketed root search.
#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Finds a root of an increasing function `h` inside `[lo, hi]`.
///
/// `h_and_dh` returns the value and derivative. The bracket must satisfy
/// `h(lo) <= 0 <= h(hi)`; every Newton step that leaves the current bracket
/// (or fails to halve the residual) is replaced by a bisection step, so the
/// iteration cannot escape or stall indefinitely.
pub fn newton_bisect<F>(h_and_dh: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Root
where
    F: Fn(f64) -> (f64, f64),
{
    debug_assert!(lo <= hi);
    let mut x = 0.5 * (lo + hi);
    let (mut h, mut dh) = h_and_dh(x);
    let mut prev_abs = f64::INFINITY;
    for it in 0..max_iter {
        if h.abs() <= tol {
            return Root { x, residual: h, iterations: it, converged: true };
        }
        if h < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - h / dh;
        let in_bracket = dh > 0.0 && newton > lo && newton < hi;
        let x_next = if in_bracket && h.abs() < 0.5 * prev_abs || in_bracket && it == 0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        prev_abs = h.abs();
        if x_next == x {
            // bracket collapsed to adjacent floats
            return Root { x, residual: h, iterations: it + 1, converged: h.abs() <= tol };
        }
        x = x_next;
        (h, dh) = h_and_dh(x);
    }
    Root { x, residual: h, iterations: max_iter, converged: h.abs() <= tol }
}
