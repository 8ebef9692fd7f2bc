//! Brent's bracketing root finder.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub f_x: f64,
    pub iterations: usize,
}

/// Finds a root of `f` in `[lo, hi]`.
///
/// Stops once `|f(x)| ≤ tol` or the bracket has shrunk below
/// `tol·max(1, |x|)`. `f` may fail; its error is passed through unchanged.
pub fn brent_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("root tolerance must be positive".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput("bracket end points must be finite".into()));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, f_x: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, f_x: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket { lo, hi, f_lo: fa, f_hi: fb });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iteration in 1..=MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol * b.abs().max(1.0);
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol || xm.abs() <= tol1 {
            return Ok(Root { x: b, f_x: fb, iterations: iteration });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when only two points are distinct
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::RootNotConverged { iterations: MAX_ITERATIONS })
}

/// A sign-changing bracket `[a, b]` (in the order visited) with its end values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub a: f64,
    pub f_a: f64,
    pub b: f64,
    pub f_b: f64,
}

/// Walks away from `origin` in `direction` (±1) with doubling offsets
/// `step, 2·step, …` until `f` changes sign, for at most `max_expansions`
/// steps. When a step would reach the exclusive `limit`, the walk instead
/// halves the remaining distance to it.
pub fn expand_bracket<F>(
    mut f: F,
    origin: f64,
    f_origin: f64,
    step: f64,
    direction: f64,
    limit: Option<f64>,
    max_expansions: usize,
) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("bracket step must be positive, got {step}")));
    }
    let (mut prev, mut f_prev) = (origin, f_origin);
    let mut offset = step;
    for _ in 0..max_expansions {
        let mut x = origin + direction * offset;
        if let Some(lim) = limit {
            if (x - lim) * direction >= 0.0 {
                x = 0.5 * (prev + lim);
            }
        }
        let fx = f(x)?;
        if fx == 0.0 || fx.signum() != f_prev.signum() {
            return Ok(Bracket { a: prev, f_a: f_prev, b: x, f_b: fx });
        }
        prev = x;
        f_prev = fx;
        offset *= 2.0;
    }
    Err(Error::Bracket {
        lo: origin.min(prev),
        hi: origin.max(prev),
        f_lo: f_origin,
        f_hi: f_prev,
    })
}
