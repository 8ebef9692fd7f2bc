//! Globally adaptive Gauss–Kronrod (10/21) quadrature on the half line.
//!
//! The half line `(0, ∞)` is mapped onto `(0, 1)` by `y = s·t/(1−t)`; the
//! integrand may be vector valued so that several expectations under the
//! same density share one set of evaluations.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 500,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

// Kronrod abscissae (non-negative half, descending) and weights; every
// other abscissa starting at index 1 is a Gauss node.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Initial equal panels on `(0, 1)` before adaptive bisection.
const INITIAL_PANELS: usize = 8;

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    priority: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn kronrod_panel<F>(f: &F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut eval = |t: f64, wk: f64, wg: f64, buf: &mut [f64]| -> Result<()> {
        buf.iter_mut().for_each(|v| *v = 0.0);
        f(t, buf);
        for c in 0..dim {
            let v = buf[c];
            if !v.is_finite() {
                return Err(Error::Domain(format!("integrand is not finite at t = {t}")));
            }
            kron[c] += wk * v;
            gauss[c] += wg * v;
        }
        Ok(())
    };
    eval(center, WGK[10], 0.0, buf)?;
    for i in 0..10 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        let dx = half * XGK[i];
        eval(center - dx, WGK[i], wg, buf)?;
        eval(center + dx, WGK[i], wg, buf)?;
    }
    let value: Vec<f64> = kron.iter().map(|k| k * half).collect();
    let error: Vec<f64> = kron
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * half).abs())
        .collect();
    Ok((value, error))
}

/// Adaptive integration of a vector-valued `f` over `(0, 1)` in the mapped variable.
fn integrate_unit<F>(f: F, dim: usize, spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    spec.validate()?;
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    let mut total = vec![0.0; dim];
    let mut total_err = vec![0.0; dim];

    let width = 1.0 / INITIAL_PANELS as f64;
    let mut initial = Vec::with_capacity(INITIAL_PANELS);
    for p in 0..INITIAL_PANELS {
        let (a, b) = (p as f64 * width, (p + 1) as f64 * width);
        let (value, error) = kronrod_panel(&f, a, b, dim, &mut buf)?;
        for c in 0..dim {
            total[c] += value[c];
            total_err[c] += error[c];
        }
        initial.push((a, b, value, error));
    }
    // Panels are ranked by error relative to each component's own tolerance.
    let tol_scale: Vec<f64> = total
        .iter()
        .map(|v| spec.abs_tol.max(spec.rel_tol * v.abs()))
        .collect();
    let priority = |error: &[f64]| {
        error
            .iter()
            .zip(&tol_scale)
            .map(|(e, t)| e / t)
            .fold(0.0, f64::max)
    };
    for (a, b, value, error) in initial {
        heap.push(Panel {
            a,
            b,
            priority: priority(&error),
            value,
            error,
        });
    }

    let converged = |total: &[f64], err: &[f64]| {
        total
            .iter()
            .zip(err)
            .all(|(v, e)| *e <= spec.abs_tol.max(spec.rel_tol * v.abs()))
    };

    let mut subdivisions = 0;
    while !converged(&total, &total_err) {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                error_estimate: total_err.iter().copied().fold(0.0, f64::max),
                subdivisions,
            });
        }
        let worst = heap.pop().expect("panel heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature {
                error_estimate: total_err.iter().copied().fold(0.0, f64::max),
                subdivisions,
            });
        }
        for c in 0..dim {
            total[c] -= worst.value[c];
            total_err[c] -= worst.error[c];
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod_panel(&f, a, b, dim, &mut buf)?;
            for c in 0..dim {
                total[c] += value[c];
                total_err[c] += error[c];
            }
            heap.push(Panel {
                a,
                b,
                priority: priority(&error),
                value,
                error,
            });
        }
        subdivisions += 1;
    }

    // Re-sum from the panels so cancellation in the running totals does not leak through.
    let mut value = vec![0.0; dim];
    for panel in heap.iter() {
        for (v, p) in value.iter_mut().zip(&panel.value) {
            *v += p;
        }
    }
    Ok(value)
}

/// `∫₀^∞ f(y) dy` for vector-valued `f`, with the map `y = scale·t/(1−t)`.
///
/// `f(y, out)` writes `dim` values into `out`. Convergence is declared when
/// every component's error estimate is within `max(abs_tol, rel_tol·|value|)`.
pub fn integrate_halfline_vec<F>(f: F, dim: usize, scale: f64, spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("half-line scale must be positive, got {scale}")));
    }
    integrate_unit(
        |t, out: &mut [f64]| {
            let one_minus = 1.0 - t;
            let y = scale * t / one_minus;
            let jac = scale / (one_minus * one_minus);
            f(y, out);
            out.iter_mut().for_each(|v| *v *= jac);
        },
        dim,
        spec,
    )
}

/// `∫₀^∞ f(y) dy` after the map `y = t/(1−t)`.
pub fn integrate_halfline<F>(f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_halfline_vec(|y, out: &mut [f64]| out[0] = f(y), 1, 1.0, spec).map(|v| v[0])
}

/// `∫_{−∞}^{∞} f(y) dy` as two half lines folded around `center`.
pub fn integrate_line_vec<F>(f: F, dim: usize, center: f64, scale: f64, spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    integrate_halfline_vec(
        |u, out: &mut [f64]| {
            f(center + u, out);
            let mut mirror = vec![0.0; dim];
            f(center - u, &mut mirror);
            for (o, m) in out.iter_mut().zip(&mirror) {
                *o += m;
            }
        },
        dim,
        scale,
        spec,
    )
}
