//! Adaptive Gauss–Kronrod quadrature.
//!
//! [`integrate`] is a globally adaptive 21-point Gauss–Kronrod scheme over a
//! finite interval with optional interior breakpoints. [`integrate_line`]
//! integrates over the whole real line by running the adaptive scheme on a
//! core window and then marching outwards in fixed-width panels until the
//! contributions are negligible. Mixing-measure integrals are evaluated in the
//! coordinate `s = ln ξ`, where the integrable singularity of a regularly
//! varying density at the origin becomes exponential decay, so the line
//! integrator is the workhorse of the crate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.0,
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

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Tolerances and limits for the adaptive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals held by one adaptive run.
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single 21-point Kronrod evaluation with the QUADPACK error heuristic.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);
    let mut gauss = 0.0;
    let mut kronrod = WGK[10] * f_center;
    let mut abs_kronrod = kronrod.abs();
    let mut values = [(0.0, 0.0); 10];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        values[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_kronrod += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (f_center - mean).abs();
    for (j, &(f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let abs_value = abs_kronrod * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * abs_value;
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(round);
    }
    (value, error)
}

/// Adaptive integration of `f` over `[lo, hi]`.
///
/// `breaks` are interior points (e.g. known kinks or scale changes) that are
/// used as the initial partition; points outside `(lo, hi)` are ignored.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain("integration bounds must be finite"));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(a);
    edges.extend(points);
    edges.push(b);
    for w in edges.windows(2) {
        let (value, error) = kronrod21(&f, w[0], w[1]);
        evaluations += 21;
        total += value;
        total_err += error;
        heap.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            error,
        });
    }

    let cap = cfg.max_subdivisions.max(heap.len());
    while total_err > cfg.target(total) {
        if !total.is_finite() {
            break;
        }
        let worst = *heap.peek().expect("non-empty segment heap");
        let mid = 0.5 * (worst.lo + worst.hi);
        let unsplittable = mid <= worst.lo || mid >= worst.hi;
        if heap.len() >= cap || unsplittable {
            return Err(Error::Quadrature {
                value: sign * total,
                abs_error: total_err,
                worst_lo: worst.lo,
                worst_hi: worst.hi,
            });
        }
        heap.pop();
        let (v1, e1) = kronrod21(&f, worst.lo, mid);
        let (v2, e2) = kronrod21(&f, mid, worst.hi);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of the running update.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature {
            value,
            abs_error,
            worst_lo: a,
            worst_hi: b,
        });
    }
    Ok(QuadResult {
        value: sign * value,
        abs_error,
        evaluations,
    })
}

const PANEL_WIDTH: f64 = 2.0;
const MAX_PANELS: usize = 2000;

/// Integral of `g` over the whole real line.
///
/// `anchors` mark where the mass of the integrand sits; the adaptive core
/// covers `[min - 2, max + 2]` with the anchors as breakpoints. Outside the
/// core the integrand must decay at least geometrically: panels of width 2
/// are added in each direction until a panel contributes less than a tiny
/// fraction of the running total, and the remainder is estimated from the
/// ratio of the last two panels.
pub fn integrate_line<F: Fn(f64) -> f64>(g: F, anchors: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    let (lo, hi) = anchors
        .iter()
        .filter(|a| a.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &a| (l.min(a), h.max(a)));
    let (lo, hi) = if lo.is_finite() { (lo - 2.0, hi + 2.0) } else { (-2.0, 2.0) };
    let core = integrate(&g, lo, hi, anchors, cfg)?;
    let mut total = core.value;
    let mut abs_error = core.abs_error;
    let mut evaluations = core.evaluations;

    for direction in [-1.0, 1.0] {
        let mut edge = if direction < 0.0 { lo } else { hi };
        let mut previous: Option<f64> = None;
        let mut finished = false;
        for _ in 0..MAX_PANELS {
            let next = edge + direction * PANEL_WIDTH;
            let panel_cfg = QuadConfig {
                abs_tol: cfg.abs_tol.min(1e-3 * cfg.rel_tol * total.abs()).max(f64::MIN_POSITIVE),
                ..*cfg
            };
            let panel = integrate(&g, edge.min(next), edge.max(next), &[], &panel_cfg)?;
            evaluations += panel.evaluations;
            total += panel.value;
            abs_error += panel.abs_error;
            edge = next;
            let negligible = 1e-4 * cfg.rel_tol * total.abs();
            if panel.value == 0.0 {
                finished = true;
                break;
            }
            if let Some(prev) = previous {
                let ratio = panel.value / prev;
                if (0.0..1.0).contains(&ratio) {
                    let tail = panel.value * ratio / (1.0 - ratio);
                    if tail.abs() <= negligible.max(cfg.abs_tol * 1e-3) {
                        total += tail;
                        abs_error += tail.abs();
                        finished = true;
                        break;
                    }
                }
            }
            previous = Some(panel.value);
        }
        if !finished {
            return Err(Error::Quadrature {
                value: total,
                abs_error,
                worst_lo: edge.min(edge - direction * PANEL_WIDTH),
                worst_hi: edge.max(edge - direction * PANEL_WIDTH),
            });
        }
    }
    Ok(QuadResult {
        value: total,
        abs_error,
        evaluations,
    })
}
