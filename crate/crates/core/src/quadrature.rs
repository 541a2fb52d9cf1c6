//! Globally adaptive Gauss-Kronrod quadrature (10-point Gauss, 21-point Kronrod).
//!
//! Every panel is kept in a max-heap keyed on its error estimate and the worst
//! panel is bisected until the summed error meets `max(abs_tol, rel_tol * |I|)`.
//! Semi-infinite panels are mapped onto `[0, 1)` with `x = a + t / (1 - t)`;
//! the Kronrod nodes never touch the endpoints, so integrable endpoint
//! singularities (poles placed at breakpoints) are never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_932_257_718,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

/// Quadrature settings. Cheap to copy; holds no state between calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite,
    // x = origin + sign * t / (1 - t), t in [0, 1)
    Tail { origin: f64, sign: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Quadrature {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    /// Integrate `f` over `[a, b]`; either end may be infinite.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_with_breaks(f, a, b, &[])
    }

    /// Integrate over `[a, b]` with interior breakpoints, e.g. kinks, modes
    /// or integrable poles. Breakpoints outside `(a, b)` are ignored.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<Estimate> {
        if a.is_nan() || b.is_nan() {
            return Err(Error::Domain("NaN integration limit".into()));
        }
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                abs_error: 0.0,
                evaluations: 0,
                panels: 0,
            });
        }
        if a > b {
            let est = self.integrate_with_breaks(f, b, a, breaks)?;
            return Ok(Estimate {
                value: -est.value,
                ..est
            });
        }

        let mut points: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|p| p.is_finite() && *p > a && *p < b)
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        if a.is_infinite() && b.is_infinite() && points.is_empty() {
            points.push(0.0);
        }

        let mut edges = Vec::with_capacity(points.len() + 2);
        edges.push(a);
        edges.extend(points);
        edges.push(b);

        let mut evaluations = 0usize;
        let mut heap = BinaryHeap::new();
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let panel = match (lo.is_infinite(), hi.is_infinite()) {
                (false, false) => self.panel(&f, lo, hi, Map::Finite, &mut evaluations),
                (true, false) => self.panel(
                    &f,
                    0.0,
                    1.0,
                    Map::Tail {
                        origin: hi,
                        sign: -1.0,
                    },
                    &mut evaluations,
                ),
                (false, true) => self.panel(
                    &f,
                    0.0,
                    1.0,
                    Map::Tail {
                        origin: lo,
                        sign: 1.0,
                    },
                    &mut evaluations,
                ),
                (true, true) => unreachable!("doubly infinite panels are split at 0"),
            };
            heap.push(panel);
        }

        loop {
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            if !value.is_finite() || !error.is_finite() {
                return Err(Error::Quadrature {
                    estimate: value,
                    achieved_error: error,
                });
            }
            let tol = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= tol {
                return Ok(Estimate {
                    value,
                    abs_error: error,
                    evaluations,
                    panels: heap.len(),
                });
            }
            if heap.len() >= self.max_panels {
                return Err(Error::Quadrature {
                    estimate: value,
                    achieved_error: error,
                });
            }
            let worst = heap.pop().expect("heap holds at least one panel");
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Panel is at floating-point resolution and cannot be refined.
                return Err(Error::Quadrature {
                    estimate: value,
                    achieved_error: error,
                });
            }
            heap.push(self.panel(&f, worst.lo, mid, worst.map, &mut evaluations));
            heap.push(self.panel(&f, mid, worst.hi, worst.map, &mut evaluations));
        }
    }

    fn panel<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        map: Map,
        evaluations: &mut usize,
    ) -> Panel {
        let g = |t: f64| -> f64 {
            match map {
                Map::Finite => f(t),
                Map::Tail { origin, sign } => {
                    let s = 1.0 - t;
                    let x = origin + sign * t / s;
                    if x.is_infinite() {
                        return 0.0;
                    }
                    let y = f(x);
                    if y == 0.0 {
                        0.0
                    } else {
                        y / (s * s)
                    }
                }
            }
        };
        let (value, error) = gk21(&g, lo, hi);
        *evaluations += 21;
        Panel {
            lo,
            hi,
            map,
            value,
            error,
        }
    }
}

fn gk21<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = g(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let pair = g(center - dx) + g(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}
