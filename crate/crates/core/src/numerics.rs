//! Scalar numerical kernels shared by the density, pricing and implied-volatility code:
//! the gamma function, adaptive Gauss-Kronrod quadrature, Brent's bracketed root finder
//! and symmetric finite differences.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerances and budget for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Kernel decay exponent beyond which pricing integrands are truncated.
    pub tail_cutoff_exponent: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
            tail_cutoff_exponent: 45.0,
        }
    }
}

impl QuadConfig {
    pub fn new(
        abs_tol: f64,
        rel_tol: f64,
        max_subdivisions: usize,
        tail_cutoff_exponent: f64,
    ) -> Result<Self> {
        let cfg = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
            tail_cutoff_exponent,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.tail_cutoff_exponent > 0.0) {
            return Err(Error::domain(
                "quadrature tolerances and tail cutoff must be positive",
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        Ok(())
    }
}

/// Tolerances and budget for [`find_root_bracketed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iterations: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            x_tol: 1e-13,
            f_tol: 1e-16,
            max_iterations: 200,
        }
    }
}

impl RootConfig {
    pub fn new(x_tol: f64, f_tol: f64, max_iterations: usize) -> Result<Self> {
        let cfg = Self {
            x_tol,
            f_tol,
            max_iterations,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return Err(Error::domain("root tolerances must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments (Lanczos, g = 7, reflected below 1/2).
pub fn gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!(
            "gamma is only defined here for finite z > 0, got {z}"
        )));
    }
    Ok(gamma_positive(z))
}

fn gamma_positive(z: f64) -> f64 {
    if z.fract() == 0.0 && z <= 20.0 {
        return (2..z as u32).map(f64::from).product();
    }
    if z < 0.5 {
        return PI / ((PI * z).sin() * gamma_positive(1.0 - z));
    }
    let z = z - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { x })
        }
    };

    let f_center = eval(center)?;
    let mut res_kronrod = f_center * WGK[7];
    let mut res_gauss = f_center * WG[3];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// Change of variables mapping an (possibly infinite) interval onto a finite one.
#[derive(Debug, Clone, Copy)]
enum Mapping {
    Finite,
    /// `x = a + t / (1 - t)`, t in [0, 1)
    Upper(f64),
    /// `x = b - t / (1 - t)`, t in [0, 1)
    Lower(f64),
    /// `x = t / (1 - t^2)`, t in (-1, 1)
    Whole,
}

impl Mapping {
    fn to_x(self, t: f64) -> (f64, f64) {
        match self {
            Mapping::Finite => (t, 1.0),
            Mapping::Upper(a) => {
                let r = 1.0 / (1.0 - t);
                (a + t * r, r * r)
            }
            Mapping::Lower(b) => {
                let r = 1.0 / (1.0 - t);
                (b - t * r, r * r)
            }
            Mapping::Whole => {
                let d = 1.0 / (1.0 - t * t);
                (t * d, (1.0 + t * t) * d * d)
            }
        }
    }

    fn to_t(self, x: f64) -> f64 {
        match self {
            Mapping::Finite => x,
            Mapping::Upper(a) => (x - a) / (1.0 + x - a),
            Mapping::Lower(b) => (b - x) / (1.0 + b - x),
            Mapping::Whole => {
                if x == 0.0 {
                    0.0
                } else {
                    2.0 * x / (1.0 + (1.0 + 4.0 * x * x).sqrt())
                }
            }
        }
    }
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Either endpoint may be infinite; semi-infinite and doubly infinite ranges are mapped
/// onto finite ones. Returns `(value, error_estimate)`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    integrate_adaptive_with_points(f, a, b, &[], cfg)
}

/// Like [`integrate_adaptive`], with interior break points (kinks, cusps) that are always
/// used as subinterval boundaries.
pub fn integrate_adaptive_with_points<F>(
    f: F,
    a: f64,
    b: f64,
    points: &[f64],
    cfg: &QuadConfig,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if a.is_nan() || b.is_nan() {
        return Err(Error::domain("integration limits must not be NaN"));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    if a > b {
        let (value, error) = integrate_adaptive_with_points(f, b, a, points, cfg)?;
        return Ok((-value, error));
    }

    let (mapping, t_lo, t_hi) = match (a.is_finite(), b.is_finite()) {
        (true, true) => (Mapping::Finite, a, b),
        (true, false) => (Mapping::Upper(a), 0.0, 1.0),
        (false, true) => (Mapping::Lower(b), 0.0, 1.0),
        (false, false) => (Mapping::Whole, -1.0, 1.0),
    };
    let g = |t: f64| {
        let (x, jac) = mapping.to_x(t);
        let y = f(x);
        // Mapped tails beyond the floating-point range contribute nothing.
        if jac.is_infinite() && y == 0.0 {
            0.0
        } else {
            y * jac
        }
    };

    let mut cuts: Vec<f64> = points
        .iter()
        .filter(|p| **p > a && **p < b)
        .map(|p| mapping.to_t(*p))
        .collect();
    cuts.push(t_lo);
    cuts.push(t_hi);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        heap.push(gauss_kronrod_15(&g, w[0], w[1])?);
    }

    let mut subdivisions = 0usize;
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok((value, error));
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::QuadratureBudget { value, error });
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; nothing left to refine.
            heap.push(worst);
            return Err(Error::QuadratureBudget { value, error });
        }
        heap.push(gauss_kronrod_15(&g, worst.a, mid)?);
        heap.push(gauss_kronrod_15(&g, mid, worst.b)?);
        subdivisions += 1;
    }
}

/// Brent's method: inverse quadratic interpolation safeguarded by bisection.
///
/// Requires `f(lo) * f(hi) <= 0`. The returned point always lies inside `[lo, hi]`.
pub fn find_root_bracketed<F>(mut f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::domain(format!(
            "non-finite function value at the bracket ends: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidBracket { f_lo: fa, f_hi: fb });
    }

    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iterations {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * cfg.x_tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb.abs() <= cfg.f_tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let bound = (3.0 * xm * q - (tol * q).abs()).min((e * q).abs());
            if 2.0 * p < bound {
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
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::domain(format!(
                "non-finite function value at x = {b}"
            )));
        }
    }
    let (lo, hi) = if b <= c { (b, c) } else { (c, b) };
    Err(Error::RootBudget {
        iterations: cfg.max_iterations,
        lo,
        hi,
    })
}

/// Default central-difference step: `cbrt(eps) * max(1, |x|)`.
pub fn default_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Symmetric difference quotient `(f(x + h) - f(x - h)) / 2h`.
pub fn central_diff<F>(mut f: F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!(
            "difference step must be positive, got {h}"
        )));
    }
    let up = f(x + h)?;
    let down = f(x - h)?;
    Ok((up - down) / (2.0 * h))
}
