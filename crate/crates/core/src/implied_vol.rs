//! Implied volatility of fractional prices against the `alpha = 2` reference.
//!
//! The implied scale `σ*(S)` solves `C₂(S, σ*, τ) = C_α(S, σ_α, τ)`. Differentiating that
//! identity in `S` gives the slope
//!
//! ```text
//! dσ*/dS = (∂C_α/∂S - ∂C₂/∂S) / (∂C₂/∂σ)
//! ```
//!
//! and the first-order curve integrates this slope along the spot grid from `S = 1`, with
//! the partials frozen at the anchor volatility.

use crate::error::{Error, Result};
use crate::fracgauss::FracParams;
use crate::numerics::{central_diff, default_step, find_root_bracketed, QuadConfig, RootConfig};
use crate::par;
use crate::pricing::{call_price, call_price_gaussian_closed, check_increasing, PriceQuery};

/// Vega below this magnitude makes the slope undefined.
pub const MIN_VEGA: f64 = 1e-12;

/// Quadrature and root-finding settings used together by the smile routines.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverConfig {
    pub quad: QuadConfig,
    pub root: RootConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Start from the exact implied volatility at `S = 1` and linearise there.
    AtTheMoney,
    /// Start from `σ_α` and linearise there.
    SigmaAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmileMethod {
    Exact,
    FirstOrder(Anchor),
}

impl SmileMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SmileMethod::Exact => "exact",
            SmileMethod::FirstOrder(_) => "first_order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolPoint {
    pub spot: f64,
    /// `None` where the point is undefined (degenerate vega or no bracket).
    pub sigma_imp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolCurve {
    pub points: Vec<VolPoint>,
    pub tau: f64,
    pub params: FracParams,
    pub method: SmileMethod,
}

fn check_spot(spot: f64) -> Result<()> {
    if spot > 0.0 && spot.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("spot must be positive, got {spot}")))
    }
}

/// Reference price per unit strike at implied scale `vol` (variance rate, like `σ_α`).
pub fn gaussian_price(spot: f64, vol: f64, tau: f64) -> Result<f64> {
    check_spot(spot)?;
    call_price_gaussian_closed(spot.ln(), vol * tau)
}

fn fractional_price(spot: f64, tau: f64, params: &FracParams, quad: &QuadConfig) -> Result<f64> {
    check_spot(spot)?;
    call_price(&PriceQuery::new(spot.ln(), tau, *params)?, quad)
}

/// The scale at which the reference price equals `target`.
///
/// The bracket starts at `[1e-6, 10 * sigma_hint]` and its upper end is doubled at most
/// 20 times.
pub fn implied_vol_for_price(
    spot: f64,
    tau: f64,
    target: f64,
    sigma_hint: f64,
    root: &RootConfig,
) -> Result<f64> {
    check_spot(spot)?;
    let x = spot.ln();
    let gap = |vol: f64| {
        call_price_gaussian_closed(x, vol * tau)
            .map(|c| c - target)
            .unwrap_or(f64::NAN)
    };
    let lo = 1e-6;
    let mut hi = 10.0 * sigma_hint;
    let gap_lo = gap(lo);
    let mut gap_hi = gap(hi);
    for _ in 0..20 {
        if gap_hi >= 0.0 {
            break;
        }
        hi *= 2.0;
        gap_hi = gap(hi);
    }
    if !(gap_lo <= 0.0 && gap_hi >= 0.0) {
        return Err(Error::NoSolution { gap_lo, gap_hi });
    }
    find_root_bracketed(gap, lo, hi, root)
}

pub fn implied_vol_exact(
    spot: f64,
    tau: f64,
    params: &FracParams,
    cfg: &SolverConfig,
) -> Result<f64> {
    let target = fractional_price(spot, tau, params, &cfg.quad)?;
    implied_vol_for_price(spot, tau, target, params.sigma(), &cfg.root)
}

/// Implicit-function slope `dσ*/dS` with all partials at `σ_α`.
pub fn dsigma_ds(spot: f64, tau: f64, params: &FracParams, quad: &QuadConfig) -> Result<f64> {
    dsigma_ds_at(spot, tau, params, params.sigma(), quad)
}

/// Implicit-function slope `dσ*/dS` with the reference partials evaluated at `vol`.
///
/// All partials are central differences of the quadrature pricer; spot derivatives are
/// taken in `x = ln S` and converted with `∂/∂S = (1/S) ∂/∂x`.
pub fn dsigma_ds_at(
    spot: f64,
    tau: f64,
    params: &FracParams,
    vol: f64,
    quad: &QuadConfig,
) -> Result<f64> {
    check_spot(spot)?;
    let reference = FracParams::new(2.0, vol)?;
    let x = spot.ln();
    let hx = default_step(x);
    let price_at = |p: FracParams| move |x: f64| call_price(&PriceQuery::new(x, tau, p)?, quad);

    let d_ref = central_diff(price_at(reference), x, hx)? / spot;
    let d_frac = if *params == reference {
        d_ref
    } else {
        central_diff(price_at(*params), x, hx)? / spot
    };
    let vega = central_diff(
        |v| call_price(&PriceQuery::new(x, tau, FracParams::new(2.0, v)?)?, quad),
        vol,
        default_step(vol),
    )?;
    if vega.abs() < MIN_VEGA {
        return Err(Error::DegenerateVega { spot, vega });
    }
    Ok((d_frac - d_ref) / vega)
}

fn exact_curve(
    spots: &[f64],
    tau: f64,
    params: &FracParams,
    cfg: &SolverConfig,
) -> Result<VolCurve> {
    let vols = par::map_indexed(spots, |i, s| {
        match implied_vol_exact(*s, tau, params, cfg) {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_missing_point() => Ok(None),
            Err(e) => Err(Error::at(i, e)),
        }
    });
    let points = spots
        .iter()
        .zip(vols)
        .map(|(s, v)| {
            v.map(|sigma_imp| VolPoint {
                spot: *s,
                sigma_imp,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VolCurve {
        points,
        tau,
        params: *params,
        method: SmileMethod::Exact,
    })
}

/// First-order curve: the anchor value at `S = 1` plus the trapezoidal integral of the
/// implicit-function slope, with partials frozen at the anchor value.
///
/// The grid must contain `S = 1` or a point within one grid step of it. A degenerate slope
/// makes that point and every point further from the anchor missing.
pub fn implied_vol_first_order(
    spots: &[f64],
    tau: f64,
    params: &FracParams,
    anchor: Anchor,
    cfg: &SolverConfig,
) -> Result<VolCurve> {
    check_increasing(spots, "spot")?;
    spots.iter().try_for_each(|s| check_spot(*s))?;

    let nearest = (0..spots.len())
        .min_by(|&a, &b| (spots[a] - 1.0).abs().total_cmp(&(spots[b] - 1.0).abs()))
        .expect("non-empty grid");
    let local_step = [nearest.checked_sub(1), Some(nearest + 1)]
        .into_iter()
        .flatten()
        .filter_map(|j| spots.get(j))
        .map(|s| (s - spots[nearest]).abs())
        .fold(0.0, f64::max);
    if (spots[nearest] - 1.0).abs() > local_step {
        return Err(Error::domain(
            "first-order smile needs S = 1 within one grid step of the spot grid",
        ));
    }

    let sigma0 = match anchor {
        Anchor::AtTheMoney => implied_vol_exact(1.0, tau, params, cfg)?,
        Anchor::SigmaAlpha => params.sigma(),
    };
    let slope_at_anchor = dsigma_ds_at(1.0, tau, params, sigma0, &cfg.quad)?;

    let slopes: Vec<Result<Option<f64>>> = par::map_indexed(spots, |i, s| {
        match dsigma_ds_at(*s, tau, params, sigma0, &cfg.quad) {
            Ok(d) => Ok(Some(d)),
            Err(Error::DegenerateVega { .. }) => Ok(None),
            Err(e) => Err(Error::at(i, e)),
        }
    });
    let slopes = slopes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut vols: Vec<Option<f64>> = vec![None; spots.len()];
    vols[nearest] =
        slopes[nearest].map(|d| sigma0 + 0.5 * (slope_at_anchor + d) * (spots[nearest] - 1.0));
    for j in nearest + 1..spots.len() {
        vols[j] = match (vols[j - 1], slopes[j - 1], slopes[j]) {
            (Some(v), Some(a), Some(b)) => Some(v + 0.5 * (a + b) * (spots[j] - spots[j - 1])),
            _ => None,
        };
    }
    for j in (0..nearest).rev() {
        vols[j] = match (vols[j + 1], slopes[j + 1], slopes[j]) {
            (Some(v), Some(a), Some(b)) => Some(v - 0.5 * (a + b) * (spots[j + 1] - spots[j])),
            _ => None,
        };
    }

    let points = spots
        .iter()
        .zip(vols)
        .map(|(s, v)| VolPoint {
            spot: *s,
            sigma_imp: v,
        })
        .collect();
    Ok(VolCurve {
        points,
        tau,
        params: *params,
        method: SmileMethod::FirstOrder(anchor),
    })
}

pub fn smile_curve(
    spots: &[f64],
    tau: f64,
    params: &FracParams,
    method: SmileMethod,
    cfg: &SolverConfig,
) -> Result<VolCurve> {
    check_increasing(spots, "spot")?;
    if !(tau > 0.0) {
        return Err(Error::domain(format!(
            "time to maturity must be positive, got {tau}"
        )));
    }
    match method {
        SmileMethod::Exact => exact_curve(spots, tau, params, cfg),
        SmileMethod::FirstOrder(anchor) => implied_vol_first_order(spots, tau, params, anchor, cfg),
    }
}

/// `n` evenly spaced points on `[lo, hi]`, hitting both ends exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}
