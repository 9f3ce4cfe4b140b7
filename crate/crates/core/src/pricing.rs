//! European call prices under the fractional Gaussian propagator.
//!
//! With log-moneyness `x = ln(S/K)` and time to maturity `tau`, the price per unit strike is
//!
//! ```text
//! C(x, tau) = ∫_0^∞ (e^y - 1) G(x - y; alpha, sigma * tau) dy
//! ```
//!
//! where `G` is the fractional Gaussian density with its scale parameter replaced by the
//! effective variance `sigma * tau`. The kernel is centred and there is no discounting.
//!
//! For a Gaussian kernel with variance `v`, completing the square in
//! `e^y exp(-(y - x)^2 / 2v) = e^(x + v/2) exp(-(y - x - v)^2 / 2v)` gives
//! `C = e^(x + v/2) Φ((x + v)/√v) - Φ(x/√v)`, used as the independent reference at `alpha = 2`.
//! Note that this centred kernel carries no `-v/2` martingale drift.

use libm::erfc;

use crate::error::{Error, Result};
use crate::fracgauss::{FracGauss, FracParams};
use crate::numerics::{find_root_bracketed, integrate_adaptive, QuadConfig, RootConfig};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceQuery {
    /// Log-moneyness `ln(S / K)`.
    pub x: f64,
    pub tau: f64,
    pub params: FracParams,
    pub strike: f64,
}

impl PriceQuery {
    pub fn new(x: f64, tau: f64, params: FracParams) -> Result<Self> {
        Self::with_strike(x, tau, params, 1.0)
    }

    pub fn with_strike(x: f64, tau: f64, params: FracParams, strike: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::domain(format!(
                "strike must be positive, got {strike}"
            )));
        }
        if !x.is_finite() {
            return Err(Error::domain(format!(
                "log-moneyness must be finite, got {x}"
            )));
        }
        Ok(Self {
            x,
            tau,
            params,
            strike,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub x: f64,
    pub price: f64,
}

/// Per-unit-strike prices over a log-moneyness grid for one maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceCurve {
    pub points: Vec<PricePoint>,
    pub tau: f64,
    pub params: FracParams,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "time to maturity must be positive, got {tau}"
        )))
    }
}

/// The propagator over `tau`: the fractional Gaussian with scale `sigma * tau`.
pub fn kernel(tau: f64, params: &FracParams) -> Result<FracGauss> {
    check_tau(tau)?;
    Ok(FracGauss::new(params.with_sigma(params.sigma() * tau)?))
}

pub fn green(x: f64, tau: f64, params: &FracParams) -> Result<f64> {
    Ok(kernel(tau, params)?.density(x))
}

pub fn payoff(x: f64) -> f64 {
    x.exp_m1().max(0.0)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form price for the centred Gaussian kernel with variance `v = sigma * tau`.
pub fn call_price_gaussian_closed(x: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("variance must be positive, got {v}")));
    }
    let sd = v.sqrt();
    let price = (x + 0.5 * v).exp() * normal_cdf((x + v) / sd) - normal_cdf(x / sd);
    Ok(price.max(0.0))
}

/// Distance `u >= min_u` beyond the kernel centre at which `A u^beta - (x + u)` first stays
/// above `cutoff`.
fn upper_truncation(g: &FracGauss, x: f64, cutoff: f64) -> Result<f64> {
    let s = g.shape();
    let excess = |u: f64| s.a_coeff * u.powf(s.beta) - (x + u) - cutoff;
    // excess is convex in u with its minimum at (A beta)^(-1/(beta - 1))
    let u_min = (s.a_coeff * s.beta).powf(-1.0 / (s.beta - 1.0));
    if excess(u_min) >= 0.0 {
        return Ok(u_min);
    }
    let mut hi = u_min.max(s.scale());
    while excess(hi) < 0.0 {
        hi *= 2.0;
    }
    find_root_bracketed(excess, u_min, hi, &RootConfig::default())
}

/// Price per unit strike times `strike`, by adaptive quadrature of the pricing integral.
pub fn call_price(q: &PriceQuery, quad: &QuadConfig) -> Result<f64> {
    quad.validate()?;
    let g = kernel(q.tau, &q.params)?;
    Ok(q.strike * unit_call_price(&g, q.x, quad)?)
}

fn unit_call_price(g: &FracGauss, x: f64, quad: &QuadConfig) -> Result<f64> {
    let s = *g.shape();
    let cutoff = quad.tail_cutoff_exponent;
    let min_reach = 10.0 * s.scale();

    let upper = x + upper_truncation(g, x, cutoff)?.max(min_reach);
    if upper <= 0.0 {
        return Ok(0.0);
    }
    let integrand = |y: f64| {
        let u = (x - y).abs();
        y.exp_m1() * s.norm * (-s.a_coeff * u.powf(s.beta)).exp()
    };

    let mut value = 0.0;
    if x > 0.0 {
        let reach = (cutoff / s.a_coeff).powf(1.0 / s.beta).max(min_reach);
        let lower = (x - reach).max(0.0);
        value += integrate_adaptive(integrand, lower, x, quad)?.0;
        value += integrate_adaptive(integrand, x, upper, quad)?.0;
    } else {
        value += integrate_adaptive(integrand, 0.0, upper, quad)?.0;
    }
    Ok(value.max(0.0))
}

/// Prices on a strictly increasing log-moneyness grid; points are evaluated independently.
pub fn price_curve(
    x_grid: &[f64],
    tau: f64,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<PriceCurve> {
    check_increasing(x_grid, "log-moneyness")?;
    quad.validate()?;
    let g = kernel(tau, params)?;
    let prices: Vec<Result<f64>> = par::map_indexed(x_grid, |i, x| {
        unit_call_price(&g, *x, quad).map_err(|e| Error::at(i, e))
    });
    let points = x_grid
        .iter()
        .zip(prices)
        .map(|(x, p)| p.map(|price| PricePoint { x: *x, price }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceCurve {
        points,
        tau,
        params: *params,
    })
}

pub(crate) fn check_increasing(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "{what} grid contains non-finite values"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_adaptive_with_points;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(alpha: f64, sigma: f64) -> FracParams {
        FracParams::new(alpha, sigma).unwrap()
    }

    fn price(x: f64, tau: f64, p: FracParams) -> f64 {
        call_price(&PriceQuery::new(x, tau, p).unwrap(), &QuadConfig::default()).unwrap()
    }

    #[test]
    fn green_examples() {
        let p = params(1.7, 0.4);
        for x in [-1.0, 0.0, 0.3, 2.0] {
            assert_eq!(green(x, 1.0, &p).unwrap(), FracGauss::new(p).density(x));
        }
        let g = green(0.3, 0.5, &params(2.0, 0.5)).unwrap();
        let expected = (-0.09f64 / 0.5).exp() / (2.0 * PI * 0.25).sqrt();
        assert_relative_eq!(g, expected, max_relative = 1e-13);
        assert_relative_eq!(g, 0.666_449_6, max_relative = 1e-6);

        let quad = QuadConfig::default();
        let (mass, _) = integrate_adaptive_with_points(
            |x| green(x, 1e-3, &params(1.7, 0.25)).unwrap(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &[0.0],
            &quad,
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
        assert!(green(0.0, 0.0, &p).is_err());
        assert!(green(0.0, -1.0, &p).is_err());
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(payoff(0.0), 0.0);
        assert_relative_eq!(payoff(2f64.ln()), 1.0, max_relative = 1e-15);
        assert_eq!(payoff(-1.0), 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let c = call_price_gaussian_closed(0.0, 0.04).unwrap();
        assert_relative_eq!(c, 0.090_961_531_793_282, max_relative = 1e-12);
        assert!(call_price_gaussian_closed(-40.0, 0.04).unwrap() < 1e-300);
        let c = call_price_gaussian_closed(0.5, 1e-14).unwrap();
        assert_relative_eq!(c, 0.5f64.exp_m1(), max_relative = 1e-12);
        assert!(call_price_gaussian_closed(0.0, 0.0).is_err());
        assert!(call_price_gaussian_closed(0.0, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature() {
        // independent route: plain quadrature of the pricing integral with a Gaussian kernel
        let quad = QuadConfig::default();
        for (x, v) in [(0.0, 0.04), (-0.7, 0.3), (0.4, 0.15), (1.2, 0.6)] {
            let norm = (2.0 * PI * v).sqrt();
            let integrand = |y: f64| {
                let log_kernel = -(y - x) * (y - x) / (2.0 * v);
                ((y + log_kernel).exp() - log_kernel.exp()) / norm
            };
            let (q, _) = integrate_adaptive_with_points(
                integrand,
                0.0,
                f64::INFINITY,
                &[x.max(0.0) + 1e-9],
                &quad,
            )
            .unwrap();
            let c = call_price_gaussian_closed(x, v).unwrap();
            assert!((q - c).abs() < 1e-12, "x {x}, v {v}: {q} vs {c}");
        }
    }

    #[test]
    fn call_price_examples() {
        assert!(price(-10.0, 0.1, params(1.7, 0.25)) < 1e-6);
        // sigma * tau = 0.04
        let c = price(0.0, 0.16, params(2.0, 0.25));
        assert_relative_eq!(c, 0.090_961_531_793_282, max_relative = 1e-10);
        for tau in [1.5, 1.0, 0.5, 0.1] {
            for i in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                let frac = price(x, tau, params(1.7, 0.25));
                let gauss = price(x, tau, params(2.0, 0.25));
                assert!(frac >= gauss - 1e-12, "tau {tau} x {x}: {frac} < {gauss}");
            }
        }
    }

    #[test]
    fn strike_scales_price() {
        let p = params(1.7, 0.25);
        let quad = QuadConfig::default();
        let one = call_price(&PriceQuery::new(0.2, 0.5, p).unwrap(), &quad).unwrap();
        let two = call_price(&PriceQuery::with_strike(0.2, 0.5, p, 2.0).unwrap(), &quad).unwrap();
        assert_eq!(two, 2.0 * one);
        assert!(PriceQuery::with_strike(0.0, 1.0, p, 0.0).is_err());
        assert!(PriceQuery::new(0.0, 0.0, p).is_err());
        assert!(PriceQuery::new(f64::NAN, 1.0, p).is_err());
    }

    #[test]
    fn oracle_equivalence_at_alpha_two() {
        for sigma in [0.25, 0.5] {
            for tau in [0.1, 0.5, 1.0, 1.5] {
                for i in 0..=40 {
                    let x = -2.0 + 0.1 * i as f64;
                    let quad = price(x, tau, params(2.0, sigma));
                    let closed = call_price_gaussian_closed(x, sigma * tau).unwrap();
                    assert!(
                        (quad - closed).abs() <= 1e-8 * closed.max(1.0),
                        "sigma {sigma} tau {tau} x {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn maturity_limit() {
        let p = params(1.7, 0.25);
        for x in [-0.5, 0.0, 0.5] {
            assert!((price(x, 1e-4, p) - payoff(x)).abs() < 0.05);
        }
        let curve = price_curve(&[-1.0, 0.0, 1.0], 1e-4, &p, &QuadConfig::default()).unwrap();
        for pt in &curve.points {
            assert!((pt.price - payoff(pt.x)).abs() < 0.05);
        }
    }

    #[test]
    fn price_curve_matches_closed_form_at_alpha_two() {
        let grid: Vec<f64> = (0..=50).map(|i| -1.5 + 0.06 * i as f64).collect();
        let curve = price_curve(&grid, 0.7, &params(2.0, 0.4), &QuadConfig::default()).unwrap();
        assert_eq!(curve.points.len(), grid.len());
        for pt in &curve.points {
            let c = call_price_gaussian_closed(pt.x, 0.28).unwrap();
            assert!((pt.price - c).abs() <= 1e-8 * c.max(1e-300) || (pt.price - c).abs() < 1e-15);
        }
    }

    #[test]
    fn price_curve_is_convex_in_spot() {
        let n = 201;
        let spots: Vec<f64> = (0..n).map(|i| 0.4 + 0.01 * i as f64).collect();
        let grid: Vec<f64> = spots.iter().map(|s| s.ln()).collect();
        let curve = price_curve(&grid, 1.0, &params(1.7, 0.25), &QuadConfig::default()).unwrap();
        for i in 1..n - 1 {
            let (l, c, r) = (
                curve.points[i - 1].price,
                curve.points[i].price,
                curve.points[i + 1].price,
            );
            assert!(
                l - 2.0 * c + r >= -1e-11,
                "second difference at S = {}",
                spots[i]
            );
        }
    }

    #[test]
    fn price_curve_rejects_bad_grids() {
        let p = params(1.7, 0.25);
        let quad = QuadConfig::default();
        assert!(price_curve(&[], 1.0, &p, &quad).is_err());
        assert!(price_curve(&[0.0, 0.0], 1.0, &p, &quad).is_err());
        assert!(price_curve(&[0.5, 0.1], 1.0, &p, &quad).is_err());
    }

    #[test]
    fn price_curve_reports_failing_index() {
        let p = params(1.7, 0.25);
        let quad = QuadConfig {
            max_subdivisions: 1,
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            ..QuadConfig::default()
        };
        match price_curve(&[-20.0, 0.5, 0.8], 1.0, &p, &quad) {
            Err(Error::AtGridPoint { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected indexed failure, got {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn price_bounds_and_monotonicity(
                alpha in 0.5f64..2.9,
                sigma in 0.1f64..1.0,
                tau in 0.05f64..1.5,
                x in -2.0f64..2.0,
                dx in 0.001f64..0.5,
                dtau in 0.001f64..0.5,
            ) {
                let p = params(alpha, sigma);
                let c = price(x, tau, p);
                prop_assert!(c >= payoff(x) - 1e-12 * c.max(1.0));
                prop_assert!(price(x + dx, tau, p) >= c - 1e-12 * c.max(1.0));
                prop_assert!(price(x, tau + dtau, p) >= c - 1e-12 * c.max(1.0));
            }
        }
    }
}
