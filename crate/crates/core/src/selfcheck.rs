//! Invariant suite run by `fracgauss selfcheck`.

use std::fmt;

use crate::error::Result;
use crate::fracgauss::{chernoff_exponent, saddle_s, FracGauss, FracParams, LogDensityForm};
use crate::implied_vol::{gaussian_price, implied_vol_exact, linspace, SolverConfig};
use crate::numerics::{central_diff, integrate_adaptive, integrate_adaptive_with_points};
use crate::pricing::{call_price, call_price_gaussian_closed, PriceQuery};

pub const ALPHA_GRID: [f64; 7] = [0.5, 1.2, 1.5, 1.7, 2.0, 2.5, 2.9];
pub const SIGMA_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn below(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured < tolerance,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} error {:.3e} (tolerance {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

/// Knobs for exercising the suite itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCheckOptions {
    /// Multiplies the normalisation constant in the mass checks; 1 for a genuine run.
    pub norm_scale: f64,
    pub solver: SolverConfig,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        Self {
            norm_scale: 1.0,
            solver: SolverConfig::default(),
        }
    }
}

fn param_grid() -> impl Iterator<Item = FracParams> {
    ALPHA_GRID.iter().flat_map(|&a| {
        SIGMA_GRID
            .iter()
            .map(move |&s| FracParams::new(a, s).expect("grid parameters are valid"))
    })
}

/// Largest `|∫P - 1|` over the parameter grid, integrating over the real line.
pub fn normalization_error(norm_scale: f64, solver: &SolverConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in param_grid() {
        let d = FracGauss::new(p);
        let (mass, _) = integrate_adaptive_with_points(
            |x| norm_scale * d.density(x),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &[0.0],
            &solver.quad,
        )?;
        worst = worst.max((mass - 1.0).abs());
    }
    Ok(worst)
}

/// Largest relative gap between the closed-form normalisation and `1 / (2 ∫_0^∞ e^{-A y^β} dy)`.
pub fn closed_form_norm_error(norm_scale: f64, solver: &SolverConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in param_grid() {
        let s = *FracGauss::new(p).shape();
        let (half, _) = integrate_adaptive(
            |y| (-s.a_coeff * y.powf(s.beta)).exp(),
            0.0,
            f64::INFINITY,
            &solver.quad,
        )?;
        let norm = norm_scale * s.norm;
        worst = worst.max((norm - 0.5 / half).abs() / norm);
    }
    Ok(worst)
}

/// Sup over `x in [-5, 5]` of the gap between the `alpha = 2` density and the Gaussian.
pub fn gaussian_reduction_error() -> f64 {
    let mut worst: f64 = 0.0;
    for sigma in SIGMA_GRID {
        let d = FracGauss::new(FracParams::new(2.0, sigma).expect("valid"));
        for i in 0..=2000 {
            let x = -5.0 + 0.005 * i as f64;
            let g = (-x * x / (2.0 * sigma)).exp() / (2.0 * std::f64::consts::PI * sigma).sqrt();
            worst = worst.max((d.density(x) - g).abs());
        }
    }
    worst
}

/// Largest relative disagreement of the product and simplified log-densities on `[-10, 10]`.
pub fn form_equivalence_error() -> f64 {
    let mut worst: f64 = 0.0;
    for p in param_grid() {
        let d = FracGauss::new(p);
        for i in 0..=400 {
            let x = -10.0 + 0.05 * i as f64;
            let a = d.log_density_unnormalized(x, LogDensityForm::Product);
            let b = d.log_density_unnormalized(x, LogDensityForm::Simplified);
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

/// Largest `|quadrature - closed form| / max(1, price)` at `alpha = 2`.
pub fn pricing_oracle_error(solver: &SolverConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for sigma in [0.25, 0.5] {
        let p = FracParams::new(2.0, sigma)?;
        for tau in [0.1, 0.5, 1.0, 1.5] {
            for i in 0..=40 {
                let x = -2.0 + 0.1 * i as f64;
                let quad = call_price(&PriceQuery::new(x, tau, p)?, &solver.quad)?;
                let closed = call_price_gaussian_closed(x, sigma * tau)?;
                worst = worst.max((quad - closed).abs() / closed.max(1.0));
            }
        }
    }
    Ok(worst)
}

/// Largest price mismatch after re-pricing at the exact implied volatility.
pub fn implied_vol_round_trip_error(solver: &SolverConfig) -> Result<f64> {
    let p = FracParams::new(1.7, 0.4)?;
    let mut worst: f64 = 0.0;
    for tau in [0.5, 0.7, 0.9] {
        for spot in linspace(0.5, 1.5, 21) {
            let target = call_price(&PriceQuery::new(spot.ln(), tau, p)?, &solver.quad)?;
            let vol = implied_vol_exact(spot, tau, &p, solver)?;
            worst = worst.max((gaussian_price(spot, vol, tau)? - target).abs());
        }
    }
    Ok(worst)
}

/// Largest scaled derivative of the Chernoff exponent at the saddle point.
pub fn saddle_stationarity_error() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in param_grid() {
        for x in [0.1, 0.5, 1.0, 3.0] {
            let s = saddle_s(x, &p);
            let d = central_diff(|t| Ok(chernoff_exponent(t, x, &p)), s, 1e-5 * s)?;
            worst = worst.max(d.abs() / x);
        }
    }
    Ok(worst)
}

pub fn run(options: &SelfCheckOptions) -> Result<Vec<CheckOutcome>> {
    let solver = &options.solver;
    Ok(vec![
        CheckOutcome::below(
            "normalization",
            normalization_error(options.norm_scale, solver)?,
            1e-8,
        ),
        CheckOutcome::below(
            "closed-form normalization",
            closed_form_norm_error(options.norm_scale, solver)?,
            1e-10,
        ),
        CheckOutcome::below("gaussian reduction", gaussian_reduction_error(), 1e-10),
        CheckOutcome::below("log-density forms", form_equivalence_error(), 1e-12),
        CheckOutcome::below("pricing oracle", pricing_oracle_error(solver)?, 1e-8),
        CheckOutcome::below(
            "implied-vol round trip",
            implied_vol_round_trip_error(solver)?,
            1e-8,
        ),
        CheckOutcome::below("saddle stationarity", saddle_stationarity_error()?, 1e-6),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genuine_run_passes() {
        let report = run(&SelfCheckOptions::default()).unwrap();
        for line in &report {
            assert!(line.passed, "{line}");
        }
    }

    #[test]
    fn wrong_normalisation_is_caught() {
        let options = SelfCheckOptions {
            norm_scale: 1.0 + 1e-6,
            ..SelfCheckOptions::default()
        };
        let report = run(&options).unwrap();
        let failed: Vec<_> = report
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        assert_eq!(failed, ["normalization", "closed-form normalization"]);
    }
}
