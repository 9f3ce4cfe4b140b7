//! Browser bindings for the demo page. The plain functions are tested natively; the
//! `wasm_bindgen` wrappers only convert errors.

use fracgauss::implied_vol::{linspace, smile_curve};
use fracgauss::pricing::{call_price_gaussian_closed, price_curve};
use fracgauss::{Anchor, FracGauss, FracParams, SmileMethod, SolverConfig};
use wasm_bindgen::prelude::*;

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(lo < hi) || points < 2 {
        return Err("grid needs min < max and at least 2 points".into());
    }
    Ok(linspace(lo, hi, points))
}

/// Density values on `points` evenly spaced x in `[x_min, x_max]`.
pub fn density_values(
    alpha: f64,
    sigma: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let d = FracGauss::new(FracParams::new(alpha, sigma).map_err(|e| e.to_string())?);
    Ok(grid(x_min, x_max, points)?
        .iter()
        .map(|x| d.density(*x))
        .collect())
}

/// Fractional then Gaussian unit-strike prices over the log-moneyness grid, `2 * points`
/// values.
pub fn price_values(
    alpha: f64,
    sigma: f64,
    tau: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let p = FracParams::new(alpha, sigma).map_err(|e| e.to_string())?;
    let xs = grid(x_min, x_max, points)?;
    let curve =
        price_curve(&xs, tau, &p, &SolverConfig::default().quad).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = curve.points.iter().map(|pt| pt.price).collect();
    for x in &xs {
        out.push(call_price_gaussian_closed(*x, sigma * tau).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Implied volatilities over the spot grid; missing points are NaN.
pub fn smile_values(
    alpha: f64,
    sigma: f64,
    tau: f64,
    s_min: f64,
    s_max: f64,
    points: usize,
    first_order: bool,
) -> Result<Vec<f64>, String> {
    let p = FracParams::new(alpha, sigma).map_err(|e| e.to_string())?;
    let spots = grid(s_min, s_max, points)?;
    let method = if first_order {
        SmileMethod::FirstOrder(Anchor::AtTheMoney)
    } else {
        SmileMethod::Exact
    };
    let curve = smile_curve(&spots, tau, &p, method, &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    Ok(curve
        .points
        .iter()
        .map(|pt| pt.sigma_imp.unwrap_or(f64::NAN))
        .collect())
}

#[wasm_bindgen(js_name = densityCurve)]
pub fn density_curve(
    alpha: f64,
    sigma: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    density_values(alpha, sigma, x_min, x_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = priceCurves)]
pub fn price_curves(
    alpha: f64,
    sigma: f64,
    tau: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    price_values(alpha, sigma, tau, x_min, x_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = smileCurve)]
pub fn smile(
    alpha: f64,
    sigma: f64,
    tau: f64,
    s_min: f64,
    s_max: f64,
    points: usize,
    first_order: bool,
) -> Result<Vec<f64>, JsError> {
    smile_values(alpha, sigma, tau, s_min, s_max, points, first_order).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_density() {
        let v = density_values(2.0, 0.5, -1.0, 1.0, 3).unwrap();
        let peak = 1.0 / std::f64::consts::PI.sqrt();
        assert!((v[1] - peak).abs() < 1e-14);
        assert!((v[0] - peak * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn price_layout() {
        let v = price_values(1.7, 0.25, 0.5, -1.0, 1.0, 11).unwrap();
        assert_eq!(v.len(), 22);
        for i in 0..11 {
            assert!(v[i] >= v[11 + i] - 1e-12);
        }
    }

    #[test]
    fn flat_smile() {
        for first_order in [false, true] {
            let v = smile_values(2.0, 0.4, 0.6, 0.8, 1.2, 5, first_order).unwrap();
            assert!(v.iter().all(|s| (s - 0.4).abs() < 1e-8));
        }
    }

    #[test]
    fn bad_input() {
        assert!(density_values(3.0, 0.5, -1.0, 1.0, 3).is_err());
        assert!(price_values(1.7, 0.25, 0.5, 1.0, -1.0, 11).is_err());
        assert!(smile_values(1.7, 0.4, 0.0, 0.8, 1.2, 5, false).is_err());
    }
}
