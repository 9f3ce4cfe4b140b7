//! The extremal fractional Gaussian family.
//!
//! For a Lévy exponent `alpha` in (0, 3) and a variance-like scale `sigma > 0` the density is
//!
//! ```text
//! P(x) = N * exp(-|x| s(x) + (sigma / 2) s(x)^(4 - alpha)),
//! s(x) = (2 |x| / (sigma (4 - alpha)))^(1 / (3 - alpha))
//! ```
//!
//! where `s(x)` minimises the Chernoff exponent `-s|x| + (sigma/2) s^(4-alpha)`.
//!
//! Substituting `s(x)` collapses the two exponentials into a single stretched exponential.
//! With `c = 2 / (sigma (4 - alpha))` we have `s = (c|x|)^(1/(3-alpha))`, so
//! `|x| s = c^(1/(3-alpha)) |x|^beta` and `(sigma/2) s^(4-alpha) = c^(1/(3-alpha)) |x|^beta / (4 - alpha)`
//! with `beta = (4 - alpha) / (3 - alpha)`. Hence
//!
//! ```text
//! P(x) = N * exp(-A |x|^beta),   A = ((3 - alpha) / (4 - alpha)) * c^(1 / (3 - alpha)).
//! ```
//!
//! The total mass of `exp(-A|x|^beta)` is `(2 / beta) Gamma(1 / beta) A^(-1/beta)`, which gives
//! `N = A^(1/beta) / (2 Gamma(1 + 1/beta))` with `1 + 1/beta = (2 alpha - 7) / (alpha - 4)`.
//! At `alpha = 2` this is the centred Gaussian with variance `sigma`.
//!
//! The same substitution shows the family is a scale family:
//! `P(x; alpha, sigma) = P(x / lambda; alpha, 1) / lambda` with `lambda = sigma^(1/(4-alpha))`.
//! As `alpha -> 3` the exponent tends to `(2|x| / sigma)^beta` with `beta -> inf`, i.e. a plateau
//! of half-width `sigma / 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::checked_gamma_ur;

use crate::error::{Error, Result};
use crate::numerics::{self, find_root_bracketed, QuadConfig, RootConfig};
use crate::par;

/// The pair `(alpha, sigma)` parametrising a fractional Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    alpha: f64,
    sigma: f64,
}

impl FracParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 3.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 3), got {alpha}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { alpha, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same exponent, different scale.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.alpha, sigma)
    }
}

/// Derived constants of `P(x) = norm * exp(-a_coeff * |x|^beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeCache {
    pub beta: f64,
    pub a_coeff: f64,
    pub norm: f64,
}

impl ShapeCache {
    /// Natural length scale `A^(-1/beta)` of the density.
    pub fn scale(&self) -> f64 {
        self.a_coeff.powf(-1.0 / self.beta)
    }
}

/// Stretch exponent, decay coefficient and the closed-form normalisation.
pub fn shape(params: &FracParams) -> ShapeCache {
    let FracParams { alpha, sigma } = *params;
    let beta = (4.0 - alpha) / (3.0 - alpha);
    let a_coeff =
        (3.0 - alpha) / (4.0 - alpha) * (2.0 / (sigma * (4.0 - alpha))).powf(1.0 / (3.0 - alpha));
    let gamma_arg = (2.0 * alpha - 7.0) / (alpha - 4.0);
    // gamma_arg lies in (1, 7/4) for alpha in (0, 3)
    let gamma_value = numerics::gamma(gamma_arg).expect("gamma argument is positive");
    let norm = 0.5 * a_coeff.powf((3.0 - alpha) / (4.0 - alpha)) / gamma_value;
    ShapeCache {
        beta,
        a_coeff,
        norm,
    }
}

/// Minimiser over `s > 0` of the Chernoff exponent `-s|x| + (sigma/2) s^(4-alpha)`.
pub fn saddle_s(x: f64, params: &FracParams) -> f64 {
    let FracParams { alpha, sigma } = *params;
    (2.0 * x.abs() / (sigma * (4.0 - alpha))).powf(1.0 / (3.0 - alpha))
}

/// The Chernoff exponent `-s|x| + (sigma/2) s^(4-alpha)` whose minimiser is [`saddle_s`].
pub fn chernoff_exponent(s: f64, x: f64, params: &FracParams) -> f64 {
    -s * x.abs() + 0.5 * params.sigma * s.powf(4.0 - params.alpha)
}

/// Which algebraic route evaluates the unnormalised log-density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDensityForm {
    /// The two exponential factors evaluated literally through the saddle point.
    Product,
    /// `-A |x|^beta`.
    Simplified,
}

/// The fractional Gaussian with its cached shape constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracGauss {
    params: FracParams,
    shape: ShapeCache,
}

impl FracGauss {
    pub fn new(params: FracParams) -> Self {
        Self {
            params,
            shape: shape(&params),
        }
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn shape(&self) -> &ShapeCache {
        &self.shape
    }

    pub fn log_density_unnormalized(&self, x: f64, form: LogDensityForm) -> f64 {
        match form {
            LogDensityForm::Product => {
                let s = saddle_s(x, &self.params);
                let first = -x.abs() * s;
                let second = 0.5 * self.params.sigma * s.powf(4.0 - self.params.alpha);
                first + second
            }
            LogDensityForm::Simplified => -self.shape.a_coeff * x.abs().powf(self.shape.beta),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.shape.norm
            * self
                .log_density_unnormalized(x, LogDensityForm::Simplified)
                .exp()
    }

    /// Mass beyond `|x|` on one side, `P(X > |x|)`, via the regularised upper incomplete gamma:
    /// `A X^beta` is Gamma(1/beta, 1) distributed for `X = |x|`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let u = self.shape.a_coeff * x.abs().powf(self.shape.beta);
        if u == 0.0 {
            return 0.5;
        }
        if u.is_infinite() {
            return 0.0;
        }
        0.5 * checked_gamma_ur(1.0 / self.shape.beta, u).unwrap_or(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.upper_tail(x)
        } else {
            1.0 - self.upper_tail(x)
        }
    }

    /// The distribution function by adaptive quadrature of the density from 0.
    pub fn cdf_by_quadrature(&self, x: f64, quad: &QuadConfig) -> Result<f64> {
        let (half, _) = numerics::integrate_adaptive(|t| self.density(t), 0.0, x.abs(), quad)?;
        Ok(if x < 0.0 { 0.5 - half } else { 0.5 + half })
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.quantile_with(p, &RootConfig::default())
    }

    pub fn quantile_with(&self, p: f64, root: &RootConfig) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "probability must lie in (0, 1), got {p}"
            )));
        }
        if p == 0.5 {
            return Ok(0.0);
        }
        let tail = if p < 0.5 { p } else { 1.0 - p };
        let mut hi = self.shape.scale();
        while self.upper_tail(hi) > tail {
            hi *= 2.0;
        }
        let y = find_root_bracketed(|y| self.upper_tail(y) - tail, 0.0, hi, root)?;
        Ok(if p < 0.5 { -y } else { y })
    }

    /// Draws `n` variates by inverse-CDF transform of a seeded ChaCha8 stream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut sampler = Sampler::new(*self, seed);
        sampler.draw_many(n)
    }

    /// Asymptotic half-width `sigma / 2` of the plateau the density approaches as
    /// `alpha -> 3`. Only meaningful close to that limit.
    pub fn plateau_edge(&self) -> f64 {
        plateau_edge(&self.params)
    }
}

pub fn plateau_edge(params: &FracParams) -> f64 {
    0.5 * params.sigma
}

/// Seeded inverse-CDF sampler. Owns its generator; use one per thread.
#[derive(Debug, Clone)]
pub struct Sampler {
    dist: FracGauss,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(dist: FracGauss, seed: u64) -> Self {
        Self {
            dist,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn draw(&mut self) -> Result<f64> {
        let u = self.uniform();
        self.dist.quantile(u)
    }

    /// Uniforms are drawn sequentially, so the output does not depend on how the
    /// quantile inversions are scheduled.
    pub fn draw_many(&mut self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        let uniforms: Vec<f64> = (0..n).map(|_| self.uniform()).collect();
        let dist = self.dist;
        par::map_indexed(&uniforms, |_, u| dist.quantile(*u))
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn fg(alpha: f64, sigma: f64) -> FracGauss {
        FracGauss::new(FracParams::new(alpha, sigma).unwrap())
    }

    fn gaussian(x: f64, var: f64) -> f64 {
        (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    #[test]
    fn params_domain() {
        assert!(FracParams::new(0.0, 1.0).is_err());
        assert!(FracParams::new(3.0, 1.0).is_err());
        assert!(FracParams::new(-0.5, 1.0).is_err());
        assert!(FracParams::new(1.7, 0.0).is_err());
        assert!(FracParams::new(1.7, -1.0).is_err());
        assert!(FracParams::new(f64::NAN, 1.0).is_err());
        assert!(FracParams::new(1.7, f64::INFINITY).is_err());
        assert!(FracParams::new(2.999, 1e-3).is_ok());
    }

    #[test]
    fn shape_at_alpha_two_is_gaussian() {
        let s = shape(&FracParams::new(2.0, 0.5).unwrap());
        assert_relative_eq!(s.norm, 1.0 / PI.sqrt(), max_relative = 1e-13);
        for sigma in [0.25, 0.5, 1.0, 3.0] {
            let s = shape(&FracParams::new(2.0, sigma).unwrap());
            assert_relative_eq!(s.beta, 2.0);
            assert_relative_eq!(s.a_coeff, 1.0 / (2.0 * sigma), max_relative = 1e-14);
        }
    }

    #[test]
    fn shape_invariants() {
        for alpha in [0.1, 0.5, 1.2, 1.7, 2.0, 2.5, 2.9, 2.99] {
            for sigma in [0.25, 0.5, 1.0, 2.0] {
                let s = shape(&FracParams::new(alpha, sigma).unwrap());
                assert!(s.beta > 1.0 && s.a_coeff > 0.0 && s.norm > 0.0);
                let mass = s.norm
                    * (2.0 / s.beta)
                    * numerics::gamma(1.0 / s.beta).unwrap()
                    * s.a_coeff.powf(-1.0 / s.beta);
                assert!(
                    (mass - 1.0).abs() < 1e-10,
                    "alpha {alpha} sigma {sigma}: {mass}"
                );
            }
        }
    }

    #[test]
    fn normalisation_matches_quadrature_at_1_7() {
        let d = fg(1.7, 0.25);
        let quad = QuadConfig::default();
        let s = d.shape();
        let (half, _) = numerics::integrate_adaptive(
            |y| (-s.a_coeff * y.powf(s.beta)).exp(),
            0.0,
            f64::INFINITY,
            &quad,
        )
        .unwrap();
        assert!((s.norm - 1.0 / (2.0 * half)).abs() <= 1e-10 * s.norm);
    }

    #[test]
    fn saddle_examples() {
        let p = FracParams::new(2.0, 0.25).unwrap();
        assert_relative_eq!(saddle_s(0.5, &p), 2.0, max_relative = 1e-14);
        assert_eq!(saddle_s(0.0, &FracParams::new(1.3, 0.7).unwrap()), 0.0);

        let p = FracParams::new(1.7, 0.5).unwrap();
        let s = saddle_s(0.8, &p);
        let h = numerics::default_step(s);
        let d = numerics::central_diff(|t| Ok(chernoff_exponent(t, 0.8, &p)), s, h).unwrap();
        assert!(d.abs() <= 1e-6 * s.abs());
    }

    #[test]
    fn log_density_examples() {
        let d = fg(2.0, 0.5);
        for form in [LogDensityForm::Product, LogDensityForm::Simplified] {
            assert_eq!(d.log_density_unnormalized(0.0, form), 0.0);
            assert_relative_eq!(
                d.log_density_unnormalized(1.0, form),
                -1.0,
                max_relative = 1e-14
            );
        }
        let d = fg(1.7, 0.5);
        let a = d.log_density_unnormalized(1.3, LogDensityForm::Product);
        let b = d.log_density_unnormalized(1.3, LogDensityForm::Simplified);
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn density_examples() {
        assert_relative_eq!(
            fg(2.0, 0.5).density(0.0),
            0.564_189_583_547_756_3,
            max_relative = 1e-13
        );
        let d = fg(1.3, 0.8);
        assert_eq!(d.density(0.7), d.density(-0.7));
        assert!(fg(1.5, 0.5).density(2.0) > fg(2.0, 0.5).density(2.0));
        assert!(fg(2.5, 0.5).density(2.0) < fg(2.0, 0.5).density(2.0));
    }

    #[test]
    fn gaussian_reduction() {
        for sigma in [0.25, 0.5, 1.0, 2.0] {
            let d = fg(2.0, sigma);
            let worst = (0..=1000)
                .map(|i| -5.0 + 0.01 * i as f64)
                .map(|x| (d.density(x) - gaussian(x, sigma)).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-10, "sigma {sigma}: {worst}");
        }
    }

    #[test]
    fn cdf_examples() {
        let d = fg(1.7, 0.4);
        assert_eq!(d.cdf(0.0), 0.5);
        let far = 50.0 * d.shape().scale();
        assert!((d.cdf(far) - 1.0).abs() < 1e-10);
        assert!(d.cdf(-far) < 1e-10);
        // standard normal at 1
        assert!((fg(2.0, 1.0).cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
    }

    #[test]
    fn cdf_routes_agree() {
        let quad = QuadConfig::default();
        for (alpha, sigma) in [(0.5, 0.25), (1.7, 0.4), (2.0, 1.0), (2.9, 2.0)] {
            let d = fg(alpha, sigma);
            for x in [-3.0, -1.1, -0.2, 0.0, 0.05, 0.9, 2.5] {
                let a = d.cdf(x);
                let b = d.cdf_by_quadrature(x, &quad).unwrap();
                assert!((a - b).abs() < 1e-12, "alpha {alpha} x {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let d = fg(1.7, 0.4);
        assert_eq!(d.quantile(0.5).unwrap(), 0.0);
        for x in [-1.2, 0.3, 2.0] {
            let back = d.quantile(d.cdf(x)).unwrap();
            assert!((back - x).abs() < 1e-8, "x {x}: {back}");
        }
        let q = fg(2.0, 1.0).quantile(0.841_344_7).unwrap();
        assert!((q - 1.0).abs() < 1e-6);
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(d.quantile(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = fg(1.7, 0.4);
        let a = d.sample(500, 42).unwrap();
        let b = d.sample(500, 42).unwrap();
        let c = d.sample(500, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(d.sample(0, 1).is_err());
        let mut sampler = Sampler::new(d, 42);
        assert_eq!(sampler.draw().unwrap(), a[0]);
    }

    #[test]
    fn gaussian_sample_variance() {
        let xs = fg(2.0, 1.0).sample(100_000, 7).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn plateau_near_alpha_three() {
        let d = fg(2.99, 2.0);
        assert_eq!(d.plateau_edge(), 1.0);
        let at0 = d.density(0.0);
        assert!(d.density(0.5) / at0 > 0.99);
        assert!(d.density(1.5) / at0 < 1e-3);

        let d = fg(2.99, 1.0);
        assert_eq!(d.plateau_edge(), 0.5);
        let at0 = d.density(0.0);
        assert!(d.density(0.25) / at0 > 0.99);
        assert!(d.density(0.75) / at0 < 1e-3);

        assert_eq!(plateau_edge(&FracParams::new(2.0, 2.0).unwrap()), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = FracParams> {
            (0.3f64..2.95, 0.1f64..3.0).prop_map(|(a, s)| FracParams::new(a, s).unwrap())
        }

        proptest! {
            #[test]
            fn forms_agree(p in params(), x in -10.0f64..10.0) {
                let d = FracGauss::new(p);
                let a = d.log_density_unnormalized(x, LogDensityForm::Product);
                let b = d.log_density_unnormalized(x, LogDensityForm::Simplified);
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
            }

            #[test]
            fn symmetric_and_decreasing(p in params(), x in 0.001f64..5.0, dx in 0.001f64..1.0) {
                let d = FracGauss::new(p);
                prop_assert_eq!(d.density(x), d.density(-x));
                let (near, far) = (d.density(x), d.density(x + dx));
                prop_assert!(far < near || (far == 0.0 && near == 0.0));
            }

            #[test]
            fn scale_family(alpha in 0.3f64..2.95, sigma in 0.1f64..3.0, x in -4.0f64..4.0) {
                let d = FracGauss::new(FracParams::new(alpha, sigma).unwrap());
                let unit = FracGauss::new(FracParams::new(alpha, 1.0).unwrap());
                let lambda = sigma.powf(1.0 / (4.0 - alpha));
                let lhs = d.density(x);
                let rhs = unit.density(x / lambda) / lambda;
                prop_assume!(lhs > 1e-250);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs, "{} vs {}", lhs, rhs);
            }

            #[test]
            fn saddle_is_a_minimum(alpha in 0.5f64..2.9, sigma in 0.1f64..3.0, x in 0.05f64..5.0) {
                let p = FracParams::new(alpha, sigma).unwrap();
                let s = saddle_s(x, &p);
                let f = |t: f64| Ok(chernoff_exponent(t, x, &p));
                let d1 = numerics::central_diff(f, s, 1e-5 * s).unwrap();
                prop_assert!(d1.abs() <= 1e-6 * x);
                let h2 = 1e-3 * s;
                let d2 = (chernoff_exponent(s + h2, x, &p) - 2.0 * chernoff_exponent(s, x, &p)
                    + chernoff_exponent(s - h2, x, &p)) / (h2 * h2);
                prop_assert!(d2 > 0.0);
            }

            #[test]
            fn cdf_antisymmetric_and_monotone(p in params(), x in 0.0f64..4.0, dx in 0.0f64..1.0) {
                let d = FracGauss::new(p);
                prop_assert!((d.cdf(-x) - (1.0 - d.cdf(x))).abs() < 1e-14);
                prop_assert!(d.cdf(x + dx) >= d.cdf(x));
            }
        }
    }
}
