mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracgauss::implied_vol::{linspace, smile_curve};
use fracgauss::pricing::{call_price_gaussian_closed, payoff, price_curve};
use fracgauss::selfcheck::{self, SelfCheckOptions};
use fracgauss::{Anchor, Error, FracGauss, FracParams, QuadConfig, SmileMethod, SolverConfig};

use table::{Cell, Format, Table};

#[derive(Parser, Debug)]
#[command(
    name = "fracgauss",
    version,
    about = "Fractional Gaussian densities, call prices and implied-volatility smiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Density over an x grid.
    Density(Common),
    /// Cumulative distribution over an x grid.
    Cdf(Common),
    /// Seeded draws; --points sets the sample size.
    Sample(Common),
    /// Fractional and Gaussian call prices over a log-moneyness grid.
    Price(Common),
    /// Implied-volatility smiles over a spot grid.
    Smile(Common),
    /// Run the invariant suite.
    Selfcheck(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Time to maturity; repeat for several curves.
    #[arg(long)]
    tau: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    strike: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = AnchorArg::AtTheMoney)]
    anchor: AnchorArg,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    Exact,
    FirstOrder,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum AnchorArg {
    AtTheMoney,
    SigmaAlpha,
}

struct Defaults {
    alpha: f64,
    sigma: f64,
    tau: &'static [f64],
    grid: (f64, f64, usize),
}

const DENSITY_DEFAULTS: Defaults = Defaults {
    alpha: 2.0,
    sigma: 0.5,
    tau: &[],
    grid: (-3.0, 3.0, 121),
};
const SAMPLE_DEFAULTS: Defaults = Defaults {
    grid: (0.0, 0.0, 1000),
    ..DENSITY_DEFAULTS
};
const PRICE_DEFAULTS: Defaults = Defaults {
    alpha: 1.7,
    sigma: 0.25,
    tau: &[1.5, 1.0, 0.5, 0.1],
    grid: (-1.0, 1.0, 101),
};
const SMILE_DEFAULTS: Defaults = Defaults {
    alpha: 1.7,
    sigma: 0.4,
    tau: &[0.5, 0.6, 0.7, 0.8, 0.9],
    grid: (0.5, 1.5, 101),
};

enum Failure {
    Invalid(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_domain() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

struct RunConfig {
    params: FracParams,
    taus: Vec<f64>,
    grid: Vec<f64>,
    points: usize,
    solver: SolverConfig,
}

impl RunConfig {
    fn resolve(c: &Common, d: &Defaults) -> Result<Self, Failure> {
        let params = FracParams::new(c.alpha.unwrap_or(d.alpha), c.sigma.unwrap_or(d.sigma))?;
        let taus = if c.tau.is_empty() {
            d.tau.to_vec()
        } else {
            c.tau.clone()
        };
        if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Failure::Invalid(format!("tau must be positive, got {t}")));
        }
        let (lo, hi) = (c.x_min.unwrap_or(d.grid.0), c.x_max.unwrap_or(d.grid.1));
        let points = c.points.unwrap_or(d.grid.2);
        if !(c.strike > 0.0 && c.strike.is_finite()) {
            return Err(Failure::Invalid(format!(
                "strike must be positive, got {}",
                c.strike
            )));
        }

        let mut solver = SolverConfig::default();
        if let Some(t) = c.abs_tol {
            solver.quad.abs_tol = t;
        }
        if let Some(t) = c.rel_tol {
            solver.quad.rel_tol = t;
        }
        solver.quad.validate()?;

        Ok(Self {
            params,
            taus,
            grid: Vec::new(),
            points,
            solver,
        }
        .with_grid(lo, hi))
    }

    fn with_grid(mut self, lo: f64, hi: f64) -> Self {
        if lo < hi && self.points >= 2 {
            self.grid = linspace(lo, hi, self.points);
        }
        self
    }

    fn require_grid(&self) -> Result<&[f64], Failure> {
        if self.grid.is_empty() {
            Err(Failure::Invalid(
                "grid needs x-min < x-max and at least 2 points".into(),
            ))
        } else {
            Ok(&self.grid)
        }
    }

    fn quad(&self) -> &QuadConfig {
        &self.solver.quad
    }
}

fn density(c: &Common) -> Result<Table, Failure> {
    let cfg = RunConfig::resolve(c, &DENSITY_DEFAULTS)?;
    let d = FracGauss::new(cfg.params);
    let mut t = Table::new(&["x", "density"]);
    for &x in cfg.require_grid()? {
        t.push(vec![x.into(), d.density(x).into()]);
    }
    Ok(t)
}

fn cdf(c: &Common) -> Result<Table, Failure> {
    let cfg = RunConfig::resolve(c, &DENSITY_DEFAULTS)?;
    let d = FracGauss::new(cfg.params);
    let mut t = Table::new(&["x", "cdf"]);
    for &x in cfg.require_grid()? {
        t.push(vec![x.into(), d.cdf(x).into()]);
    }
    Ok(t)
}

fn sample(c: &Common) -> Result<Table, Failure> {
    let cfg = RunConfig::resolve(c, &SAMPLE_DEFAULTS)?;
    if cfg.points == 0 {
        return Err(Failure::Invalid("sample size must be at least 1".into()));
    }
    let draws = FracGauss::new(cfg.params).sample(cfg.points, c.seed)?;
    let mut t = Table::new(&["index", "value"]);
    for (i, v) in draws.into_iter().enumerate() {
        t.push(vec![(i as f64).into(), v.into()]);
    }
    Ok(t)
}

fn price(c: &Common) -> Result<Table, Failure> {
    let cfg = RunConfig::resolve(c, &PRICE_DEFAULTS)?;
    let grid = cfg.require_grid()?;
    let k = c.strike;
    let mut t = Table::new(&["x", "S", "price_frac", "price_gauss", "payoff", "tau"]);
    for &tau in &cfg.taus {
        let curve = price_curve(grid, tau, &cfg.params, cfg.quad())?;
        for pt in &curve.points {
            let gauss = call_price_gaussian_closed(pt.x, cfg.params.sigma() * tau)?;
            t.push(vec![
                pt.x.into(),
                (k * pt.x.exp()).into(),
                (k * pt.price).into(),
                (k * gauss).into(),
                (k * payoff(pt.x)).into(),
                tau.into(),
            ]);
        }
    }
    Ok(t)
}

fn smile(c: &Common) -> Result<Table, Failure> {
    let cfg = RunConfig::resolve(c, &SMILE_DEFAULTS)?;
    let spots = cfg.require_grid()?;
    if spots[0] <= 0.0 {
        return Err(Failure::Invalid("spot grid must be positive".into()));
    }
    let method = match (c.method, c.anchor) {
        (MethodArg::Exact, _) => SmileMethod::Exact,
        (MethodArg::FirstOrder, AnchorArg::AtTheMoney) => {
            SmileMethod::FirstOrder(Anchor::AtTheMoney)
        }
        (MethodArg::FirstOrder, AnchorArg::SigmaAlpha) => {
            SmileMethod::FirstOrder(Anchor::SigmaAlpha)
        }
    };
    let mut t = Table::new(&["S", "sigma_imp", "tau", "method"]);
    for &tau in &cfg.taus {
        let curve = smile_curve(spots, tau, &cfg.params, method, &cfg.solver)?;
        for pt in &curve.points {
            t.push(vec![
                pt.spot.into(),
                pt.sigma_imp.into(),
                tau.into(),
                Cell::Text(method.name()),
            ]);
        }
    }
    Ok(t)
}

fn run_selfcheck(c: &Common) -> Result<bool, Failure> {
    let options = SelfCheckOptions {
        solver: RunConfig::resolve(c, &DENSITY_DEFAULTS)?.solver,
        ..SelfCheckOptions::default()
    };
    let report = selfcheck::run(&options)?;
    for line in &report {
        println!("{line}");
    }
    Ok(report.iter().all(|c| c.passed))
}

fn emit(table: Table, c: &Common) -> Result<(), Failure> {
    let text = table.render(c.format);
    match &c.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(format!("cannot write output: {e}")))
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FRACGAUSS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Invalid(format!(
            "FRACGAUSS_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Selfcheck(c) => run_selfcheck(c).map(|ok| if ok { 0 } else { 1 }),
        Command::Density(c) => density(c).and_then(|t| emit(t, c)).map(|_| 0),
        Command::Cdf(c) => cdf(c).and_then(|t| emit(t, c)).map(|_| 0),
        Command::Sample(c) => sample(c).and_then(|t| emit(t, c)).map(|_| 0),
        Command::Price(c) => price(c).and_then(|t| emit(t, c)).map(|_| 0),
        Command::Smile(c) => smile(c).and_then(|t| emit(t, c)).map(|_| 0),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
