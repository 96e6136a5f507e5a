//! Run configuration: TOML in, validated operator/geometry out.
//!
//! Fourier amplitudes in the file describe b(x, ξ) = Σ c(θ, ξ) e^{iθ·x};
//! the stored coefficients are b̂ = √dc · c.

use crate::error::{Error, Result};
use crate::fiber::{OperatorSpec, Truncation};
use crate::lattice::Lattice;
use crate::params::{Geometry, ResonanceParams, SymbolClass};
use crate::symbol::magnetic::{magnetic_schrodinger, RealMode};
use crate::symbol::{symmetry_residual, Coeff, Expr, ModeSymbol, Sym, Symbol};
use crate::geom::{ivec, Vecd};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub resonance: ResonanceConfig,
    #[serde(default)]
    pub gauge: GaugeConfig,
    #[serde(default)]
    pub fiber: FiberConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    /// Basis vectors of Γ; absent means (2πZ)^d.
    pub basis: Option<Vec<Vec<f64>>>,
}

fn default_d() -> usize {
    2
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { d: 2, basis: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExprMode {
    pub theta: Vec<i32>,
    /// Expression in xi1 … xid, abs2(xi), norm(xi).
    pub expr: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default = "default_m")]
    pub m: f64,
    /// Growth order a of b; the symbol class uses α = a/β.
    #[serde(default = "default_order")]
    pub order: f64,
    /// Vector potential modes (magnetic form).
    #[serde(default)]
    pub a: Vec<RealMode>,
    /// Scalar potential modes.
    #[serde(default)]
    pub v: Vec<RealMode>,
    /// Free-form coefficient expressions, added to the above.
    #[serde(default)]
    pub modes: Vec<ExprMode>,
}

fn default_m() -> f64 {
    1.0
}
fn default_order() -> f64 {
    1.0
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig { m: 1.0, order: 1.0, a: vec![], v: vec![], modes: vec![] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub rho: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// α₁ … α_d; β = α₁.
    pub alphas: Vec<f64>,
}

fn default_kappa() -> f64 {
    0.02
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_depth() -> usize {
    5
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig { depth: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    /// Half-width of the plane-wave annulus around |ξ| = λ^{1/2m}; a ball
    /// of radius `cutoff` is used instead when set.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    pub cutoff: Option<f64>,
    #[serde(default = "default_k_grid")]
    pub k_grid: usize,
}

fn default_half_width() -> f64 {
    4.0
}
fn default_k_grid() -> usize {
    32
}

impl Default for FiberConfig {
    fn default() -> Self {
        FiberConfig { half_width: 4.0, cutoff: None, k_grid: 32 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    /// δ = ρ^{2m−2−2ε}.
    #[serde(default = "default_eps")]
    pub delta_eps: f64,
}

fn default_samples() -> u64 {
    1_000_000
}
fn default_rho_grid() -> Vec<f64> {
    vec![20.0, 40.0, 80.0]
}
fn default_eps() -> f64 {
    0.1
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig { samples: 1_000_000, rho_grid: default_rho_grid(), delta_eps: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

pub const MAGNETIC2D: &str = include_str!("../../../configs/magnetic2d.toml");
pub const FREE2D: &str = include_str!("../../../configs/free2d.toml");

/// Everything a command needs, built once from a validated config.
pub struct Setup {
    pub config: RunConfig,
    pub lat: Lattice,
    pub geo: Geometry,
    pub class: SymbolClass,
    pub b: Option<Sym>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// `magnetic2d` or `free2d`.
    pub fn preset(name: &str) -> Result<RunConfig> {
        match name {
            "magnetic2d" => RunConfig::parse(MAGNETIC2D),
            "free2d" => RunConfig::parse(FREE2D),
            _ => Err(Error::Config(format!("unknown preset '{name}'"))),
        }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        match &self.lattice.basis {
            None => {
                if self.lattice.d == 0 || self.lattice.d > crate::geom::MAXD {
                    return Err(Error::Config(format!("lattice.d = {} unsupported", self.lattice.d)));
                }
                Ok(Lattice::square(self.lattice.d))
            }
            Some(rows) => {
                if rows.len() != self.lattice.d {
                    return Err(Error::Config(format!(
                        "lattice.basis has {} vectors but d = {}",
                        rows.len(),
                        self.lattice.d
                    )));
                }
                Lattice::from_rows(rows)
            }
        }
    }

    pub fn beta(&self) -> f64 {
        self.resonance.alphas.first().copied().unwrap_or(f64::NAN)
    }

    /// α = a/β.
    pub fn class(&self) -> Result<SymbolClass> {
        SymbolClass::new(self.operator.m, self.operator.order / self.beta(), self.beta())
    }

    pub fn has_perturbation(&self) -> bool {
        !(self.operator.a.is_empty() && self.operator.v.is_empty() && self.operator.modes.is_empty())
    }

    /// b as a symbol, None for the free operator. Rejects non-self-adjoint input.
    pub fn symbol(&self, lat: &Lattice) -> Result<Option<Sym>> {
        if !self.has_perturbation() {
            return Ok(None);
        }
        let d = lat.d;
        let scale = C64::new(lat.sqrt_det(), 0.0);
        let mut modes = Vec::new();
        if !(self.operator.a.is_empty() && self.operator.v.is_empty()) {
            let mag = magnetic_schrodinger(lat, &self.operator.a, &self.operator.v)?;
            for (t, c) in mag.support().thetas.iter().zip(mag.coeff_fns()) {
                modes.push((*t, c.clone()));
            }
        }
        for em in &self.operator.modes {
            if em.theta.len() != d {
                return Err(Error::Config(format!("mode theta {:?} must have {d} entries", em.theta)));
            }
            let e = Expr::parse(&em.expr, d)?;
            modes.push((ivec(&em.theta), scaled(e, scale)));
        }
        let sym: Sym = Arc::new(ModeSymbol::new(lat, modes, "b"));
        let probes: Vec<Vecd> = (0..16)
            .map(|i| {
                let mut v = Vecd::ZERO;
                for j in 0..d {
                    v.0[j] = 10.0 * ((i * (j + 3)) as f64 * 0.731).sin() + 0.37 * j as f64;
                }
                v
            })
            .collect();
        let r = symmetry_residual(sym.as_ref(), &probes);
        let size: f64 = probes
            .iter()
            .flat_map(|p| sym.eval(p).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(1.0, f64::max);
        if r > 1e-10 * size {
            return Err(Error::Config(format!(
                "symbol is not self-adjoint: b̂(−θ, ξ+θ) ≠ conj b̂(θ, ξ), residual {r:e}"
            )));
        }
        Ok(Some(sym))
    }

    pub fn validate(&self) -> Result<()> {
        let lat = self.lattice()?;
        let d = lat.d;
        ResonanceParams::new(d, self.resonance.rho, self.resonance.kappa, &self.resonance.alphas)?;
        self.class()?;
        if self.gauge.depth == 0 {
            return Err(Error::Config("gauge.depth must be at least 1".into()));
        }
        if self.fiber.k_grid == 0 {
            return Err(Error::Config("fiber.k_grid must be positive".into()));
        }
        if !(self.fiber.half_width > 0.0) || self.fiber.cutoff.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("fiber truncation sizes must be positive".into()));
        }
        if self.monte_carlo.samples == 0 {
            return Err(Error::Config("monte_carlo.samples must be positive".into()));
        }
        self.symbol(&lat)?;
        Ok(())
    }

    /// Truncation around energy λ.
    pub fn truncation(&self, lambda: f64) -> Truncation {
        match self.fiber.cutoff {
            Some(c) => Truncation::Ball(c),
            None => crate::spectrum::shell_annulus(lambda, self.operator.m, self.fiber.half_width),
        }
    }

    pub fn setup(&self) -> Result<Setup> {
        self.setup_at(self.resonance.rho)
    }

    /// Setup with ρ replaced.
    pub fn setup_at(&self, rho: f64) -> Result<Setup> {
        let lat = self.lattice()?;
        let params = ResonanceParams::new(lat.d, rho, self.resonance.kappa, &self.resonance.alphas)?;
        let geo = Geometry::new(&lat, params, None)?;
        let class = self.class()?;
        let b = self.symbol(&lat)?;
        Ok(Setup { config: self.clone(), lat, geo, class, b })
    }
}

fn scaled(e: Expr, s: C64) -> Coeff {
    Coeff::Expr(Expr::Mul(Box::new(Expr::Num(s)), Box::new(e)))
}

impl Setup {
    pub fn operator(&self) -> OperatorSpec {
        OperatorSpec::new(Some(self.config.operator.m), self.b.iter().cloned().collect())
    }

    pub fn lambda(&self) -> f64 {
        self.geo.params.rho.powf(2.0 * self.config.operator.m)
    }
}
