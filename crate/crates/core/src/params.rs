//! Resonance parameters (ρ, r = ρ^κ, α₁…α_d) and the derived geometry.

use crate::error::{Error, Result};
use crate::lattice::{enumerate_subspaces, enumerate_theta, FrequencySet, Lattice, SubspaceFamily};
use crate::symbol::CutoffBank;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceParams {
    pub rho: f64,
    pub kappa: f64,
    pub r: f64,
    /// α₁ … α_d; α₁ doubles as the weight exponent β.
    pub alphas: Vec<f64>,
}

impl ResonanceParams {
    /// Validates α_{n+1} > α_n + 2κd² (α₀ = 0), α_d < 1 and ρ ≥ 1.
    pub fn new(d: usize, rho: f64, kappa: f64, alphas: &[f64]) -> Result<ResonanceParams> {
        let p = ResonanceParams { rho, kappa, r: rho.powf(kappa), alphas: alphas.to_vec() };
        p.validate(d)?;
        Ok(p)
    }

    /// No constraint checks; r is given directly. For worked examples whose
    /// parameters are outside the validated regime.
    pub fn unchecked(rho: f64, r: f64, alphas: &[f64]) -> ResonanceParams {
        ResonanceParams { rho, kappa: r.ln() / rho.ln(), r, alphas: alphas.to_vec() }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.alphas.len() != d {
            return Err(Error::Constraint(format!(
                "need {d} alphas, got {}",
                self.alphas.len()
            )));
        }
        if !(self.rho >= 1.0) {
            return Err(Error::Constraint(format!("rho = {} must be >= 1", self.rho)));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Constraint(format!("kappa = {} must be positive", self.kappa)));
        }
        let gap = 2.0 * self.kappa * (d * d) as f64;
        let mut prev = 0.0;
        for (n, a) in self.alphas.iter().enumerate() {
            if !(*a > prev + gap) {
                return Err(Error::Constraint(format!(
                    "layer condition alpha_{} > alpha_{} + 2*kappa*d^2 fails: {a} <= {prev} + {gap}",
                    n + 1,
                    n
                )));
            }
            prev = *a;
        }
        if !(prev < 1.0) {
            return Err(Error::Constraint(format!("alpha_d = {prev} must be < 1")));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.alphas[0]
    }

    /// α_n with α₀ = 0.
    pub fn alpha(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.alphas[n - 1]
        }
    }

    /// ρ^{α_n}.
    pub fn rho_alpha(&self, n: usize) -> f64 {
        self.rho.powf(self.alpha(n))
    }

    pub fn with_rho(&self, rho: f64) -> ResonanceParams {
        ResonanceParams { rho, kappa: self.kappa, r: rho.powf(self.kappa), alphas: self.alphas.clone() }
    }
}

/// Lattice plus everything derived from the parameters.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub lat: Lattice,
    pub params: ResonanceParams,
    /// Θ_r without 0.
    pub theta: FrequencySet,
    pub family: SubspaceFamily,
    pub bank: CutoffBank,
}

impl Geometry {
    /// Requires Θ_r to span R^d and r ≥ r0 when given.
    pub fn new(lat: &Lattice, params: ResonanceParams, r0: Option<f64>) -> Result<Geometry> {
        if let Some(r0) = r0 {
            if params.r < r0 {
                return Err(Error::Constraint(format!(
                    "r = rho^kappa = {} is below r0 = {r0}",
                    params.r
                )));
            }
        }
        let g = Geometry::unchecked(lat, params);
        if g.theta.rank(lat.d) < lat.d {
            return Err(Error::Constraint(format!(
                "Θ_r with r = {} does not span R^{}; raise rho or kappa",
                g.params.r, lat.d
            )));
        }
        if g.params.r >= g.bank.l {
            return Err(Error::Constraint(format!(
                "r = {} must stay below rho^beta = {}",
                g.params.r, g.bank.l
            )));
        }
        Ok(g)
    }

    pub fn unchecked(lat: &Lattice, params: ResonanceParams) -> Geometry {
        let theta = enumerate_theta(lat, params.r, false);
        let family = enumerate_subspaces(&theta, lat.d);
        let bank = CutoffBank::new(params.rho, params.beta());
        Geometry { lat: lat.clone(), params, theta, family, bank }
    }

    pub fn d(&self) -> usize {
        self.lat.d
    }

    pub fn with_rho(&self, rho: f64) -> Result<Geometry> {
        Geometry::new(&self.lat, self.params.with_rho(rho), None)
    }
}

/// Order/weight of the perturbation class and the operator order m.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymbolClass {
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SymbolClass {
    /// Requires β(α − 2) < 2m − 2, i.e. σ < 1.
    pub fn new(m: f64, alpha: f64, beta: f64) -> Result<SymbolClass> {
        if !(m > 0.0) || !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Constraint(format!("need m > 0 and beta in (0, 1], got m = {m}, beta = {beta}")));
        }
        if !(beta * (alpha - 2.0) < 2.0 * m - 2.0) {
            return Err(Error::Constraint(format!(
                "smallness condition beta*(alpha - 2) < 2m - 2 fails: {} >= {}",
                beta * (alpha - 2.0),
                2.0 * m - 2.0
            )));
        }
        Ok(SymbolClass { m, alpha, beta })
    }

    /// σ = α − (2m−2)/β − 1.
    pub fn sigma(&self) -> f64 {
        self.alpha - (2.0 * self.m - 2.0) / self.beta - 1.0
    }

    /// ε_j = j(σ−1) + (2m−2)/β + 2.
    pub fn epsilon(&self, j: usize) -> f64 {
        j as f64 * (self.sigma() - 1.0) + (2.0 * self.m - 2.0) / self.beta + 2.0
    }
}
