//! Smooth cut-offs in momentum space.

use crate::geom::Vecd;

#[inline]
fn f(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 for z <= 1/4, 0 for z >= 1/2, ι(3/8) = 1/2.
#[inline]
pub fn iota(z: f64) -> f64 {
    if z <= 0.25 {
        return 1.0;
    }
    if z >= 0.5 {
        return 0.0;
    }
    let a = f(0.5 - z);
    let b = f(z - 0.25);
    a / (a + b)
}

/// The cut-offs e_θ, ℓ^>_θ, ℓ^<_θ, ζ_θ, φ_θ at a fixed ρ and L = ρ^β.
#[derive(Clone, Copy, Debug)]
pub struct CutoffBank {
    pub rho: f64,
    pub l: f64,
}

impl CutoffBank {
    pub fn new(rho: f64, beta: f64) -> CutoffBank {
        CutoffBank { rho, l: rho.powf(beta) }
    }

    #[inline]
    fn radial(&self, theta: &Vecd, xi: &Vecd) -> f64 {
        (*xi + theta.scale(0.5)).norm() / self.rho
    }

    #[inline]
    pub fn e(&self, theta: &Vecd, xi: &Vecd) -> f64 {
        iota((self.radial(theta, xi) - 1.0).abs())
    }

    #[inline]
    pub fn ell_gt(&self, theta: &Vecd, xi: &Vecd) -> f64 {
        1.0 - iota(self.radial(theta, xi) - 1.0)
    }

    #[inline]
    pub fn ell_lt(&self, theta: &Vecd, xi: &Vecd) -> f64 {
        1.0 - iota(1.0 - self.radial(theta, xi))
    }

    #[inline]
    pub fn zeta(&self, theta: &Vecd, xi: &Vecd) -> f64 {
        let tn = theta.norm();
        let proj = theta.dot(&(*xi + theta.scale(0.5))).abs();
        iota(proj / (self.l * tn))
    }

    #[inline]
    pub fn phi(&self, theta: &Vecd, xi: &Vecd) -> f64 {
        1.0 - self.zeta(theta, xi)
    }
}
