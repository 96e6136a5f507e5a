//! Fixed-capacity real and integer vectors.
//!
//! Dimensions up to [`MAXD`] are stored in a `[_; 4]` with zero padding, so
//! dot products and norms are correct without carrying `d` around.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub const MAXD: usize = 4;

/// Integer coordinates of a lattice point in a basis.
pub type IVec = [i32; MAXD];

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vecd(pub [f64; MAXD]);

impl Vecd {
    pub const ZERO: Vecd = Vecd([0.0; MAXD]);

    pub fn from_slice(s: &[f64]) -> Vecd {
        assert!(s.len() <= MAXD, "dimension {} exceeds {}", s.len(), MAXD);
        let mut v = [0.0; MAXD];
        v[..s.len()].copy_from_slice(s);
        Vecd(v)
    }

    pub fn unit(i: usize) -> Vecd {
        let mut v = [0.0; MAXD];
        v[i] = 1.0;
        Vecd(v)
    }

    #[inline]
    pub fn dot(&self, o: &Vecd) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2] + self.0[3] * o.0[3]
    }

    #[inline]
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn scale(&self, s: f64) -> Vecd {
        Vecd([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn coords(&self, d: usize) -> Vec<f64> {
        self.0[..d].to_vec()
    }

    /// Lexicographic comparison of the first `d` coordinates.
    pub fn lex_cmp(&self, o: &Vecd) -> std::cmp::Ordering {
        for i in 0..MAXD {
            match self.0[i].partial_cmp(&o.0[i]) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(ord) => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }

    /// Memo key: coordinates rounded to 1e-12, valid for |ξ| < 9e6.
    #[inline]
    pub fn key(&self) -> [i64; MAXD] {
        [
            (self.0[0] * 1e12).round() as i64,
            (self.0[1] * 1e12).round() as i64,
            (self.0[2] * 1e12).round() as i64,
            (self.0[3] * 1e12).round() as i64,
        ]
    }
}

impl Add for Vecd {
    type Output = Vecd;
    #[inline]
    fn add(self, o: Vecd) -> Vecd {
        Vecd([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

impl AddAssign for Vecd {
    fn add_assign(&mut self, o: Vecd) {
        *self = *self + o;
    }
}

impl Sub for Vecd {
    type Output = Vecd;
    #[inline]
    fn sub(self, o: Vecd) -> Vecd {
        Vecd([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2], self.0[3] - o.0[3]])
    }
}

impl Neg for Vecd {
    type Output = Vecd;
    fn neg(self) -> Vecd {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vecd {
    type Output = Vecd;
    fn mul(self, s: f64) -> Vecd {
        self.scale(s)
    }
}

pub fn iadd(a: &IVec, b: &IVec) -> IVec {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn isub(a: &IVec, b: &IVec) -> IVec {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn ineg(a: &IVec) -> IVec {
    [-a[0], -a[1], -a[2], -a[3]]
}

pub fn ivec(s: &[i32]) -> IVec {
    assert!(s.len() <= MAXD);
    let mut v = [0; MAXD];
    v[..s.len()].copy_from_slice(s);
    v
}

pub fn is_zero(a: &IVec) -> bool {
    a.iter().all(|&x| x == 0)
}
