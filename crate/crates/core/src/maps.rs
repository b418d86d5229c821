//! Deterministic maps of the positive quadrant.
//!
//! The central one is the involution
//!
//! ```text
//! psi(x, y) = ( y (1 + beta (x+y)) / d,  x (1 + alpha (x+y)) / d ),   d = 1 + alpha x + beta y
//! ```
//!
//! which sends `K_alpha(a,b,c) ⊗ K_beta(b,a,c)` to `K_alpha(b,a,c) ⊗ K_beta(a,b,c)`.
//! The other maps are the lattice maps it generalises and the finite-`n`
//! families whose limits give the Lukacs, Kummer–Gamma, Matsumoto–Yor and
//! discrete KdV independence properties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `(0, ∞)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            Ok(PlanePoint { x, y })
        } else {
            Err(Error::Domain(format!("point ({x}, {y}) is not in (0, ∞)²")))
        }
    }
}

/// Family of maps indexed by `n` whose `n → ∞` limit is a classical
/// independence-preserving map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiKind {
    Lukacs,
    KummerGamma,
    MatsumotoYor,
    Kdv { alpha: f64, beta: f64 },
}

/// Index of a map family: a finite `n ≥ 1` or the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiIndex {
    Finite(u64),
    Limit,
}

impl PhiIndex {
    pub fn as_f64(&self) -> f64 {
        match self {
            PhiIndex::Finite(n) => *n as f64,
            PhiIndex::Limit => f64::INFINITY,
        }
    }
}

/// One transformation of the quadrant with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapSpec {
    Psi { alpha: f64, beta: f64 },
    /// Discrete KdV map `(y (1+beta xy)/(1+alpha xy), x (1+alpha xy)/(1+beta xy))`.
    Dkdv { alpha: f64, beta: f64 },
    /// Ultra-discrete KdV map with capacities `j`, `k`.
    Udkdv { j: f64, k: f64 },
    /// Discrete Toda map `(x+y, x/(x+y))`.
    Dtoda,
    /// `(1/(x+y), 1/x - 1/(x+y))`.
    MatsumotoYor,
    /// `(y/x, x+y)`.
    Lukacs,
    Phi { kind: PhiKind, n: PhiIndex },
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl MapSpec {
    pub fn psi(alpha: f64, beta: f64) -> Result<MapSpec> {
        let m = MapSpec::Psi { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MapSpec::Psi { alpha, beta } => {
                nonneg("psi alpha", alpha)?;
                nonneg("psi beta", beta)?;
                if alpha == beta {
                    return Err(Error::Domain(format!("psi needs alpha != beta, got {alpha}")));
                }
                Ok(())
            }
            MapSpec::Dkdv { alpha, beta } => {
                pos("dkdv alpha", alpha)?;
                pos("dkdv beta", beta)
            }
            MapSpec::Udkdv { j, k } => {
                if j.is_finite() && k.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("udkdv capacities must be finite, got ({j}, {k})")))
                }
            }
            MapSpec::Dtoda | MapSpec::MatsumotoYor | MapSpec::Lukacs => Ok(()),
            MapSpec::Phi { kind, n } => {
                if let PhiKind::Kdv { alpha, beta } = kind {
                    pos("kdv alpha", alpha)?;
                    pos("kdv beta", beta)?;
                }
                if n == PhiIndex::Finite(0) {
                    return Err(Error::Domain("map family index must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// True for the maps that are their own inverse.
    pub fn is_involution(&self) -> bool {
        matches!(self, MapSpec::Psi { .. } | MapSpec::Dkdv { .. } | MapSpec::Udkdv { .. })
    }

    pub fn apply(&self, p: PlanePoint) -> Result<PlanePoint> {
        self.validate()?;
        let PlanePoint { x, y } = PlanePoint::new(p.x, p.y)?;
        let (u, v) = match *self {
            MapSpec::Psi { alpha, beta } => psi_raw(alpha, beta, x, y),
            MapSpec::Dkdv { alpha, beta } => {
                let xy = x * y;
                let num = 1.0 + beta * xy;
                let den = 1.0 + alpha * xy;
                (y * num / den, x * den / num)
            }
            MapSpec::Udkdv { j, k } => {
                let s = x + y;
                let pj = (s - j).max(0.0);
                let pk = (s - k).max(0.0);
                (y - pj + pk, x - pk + pj)
            }
            MapSpec::Dtoda => {
                let s = x + y;
                (s, x / s)
            }
            MapSpec::MatsumotoYor => {
                let s = x + y;
                (1.0 / s, y / (x * s))
            }
            MapSpec::Lukacs => (y / x, x + y),
            MapSpec::Phi { kind, n } => phi_raw(kind, n, x, y),
        };
        if u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite() {
            Ok(PlanePoint { x: u, y: v })
        } else {
            Err(Error::NumericDomain(format!(
                "{self:?} maps ({x}, {y}) to ({u}, {v}), outside (0, ∞)²"
            )))
        }
    }
}

fn psi_raw(alpha: f64, beta: f64, x: f64, y: f64) -> (f64, f64) {
    let s = x + y;
    let d = 1.0 + alpha * x + beta * y;
    (y * (1.0 + beta * s) / d, x * (1.0 + alpha * s) / d)
}

fn phi_raw(kind: PhiKind, n: PhiIndex, x: f64, y: f64) -> (f64, f64) {
    let s = x + y;
    match (kind, n) {
        (PhiKind::Lukacs, PhiIndex::Finite(n)) => {
            let n = n as f64;
            let d = 1.0 + n * x;
            (n * y / d, x * (1.0 + n * s) / d)
        }
        (PhiKind::Lukacs, PhiIndex::Limit) => (y / x, s),
        (PhiKind::KummerGamma, PhiIndex::Finite(n)) => {
            let n = n as f64;
            let d = 1.0 + x + n * y;
            (y * (1.0 + n * s) / d, n * x * (1.0 + s) / d)
        }
        (PhiKind::KummerGamma, PhiIndex::Limit) => (s, x * (1.0 + s) / y),
        (PhiKind::MatsumotoYor, PhiIndex::Finite(n)) => {
            let n = n as f64;
            let n2 = n * n;
            let d = 1.0 + n * x + n2 * y;
            (y * (1.0 + n2 * s) / d, n * x * (1.0 + n * s) / d)
        }
        (PhiKind::MatsumotoYor, PhiIndex::Limit) => (s, x * s / y),
        (PhiKind::Kdv { alpha, beta }, PhiIndex::Finite(n)) => {
            let n = n as f64;
            let d = 1.0 + n * (x / alpha + y / beta);
            (y * (1.0 + n / beta * s) / d, x * (1.0 + n / alpha * s) / d)
        }
        (PhiKind::Kdv { alpha, beta }, PhiIndex::Limit) => {
            let d = beta * x + alpha * y;
            (alpha * y * s / d, beta * x * s / d)
        }
    }
}

/// Evaluates the family member `phi_n` (or its limit) at `p`.
pub fn phi_family(kind: PhiKind, n: PhiIndex, p: PlanePoint) -> Result<PlanePoint> {
    MapSpec::Phi { kind, n }.apply(p)
}

/// Jacobian of the inverse of `psi` at `q = (u, v)`, i.e.
/// `(1 + alpha x + beta y) / (1 + alpha u + beta v)` with `(x, y) = psi(q)`.
pub fn psi_jacobian(alpha: f64, beta: f64, q: PlanePoint) -> Result<f64> {
    let p = MapSpec::psi(alpha, beta)?.apply(q)?;
    Ok((1.0 + alpha * p.x + beta * p.y) / (1.0 + alpha * q.x + beta * q.y))
}

/// Residuals of the three identities linking `p = (x, y)` and
/// `(u, v) = psi(p)`: `x + y = u + v`, `x/(1+beta y) = v/(1+alpha u)` and
/// `y/(1+alpha x) = u/(1+beta v)`. Each is relative to the size of its
/// terms.
pub fn structural_residuals(alpha: f64, beta: f64, p: PlanePoint) -> Result<[f64; 3]> {
    let q = MapSpec::psi(alpha, beta)?.apply(p)?;
    let (x, y, u, v) = (p.x, p.y, q.x, q.y);
    let rel = |l: f64, r: f64| (l - r).abs() / l.abs().max(r.abs()).max(f64::MIN_POSITIVE);
    Ok([
        rel(x + y, u + v),
        rel(x / (1.0 + beta * y), v / (1.0 + alpha * u)),
        rel(y / (1.0 + alpha * x), u / (1.0 + beta * v)),
    ])
}
