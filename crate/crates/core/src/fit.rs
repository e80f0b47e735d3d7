//! Recovering (ρ, μ, λ, ν) from an order-exponent sequence
//! x_n = ρ(n+1)ℓ^n + μℓ^n + λn + ν.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chars::{CharError, CharacterTable, VirtualCharacter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("need at least {need} points, got {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("levels must be distinct and consecutive (problem at n = {at})")]
    NonConsecutive { at: u32 },
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("the 4x4 system on the last points is singular")]
    SingularSystem,
    #[error("sequence is not stable: {reason}")]
    Unstable { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamFit {
    pub rho: i64,
    pub mu: i64,
    pub lambda: i64,
    pub nu: i64,
    pub stable_from: u32,
}

/// Leading term of the growth law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dominant {
    Rho,
    Mu,
    Lambda,
    Nu,
    Zero,
}

impl ParamFit {
    pub fn dominant(&self) -> Dominant {
        if self.rho != 0 {
            Dominant::Rho
        } else if self.mu != 0 {
            Dominant::Mu
        } else if self.lambda != 0 {
            Dominant::Lambda
        } else if self.nu != 0 {
            Dominant::Nu
        } else {
            Dominant::Zero
        }
    }

    /// (ρ, μ, λ) only.
    pub fn growth(&self) -> (i64, i64, i64) {
        (self.rho, self.mu, self.lambda)
    }

    fn sign_ok(&self) -> bool {
        self.rho >= 0 && (self.rho != 0 || self.mu >= 0) && (self.rho != 0 || self.mu != 0 || self.lambda >= 0)
    }
}

fn basis(ell: u64, n: u32) -> [BigInt; 4] {
    let p = BigInt::from(ell).pow(n);
    [(BigInt::from(n) + 1u32) * &p, p, BigInt::from(n), BigInt::one()]
}

fn predict_big(fit: &ParamFit, ell: u64, n: u32) -> BigInt {
    let [a, b, c, d] = basis(ell, n);
    a * fit.rho + b * fit.mu + c * fit.lambda + d * fit.nu
}

/// ρ(n+1)ℓ^n + μℓ^n + λn + ν.
pub fn predict(fit: &ParamFit, ell: u64, n: u32) -> i128 {
    predict_big(fit, ell, n).to_i128().expect("prediction exceeds i128")
}

/// Exact Gaussian elimination over Q; `None` when singular.
fn solve4(rows: [[BigRational; 4]; 4], rhs: [BigRational; 4]) -> Option<[BigRational; 4]> {
    let mut m: Vec<Vec<BigRational>> = rows
        .into_iter()
        .zip(rhs)
        .map(|(r, b)| r.into_iter().chain(std::iter::once(b)).collect())
        .collect();
    for col in 0..4 {
        let piv = (col..4).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..4 {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..5 {
                    let sub = &f * &m[col][c];
                    m[r][c] -= sub;
                }
            }
        }
    }
    Some([m[0][4].clone(), m[1][4].clone(), m[2][4].clone(), m[3][4].clone()])
}

fn to_i64(q: &BigRational, what: &str) -> Result<i64, FitError> {
    if !q.is_integer() {
        return Err(FitError::Unstable { reason: format!("{what} = {q} is not an integer") });
    }
    q.to_integer()
        .to_i64()
        .ok_or_else(|| FitError::Unstable { reason: format!("{what} does not fit in 64 bits") })
}

/// Fits on the last four points and demands `window` further points before them to agree.
pub fn fit_sequence(ell: u64, points: &[(u32, i64)], window: usize) -> Result<ParamFit, FitError> {
    if window == 0 {
        return Err(FitError::ZeroWindow);
    }
    let need = 4 + window;
    if points.len() < need {
        return Err(FitError::TooFewPoints { have: points.len(), need });
    }
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    for w in pts.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(FitError::NonConsecutive { at: w[1].0 });
        }
    }
    let last = &pts[pts.len() - 4..];
    let rows = std::array::from_fn(|i| basis(ell, last[i].0).map(BigRational::from_integer));
    let rhs = std::array::from_fn(|i| BigRational::from_integer(BigInt::from(last[i].1)));
    let sol = solve4(rows, rhs).ok_or(FitError::SingularSystem)?;
    let mut fit = ParamFit {
        rho: to_i64(&sol[0], "rho")?,
        mu: to_i64(&sol[1], "mu")?,
        lambda: to_i64(&sol[2], "lambda")?,
        nu: to_i64(&sol[3], "nu")?,
        stable_from: 0,
    };
    if !fit.sign_ok() {
        return Err(FitError::Unstable {
            reason: format!("sign constraints fail for ({}, {}, {}, {})", fit.rho, fit.mu, fit.lambda, fit.nu),
        });
    }
    let mut start = pts.len() - 4;
    while start > 0 && predict_big(&fit, ell, pts[start - 1].0) == BigInt::from(pts[start - 1].1) {
        start -= 1;
    }
    let confirmed = pts.len() - 4 - start;
    if confirmed < window {
        let bad = pts[start - 1];
        return Err(FitError::Unstable {
            reason: format!("only {confirmed} of {window} confirmation points agree; n = {} has x = {}", bad.0, bad.1),
        });
    }
    fit.stable_from = pts[start].0;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("component {label}: {error}")]
pub struct FamilyFitError {
    pub label: String,
    pub error: FitError,
}

/// Fits every component independently.
pub fn fit_family(
    ell: u64,
    sequences: &BTreeMap<String, Vec<(u32, i64)>>,
    window: usize,
) -> Result<BTreeMap<String, ParamFit>, FamilyFitError> {
    sequences
        .iter()
        .map(|(label, pts)| {
            fit_sequence(ell, pts, window)
                .map(|f| (label.clone(), f))
                .map_err(|error| FamilyFitError { label: label.clone(), error })
        })
        .collect()
}

/// The fitted parameters as virtual characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FittedCharacters {
    pub rho: VirtualCharacter,
    pub mu: VirtualCharacter,
    pub lambda: VirtualCharacter,
    pub nu: VirtualCharacter,
}

/// The per-component numbers are pairings ⟨χ, φ⟩ = deg φ · (coefficient of φ); divide them back out.
pub fn family_characters(
    table: &CharacterTable,
    fits: &BTreeMap<String, ParamFit>,
) -> Result<FittedCharacters, CharError> {
    let mut out = FittedCharacters {
        rho: table.zero(),
        mu: table.zero(),
        lambda: table.zero(),
        nu: table.zero(),
    };
    for (label, f) in fits {
        let idx = table.lookup(label)?;
        let deg = table.irreducible(idx).degree() as i64;
        let coef = |v: i64| {
            if v % deg == 0 {
                Ok(v / deg)
            } else {
                Err(CharError::NotDivisible { label: label.clone(), value: v, degree: deg as u64 })
            }
        };
        out.rho.add_coefficient(idx, coef(f.rho)?);
        out.mu.add_coefficient(idx, coef(f.mu)?);
        out.lambda.add_coefficient(idx, coef(f.lambda)?);
        out.nu.add_coefficient(idx, coef(f.nu)?);
    }
    Ok(out)
}

/// Determinant of the basis on n, n+1, n+2, n+3, used to confirm the system is never singular.
pub fn basis_determinant(ell: u64, n: u32) -> BigInt {
    let mut m: Vec<Vec<BigRational>> = (0..4)
        .map(|i| basis(ell, n + i).into_iter().map(BigRational::from_integer).collect())
        .collect();
    let mut det = BigRational::one();
    for col in 0..4 {
        let Some(piv) = (col..4).find(|&r| !m[r][col].is_zero()) else {
            return BigInt::zero();
        };
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col].clone();
        for r in col + 1..4 {
            let f = &m[r][col] / &m[col][col];
            for c in col..4 {
                let sub = &f * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det.to_integer()
}
