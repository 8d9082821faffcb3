//! Budget-balanced Groves schemes via welfare decomposition.
//!
//! A decomposition `W(t) = Σ_i g_i^ℓ(t_{-i})` exists at level `ℓ` iff a linear system over
//! `T^ℓ` is consistent. It is solved by exact Gaussian elimination; inconsistency yields
//! row weights `z` with `zᵀA = 0` and `zᵀb ≠ 0`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::lattice::Level;
use crate::transfers::{Mechanism, YTable};
use crate::types::{cartesian, Profile, TypeId, TypeStructure};
use crate::value::Q;

use super::{Property, VerificationResult, VerifyError, Witness, WitnessKind};

/// `g_i^ℓ(t_{-i})`, keyed like [`YTable`] entries.
pub type GTable = HashMap<(usize, Level, Vec<TypeId>), Q>;

/// Weights on the profiles of one level proving that no decomposition exists there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub level: Level,
    pub weights: Vec<(Profile, Q)>,
}

fn big(q: Q) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn small(q: &BigRational) -> Option<Q> {
    Some(Q::new(q.numer().to_i64()?, q.denom().to_i64()?))
}

fn opponents(p: &[TypeId], i: usize) -> Vec<TypeId> {
    p.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &t)| t).collect()
}

/// Every `(i, t_{-i})` unknown at level `l`, in a fixed order.
fn unknowns(ts: &TypeStructure, l: Level) -> Vec<(usize, Vec<TypeId>)> {
    let mut out = Vec::new();
    for i in 0..ts.n_agents() {
        let sets: Vec<&[TypeId]> = (0..ts.n_agents()).filter(|&j| j != i).map(|j| ts.space(j, l)).collect();
        for opp in cartesian(&sets) {
            out.push((i, opp));
        }
    }
    out
}

fn welfare(mech: &Mechanism<'_>, p: &[TypeId]) -> Result<Q, VerifyError> {
    let x = mech.outcome(p)?;
    Ok(mech.outcomes().welfare(mech.types(), x, p).map_err(crate::transfers::TransferError::from)?)
}

/// Solves the decomposition level by level. The outer error is a computation failure;
/// the inner one is a certificate of infeasibility.
pub fn find_g(mech: &Mechanism<'_>) -> Result<Result<GTable, InfeasibilityCertificate>, VerifyError> {
    let ts = mech.types();
    let mut g = GTable::new();
    for &l in ts.lattice().bottom_up() {
        let vars = unknowns(ts, l);
        let index: HashMap<&(usize, Vec<TypeId>), usize> = vars.iter().enumerate().map(|(k, v)| (v, k)).collect();
        let profiles = ts.profiles_at(l);
        let m = profiles.len();
        let k = vars.len();
        // Row layout: k coefficients, the right-hand side, then m tracking columns.
        let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(m);
        for (r, p) in profiles.iter().enumerate() {
            let mut row = vec![BigRational::zero(); k + 1 + m];
            for i in 0..ts.n_agents() {
                row[index[&(i, opponents(p, i))]] += BigRational::one();
            }
            row[k] = big(welfare(mech, p)?);
            row[k + 1 + r] = BigRational::one();
            rows.push(row);
        }
        let mut pivots = Vec::new();
        let mut rank = 0;
        for c in 0..k {
            let Some(p) = (rank..m).find(|&r| !rows[r][c].is_zero()) else { continue };
            rows.swap(rank, p);
            let inv = rows[rank][c].recip();
            for x in rows[rank].iter_mut() {
                *x *= &inv;
            }
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && !row[c].is_zero() {
                    let f = row[c].clone();
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x -= &f * y;
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
        if let Some(bad) = rows[rank..].iter().find(|row| !row[k].is_zero()) {
            let weights = profiles
                .iter()
                .enumerate()
                .filter(|(r, _)| !bad[k + 1 + r].is_zero())
                .map(|(r, p)| small(&bad[k + 1 + r]).map(|w| (p.clone(), w)))
                .collect::<Option<Vec<_>>>()
                .ok_or(VerifyError::Overflow)?;
            return Ok(Err(InfeasibilityCertificate { level: l, weights }));
        }
        let mut sol = vec![Q::zero(); k];
        for (r, &c) in pivots.iter().enumerate() {
            sol[c] = small(&rows[r][k]).ok_or(VerifyError::Overflow)?;
        }
        for ((i, opp), v) in vars.into_iter().zip(sol) {
            g.insert((i, l, opp), v);
        }
    }
    Ok(Ok(g))
}

/// Independent check of a certificate: `zᵀA = 0` and `zᵀb ≠ 0`.
pub fn certificate_is_valid(mech: &Mechanism<'_>, cert: &InfeasibilityCertificate) -> Result<bool, VerifyError> {
    let ts = mech.types();
    let mut coeff: HashMap<(usize, Vec<TypeId>), BigRational> = HashMap::new();
    let mut rhs = BigRational::zero();
    for (p, w) in &cert.weights {
        if ts.pooled_level(p) != cert.level || p.iter().any(|&t| ts.level_of(t) != cert.level) {
            return Ok(false);
        }
        for i in 0..ts.n_agents() {
            *coeff.entry((i, opponents(p, i))).or_insert_with(BigRational::zero) += big(*w);
        }
        rhs += big(*w) * big(welfare(mech, p)?);
    }
    Ok(coeff.values().all(|c| c.is_zero()) && !rhs.is_zero())
}

/// Checks `W(t) = Σ_i g_i(t_{-i})` at every profile of every level.
pub fn check_holmstrom(mech: &Mechanism<'_>, g: &GTable) -> Result<VerificationResult, VerifyError> {
    let ts = mech.types();
    let mut checked = 0;
    let mut wit = Vec::new();
    for &l in ts.lattice().bottom_up() {
        for p in ts.profiles_at(l) {
            checked += 1;
            let w = welfare(mech, &p)?;
            let parts: Option<Vec<Q>> = (0..ts.n_agents()).map(|i| g.get(&(i, l, opponents(&p, i))).copied()).collect();
            let total = parts.map(|v| v.into_iter().fold(Q::zero(), |a, b| a + b));
            if total != Some(w) {
                let mut z = Witness::new(WitnessKind::Decomposition, "welfare differs from the decomposition");
                z.partial_level = Some(l);
                z.profile = Some(p);
                z.values = match total {
                    Some(t) => vec![w, t],
                    None => vec![w],
                };
                wit.push(z);
            }
        }
    }
    Ok(VerificationResult::from_parts(Property::Holmstrom, checked, wit, 5))
}

/// `y_i^ℓ(t_{-i}) = −(|I|−1) g_i^ℓ(t_{-i})`.
pub fn derive_y_from_g(ts: &TypeStructure, g: &GTable) -> YTable {
    let k = Q::from_integer(ts.n_agents() as i64 - 1);
    YTable { entries: g.iter().map(|(key, v)| (key.clone(), -k * v)).collect(), default: None }
}
