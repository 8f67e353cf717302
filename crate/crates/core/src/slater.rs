//! Instances without a strictly feasible point.
//!
//! If `μ > 0` then `x = 0` is strictly feasible. Otherwise the constraint
//! has no interior exactly when `B ⪰ 0`, `g ∈ R(B)` and
//! `min G = −gᵀB⁺g ≥ μ`. The feasible set is then empty or the affine set
//! `{x : Bx = g} = B⁺g + N(B)`, on which the objective is an explicit
//! quadratic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::Qp1qcInstance;
use crate::linalg::{range_residual, sym_eig, Basis, Tolerance};
use crate::solution::{CaseLabel, Path, Solution, Status};

/// Objective restricted to `x = B⁺g + V_B·Q̂·z`:
/// `zᵀ diag(d̂) z + 2Λᵀz + α`.
#[derive(Debug, Clone)]
pub struct SlaterReduction {
    /// `B⁺g`.
    pub base: DVector<f64>,
    /// Basis of `N(B)`.
    pub vb: Basis,
    pub qh: DMatrix<f64>,
    pub dh: DVector<f64>,
    pub lam: DVector<f64>,
    pub alpha: f64,
    /// Indices with `d̂ᵢ > 0`.
    pub j: Vec<usize>,
}

fn equality_band(mu: f64, tol: Tolerance) -> f64 {
    tol.rel * mu.abs().max(1.0)
}

/// `min G` when `B ⪰ 0` and `g ∈ R(B)`, else `None` (min G = −∞ or B indefinite).
fn constraint_minimum(inst: &Qp1qcInstance, tol: Tolerance) -> Result<Option<(f64, DVector<f64>)>> {
    let eig = sym_eig(&inst.b)?;
    if !eig.is_psd(tol) {
        return Ok(None);
    }
    if range_residual(&eig, &inst.g, tol) > tol.rel * inst.g.norm().max(1.0) {
        return Ok(None);
    }
    let base = eig.pinv(tol).as_matrix() * &inst.g;
    Ok(Some((-inst.g.dot(&base), base)))
}

/// Whether some `x` has `G(x) < μ`.
pub fn slater_holds(inst: &Qp1qcInstance, tol: Tolerance) -> Result<bool> {
    if inst.mu > 0.0 {
        return Ok(true);
    }
    Ok(match constraint_minimum(inst, tol)? {
        None => true,
        Some((gmin, _)) => gmin < inst.mu - equality_band(inst.mu, tol),
    })
}

/// Builds the reduction, or `None` when the feasible set is empty.
pub fn reduce(inst: &Qp1qcInstance, tol: Tolerance) -> Result<Option<SlaterReduction>> {
    let Some((gmin, base)) = constraint_minimum(inst, tol)? else {
        return Err(Error::PreconditionViolated(
            "the constraint has a strictly feasible point".into(),
        ));
    };
    let band = equality_band(inst.mu, tol);
    if gmin < inst.mu - band {
        return Err(Error::PreconditionViolated(
            "the constraint has a strictly feasible point".into(),
        ));
    }
    if gmin > inst.mu + band {
        return Ok(None);
    }
    let vb = sym_eig(&inst.b)?.null_basis(tol);
    let k = vb.rank();
    let (qh, dh) = if k == 0 {
        (DMatrix::zeros(0, 0), DVector::zeros(0))
    } else {
        let e = sym_eig(&inst.a.congruence(vb.columns()))?;
        (e.vectors, e.values)
    };
    let grad = inst.a.as_matrix() * &base - &inst.f;
    let lam = qh.tr_mul(&vb.coords(&grad));
    let alpha = inst.objective(&base);
    let d_thr = d_threshold(inst, tol)?;
    let j = (0..k).filter(|&i| dh[i] > d_thr).collect();
    Ok(Some(SlaterReduction {
        base,
        vb,
        qh,
        dh,
        lam,
        alpha,
        j,
    }))
}

fn d_threshold(inst: &Qp1qcInstance, tol: Tolerance) -> Result<f64> {
    Ok((tol.rel * sym_eig(&inst.a)?.max_abs().max(1.0)).max(tol.abs))
}

/// Solves an instance with no strictly feasible point.
pub fn solve_no_slater(inst: &Qp1qcInstance, tol: Tolerance) -> Result<Solution> {
    if slater_holds(inst, tol)? {
        return Err(Error::PreconditionViolated(
            "the constraint has a strictly feasible point".into(),
        ));
    }
    let Some(red) = reduce(inst, tol)? else {
        return Ok(Solution::new(Status::Infeasible, CaseLabel::NoSlater));
    };
    let d_thr = d_threshold(inst, tol)?;
    let lam_thr =
        tol.rel * (sym_eig(&inst.a)?.max_abs() * red.base.norm() + inst.f.norm()).max(1.0);
    let k = red.dh.len();

    let descent = (0..k)
        .find(|&i| red.dh[i] < -d_thr)
        .or_else(|| (0..k).find(|&i| red.dh[i].abs() <= d_thr && red.lam[i].abs() > lam_thr));
    if let Some(i) = descent {
        let sign = if red.lam[i] > 0.0 { -1.0 } else { 1.0 };
        let direction = red.vb.lift(&red.qh.column(i).into_owned()) * sign;
        return Ok(Solution::new(
            Status::UnboundedBelow {
                witness: Some(Path::ray(red.base.clone(), direction)),
            },
            CaseLabel::NoSlater,
        ));
    }

    let mut z = DVector::zeros(k);
    for &i in &red.j {
        z[i] = -red.lam[i] / red.dh[i];
    }
    let x_star = &red.base + red.vb.lift(&(&red.qh * z));
    let value = inst.objective(&x_star);
    Ok(Solution::new(
        Status::Attained {
            x_star,
            value,
            certificate: None,
        },
        CaseLabel::NoSlater,
    ))
}
