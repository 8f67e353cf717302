//! Classification and solution of instances that have a strictly feasible
//! point.
//!
//! The problem is bounded below iff some σ ≥ 0 has `A + σB ⪰ 0` and
//! `f + σg ∈ R(A + σB)`. Bounded problems with an interval pencil always
//! attain their infimum; with a singleton pencil `{σ*}` they attain it iff
//! the constraint can be made active (or, for σ* = 0, satisfied) on the
//! affine set of Lagrangian minimizers at σ*.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::Qp1qcInstance;
use crate::linalg::{select_columns, sym_eig, Basis, EigDecomp, SymMatrix, Tolerance};
use crate::pencil::{
    interior_point, max_lambda_min, pencil_roots, reduced_interval, DetRoots, PencilInterval,
    ReducedPencil,
};
use crate::slater::{slater_holds, solve_no_slater};
use crate::solution::{CaseLabel, KktCertificate, Path, Solution, Status};

/// Relative tolerance attached to returned optimality certificates.
pub const CERT_TOL: f64 = 1e-7;
/// Relative tolerance for null spaces and range tests at numerically
/// computed pencil roots.
const ROOT_REL: f64 = 1e-7;
/// A σ computed from `Vᵀf + σVᵀg = 0` may be moved onto a nearby root by
/// at most this much (relative).
const SNAP_REL: f64 = 1e-6;
const MAX_BISECTION: usize = 200;

fn root_tol(tol: Tolerance) -> Tolerance {
    tol.with_rel(tol.rel.max(ROOT_REL))
}

/// Lagrangian minimizers `(A + σB)⁺(f + σg) + V·y` at a fixed σ and the
/// constraint restricted to them: `G = yᵀMy + 2ℓᵀy + G(base)`.
#[derive(Debug, Clone)]
pub struct SingletonAnalysis {
    pub sigma: f64,
    pub base: DVector<f64>,
    pub v: Basis,
    /// `VᵀBV`.
    pub m: SymMatrix,
    /// `Vᵀ(B·base − g)`.
    pub l: DVector<f64>,
    /// `μ − G(base)`.
    pub mu_tilde: f64,
    /// `inf_y yᵀMy + 2ℓᵀy`, possibly `−∞`.
    pub lstar: f64,
    /// `sup_y yᵀMy + 2ℓᵀy`, possibly `+∞`.
    pub ustar: f64,
    /// Minimizer of the restricted quadratic when `lstar` is finite.
    pub y_hat: Option<DVector<f64>>,
    /// Direction along which the restricted quadratic grows without bound.
    pub y_tilde: Option<DVector<f64>>,
    band: f64,
    m_thr: f64,
    l_thr: f64,
    m_eig: EigDecomp,
}

impl SingletonAnalysis {
    fn q(&self, y: &DVector<f64>) -> f64 {
        self.m.quad_form(y) + 2.0 * self.l.dot(y)
    }

    /// Direction `d` with `q(αd) → +∞` (`sign = 1`) or `−∞` (`sign = −1`),
    /// oriented so that the linear term does not work against it.
    fn unbounded_direction(&self, sign: f64) -> Option<DVector<f64>> {
        let e = &self.m_eig;
        let k = e.dim();
        if k == 0 {
            return None;
        }
        let idx = if sign > 0.0 { k - 1 } else { 0 };
        if sign * e.values[idx] > self.m_thr {
            let mut d = e.vectors.column(idx).into_owned();
            if sign * self.l.dot(&d) < 0.0 {
                d = -d;
            }
            return Some(d);
        }
        let n = e.select(|v| v.abs() <= self.m_thr);
        let p = &n * n.tr_mul(&self.l);
        let norm = p.norm();
        (norm > self.l_thr).then(|| p * (sign / norm))
    }

    /// Solves `q(y) ≤ μ̃` (σ* = 0) or `q(y) = μ̃` (σ* > 0). Returns the
    /// subcase label and a solution when one exists.
    fn find_y(&self) -> (CaseLabel, Option<DVector<f64>>) {
        let k = self.v.rank();
        let lf = self.lstar.is_finite();
        let uf = self.ustar.is_finite();
        let mt = self.mu_tilde;
        if self.sigma == 0.0 {
            if lf {
                let ok = mt >= self.lstar - self.band;
                return (CaseLabel::G1, ok.then(|| self.y_hat.clone().unwrap()));
            }
            let Some(d) = self.unbounded_direction(-1.0) else {
                return (CaseLabel::G2, None);
            };
            let mut scale = 1.0;
            for _ in 0..=60 {
                let y = &d * scale;
                if self.q(&y) <= mt {
                    return (CaseLabel::G2, Some(y));
                }
                scale *= 2.0;
            }
            return (CaseLabel::G2, None);
        }
        match (lf, uf) {
            (true, true) => {
                let ok = mt.abs() <= self.band;
                (CaseLabel::H1, ok.then(|| DVector::zeros(k)))
            }
            (true, false) => (CaseLabel::H2, self.reach_from_extremum(1.0)),
            (false, true) => (CaseLabel::H3, self.reach_from_extremum(-1.0)),
            (false, false) => {
                if mt.abs() <= self.band {
                    return (CaseLabel::H4, Some(DVector::zeros(k)));
                }
                let sign = mt.signum();
                let y = self.unbounded_direction(sign).and_then(|d| {
                    let a = sign * self.m.quad_form(&d);
                    let b = sign * self.l.dot(&d);
                    nonneg_root(a, b, -sign * mt).map(|alpha| d * alpha)
                });
                (CaseLabel::H4, y)
            }
        }
    }

    /// From the minimizer (`sign = 1`) or maximizer (`sign = −1`) of `q`,
    /// moves along an unbounded direction until `q = μ̃`.
    fn reach_from_extremum(&self, sign: f64) -> Option<DVector<f64>> {
        let extremum = if sign > 0.0 { self.lstar } else { self.ustar };
        let gap = sign * (self.mu_tilde - extremum);
        if gap < -self.band {
            return None;
        }
        let y0 = self.y_hat.clone()?;
        if gap <= 0.0 {
            return Some(y0);
        }
        let d = self.unbounded_direction(sign)?;
        let a = sign * self.m.quad_form(&d);
        let b = sign * d.dot(&(self.m.as_matrix() * &y0 + &self.l));
        let c = sign * (self.q(&y0) - self.mu_tilde);
        nonneg_root(a, b, c).map(|alpha| y0 + d * alpha)
    }
}

/// Largest root of `aα² + 2bα + c = 0` for `a ≥ 0`, `c ≤ 0`, using the
/// cancellation-free branch of the quadratic formula.
fn nonneg_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let a = a.max(0.0);
    let c = c.min(0.0);
    let disc = (b * b - a * c).max(0.0);
    let s = disc.sqrt();
    if b > 0.0 {
        let denom = b + s;
        return Some(if denom > 0.0 { -c / denom } else { 0.0 });
    }
    if a > 0.0 {
        return Some((s - b) / a);
    }
    if c == 0.0 {
        return Some(0.0);
    }
    None
}

/// Builds the affine analysis at σ, or `None` when `f + σg ∉ R(A + σB)`.
pub fn analyze_affine(
    inst: &Qp1qcInstance,
    sigma: f64,
    tol: Tolerance,
) -> Result<Option<SingletonAnalysis>> {
    let rt = root_tol(tol);
    let w = inst.a.pencil(&inst.b, sigma);
    let eig = sym_eig(&w)?;
    let r = &inst.f + &inst.g * sigma;
    let v = eig.null_basis(rt);
    if v.coords(&r).norm() > rt.rel * (inst.f.norm() + sigma.abs() * inst.g.norm()).max(1.0) {
        return Ok(None);
    }
    let range = eig.range_basis(rt);
    let cols = range.columns();
    let vals: Vec<f64> = eig
        .values
        .iter()
        .copied()
        .filter(|x| x.abs() > null_thr(&eig, rt))
        .collect();
    let coords = cols.tr_mul(&r);
    let base =
        cols * DVector::from_iterator(vals.len(), coords.iter().zip(&vals).map(|(c, l)| c / l));

    let m = inst.b.congruence(v.columns());
    let l = v.coords(&(inst.b.as_matrix() * &base - &inst.g));
    let mu_tilde = inst.mu - inst.constraint(&base);
    let m_eig = sym_eig(&m)?;
    let bnorm = sym_eig(&inst.b)?.max_abs();
    let m_thr = (rt.rel * bnorm.max(1.0)).max(tol.abs);
    let l_thr = rt.rel * (bnorm * base.norm() + inst.g.norm()).max(1.0);
    let band = tol.rel * inst.constraint_magnitude(&base).max(1.0);

    let null_m = m_eig.select(|x| x.abs() <= m_thr);
    let l_in_range = null_m.tr_mul(&l).norm() <= l_thr;
    let k = v.rank();
    let psd = k == 0 || m_eig.min() >= -m_thr;
    let nsd = k == 0 || m_eig.values[k - 1] <= m_thr;
    let (y_hat, ext) = if l_in_range {
        let inv = m_eig
            .values
            .map(|x| if x.abs() > m_thr { 1.0 / x } else { 0.0 });
        let mp = &m_eig.vectors * DMatrix::from_diagonal(&inv) * m_eig.vectors.transpose();
        let y = -(mp * &l);
        let val = l.dot(&y);
        (Some(y), val)
    } else {
        (None, 0.0)
    };
    let lstar = if psd && l_in_range {
        ext
    } else {
        f64::NEG_INFINITY
    };
    let ustar = if nsd && l_in_range {
        ext
    } else {
        f64::INFINITY
    };
    let mut an = SingletonAnalysis {
        sigma,
        base,
        v,
        m,
        l,
        mu_tilde,
        lstar,
        ustar,
        y_hat: if lstar.is_finite() || ustar.is_finite() {
            y_hat
        } else {
            None
        },
        y_tilde: None,
        band,
        m_thr,
        l_thr,
        m_eig,
    };
    if !an.ustar.is_finite() {
        an.y_tilde = an.unbounded_direction(1.0);
    }
    Ok(Some(an))
}

fn null_thr(eig: &EigDecomp, tol: Tolerance) -> f64 {
    (tol.rel * eig.max_abs().max(1.0)).max(tol.abs)
}

/// Residuals of the global optimality conditions at `(x, σ)`.
pub fn kkt_verify(
    inst: &Qp1qcInstance,
    x: &DVector<f64>,
    sigma: f64,
    tol: f64,
) -> Result<KktCertificate> {
    let w = inst.a.pencil(&inst.b, sigma);
    let r = &inst.f + &inst.g * sigma;
    let gap = inst.constraint(x) - inst.mu;
    let stat = (w.as_matrix() * x - &r).norm();
    let xs = x.norm().max(1.0);
    let scale = ((inst.a.norm_fro() + sigma.abs() * inst.b.norm_fro()) * xs * xs
        + (inst.f.norm() + sigma.abs() * inst.g.norm()) * xs
        + inst.mu.abs() * (1.0 + sigma.abs()))
    .max(1.0);
    Ok(KktCertificate {
        x: x.clone(),
        sigma,
        feas_resid: gap,
        stat_resid: stat,
        comp_resid: (sigma * gap).abs(),
        pencil_min_eig: sym_eig(&w)?.min(),
        scale,
        tol,
    })
}

/// `d(σ) = −(f + σg)ᵀ(A + σB)⁺(f + σg) − μσ`.
pub fn dual_value(inst: &Qp1qcInstance, sigma: f64, tol: Tolerance) -> Result<f64> {
    let rt = root_tol(tol);
    let w = inst.a.pencil(&inst.b, sigma);
    let eig = sym_eig(&w)?;
    if !eig.is_psd(rt) {
        return Err(Error::PreconditionViolated(format!(
            "A + σB is not PSD at σ = {sigma}"
        )));
    }
    let r = &inst.f + &inst.g * sigma;
    let null = eig.null_basis(rt);
    if null.coords(&r).norm() > rt.rel * (inst.f.norm() + sigma.abs() * inst.g.norm()).max(1.0) {
        return Err(Error::PreconditionViolated(format!(
            "f + σg is not in the range of A + σB at σ = {sigma}"
        )));
    }
    let thr = null_thr(&eig, rt);
    let coords = eig.vectors.tr_mul(&r);
    let quad: f64 = coords
        .iter()
        .zip(eig.values.iter())
        .filter(|(_, l)| l.abs() > thr)
        .map(|(c, l)| c * c / l)
        .sum();
    Ok(-quad - inst.mu * sigma)
}

/// Outcome of the boundedness test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub sigma: Option<f64>,
    pub case: CaseLabel,
}

/// Range test `f + σg ∈ R(A + σB)` at a numerically computed σ, allowing σ
/// to move slightly to the value that best annihilates the null-space
/// components.
fn range_test_at(inst: &Qp1qcInstance, sigma: f64, tol: Tolerance) -> Result<Option<f64>> {
    let rt = root_tol(tol);
    let eig = sym_eig(&inst.a.pencil(&inst.b, sigma))?;
    let n = eig.null_basis(rt);
    let p = n.coords(&inst.f);
    let q = n.coords(&inst.g);
    let thr = |s: f64| rt.rel * (inst.f.norm() + s.abs() * inst.g.norm()).max(1.0);
    if (&p + &q * sigma).norm() <= thr(sigma) {
        return Ok(Some(sigma));
    }
    let qq = q.norm_squared();
    if qq > 0.0 {
        let snapped = -p.dot(&q) / qq;
        if (snapped - sigma).abs() <= SNAP_REL * (1.0 + sigma.abs())
            && (&p + &q * snapped).norm() <= thr(snapped)
            && snapped >= 0.0
        {
            return Ok(Some(snapped));
        }
    }
    Ok(None)
}

enum Trichotomy {
    Any,
    Unique(f64),
    None,
}

fn trichotomy(inst: &Qp1qcInstance, v: &Basis, tol: Tolerance) -> Trichotomy {
    let rt = root_tol(tol);
    let p = v.coords(&inst.f);
    let q = v.coords(&inst.g);
    let pz = p.norm() <= tol.rel * inst.f.norm().max(1.0);
    let qz = q.norm() <= tol.rel * inst.g.norm().max(1.0);
    match (pz, qz) {
        (true, true) => Trichotomy::Any,
        (_, true) => Trichotomy::None,
        _ => {
            let s = -p.dot(&q) / q.norm_squared();
            let resid = (&p + &q * s).norm();
            if resid <= rt.rel * (inst.f.norm() + s.abs() * inst.g.norm()).max(1.0) {
                Trichotomy::Unique(if pz { 0.0 } else { s })
            } else {
                Trichotomy::None
            }
        }
    }
}

fn snap_zero(s: f64, tol: Tolerance) -> f64 {
    if s.abs() <= root_tol(tol).rel {
        0.0
    } else {
        s
    }
}

/// Searches for σ ≥ 0 with `A + σB ⪰ 0` and `f + σg ∈ R(A + σB)`.
pub fn feasibility_system(
    inst: &Qp1qcInstance,
    iv: &PencilInterval,
    tol: Tolerance,
) -> Result<Option<f64>> {
    let rp = ReducedPencil::new(&inst.a, &inst.b, tol)?;
    Ok(feasibility(inst, &rp, iv, tol)?.sigma)
}

fn feasibility(
    inst: &Qp1qcInstance,
    rp: &ReducedPencil,
    iv: &PencilInterval,
    tol: Tolerance,
) -> Result<Feasibility> {
    let none = |case| Ok(Feasibility { sigma: None, case });
    let (lo, hi) = match *iv {
        PencilInterval::Empty => return none(CaseLabel::A),
        PencilInterval::Singleton(s) => (snap_zero(s, tol), snap_zero(s, tol)),
        PencilInterval::Interval { lo, hi } => (snap_zero(lo, tol), snap_zero(hi, tol)),
    };
    if hi < 0.0 {
        return none(CaseLabel::A);
    }
    if hi == 0.0 || lo == hi {
        return Ok(Feasibility {
            sigma: range_test_at(inst, hi, tol)?,
            case: CaseLabel::B,
        });
    }
    let case = if lo < 0.0 {
        CaseLabel::C1
    } else {
        CaseLabel::C2
    };
    let floor = lo.max(0.0);
    let interior = |s: f64| s > lo && s < hi && s >= 0.0;
    let sigma = match trichotomy(inst, &rp.v, tol) {
        Trichotomy::Any => {
            let s = interior_point(&PencilInterval::Interval { lo: floor, hi }).unwrap_or(floor);
            Some(if lo < 0.0 && hi.is_infinite() { 0.0 } else { s })
        }
        Trichotomy::Unique(s) if interior(s) => Some(s),
        Trichotomy::Unique(_) | Trichotomy::None => {
            let mut found = None;
            if hi.is_finite() {
                found = range_test_at(inst, hi, tol)?;
            }
            if found.is_none() && lo >= 0.0 {
                found = range_test_at(inst, lo, tol)?;
            }
            found
        }
    };
    Ok(Feasibility { sigma, case })
}

fn reduced_instance(inst: &Qp1qcInstance, rp: &ReducedPencil) -> Result<Qp1qcInstance> {
    Qp1qcInstance::new(
        rp.ar.clone(),
        rp.br.clone(),
        rp.u.coords(&inst.f),
        rp.u.coords(&inst.g),
        inst.mu,
    )
}

fn attained(
    inst: &Qp1qcInstance,
    x: DVector<f64>,
    sigma: f64,
    case: CaseLabel,
) -> Result<Solution> {
    let certificate = kkt_verify(inst, &x, sigma, CERT_TOL)?;
    let value = inst.objective(&x);
    Ok(Solution::new(
        Status::Attained {
            x_star: x,
            value,
            certificate: Some(certificate),
        },
        case,
    ))
}

/// Interval pencil: always attained.
pub fn solve_interval_case(
    inst: &Qp1qcInstance,
    iv: &PencilInterval,
    sigma_feas: f64,
    tol: Tolerance,
) -> Result<Solution> {
    let rp = ReducedPencil::new(&inst.a, &inst.b, tol)?;
    solve_interval_with(inst, &rp, iv, sigma_feas, tol)
}

fn solve_interval_with(
    inst: &Qp1qcInstance,
    rp: &ReducedPencil,
    iv: &PencilInterval,
    sigma_feas: f64,
    tol: Tolerance,
) -> Result<Solution> {
    let PencilInterval::Interval { lo, hi } = *iv else {
        return Err(Error::PreconditionViolated(
            "pencil interval has no interior".into(),
        ));
    };
    let p = rp.v.coords(&inst.f);
    let q = rp.v.coords(&inst.g);
    let pz = p.norm() <= tol.rel * inst.f.norm().max(1.0);
    let qz = q.norm() <= tol.rel * inst.g.norm().max(1.0);
    let m = rp.reduced_dim();
    let fr = rp.u.coords(&inst.f);
    let gr = rp.u.coords(&inst.g);

    if pz && qz {
        if m == 0 {
            return attained(inst, DVector::zeros(inst.dim()), 0.0, CaseLabel::D);
        }
        let red = reduced_instance(inst, rp)?;
        let (u, sigma) = solve_dual_slater(&red, snap_zero(lo, tol), snap_zero(hi, tol), tol)?;
        return attained(inst, rp.u.lift(&u), sigma, CaseLabel::D);
    }
    let constraint_u = |u: &DVector<f64>| rp.br.quad_form(u) - 2.0 * gr.dot(u);
    if pz {
        // σ = 0, A ⪰ 0 and f ∈ R(A): minimize the convex u-part, then use
        // the v-part to satisfy the constraint.
        let u = if m == 0 {
            DVector::zeros(0)
        } else {
            sym_eig(&rp.ar)?.pinv(tol).as_matrix() * &fr
        };
        let slack = constraint_u(&u) - inst.mu;
        let t = (0.5 * slack).max(0.0);
        let v = &q * (t / q.norm_squared());
        let x = rp.u.lift(&u) + rp.v.lift(&v);
        return attained(inst, x, 0.0, CaseLabel::E);
    }
    if qz || sigma_feas <= 0.0 {
        return Err(Error::InternalInconsistency(
            "Vᵀf ≠ 0 requires Vᵀg ≠ 0 and σ > 0".into(),
        ));
    }
    let sigma = sigma_feas;
    let u = if m == 0 {
        DVector::zeros(0)
    } else {
        let w = rp.ar.pencil(&rp.br, sigma);
        sym_eig(&w)?.pinv(root_tol(tol)).as_matrix() * (&fr + &gr * sigma)
    };
    let z = &p * (-0.5 * sigma * (constraint_u(&u) - inst.mu) / p.norm_squared());
    let x = rp.u.lift(&u) + rp.v.lift(&z);
    attained(inst, x, sigma, CaseLabel::F)
}

struct DualEval {
    psi: f64,
    dpsi: f64,
    x: DVector<f64>,
    magnitude: f64,
}

fn dual_eval(inst: &Qp1qcInstance, sigma: f64) -> Result<DualEval> {
    let w = inst.a.pencil(&inst.b, sigma).into_matrix();
    let r = &inst.f + &inst.g * sigma;
    let solve = |w: DMatrix<f64>, rhs: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        match w.clone().cholesky() {
            Some(c) => Some(c.solve(rhs)),
            None => w.lu().solve(rhs),
        }
    };
    let x = solve(
        w.clone(),
        &DMatrix::from_column_slice(r.len(), 1, r.as_slice()),
    )
    .ok_or_else(|| Error::InternalInconsistency(format!("A + σB singular at σ = {sigma}")))?
    .column(0)
    .into_owned();
    let s = inst.b.as_matrix() * &x - &inst.g;
    let ws = solve(w, &DMatrix::from_column_slice(s.len(), 1, s.as_slice()))
        .ok_or_else(|| Error::InternalInconsistency(format!("A + σB singular at σ = {sigma}")))?;
    Ok(DualEval {
        psi: inst.constraint(&x) - inst.mu,
        dpsi: -2.0 * s.dot(&ws.column(0)),
        magnitude: inst.constraint_magnitude(&x).max(1.0),
        x,
    })
}

/// Solution at an endpoint σ of the pencil interval, where `A + σB` is
/// singular: the Lagrangian minimizer plus a null-space step making the
/// constraint active (σ > 0) or feasible (σ = 0).
fn endpoint_solution(
    inst: &Qp1qcInstance,
    sigma: f64,
    tol: Tolerance,
) -> Result<Option<DVector<f64>>> {
    let Some(an) = analyze_affine(inst, sigma, tol)? else {
        return Ok(None);
    };
    let (_, y) = an.find_y();
    Ok(y.map(|y| &an.base + an.v.lift(&y)))
}

/// Maximizes the concave dual over `[max(0, lo), hi]` for a pencil that is
/// positive definite on `(lo, hi)`. Returns `(x*, σ*)`.
pub fn solve_dual_slater(
    inst: &Qp1qcInstance,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<(DVector<f64>, f64)> {
    let left = lo.max(0.0);
    if left >= hi {
        let x = endpoint_solution(inst, hi, tol)?.ok_or_else(|| {
            Error::InternalInconsistency(format!("no Lagrangian minimizer at σ = {hi}"))
        })?;
        return Ok((x, hi));
    }
    let width = if hi.is_finite() && lo.is_finite() {
        hi - lo
    } else {
        left.abs().max(1.0)
    };
    let delta = 1e-7 * width;

    let mut bracket_lo;
    if lo < 0.0 {
        let e = dual_eval(inst, 0.0)?;
        if e.psi <= 0.0 {
            return Ok((e.x, 0.0));
        }
        bracket_lo = 0.0;
    } else {
        let e = dual_eval(inst, left + delta)?;
        if e.psi <= 0.0 {
            let x = endpoint_solution(inst, left, tol)?;
            return Ok(match x {
                Some(x) => (x, left),
                None => (e.x, left + delta),
            });
        }
        bracket_lo = left + delta;
    }

    let mut bracket_hi;
    if hi.is_finite() {
        let e = dual_eval(inst, hi - delta)?;
        if e.psi >= 0.0 {
            let x = endpoint_solution(inst, hi, tol)?;
            return Ok(match x {
                Some(x) => (x, hi),
                None => (e.x, hi - delta),
            });
        }
        bracket_hi = hi - delta;
    } else {
        let mut step = inst.scale();
        bracket_hi = bracket_lo + step;
        let mut found = false;
        for _ in 0..MAX_BISECTION {
            if dual_eval(inst, bracket_hi)?.psi < 0.0 {
                found = true;
                break;
            }
            bracket_lo = bracket_hi;
            step *= 2.0;
            bracket_hi += step;
        }
        if !found {
            return Err(Error::NoConvergence {
                iterations: MAX_BISECTION,
                residual: f64::INFINITY,
            });
        }
    }

    let mut sigma = 0.5 * (bracket_lo + bracket_hi);
    let mut last = dual_eval(inst, sigma)?;
    for it in 0..MAX_BISECTION {
        if last.psi.abs() <= 1e-3 * tol.rel * last.magnitude {
            return Ok((last.x, sigma));
        }
        if last.psi > 0.0 {
            bracket_lo = sigma;
        } else {
            bracket_hi = sigma;
        }
        if bracket_hi - bracket_lo <= 4.0 * f64::EPSILON * (1.0 + sigma.abs()) {
            break;
        }
        let newton = sigma - last.psi / last.dpsi;
        sigma = if it % 3 != 2 && last.dpsi < 0.0 && newton > bracket_lo && newton < bracket_hi {
            newton
        } else {
            0.5 * (bracket_lo + bracket_hi)
        };
        last = dual_eval(inst, sigma)?;
    }
    if last.psi.abs() > tol.rel * last.magnitude {
        return Err(Error::NoConvergence {
            iterations: MAX_BISECTION,
            residual: last.psi.abs(),
        });
    }
    Ok((last.x, sigma))
}

/// Singleton pencil `{σ*}` with σ* ≥ 0 and a solvable range condition.
pub fn solve_singleton_case(inst: &Qp1qcInstance, sigma: f64, tol: Tolerance) -> Result<Solution> {
    if sigma < 0.0 {
        return Err(Error::PreconditionViolated(format!(
            "σ* = {sigma} is negative"
        )));
    }
    let Some(an) = analyze_affine(inst, sigma, tol)? else {
        return Err(Error::PreconditionViolated(format!(
            "f + σg is not in the range of A + σB at σ = {sigma}"
        )));
    };
    let (case, y) = an.find_y();
    match y {
        Some(y) => attained(inst, &an.base + an.v.lift(&y), sigma, case),
        None => Ok(Solution::new(
            Status::Unattained {
                infimum: dual_value(inst, sigma, tol)?,
                sigma_star: sigma,
            },
            case,
        )),
    }
}

/// Classifies the instance and returns an optimizer, the infimum, or a
/// certificate of unboundedness or infeasibility.
pub fn classify_and_solve(inst: &Qp1qcInstance, tol: Tolerance) -> Result<Solution> {
    if !slater_holds(inst, tol)? {
        return solve_no_slater(inst, tol);
    }
    let rp = ReducedPencil::new(&inst.a, &inst.b, tol)?;
    let iv = reduced_interval(&rp.ar, &rp.br, tol)?;
    let fs = feasibility(inst, &rp, &iv, tol)?;
    let Some(sigma) = fs.sigma else {
        return Ok(Solution::new(
            Status::UnboundedBelow {
                witness: unbounded_witness(inst, tol)?,
            },
            fs.case,
        ));
    };
    match iv {
        PencilInterval::Interval { lo, hi } if snap_zero(lo, tol) < snap_zero(hi, tol) => {
            solve_interval_with(inst, &rp, &iv, sigma, tol)
        }
        _ => solve_singleton_case(inst, sigma, tol),
    }
}

/// A point with `G(x) < μ`.
pub fn slater_point(inst: &Qp1qcInstance, tol: Tolerance) -> Result<DVector<f64>> {
    let n = inst.dim();
    if inst.mu > 0.0 {
        return Ok(DVector::zeros(n));
    }
    let eig = sym_eig(&inst.b)?;
    let thr = null_thr(&eig, tol);
    if eig.values[0] < -thr {
        let mut v = eig.vectors.column(0).into_owned();
        if inst.g.dot(&v) < 0.0 {
            v = -v;
        }
        return Ok(v * ((inst.mu.abs() + 1.0) / eig.values[0].abs()).sqrt());
    }
    let null = eig.select(|x| x.abs() <= thr);
    let p = &null * null.tr_mul(&inst.g);
    if p.norm() > tol.rel * inst.g.norm().max(1.0) {
        return Ok(&p * ((inst.mu.abs() + 1.0) / (2.0 * p.norm_squared())));
    }
    Ok(eig.pinv(tol).as_matrix() * &inst.g)
}

/// Coefficients of `xᵀMx − 2cᵀx` along `x0 + t·d + t²·k`, lowest degree
/// first, and the same expression evaluated with absolute values.
fn path_poly(
    m: &DMatrix<f64>,
    c: &DVector<f64>,
    x0: &DVector<f64>,
    d: &DVector<f64>,
    k: &DVector<f64>,
) -> [f64; 5] {
    path_terms(m, c, x0, d, k, -2.0)
}

/// Same as [`path_poly`] over absolute values with every term added, which
/// bounds the rounding error of each coefficient. `abs_m` is `|M|`.
fn path_magnitudes(
    abs_m: &DMatrix<f64>,
    c: &DVector<f64>,
    x0: &DVector<f64>,
    d: &DVector<f64>,
    k: &DVector<f64>,
) -> [f64; 5] {
    path_terms(abs_m, &c.abs(), &x0.abs(), &d.abs(), &k.abs(), 2.0)
}

fn path_terms(
    m: &DMatrix<f64>,
    c: &DVector<f64>,
    x0: &DVector<f64>,
    d: &DVector<f64>,
    k: &DVector<f64>,
    lin: f64,
) -> [f64; 5] {
    let mx0 = m * x0;
    let md = m * d;
    let mk = m * k;
    [
        x0.dot(&mx0) + lin * c.dot(x0),
        2.0 * x0.dot(&md) + lin * c.dot(d),
        d.dot(&md) + 2.0 * x0.dot(&mk) + lin * c.dot(k),
        2.0 * d.dot(&mk),
        k.dot(&mk),
    ]
}

fn leading(coeffs: &[f64; 5], mags: &[f64; 5]) -> Option<(usize, f64)> {
    (0..5)
        .rev()
        .find(|&i| coeffs[i].abs() > 1e-10 * mags[i].max(1e-300))
        .map(|i| (i, coeffs[i]))
}

/// Bound beyond which a polynomial has the sign of its leading term and is
/// monotone.
fn cauchy_bound(coeffs: &[f64; 5], deg: usize) -> f64 {
    let lead = coeffs[deg].abs();
    1.0 + (0..deg)
        .map(|i| coeffs[i].abs() * (deg as f64) / lead)
        .fold(0.0, f64::max)
}

fn try_path(
    inst: &Qp1qcInstance,
    abs_a: &DMatrix<f64>,
    abs_b: &DMatrix<f64>,
    x0: &DVector<f64>,
    d: &DVector<f64>,
    k: &DVector<f64>,
) -> Option<Path> {
    let mut gp = path_poly(inst.b.as_matrix(), &inst.g, x0, d, k);
    gp[0] -= inst.mu;
    let fp = path_poly(inst.a.as_matrix(), &inst.f, x0, d, k);
    let gm = {
        let mut m = path_magnitudes(abs_b, &inst.g, x0, d, k);
        m[0] += inst.mu.abs();
        m
    };
    let fm = path_magnitudes(abs_a, &inst.f, x0, d, k);
    let (fdeg, flead) = leading(&fp, &fm)?;
    if flead >= 0.0 || fdeg == 0 {
        return None;
    }
    let mut t0 = cauchy_bound(&fp, fdeg);
    if let Some((gdeg, glead)) = leading(&gp, &gm) {
        if glead > 0.0 {
            return None;
        }
        if gdeg > 0 {
            t0 = t0.max(cauchy_bound(&gp, gdeg));
        }
    }
    let base = x0 + d * t0 + k * (t0 * t0);
    let dir = d + k * (2.0 * t0);
    let path = Path {
        base,
        direction: dir,
        curvature: k.clone(),
    };
    path_verifies(inst, &path).then_some(path)
}

/// Sampled check that the path stays feasible and the objective decreases.
pub(crate) fn path_verifies(inst: &Qp1qcInstance, path: &Path) -> bool {
    let mut prev = f64::INFINITY;
    for e in 0..=8 {
        let x = path.point(10f64.powi(e));
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let slack = 1e-9 * (inst.constraint_magnitude(&x) + 1.0);
        if inst.constraint(&x) > inst.mu + slack {
            return false;
        }
        let fx = inst.objective(&x);
        if fx >= prev {
            return false;
        }
        prev = fx;
    }
    true
}

fn unit(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

/// Candidate descent directions for an unbounded instance.
fn candidate_directions(inst: &Qp1qcInstance, tol: Tolerance) -> Result<Vec<DVector<f64>>> {
    let n = inst.dim();
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    let ea = sym_eig(&inst.a)?;
    let eb = sym_eig(&inst.b)?;
    dirs.extend(ea.vectors.column_iter().map(|c| c.into_owned()));
    dirs.extend(eb.vectors.column_iter().map(|c| c.into_owned()));

    // A restricted to N(B).
    let vb = eb.null_basis(tol);
    if vb.rank() > 0 {
        let e = sym_eig(&inst.a.congruence(vb.columns()))?;
        dirs.extend(
            (vb.columns() * e.vectors)
                .column_iter()
                .map(|c| c.into_owned()),
        );
        if let Some(d) = unit(vb.columns() * vb.coords(&inst.f)) {
            dirs.push(d);
        }
    }

    // Near the best σ ≥ 0, directions of least curvature of A + σB.
    let (sbar, _) = max_lambda_min(&inst.a, &inst.b, 0.0)?;
    let mut sigmas = vec![0.0];
    if sbar.is_finite() && sbar.abs() < 1e12 {
        sigmas.push(sbar);
    }
    let rp = ReducedPencil::new(&inst.a, &inst.b, tol)?;
    if let DetRoots::Roots(r) = pencil_roots(&rp.ar, &rp.br, tol)? {
        sigmas.extend(r.into_iter().filter(|&s| s >= 0.0));
    }
    dirs.extend(rp.v.columns().column_iter().map(|c| c.into_owned()));
    for s in sigmas {
        let w = inst.a.pencil(&inst.b, s);
        let e = sym_eig(&w)?;
        let spread = (1e-6 * e.max_abs()).max(tol.abs);
        let keep: Vec<usize> = (0..n)
            .filter(|&i| e.values[i] <= e.values[0] + spread)
            .collect();
        let cluster = select_columns(&e.vectors, &keep);
        let inner = sym_eig(&inst.b.congruence(&cluster))?;
        let cols: Vec<DVector<f64>> = (&cluster * &inner.vectors)
            .column_iter()
            .map(|c| c.into_owned())
            .collect();
        dirs.extend(cols.iter().cloned());
        zero_combinations(&cols, &inner.values, &mut dirs);
        dirs.extend(
            e.null_basis(root_tol(tol))
                .columns()
                .column_iter()
                .map(|c| c.into_owned()),
        );
        if let Some(d) = unit(&cluster * cluster.tr_mul(&(&inst.f + &inst.g * s))) {
            dirs.push(d);
        }
    }
    let eb_cols: Vec<DVector<f64>> = eb.vectors.column_iter().map(|c| c.into_owned()).collect();
    zero_combinations(&eb_cols, &eb.values, &mut dirs);
    Ok(dirs)
}

/// For eigen-pairs of opposite sign `(bᵢ > 0, bⱼ < 0)` adds
/// `√|bⱼ|·eᵢ ± √bᵢ·eⱼ`, whose `B`-quadratic vanishes.
fn zero_combinations(vecs: &[DVector<f64>], vals: &DVector<f64>, out: &mut Vec<DVector<f64>>) {
    let k = vecs.len().min(vals.len());
    for i in 0..k {
        for j in 0..k {
            if vals[i] > 0.0 && vals[j] < 0.0 {
                let (a, b) = (vals[j].abs().sqrt(), vals[i].sqrt());
                for s in [1.0, -1.0] {
                    if let Some(d) = unit(&vecs[i] * a + &vecs[j] * (s * b)) {
                        out.push(d);
                    }
                }
            }
        }
    }
}

/// Searches for a verified path along which the constraint holds and the
/// objective tends to −∞. Straight rays are tried first, then parabolic
/// arcs bending into `N(B)` when `g ∉ R(B)`.
pub fn unbounded_witness(inst: &Qp1qcInstance, tol: Tolerance) -> Result<Option<Path>> {
    let n = inst.dim();
    let xs = slater_point(inst, tol)?;
    let abs_a = inst.a.abs();
    let abs_b = inst.b.abs();
    let dirs = candidate_directions(inst, tol)?;

    let eb = sym_eig(&inst.b)?;
    let null = eb.select(|x| x.abs() <= null_thr(&eb, tol));
    let pg = &null * null.tr_mul(&inst.g);
    let bend = (pg.norm() > tol.rel * inst.g.norm().max(1.0)).then_some(pg);

    let zero = DVector::zeros(n);
    for pass in 0..2 {
        for d0 in &dirs {
            for sign in [1.0, -1.0] {
                let d = d0 * sign;
                let bd = inst.b.as_matrix() * &d;
                let ad = inst.a.as_matrix() * &d;
                let mut bases = vec![xs.clone()];
                // Shift the base so that the linear rates of G and F along d
                // are both −1.
                let rows = DMatrix::from_rows(&[bd.transpose(), ad.transpose()]);
                let rhs = DVector::from_column_slice(&[
                    inst.g.dot(&d) - xs.dot(&bd) - 1.0,
                    inst.f.dot(&d) - xs.dot(&ad) - 1.0,
                ]);
                if let Ok(w) = rows.clone().svd(true, true).solve(&rhs, 1e-12) {
                    bases.push(&xs + w);
                }
                if bd.norm() > 0.0 {
                    let w = &bd * ((rhs[0]) / bd.norm_squared());
                    bases.push(&xs + w);
                }
                for x0 in &bases {
                    let curv = if pass == 0 {
                        zero.clone()
                    } else {
                        let Some(p) = &bend else { continue };
                        let need = d.dot(&bd).max(0.0) + 1.0;
                        p * (need / (2.0 * inst.g.dot(p)))
                    };
                    if let Some(path) = try_path(inst, &abs_a, &abs_b, x0, &d, &curv) {
                        return Ok(Some(path));
                    }
                }
            }
        }
    }
    Ok(None)
}
