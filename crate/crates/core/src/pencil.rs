//! The symmetric pencil `A + σB`: its positive semidefinite interval, the
//! roots of `det(UᵀAU + σUᵀBU)`, and simultaneous diagonalization by
//! congruence.
//!
//! All interval computations happen on the reduced pencil obtained by
//! projecting out the joint null space `N(A) ∩ N(B)`. On that complement the
//! pencil is nonsingular for every σ in the interior of the PSD interval, so
//! the interval endpoints are real roots of the reduced determinant.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, inv_sqrt, joint_null_split, sym_eig, Basis, SymMatrix, Tolerance,
};

/// Imaginary parts below this (relative to `1 + |re|`) are treated as
/// rounding noise on a real root. Double roots at interval endpoints split
/// into complex pairs of size `O(√ε)`.
const ROOT_IMAG_REL: f64 = 1e-6;
/// Looser bound for complex pairs examined as possible tangent roots.
const TANGENT_IMAG_REL: f64 = 1e-3;
/// Roots closer than this (relative) are merged.
const ROOT_MERGE_REL: f64 = 1e-7;
/// Golden-section iterations for concave maximization of `λ_min`.
const GOLDEN_ITERS: usize = 200;
/// Angular grid for the definite-combination search.
const ANGULAR_GRID: usize = 720;
/// Acceptance threshold on diagonalization residuals, relative to the data.
pub const SDC_RESIDUAL_REL: f64 = 1e-7;

/// `I⪰(A, B) = {σ : A + σB ⪰ 0}`. Endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PencilInterval {
    Empty,
    Singleton(f64),
    Interval { lo: f64, hi: f64 },
}

impl PencilInterval {
    pub fn lo(&self) -> Option<f64> {
        match *self {
            PencilInterval::Empty => None,
            PencilInterval::Singleton(s) => Some(s),
            PencilInterval::Interval { lo, .. } => Some(lo),
        }
    }

    pub fn hi(&self) -> Option<f64> {
        match *self {
            PencilInterval::Empty => None,
            PencilInterval::Singleton(s) => Some(s),
            PencilInterval::Interval { hi, .. } => Some(hi),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PencilInterval::Empty => "empty",
            PencilInterval::Singleton(_) => "singleton",
            PencilInterval::Interval { .. } => "interval",
        }
    }

    /// Membership in the closed set.
    pub fn contains(&self, sigma: f64) -> bool {
        match *self {
            PencilInterval::Empty => false,
            PencilInterval::Singleton(s) => sigma == s,
            PencilInterval::Interval { lo, hi } => lo <= sigma && sigma <= hi,
        }
    }
}

/// A σ strictly inside an interval pencil: the midpoint of finite ends,
/// a finite end ± 1 when the other is infinite, or 0 when both are.
pub fn interior_point(iv: &PencilInterval) -> Option<f64> {
    match *iv {
        PencilInterval::Interval { lo, hi } => Some(match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        }),
        _ => None,
    }
}

/// The pencil restricted to the orthogonal complement of `N(A) ∩ N(B)`.
#[derive(Debug, Clone)]
pub struct ReducedPencil {
    pub v: Basis,
    pub u: Basis,
    pub ar: SymMatrix,
    pub br: SymMatrix,
}

impl ReducedPencil {
    pub fn new(a: &SymMatrix, b: &SymMatrix, tol: Tolerance) -> Result<Self> {
        let (v, u) = joint_null_split(a, b, tol)?;
        let ar = a.congruence(u.columns());
        let br = b.congruence(u.columns());
        Ok(ReducedPencil { v, u, ar, br })
    }

    pub fn reduced_dim(&self) -> usize {
        self.u.rank()
    }
}

/// Real roots of `σ ↦ det(M + σN)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DetRoots {
    /// The determinant vanishes identically.
    AllSigma,
    Roots(Vec<f64>),
}

impl DetRoots {
    pub fn roots(&self) -> &[f64] {
        match self {
            DetRoots::AllSigma => &[],
            DetRoots::Roots(r) => r,
        }
    }
}

fn check_same_dim(m: &SymMatrix, n: &SymMatrix) -> Result<()> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pencil matrices of size {} and {}",
            m.dim(),
            n.dim()
        )));
    }
    Ok(())
}

fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(m)?.max_abs())
}

/// Eigenvalues of a general real matrix as `(re, im)`. nalgebra can return a
/// NaN imaginary part for a nearly repeated real pair; that is read as zero.
fn eigenvalues(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            (
                z.re,
                if z.im.is_nan() && z.re.is_finite() {
                    0.0
                } else {
                    z.im
                },
            )
        })
        .collect()
}

/// Sorts, merges near-duplicates, keeps near-real values.
fn collect_real_roots(candidates: impl IntoIterator<Item = (f64, f64)>) -> Vec<f64> {
    let mut roots: Vec<f64> = candidates
        .into_iter()
        .filter(|(re, im)| re.is_finite() && im.abs() <= ROOT_IMAG_REL * (1.0 + re.abs()))
        .map(|(re, _)| re)
        .collect();
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    let mut cluster: Vec<f64> = Vec::new();
    for r in roots {
        if let Some(&last) = cluster.last() {
            if (r - last).abs() > ROOT_MERGE_REL * (1.0 + last.abs()) {
                merged.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                cluster.clear();
            }
        }
        cluster.push(r);
    }
    if !cluster.is_empty() {
        merged.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
    }
    merged
}

/// Real roots of `det(M + σN)` by interpolation and a companion matrix.
///
/// The determinant is a polynomial of degree at most `m`. It is sampled at
/// `m + 1` equally spaced nodes centred at zero with spacing
/// `‖M‖₂ / ‖N‖₂`, the Newton form is converted to monomial coefficients,
/// and the roots are the eigenvalues of the companion matrix.
pub fn det_poly_roots(m: &SymMatrix, n: &SymMatrix, tol: Tolerance) -> Result<DetRoots> {
    check_same_dim(m, n)?;
    let dim = m.dim();
    if dim == 0 {
        return Ok(DetRoots::Roots(Vec::new()));
    }
    let (norm_m, norm_n) = (spectral_norm(m)?, spectral_norm(n)?);
    let step = if norm_n > 0.0 && norm_m > 0.0 {
        norm_m / norm_n
    } else {
        1.0
    };
    let nodes: Vec<f64> = (0..=dim).map(|k| k as f64 - dim as f64 / 2.0).collect();
    let values: Vec<f64> = nodes
        .iter()
        .map(|&t| m.pencil(n, step * t).as_matrix().clone().determinant())
        .collect();
    let identically_zero = nodes.iter().zip(&values).all(|(&t, &v)| {
        let reference = (norm_m + (step * t).abs() * norm_n).powi(dim as i32);
        v.abs() <= tol.rel * reference.max(tol.abs)
    });
    if identically_zero {
        return Ok(DetRoots::AllSigma);
    }

    // Newton divided differences, then expand to monomial coefficients.
    let mut dd = values.clone();
    for level in 1..=dim {
        for i in (level..=dim).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    let mut coeffs = vec![0.0; dim + 1];
    for k in (0..=dim).rev() {
        // coeffs ← coeffs·(t − nodes[k]) + dd[k]
        let mut next = vec![0.0; dim + 1];
        for j in 0..dim {
            next[j + 1] += coeffs[j];
            next[j] -= coeffs[j] * nodes[k];
        }
        next[0] += dd[k];
        coeffs = next;
    }
    let cmax = coeffs.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    let mut degree = dim;
    while degree > 0 && coeffs[degree].abs() <= 1e-10 * cmax {
        degree -= 1;
    }
    if degree == 0 {
        return Ok(DetRoots::Roots(Vec::new()));
    }
    let lead = coeffs[degree];
    let mut companion = DMatrix::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    Ok(DetRoots::Roots(collect_real_roots(
        eigenvalues(&companion)
            .into_iter()
            .map(|(re, im)| (re * step, im * step)),
    )))
}

/// Picks a shift `σ₀` making `M + σ₀N` as well conditioned as possible.
/// Returns `None` when every probe is numerically singular.
fn pick_shift(m: &SymMatrix, n: &SymMatrix, tol: Tolerance) -> Result<Option<(f64, SymMatrix)>> {
    let (norm_m, norm_n) = (spectral_norm(m)?, spectral_norm(n)?);
    let s = if norm_n > 0.0 && norm_m > 0.0 {
        norm_m / norm_n
    } else {
        1.0
    };
    const PROBES: [f64; 9] = [
        0.0, 0.618_034, -0.414_214, 1.732_051, -2.236_068, 3.3, -0.1, 7.389, -11.0,
    ];
    let mut best: Option<(f64, f64, SymMatrix)> = None;
    for p in PROBES {
        let sigma = p * s;
        let w = m.pencil(n, sigma);
        let eig = sym_eig(&w)?;
        let smallest = eig.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let ratio = smallest / eig.max_abs().max(f64::MIN_POSITIVE);
        if best.as_ref().is_none_or(|(r, _, _)| ratio > *r) {
            best = Some((ratio, sigma, w));
        }
        if ratio > 1e-2 {
            break;
        }
    }
    Ok(match best {
        Some((ratio, sigma, w)) if ratio > tol.rel => Some((sigma, w)),
        _ => None,
    })
}

/// Eigenvalues of `det(M + σN)` as `(re, im)` pairs, from the eigenvalues
/// of `(M + σ₀N)⁻¹N`: each eigenvalue `λ ≠ 0` gives `σ₀ − 1/λ`. `None`
/// when the determinant vanishes identically.
fn pencil_spectrum(
    m: &SymMatrix,
    n: &SymMatrix,
    tol: Tolerance,
) -> Result<Option<Vec<(f64, f64)>>> {
    let Some((sigma0, w)) = pick_shift(m, n, tol)? else {
        return Ok(None);
    };
    let lu = w.as_matrix().clone().lu();
    let k = lu
        .solve(n.as_matrix())
        .ok_or_else(|| Error::InternalInconsistency("shifted pencil is singular".into()))?;
    let knorm = k.norm();
    Ok(Some(
        eigenvalues(&k)
            .into_iter()
            .map(|(re, im)| Complex::new(re, im))
            .filter(|z| z.norm() > 1e-13 * knorm.max(f64::MIN_POSITIVE))
            .map(|z| {
                let inv = z.inv();
                (sigma0 - inv.re, -inv.im)
            })
            .collect(),
    ))
}

/// Real roots of `det(M + σN)` by the eigen-shift method.
pub fn pencil_roots(m: &SymMatrix, n: &SymMatrix, tol: Tolerance) -> Result<DetRoots> {
    check_same_dim(m, n)?;
    if m.dim() == 0 {
        return Ok(DetRoots::Roots(Vec::new()));
    }
    Ok(match pencil_spectrum(m, n, tol)? {
        None => DetRoots::AllSigma,
        Some(spectrum) => DetRoots::Roots(collect_real_roots(spectrum)),
    })
}

/// Real parts of complex pairs too far from the axis to count as roots
/// but close enough to be a tangent root split by rounding.
fn near_real_pairs(m: &SymMatrix, n: &SymMatrix, tol: Tolerance) -> Result<Vec<f64>> {
    let spectrum = pencil_spectrum(m, n, tol)?.unwrap_or_default();
    Ok(collect_real_roots(spectrum.into_iter().filter_map(
        |(re, im)| {
            let band = 1.0 + re.abs();
            (im.abs() > ROOT_IMAG_REL * band && im.abs() <= TANGENT_IMAG_REL * band)
                .then_some((re, 0.0))
        },
    )))
}

fn lambda_min_at(ar: &SymMatrix, br: &SymMatrix, sigma: f64) -> Result<f64> {
    Ok(sym_eig(&ar.pencil(br, sigma))?.min())
}

/// Golden-section maximization of a concave function on `[a, b]`.
fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximizes the concave map `σ ↦ λ_min(Ar + σBr)` over `σ ≥ floor` by
/// bracket expansion and golden section. Returns `(σ, λ_min)`; `σ` may be
/// very large when the maximum is approached only at infinity.
pub(crate) fn max_lambda_min(ar: &SymMatrix, br: &SymMatrix, floor: f64) -> Result<(f64, f64)> {
    let f = |s: f64| lambda_min_at(ar, br, s);
    let scale = {
        let (na, nb) = (spectral_norm(ar)?, spectral_norm(br)?);
        if na > 0.0 && nb > 0.0 {
            na / nb
        } else {
            1.0
        }
    };
    let start = if floor.is_finite() { floor } else { 0.0 };
    let mut step = scale;
    let (x0, f0) = (start, f(start)?);
    // Walk right while increasing.
    let (mut left, mut mid, mut fmid) = (x0, x0, f0);
    let mut right = x0 + step;
    let mut fright = f(right)?;
    if fright > fmid {
        for _ in 0..200 {
            left = mid;
            mid = right;
            fmid = fright;
            step *= 2.0;
            right = mid + step;
            fright = f(right)?;
            if fright <= fmid {
                break;
            }
        }
        if fright > fmid {
            return Ok((right, fright));
        }
    } else if !floor.is_finite() {
        // Walk left while increasing.
        let mut lo = x0 - step;
        let mut flo = f(lo)?;
        while flo > fmid {
            right = mid;
            mid = lo;
            fmid = flo;
            step *= 2.0;
            lo = mid - step;
            flo = f(lo)?;
            if step > 1e300 {
                return Ok((lo, flo));
            }
        }
        left = lo;
    }
    golden_max(left, right, f)
}

/// `I⪰(A, B)` for the full pencil.
pub fn pencil_interval(a: &SymMatrix, b: &SymMatrix, tol: Tolerance) -> Result<PencilInterval> {
    check_same_dim(a, b)?;
    let rp = ReducedPencil::new(a, b, tol)?;
    reduced_interval(&rp.ar, &rp.br, tol)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    sigma: f64,
    is_root: bool,
    psd: bool,
    lambda_min: f64,
}

/// `I⪰` of a pencil with trivial joint null space.
pub fn reduced_interval(ar: &SymMatrix, br: &SymMatrix, tol: Tolerance) -> Result<PencilInterval> {
    check_same_dim(ar, br)?;
    if ar.dim() == 0 {
        return Ok(PencilInterval::Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        });
    }
    let norm_a = spectral_norm(ar)?;
    let norm_b = spectral_norm(br)?;
    if norm_b <= tol.rel * norm_a.max(1.0) {
        return Ok(if sym_eig(ar)?.is_psd(tol) {
            PencilInterval::Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }
        } else {
            PencilInterval::Empty
        });
    }

    // Roots within rounding of zero are reported as exactly zero.
    let zero_band = 64.0 * f64::EPSILON * (norm_a / norm_b).max(1.0);
    let roots = match pencil_roots(ar, br, tol)? {
        DetRoots::Roots(r) => r
            .into_iter()
            .map(|x| if x.abs() <= zero_band { 0.0 } else { x })
            .collect::<Vec<_>>(),
        DetRoots::AllSigma => {
            // Singular pencil: never definite, so the PSD set has empty
            // interior. Find its only possible point by concave maximization.
            let (s, lm) = max_lambda_min(ar, br, f64::NEG_INFINITY)?;
            let thr = tol.rel * (norm_a + s.abs() * norm_b).max(1.0);
            return Ok(if lm >= -thr && s.is_finite() {
                PencilInterval::Singleton(s)
            } else {
                PencilInterval::Empty
            });
        }
    };

    let mut roots = roots;
    for t in near_real_pairs(ar, br, tol)? {
        let t = if t.abs() <= zero_band { 0.0 } else { t };
        let thr = tol.rel * (norm_a + t.abs() * norm_b).max(1.0);
        if lambda_min_at(ar, br, t)? >= -thr {
            roots.push(t);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    let mut points: Vec<(f64, bool)> = roots.iter().map(|&r| (r, true)).collect();
    if let (Some(&first), Some(&last)) = (roots.first(), roots.last()) {
        points.push((first - 1.0, false));
        points.push((last + 1.0, false));
        for w in roots.windows(2) {
            points.push((0.5 * (w[0] + w[1]), false));
        }
    }
    if !roots.iter().any(|&r| r.abs() <= ROOT_MERGE_REL) {
        points.push((0.0, false));
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0));
    points.dedup_by(|x, y| {
        if x.0 == y.0 {
            y.1 |= x.1;
            true
        } else {
            false
        }
    });

    let mut cands = Vec::with_capacity(points.len());
    for (sigma, is_root) in points {
        let eig = sym_eig(&ar.pencil(br, sigma))?;
        cands.push(Candidate {
            sigma,
            is_root,
            psd: eig.is_psd(tol),
            lambda_min: eig.min(),
        });
    }

    let psd_idx: Vec<usize> = (0..cands.len()).filter(|&i| cands[i].psd).collect();
    if psd_idx.is_empty() {
        return polish_near_singleton(ar, br, &cands, norm_a, norm_b, tol);
    }
    let (first, last) = (psd_idx[0], *psd_idx.last().unwrap());
    if last - first + 1 != psd_idx.len() {
        return Err(Error::InternalInconsistency(format!(
            "PSD candidates are not contiguous: {:?}",
            psd_idx.iter().map(|&i| cands[i].sigma).collect::<Vec<_>>()
        )));
    }
    if first == last && cands[first].is_root {
        return Ok(PencilInterval::Singleton(cands[first].sigma));
    }

    let neg_b = br.scaled(-1.0);
    let lo = if sym_eig(&neg_b)?.is_psd(tol) {
        Some(f64::NEG_INFINITY)
    } else {
        (first.saturating_sub(1)..=first)
            .rev()
            .find(|&i| cands[i].is_root)
            .map(|i| cands[i].sigma)
    };
    let hi = if sym_eig(br)?.is_psd(tol) {
        Some(f64::INFINITY)
    } else {
        (last..cands.len().min(last + 2))
            .find(|&i| cands[i].is_root)
            .map(|i| cands[i].sigma)
    };
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return recover_bounds(ar, br, &cands, first, last, norm_a, norm_b, tol);
    };
    if lo >= hi {
        return Ok(PencilInterval::Singleton(lo));
    }
    Ok(PencilInterval::Interval { lo, hi })
}

/// Bounds of the PSD run `cands[first..=last]` when the root finder lost
/// an endpoint, typically a tangent root split into a complex pair.
/// `λ_min` is concave, so its maximum and sign changes locate the set.
#[allow(clippy::too_many_arguments)]
fn recover_bounds(
    ar: &SymMatrix,
    br: &SymMatrix,
    cands: &[Candidate],
    first: usize,
    last: usize,
    norm_a: f64,
    norm_b: f64,
    tol: Tolerance,
) -> Result<PencilInterval> {
    let lm = |s: f64| lambda_min_at(ar, br, s);
    let outside = |mut s: f64, dir: f64| -> Result<Option<f64>> {
        let mut step = 1.0 + s.abs();
        for _ in 0..64 {
            s += dir * step;
            if lm(s)? < 0.0 {
                return Ok(Some(s));
            }
            step *= 2.0;
        }
        Ok(None)
    };
    let left = match first.checked_sub(1) {
        Some(i) => Some(cands[i].sigma),
        None => outside(cands[first].sigma, -1.0)?,
    };
    let right = match cands.get(last + 1) {
        Some(c) => Some(c.sigma),
        None => outside(cands[last].sigma, 1.0)?,
    };
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Error::InternalInconsistency(
            "PSD set has no finite boundary".into(),
        ));
    };
    let (peak, top) = golden_max(left, right, lm)?;
    let thr = tol.rel * (norm_a + peak.abs() * norm_b).max(1.0);
    if top <= 10.0 * thr {
        let near_zero = peak.abs() <= 1e-6 && lm(0.0)? >= -thr;
        return Ok(PencilInterval::Singleton(if near_zero {
            0.0
        } else {
            peak
        }));
    }
    let edge = |mut out: f64, mut inn: f64| -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (out + inn);
            if mid == out || mid == inn {
                break;
            }
            if lm(mid)? >= 0.0 {
                inn = mid;
            } else {
                out = mid;
            }
        }
        Ok(inn)
    };
    Ok(PencilInterval::Interval {
        lo: edge(left, peak)?,
        hi: edge(right, peak)?,
    })
}

/// When no candidate passes the PSD test, the set may still be a single
/// point the samples missed, such as a tangent root lost to a complex pair.
/// `λ_min` is concave, so its maximum lies next to the best sample.
fn polish_near_singleton(
    ar: &SymMatrix,
    br: &SymMatrix,
    cands: &[Candidate],
    norm_a: f64,
    norm_b: f64,
    tol: Tolerance,
) -> Result<PencilInterval> {
    let best =
        (0..cands.len()).max_by(|&x, &y| cands[x].lambda_min.total_cmp(&cands[y].lambda_min));
    let (s, lm) = match best {
        Some(k) if k > 0 && k + 1 < cands.len() => {
            golden_max(cands[k - 1].sigma, cands[k + 1].sigma, |s| {
                lambda_min_at(ar, br, s)
            })?
        }
        _ => max_lambda_min(ar, br, f64::NEG_INFINITY)?,
    };
    let thr = tol.rel * (norm_a + s.abs() * norm_b).max(1.0);
    if lm < -thr || !s.is_finite() {
        return Ok(PencilInterval::Empty);
    }
    let near_zero = s.abs() <= 1e-6 && lambda_min_at(ar, br, 0.0)? >= -thr;
    Ok(PencilInterval::Singleton(if near_zero { 0.0 } else { s }))
}

/// How a congruence was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdcMethod {
    AlreadyDiagonal,
    /// Both matrices vanish on all but at most one direction.
    Degenerate,
    /// `A + σB ≻ 0` on the reduced space for an interior σ.
    PencilInterval,
    /// `B + σA ≻ 0` on the reduced space for an interior σ.
    ReversedInterval,
    /// `cos θ·A + sin θ·B ≻ 0` found by angular search.
    DefiniteCombination,
    /// Eigenvectors of `(A + σ₀B)⁻¹B` for a nonsingular shift.
    GeneralizedEigen,
}

impl SdcMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SdcMethod::AlreadyDiagonal => "already_diagonal",
            SdcMethod::Degenerate => "degenerate",
            SdcMethod::PencilInterval => "pencil_interval",
            SdcMethod::ReversedInterval => "reversed_interval",
            SdcMethod::DefiniteCombination => "definite_combination",
            SdcMethod::GeneralizedEigen => "generalized_eigen",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdcCertificate {
    pub c: DMatrix<f64>,
    pub d_a: DVector<f64>,
    pub d_b: DVector<f64>,
    pub cond: f64,
    pub method: SdcMethod,
}

#[derive(Debug, Clone)]
pub enum SdcResult {
    Sdc(SdcCertificate),
    NotSdc,
    Unknown,
}

impl SdcResult {
    pub fn kind(&self) -> &'static str {
        match self {
            SdcResult::Sdc(_) => "sdc",
            SdcResult::NotSdc => "not_sdc",
            SdcResult::Unknown => "unknown",
        }
    }
}

/// Off-diagonal residuals `‖CᵀAC − diag(d_A)‖_F`, `‖CᵀBC − diag(d_B)‖_F`.
pub fn sdc_residuals(a: &SymMatrix, b: &SymMatrix, cert: &SdcCertificate) -> (f64, f64) {
    let ca = a.congruence(&cert.c).into_matrix() - DMatrix::from_diagonal(&cert.d_a);
    let cb = b.congruence(&cert.c).into_matrix() - DMatrix::from_diagonal(&cert.d_b);
    (ca.norm(), cb.norm())
}

fn is_diagonal(m: &SymMatrix, tol: Tolerance) -> bool {
    let n = m.dim();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].abs() <= tol.abs))
}

/// Assembles `C = [U·Cr | V]` with unit columns and validates it.
fn finish_certificate(
    a: &SymMatrix,
    b: &SymMatrix,
    rp: &ReducedPencil,
    cr: &DMatrix<f64>,
    method: SdcMethod,
) -> Option<SdcCertificate> {
    let n = a.dim();
    let m = rp.reduced_dim();
    let mut c = DMatrix::zeros(n, n);
    if m > 0 {
        c.columns_mut(0, m).copy_from(&(rp.u.columns() * cr));
    }
    if rp.v.rank() > 0 {
        c.columns_mut(m, n - m).copy_from(rp.v.columns());
    }
    for mut col in c.column_iter_mut() {
        let nrm = col.norm();
        if nrm == 0.0 {
            return None;
        }
        col /= nrm;
    }
    let cond = condition_number(&c);
    if !cond.is_finite() || cond > 1e12 {
        return None;
    }
    let d_a = a.congruence(&c).diagonal();
    let d_b = b.congruence(&c).diagonal();
    let cert = SdcCertificate {
        c,
        d_a,
        d_b,
        cond,
        method,
    };
    let (ra, rb) = sdc_residuals(a, b, &cert);
    let scale = 1f64.max(a.norm_fro()).max(b.norm_fro());
    (ra.max(rb) <= SDC_RESIDUAL_REL * scale).then_some(cert)
}

/// Congruence from a definite combination `W = α·Ar + β·Br ≻ 0`:
/// with `P = W^{-1/2}` and `P·X·P = QDQᵀ` for the other matrix, `P·Q`
/// diagonalizes both.
fn from_definite(rp: &ReducedPencil, alpha: f64, beta: f64) -> Result<Option<DMatrix<f64>>> {
    let w = rp.ar.combine(alpha, &rp.br, beta);
    let Ok(p) = inv_sqrt(&w) else {
        return Ok(None);
    };
    let other = if alpha.abs() >= beta.abs() {
        &rp.br
    } else {
        &rp.ar
    };
    let q = sym_eig(&other.congruence(p.as_matrix()))?.vectors;
    Ok(Some(p.as_matrix() * q))
}

/// Closed-form decision for a reduced pencil of dimension 2: with `W` a
/// nonsingular member and `K` another, independent member, the pair is SDC
/// iff `W⁻¹K` has real eigenvalues and is diagonalizable.
fn two_by_two_is_sdc(ar: &SymMatrix, br: &SymMatrix, tol: Tolerance) -> Option<bool> {
    let members = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)];
    let (wa, wb) = members
        .into_iter()
        .max_by(|x, y| {
            let dx = ar.combine(x.0, br, x.1).as_matrix().determinant().abs();
            let dy = ar.combine(y.0, br, y.1).as_matrix().determinant().abs();
            dx.total_cmp(&dy)
        })
        .unwrap();
    let w = ar.combine(wa, br, wb);
    let wdet = w.as_matrix().determinant();
    let wscale = w.norm_fro().powi(2);
    if wdet.abs() <= tol.rel * wscale.max(tol.abs) {
        return None;
    }
    // A member independent of W.
    let other = if wb == 0.0 { br } else { ar };
    let k = w.as_matrix().clone().try_inverse()? * other.as_matrix();
    let tr = k.trace();
    let det = k.determinant();
    let disc = tr * tr - 4.0 * det;
    let scale = tr * tr + 4.0 * det.abs();
    if disc > 1e-9 * scale {
        Some(true)
    } else if disc < -1e-9 * scale {
        Some(false)
    } else {
        let shifted = &k - DMatrix::identity(2, 2) * (0.5 * tr);
        Some(shifted.norm() <= 1e-9 * k.norm().max(tol.abs))
    }
}

/// Generalized-eigenvector congruence. `Err(())` signals a refutation
/// (complex spectrum or a defective eigenvalue), `Ok(None)` an inconclusive
/// numerical outcome.
fn generalized_eigen(
    rp: &ReducedPencil,
    tol: Tolerance,
) -> Result<std::result::Result<Option<DMatrix<f64>>, ()>> {
    let m = rp.reduced_dim();
    let Some((_, w)) = pick_shift(&rp.ar, &rp.br, tol)? else {
        // det(Ar + σBr) ≡ 0 with trivial joint null space: no congruence can
        // exist, since a diagonal pair without common zero has a
        // nonvanishing determinant somewhere.
        return Ok(Err(()));
    };
    let Some(k) = w.as_matrix().clone().lu().solve(rp.br.as_matrix()) else {
        return Ok(Ok(None));
    };
    let kscale = k.norm().max(1.0);
    let mut reals = Vec::with_capacity(m);
    for (re, im) in eigenvalues(&k) {
        if im.abs() > 1e-6 * (1.0 + re.abs()) * kscale {
            return Ok(Err(()));
        }
        reals.push(re);
    }
    reals.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for r in reals {
        match clusters.last_mut() {
            Some(c) if (r - c[c.len() - 1]).abs() <= 1e-6 * (1.0 + r.abs()) => c.push(r),
            _ => clusters.push(vec![r]),
        }
    }
    let norm_w = w.norm_fro();
    let norm_b = rp.br.norm_fro();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m);
    for cluster in &clusters {
        let lambda = cluster.iter().sum::<f64>() / cluster.len() as f64;
        let size = cluster.len();
        let pencil = rp.br.combine(1.0, &w, -lambda);
        let eig = sym_eig(&pencil)?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.values[i].abs().total_cmp(&eig.values[j].abs()));
        let worst = eig.values[order[size - 1]].abs();
        if worst > 1e-6 * (norm_b + lambda.abs() * norm_w).max(tol.abs) {
            // Eigenspace smaller than the algebraic multiplicity.
            return Ok(Err(()));
        }
        let e = crate::linalg::select_columns(&eig.vectors, &order[..size]);
        let r = sym_eig(&w.congruence(&e))?.vectors;
        let er = e * r;
        cols.extend(er.column_iter().map(|c| c.into_owned()));
    }
    if cols.len() != m {
        return Ok(Ok(None));
    }
    Ok(Ok(Some(DMatrix::from_columns(&cols))))
}

/// Attempts to certify that `A` and `B` are simultaneously diagonalizable
/// by congruence.
pub fn sdc_certificate(a: &SymMatrix, b: &SymMatrix, tol: Tolerance) -> Result<SdcResult> {
    check_same_dim(a, b)?;
    let n = a.dim();
    if is_diagonal(a, tol) && is_diagonal(b, tol) {
        return Ok(SdcResult::Sdc(SdcCertificate {
            c: DMatrix::identity(n, n),
            d_a: a.diagonal(),
            d_b: b.diagonal(),
            cond: 1.0,
            method: SdcMethod::AlreadyDiagonal,
        }));
    }
    let rp = ReducedPencil::new(a, b, tol)?;
    let m = rp.reduced_dim();

    if m <= 1 {
        let cr = DMatrix::identity(m, m);
        if let Some(cert) = finish_certificate(a, b, &rp, &cr, SdcMethod::Degenerate) {
            return Ok(SdcResult::Sdc(cert));
        }
    }

    // (S1) / (S2): an interval pencil yields a definite member on the
    // reduced space at any interior point.
    for (reversed, method) in [
        (false, SdcMethod::PencilInterval),
        (true, SdcMethod::ReversedInterval),
    ] {
        let iv = if reversed {
            reduced_interval(&rp.br, &rp.ar, tol)?
        } else {
            reduced_interval(&rp.ar, &rp.br, tol)?
        };
        if let Some(sigma) = interior_point(&iv) {
            let (alpha, beta) = if reversed { (sigma, 1.0) } else { (1.0, sigma) };
            if let Some(cr) = from_definite(&rp, alpha, beta)? {
                if let Some(cert) = finish_certificate(a, b, &rp, &cr, method) {
                    return Ok(SdcResult::Sdc(cert));
                }
            }
        }
    }

    // (S3): search for a definite combination cos θ·Ar + sin θ·Br.
    if m >= 1 {
        let f = |theta: f64| -> Result<f64> {
            Ok(sym_eig(&rp.ar.combine(theta.cos(), &rp.br, theta.sin()))?.min())
        };
        let h = 2.0 * std::f64::consts::PI / ANGULAR_GRID as f64;
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..ANGULAR_GRID {
            let theta = k as f64 * h;
            let v = f(theta)?;
            if v > best.1 {
                best = (theta, v);
            }
        }
        let (theta, value) = golden_max(best.0 - h, best.0 + h, f)?;
        let scale = rp.ar.norm_fro().max(rp.br.norm_fro()).max(1.0);
        if value > tol.rel * scale {
            if let Some(cr) = from_definite(&rp, theta.cos(), theta.sin())? {
                if let Some(cert) =
                    finish_certificate(a, b, &rp, &cr, SdcMethod::DefiniteCombination)
                {
                    return Ok(SdcResult::Sdc(cert));
                }
            }
        }
    }

    if m == 2 && two_by_two_is_sdc(&rp.ar, &rp.br, tol) == Some(false) {
        return Ok(SdcResult::NotSdc);
    }

    match generalized_eigen(&rp, tol)? {
        Err(()) => Ok(SdcResult::NotSdc),
        Ok(Some(cr)) => Ok(
            finish_certificate(a, b, &rp, &cr, SdcMethod::GeneralizedEigen)
                .map_or(SdcResult::Unknown, SdcResult::Sdc),
        ),
        Ok(None) => Ok(SdcResult::Unknown),
    }
}
