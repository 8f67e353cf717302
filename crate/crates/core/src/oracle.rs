//! Independent checks for small instances: exhaustive grid search, sampled
//! divergence tests for unboundedness witnesses, and a seeded instance
//! generator biased toward each outcome class.
//!
//! Nothing here calls into the pencil analysis; the grid oracle only
//! evaluates `F` and `G` and solves one-dimensional quadratics.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::instance::Qp1qcInstance;
use crate::linalg::SymMatrix;
use crate::solution::{Path, Solution, Status};

pub const MAX_GRID_DIM: usize = 3;
/// Incumbents kept for local refinement.
const TOP_K: usize = 8;
/// Points per axis in each refinement grid.
const REFINE_STEPS: usize = 21;
/// Line searches per incumbent used by the cross-check.
const POLISH_ITERS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Half-width of the box `‖x‖∞ ≤ radius`.
    pub radius: f64,
    /// Points per axis of the grid over all coordinates but the last; odd,
    /// so the origin is on the grid.
    pub steps: usize,
    pub refine_rounds: usize,
    /// Exact line searches from each incumbent after the grid rounds.
    pub polish_iters: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radius: 10.0,
            steps: 201,
            refine_rounds: 2,
            polish_iters: 0,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite())
            || self.steps < 3
            || self.steps.is_multiple_of(2)
        {
            return Err(Error::PreconditionViolated(format!(
                "invalid grid {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Smallest feasible objective value found; `+∞` when nothing feasible
    /// was found.
    pub best_value: f64,
    pub best_point: DVector<f64>,
    /// Grid lines and refinement points that carried a feasible point.
    pub feasible_count: usize,
    /// The incumbent fell below `−10⁶`.
    pub diverged: bool,
}

/// Dense quadratic evaluator over at most three coordinates.
struct Quad {
    n: usize,
    m: [[f64; 3]; 3],
    c: [f64; 3],
}

impl Quad {
    fn new(m: &DMatrix<f64>, c: &DVector<f64>) -> Self {
        let n = c.len();
        let mut q = Quad {
            n,
            m: [[0.0; 3]; 3],
            c: [0.0; 3],
        };
        for i in 0..n {
            q.c[i] = c[i];
            for j in 0..n {
                q.m[i][j] = m[(i, j)];
            }
        }
        q
    }

    fn eval(&self, x: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let row: f64 = (0..self.n).map(|j| self.m[i][j] * x[j]).sum();
            s += x[i] * (row - 2.0 * self.c[i]);
        }
        s
    }
}

impl Quad {
    /// Coefficients of `t ↦ q(x + t·d) = q(x) + 2βt + αt²` as `(α, β)`.
    fn along(&self, x: &[f64; 3], d: &[f64; 3]) -> (f64, f64) {
        let (mut alpha, mut beta) = (0.0, 0.0);
        for i in 0..self.n {
            let mut mx = 0.0;
            let mut md = 0.0;
            for j in 0..self.n {
                mx += self.m[i][j] * x[j];
                md += self.m[i][j] * d[j];
            }
            alpha += d[i] * md;
            beta += d[i] * (mx - self.c[i]);
        }
        (alpha, beta)
    }
}

/// Roots of `αt² + 2βt + γ`, ascending; empty when there are none.
fn quad_roots(alpha: f64, beta: f64, gamma: f64) -> Vec<f64> {
    if alpha == 0.0 {
        return if beta == 0.0 {
            vec![]
        } else {
            vec![-gamma / (2.0 * beta)]
        };
    }
    let disc = beta * beta - alpha * gamma;
    if disc < 0.0 {
        return vec![];
    }
    let sign = if beta >= 0.0 { 1.0 } else { -1.0 };
    let q = -(beta + sign * disc.sqrt());
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / alpha, gamma / q)
    };
    vec![r1.min(r2), r1.max(r2)]
}

/// Minimizes `F` along random lines through feasible points. Each step
/// takes the exact minimizer of the one-dimensional restriction over the
/// feasible piece of the line that contains the current point, clipped to
/// the box.
fn line_polish(
    s: &Search,
    start: [f64; 3],
    radius: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, [f64; 3]) {
    let n = s.obj.n;
    let mut x = start;
    let mut fx = s.obj.eval(&x);
    for it in 0..iters {
        let mut d = [0.0; 3];
        if it % 2 == 0 {
            d[(it / 2) % n] = 1.0;
        } else {
            for v in d.iter_mut().take(n) {
                *v = rng.sample(StandardNormal);
            }
        }
        // Box: |xᵢ + t·dᵢ| ≤ radius.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            if d[i] != 0.0 {
                let (a, b) = ((-radius - x[i]) / d[i], (radius - x[i]) / d[i]);
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        }
        let (ga, gb) = s.con.along(&x, &d);
        let gc = s.con.eval(&x) - s.mu - s.feas_tol;
        let g_at = |t: f64| (ga * t + 2.0 * gb) * t + gc;
        // Feasible piece containing t = 0, using the roots that flank it.
        for r in quad_roots(ga, gb, gc) {
            if r < 0.0 && g_at(r - 1.0f64.max(r.abs()) * 1e-3) > 0.0 {
                lo = lo.max(r);
            } else if r > 0.0 && g_at(r + 1.0f64.max(r.abs()) * 1e-3) > 0.0 {
                hi = hi.min(r);
            }
        }
        if !(lo <= 0.0 && 0.0 <= hi) {
            continue;
        }
        let (fa, fb) = s.obj.along(&x, &d);
        let mut cands = vec![lo, hi];
        if fa > 0.0 {
            cands.push((-fb / fa).clamp(lo, hi));
        }
        for t in cands {
            if !t.is_finite() || t == 0.0 {
                continue;
            }
            let mut y = x;
            for i in 0..n {
                y[i] += t * d[i];
            }
            if s.con.eval(&y) > s.mu + s.feas_tol {
                continue;
            }
            let fy = s.obj.eval(&y);
            if fy < fx {
                x = y;
                fx = fy;
            }
        }
    }
    (fx, x)
}

struct Search {
    obj: Quad,
    con: Quad,
    mu: f64,
    feas_tol: f64,
    radius: f64,
    top: Vec<(f64, [f64; 3])>,
    count: usize,
}

impl Search {
    fn offer(&mut self, x: [f64; 3]) {
        if self.con.eval(&x) > self.mu + self.feas_tol {
            return;
        }
        self.count += 1;
        let v = self.obj.eval(&x);
        if self.top.len() == TOP_K && v >= self.top[TOP_K - 1].0 {
            return;
        }
        if self.top.iter().any(|(_, p)| *p == x) {
            return;
        }
        let pos = self.top.partition_point(|(w, _)| *w <= v);
        self.top.insert(pos, (v, x));
        self.top.truncate(TOP_K);
    }

    /// Offers the best feasible point on the segment through `x` along the
    /// last axis, found exactly: on each feasible piece of the segment the
    /// minimum is at an endpoint or at the vertex of `F`.
    fn offer_line(&mut self, x: [f64; 3]) {
        let n = self.obj.n;
        let last = n - 1;
        let mut d = [0.0; 3];
        d[last] = 1.0;
        let mut p = x;
        p[last] = 0.0;
        let r = self.radius;
        let (ga, gb) = self.con.along(&p, &d);
        let gc = self.con.eval(&p) - self.mu;
        let (fa, fb) = self.obj.along(&p, &d);
        let mut cands = vec![-r, r];
        for t in quad_roots(ga, gb, gc) {
            let nudge = 1e-12 * t.abs().max(1.0);
            cands.extend([t - nudge, t, t + nudge]);
        }
        if fa > 0.0 {
            cands.push(-fb / fa);
        }
        let mut best: Option<(f64, [f64; 3])> = None;
        for t in cands {
            if t.is_nan() || t.abs() > r {
                continue;
            }
            let mut y = p;
            y[last] = t;
            if self.con.eval(&y) > self.mu + self.feas_tol {
                continue;
            }
            let v = self.obj.eval(&y);
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, y));
            }
        }
        if let Some((_, y)) = best {
            self.offer(y);
        }
    }

    /// Sweeps a grid over all coordinates but the last, centred at `center`.
    fn sweep(&mut self, center: [f64; 3], half: f64, steps: usize) {
        let m = self.obj.n - 1;
        let h = 2.0 * half / (steps - 1) as f64;
        let mut idx = [0usize; 3];
        loop {
            let mut x = [0.0; 3];
            for k in 0..m {
                x[k] = (center[k] - half + h * idx[k] as f64).clamp(-self.radius, self.radius);
            }
            self.offer_line(x);
            let mut k = 0;
            loop {
                if k >= m {
                    return;
                }
                idx[k] += 1;
                if idx[k] < steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

fn run_grid(obj: Quad, con: Quad, mu: f64, feas_tol: f64, spec: &GridSpec) -> OracleReport {
    let n = obj.n;
    let mut s = Search {
        obj,
        con,
        mu,
        feas_tol,
        radius: spec.radius,
        top: Vec::with_capacity(TOP_K + 1),
        count: 0,
    };
    s.sweep([0.0; 3], spec.radius, spec.steps);
    let mut h = 2.0 * spec.radius / (spec.steps - 1) as f64;
    for _ in 0..spec.refine_rounds {
        let centers: Vec<[f64; 3]> = s.top.iter().map(|(_, p)| *p).collect();
        for c in centers {
            s.sweep(c, h, REFINE_STEPS);
        }
        h /= 10.0;
    }
    if spec.polish_iters > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let starts: Vec<[f64; 3]> = s.top.iter().map(|(_, p)| *p).collect();
        for p in starts {
            let best = line_polish(&s, p, spec.radius, spec.polish_iters, &mut rng);
            s.top.push(best);
        }
        s.top.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let (best_value, best_point) = match s.top.first() {
        Some((v, p)) => (*v, DVector::from_column_slice(&p[..n])),
        None => (f64::INFINITY, DVector::zeros(n)),
    };
    OracleReport {
        best_value,
        best_point,
        feasible_count: s.count,
        diverged: best_value < -1e6,
    }
}

/// Smallest objective value found over the box: a grid over all
/// coordinates but the last, each grid point carrying an exact minimization
/// along the last axis, then local refinement around the best incumbents.
/// Requires `n ≤ 3`.
pub fn grid_infimum(inst: &Qp1qcInstance, spec: &GridSpec) -> Result<OracleReport> {
    let n = inst.dim();
    if n > MAX_GRID_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    spec.validate()?;
    Ok(run_grid(
        Quad::new(inst.a.as_matrix(), &inst.f),
        Quad::new(inst.b.as_matrix(), &inst.g),
        inst.mu,
        1e-9 * inst.scale(),
        spec,
    ))
}

/// Outcome of the oracle restricted to `{x : G(x) = min G}`.
#[derive(Debug, Clone, PartialEq)]
pub enum AffineOracle {
    /// `min G > μ`.
    Infeasible,
    /// Grid search over `x = x₀ + N·y`; `best_point` is in `y` coordinates.
    Grid {
        report: OracleReport,
        base: DVector<f64>,
        basis: DMatrix<f64>,
    },
}

/// Oracle for instances without strictly feasible points, where `B ⪰ 0`,
/// `g ∈ R(B)` and the feasible set is `B⁺g + N(B)` or empty. The
/// pseudoinverse and null space come from an SVD.
pub fn affine_oracle(inst: &Qp1qcInstance, spec: &GridSpec) -> Result<AffineOracle> {
    spec.validate()?;
    let n = inst.dim();
    let svd = inst.b.as_matrix().clone().svd(true, true);
    let smax = svd.singular_values.max();
    let thr = 1e-9 * smax.max(1.0);
    let base = svd
        .solve(&inst.g, thr)
        .map_err(|e| Error::InternalInconsistency(e.to_string()))?;
    let gmin = -inst.g.dot(&base);
    if gmin > inst.mu + 1e-9 * inst.mu.abs().max(1.0) {
        return Ok(AffineOracle::Infeasible);
    }
    let v_t = svd.v_t.as_ref().expect("requested V");
    let null: Vec<DVector<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= thr)
        .map(|i| v_t.row(i).transpose())
        .collect();
    let k = null.len();
    if k > MAX_GRID_DIM {
        return Err(Error::DimensionTooLarge(k));
    }
    let basis = if k == 0 {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&null)
    };
    // F(x₀ + Ny) = yᵀ(NᵀAN)y − 2(Nᵀ(f − Ax₀))ᵀy + F(x₀).
    let f0 = inst.objective(&base);
    let report = if k == 0 {
        OracleReport {
            best_value: f0,
            best_point: DVector::zeros(0),
            feasible_count: 1,
            diverged: false,
        }
    } else {
        let m = basis.transpose() * inst.a.as_matrix() * &basis;
        let c = basis.tr_mul(&(&inst.f - inst.a.as_matrix() * &base));
        let zero_m = DMatrix::zeros(k, k);
        let zero_c = DVector::zeros(k);
        let mut r = run_grid(
            Quad::new(&m, &c),
            Quad::new(&zero_m, &zero_c),
            0.0,
            0.0,
            spec,
        );
        r.best_value += f0;
        r.diverged = r.best_value < -1e6;
        r
    };
    Ok(AffineOracle::Grid {
        report,
        base,
        basis,
    })
}

/// True iff along `base + t·dir`, `t = 1, 10, …, 10^samples`, the objective
/// strictly decreases to below `−10⁶` while the constraint holds.
pub fn ray_diverges(
    inst: &Qp1qcInstance,
    base: &DVector<f64>,
    dir: &DVector<f64>,
    samples: u32,
) -> bool {
    if dir.norm() <= 1e-12 {
        return false;
    }
    path_diverges(inst, &Path::ray(base.clone(), dir.clone()), samples)
}

/// As [`ray_diverges`] for a parabolic path.
pub fn path_diverges(inst: &Qp1qcInstance, path: &Path, samples: u32) -> bool {
    if path.direction.norm() <= 1e-12 && path.curvature.norm() <= 1e-12 {
        return false;
    }
    let mut prev = f64::INFINITY;
    for k in 0..=samples {
        let x = path.point(10f64.powi(k as i32));
        let slack = 1e-9 * (inst.constraint_magnitude(&x) + 1.0);
        let g = inst.constraint(&x);
        if g.is_nan() || g > inst.mu + slack {
            return false;
        }
        let fx = inst.objective(&x);
        if fx.is_nan() || fx >= prev {
            return false;
        }
        prev = fx;
    }
    prev < -1e6
}

/// Outcome the generator aims for. The solver decides the actual class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetClass {
    Any,
    NoSlater,
    Infeasible,
    Unbounded,
    Unattained,
    AttainedInterval,
    AttainedSingleton,
}

impl TargetClass {
    pub const ALL: [TargetClass; 7] = [
        TargetClass::Any,
        TargetClass::NoSlater,
        TargetClass::Infeasible,
        TargetClass::Unbounded,
        TargetClass::Unattained,
        TargetClass::AttainedInterval,
        TargetClass::AttainedSingleton,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetClass::Any => "any",
            TargetClass::NoSlater => "no_slater",
            TargetClass::Infeasible => "infeasible",
            TargetClass::Unbounded => "unbounded",
            TargetClass::Unattained => "unattained",
            TargetClass::AttainedInterval => "attained_interval",
            TargetClass::AttainedSingleton => "attained_singleton",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: Qp1qcInstance,
    /// The class the construction aimed for (never `Any`).
    pub target: TargetClass,
}

/// Class actually achieved, per the solver's classification.
pub fn achieved_class(sol: &Solution) -> &'static str {
    sol.status.kind()
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal())
    }

    fn matrix(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.normal())
    }

    fn symmetric(&mut self, n: usize) -> DMatrix<f64> {
        let m = self.matrix(n, n);
        (&m + m.transpose()) * 0.5
    }

    /// Positive definite with eigenvalues in `[lo, hi]`.
    fn pd(&mut self, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
        let q = self.orthogonal(n);
        let d = DVector::from_fn(n, |_, _| self.uniform(lo, hi));
        &q * DMatrix::from_diagonal(&d) * q.transpose()
    }

    fn orthogonal(&mut self, n: usize) -> DMatrix<f64> {
        let m = self.matrix(n, n);
        let qr = m.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                let mut col = q.column_mut(j);
                col *= -1.0;
            }
        }
        q
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, k) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(m + k, m + k);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((m, m), (k, k)).copy_from(b);
    out
}

fn build(
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    f: DVector<f64>,
    g: DVector<f64>,
    mu: f64,
) -> Qp1qcInstance {
    Qp1qcInstance::new(SymMatrix::symmetrize(a), SymMatrix::symmetrize(b), f, g, mu)
        .expect("generator produces consistent dimensions")
}

/// Deterministic pseudo-random instance biased toward `target`.
pub fn gen_instance(seed: u64, n: usize, target: TargetClass) -> GeneratedInstance {
    assert!(n >= 1, "dimension must be positive");
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let target = if target == TargetClass::Any {
        let pick = g.rng.random_range(1..TargetClass::ALL.len());
        TargetClass::ALL[pick]
    } else {
        target
    };
    let raw = match target {
        TargetClass::NoSlater => {
            let variant = g.rng.random_range(0..3u32);
            gen_no_slater(&mut g, n, variant)
        }
        TargetClass::Infeasible => gen_no_slater(&mut g, n, 0),
        TargetClass::Unbounded => gen_unbounded(&mut g, n),
        TargetClass::AttainedInterval => gen_interval(&mut g, n),
        TargetClass::Unattained => gen_singleton(&mut g, n, false),
        TargetClass::AttainedSingleton => gen_singleton(&mut g, n, true),
        TargetClass::Any => unreachable!(),
    };
    let q = g.orthogonal(n);
    let instance = raw.transformed(&q).expect("orthogonal change of variables");
    GeneratedInstance { instance, target }
}

/// `B = LLᵀ`, `g = Bw`, `μ = −gᵀB⁺g`. Variant 0 lowers μ (infeasible),
/// 1 uses a positive definite objective, 2 a random one.
fn gen_no_slater(g: &mut Gen, n: usize, variant: u32) -> Qp1qcInstance {
    let r = g.rng.random_range(1..=n);
    let l = g.matrix(n, r);
    let b = &l * l.transpose();
    let w = g.vector(n);
    let gv = &b * &w;
    let mut mu = -w.dot(&gv);
    let a = match variant {
        0 => {
            mu -= g.uniform(0.5, 2.0);
            g.symmetric(n)
        }
        1 => g.pd(n, 0.5, 3.0),
        _ => g.symmetric(n),
    };
    let f = g.vector(n);
    build(a, b, f, gv, mu)
}

fn gen_unbounded(g: &mut Gen, n: usize) -> Qp1qcInstance {
    let variant = g.rng.random_range(0..3u32);
    let mu = g.uniform(0.5, 3.0);
    match variant {
        // Indefinite objective, concave constraint.
        0 => {
            let mut a = g.pd(n, 0.5, 2.0);
            let v = g.vector(n).normalize();
            a -= &v * v.transpose() * g.uniform(3.0, 5.0);
            let b = -g.pd(n, 0.5, 2.0);
            let (f, gv) = (g.vector(n), g.vector(n));
            build(a, b, f, gv, mu)
        }
        // A hyperbola pattern with no PSD member for σ ≥ 0.
        1 if n >= 2 => {
            let a0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]) * g.uniform(0.5, 2.0);
            let b0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]) * g.uniform(0.5, 2.0);
            let a = block_diag(&a0, &g.pd(n - 2, 0.5, 2.0));
            let b = block_diag(&b0, &g.symmetric(n - 2));
            let (f, gv) = (g.vector(n), g.vector(n));
            build(a, b, f, gv, mu)
        }
        // Linear descent in the joint null space of A and B.
        _ => {
            let k = n.saturating_sub(1);
            let a = block_diag(&g.pd(k, 0.5, 2.0), &DMatrix::zeros(1, 1));
            let b = block_diag(&g.pd(k, 0.5, 2.0), &DMatrix::zeros(1, 1));
            let mut f = g.vector(n);
            f[n - 1] = g.uniform(0.5, 2.0);
            let mut gv = g.vector(n);
            gv[n - 1] = 0.0;
            build(a, b, f, gv, mu)
        }
    }
}

/// `A = P − σ₀B` with `P ≻ 0`, so `σ₀` is interior to the pencil interval.
/// Some instances get a joint null direction carrying parts of `f`, `g`.
fn gen_interval(g: &mut Gen, n: usize) -> Qp1qcInstance {
    let with_null = n >= 2 && g.rng.random_range(0..3u32) == 0;
    let k = if with_null { n - 1 } else { n };
    let variant = g.rng.random_range(0..3u32);
    let sigma0 = if with_null && variant == 1 {
        0.0
    } else {
        g.uniform(0.0, 2.0)
    };
    let p = g.pd(k, 0.5, 3.0);
    let b_r = g.symmetric(k);
    let a_r = &p - &b_r * sigma0;
    let mu = g.uniform(0.5, 3.0);
    let mut f = g.vector(n);
    let mut gv = g.vector(n);
    if !with_null {
        return build(a_r, b_r, f, gv, mu);
    }
    let z = DMatrix::zeros(1, 1);
    let a = block_diag(&a_r, &z);
    let b = block_diag(&b_r, &z);
    match variant {
        0 => {
            f[n - 1] = 0.0;
            gv[n - 1] = 0.0;
        }
        1 => {
            f[n - 1] = 0.0;
            gv[n - 1] = g.uniform(0.5, 2.0);
        }
        _ => {
            let t = sigma0.max(0.1);
            gv[n - 1] = g.uniform(0.5, 2.0);
            f[n - 1] = -t * gv[n - 1];
            // Keep σ = t inside the interval: rebuild with σ₀ = t.
            let a_r = &p - &b_r * t;
            return build(block_diag(&a_r, &z), b, f, gv, mu);
        }
    }
    build(a, b, f, gv, mu)
}

/// Singleton pencils from the two-dimensional patterns
/// `A₀ = diag(0, a)`, `B₀ = ±b·[[0,1],[1,0]]`, optionally shifted so that
/// `σ* > 0` and padded with a positive definite block.
fn gen_singleton(g: &mut Gen, n: usize, attained: bool) -> Qp1qcInstance {
    if n == 1 {
        // A = 0, B = 1: the only singleton-type pencil in one dimension is
        // degenerate; fall back to a bounded interval instance.
        return gen_interval(g, 1);
    }
    let a2 = g.uniform(0.5, 2.0);
    let bb = g.uniform(0.5, 2.0) * if g.rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let shifted = g.rng.random_bool(0.5);
    let s = if shifted { g.uniform(0.3, 2.0) } else { 0.0 };
    let a0 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, a2]);
    let b0 = DMatrix::from_row_slice(2, 2, &[0.0, bb, bb, 0.0]);
    let da = g.pd(n - 2, 0.5, 2.0);
    let db = g.symmetric(n - 2) * 0.3;
    let a = block_diag(&(&a0 - &b0 * s), &(&da - &db * s));
    let b = block_diag(&b0, &db);
    // W = A + sB = diag(0, a2) ⊕ D_A; f + s·g must avoid e₁.
    let c = g.normal();
    let extra = g.vector(n - 2);
    let mut r = DVector::zeros(n);
    r[1] = c;
    r.rows_mut(2, n - 2).copy_from(&extra);
    let mut base = DVector::zeros(n);
    base[1] = c / a2;
    if n > 2 {
        let sol = da
            .clone()
            .cholesky()
            .expect("positive definite block")
            .solve(&extra);
        base.rows_mut(2, n - 2).copy_from(&sol);
    }
    let mut gv = g.vector(n);
    // ℓ = (B·base)₁ − g₁ = 0 makes the restricted constraint constant.
    let zero_slope = !attained || g.rng.random_bool(0.5);
    if zero_slope {
        gv[0] = (&b * &base)[0];
    }
    let f = &r - &gv * s;
    let gbase = base.dot(&(&b * &base)) - 2.0 * gv.dot(&base);
    let offset = g.uniform(0.5, 2.0);
    let mu = if !zero_slope {
        gbase + g.normal()
    } else if attained {
        if s > 0.0 {
            gbase
        } else {
            gbase + offset
        }
    } else if s > 0.0 && g.rng.random_bool(0.5) {
        gbase + offset
    } else {
        gbase - offset
    };
    build(a, b, f, gv, mu)
}

/// Verdict of [`cross_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(detail: impl Into<String>) -> Self {
        CheckOutcome {
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        CheckOutcome {
            passed: false,
            detail: detail.into(),
        }
    }
}

/// Tolerances used by [`cross_check`].
#[derive(Debug, Clone, Copy)]
pub struct CheckTolerances {
    /// Attained values versus the oracle incumbent, relative to `max(1, |v|)`.
    pub value: f64,
    /// Unattained infimum versus feasible values found, absolute.
    pub infimum: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances {
            value: 1e-5,
            infimum: 1e-3,
        }
    }
}

fn grid_for(n: usize, radius: f64, rounds: usize) -> GridSpec {
    GridSpec {
        radius,
        steps: if n <= 2 { 2001 } else { 401 },
        refine_rounds: rounds,
        polish_iters: POLISH_ITERS,
    }
}

/// Compares a solver result with the oracles: grid search for feasible
/// values, divergence of the unboundedness witness, and the affine-set
/// search for instances without a strictly feasible point.
pub fn cross_check(
    inst: &Qp1qcInstance,
    sol: &Solution,
    slater: bool,
    rounds: usize,
) -> Result<CheckOutcome> {
    let tols = CheckTolerances::default();
    let n = inst.dim();
    if n > MAX_GRID_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if !slater {
        return check_affine(inst, sol, rounds, tols);
    }
    match &sol.status {
        Status::Infeasible => Ok(CheckOutcome::fail(
            "infeasible reported for an instance with a Slater point",
        )),
        Status::UnboundedBelow { witness } => Ok(match witness {
            Some(p) if path_diverges(inst, p, 8) => CheckOutcome::pass("witness diverges"),
            Some(_) => CheckOutcome::fail("witness does not diverge"),
            None => CheckOutcome::fail("no witness path"),
        }),
        Status::Attained { x_star, value, .. } => {
            let slack = 1e-9 * (inst.constraint_magnitude(x_star) + 1.0);
            if inst.constraint(x_star) > inst.mu + slack.max(1e-9 * inst.scale()) {
                return Ok(CheckOutcome::fail("x* infeasible"));
            }
            let radius = 10f64.max(1.5 * x_star.amax());
            let rep = grid_infimum(inst, &grid_for(n, radius, rounds))?;
            let allow = tols.value * value.abs().max(1.0);
            if rep.best_value < value - allow {
                return Ok(CheckOutcome::fail(format!(
                    "oracle found {} below reported {}",
                    rep.best_value, value
                )));
            }
            if rep.best_value > value + allow {
                return Ok(CheckOutcome::fail(format!(
                    "oracle incumbent {} does not reach reported {}",
                    rep.best_value, value
                )));
            }
            Ok(CheckOutcome::pass(format!(
                "value {value} matches oracle {}",
                rep.best_value
            )))
        }
        Status::Unattained { infimum, .. } => {
            let mut best = f64::INFINITY;
            for radius in [10.0, 100.0, 1000.0] {
                let rep = grid_infimum(inst, &grid_for(n, radius, rounds.max(4)))?;
                if rep.best_value < infimum - tols.value * infimum.abs().max(1.0) {
                    return Ok(CheckOutcome::fail(format!(
                        "oracle found {} below infimum {}",
                        rep.best_value, infimum
                    )));
                }
                best = best.min(rep.best_value);
                if best <= infimum + tols.infimum {
                    return Ok(CheckOutcome::pass(format!(
                        "oracle approaches infimum: {best}"
                    )));
                }
            }
            Ok(CheckOutcome::fail(format!(
                "oracle best {best} stays away from infimum {infimum}"
            )))
        }
    }
}

fn check_affine(
    inst: &Qp1qcInstance,
    sol: &Solution,
    rounds: usize,
    tols: CheckTolerances,
) -> Result<CheckOutcome> {
    let spec = grid_for(inst.dim(), 10.0, rounds);
    let oracle = affine_oracle(inst, &spec)?;
    Ok(match (&sol.status, oracle) {
        (Status::Infeasible, AffineOracle::Infeasible) => CheckOutcome::pass("infeasible"),
        (Status::UnboundedBelow { witness: Some(p) }, AffineOracle::Grid { .. }) => {
            if path_diverges(inst, p, 8) {
                CheckOutcome::pass("witness diverges on the affine set")
            } else {
                CheckOutcome::fail("witness does not diverge")
            }
        }
        (
            Status::Attained { value, x_star, .. },
            AffineOracle::Grid {
                report,
                base,
                basis,
            },
        ) => {
            let radius = 10f64.max(1.5 * basis.tr_mul(&(x_star - &base)).amax());
            let report = if radius > 10.0 {
                match affine_oracle(inst, &grid_for(inst.dim(), radius, rounds))? {
                    AffineOracle::Grid { report, .. } => report,
                    AffineOracle::Infeasible => report,
                }
            } else {
                report
            };
            let allow = tols.value * value.abs().max(1.0);
            if (report.best_value - value).abs() <= allow {
                CheckOutcome::pass("affine oracle matches")
            } else {
                CheckOutcome::fail(format!(
                    "affine oracle {} versus reported {}",
                    report.best_value, value
                ))
            }
        }
        (status, oracle) => CheckOutcome::fail(format!(
            "solver says {}, affine oracle says {}",
            status.kind(),
            match oracle {
                AffineOracle::Infeasible => "infeasible",
                AffineOracle::Grid { .. } => "feasible",
            }
        )),
    })
}
