use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// `inf xᵀAx − 2fᵀx  s.t.  xᵀBx − 2gᵀx ≤ μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Qp1qcInstance {
    pub a: SymMatrix,
    pub b: SymMatrix,
    pub f: DVector<f64>,
    pub g: DVector<f64>,
    pub mu: f64,
}

impl Qp1qcInstance {
    pub fn new(
        a: SymMatrix,
        b: SymMatrix,
        f: DVector<f64>,
        g: DVector<f64>,
        mu: f64,
    ) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "instance dimension must be at least 1".into(),
            ));
        }
        for (name, len) in [("B", b.dim()), ("f", f.len()), ("g", g.len())] {
            if len != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has dimension {len}, expected {n}"
                )));
            }
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("f".into()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("g".into()));
        }
        if !mu.is_finite() {
            return Err(Error::NonFinite("mu".into()));
        }
        Ok(Qp1qcInstance { a, b, f, g, mu })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_slices(a: &[&[f64]], b: &[&[f64]], f: &[f64], g: &[f64], mu: f64) -> Result<Self> {
        let rows = |m: &[&[f64]]| m.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
        Self::new(
            SymMatrix::from_rows(&rows(a))?,
            SymMatrix::from_rows(&rows(b))?,
            DVector::from_column_slice(f),
            DVector::from_column_slice(g),
            mu,
        )
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `F(x)`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.a.quad_form(x) - 2.0 * self.f.dot(x)
    }

    /// `G(x)`.
    pub fn constraint(&self, x: &DVector<f64>) -> f64 {
        self.b.quad_form(x) - 2.0 * self.g.dot(x)
    }

    /// Floating-point magnitude bound for `G(x) − μ`: the same expression
    /// evaluated with absolute values everywhere.
    pub fn constraint_magnitude(&self, x: &DVector<f64>) -> f64 {
        magnitude(&self.b, &self.g, x) + self.mu.abs()
    }

    pub fn objective_magnitude(&self, x: &DVector<f64>) -> f64 {
        magnitude(&self.a, &self.f, x)
    }

    /// `L(x, σ) = F(x) + σ(G(x) − μ)`.
    pub fn lagrangian(&self, x: &DVector<f64>, sigma: f64) -> f64 {
        self.objective(x) + sigma * (self.constraint(x) - self.mu)
    }

    /// Data scale `max(1, ‖A‖_F, ‖B‖_F, ‖f‖, ‖g‖, |μ|)`.
    pub fn scale(&self) -> f64 {
        [
            1.0,
            self.a.norm_fro(),
            self.b.norm_fro(),
            self.f.norm(),
            self.g.norm(),
            self.mu.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// The instance after the change of variables `x = Q·y`.
    pub fn transformed(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.a.congruence(q),
            self.b.congruence(q),
            q.tr_mul(&self.f),
            q.tr_mul(&self.g),
            self.mu,
        )
    }
}

fn magnitude(m: &SymMatrix, c: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let ax = x.abs();
    ax.dot(&(m.abs() * &ax)) + 2.0 * c.abs().dot(&ax)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_objective_and_constraint() {
        let inst = Qp1qcInstance::from_slices(
            &[&[1.0, 0.0], &[0.0, -1.0]],
            &[&[0.0, 1.0], &[1.0, 0.0]],
            &[1.0, 0.0],
            &[0.0, 1.0],
            0.0,
        )
        .unwrap();
        let x = DVector::from_column_slice(&[2.0, 3.0]);
        assert_eq!(inst.objective(&x), 4.0 - 9.0 - 4.0);
        assert_eq!(inst.constraint(&x), 12.0 - 6.0);
        assert_eq!(inst.lagrangian(&x, 2.0), -9.0 + 12.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let r = Qp1qcInstance::from_slices(&[&[1.0]], &[&[1.0]], &[1.0, 2.0], &[0.0], 1.0);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let r = Qp1qcInstance::from_slices(&[&[1.0]], &[&[1.0]], &[1.0], &[0.0], f64::INFINITY);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
