use std::fmt;

use nalgebra::DVector;

/// Which branch of the case analysis produced a [`Solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// No strictly feasible point; solved on `{x : Bx = g}` or infeasible.
    NoSlater,
    /// No σ ≥ 0 in the PSD interval (empty interval or `σ_u < 0`).
    A,
    /// Range test at a single σ (singleton interval or `σ_u = 0`).
    B,
    /// Interval with `σ_l < 0 < σ_u`.
    C1,
    /// Interval with `0 ≤ σ_l < σ_u`.
    C2,
    /// Interval pencil, `Vᵀf = Vᵀg = 0`: reduced problem with a definite pencil.
    D,
    /// Interval pencil, `Vᵀf = 0 ≠ Vᵀg`: unconstrained convex problem.
    E,
    /// Interval pencil, `Vᵀf ≠ 0`: constraint active, lower bound attained.
    F,
    G1,
    G2,
    H1,
    H2,
    H3,
    H4,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::NoSlater => "no_slater",
            CaseLabel::A => "a",
            CaseLabel::B => "b",
            CaseLabel::C1 => "c1",
            CaseLabel::C2 => "c2",
            CaseLabel::D => "d",
            CaseLabel::E => "e",
            CaseLabel::F => "f",
            CaseLabel::G1 => "g1",
            CaseLabel::G2 => "g2",
            CaseLabel::H1 => "h1",
            CaseLabel::H2 => "h2",
            CaseLabel::H3 => "h3",
            CaseLabel::H4 => "h4",
        }
    }

    pub fn parse(s: &str) -> Option<CaseLabel> {
        CaseLabel::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub const ALL: [CaseLabel; 14] = [
        CaseLabel::NoSlater,
        CaseLabel::A,
        CaseLabel::B,
        CaseLabel::C1,
        CaseLabel::C2,
        CaseLabel::D,
        CaseLabel::E,
        CaseLabel::F,
        CaseLabel::G1,
        CaseLabel::G2,
        CaseLabel::H1,
        CaseLabel::H2,
        CaseLabel::H3,
        CaseLabel::H4,
    ];
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A feasible descent path `x(t) = base + t·direction + t²·curvature`,
/// `t ≥ 0`. A straight ray has zero curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub base: DVector<f64>,
    pub direction: DVector<f64>,
    pub curvature: DVector<f64>,
}

impl Path {
    pub fn ray(base: DVector<f64>, direction: DVector<f64>) -> Self {
        let n = base.len();
        Path {
            base,
            direction,
            curvature: DVector::zeros(n),
        }
    }

    pub fn is_ray(&self) -> bool {
        self.curvature.iter().all(|v| *v == 0.0)
    }

    pub fn point(&self, t: f64) -> DVector<f64> {
        &self.base + &self.direction * t + &self.curvature * (t * t)
    }
}

/// Residuals of the global optimality conditions for a pair `(x, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    pub x: DVector<f64>,
    pub sigma: f64,
    /// `G(x) − μ`; must be ≤ tolerance.
    pub feas_resid: f64,
    /// `‖(A + σB)x − (f + σg)‖`.
    pub stat_resid: f64,
    /// `|σ·(G(x) − μ)|`.
    pub comp_resid: f64,
    /// `λ_min(A + σB)`.
    pub pencil_min_eig: f64,
    /// Magnitude the residuals are measured against.
    pub scale: f64,
    /// Relative tolerance applied to `scale`.
    pub tol: f64,
}

impl KktCertificate {
    pub fn passes(&self) -> bool {
        let bound = self.tol * self.scale;
        self.sigma >= 0.0
            && self.feas_resid <= bound
            && self.stat_resid <= bound
            && self.comp_resid <= bound
            && self.pencil_min_eig >= -bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Infeasible,
    /// The objective is unbounded below on the feasible set. The witness is
    /// `None` only when no descent path could be constructed and verified.
    UnboundedBelow {
        witness: Option<Path>,
    },
    Unattained {
        infimum: f64,
        sigma_star: f64,
    },
    Attained {
        x_star: DVector<f64>,
        value: f64,
        /// Absent when no strictly feasible point exists: the optimality
        /// conditions then need not hold at a minimizer.
        certificate: Option<KktCertificate>,
    },
}

impl Status {
    pub fn kind(&self) -> &'static str {
        match self {
            Status::Infeasible => "infeasible",
            Status::UnboundedBelow { .. } => "unbounded",
            Status::Unattained { .. } => "unattained",
            Status::Attained { .. } => "attained",
        }
    }

    /// Optimal value or infimum for bounded feasible instances.
    pub fn value(&self) -> Option<f64> {
        match self {
            Status::Attained { value, .. } => Some(*value),
            Status::Unattained { infimum, .. } => Some(*infimum),
            _ => None,
        }
    }

    pub fn sigma_star(&self) -> Option<f64> {
        match self {
            Status::Attained { certificate, .. } => certificate.as_ref().map(|c| c.sigma),
            Status::Unattained { sigma_star, .. } => Some(*sigma_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub case: CaseLabel,
}

impl Solution {
    pub fn new(status: Status, case: CaseLabel) -> Self {
        Solution { status, case }
    }

    pub fn is_attained(&self) -> bool {
        matches!(self.status, Status::Attained { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for c in CaseLabel::ALL {
            assert_eq!(CaseLabel::parse(c.as_str()), Some(c));
        }
        assert_eq!(CaseLabel::parse("z"), None);
    }

    #[test]
    fn path_evaluation() {
        let p = Path {
            base: DVector::from_column_slice(&[1.0, 0.0]),
            direction: DVector::from_column_slice(&[0.0, 1.0]),
            curvature: DVector::from_column_slice(&[0.5, 0.0]),
        };
        assert_eq!(p.point(2.0).as_slice(), &[3.0, 2.0]);
        assert!(!p.is_ray());
        assert!(Path::ray(p.base.clone(), p.direction.clone()).is_ray());
    }
}
