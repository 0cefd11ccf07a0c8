//! Phase-space regions cut out by `|x|`, `|ξ|`, the direction cosine and
//! the mass shell.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::InverseMetricField;
use super::symbol::{beta, beta0, flat_symbol, norm, PhasePoint};

pub const DEFAULT_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// `|x| ≥ R, |ξ| ≥ r, β ≤ −1+ε`.
    Incoming,
    /// `|x| ≥ R, |ξ| ≥ r, β ≥ 1−ε`.
    Outgoing,
    /// `|x| ≥ R, |ξ| ≥ r, s₁ ≤ β ≤ s₂`.
    Mid,
    /// `|x| ≥ R, |ξ| ≥ r, β = s₁` (up to the margin).
    Shell,
    /// `|x| ≥ R, ξ ≠ 0, cos(x, ξ̃) < −1+ε, |p₀ + m₀²| < ε|ξ|²`.
    MassShellIncoming,
    /// As above with `cos(x, ξ̃) > 1−ε`.
    MassShellOutgoing,
    /// `|x| ≥ R, ξ ≠ 0, cos(x, ξ̃) < −1+ε`.
    FlatIncoming,
    /// `|x| ≥ R, ξ ≠ 0, cos(x, ξ̃) > 1−ε`.
    FlatOutgoing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub eps: f64,
    pub r: f64,
    pub big_r: f64,
    pub s1: f64,
    pub s2: f64,
    pub m0: f64,
    pub margin: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("invalid region parameters: {0}")]
    Invalid(String),
}

impl RegionSpec {
    fn base(kind: RegionKind) -> Self {
        Self { kind, eps: 0.1, r: 1.0, big_r: 1.0, s1: 0.0, s2: 0.0, m0: 0.0, margin: DEFAULT_MARGIN }
    }

    pub fn incoming(eps: f64, r: f64, big_r: f64) -> Self {
        Self { eps, r, big_r, ..Self::base(RegionKind::Incoming) }
    }

    pub fn outgoing(eps: f64, r: f64, big_r: f64) -> Self {
        Self { eps, r, big_r, ..Self::base(RegionKind::Outgoing) }
    }

    pub fn mid(s1: f64, s2: f64, r: f64, big_r: f64) -> Self {
        Self { s1, s2, r, big_r, ..Self::base(RegionKind::Mid) }
    }

    pub fn shell(s: f64, r: f64, big_r: f64) -> Self {
        Self { s1: s, s2: s, r, big_r, ..Self::base(RegionKind::Shell) }
    }

    pub fn mass_shell_incoming(eps: f64, big_r: f64, m0: f64) -> Self {
        Self { eps, big_r, m0, r: 0.0, ..Self::base(RegionKind::MassShellIncoming) }
    }

    pub fn mass_shell_outgoing(eps: f64, big_r: f64, m0: f64) -> Self {
        Self { eps, big_r, m0, r: 0.0, ..Self::base(RegionKind::MassShellOutgoing) }
    }

    pub fn flat_incoming(eps: f64, big_r: f64) -> Self {
        Self { eps, big_r, r: 0.0, ..Self::base(RegionKind::FlatIncoming) }
    }

    pub fn flat_outgoing(eps: f64, big_r: f64) -> Self {
        Self { eps, big_r, r: 0.0, ..Self::base(RegionKind::FlatOutgoing) }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// True for the kinds that use `cos(x, ξ̃)` and need no field.
    pub fn is_flat_kind(&self) -> bool {
        matches!(
            self.kind,
            RegionKind::MassShellIncoming | RegionKind::MassShellOutgoing | RegionKind::FlatIncoming | RegionKind::FlatOutgoing
        )
    }

    pub fn validate(&self) -> Result<(), RegionError> {
        let bad = |m: &str| Err(RegionError::Invalid(m.into()));
        let uses_eps = !matches!(self.kind, RegionKind::Mid | RegionKind::Shell);
        if uses_eps && !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("need 0 < ε < 1");
        }
        if !self.is_flat_kind() && !(self.r > 0.0) {
            return bad("need r > 0");
        }
        if !(self.big_r >= 1.0) {
            return bad("need R ≥ 1");
        }
        if self.s1 > self.s2 {
            return bad("need s₁ ≤ s₂");
        }
        if matches!(self.kind, RegionKind::MassShellIncoming | RegionKind::MassShellOutgoing) && !(self.m0 > 0.0) {
            return bad("need m₀ > 0");
        }
        if !(self.margin >= 0.0) {
            return bad("need margin ≥ 0");
        }
        Ok(())
    }

    /// Membership test. Closed inequalities are relaxed by the margin and
    /// strict ones must hold by at least the margin, so points sitting on a
    /// boundary up to rounding are classified the same way every time.
    /// Points where `β` is undefined are outside.
    pub fn contains(&self, field: &InverseMetricField, pt: &PhasePoint) -> bool {
        let m = self.margin;
        let nx = norm(pt.x);
        let nxi = norm(pt.xi);
        if nx < self.big_r - m || nx == 0.0 || nxi == 0.0 {
            return false;
        }
        match self.kind {
            RegionKind::Incoming | RegionKind::Outgoing | RegionKind::Mid | RegionKind::Shell => {
                if nxi - self.r < -m {
                    return false;
                }
                let Ok(b) = beta(field, pt) else { return false };
                match self.kind {
                    RegionKind::Incoming => b <= -1.0 + self.eps + m,
                    RegionKind::Outgoing => b >= 1.0 - self.eps - m,
                    RegionKind::Mid => b >= self.s1 - m && b <= self.s2 + m,
                    _ => (b - self.s1).abs() <= m,
                }
            }
            _ => {
                let Ok(c) = beta0(pt) else { return false };
                let dir = match self.kind {
                    RegionKind::MassShellIncoming | RegionKind::FlatIncoming => c < -1.0 + self.eps - m,
                    _ => c > 1.0 - self.eps + m,
                };
                if !dir {
                    return false;
                }
                match self.kind {
                    RegionKind::MassShellIncoming | RegionKind::MassShellOutgoing => {
                        (flat_symbol(pt.xi) + self.m0 * self.m0).abs() < self.eps * nxi * nxi - m
                    }
                    _ => true,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RegionSpec::incoming(0.1, 1.0, 10.0).validate().is_ok());
        assert!(RegionSpec::incoming(1.0, 1.0, 10.0).validate().is_err());
        assert!(RegionSpec::incoming(0.1, 0.0, 10.0).validate().is_err());
        assert!(RegionSpec::mid(0.5, 0.1, 1.0, 10.0).validate().is_err());
        assert!(RegionSpec::mass_shell_incoming(0.05, 1.0, 0.0).validate().is_err());
        assert!(RegionSpec::incoming(0.1, 1.0, 0.5).validate().is_err());
    }

    #[test]
    fn flat_incoming_and_outgoing() {
        let f = InverseMetricField::flat();
        let inc = RegionSpec::incoming(0.1, 1.0, 5.0);
        let out = RegionSpec::outgoing(0.1, 1.0, 5.0);
        let p_in = PhasePoint::new([10.0, -10.0], [1.0, 1.0]);
        let p_out = PhasePoint::new([-10.0, 10.0], [1.0, 1.0]);
        assert!(inc.contains(&f, &p_in) && !inc.contains(&f, &p_out));
        assert!(out.contains(&f, &p_out) && !out.contains(&f, &p_in));
        assert!(!inc.contains(&f, &PhasePoint::new([1.0, -1.0], [1.0, 1.0])));
    }

    #[test]
    fn negative_root_in_future_is_not_incoming() {
        // τ = −√(η²+m₀²) with t ≥ 0 would make τ + √(η²+m₀²) vanish; the
        // direction constraint keeps such points out of the region.
        let f = InverseMetricField::flat();
        let reg = RegionSpec::mass_shell_incoming(0.05, 1.0, 1.0);
        let eta: f64 = 2.0;
        let tau = -(eta * eta + 1.0).sqrt();
        for t in [0.0, 3.0, 20.0] {
            for y in [-20.0, -3.0, 0.5, 7.0, 30.0] {
                assert!(!reg.contains(&f, &PhasePoint::new([t, y], [tau, eta])), "({t},{y})");
            }
        }
        // Moving along x ∥ −ξ̃ into the past gives an incoming point.
        let lam = 10.0;
        assert!(reg.contains(&f, &PhasePoint::new([lam * tau, -lam * eta], [tau, eta])));
    }

    #[test]
    fn boundary_margin() {
        let f = InverseMetricField::flat();
        let reg = RegionSpec::mid(-0.5, 0.5, 1.0, 2.0);
        assert!(reg.contains(&f, &PhasePoint::new([2.0 - 1e-13, 0.0], [0.0, 1.0])));
        assert!(!reg.contains(&f, &PhasePoint::new([2.0 - 1e-11, 0.0], [0.0, 1.0])));
        let open = RegionSpec::flat_incoming(0.5, 1.0);
        // cos = −0.5 exactly sits on the open boundary.
        let pt = PhasePoint::new([3.0, 0.0], [0.5, 0.75f64.sqrt()]);
        assert!(!open.contains(&f, &pt));
    }
}
