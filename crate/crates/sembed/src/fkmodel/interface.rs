use std::f64::consts::TAU;

use super::{FkConfig, FkDomain, FkError};
use crate::C64;

/// Interface from `a` to `b` as a corner sequence with the turning angle of
/// each step; `turns[k]` is the turn from `corners[k]` to `corners[k + 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterfaceCurve {
    pub corners: Vec<usize>,
    pub turns: Vec<f64>,
}

/// Counterclockwise angle from `r1` to `r2` in (0, 2π].
fn ccw(r1: C64, r2: C64) -> f64 {
    let a = (r2 / r1).arg();
    if a > 0.0 {
        a
    } else {
        a + TAU
    }
}

/// Turn of the interpolated curve between adjacent corners: around a primal
/// pivot the curve turns left by the angle swept by the dual endpoints, around
/// a dual pivot it turns right by the angle swept by the primal endpoints.
fn turn(domain: &FkDomain, from: usize, to: usize) -> Result<f64, FkError> {
    let (p, d) = domain.corner(from);
    let (pn, dn) = domain.corner(to);
    let s = |v: usize| domain.position(v);
    if p == pn && d != dn {
        Ok(ccw(s(d) - s(p), s(dn) - s(p)))
    } else if d == dn && p != pn {
        Ok(-ccw(s(pn) - s(d), s(p) - s(d)))
    } else {
        Err(FkError::NotAdjacent(from, to))
    }
}

impl InterfaceCurve {
    /// Curve through the given corners; consecutive corners must share exactly
    /// one endpoint.
    pub fn from_corners(domain: &FkDomain, corners: Vec<usize>) -> Result<Self, FkError> {
        let turns = corners.windows(2).map(|w| turn(domain, w[0], w[1])).collect::<Result<_, _>>()?;
        Ok(Self { corners, turns })
    }

    pub fn contains(&self, c: usize) -> bool {
        self.corners.contains(&c)
    }
}

/// Total turning from the first visit of `from_corner` to the end of the curve.
pub fn winding(curve: &InterfaceCurve, from_corner: usize) -> Result<f64, FkError> {
    let k = curve.corners.iter().position(|&c| c == from_corner).ok_or(FkError::NotOnCurve(from_corner))?;
    Ok(curve.turns[k..].iter().sum())
}

impl FkDomain {
    fn cycle_neighbour(&self, v: usize, not: usize) -> Option<usize> {
        let k = self.cycle_pos[v]?;
        let n = self.cycle.len();
        let (l, r) = (self.cycle[(k + n - 1) % n], self.cycle[(k + 1) % n]);
        Some(if l == not { r } else { l })
    }

    /// Quad entered when the interface crosses corner `c` in the direction τ(c).
    pub(crate) fn forward_quad(&self, c: usize) -> Option<usize> {
        let (p, d) = self.corner(c);
        let mid = (self.s[p] + self.s[d]) / 2.0;
        let t = self.taus[c];
        self.corner_quads[c].iter().copied().find(|&q| ((self.centers[q] - mid) * t.conj()).re > 0.0)
    }

    /// Corner following `c` in `config` and the turn taken.
    fn next_corner(&self, config: &FkConfig, c: usize) -> Option<usize> {
        let (p, d) = self.corner(c);
        match self.forward_quad(c) {
            Some(q) => {
                let [p0, d0, p1, d1] = self.quads[q];
                let p2 = if p == p0 { p1 } else { p0 };
                let d2 = if d == d0 { d1 } else { d0 };
                if config.open[q] {
                    self.corner_id(p2, d)
                } else {
                    self.corner_id(p, d2)
                }
            }
            None => {
                // collar: wired boundary edges along the primal arc, dual
                // boundary edges elsewhere
                if self.on_primal_arc[p] && !self.on_dual_arc[d] {
                    let p2 = self.cycle_neighbour(d, p)?;
                    self.corner_id(p2, d)
                } else {
                    let d2 = self.cycle_neighbour(p, d)?;
                    self.corner_id(p, d2)
                }
            }
        }
    }
}

/// Explores `config` from `a` to `b`.
pub fn trace_interface(config: &FkConfig, domain: &FkDomain) -> Result<InterfaceCurve, FkError> {
    let (a, b) = (domain.boundary.a, domain.boundary.b);
    let mut corners = vec![a];
    let mut turns = Vec::new();
    let mut c = a;
    while c != b {
        let next = domain.next_corner(config, c).ok_or(FkError::LeftDomain(c))?;
        turns.push(turn(domain, c, next)?);
        corners.push(next);
        c = next;
        if corners.len() > 2 * domain.n_corners() + 2 {
            return Err(FkError::LeftDomain(c));
        }
    }
    Ok(InterfaceCurve { corners, turns })
}
