//! Orthomartingale-coboundary decomposition
//! `f = sum_S prod_{q not in S} (I - U_{e_q}) h_S` with `h_S = prod_{r in S} A_r prod_{s not in S} B_s f`.
//!
//! Subsets `S` of the axes are bit masks (bit `q` for axis `q`), iterated in ascending order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::hannan::hannan_components;
use crate::innovation::InnovationLaw;
use crate::lattice::LatticeIndex;
use crate::projection::{cond_expect, project_line, ConditioningIndex};

/// Table tolerance for the centering conditions.
pub const CHECK_TOL: f64 = 1e-10;
/// Largest accepted residual of a verified decomposition.
pub const VERIFY_TOL: f64 = 1e-9;

/// A condition of the form `E^(q)_{-M} f = 0` or `f = E^(q)_M f` that failed.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteringViolation {
    pub axis: usize,
    pub condition: &'static str,
    pub deviation: f64,
}

/// Outcome of [`check_m_report`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CenteringReport {
    pub violations: Vec<CenteringViolation>,
}

impl CenteringReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both centering conditions on every axis.
pub fn check_m_report(f: &Functional, m: i32, law: &InnovationLaw) -> Result<CenteringReport> {
    let mut report = CenteringReport::default();
    let zero = Functional::zero(f.dim());
    for q in 0..f.dim() {
        let low = cond_expect(f, ConditioningIndex::halfspace(q, -i64::from(m)), law)?;
        let deviation = low.sup_distance(&zero, law)?;
        if deviation > CHECK_TOL {
            report.violations.push(CenteringViolation { axis: q, condition: "E^(q)_{-M} f != 0", deviation });
        }
        let high = cond_expect(f, ConditioningIndex::halfspace(q, i64::from(m)), law)?;
        let deviation = f.sup_distance(&high, law)?;
        if deviation > CHECK_TOL {
            report.violations.push(CenteringViolation { axis: q, condition: "f - E^(q)_M f != 0", deviation });
        }
    }
    Ok(report)
}

/// `E^(q)_{-M} f = 0` and `f = E^(q)_M f` for every axis `q`.
pub fn check_m(f: &Functional, m: i32, law: &InnovationLaw) -> Result<bool> {
    Ok(check_m_report(f, m, law)?.holds())
}

/// `prod_q (I - E^(q)_{-M}) g`, for `g` supported in `[-M, M]^d`.
pub fn center(g: &Functional, m: i32, law: &InnovationLaw) -> Result<Functional> {
    if g.window().iter().any(|s| s.coords().iter().any(|c| c.abs() > m)) {
        return Err(Error::WindowOutsideBox { m });
    }
    let mut f = g.clone();
    for q in 0..g.dim() {
        let low = cond_expect(&f, ConditioningIndex::halfspace(q, -i64::from(m)), law)?;
        f = &f - &low;
    }
    Ok(f)
}

fn check_axis(f: &Functional, q: usize) -> Result<()> {
    if q >= f.dim() {
        return Err(Error::InvalidArgument(format!("axis {q} out of range for d = {}", f.dim())));
    }
    Ok(())
}

/// `A_q f = sum_i P^(q)_0 U_{e_q}^i f`, summed over the shifts that reach the hyperplane `s_q = 0`.
pub fn op_a(f: &Functional, q: usize, law: &InnovationLaw) -> Result<Functional> {
    check_axis(f, q)?;
    let Some((lo, hi)) = f.axis_span(q) else {
        return Ok(Functional::zero(f.dim()));
    };
    let unit = LatticeIndex::unit(f.dim(), q);
    let mut out = Functional::zero(f.dim());
    for i in -hi..=-lo {
        let p = project_line(&f.shift(unit.scale(i)), q, 0, law)?;
        out = &out + &p;
    }
    Ok(out)
}

/// `B_q f = -sum_{i >= 0} sum_{k < 0} P^(q)_i U^k f + sum_{i < 0} sum_{k >= 0} P^(q)_i U^k f`.
pub fn op_b(f: &Functional, q: usize, law: &InnovationLaw) -> Result<Functional> {
    check_axis(f, q)?;
    let Some((lo, hi)) = f.axis_span(q) else {
        return Ok(Functional::zero(f.dim()));
    };
    let unit = LatticeIndex::unit(f.dim(), q);
    let mut out = Functional::zero(f.dim());
    // k < 0 needs i = s_q + k >= 0 for some site; k >= 0 needs s_q + k < 0
    for k in (-hi..=-1).chain(0..-lo) {
        let g = f.shift(unit.scale(k));
        for i in (lo + k)..=(hi + k) {
            let p = match (i >= 0, k >= 0) {
                (true, false) => -&project_line(&g, q, i64::from(i), law)?,
                (false, true) => project_line(&g, q, i64::from(i), law)?,
                _ => continue,
            };
            out = &out + &p;
        }
    }
    Ok(out)
}

/// `h_S` for the subset encoded by `mask`.
pub fn component(f: &Functional, mask: u32, law: &InnovationLaw) -> Result<Functional> {
    let mut h = f.clone();
    for q in 0..f.dim() {
        if mask & (1 << q) == 0 {
            h = op_b(&h, q, law)?;
        }
    }
    for q in 0..f.dim() {
        if mask & (1 << q) != 0 {
            h = op_a(&h, q, law)?;
        }
    }
    Ok(h)
}

/// Verified output of [`decompose`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoboundaryParts {
    pub order_m: i32,
    /// `components[mask] = h_S`.
    pub components: Vec<Functional>,
    /// Sup distance between the reconstruction and `f`.
    pub residual: f64,
    /// Sup distance between `h_{all axes}` and `sum_j P_0 U_j f`.
    pub hd_residual: f64,
    /// Largest `sup |E^(q)_{-1} h_S|` over `q in S`.
    pub martingale_violation: f64,
}

impl CoboundaryParts {
    pub fn dim(&self) -> usize {
        self.components.len().trailing_zeros() as usize
    }

    pub fn full_mask(&self) -> u32 {
        (self.components.len() - 1) as u32
    }
}

/// Axes in a mask, e.g. `{0,2}`.
pub fn subset_label(mask: u32, dim: usize) -> String {
    let axes: Vec<String> = (0..dim).filter(|q| mask & (1 << q) != 0).map(|q| q.to_string()).collect();
    format!("{{{}}}", axes.join(","))
}

/// Computes all `2^d` components and verifies the reconstruction, the top component
/// and the martingale property before returning.
pub fn decompose(f: &Functional, m: i32, law: &InnovationLaw) -> Result<CoboundaryParts> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
    }
    if let Some(v) = check_m_report(f, m, law)?.violations.into_iter().next() {
        return Err(Error::CenteringViolated { axis: v.axis, condition: v.condition.to_string() });
    }
    let d = f.dim();
    let components = (0..1u32 << d)
        .into_par_iter()
        .map(|mask| component(f, mask, law))
        .collect::<Result<Vec<_>>>()?;

    let mut parts = CoboundaryParts {
        order_m: m,
        components,
        residual: 0.0,
        hd_residual: 0.0,
        martingale_violation: 0.0,
    };
    parts.residual = reconstruct(&parts)?.sup_distance(f, law)?;

    let kernel = hannan_components(f, law)?.values().fold(Functional::zero(d), |acc, p| &acc + p);
    parts.hd_residual = parts.components[parts.full_mask() as usize].sup_distance(&kernel, law)?;

    let zero = Functional::zero(d);
    for (mask, h) in parts.components.iter().enumerate() {
        for q in (0..d).filter(|q| mask & (1 << q) != 0) {
            if h.window().iter().any(|s| s[q] > 0) {
                return Err(Error::VerificationFailed(format!(
                    "component {} depends on sites with coordinate {q} > 0",
                    subset_label(mask as u32, d)
                )));
            }
            let e = cond_expect(h, ConditioningIndex::halfspace(q, -1), law)?;
            parts.martingale_violation = parts.martingale_violation.max(e.sup_distance(&zero, law)?);
        }
    }

    for (name, value) in [
        ("reconstruction residual", parts.residual),
        ("top component residual", parts.hd_residual),
        ("martingale violation", parts.martingale_violation),
    ] {
        if !(value <= VERIFY_TOL) {
            return Err(Error::VerificationFailed(format!("{name} {value:e} exceeds {VERIFY_TOL:e}")));
        }
    }
    Ok(parts)
}

/// `sum_S prod_{q not in S} (I - U_{e_q}) h_S`.
pub fn reconstruct(parts: &CoboundaryParts) -> Result<Functional> {
    let n = parts.components.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("expected 2^d components, got {n}")));
    }
    let d = parts.dim();
    if let Some(h) = parts.components.iter().find(|h| h.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
    }
    let mut out = Functional::zero(d);
    for (mask, h) in parts.components.iter().enumerate() {
        let mut g = h.clone();
        for q in (0..d).filter(|q| mask & (1 << q) == 0) {
            g = &g - &g.shift(LatticeIndex::unit(d, q));
        }
        out = &out + &g;
    }
    Ok(out)
}
