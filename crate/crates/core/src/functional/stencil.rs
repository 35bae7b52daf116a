use super::{FiniteRangeFunctional, Local};
use crate::lattice::{LatticeIndex, Rectangle};

/// A functional flattened against a linear layout: every factor reads
/// `values[base + offset]`.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    terms: Vec<(f64, Vec<(isize, Local)>)>,
}

impl Stencil {
    /// Offsets are positions in `sites`, which must cover the window.
    pub(crate) fn on_sites(f: &FiniteRangeFunctional, sites: &[LatticeIndex]) -> Self {
        Self::build(f, |s| sites.binary_search(s).expect("site in window") as isize)
    }

    /// Offsets are row-major displacements in `region`, relative to the origin.
    pub(crate) fn on_region(f: &FiniteRangeFunctional, region: &Rectangle) -> Self {
        let strides = region.strides();
        Self::build(f, |s| s.coords().iter().zip(&strides).map(|(&c, &st)| c as isize * st as isize).sum())
    }

    fn build(f: &FiniteRangeFunctional, offset: impl Fn(&LatticeIndex) -> isize) -> Self {
        let terms = f.monomials().map(|(m, c)| (c, m.iter().map(|(s, l)| (offset(s), *l)).collect())).collect();
        Self { terms }
    }

    #[inline]
    pub(crate) fn eval_at(&self, values: &[f64], base: isize) -> f64 {
        let mut total = 0.0;
        for (c, factors) in &self.terms {
            let mut prod = *c;
            for &(off, local) in factors {
                prod *= local.eval(values[(base + off) as usize]);
            }
            total += prod;
        }
        total
    }
}
