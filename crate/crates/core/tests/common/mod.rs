//! Brute-force oracles: everything here enumerates configurations directly and never
//! goes through the symbolic integration used by the library.
#![allow(dead_code)]

use orthofield::innovation::{enumerate_configs, Configuration};
use orthofield::{Functional, InnovationLaw, LatticeIndex};

pub const CAP: u64 = 1 << 20;

pub fn idx(c: &[i32]) -> LatticeIndex {
    LatticeIndex::new(c).unwrap()
}

pub fn eps(c: &[i32]) -> Functional {
    Functional::value(idx(c))
}

pub fn union(fs: &[&Functional]) -> Vec<LatticeIndex> {
    let mut sites: Vec<LatticeIndex> = fs.iter().flat_map(|f| f.window()).collect();
    sites.sort();
    sites.dedup();
    sites
}

pub fn configs(sites: &[LatticeIndex], law: &InnovationLaw) -> Vec<Configuration> {
    enumerate_configs(sites, law, CAP).unwrap().collect()
}

pub fn expectation(f: &Functional, law: &InnovationLaw) -> f64 {
    configs(&f.window(), law).iter().map(|c| c.weight() * f.evaluate(c).unwrap()).sum()
}

pub fn inner(f: &Functional, g: &Functional, law: &InnovationLaw) -> f64 {
    configs(&union(&[f, g]), law).iter().map(|c| c.weight() * f.evaluate(c).unwrap() * g.evaluate(c).unwrap()).sum()
}

/// `max |f - g|` over every configuration of the joint window.
pub fn sup_diff(f: &Functional, g: &Functional, law: &InnovationLaw) -> f64 {
    configs(&union(&[f, g]), law)
        .iter()
        .map(|c| (f.evaluate(c).unwrap() - g.evaluate(c).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// `max |E(f | G) - h|`, where `G` is generated by the sites selected by `measurable`,
/// computed by averaging `f` over the unmeasurable coordinates of every configuration.
pub fn cond_expect_gap(f: &Functional, h: &Functional, measurable: impl Fn(&LatticeIndex) -> bool, law: &InnovationLaw) -> f64 {
    let sites = union(&[f, h]);
    let (kept, free): (Vec<LatticeIndex>, Vec<LatticeIndex>) = sites.iter().partition(|s| measurable(s));
    let free_configs = configs(&free, law);
    let mut worst: f64 = 0.0;
    for outer in configs(&kept, law) {
        let mut avg = 0.0;
        for inner in &free_configs {
            let lookup = |s: &LatticeIndex| outer.get(s).or_else(|| inner.get(s));
            avg += inner.weight() * f.evaluate_with(lookup).unwrap();
        }
        for inner in &free_configs {
            let lookup = |s: &LatticeIndex| outer.get(s).or_else(|| inner.get(s));
            worst = worst.max((h.evaluate_with(lookup).unwrap() - avg).abs());
        }
    }
    worst
}

/// `E (f(eps) - f(eps^{*i}))^2` by enumerating the window together with the copy at `i`.
pub fn delta_sq(f: &Functional, i: &LatticeIndex, law: &InnovationLaw) -> f64 {
    let mut total = 0.0;
    for c in configs(&f.window(), law) {
        let base = f.evaluate(&c).unwrap();
        for (v, p) in law.values().iter().zip(law.probs()) {
            let swapped = f.evaluate_with(|s| if s == i { Some(*v) } else { c.get(s) }).unwrap();
            total += c.weight() * p * (base - swapped).powi(2);
        }
    }
    total
}

pub fn three_point_law() -> InnovationLaw {
    InnovationLaw::new(vec![-1.0, 0.5, 2.0], vec![0.3, 0.5, 0.2]).unwrap()
}
