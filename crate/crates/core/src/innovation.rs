//! Finite-alphabet i.i.d. innovation fields: laws, exhaustive enumeration of
//! configurations on a finite site set, and reproducible sampling of regions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{LatticeIndex, Rectangle};

/// Default bound on the number of weighted configurations in exact mode.
pub const DEFAULT_CAP: u64 = 1 << 24;

const PROB_SUM_TOL: f64 = 1e-12;

/// Distribution of a single innovation: finitely many distinct values with positive probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct InnovationLaw {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl InnovationLaw {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::InvalidLaw(format!("{} values but {} probabilities", values.len(), probs.len())));
        }
        if values.len() < 2 {
            return Err(Error::InvalidLaw("alphabet needs at least two values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLaw("values must be finite".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidLaw("probabilities must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}")));
        }
        for (k, v) in values.iter().enumerate() {
            if values[..k].contains(v) {
                return Err(Error::InvalidLaw(format!("duplicate value {v}")));
            }
        }
        Ok(Self { values, probs })
    }

    /// `P(eps = +1) = P(eps = -1) = 1/2`.
    pub fn rademacher() -> Self {
        Self { values: vec![-1.0, 1.0], probs: vec![0.5, 0.5] }
    }

    pub fn is_rademacher(&self) -> bool {
        self == &Self::rademacher() || (self.values == [1.0, -1.0] && self.probs == [0.5, 0.5])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Alphabet size.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Probability of the value `v` (zero off the alphabet).
    pub fn prob_of(&self, v: f64) -> f64 {
        self.values.iter().position(|&x| x == v).map_or(0.0, |k| self.probs[k])
    }

    /// `E eps^k`.
    pub fn moment(&self, k: u32) -> f64 {
        self.expect(|v| v.powi(k as i32))
    }

    /// `E g(eps)`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().zip(&self.probs).map(|(&v, &p)| p * g(v)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.moment(1);
        self.moment(2) - m * m
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().expect("non-empty alphabet")
    }
}

/// An assignment of alphabet values to a finite, sorted site set, with its product weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    sites: Vec<LatticeIndex>,
    values: Vec<f64>,
    weight: f64,
}

impl Configuration {
    /// Builds a configuration; the weight is the product of the site probabilities under `law`.
    pub fn new(assignment: &[(LatticeIndex, f64)], law: &InnovationLaw) -> Self {
        let mut pairs = assignment.to_vec();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        let weight = pairs.iter().map(|(_, v)| law.prob_of(*v)).product();
        let (sites, values) = pairs.into_iter().unzip();
        Self { sites, values, weight }
    }

    pub fn sites(&self) -> &[LatticeIndex] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn get(&self, site: &LatticeIndex) -> Option<f64> {
        self.sites.binary_search(site).ok().map(|k| self.values[k])
    }
}

/// Number of configurations of `n_sites` sites, checked against `cap`.
pub fn check_cap(alphabet: usize, n_sites: usize, cap: u64) -> Result<u64> {
    let needed = (alphabet as f64).powi(n_sites as i32);
    if needed > cap as f64 {
        return Err(Error::CapExceeded { needed, cap });
    }
    Ok(needed as u64)
}

/// Every assignment of the law's alphabet to `sites`, the last site varying fastest.
pub fn enumerate_configs(sites: &[LatticeIndex], law: &InnovationLaw, cap: u64) -> Result<ConfigIter> {
    let mut sites = sites.to_vec();
    sites.sort();
    sites.dedup();
    check_cap(law.len(), sites.len(), cap)?;
    Ok(ConfigIter { law: law.clone(), digits: Some(vec![0; sites.len()]), sites })
}

/// Iterator returned by [`enumerate_configs`].
pub struct ConfigIter {
    law: InnovationLaw,
    sites: Vec<LatticeIndex>,
    digits: Option<Vec<usize>>,
}

impl Iterator for ConfigIter {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let digits = self.digits.as_mut()?;
        let values = digits.iter().map(|&k| self.law.values[k]).collect();
        let weight = digits.iter().map(|&k| self.law.probs[k]).product();
        let config = Configuration { sites: self.sites.clone(), values, weight };
        if !advance(digits, self.law.len()) {
            self.digits = None;
        }
        Some(config)
    }
}

/// Odometer increment; returns false after the last combination.
pub(crate) fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Innovation values drawn on a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    region: Rectangle,
    values: Vec<f64>,
    seed: u64,
    replicate: u64,
}

impl FieldSample {
    pub fn region(&self) -> &Rectangle {
        &self.region
    }

    /// Row-major values over the region.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    pub fn get(&self, site: &LatticeIndex) -> Option<f64> {
        self.region.flat_index(site).map(|k| self.values[k])
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn region_hash(region: &Rectangle) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: i64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(region.dim() as i64);
    for q in 0..region.dim() {
        feed(region.lo()[q] as i64);
        feed(region.hi()[q] as i64);
    }
    h
}

/// Seed of the stream for `(seed, replicate, region)`.
///
/// `mix64(mix64(mix64(seed ^ 0x9E3779B97F4A7C15) ^ replicate * 0xD1B54A32D192ED03) ^ fnv1a(region))`,
/// where the region hash is FNV-1a over the little-endian bytes of `d, lo_1, hi_1, ..., lo_d, hi_d`.
/// Streams are derived from this value, never advanced from a shared generator.
pub fn stream_seed(seed: u64, replicate: u64, region: &Rectangle) -> u64 {
    let h = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let h = mix64(h ^ replicate.wrapping_mul(0xD1B5_4A32_D192_ED03));
    mix64(h ^ region_hash(region))
}

/// Draws i.i.d. innovations on `region`, deterministically in `(seed, replicate, region, law)`.
pub fn sample_region(region: &Rectangle, law: &InnovationLaw, seed: u64, replicate: u64) -> FieldSample {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, replicate, region));
    let values = (0..region.cardinality()).map(|_| law.sample(&mut rng)).collect();
    FieldSample { region: *region, values, seed, replicate }
}
