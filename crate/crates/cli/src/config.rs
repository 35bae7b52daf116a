//! Experiment configuration (TOML) and its validation into library types.

use serde::Deserialize;

use orthofield::counterexample::{build_truncated, embed_diagonal};
use orthofield::lattice::MAX_DIM;
use orthofield::{Factor, Functional, InnovationLaw, LatticeIndex, Term};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 20240611;
pub const DEFAULT_REPLICATES: u64 = 2000;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default)]
    pub law: LawSpec,
    pub functional: Option<FunctionalSpec>,
    #[serde(default)]
    pub describe: DescribeSpec,
    #[serde(default)]
    pub decompose: DecomposeSpec,
    #[serde(default)]
    pub clt: CltSpec,
    #[serde(default)]
    pub counterexample: CounterexampleSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_replicates() -> u64 {
    DEFAULT_REPLICATES
}

/// `kind = "rademacher"`, or explicit `values` and `probs`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub kind: Option<String>,
    pub values: Option<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
}

/// Either `builtin` (with `a` for the linear builtin) or a `terms` list.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub builtin: Option<String>,
    pub a: Option<f64>,
    pub terms: Option<Vec<TermSpec>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub site: Vec<i32>,
    pub kind: String,
    pub arg: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescribeSpec {
    #[serde(default = "default_table_rows")]
    pub max_table_rows: u64,
}

impl Default for DescribeSpec {
    fn default() -> Self {
        Self { max_table_rows: default_table_rows() }
    }
}

fn default_table_rows() -> u64 {
    4096
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSpec {
    pub m: Option<i32>,
    #[serde(default)]
    pub auto_center: bool,
    pub max_table_rows: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSpec {
    #[serde(default)]
    pub grids: Vec<Vec<i32>>,
    #[serde(default = "default_resolution")]
    pub t_resolution: u32,
    #[serde(default = "default_level")]
    pub level: f64,
    pub pairs: Option<Vec<[Vec<f64>; 2]>>,
    #[serde(default = "default_true")]
    pub gap: bool,
    pub gap_replicates: Option<u64>,
    #[serde(default = "default_true")]
    pub per_replicate_rows: bool,
}

impl Default for CltSpec {
    fn default() -> Self {
        Self {
            grids: Vec::new(),
            t_resolution: default_resolution(),
            level: default_level(),
            pairs: None,
            gap: true,
            gap_replicates: None,
            per_replicate_rows: true,
        }
    }
}

fn default_resolution() -> u32 {
    2
}

fn default_level() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    #[serde(default = "default_truncations")]
    pub truncations: Vec<u32>,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        Self { truncations: default_truncations() }
    }
}

fn default_truncations() -> Vec<u32> {
    vec![2, 3, 4, 5, 8, 10, 20, 40]
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    pub format: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(CliError::config(format!("output.format: expected \"csv\" or \"json\", got \"{other}\""))),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.check_dimension()?;
        Ok(cfg)
    }

    fn check_dimension(&self) -> Result<(), CliError> {
        if !(1..=MAX_DIM).contains(&self.dimension) {
            return Err(CliError::config(format!("dimension: must be between 1 and {MAX_DIM}, got {}", self.dimension)));
        }
        Ok(())
    }

    pub fn law(&self) -> Result<InnovationLaw, CliError> {
        let spec = &self.law;
        match (spec.kind.as_deref(), &spec.values, &spec.probs) {
            (None | Some("rademacher"), None, None) => Ok(InnovationLaw::rademacher()),
            (None | Some("discrete"), Some(v), Some(p)) => {
                InnovationLaw::new(v.clone(), p.clone()).map_err(|e| CliError::config(format!("law: {e}")))
            }
            (Some(k), _, _) if k != "rademacher" && k != "discrete" => {
                Err(CliError::config(format!("law.kind: expected \"rademacher\" or \"discrete\", got \"{k}\"")))
            }
            _ => Err(CliError::config("law: give kind = \"rademacher\" or both values and probs")),
        }
    }

    fn site(&self, coords: &[i32], field: &str) -> Result<LatticeIndex, CliError> {
        if coords.len() != self.dimension {
            return Err(CliError::config(format!("{field}: expected {} coordinates, got {}", self.dimension, coords.len())));
        }
        LatticeIndex::new(coords).map_err(|e| CliError::config(format!("{field}: {e}")))
    }

    /// The configured functional and a short label for reports.
    pub fn functional(&self, law: &InnovationLaw) -> Result<(Functional, String), CliError> {
        let spec = self.functional.as_ref().ok_or_else(|| CliError::config("functional: missing section"))?;
        let d = self.dimension;
        match (&spec.builtin, &spec.terms) {
            (Some(name), None) => self.builtin(name, spec.a, law),
            (None, Some(terms)) => {
                if spec.a.is_some() {
                    return Err(CliError::config("functional.a: only valid with builtin = \"linear\""));
                }
                let mut parsed = Vec::with_capacity(terms.len());
                for (t, term) in terms.iter().enumerate() {
                    let mut factors = Vec::with_capacity(term.factors.len());
                    for (k, fac) in term.factors.iter().enumerate() {
                        let field = format!("functional.terms[{t}].factors[{k}]");
                        let site = self.site(&fac.site, &format!("{field}.site"))?;
                        factors.push(match (fac.kind.as_str(), fac.arg) {
                            ("value", None) => Factor::value(site),
                            ("indicator", Some(v)) => Factor::indicator(site, v),
                            ("power", Some(p)) if p >= 0.0 && p.fract() == 0.0 && p <= 64.0 => Factor::power(site, p as u32),
                            ("value", Some(_)) => return Err(CliError::config(format!("{field}.arg: value factors take no argument"))),
                            ("indicator" | "power", _) => {
                                return Err(CliError::config(format!("{field}.arg: {} factors need a valid argument", fac.kind)))
                            }
                            (other, _) => {
                                return Err(CliError::config(format!(
                                    "{field}.kind: expected \"value\", \"indicator\" or \"power\", got \"{other}\""
                                )))
                            }
                        });
                    }
                    parsed.push(Term { coeff: term.coeff, factors });
                }
                let f = Functional::from_terms(d, &parsed).map_err(|e| CliError::config(format!("functional.terms: {e}")))?;
                Ok((f, format!("terms({})", terms.len())))
            }
            _ => Err(CliError::config("functional: give exactly one of builtin or terms")),
        }
    }

    fn builtin(&self, name: &str, a: Option<f64>, law: &InnovationLaw) -> Result<(Functional, String), CliError> {
        let d = self.dimension;
        let origin = LatticeIndex::zero(d);
        let back = -LatticeIndex::unit(d, 0);
        if a.is_some() && name != "linear" {
            return Err(CliError::config("functional.a: only valid with builtin = \"linear\""));
        }
        match name {
            "identity" => Ok((Functional::value(origin), "identity".into())),
            "linear" => {
                let a = a.unwrap_or(0.5);
                let f = &Functional::value(origin) + &Functional::value(back).scale(a);
                Ok((f, format!("linear(a={a})")))
            }
            "telescope" => Ok((&Functional::value(back) - &Functional::value(origin), "telescope".into())),
            _ => {
                let Some(n) = name.strip_prefix("counterexample:") else {
                    return Err(CliError::config(format!(
                        "functional.builtin: expected identity, linear, telescope or counterexample:N, got \"{name}\""
                    )));
                };
                let n: u32 = n.parse().map_err(|_| CliError::config(format!("functional.builtin: bad truncation in \"{name}\"")))?;
                let f1 = build_truncated(n, law).map_err(|e| CliError::from_core(e, "functional.builtin"))?;
                let f = if d == 1 { f1 } else { embed_diagonal(&f1, d).map_err(|e| CliError::from_core(e, "functional.builtin"))? };
                Ok((f, format!("counterexample:{n}")))
            }
        }
    }

    /// Grid sizes for the CLT runs.
    pub fn grids(&self) -> Result<Vec<LatticeIndex>, CliError> {
        if self.clt.grids.is_empty() {
            return Err(CliError::config("clt.grids: at least one grid size is required"));
        }
        self.clt
            .grids
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let field = format!("clt.grids[{k}]");
                let n = self.site(g, &field)?;
                if n.coords().iter().any(|&c| c < 1) {
                    return Err(CliError::config(format!("{field}: sizes must be positive")));
                }
                Ok(n)
            })
            .collect()
    }

    /// Covariance pairs; defaults to the variance at `t = 1` and, for d >= 2, the
    /// crossed pair `((1/2, 1, ..), (1, 1/2, ..))`.
    pub fn pairs(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>, CliError> {
        let d = self.dimension;
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = match &self.clt.pairs {
            Some(p) => p.iter().map(|[s, t]| (s.clone(), t.clone())).collect(),
            None => {
                let ones = vec![1.0; d];
                let mut out = vec![(ones.clone(), ones.clone())];
                let mut s = ones.clone();
                s[0] = 0.5;
                let mut t = ones.clone();
                t[d.min(2) - 1] = 0.5;
                out.push((s, t));
                out
            }
        };
        for (k, (s, t)) in pairs.iter().enumerate() {
            if s.len() != d || t.len() != d {
                return Err(CliError::config(format!("clt.pairs[{k}]: points need {d} coordinates")));
            }
            if s.iter().chain(t).any(|x| !(0.0..=1.0).contains(x)) {
                return Err(CliError::config(format!("clt.pairs[{k}]: points must lie in [0, 1]^d")));
            }
        }
        Ok(pairs)
    }
}
