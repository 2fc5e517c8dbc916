//! Mamdani fuzzy inference over the spacing `m` and width ratio `s` of a peak pair.
//!
//! Inference uses min for AND and implication, max for OR and aggregation,
//! and centroid defuzzification on a uniform grid over the output range.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::math;

/// Gaussian membership `exp(-(x - center)² / (2 width²))`, optionally complemented (`1 - g`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub complement: bool,
}

impl Term {
    pub fn gaussian(name: &str, center: f64, width: f64) -> Self {
        Self { name: name.to_string(), center, width, complement: false }
    }

    pub fn complement_of(name: &str, center: f64, width: f64) -> Self {
        Self { complement: true, ..Self::gaussian(name, center, width) }
    }

    #[inline]
    pub fn membership(&self, x: f64) -> f64 {
        let d = (x - self.center) / self.width;
        let g = math::exp(-0.5 * d * d);
        if self.complement {
            1.0 - g
        } else {
            g
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub terms: Vec<Term>,
}

impl Variable {
    fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connective {
    And,
    Or,
}

/// `IF <var> is <term> (AND|OR ...) THEN output is <consequent>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// `(input variable name, term name)` pairs.
    pub antecedents: Vec<(String, String)>,
    pub connective: Connective,
    pub consequent: String,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Complete description of the two-input inference system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisConfig {
    pub version: u32,
    /// Exactly two inputs, named `m` and `s`.
    pub inputs: Vec<Variable>,
    /// Output variable on `[0, 1]`.
    pub output: Variable,
    pub rules: Vec<Rule>,
    /// Number of grid points used for the centroid integral.
    pub resolution: usize,
}

impl Default for FisConfig {
    fn default() -> Self {
        let rule = |ants: &[(&str, &str)], connective, consequent: &str| Rule {
            antecedents: ants.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect(),
            connective,
            consequent: consequent.to_string(),
            weight: 1.0,
        };
        Self {
            version: 1,
            inputs: vec![
                Variable {
                    name: "m".into(),
                    terms: vec![
                        Term::gaussian("near_one", crate::ISOTOPE_SPACING, 0.15),
                        Term::complement_of("far", crate::ISOTOPE_SPACING, 1.2),
                    ],
                },
                Variable {
                    name: "s".into(),
                    terms: vec![Term::gaussian("similar", 1.0, 0.5), Term::complement_of("dissimilar", 1.0, 3.0)],
                },
            ],
            output: Variable {
                name: "possibility".into(),
                terms: vec![Term::gaussian("low", 0.15, 0.25), Term::gaussian("high", 1.0, 0.05)],
            },
            rules: vec![
                rule(&[("m", "near_one"), ("s", "similar")], Connective::And, "high"),
                rule(&[("m", "far")], Connective::And, "low"),
                rule(&[("s", "dissimilar")], Connective::And, "low"),
            ],
            resolution: 1001,
        }
    }
}

/// A validated inference system with names resolved to indices.
#[derive(Debug, Clone)]
pub struct Fis {
    config: FisConfig,
    // per rule: (input var, term) indices
    rules: Vec<(Vec<(usize, usize)>, Connective, usize, f64)>,
    grid: Vec<f64>,
    // output term memberships over the grid, per term
    output_curves: Vec<Vec<f64>>,
}

impl Fis {
    pub fn new(config: FisConfig) -> Result<Self> {
        if config.inputs.len() != 2 || config.inputs[0].name != "m" || config.inputs[1].name != "s" {
            bail!(InvalidParameter, "the inference system needs exactly two inputs named \"m\" and \"s\"");
        }
        if config.resolution < 3 {
            bail!(InvalidParameter, "centroid resolution must be at least 3");
        }
        for var in config.inputs.iter().chain(core::iter::once(&config.output)) {
            if var.terms.is_empty() {
                bail!(InvalidParameter, "variable {} has no terms", var.name);
            }
            for t in &var.terms {
                if !(t.width > 0.0 && t.width.is_finite() && t.center.is_finite()) {
                    bail!(InvalidParameter, "term {}.{} needs a finite center and width > 0", var.name, t.name);
                }
            }
        }
        let mut rules = Vec::with_capacity(config.rules.len());
        for (k, r) in config.rules.iter().enumerate() {
            if r.antecedents.is_empty() {
                bail!(InvalidParameter, "rule {k} has no antecedents");
            }
            if !(0.0..=1.0).contains(&r.weight) {
                bail!(InvalidParameter, "rule {k} weight must lie in [0, 1]");
            }
            let mut ants = Vec::with_capacity(r.antecedents.len());
            for (var, term) in &r.antecedents {
                let vi = match config.inputs.iter().position(|v| &v.name == var) {
                    Some(v) => v,
                    None => bail!(InvalidParameter, "rule {k} references unknown input {var}"),
                };
                let ti = match config.inputs[vi].term_index(term) {
                    Some(t) => t,
                    None => bail!(InvalidParameter, "rule {k} references unknown term {var}.{term}"),
                };
                ants.push((vi, ti));
            }
            let out = match config.output.term_index(&r.consequent) {
                Some(o) => o,
                None => bail!(InvalidParameter, "rule {k} concludes unknown output term {}", r.consequent),
            };
            rules.push((ants, r.connective, out, r.weight));
        }

        let by_center = |a: &&Term, b: &&Term| a.center.total_cmp(&b.center);
        let highest = config.output.terms.iter().max_by(by_center).map(|t| t.name.clone());
        let lowest = config.output.terms.iter().min_by(by_center).map(|t| t.name.clone());
        let concludes = |name: &Option<String>| config.rules.iter().any(|r| Some(&r.consequent) == name.as_ref());
        if !concludes(&highest) || !concludes(&lowest) || highest == lowest {
            bail!(InvalidParameter, "rules must conclude both the highest and the lowest output term");
        }

        let n = config.resolution;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let output_curves = config
            .output
            .terms
            .iter()
            .map(|t| grid.iter().map(|&y| t.membership(y)).collect())
            .collect();
        Ok(Self { config, rules, grid, output_curves })
    }

    pub fn config(&self) -> &FisConfig {
        &self.config
    }

    /// Rule firing strengths for one input pair.
    pub fn firing_strengths(&self, m: f64, s: f64) -> Vec<f64> {
        let inputs = [m, s];
        self.rules
            .iter()
            .map(|(ants, conn, _, w)| {
                let mut it = ants.iter().map(|&(v, t)| self.config.inputs[v].terms[t].membership(inputs[v]));
                let first = it.next().unwrap_or(0.0);
                let fired = match conn {
                    Connective::And => it.fold(first, f64::min),
                    Connective::Or => it.fold(first, f64::max),
                };
                fired * w
            })
            .collect()
    }

    /// Defuzzified possibility in `[0, 1]`. Returns 0 when no rule fires.
    pub fn possibility(&self, m: f64, s: f64) -> f64 {
        let fired = self.firing_strengths(m, s);
        // clip level per output term (max aggregation over rules sharing a consequent)
        let mut clip = vec![0.0f64; self.output_curves.len()];
        for ((_, _, out, _), f) in self.rules.iter().zip(&fired) {
            clip[*out] = clip[*out].max(*f);
        }
        let last = self.grid.len() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (k, &y) in self.grid.iter().enumerate() {
            let mut mu = 0.0f64;
            for (curve, &c) in self.output_curves.iter().zip(&clip) {
                if c > 0.0 {
                    mu = mu.max(curve[k].min(c));
                }
            }
            let w = if k == 0 || k == last { 0.5 } else { 1.0 };
            num += w * y * mu;
            den += w * mu;
        }
        if den <= 0.0 {
            0.0
        } else {
            (num / den).clamp(0.0, 1.0)
        }
    }
}

/// One-shot evaluation. Prefer building a [`Fis`] once when scoring many pairs.
pub fn mamdani_possibility(m: f64, s: f64, config: &FisConfig) -> Result<f64> {
    if !(m > 0.0 && s > 0.0) {
        bail!(InvalidParameter, "m and s must be positive, got m={m}, s={s}");
    }
    Ok(Fis::new(config.clone())?.possibility(m, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fis() -> Fis {
        Fis::new(FisConfig::default()).unwrap()
    }

    /// Centroid by direct dense evaluation of the aggregated set, written
    /// independently of the gridded implementation (Simpson's rule, 20 001 points).
    fn dense_centroid(m: f64, s: f64) -> f64 {
        let g = |x: f64, c: f64, w: f64| libm::exp(-0.5 * ((x - c) / w) * ((x - c) / w));
        let high = g(m, 1.003, 0.15).min(g(s, 1.0, 0.5));
        let low = (1.0 - g(m, 1.003, 1.2)).max(1.0 - g(s, 1.0, 3.0));
        let agg = |y: f64| g(y, 1.0, 0.05).min(high).max(g(y, 0.15, 0.25).min(low));
        let n = 20_000;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=n {
            let y = k as f64 / n as f64;
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            num += w * y * agg(y);
            den += w * agg(y);
        }
        num / den
    }

    #[test]
    fn perfect_pair_scores_high() {
        let p = fis().possibility(1.003, 1.0);
        assert!(p >= 0.95, "{p}");
        assert!((p - dense_centroid(1.003, 1.0)).abs() < 1e-3);
    }

    #[test]
    fn matches_dense_centroid_oracle() {
        let f = fis();
        for &(m, s) in &[(1.0, 1.0), (1.1, 1.2), (1.3, 1.0), (2.0, 1.5), (4.1, 1.0), (86.8, 1.0), (1.003, 4.0)] {
            let p = f.possibility(m, s);
            let o = dense_centroid(m, s);
            assert!((p - o).abs() < 2e-3, "m={m} s={s}: {p} vs {o}");
        }
    }

    #[test]
    fn table_two_ordering() {
        let f = fis();
        let tau = crate::FALLBACK_THRESHOLD;
        let (near, mid, far) = (f.possibility(1.0, 1.0), f.possibility(4.1, 1.0), f.possibility(86.8, 1.0));
        assert!(near > tau && tau > mid && mid > far, "{near} {mid} {far}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = FisConfig::default();
        c.rules.retain(|r| r.consequent != "high");
        assert!(Fis::new(c).is_err());

        let mut c = FisConfig::default();
        c.inputs[0].terms[0].width = 0.0;
        assert!(Fis::new(c).is_err());

        let mut c = FisConfig::default();
        c.rules[0].antecedents[0].1 = "nope".into();
        assert!(Fis::new(c).is_err());

        assert!(mamdani_possibility(0.0, 1.0, &FisConfig::default()).is_err());
    }

    #[test]
    fn extreme_inputs_saturate() {
        let f = fis();
        let a = f.possibility(1e6, 1.0);
        let b = f.possibility(1.003, 1e6);
        assert!(a.is_finite() && b.is_finite());
        assert!(a < 0.3 && b < 0.3);
    }
}
