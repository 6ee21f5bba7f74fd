//! Additive-budget s-rectangular ambiguity sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmbiguityKind {
    WeightedL1,
    WeightedL2,
    KullbackLeibler,
    BurgEntropy,
}

impl AmbiguityKind {
    pub const ALL: [AmbiguityKind; 4] = [
        AmbiguityKind::WeightedL1,
        AmbiguityKind::WeightedL2,
        AmbiguityKind::KullbackLeibler,
        AmbiguityKind::BurgEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AmbiguityKind::WeightedL1 => "l1",
            AmbiguityKind::WeightedL2 => "l2",
            AmbiguityKind::KullbackLeibler => "kl",
            AmbiguityKind::BurgEntropy => "burg",
        }
    }

    pub fn uses_weights(self) -> bool {
        matches!(self, AmbiguityKind::WeightedL1 | AmbiguityKind::WeightedL2)
    }

    /// Whether the projection for this kind is solved exactly.
    pub fn is_exact(self) -> bool {
        self.uses_weights()
    }
}

impl fmt::Display for AmbiguityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AmbiguityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(AmbiguityKind::WeightedL1),
            "l2" => Ok(AmbiguityKind::WeightedL2),
            "kl" => Ok(AmbiguityKind::KullbackLeibler),
            "burg" => Ok(AmbiguityKind::BurgEntropy),
            other => Err(Error::Domain(format!("unknown ambiguity kind {other:?}"))),
        }
    }
}

/// Budget and weights of an ambiguity set. Weights are a scalar default
/// plus sparse `(s, a, s')` overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySpec {
    kind: AmbiguityKind,
    kappa: f64,
    sigma_default: f64,
    sigma_overrides: BTreeMap<(usize, usize, usize), f64>,
}

fn check_positive(what: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {x}")))
    }
}

impl AmbiguitySpec {
    pub fn new(kind: AmbiguityKind, kappa: f64) -> Result<Self> {
        Ok(AmbiguitySpec {
            kind,
            kappa: check_positive("kappa", kappa)?,
            sigma_default: 1.0,
            sigma_overrides: BTreeMap::new(),
        })
    }

    /// Budget from a total-variation radius via [`calibrate_radius`].
    pub fn from_tv(kind: AmbiguityKind, tv: f64) -> Result<Self> {
        Self::new(kind, calibrate_radius(kind, tv)?)
    }

    pub fn with_sigma_default(mut self, sigma: f64) -> Result<Self> {
        self.sigma_default = check_positive("sigma", sigma)?;
        Ok(self)
    }

    pub fn with_sigma(mut self, s: usize, a: usize, next: usize, sigma: f64) -> Result<Self> {
        self.sigma_overrides
            .insert((s, a, next), check_positive("sigma", sigma)?);
        Ok(self)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        let mut out = self.clone();
        out.kappa = check_positive("kappa", kappa)?;
        Ok(out)
    }

    pub fn kind(&self) -> AmbiguityKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sigma_default(&self) -> f64 {
        self.sigma_default
    }

    pub fn sigma_overrides(&self) -> &BTreeMap<(usize, usize, usize), f64> {
        &self.sigma_overrides
    }

    pub fn weight(&self, s: usize, a: usize, next: usize) -> f64 {
        self.sigma_overrides
            .get(&(s, a, next))
            .copied()
            .unwrap_or(self.sigma_default)
    }

    /// Dense weights of row `(s, a)`.
    pub fn weights_into(&self, s: usize, a: usize, num_states: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(num_states, self.sigma_default);
        for (&(_, _, next), &w) in self.sigma_overrides.range((s, a, 0)..=(s, a, usize::MAX)) {
            if next < num_states {
                out[next] = w;
            }
        }
    }
}

/// Budget matching a total-variation radius `tv`: `2τ` for L1, `(2τ)²` for
/// L2 and `(2τ)²/2` for the divergences.
pub fn calibrate_radius(kind: AmbiguityKind, tv: f64) -> Result<f64> {
    if !(tv > 0.0 && tv < 1.0) {
        return Err(Error::Domain(format!("tv radius must lie in (0,1), got {tv}")));
    }
    let rho = 2.0 * tv;
    Ok(match kind {
        AmbiguityKind::WeightedL1 => rho,
        AmbiguityKind::WeightedL2 => rho * rho,
        AmbiguityKind::KullbackLeibler | AmbiguityKind::BurgEntropy => rho * rho / 2.0,
    })
}

/// Evaluates `d(p, p̄)` for the given kind. Weights are read only by the
/// norm kinds and may be empty otherwise.
pub fn deviation(kind: AmbiguityKind, p: &[f64], nominal: &[f64], sigma: &[f64]) -> Result<f64> {
    if p.len() != nominal.len() {
        return Err(Error::Domain(format!(
            "length mismatch: p has {}, nominal has {}",
            p.len(),
            nominal.len()
        )));
    }
    if p.iter().chain(nominal).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain("probabilities must be finite and non-negative".into()));
    }
    if kind.uses_weights() {
        if sigma.len() != p.len() {
            return Err(Error::Domain(format!(
                "length mismatch: sigma has {}, expected {}",
                sigma.len(),
                p.len()
            )));
        }
        if sigma.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
    }
    let terms = p.iter().zip(nominal).enumerate();
    Ok(match kind {
        AmbiguityKind::WeightedL1 => terms.map(|(i, (x, y))| sigma[i] * (x - y).abs()).sum(),
        AmbiguityKind::WeightedL2 => terms
            .map(|(i, (x, y))| {
                let d = sigma[i] * (x - y);
                d * d
            })
            .sum(),
        AmbiguityKind::KullbackLeibler => {
            let mut total = 0.0;
            for (_, (&x, &y)) in terms {
                if x == 0.0 {
                    continue;
                }
                if y == 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += x * (x / y).ln();
            }
            total.max(0.0)
        }
        AmbiguityKind::BurgEntropy => {
            let mut total = 0.0;
            for (_, (&x, &y)) in terms {
                if y == 0.0 {
                    continue;
                }
                if x == 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += y * (y / x).ln();
            }
            total.max(0.0)
        }
    })
}
