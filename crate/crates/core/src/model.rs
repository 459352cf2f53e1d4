//! Model parameters: per-state emission distributions and the chain
//! (initial + transition) structure, with validation and sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::sample_index;
use crate::sequence::Observations;

/// Simplex sums must hold this tightly for a model to be accepted.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Lower bound on Gaussian variances. Keeps the complete likelihood bounded
/// when a state's posterior mass collapses onto a single observation.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Which emission family a model or dataset uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionKind {
    Categorical,
    Gaussian1d,
}

impl EmissionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmissionKind::Categorical => "categorical",
            EmissionKind::Gaussian1d => "gaussian1d",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(EmissionKind::Categorical),
            "gaussian1d" => Ok(EmissionKind::Gaussian1d),
            other => Err(Error::InvalidData(format!("unknown emission kind {other:?}"))),
        }
    }
}

/// One observation, matching one of the two emission families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obs {
    Symbol(usize),
    Real(f64),
}

/// Per-state emission distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionModel {
    /// Probability mass over symbols `0..V`.
    Categorical(Vec<f64>),
    /// Scalar normal with `variance >= VARIANCE_FLOOR`.
    Gaussian1d { mean: f64, variance: f64 },
}

impl EmissionModel {
    pub fn kind(&self) -> EmissionKind {
        match self {
            EmissionModel::Categorical(_) => EmissionKind::Categorical,
            EmissionModel::Gaussian1d { .. } => EmissionKind::Gaussian1d,
        }
    }

    /// Free-parameter count: `V - 1` for categorical, 2 for a scalar normal.
    pub fn free_dim(&self) -> usize {
        match self {
            EmissionModel::Categorical(p) => p.len().saturating_sub(1),
            EmissionModel::Gaussian1d { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EmissionModel::Categorical(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidModel("empty categorical table".into()));
                }
                if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
                    return Err(Error::InvalidModel("categorical mass must be finite and >= 0".into()));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::InvalidModel(format!(
                        "categorical mass sums to {s}, expected 1 within {SIMPLEX_TOL}"
                    )));
                }
                Ok(())
            }
            EmissionModel::Gaussian1d { mean, variance } => {
                if !mean.is_finite() || !variance.is_finite() {
                    return Err(Error::InvalidModel("non-finite gaussian parameter".into()));
                }
                if *variance < VARIANCE_FLOOR {
                    return Err(Error::InvalidModel(format!(
                        "variance {variance} below floor {VARIANCE_FLOOR}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Natural-log density (gaussian) or log mass (categorical) at `obs`.
    /// Zero mass yields `-inf`; densities may be positive.
    pub fn log_prob(&self, obs: Obs) -> Result<f64> {
        match (self, obs) {
            (EmissionModel::Categorical(p), Obs::Symbol(v)) => {
                let mass = *p.get(v).ok_or_else(|| {
                    Error::InvalidData(format!("symbol {v} outside alphabet of size {}", p.len()))
                })?;
                Ok(if mass > 0.0 { mass.ln() } else { f64::NEG_INFINITY })
            }
            (EmissionModel::Gaussian1d { mean, variance }, Obs::Real(x)) => {
                const LOG_2PI: f64 = 1.837_877_066_409_345_6;
                let d = x - mean;
                Ok(-0.5 * (LOG_2PI + variance.ln()) - d * d / (2.0 * variance))
            }
            _ => Err(Error::InvalidData("observation type does not match emission kind".into())),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Obs {
        match self {
            EmissionModel::Categorical(p) => Obs::Symbol(sample_index(rng, p)),
            EmissionModel::Gaussian1d { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                Obs::Real(mean + variance.sqrt() * z)
            }
        }
    }
}

/// Penalty dimensionalities of a model: the free-parameter counts whose
/// halves scale the log-occupancy penalties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDims {
    /// Initial distribution: `K - 1`.
    pub alpha: usize,
    /// Per-state transition row: `K - 1` each.
    pub beta: Vec<usize>,
    /// Per-state emission parameter count.
    pub phi: Vec<usize>,
}

impl ModelDims {
    /// Total free-parameter count `D`.
    pub fn total(&self) -> usize {
        self.alpha + self.beta.iter().sum::<usize>() + self.phi.iter().sum::<usize>()
    }
}

/// A hidden Markov model: initial distribution, row-stochastic transition
/// matrix (stored row-major, `beta[j * k + l] = P(l at t | j at t-1)`), and
/// one emission model per state.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub emissions: Vec<EmissionModel>,
}

impl HmmParams {
    /// Build and validate.
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, emissions: Vec<EmissionModel>) -> Result<Self> {
        let p = Self { alpha, beta, emissions };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn kind(&self) -> EmissionKind {
        self.emissions[0].kind()
    }

    /// Transition probability from state `j` to state `l`.
    #[inline]
    pub fn transition(&self, j: usize, l: usize) -> f64 {
        self.beta[j * self.k() + l]
    }

    /// Row `j` of the transition matrix.
    #[inline]
    pub fn transition_row(&self, j: usize) -> &[f64] {
        let k = self.k();
        &self.beta[j * k..(j + 1) * k]
    }

    pub fn dims(&self) -> ModelDims {
        let k = self.k();
        ModelDims {
            alpha: k - 1,
            beta: vec![k - 1; k],
            phi: self.emissions.iter().map(|e| e.free_dim()).collect(),
        }
    }

    /// Alphabet size for categorical models.
    pub fn n_symbols(&self) -> Option<usize> {
        match &self.emissions[0] {
            EmissionModel::Categorical(p) => Some(p.len()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.alpha.len();
        if k == 0 {
            return Err(Error::InvalidModel("state count must be >= 1".into()));
        }
        if self.beta.len() != k * k {
            return Err(Error::InvalidModel(format!(
                "transition matrix has {} entries, expected {}",
                self.beta.len(),
                k * k
            )));
        }
        if self.emissions.len() != k {
            return Err(Error::InvalidModel(format!(
                "{} emission models for {} states",
                self.emissions.len(),
                k
            )));
        }
        check_simplex(&self.alpha, "initial distribution")?;
        for j in 0..k {
            check_simplex(self.transition_row(j), &format!("transition row {j}"))?;
        }
        let kind = self.emissions[0].kind();
        let mut v = None;
        for (i, e) in self.emissions.iter().enumerate() {
            if e.kind() != kind {
                return Err(Error::InvalidModel("mixed emission kinds within one model".into()));
            }
            e.validate()
                .map_err(|err| Error::InvalidModel(format!("emission {i}: {err}")))?;
            if let EmissionModel::Categorical(p) = e {
                match v {
                    None => v = Some(p.len()),
                    Some(n) if n != p.len() => {
                        return Err(Error::InvalidModel("categorical alphabet sizes differ across states".into()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Draw a length-`t_len` observation sequence and its hidden state path.
    /// Deterministic in the rng state: per step, the state is drawn first,
    /// then the observation.
    pub fn sample(&self, t_len: usize, rng: &mut ChaCha8Rng) -> (Observations, Vec<usize>) {
        assert!(t_len >= 1, "sequence length must be >= 1");
        let mut path = Vec::with_capacity(t_len);
        let mut state = sample_index(rng, &self.alpha);
        path.push(state);
        let mut obs = Vec::with_capacity(t_len);
        obs.push(self.emissions[state].sample(rng));
        for _ in 1..t_len {
            state = sample_index(rng, self.transition_row(state));
            path.push(state);
            obs.push(self.emissions[state].sample(rng));
        }
        let observations = match self.kind() {
            EmissionKind::Categorical => Observations::Symbols(
                obs.iter()
                    .map(|o| match o {
                        Obs::Symbol(v) => *v,
                        Obs::Real(_) => unreachable!(),
                    })
                    .collect(),
            ),
            EmissionKind::Gaussian1d => Observations::Reals(
                obs.iter()
                    .map(|o| match o {
                        Obs::Real(x) => *x,
                        Obs::Symbol(_) => unreachable!(),
                    })
                    .collect(),
            ),
        };
        (observations, path)
    }
}

fn check_simplex(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = xs.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidModel(format!(
            "{what} sums to {s}, expected 1 within {SIMPLEX_TOL}"
        )));
    }
    Ok(())
}
