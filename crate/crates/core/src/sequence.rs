//! Observation sequences and sequence sets.

use crate::error::{Error, Result};
use crate::model::{EmissionKind, Obs};

/// One observation sequence: symbol ids for categorical data, scalars for
/// gaussian data.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Symbols(Vec<usize>),
    Reals(Vec<f64>),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Symbols(v) => v.len(),
            Observations::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> EmissionKind {
        match self {
            Observations::Symbols(_) => EmissionKind::Categorical,
            Observations::Reals(_) => EmissionKind::Gaussian1d,
        }
    }

    #[inline]
    pub fn at(&self, t: usize) -> Obs {
        match self {
            Observations::Symbols(v) => Obs::Symbol(v[t]),
            Observations::Reals(v) => Obs::Real(v[t]),
        }
    }
}

/// A set of independent observation sequences sharing one emission kind.
/// `alphabet` maps symbol ids back to the strings they stand for; it is
/// optional for synthetic categorical data.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub kind: EmissionKind,
    pub sequences: Vec<Observations>,
    pub alphabet: Option<Vec<String>>,
}

impl SequenceSet {
    pub fn new(kind: EmissionKind, sequences: Vec<Observations>, alphabet: Option<Vec<String>>) -> Result<Self> {
        let set = Self { kind, sequences, alphabet };
        set.validate()?;
        Ok(set)
    }

    pub fn n_sequences(&self) -> usize {
        self.sequences.len()
    }

    /// Total observation count over all sequences.
    pub fn total_len(&self) -> usize {
        self.sequences.iter().map(Observations::len).sum()
    }

    /// Alphabet size for categorical data: the alphabet length when one is
    /// attached, otherwise the smallest size covering every symbol present.
    pub fn n_symbols(&self) -> Result<usize> {
        if self.kind != EmissionKind::Categorical {
            return Err(Error::InvalidData("alphabet size requested for non-categorical data".into()));
        }
        if let Some(a) = &self.alphabet {
            return Ok(a.len());
        }
        let max = self
            .sequences
            .iter()
            .filter_map(|s| match s {
                Observations::Symbols(v) => v.iter().max().copied(),
                _ => None,
            })
            .max()
            .ok_or_else(|| Error::InvalidData("no symbols present".into()))?;
        Ok(max + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sequences.is_empty() {
            return Err(Error::InvalidData("sequence set is empty".into()));
        }
        for (n, seq) in self.sequences.iter().enumerate() {
            if seq.is_empty() {
                return Err(Error::InvalidData(format!("sequence {n} is empty")));
            }
            if seq.kind() != self.kind {
                return Err(Error::InvalidData(format!(
                    "sequence {n} does not match declared kind {}",
                    self.kind.as_str()
                )));
            }
        }
        if let (EmissionKind::Categorical, Some(alphabet)) = (self.kind, &self.alphabet) {
            let v = alphabet.len();
            for (n, seq) in self.sequences.iter().enumerate() {
                if let Observations::Symbols(ids) = seq {
                    if let Some(&bad) = ids.iter().find(|&&id| id >= v) {
                        return Err(Error::InvalidData(format!(
                            "sequence {n} contains symbol {bad} outside alphabet of size {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
