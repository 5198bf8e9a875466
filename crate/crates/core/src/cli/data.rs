use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{AgeDistributions, AgeSummary, BaselinePenetrance, Modality, StudyRecord};
use crate::error::{Error, Result};
use crate::likelihood::{build_penetrance_cov, CovSimulation, PenetranceCov};
use crate::seeds::derive_seed;

const ATM_JSON: &str = include_str!("../../data/atm.json");
const PALB2_JSON: &str = include_str!("../../data/palb2.json");

/// JSON input document.
///
/// Studies that omit `ages` get `defaults` (or the built-in 63 / 14.00726
/// summary) for all four age distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub studies: Vec<StudyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselinePenetrance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defaults: Option<AgeSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Dataset {
    Atm,
    Palb2,
}

impl Dataset {
    pub fn json(self) -> &'static str {
        match self {
            Dataset::Atm => ATM_JSON,
            Dataset::Palb2 => PALB2_JSON,
        }
    }
}

/// Parse and validate a study file. Errors carry the JSON line and column.
pub fn parse_study_file(text: &str) -> Result<StudyFile> {
    let mut file: StudyFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    if let Some(d) = file.defaults {
        d.validate()?;
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let missing: Vec<bool> = raw["studies"]
            .as_array()
            .map(|a| a.iter().map(|s| s.get("ages").is_none()).collect())
            .unwrap_or_default();
        for (rec, &fill) in file.studies.iter_mut().zip(&missing) {
            if fill {
                rec.ages = AgeDistributions::uniform(d);
            }
        }
    }
    file.validate()?;
    Ok(file)
}

pub fn load_study_file(path: &Path) -> Result<StudyFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_study_file(&text)
}

pub fn bundled(dataset: Dataset) -> StudyFile {
    parse_study_file(dataset.json()).expect("bundled dataset is valid")
}

impl StudyFile {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = &self.baseline {
            b.validate()?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.studies {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Parse(format!("duplicate study id `{}`", s.id)));
            }
            if s.modality == Modality::Penetrance && s.sample_size.is_none() {
                return Err(Error::InvalidStudy {
                    id: s.id.clone(),
                    reason: "penetrance studies need a sample size for the covariance".into(),
                });
            }
        }
        Ok(())
    }

    pub fn baseline(&self) -> BaselinePenetrance {
        self.baseline.unwrap_or_default()
    }

    /// Compact JSON of the parsed document; the dataset checksum is taken over this.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// Covariances for penetrance studies. Study `k` in id order uses
    /// stream `k` of `seed`.
    pub fn penetrance_covs(&self, sim: &CovSimulation, seed: u64) -> Result<BTreeMap<String, PenetranceCov>> {
        let mut pen: Vec<&StudyRecord> = self
            .studies
            .iter()
            .filter(|s| s.modality == Modality::Penetrance)
            .collect();
        pen.sort_by(|a, b| a.id.cmp(&b.id));
        pen.iter()
            .enumerate()
            .map(|(k, s)| {
                let report = s.penetrance.as_ref().expect("validated");
                let n = s.sample_size.expect("validated");
                Ok((s.id.clone(), build_penetrance_cov(report, n, sim, derive_seed(seed, k as u64))?))
            })
            .collect()
    }
}
