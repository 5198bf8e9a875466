use serde::{Deserialize, Serialize};

use crate::domain::Modality;
use crate::error::{Error, Result};
use crate::inference::Approach;

/// One study slot in a simulated meta-analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateStudy {
    pub id: String,
    pub modality: Modality,
    pub sample_size: u64,
    pub biased: bool,
    /// Whether the study reports age summaries under Scenario 1.
    pub age_reported: bool,
}

/// Modality and total sample size of the 30 ATM studies, in table order.
const ATM_SLOTS: [(Modality, u64); 30] = [
    (Modality::Penetrance, 156),
    (Modality::Penetrance, 1160),
    (Modality::Rr, 919),
    (Modality::Rr, 5173),
    (Modality::Rr, 660),
    (Modality::Sir, 712),
    (Modality::Sir, 708),
    (Modality::Or, 95561),
    (Modality::Or, 18292),
    (Modality::Or, 97997),
    (Modality::Or, 64791),
    (Modality::Or, 200),
    (Modality::Or, 193),
    (Modality::Or, 2231),
    (Modality::Or, 2133),
    (Modality::Or, 298),
    (Modality::Or, 603),
    (Modality::Or, 2434),
    (Modality::Or, 2468),
    (Modality::Or, 290),
    (Modality::Or, 7778),
    (Modality::Or, 3978),
    (Modality::Or, 93314),
    (Modality::Or, 2406),
    (Modality::Or, 948),
    (Modality::Or, 446),
    (Modality::Or, 322),
    (Modality::Or, 344),
    (Modality::Or, 223),
    (Modality::Or, 206),
];

/// Extra biased RR studies of Setting 4.
const SETTING4_RR: [u64; 5] = [400, 1100, 250, 40, 70];

/// Studies at or above this size are taken to report age summaries.
const AGE_REPORT_MIN_N: u64 = 2000;

fn reports_ages(n: u64) -> bool {
    n >= AGE_REPORT_MIN_N
}

/// Template for settings 1-4. Biased OR slots are the last 10, 5, 15 and 10
/// OR studies; setting 4 appends five biased RR studies whose age-reporting
/// flags follow the five template RR/SIR studies.
pub fn atm_template(setting: u8) -> Result<Vec<TemplateStudy>> {
    let biased_from = match setting {
        1 | 4 => 21,
        2 => 26,
        3 => 16,
        _ => return Err(Error::Contract(format!("setting must be 1-4, got {setting}"))),
    };
    let mut out: Vec<TemplateStudy> = ATM_SLOTS
        .iter()
        .enumerate()
        .map(|(k, &(modality, n))| TemplateStudy {
            id: format!("s{:02}", k + 1),
            modality,
            sample_size: n,
            biased: modality == Modality::Or && k + 1 >= biased_from,
            age_reported: reports_ages(n),
        })
        .collect();
    if setting == 4 {
        let rr_flags: Vec<bool> = out.iter().filter(|s| s.modality.is_relative_risk()).map(|s| s.age_reported).collect();
        for (j, (&n, &flag)) in SETTING4_RR.iter().zip(&rr_flags).enumerate() {
            out.push(TemplateStudy {
                id: format!("s{:02}", 31 + j),
                modality: Modality::Rr,
                sample_size: n,
                biased: true,
                age_reported: flag,
            });
        }
    }
    Ok(out)
}

/// Age summary given to OR-study controls under Scenario 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlAges {
    /// Controls reuse the cases' summary.
    #[default]
    Cases,
    /// Controls get the summary of the sampled controls' own ages.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub setting: u8,
    pub scenario: u8,
    pub replicates: usize,
    pub approaches: Vec<Approach>,
    pub seed: u64,
    pub template: Vec<TemplateStudy>,
    #[serde(default)]
    pub control_ages: ControlAges,
}

impl SimDesign {
    pub fn new(setting: u8, scenario: u8, replicates: usize, seed: u64) -> Result<Self> {
        let d = Self {
            setting,
            scenario,
            replicates,
            approaches: Approach::ALL.to_vec(),
            seed,
            template: atm_template(setting)?,
            control_ages: ControlAges::Cases,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.setting) || !(1..=2).contains(&self.scenario) {
            return Err(Error::Contract(format!(
                "setting {} / scenario {} out of range",
                self.setting, self.scenario
            )));
        }
        if self.replicates == 0 || self.approaches.is_empty() || self.template.is_empty() {
            return Err(Error::Contract("need replicates, approaches and studies".into()));
        }
        let biased_or = self.template.iter().filter(|s| s.biased && s.modality == Modality::Or).count();
        let biased_rr = self.template.iter().filter(|s| s.biased && s.modality.is_relative_risk()).count();
        let expect = match self.setting {
            1 | 4 => 10,
            2 => 5,
            _ => 15,
        };
        let expect_rr = if self.setting == 4 { 5 } else { 0 };
        if biased_or != expect || biased_rr != expect_rr {
            return Err(Error::Contract(format!(
                "setting {} expects {expect} biased OR and {expect_rr} biased RR studies, template has {biased_or} and {biased_rr}",
                self.setting
            )));
        }
        if self.template.iter().any(|s| s.sample_size < 2) {
            return Err(Error::Contract("template sample sizes must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biased_counts_per_setting() {
        for (s, n_or, n_all) in [(1, 10, 30), (2, 5, 30), (3, 15, 30), (4, 10, 35)] {
            let d = SimDesign::new(s, 1, 1, 0).unwrap();
            assert_eq!(d.template.len(), n_all);
            let or = d.template.iter().filter(|t| t.biased && t.modality == Modality::Or).count();
            assert_eq!(or, n_or);
        }
        let d4 = atm_template(4).unwrap();
        let extra: Vec<u64> = d4[30..].iter().map(|t| t.sample_size).collect();
        assert_eq!(extra, SETTING4_RR);
        assert!(atm_template(5).is_err());
    }

    #[test]
    fn tampered_template_rejected() {
        let mut d = SimDesign::new(1, 1, 1, 0).unwrap();
        d.template[10].biased = true;
        assert!(d.validate().is_err());
    }
}
