//! Writing and reading the JSON study format.

use penmeta::cli::parse_study_file;

const DOC: &str = r#"{
  "defaults": {"mean": 58.0, "sd": 12.0},
  "studies": [
    {"id": "cc1", "modality": "or", "sample_size": 5200,
     "ratio": {"estimate": 2.3, "ci_low": 1.6, "ci_high": 3.3}},
    {"id": "cc2", "modality": "or", "biased": true,
     "ratio": {"estimate": 3.02, "counts": {"carrier_cases": 3, "carrier_controls": 0,
                                            "noncarrier_cases": 250, "noncarrier_controls": 300}}},
    {"id": "fam1", "modality": "sir",
     "ratio": {"estimate": 2.8, "ci_low": 1.9, "ci_high": 4.1},
     "ages": {"cases_carrier": {"mean": 52.0, "sd": 9.0}, "cases_noncarrier": {"mean": 61.0, "sd": 11.0},
              "controls_carrier": {"mean": 52.0, "sd": 9.0}, "controls_noncarrier": {"mean": 61.0, "sd": 11.0}}},
    {"id": "km1", "modality": "penetrance", "sample_size": 800,
     "penetrance": {"ages": [50, 70], "values": [0.06, 0.24],
                    "ci_low": [0.03, 0.17], "ci_high": [0.11, 0.32]}}
  ]
}"#;

fn main() {
    let file = parse_study_file(DOC).expect("valid document");
    for s in &file.studies {
        println!("{:<5} {:<10?} biased={:<5} case-carrier ages {:?}", s.id, s.modality, s.biased, s.ages.cases_carrier);
    }
    println!("checksum input: {} bytes", file.canonical_json().len());

    let typo = DOC.replace("\"ci_high\": 3.3", "\"ci_hgih\": 3.3");
    match parse_study_file(&typo) {
        Ok(_) => println!("typo accepted?"),
        Err(e) => println!("rejected: {e}"),
    }
}
