//! The eight-class schema, per-class keyword lists, and the construction of
//! the label-embedding matrix fed into the attention layers.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The eight physiological classes, in their fixed index order 0..7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    /// Out of class (including dates and miscellaneous numbers).
    O,
    /// Contractility: ejection and shortening fractions.
    Cp,
    /// Heart rate (fréquence cardiaque).
    FC,
    /// Pulmonary artery diameter.
    D,
    /// Oxygen saturation.
    SO2,
    /// APGAR score.
    APGAR,
    /// Inter-ventricular pressure gradient.
    G,
    /// Size of the atrial/ventricular septal defect.
    #[serde(rename = "CIA_CIV", alias = "CIA-CIV")]
    CiaCiv,
}

pub const NUM_CLASSES: usize = 8;

impl ClassLabel {
    pub const ALL: [ClassLabel; NUM_CLASSES] = [
        ClassLabel::O,
        ClassLabel::Cp,
        ClassLabel::FC,
        ClassLabel::D,
        ClassLabel::SO2,
        ClassLabel::APGAR,
        ClassLabel::G,
        ClassLabel::CiaCiv,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        Self::ALL.get(i).copied()
    }

    /// Short code used in corpus files and reports.
    pub fn code(self) -> &'static str {
        match self {
            ClassLabel::O => "O",
            ClassLabel::Cp => "Cp",
            ClassLabel::FC => "FC",
            ClassLabel::D => "D",
            ClassLabel::SO2 => "SO2",
            ClassLabel::APGAR => "APGAR",
            ClassLabel::G => "G",
            ClassLabel::CiaCiv => "CIA_CIV",
        }
    }

    pub fn from_code(code: &str) -> Option<ClassLabel> {
        match code {
            "O" => Some(ClassLabel::O),
            "Cp" => Some(ClassLabel::Cp),
            "FC" => Some(ClassLabel::FC),
            "D" => Some(ClassLabel::D),
            "SO2" => Some(ClassLabel::SO2),
            "APGAR" => Some(ClassLabel::APGAR),
            "G" => Some(ClassLabel::G),
            "CIA_CIV" | "CIA-CIV" => Some(ClassLabel::CiaCiv),
            _ => None,
        }
    }

    /// French display name for report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassLabel::O => "Divers",
            ClassLabel::Cp => "contractilité",
            ClassLabel::FC => "fréquence cardiaque",
            ClassLabel::D => "diamètre artère pulmonaire",
            ClassLabel::SO2 => "saturation en oxygène",
            ClassLabel::APGAR => "APGAR",
            ClassLabel::G => "gradient VD-VG AP",
            ClassLabel::CiaCiv => "CIA-CIV",
        }
    }
}

#[derive(Debug, Error)]
pub enum LabelSpaceError {
    #[error("embedding for keyword {keyword:?} has length {got}, expected {expected}")]
    DimensionMismatch { keyword: String, got: usize, expected: usize },
    #[error("class {0:?} has an empty keyword list")]
    EmptyKeywordList(&'static str),
    #[error("keyword table JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("keyword table is missing class {0:?}")]
    MissingClass(&'static str),
}

/// Per-class representative keywords. The default list is the clinician
/// vocabulary shipped with the project; it can be replaced from JSON
/// (`{"Cp": ["fraction", "ejection", ...], ...}`) without rebuilding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTable {
    keywords: Vec<Vec<String>>,
}

impl Default for KeywordTable {
    fn default() -> Self {
        let rows: [&[&str]; NUM_CLASSES] = [
            &["mot", "patient", "historique"],
            &["fraction", "ejection", "raccourcissement"],
            &["cardiaque", "coeur", "frequence"],
            &["diamètre", "pulmonaire", "artère"],
            &["oxygène", "O2", "sat"],
            &["apgar", "minute", "nombre"],
            &["gradient", "pulmonaire", "ventricule"],
            &["cia", "civ", "inter"],
        ];
        KeywordTable {
            keywords: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }
}

impl KeywordTable {
    pub fn new(keywords: Vec<Vec<String>>) -> Result<Self, LabelSpaceError> {
        let table = KeywordTable { keywords };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<(), LabelSpaceError> {
        for label in ClassLabel::ALL {
            match self.keywords.get(label.index()) {
                None => return Err(LabelSpaceError::MissingClass(label.code())),
                Some(list) if list.is_empty() => {
                    return Err(LabelSpaceError::EmptyKeywordList(label.code()))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn keywords_for(&self, label: ClassLabel) -> &[String] {
        &self.keywords[label.index()]
    }

    /// Serialize as a `{class code: [keywords]}` JSON object.
    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = ClassLabel::ALL
            .iter()
            .map(|label| {
                (
                    label.code().to_string(),
                    serde_json::Value::from(self.keywords_for(*label).to_vec()),
                )
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).unwrap()
    }

    pub fn from_json(json: &str) -> Result<Self, LabelSpaceError> {
        let map: std::collections::HashMap<String, Vec<String>> = serde_json::from_str(json)?;
        let mut keywords = Vec::with_capacity(NUM_CLASSES);
        for label in ClassLabel::ALL {
            let mut list = map.get(label.code());
            if list.is_none() && label == ClassLabel::CiaCiv {
                list = map.get("CIA-CIV");
            }
            let list = list.ok_or(LabelSpaceError::MissingClass(label.code()))?;
            keywords.push(list.clone());
        }
        KeywordTable::new(keywords)
    }
}

/// The n×D matrix whose row i is the mean initial embedding of class i's
/// keywords.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEmbeddingMatrix(pub Array2<f64>);

/// Build the label-embedding matrix: row order follows the class indices,
/// each row the arithmetic mean of embeddings returned by `embed`.
///
/// Multi-token keywords are not split here; `embed` decides how a keyword
/// string maps to a vector (the model embeds pieces and averages them, so
/// the table stays closed under any tokenizer).
pub fn build_label_matrix<F>(
    keywords: &KeywordTable,
    mut embed: F,
    dim: usize,
) -> Result<LabelEmbeddingMatrix, LabelSpaceError>
where
    F: FnMut(&str) -> Vec<f64>,
{
    keywords.validate()?;
    let mut matrix = Array2::<f64>::zeros((NUM_CLASSES, dim));
    for label in ClassLabel::ALL {
        let list = keywords.keywords_for(label);
        let mut row = vec![0.0; dim];
        for kw in list {
            let e = embed(kw);
            if e.len() != dim {
                return Err(LabelSpaceError::DimensionMismatch {
                    keyword: kw.clone(),
                    got: e.len(),
                    expected: dim,
                });
            }
            for (acc, v) in row.iter_mut().zip(&e) {
                *acc += v;
            }
        }
        let inv = 1.0 / list.len() as f64;
        for (j, v) in row.iter().enumerate() {
            matrix[[label.index(), j]] = v * inv;
        }
    }
    Ok(LabelEmbeddingMatrix(matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_embed(word: &str) -> Vec<f64> {
        match word {
            "a" => vec![1.0, 2.0, 3.0],
            "b" => vec![3.0, 0.0, -1.0],
            _ => vec![0.5, 0.5, 0.5],
        }
    }

    #[test]
    fn indices_are_stable() {
        assert_eq!(ClassLabel::O.index(), 0);
        assert_eq!(ClassLabel::Cp.index(), 1);
        assert_eq!(ClassLabel::FC.index(), 2);
        assert_eq!(ClassLabel::D.index(), 3);
        assert_eq!(ClassLabel::SO2.index(), 4);
        assert_eq!(ClassLabel::APGAR.index(), 5);
        assert_eq!(ClassLabel::G.index(), 6);
        assert_eq!(ClassLabel::CiaCiv.index(), 7);
        for i in 0..NUM_CLASSES {
            assert_eq!(ClassLabel::from_index(i).unwrap().index(), i);
        }
    }

    #[test]
    fn single_keyword_row_is_that_embedding() {
        let table =
            KeywordTable::new((0..8).map(|_| vec!["a".to_string()]).collect()).unwrap();
        let m = build_label_matrix(&table, fixed_embed, 3).unwrap().0;
        for i in 0..NUM_CLASSES {
            assert_eq!(m.row(i).to_vec(), vec![1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn duplicate_keyword_mean_is_idempotent() {
        let one = KeywordTable::new((0..8).map(|_| vec!["a".into()]).collect()).unwrap();
        let two =
            KeywordTable::new((0..8).map(|_| vec!["a".into(), "a".into()]).collect()).unwrap();
        let m1 = build_label_matrix(&one, fixed_embed, 3).unwrap().0;
        let m2 = build_label_matrix(&two, fixed_embed, 3).unwrap().0;
        assert_eq!(m1, m2);
    }

    #[test]
    fn two_keyword_mean_matches_elementwise_average() {
        let table =
            KeywordTable::new((0..8).map(|_| vec!["a".into(), "b".into()]).collect()).unwrap();
        let m = build_label_matrix(&table, fixed_embed, 3).unwrap().0;
        // independent elementwise average oracle
        let ea = fixed_embed("a");
        let eb = fixed_embed("b");
        let expect: Vec<f64> = ea.iter().zip(&eb).map(|(x, y)| (x + y) / 2.0).collect();
        for i in 0..NUM_CLASSES {
            let row = m.row(i);
            for j in 0..3 {
                assert!((row[j] - expect[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn keyword_permutation_leaves_row_unchanged() {
        let fwd =
            KeywordTable::new((0..8).map(|_| vec!["a".into(), "b".into()]).collect()).unwrap();
        let rev =
            KeywordTable::new((0..8).map(|_| vec!["b".into(), "a".into()]).collect()).unwrap();
        let m1 = build_label_matrix(&fwd, fixed_embed, 3).unwrap().0;
        let m2 = build_label_matrix(&rev, fixed_embed, 3).unwrap().0;
        assert_eq!(m1, m2);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let table = KeywordTable::default();
        let err = build_label_matrix(&table, |_| vec![0.0; 4], 3).unwrap_err();
        assert!(matches!(err, LabelSpaceError::DimensionMismatch { expected: 3, got: 4, .. }));
    }

    #[test]
    fn default_table_round_trips_through_json() {
        let table = KeywordTable::default();
        let json = table.to_json();
        let back = KeywordTable::from_json(&json).unwrap();
        assert_eq!(table, back);
        assert_eq!(back.keywords_for(ClassLabel::SO2), &["oxygène", "O2", "sat"]);
        assert_eq!(back.keywords_for(ClassLabel::CiaCiv), &["cia", "civ", "inter"]);
        // shape is always 8 x D
        let m = build_label_matrix(&table, |_| vec![0.0; 5], 5).unwrap().0;
        assert_eq!(m.dim(), (8, 5));
    }
}
