use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One categorical predictor: a name and its ordered list of level labels.
/// Level codes are 1-based and assigned in first-appearance order, so the
/// label for code `k` is `levels[k - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predictor {
    pub name: String,
    pub levels: Vec<String>,
}

/// Layout of the categorical part of the expanded design: each predictor `j`
/// owns the contiguous (0-based) column range `offset(j) .. offset(j) + width(j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSchema {
    predictors: Vec<Predictor>,
    offsets: Vec<usize>,
}

impl CategoricalSchema {
    pub fn new(predictors: Vec<Predictor>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(predictors.len());
        let mut off = 0usize;
        for pred in &predictors {
            if pred.levels.is_empty() {
                return Err(Error::InvalidData(format!(
                    "predictor {:?} has no levels",
                    pred.name
                )));
            }
            for (a, la) in pred.levels.iter().enumerate() {
                if pred.levels[..a].contains(la) {
                    return Err(Error::InvalidData(format!(
                        "predictor {:?} has duplicate level {:?}",
                        pred.name, la
                    )));
                }
            }
            offsets.push(off);
            off += pred.levels.len();
        }
        Ok(Self { predictors, offsets })
    }

    /// Schema with anonymous predictors `c1..cq` of the given widths and
    /// numeric level labels; convenient for synthetic data and tests.
    pub fn with_widths(widths: &[usize]) -> Result<Self> {
        let predictors = widths
            .iter()
            .enumerate()
            .map(|(j, &w)| Predictor {
                name: format!("c{}", j + 1),
                levels: (1..=w).map(|k| k.to_string()).collect(),
            })
            .collect();
        Self::new(predictors)
    }

    pub fn n_predictors(&self) -> usize {
        self.predictors.len()
    }

    pub fn predictor(&self, j: usize) -> &Predictor {
        &self.predictors[j]
    }

    pub fn predictors(&self) -> &[Predictor] {
        &self.predictors
    }

    /// Number of levels `p_j`.
    pub fn width(&self, j: usize) -> usize {
        self.predictors[j].levels.len()
    }

    /// Start of predictor `j`'s block in the expanded coefficient vector.
    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    /// Total categorical width, the sum of all level counts.
    pub fn total_width(&self) -> usize {
        self.offsets.last().map_or(0, |&o| o) + self.predictors.last().map_or(0, |p| p.levels.len())
    }

    /// 1-based code of `label` under predictor `j`, if known.
    pub fn level_code(&self, j: usize, label: &str) -> Option<u32> {
        self.predictors[j]
            .levels
            .iter()
            .position(|l| l == label)
            .map(|k| (k + 1) as u32)
    }

    /// Maps an expanded categorical column index back to `(predictor, level)`,
    /// both 0-based.
    pub fn locate(&self, col: usize) -> (usize, usize) {
        debug_assert!(col < self.total_width());
        let j = match self.offsets.binary_search(&col) {
            Ok(j) => j,
            Err(ins) => ins - 1,
        };
        (j, col - self.offsets[j])
    }
}

/// Builds predictors incrementally from observed labels, assigning dense
/// 1-based codes in first-appearance order.
#[derive(Debug, Default)]
pub struct SchemaBuilder {
    names: Vec<String>,
    levels: Vec<Vec<String>>,
}

impl SchemaBuilder {
    pub fn new(names: Vec<String>) -> Self {
        let levels = vec![Vec::new(); names.len()];
        Self { names, levels }
    }

    /// Records `label` for predictor `j` and returns its 1-based code.
    pub fn observe(&mut self, j: usize, label: &str) -> u32 {
        if let Some(k) = self.levels[j].iter().position(|l| l == label) {
            (k + 1) as u32
        } else {
            self.levels[j].push(label.to_string());
            self.levels[j].len() as u32
        }
    }

    pub fn finish(self) -> Result<CategoricalSchema> {
        let predictors = self
            .names
            .into_iter()
            .zip(self.levels)
            .map(|(name, levels)| Predictor { name, levels })
            .collect();
        CategoricalSchema::new(predictors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_contiguous() {
        let s = CategoricalSchema::with_widths(&[2, 3, 1]).unwrap();
        assert_eq!(s.total_width(), 6);
        assert_eq!(s.offset(0), 0);
        assert_eq!(s.offset(1), 2);
        assert_eq!(s.offset(2), 5);
        assert_eq!(s.locate(0), (0, 0));
        assert_eq!(s.locate(4), (1, 2));
        assert_eq!(s.locate(5), (2, 0));
    }

    #[test]
    fn duplicate_levels_rejected() {
        let pred = Predictor {
            name: "a".into(),
            levels: vec!["x".into(), "x".into()],
        };
        assert!(CategoricalSchema::new(vec![pred]).is_err());
    }

    #[test]
    fn builder_assigns_first_appearance_codes() {
        let mut b = SchemaBuilder::new(vec!["c".into()]);
        assert_eq!(b.observe(0, "red"), 1);
        assert_eq!(b.observe(0, "blue"), 2);
        assert_eq!(b.observe(0, "red"), 1);
        let s = b.finish().unwrap();
        assert_eq!(s.level_code(0, "blue"), Some(2));
        assert_eq!(s.level_code(0, "green"), None);
    }
}
