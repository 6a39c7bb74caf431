use crate::error::{Error, Result};
use crate::schema::CategoricalSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Binary,
}

/// A loaded dataset: level codes per categorical predictor, continuous
/// columns, and the response. Codes are 1-based; code 0 marks a level unseen
/// at schema construction (it contributes nothing at prediction time and is
/// rejected by fitting).
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: CategoricalSchema,
    /// Column-major: `cat_codes[j][i]` is the code of predictor `j` in row `i`.
    cat_codes: Vec<Vec<u32>>,
    /// Column-major continuous values.
    cont: Vec<Vec<f64>>,
    cont_names: Vec<String>,
    y: Vec<f64>,
    task: Task,
    /// `groups[j][k]` lists the rows where predictor `j` takes level `k + 1`.
    groups: Vec<Vec<Vec<usize>>>,
    has_unseen: bool,
}

impl Dataset {
    pub fn new(
        schema: CategoricalSchema,
        cat_codes: Vec<Vec<u32>>,
        cont: Vec<Vec<f64>>,
        cont_names: Vec<String>,
        y: Vec<f64>,
        task: Task,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidData("empty dataset".into()));
        }
        if cat_codes.len() != schema.n_predictors() {
            return Err(Error::DimensionMismatch(format!(
                "{} categorical columns for {} predictors",
                cat_codes.len(),
                schema.n_predictors()
            )));
        }
        if cont.len() != cont_names.len() {
            return Err(Error::DimensionMismatch(
                "continuous columns and names differ in length".into(),
            ));
        }
        let mut has_unseen = false;
        for (j, col) in cat_codes.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "categorical column {j} has {} rows, expected {n}",
                    col.len()
                )));
            }
            for &code in col {
                if code as usize > schema.width(j) {
                    return Err(Error::InvalidData(format!(
                        "code {code} out of range for predictor {:?} ({} levels)",
                        schema.predictor(j).name,
                        schema.width(j)
                    )));
                }
                has_unseen |= code == 0;
            }
        }
        for col in &cont {
            if col.len() != n {
                return Err(Error::DimensionMismatch(
                    "continuous column length mismatch".into(),
                ));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData("non-finite continuous value".into()));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite response value".into()));
        }
        if task == Task::Binary && y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidData(
                "binary task requires responses in {-1, +1}".into(),
            ));
        }
        let groups = build_groups(&schema, &cat_codes, n);
        Ok(Self {
            schema,
            cat_codes,
            cont,
            cont_names,
            y,
            task,
            groups,
            has_unseen,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.schema.n_predictors()
    }

    pub fn n_cont(&self) -> usize {
        self.cont.len()
    }

    /// Expanded dimension `p`: total categorical width plus continuous count.
    pub fn p(&self) -> usize {
        self.schema.total_width() + self.n_cont()
    }

    pub fn schema(&self) -> &CategoricalSchema {
        &self.schema
    }

    pub fn codes(&self, j: usize) -> &[u32] {
        &self.cat_codes[j]
    }

    pub fn cont_col(&self, j: usize) -> &[f64] {
        &self.cont[j]
    }

    pub fn cont_names(&self) -> &[String] {
        &self.cont_names
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Observation index sets of predictor `j`, one per level (0-based).
    /// These partition the rows carrying known codes.
    pub fn level_groups(&self, j: usize) -> &[Vec<usize>] {
        &self.groups[j]
    }

    /// True when some row carries a code unseen in the schema. Such rows are
    /// usable for prediction but not for fitting.
    pub fn has_unseen_levels(&self) -> bool {
        self.has_unseen
    }

    pub fn require_fit_ready(&self) -> Result<()> {
        if self.has_unseen {
            return Err(Error::InvalidData(
                "dataset contains levels unseen in the schema; fitting requires known codes".into(),
            ));
        }
        Ok(())
    }

    /// Restricts the dataset to a subset of rows (used by split protocols).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let take = |col: &[f64]| rows.iter().map(|&i| col[i]).collect::<Vec<_>>();
        Self::new(
            self.schema.clone(),
            self.cat_codes
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            self.cont.iter().map(|c| take(c)).collect(),
            self.cont_names.clone(),
            take(&self.y),
            self.task,
        )
    }
}

fn build_groups(schema: &CategoricalSchema, codes: &[Vec<u32>], n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut groups = Vec::with_capacity(codes.len());
    for (j, col) in codes.iter().enumerate() {
        let mut per_level = vec![Vec::new(); schema.width(j)];
        for i in 0..n {
            let code = col[i];
            if code > 0 {
                per_level[code as usize - 1].push(i);
            }
        }
        groups.push(per_level);
    }
    groups
}

/// Sparse description of the expanded design: per predictor and row, the
/// single active column, plus dense continuous columns.
#[derive(Debug, Clone)]
pub struct SparseDesign {
    pub n_rows: usize,
    pub n_cols: usize,
    /// `cat_cols[j][i]` is the expanded column holding the 1 for row `i`, or
    /// `None` when the level is unseen.
    pub cat_cols: Vec<Vec<Option<usize>>>,
    /// Continuous columns occupy the trailing indices, copied verbatim.
    pub cont_cols: Vec<Vec<f64>>,
    cat_width: usize,
}

impl SparseDesign {
    pub fn matvec(&self, beta: &[f64]) -> Vec<f64> {
        assert_eq!(beta.len(), self.n_cols);
        let mut out = vec![0.0; self.n_rows];
        for col in &self.cat_cols {
            for (i, &c) in col.iter().enumerate() {
                if let Some(c) = c {
                    out[i] += beta[c];
                }
            }
        }
        for (jc, col) in self.cont_cols.iter().enumerate() {
            let b = beta[self.cat_width + jc];
            if b != 0.0 {
                for (i, &v) in col.iter().enumerate() {
                    out[i] += b * v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_cols]; self.n_rows];
        for col in &self.cat_cols {
            for (i, &c) in col.iter().enumerate() {
                if let Some(c) = c {
                    rows[i][c] = 1.0;
                }
            }
        }
        for (jc, col) in self.cont_cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                rows[i][self.cat_width + jc] = v;
            }
        }
        rows
    }
}

/// Expands a dataset into its (sparse) dummy-coded design matrix: row `i` has
/// exactly one 1 within each predictor's block, at the observed level.
pub fn expand_design(ds: &Dataset) -> SparseDesign {
    let schema = ds.schema();
    let cat_width = schema.total_width();
    let cat_cols = (0..ds.q())
        .map(|j| {
            let off = schema.offset(j);
            ds.codes(j)
                .iter()
                .map(|&code| (code > 0).then(|| off + code as usize - 1))
                .collect()
        })
        .collect();
    SparseDesign {
        n_rows: ds.n(),
        n_cols: cat_width + ds.n_cont(),
        cat_cols,
        cont_cols: (0..ds.n_cont()).map(|j| ds.cont_col(j).to_vec()).collect(),
        cat_width,
    }
}
