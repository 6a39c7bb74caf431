//! LP-format model export with a quadratic objective, and a plain-text
//! solution importer for round-tripping external solver output.
//!
//! Variables are emitted in a fixed order (`beta_<i>` with 1-based expanded
//! indices, `alpha`, `z_<i>`, `l_<i>`, then `zf_<j>_<i>_<k>`
//! predictor-major), so re-exporting the same model is byte-identical.

use super::model::MipModel;
use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::schema::CategoricalSchema;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

fn push_term(out: &mut String, first: &mut bool, coef: f64, var: &str) {
    if coef == 0.0 {
        return;
    }
    if *first {
        if coef < 0.0 {
            let _ = write!(out, "- ");
        }
        *first = false;
    } else if coef < 0.0 {
        let _ = write!(out, " - ");
    } else {
        let _ = write!(out, " + ");
    }
    let mag = coef.abs();
    if mag == 1.0 && !var.contains('^') && !var.contains('*') {
        let _ = write!(out, "{var}");
    } else {
        let _ = write!(out, "{mag} {var}");
    }
}

/// Renders the model as an LP-format string. Absolute-value constraints are
/// written as their two linear sides; the quadratic objective uses the
/// bracketed `[ ... ] / 2` convention.
pub fn write_model_string(model: &MipModel) -> String {
    let p = model.p;
    let n = model.n as f64;
    let var = |i: usize| -> String {
        if i == p {
            "alpha".to_string()
        } else {
            format!("beta_{}", i + 1)
        }
    };

    let mut s = String::new();
    s.push_str("Minimize\n obj: ");
    let mut first = true;
    for i in 0..=p {
        push_term(&mut s, &mut first, -2.0 * model.xty[i] / n, &var(i));
    }
    for i in 0..p {
        push_term(&mut s, &mut first, model.lambda0, &format!("z_{}", i + 1));
    }
    for i in 0..model.cat_width {
        push_term(&mut s, &mut first, model.lambda, &format!("l_{}", i + 1));
    }
    if first {
        s.push('0');
    }
    let constant = model.yty / n;
    if constant != 0.0 {
        let _ = write!(s, " + {constant}");
    }
    // Quadratic part.
    s.push_str("\n   + [ ");
    let mut qfirst = true;
    for i in 0..=p {
        let di = 2.0 * model.gram_at(i, i) / n;
        push_term(&mut s, &mut qfirst, di, &format!("{} ^ 2", var(i)));
        for j in (i + 1)..=p {
            let off = 4.0 * model.gram_at(i, j) / n;
            push_term(&mut s, &mut qfirst, off, &format!("{} * {}", var(i), var(j)));
        }
    }
    if qfirst {
        s.push('0');
    }
    s.push_str(" ] / 2\n");

    s.push_str("Subject To\n");
    for i in 0..p {
        let _ = writeln!(
            s,
            " sparse_pos_{0}: beta_{0} - {1} z_{0} <= 0",
            i + 1,
            model.big_m
        );
        let _ = writeln!(
            s,
            " sparse_neg_{0}: - beta_{0} - {1} z_{0} <= 0",
            i + 1,
            model.big_m
        );
    }
    for (j, &(start, end)) in model.block_ranges.iter().enumerate() {
        if model.active.contains(&j) {
            for i in start..end {
                for k in start..i {
                    let _ = writeln!(
                        s,
                        " fuse_pos_{j1}_{i1}_{k1}: beta_{k1} - beta_{i1} - {m} zf_{j1}_{i1}_{k1} <= 0",
                        j1 = j + 1,
                        i1 = i + 1,
                        k1 = k + 1,
                        m = 2.0 * model.big_m
                    );
                    let _ = writeln!(
                        s,
                        " fuse_neg_{j1}_{i1}_{k1}: beta_{i1} - beta_{k1} - {m} zf_{j1}_{i1}_{k1} <= 0",
                        j1 = j + 1,
                        i1 = i + 1,
                        k1 = k + 1,
                        m = 2.0 * model.big_m
                    );
                }
            }
            // New-cluster linking: sum_k zf_j_i_k - (i - s_j - 1) <= l_i.
            for i in start..end {
                let _ = write!(s, " link_{}_{}: ", j + 1, i + 1);
                let mut lfirst = true;
                for k in start..i {
                    push_term(
                        &mut s,
                        &mut lfirst,
                        1.0,
                        &format!("zf_{}_{}_{}", j + 1, i + 1, k + 1),
                    );
                }
                push_term(&mut s, &mut lfirst, -1.0, &format!("l_{}", i + 1));
                let rhs = i as isize - start as isize - 1;
                let _ = writeln!(s, " <= {rhs}");
            }
        } else {
            // Without pair indicators only the forced first-level row remains.
            let _ = writeln!(s, " link_{}_{}: - l_{} <= -1", j + 1, start + 1, start + 1);
        }
    }

    s.push_str("Bounds\n");
    for i in 0..p {
        let _ = writeln!(s, " beta_{} free", i + 1);
    }
    s.push_str(" alpha free\n");

    s.push_str("Binaries\n");
    for i in 0..p {
        let _ = writeln!(s, " z_{}", i + 1);
    }
    for i in 0..model.cat_width {
        let _ = writeln!(s, " l_{}", i + 1);
    }
    for (j, &(start, end)) in model.block_ranges.iter().enumerate() {
        if model.active.contains(&j) {
            for i in start..end {
                for k in start..i {
                    let _ = writeln!(s, " zf_{}_{}_{}", j + 1, i + 1, k + 1);
                }
            }
        }
    }
    s.push_str("End\n");
    s
}

/// Writes the model file at `path`.
pub fn export_model(model: &MipModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_model_string(model))?;
    Ok(())
}

/// Reads a solver solution file: one `<variable> <value>` pair per line;
/// blank lines and lines starting with `#` are skipped.
pub fn import_solution(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (name, value) = match (parts.next(), parts.next()) {
            (Some(n), Some(v)) => (n, v),
            _ => {
                return Err(Error::Parse(format!(
                    "solution line {} is not '<variable> <value>'",
                    lineno + 1
                )))
            }
        };
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad value on solution line {}", lineno + 1)))?;
        out.insert(name.to_string(), value);
    }
    Ok(out)
}

/// Rebuilds coefficients from imported `beta_<i>` / `alpha` values; missing
/// variables default to zero.
pub fn coefficients_from_solution(
    schema: &CategoricalSchema,
    n_cont: usize,
    solution: &BTreeMap<String, f64>,
) -> Result<Coefficients> {
    let p = schema.total_width() + n_cont;
    let mut beta = vec![0.0; p];
    for (name, &value) in solution {
        if let Some(idx) = name.strip_prefix("beta_") {
            let i: usize = idx
                .parse()
                .map_err(|_| Error::Parse(format!("bad variable name {name:?}")))?;
            if i == 0 || i > p {
                return Err(Error::Parse(format!(
                    "variable {name:?} out of range for p = {p}"
                )));
            }
            beta[i - 1] = value;
        }
    }
    let alpha = solution.get("alpha").copied().unwrap_or(0.0);
    Coefficients::from_expanded(schema, n_cont, alpha, &beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Task};
    use crate::mip::{build_mip, ActivePredictors};
    use crate::objective::PenaltyConfig;

    fn model() -> (Dataset, MipModel) {
        let schema = CategoricalSchema::with_widths(&[2]).unwrap();
        let ds = Dataset::new(
            schema,
            vec![vec![1, 2, 1, 2]],
            vec![],
            vec![],
            vec![1.0, -1.0, 1.2, -0.8],
            Task::Regression,
        )
        .unwrap();
        let pen = PenaltyConfig::new(0.1, 0.2).unwrap();
        let m = build_mip(&ds, &pen, 2.0, &ActivePredictors::All).unwrap();
        (ds, m)
    }

    #[test]
    fn fusion_rows_come_in_pairs() {
        let (_, m) = model();
        let text = write_model_string(&m);
        assert_eq!(text.matches("fuse_pos_").count(), 1);
        assert_eq!(text.lines().filter(|l| l.contains("fuse_")).count(), 2);
        assert!(text.contains("link_1_1: - l_1 <= -1"));
    }

    #[test]
    fn export_is_deterministic() {
        let (_, m) = model();
        assert_eq!(write_model_string(&m), write_model_string(&m));
    }

    #[test]
    fn declared_variables_match_counts() {
        let (_, m) = model();
        let text = write_model_string(&m);
        let binaries: Vec<&str> = text
            .split("Binaries\n")
            .nth(1)
            .unwrap()
            .lines()
            .take_while(|l| *l != "End")
            .collect();
        assert_eq!(binaries.len(), m.n_z() + m.n_l() + m.n_pair());
        let frees = text.lines().filter(|l| l.ends_with(" free")).count();
        assert_eq!(frees, m.n_beta() + 1);
    }

    #[test]
    fn solution_round_trip() {
        let (ds, _) = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sol.txt");
        std::fs::write(&path, "# comment\nbeta_1 1.5\nbeta_2 -0.5\nalpha 0.25\nz_1 1\n").unwrap();
        let sol = import_solution(&path).unwrap();
        let coef = coefficients_from_solution(ds.schema(), 0, &sol).unwrap();
        assert_eq!(coef.theta_cat[0], vec![1.5, -0.5]);
        assert_eq!(coef.alpha, 0.25);
    }

    #[test]
    fn malformed_solution_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sol.txt");
        std::fs::write(&path, "beta_1\n").unwrap();
        assert!(import_solution(&path).is_err());
        std::fs::write(&path, "beta_9 1.0\n").unwrap();
        let sol = import_solution(&path).unwrap();
        let schema = CategoricalSchema::with_widths(&[2]).unwrap();
        assert!(coefficients_from_solution(&schema, 0, &sol).is_err());
    }
}
