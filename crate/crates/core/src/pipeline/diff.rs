//! Token-level diff between an original and an adversarial transcript,
//! rendered as an aligned side-by-side report.

use crate::corpus::Transcript;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffOp {
    Kept(String),
    Removed(String),
    Inserted(String),
}

/// Longest-common-subsequence alignment of two token streams.
pub fn diff_tokens(original: &[String], adversarial: &[String]) -> Vec<DiffOp> {
    let n = original.len();
    let m = adversarial.len();
    // lcs[i][j] = LCS length of original[i..] and adversarial[j..]
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if original[i] == adversarial[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let mut ops = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if original[i] == adversarial[j] {
            ops.push(DiffOp::Kept(original[i].clone()));
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            ops.push(DiffOp::Removed(original[i].clone()));
            i += 1;
        } else {
            ops.push(DiffOp::Inserted(adversarial[j].clone()));
            j += 1;
        }
    }
    ops.extend(original[i..].iter().cloned().map(DiffOp::Removed));
    ops.extend(adversarial[j..].iter().cloned().map(DiffOp::Inserted));
    ops
}

/// Renders a side-by-side token alignment: kept tokens appear in both
/// columns, removals only on the left, insertions only on the right.
pub fn diff_report(
    original: &Transcript,
    adversarial: &Transcript,
) -> Result<String, PipelineError> {
    if original.text.is_empty() || adversarial.text.is_empty() {
        return Err(PipelineError::Config(format!(
            "diff requires non-empty texts (`{}` / `{}`)",
            original.id, adversarial.id
        )));
    }
    let tokenize =
        |t: &Transcript| t.text.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let original_tokens = tokenize(original);
    let adversarial_tokens = tokenize(adversarial);
    let ops = diff_tokens(&original_tokens, &adversarial_tokens);

    let width = ops
        .iter()
        .map(|op| match op {
            DiffOp::Kept(t) | DiffOp::Removed(t) | DiffOp::Inserted(t) => t.chars().count(),
        })
        .max()
        .unwrap_or(8)
        .max(8);

    let mut out = String::new();
    out.push_str(&format!(
        "{:<w$}   {:<w$}\n{:-<w$}   {:-<w$}\n",
        "original", "adversarial", "", "",
        w = width + 2
    ));
    for op in &ops {
        match op {
            DiffOp::Kept(t) => {
                out.push_str(&format!("  {t:<w$}   {t:<w$}\n", w = width));
            }
            DiffOp::Removed(t) => {
                out.push_str(&format!("- {t:<w$}   {:<w$}\n", "", w = width));
            }
            DiffOp::Inserted(t) => {
                out.push_str(&format!("  {:<w$} + {t:<w$}\n", "", w = width));
            }
        }
    }
    Ok(out)
}
