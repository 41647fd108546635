//! Pool ingestion from and serialization to CSV.
//!
//! Schema: UTF-8, comma-separated, one header row. Feature columns are
//! numeric and nonnegative; an empty cell means the entry is missing. One
//! label column is required: `prob` (return probability in `[0, 1]`) or
//! `label` (outcome in `{0, 1}`). An optional `group_size` column holds
//! positive integers. Any feature column whose maximum exceeds 4 is rescaled
//! by `4 / max` on ingestion.

use std::fs;
use std::path::Path;

use crate::datagen::{ApplicantPool, PoolSample, FEATURE_SPAN};
use crate::domain::FeatureVector;
use crate::error::{Error, Result};

enum LabelKind {
    Prob,
    Label,
}

/// Read a pool from `path`.
pub fn ingest_csv_pool(path: &Path) -> Result<ApplicantPool> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        row: 1,
        column: "-".into(),
        message: "missing header row".into(),
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();

    let mut label_col = None;
    let mut group_col = None;
    let mut feature_cols = Vec::new();
    for (idx, name) in columns.iter().enumerate() {
        match *name {
            "prob" => label_col = Some((idx, LabelKind::Prob)),
            "label" => label_col = Some((idx, LabelKind::Label)),
            "group_size" => group_col = Some(idx),
            _ => feature_cols.push((idx, name.to_string())),
        }
    }
    let (label_idx, label_kind) = label_col.ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        row: 1,
        column: "prob/label".into(),
        message: "no 'prob' or 'label' column in header".into(),
    })?;
    if feature_cols.is_empty() {
        return Err(Error::Parse {
            path: path_str.clone(),
            row: 1,
            column: "-".into(),
            message: "no feature columns in header".into(),
        });
    }

    let parse_err = |row: usize, column: &str, message: String| Error::Parse {
        path: path_str.clone(),
        row,
        column: column.to_string(),
        message,
    };

    let mut rows: Vec<(Vec<Option<f64>>, f64, u32)> = Vec::new();
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row_no = line_idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(parse_err(
                row_no,
                "-",
                format!("expected {} cells, found {}", columns.len(), cells.len()),
            ));
        }
        let mut features = Vec::with_capacity(feature_cols.len());
        for (idx, name) in &feature_cols {
            let cell = cells[*idx];
            if cell.is_empty() {
                features.push(None);
                continue;
            }
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_err(row_no, name, format!("non-numeric cell '{cell}'")))?;
            if !value.is_finite() || value < 0.0 {
                return Err(parse_err(
                    row_no,
                    name,
                    format!("feature value {value} out of range"),
                ));
            }
            features.push(Some(value));
        }
        let label_cell = cells[label_idx];
        if label_cell.is_empty() {
            return Err(parse_err(row_no, "prob/label", "empty label cell".into()));
        }
        let prob = match label_kind {
            LabelKind::Prob => {
                let p: f64 = label_cell.parse().map_err(|_| {
                    parse_err(row_no, "prob", format!("non-numeric cell '{label_cell}'"))
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(parse_err(
                        row_no,
                        "prob",
                        format!("probability {p} outside [0, 1]"),
                    ));
                }
                p
            }
            LabelKind::Label => match label_cell {
                "0" => 0.0,
                "1" => 1.0,
                other => {
                    return Err(parse_err(
                        row_no,
                        "label",
                        format!("label '{other}' not in {{0, 1}}"),
                    ))
                }
            },
        };
        let group_size = match group_col {
            None => 1,
            Some(idx) => {
                let cell = cells[idx];
                let g: u32 = cell.parse().map_err(|_| {
                    parse_err(row_no, "group_size", format!("non-numeric cell '{cell}'"))
                })?;
                if g == 0 {
                    return Err(parse_err(
                        row_no,
                        "group_size",
                        "group size must be positive".into(),
                    ));
                }
                g
            }
        };
        rows.push((features, prob, group_size));
    }

    // Rescale any feature column whose maximum exceeds the nominal span.
    for col in 0..feature_cols.len() {
        let max = rows
            .iter()
            .filter_map(|(f, _, _)| f[col])
            .fold(f64::NEG_INFINITY, f64::max);
        if max > FEATURE_SPAN {
            for (features, _, _) in &mut rows {
                if let Some(v) = &mut features[col] {
                    *v = *v * FEATURE_SPAN / max;
                }
            }
        }
    }

    let samples = rows
        .into_iter()
        .map(|(features, prob, group_size)| {
            Ok(PoolSample {
                features: FeatureVector::new(features)?,
                true_return_prob: prob,
                group_size,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ApplicantPool::from_samples(
        samples,
        format!("csv:{path_str}"),
        0,
    ))
}

/// Write `pool` as `pool.csv` plus a `pool.meta` sidecar under `dir`.
pub fn export_pool_csv(pool: &ApplicantPool, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = pool.feature_dim();
    let mut out = String::new();
    for j in 1..=n {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("prob,group_size\n");
    for sample in pool.samples() {
        for e in sample.features.entries() {
            if let Some(v) = e {
                out.push_str(&format!("{v}"));
            }
            out.push(',');
        }
        out.push_str(&format!(
            "{},{}\n",
            sample.true_return_prob, sample.group_size
        ));
    }
    let csv_path = dir.join("pool.csv");
    fs::write(&csv_path, out).map_err(|e| Error::io(&csv_path, e))?;

    let meta = format!(
        "spec = {}\nseed = {}\nsize = {}\nfeature_dim = {}\n",
        pool.spec_name(),
        pool.seed(),
        pool.len(),
        n
    );
    let meta_path = dir.join("pool.meta");
    fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}
