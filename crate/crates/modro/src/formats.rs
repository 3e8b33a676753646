//! On-disk dataset formats: RFC-4180 CSV with a header row plus a JSON
//! manifest assigning columns to modality blocks.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::collections::HashSet;
use std::path::Path;

use modro_core::dataset::MultimodalDataset;
use modro_core::linalg::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One modality's column assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalitySpec {
    pub name: String,
    pub columns: Vec<String>,
}

/// Maps CSV columns to modality blocks and names the target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub modalities: Vec<ModalitySpec>,
    pub target: String,
}

impl DatasetManifest {
    /// Column assignments must be disjoint, non-empty, and must not claim
    /// the target column.
    pub fn validate(&self) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(Error::Schema("need at least one modality".into()));
        }
        let mut seen = HashSet::new();
        for spec in &self.modalities {
            if spec.columns.is_empty() {
                return Err(Error::Schema(format!(
                    "modality '{}' has no columns",
                    spec.name
                )));
            }
            for col in &spec.columns {
                if col == &self.target {
                    return Err(Error::Schema(format!(
                        "target column '{}' is assigned to modality '{}'",
                        col, spec.name
                    )));
                }
                if !seen.insert(col.clone()) {
                    return Err(Error::Schema(format!(
                        "column '{col}' assigned to more than one modality"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The natural manifest for an in-memory dataset.
    pub fn for_dataset(ds: &MultimodalDataset, target: &str) -> Self {
        DatasetManifest {
            modalities: ds
                .modality_names()
                .iter()
                .zip(ds.feature_names())
                .map(|(name, cols)| ModalitySpec {
                    name: name.clone(),
                    columns: cols.clone(),
                })
                .collect(),
            target: target.to_string(),
        }
    }
}

/// 17 significant digits: exact round-trip for every finite `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path)?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a dataset from a header CSV per the manifest's column assignment.
///
/// Blocks are assembled in manifest order; CSV row order is preserved.
pub fn load_dataset(manifest: &DatasetManifest, csv_path: &Path) -> Result<MultimodalDataset> {
    manifest.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(csv_path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let index_of = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let mut block_cols: Vec<Vec<usize>> = Vec::new();
    for spec in &manifest.modalities {
        let cols: Result<Vec<usize>> = spec.columns.iter().map(|c| index_of(c)).collect();
        block_cols.push(cols?);
    }
    let target_col = index_of(&manifest.target)?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        rows.push(record?);
    }
    let n = rows.len();
    for (r, record) in rows.iter().enumerate() {
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row: r + 1,
                expected: header.len(),
                got: record.len(),
            });
        }
    }

    let parse = |r: usize, c: usize| -> Result<f64> {
        let raw = rows[r].get(c).unwrap_or("");
        raw.trim().parse::<f64>().map_err(|_| Error::Parse {
            row: r + 1,
            column: header[c].clone(),
            value: raw.to_string(),
        })
    };

    let mut blocks = Vec::with_capacity(manifest.modalities.len());
    for cols in &block_cols {
        let mut data = Vec::with_capacity(n * cols.len());
        for r in 0..n {
            for &c in cols {
                data.push(parse(r, c)?);
            }
        }
        blocks.push(Matrix::from_vec(n, cols.len(), data).map_err(Error::Core)?);
    }
    let mut targets = Vec::with_capacity(n);
    for r in 0..n {
        targets.push(parse(r, target_col)?);
    }

    let modality_names = manifest.modalities.iter().map(|s| s.name.clone()).collect();
    let feature_names = manifest.modalities.iter().map(|s| s.columns.clone()).collect();
    Ok(MultimodalDataset::new(blocks, targets, modality_names, feature_names)?)
}

/// Writes the dataset as a header CSV: block columns in modality order,
/// target column last under `target_name`.
pub fn write_dataset(ds: &MultimodalDataset, target_name: &str, csv_path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(csv_path)?;
    let mut header: Vec<String> = Vec::with_capacity(ds.total_dim() + 1);
    for cols in ds.feature_names() {
        header.extend(cols.iter().cloned());
    }
    header.push(target_name.to_string());
    writer.write_record(&header)?;
    for r in 0..ds.n_samples() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for block in ds.blocks() {
            record.extend(block.row(r).iter().map(|&v| format_float(v)));
        }
        record.push(format_float(ds.targets()[r]));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use modro_core::synthetic::{gen_simulation, SimConfig};

    fn tiny_manifest() -> DatasetManifest {
        DatasetManifest {
            modalities: vec![ModalitySpec {
                name: "m1".into(),
                columns: vec!["a".into(), "b".into()],
            }],
            target: "t".into(),
        }
    }

    #[test]
    fn loads_tiny_csv_per_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("d.csv");
        std::fs::write(&csv_path, "a,b,t\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        let ds = load_dataset(&tiny_manifest(), &csv_path).unwrap();
        assert_eq!(ds.n_modalities(), 1);
        assert_eq!(ds.dims(), vec![2]);
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.block(0).row(1), &[4.0, 5.0]);
        assert_eq!(ds.targets(), &[3.0, 6.0, 9.0]);
    }

    #[test]
    fn missing_column_is_a_named_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("d.csv");
        std::fs::write(&csv_path, "a,b,t\n1,2,3\n").unwrap();
        let mut manifest = tiny_manifest();
        manifest.modalities[0].columns.push("q".into());
        let err = load_dataset(&manifest, &csv_path).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "q"), "{err}");
    }

    #[test]
    fn bad_cell_is_a_located_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("d.csv");
        std::fs::write(&csv_path, "a,b,t\n1,2,3\n4,oops,6\n").unwrap();
        let err = load_dataset(&tiny_manifest(), &csv_path).unwrap_err();
        match err {
            Error::Parse { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
                assert_eq!(value, "oops");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn disjointness_and_target_assignment_are_enforced() {
        let mut overlap = tiny_manifest();
        overlap.modalities.push(ModalitySpec {
            name: "m2".into(),
            columns: vec!["b".into()],
        });
        assert!(matches!(overlap.validate(), Err(Error::Schema(_))));

        let mut claims_target = tiny_manifest();
        claims_target.modalities[0].columns.push("t".into());
        assert!(matches!(claims_target.validate(), Err(Error::Schema(_))));
    }

    #[test]
    fn simulation_dataset_round_trips_exactly() {
        let ds = gen_simulation(&SimConfig::new(20, 1.5, 7)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("sim.csv");
        write_dataset(&ds, "y", &csv_path).unwrap();
        let manifest = DatasetManifest::for_dataset(&ds, "y");
        let back = load_dataset(&manifest, &csv_path).unwrap();
        assert_eq!(back, ds);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(128))]
        #[test]
        fn load_after_write_is_identity_on_random_datasets(
            dims in proptest::collection::vec(1usize..=4, 1..=4),
            rows in 1usize..=12,
            cells in proptest::collection::vec(
                proptest::num::f64::NORMAL
                    | proptest::num::f64::SUBNORMAL
                    | proptest::num::f64::ZERO,
                256,
            ),
        ) {
            let mut next = cells.into_iter().cycle();
            let mut blocks = Vec::new();
            let mut feature_names = Vec::new();
            let mut modality_names = Vec::new();
            for (k, &d) in dims.iter().enumerate() {
                let data: Vec<f64> = (0..rows * d).map(|_| next.next().unwrap()).collect();
                blocks.push(Matrix::from_vec(rows, d, data).unwrap());
                feature_names.push((0..d).map(|j| format!("m{k}_c{j}")).collect());
                modality_names.push(format!("m{k}"));
            }
            let targets: Vec<f64> = (0..rows).map(|_| next.next().unwrap()).collect();
            let ds = MultimodalDataset::new(blocks, targets, modality_names, feature_names)
                .unwrap();

            let dir = tempfile::tempdir().unwrap();
            let csv_path = dir.path().join("d.csv");
            write_dataset(&ds, "y", &csv_path).unwrap();
            let manifest = DatasetManifest::for_dataset(&ds, "y");
            let back = load_dataset(&manifest, &csv_path).unwrap();
            proptest::prop_assert_eq!(back, ds);
        }
    }

    #[test]
    fn format_float_round_trips_awkward_values() {
        for v in [
            0.1,
            -1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
            -0.0,
            123456789.123456789,
        ] {
            let back: f64 = format_float(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
    }
}
