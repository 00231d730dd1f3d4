//! q-expansion files: `n,value` CSV with a JSON sidecar holding the metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::characters::DirichletCharacter;
use crate::cyclotomic::CyclotomicNumber;
use crate::elliptic::{QError, QExpansion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QExpMeta {
    pub k: i64,
    #[serde(rename = "N")]
    pub level: u64,
    pub character: String,
    pub precision: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    n: usize,
    value: String,
}

/// `f.csv` pairs with `f.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn qexp_to_csv(f: &QExpansion) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (n, v) in f.coeffs().iter().enumerate() {
        w.serialize(Row { n, value: v.to_string() }).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf8")
}

pub fn qexp_meta(f: &QExpansion) -> QExpMeta {
    QExpMeta {
        k: f.weight(),
        level: f.level(),
        character: f.character().id(),
        precision: f.precision(),
    }
}

/// Rows missing from the CSV are zero; rows past the precision are an error.
pub fn qexp_from_parts(csv_text: &str, meta: &QExpMeta) -> Result<QExpansion, QError> {
    let chi = DirichletCharacter::from_id(&meta.character)?;
    let mut coeffs = vec![CyclotomicNumber::zero(); meta.precision + 1];
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    for row in r.deserialize::<Row>() {
        let row = row.map_err(|e| QError::Parse(e.to_string()))?;
        if row.n > meta.precision {
            return Err(QError::Parse(format!(
                "row n = {} beyond precision {}",
                row.n, meta.precision
            )));
        }
        coeffs[row.n] = row.value.parse()?;
    }
    Ok(QExpansion::new(meta.k, meta.level, chi, coeffs))
}

pub fn write_qexp(f: &QExpansion, csv_path: &Path) -> std::io::Result<()> {
    std::fs::write(csv_path, qexp_to_csv(f))?;
    let meta = serde_json::to_string_pretty(&qexp_meta(f)).expect("meta serializes");
    std::fs::write(sidecar_path(csv_path), meta + "\n")
}

pub fn read_qexp(csv_path: &Path) -> Result<QExpansion, QError> {
    let io = |e: std::io::Error, p: &Path| QError::Parse(format!("{}: {e}", p.display()));
    let side = sidecar_path(csv_path);
    let meta_text = std::fs::read_to_string(&side).map_err(|e| io(e, &side))?;
    let meta: QExpMeta =
        serde_json::from_str(&meta_text).map_err(|e| QError::Parse(format!("{}: {e}", side.display())))?;
    let text = std::fs::read_to_string(csv_path).map_err(|e| io(e, csv_path))?;
    qexp_from_parts(&text, &meta)
}
