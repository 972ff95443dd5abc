//! Loader for the CORA citation network files.
//!
//! `content`: `id<TAB>f_1<TAB>...<TAB>f_d<TAB>label` with binary features.
//! `cites`: `cited_id<TAB>citing_id`. Citation direction is dropped when the
//! adjacency is built but kept in [`Dataset::raw_edges`] so the files can be
//! written back unchanged.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use super::{Dataset, DatasetParts};
use crate::error::{Error, Result};

pub fn load_cora(content_path: &Path, cites_path: &Path) -> Result<Dataset> {
    let content = fs::read_to_string(content_path)?;
    let cites = fs::read_to_string(cites_path)?;
    parse_cora(&content, &cites, content_path, cites_path)
}

pub fn parse_cora(content: &str, cites: &str, content_path: &Path, cites_path: &Path) -> Result<Dataset> {
    let parse_err = |path: &Path, line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut ids = Vec::new();
    let mut features = Vec::new();
    let mut label_strings = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut dim: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(parse_err(
                content_path,
                lineno,
                "expected id, features and label".into(),
            ));
        }
        let id = fields[0];
        let label = fields[fields.len() - 1];
        if id.is_empty() || label.is_empty() {
            return Err(parse_err(content_path, lineno, "empty id or label".into()));
        }
        let row = fields[1..fields.len() - 1]
            .iter()
            .map(|f| match *f {
                "0" => Ok(0.0),
                "1" => Ok(1.0),
                other => Err(parse_err(
                    content_path,
                    lineno,
                    format!("feature `{other}` is not 0 or 1"),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(
                    content_path,
                    lineno,
                    format!("expected {d} features, found {}", row.len()),
                ))
            }
            _ => {}
        }
        if index_of.insert(id.to_string(), ids.len()).is_some() {
            return Err(parse_err(content_path, lineno, format!("duplicate id `{id}`")));
        }
        ids.push(id.to_string());
        features.push(row);
        label_strings.push(label.to_string());
    }
    if ids.is_empty() {
        return Err(Error::Empty("CORA content file"));
    }

    let class_names: Vec<String> = label_strings
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let class_index: HashMap<&str, usize> = class_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let labels = label_strings.iter().map(|s| class_index[s.as_str()]).collect();

    let mut edges = Vec::new();
    for (lineno, line) in cites.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(cites_path, lineno, "expected `cited<TAB>citing`".into()));
        }
        let lookup = |id: &str| {
            index_of.get(id).copied().ok_or_else(|| Error::UnknownId {
                id: id.to_string(),
                line: lineno,
            })
        };
        edges.push((lookup(fields[0])?, lookup(fields[1])?));
    }

    Dataset::from_parts(DatasetParts {
        features,
        labels,
        attribute_obs: Vec::new(),
        edges,
        n_classes: class_names.len(),
        m_attribute_classes: 0,
        class_names,
        source_ids: ids,
    })
}

/// Writes the dataset back in CORA format. Returns `(content, cites)`.
pub fn write_cora(dataset: &Dataset) -> (String, String) {
    let mut content = String::new();
    for inst in dataset.instances() {
        content.push_str(&dataset.source_ids()[inst.id]);
        for f in &inst.features {
            content.push('\t');
            content.push_str(if *f != 0.0 { "1" } else { "0" });
        }
        content.push('\t');
        content.push_str(&dataset.class_names()[inst.true_label]);
        content.push('\n');
    }
    let mut cites = String::new();
    for &(a, b) in dataset.raw_edges() {
        cites.push_str(&dataset.source_ids()[a]);
        cites.push('\t');
        cites.push_str(&dataset.source_ids()[b]);
        cites.push('\n');
    }
    (content, cites)
}
