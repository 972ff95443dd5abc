//! Line-oriented text format for generated datasets.
//!
//! ```text
//! n m d count seed
//! id<TAB>true_label<TAB>assigned|-<TAB>f_1 .. f_d<TAB>link ids<TAB>attr_obs
//! ```
//!
//! Features and link ids are space separated. `attr_obs` holds one
//! space-separated distribution over the `m` attribute classes per
//! observation, observations separated by `|`; empty when there are none.

use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, DatasetParts};
use crate::error::{Error, Result};

pub fn write_dataset(dataset: &Dataset, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        dataset.n_classes(),
        dataset.m_attribute_classes(),
        dataset.feature_dim(),
        dataset.len(),
        seed
    );
    for inst in dataset.instances() {
        let features: Vec<String> = inst.features.iter().map(|f| f.to_string()).collect();
        let links: Vec<String> = inst.link_ids.iter().map(|l| l.to_string()).collect();
        let attrs: Vec<String> = inst
            .attribute_obs
            .iter()
            .map(|o| o.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        let assigned = inst.assigned_label.map_or("-".to_string(), |a| a.to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            inst.id,
            inst.true_label,
            assigned,
            features.join(" "),
            links.join(" "),
            attrs.join("|")
        );
    }
    out
}

/// Parses [`write_dataset`] output. Returns the dataset and the header seed.
pub fn read_dataset(text: &str, path: &Path) -> Result<(Dataset, u64)> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let nums: Vec<u64> = header
        .split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|e| err(1, format!("header: {e}"))))
        .collect::<Result<_>>()?;
    let [n, m, d, count, seed] = nums[..] else {
        return Err(err(1, "header must be `n m d count seed`".into()));
    };
    let (n, m, d, count) = (n as usize, m as usize, d as usize, count as usize);

    let mut parts = DatasetParts {
        n_classes: n,
        m_attribute_classes: m,
        ..Default::default()
    };
    let mut assigned = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(err(lineno, format!("expected 6 fields, found {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|_| err(lineno, "bad id".into()))?;
        if id != i {
            return Err(err(lineno, format!("expected id {i}, found {id}")));
        }
        parts
            .labels
            .push(fields[1].parse().map_err(|_| err(lineno, "bad label".into()))?);
        assigned.push(match fields[2] {
            "-" => None,
            s => Some(s.parse().map_err(|_| err(lineno, "bad assigned label".into()))?),
        });
        let features: Vec<f64> = parse_list(fields[3]).map_err(|e| err(lineno, e))?;
        if features.len() != d {
            return Err(err(lineno, format!("expected {d} features, found {}", features.len())));
        }
        parts.features.push(features);
        let links: Vec<usize> = parse_list(fields[4]).map_err(|e| err(lineno, e))?;
        parts
            .edges
            .extend(links.into_iter().filter(|&b| b > id).map(|b| (id, b)));
        let obs = if fields[5].is_empty() {
            Vec::new()
        } else {
            fields[5]
                .split('|')
                .map(parse_list::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(lineno, e))?
        };
        parts.attribute_obs.push(obs);
    }
    if parts.labels.len() != count {
        return Err(err(
            1,
            format!("header declares {count} instances, found {}", parts.labels.len()),
        ));
    }
    parts.edges.sort_unstable();
    let dataset = Dataset::from_parts(parts)?.with_assigned_labels(&assigned)?;
    Ok((dataset, seed))
}

fn parse_list<T: std::str::FromStr>(field: &str) -> std::result::Result<Vec<T>, String> {
    field
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| format!("cannot parse `{t}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticConfig};

    #[test]
    fn generated_dataset_round_trips() {
        let config = SyntheticConfig {
            n_classes: 3,
            m_attribute_classes: 2,
            per_class: 6,
            feature_dim: 3,
            attributes_per_instance: 1,
            links_per_instance: 3,
            seed: 5,
            ..Default::default()
        };
        let (ds, _) = generate_synthetic(&config).unwrap();
        let text = write_dataset(&ds, 5);
        assert!(text.starts_with("3 2 3 18 5\n"));
        let (back, seed) = read_dataset(&text, Path::new("x")).unwrap();
        assert_eq!(seed, 5);
        assert_eq!(back, ds);
        assert_eq!(write_dataset(&back, 5), text);
    }

    #[test]
    fn truncated_file_rejected() {
        let err = read_dataset("2 0 1 3 0\n0\t0\t-\t1\t\t\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
