//! CSV ingestion.
//!
//! Two comma-separated layouts are accepted, each with an optional header
//! row that is recognised by a non-numeric outcome field:
//!
//! - triplet: three binary columns, one row per triplet;
//! - clustered: `cluster_id,outcome`, one row per unit.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::TripletData;

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        row,
        token: String::new(),
        message: e.to_string(),
    }
}

fn parse_binary(token: &str, row: usize) -> Result<u8> {
    match token {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(Error::Parse {
            row,
            token: token.to_string(),
            message: "expected 0 or 1".into(),
        }),
    }
}

fn looks_numeric(token: &str) -> bool {
    token.parse::<f64>().is_ok()
}

pub fn parse_triplets<R: Read>(input: R, source: &str) -> Result<TripletData> {
    let mut rows = Vec::new();
    for (i, record) in reader(input).records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(i + 1);
        if i == 0 && record.iter().any(|t| !looks_numeric(t)) {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse {
                row: line,
                token: record.iter().collect::<Vec<_>>().join(","),
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let mut row = [0u8; 3];
        for (slot, token) in row.iter_mut().zip(record.iter()) {
            *slot = parse_binary(token, line)?;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(source.to_string()));
    }
    TripletData::new(rows)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads a triplet CSV: three 0/1 columns per row.
pub fn read_triplet_csv(path: impl AsRef<Path>) -> Result<TripletData> {
    let path = path.as_ref();
    let file = open(path)?;
    parse_triplets(file, &path.display().to_string())
}

/// Unit-level outcomes tagged with their cluster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterTable {
    rows: Vec<(String, u8)>,
}

impl ClusterTable {
    pub fn new(rows: Vec<(String, u8)>) -> Result<Self> {
        if let Some((id, v)) = rows.iter().find(|(_, v)| *v > 1) {
            return Err(Error::InvalidInput(format!(
                "cluster {id:?} has non-binary outcome {v}"
            )));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(String, u8)] {
        &self.rows
    }

    /// Outcomes per cluster, in file order, keyed in lexicographic order.
    pub fn grouped(&self) -> BTreeMap<&str, Vec<u8>> {
        let mut map: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
        for (id, v) in &self.rows {
            map.entry(id.as_str()).or_default().push(*v);
        }
        map
    }
}

pub fn parse_clusters<R: Read>(input: R, source: &str) -> Result<ClusterTable> {
    let mut rows = Vec::new();
    for (i, record) in reader(input).records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(i + 1);
        if record.len() != 2 {
            return Err(Error::Parse {
                row: line,
                token: record.iter().collect::<Vec<_>>().join(","),
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        if i == 0 && !looks_numeric(&record[1]) {
            continue;
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row: line,
                token: id,
                message: "empty cluster id".into(),
            });
        }
        rows.push((id, parse_binary(&record[1], line)?));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(source.to_string()));
    }
    ClusterTable::new(rows)
}

/// Reads a clustered CSV with columns `cluster_id,outcome`.
pub fn read_cluster_csv(path: impl AsRef<Path>) -> Result<ClusterTable> {
    let path = path.as_ref();
    let file = open(path)?;
    parse_clusters(file, &path.display().to_string())
}

/// Generator for one cluster, keyed by the seed and the cluster id only.
fn cluster_rng(seed: u64, cluster_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(cluster_id.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Draws three outcomes per cluster uniformly without replacement. Rows come
/// out in lexicographic cluster-id order.
pub fn subsample_clusters(table: &ClusterTable, seed: u64) -> Result<TripletData> {
    let groups = table.grouped();
    let small: Vec<String> = groups
        .iter()
        .filter(|(_, v)| v.len() < 3)
        .map(|(id, _)| id.to_string())
        .collect();
    if !small.is_empty() {
        return Err(Error::ClusterTooSmall(small));
    }
    if groups.is_empty() {
        return Err(Error::InvalidInput("no clusters".into()));
    }
    let rows = groups
        .iter()
        .map(|(id, outcomes)| {
            let mut rng = cluster_rng(seed, id);
            let picked = index::sample(&mut rng, outcomes.len(), 3);
            let mut row = [0u8; 3];
            for (slot, i) in row.iter_mut().zip(picked.iter()) {
                *slot = outcomes[i];
            }
            row
        })
        .collect();
    TripletData::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_with_and_without_header() {
        let d = parse_triplets("a,b,c\n1,0,1\n0,0,0\n".as_bytes(), "t").unwrap();
        assert_eq!(d.rows(), &[[1, 0, 1], [0, 0, 0]]);
        let d = parse_triplets("1, 1, 1\n\n0,1,0\n".as_bytes(), "t").unwrap();
        assert_eq!(d.n(), 2);
    }

    #[test]
    fn triplet_parse_errors() {
        let err = parse_triplets("1,0,0\n1,2,0\n".as_bytes(), "t").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                row: 2,
                token: "2".into(),
                message: "expected 0 or 1".into()
            }
        );
        let err = parse_triplets("1,0\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
        assert!(matches!(
            parse_triplets("".as_bytes(), "t"),
            Err(Error::EmptyFile(_))
        ));
        assert!(matches!(
            parse_triplets("x,y,z\n".as_bytes(), "t"),
            Err(Error::EmptyFile(_))
        ));
    }

    #[test]
    fn clusters_parse_and_group() {
        let t = parse_clusters("school,caries_free\nb,1\na,0\nb,0\n".as_bytes(), "c").unwrap();
        let g = t.grouped();
        assert_eq!(g.keys().copied().collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(g["b"], vec![1, 0]);
        assert!(parse_clusters("a,3\n".as_bytes(), "c").is_err());
    }

    #[test]
    fn subsample_forced_and_deterministic() {
        let mut rows = vec![];
        for v in [1, 0, 1] {
            rows.push(("only".to_string(), v));
        }
        let t = ClusterTable::new(rows).unwrap();
        for seed in 0..5 {
            let d = subsample_clusters(&t, seed).unwrap();
            let mut row = d.rows()[0];
            row.sort();
            assert_eq!(row, [0, 1, 1]);
        }
    }

    #[test]
    fn subsample_reports_small_clusters() {
        let t = ClusterTable::new(vec![
            ("a".into(), 1),
            ("b".into(), 1),
            ("b".into(), 0),
            ("b".into(), 0),
        ])
        .unwrap();
        assert_eq!(
            subsample_clusters(&t, 1),
            Err(Error::ClusterTooSmall(vec!["a".into()]))
        );
    }

    #[test]
    fn subsample_is_keyed_per_cluster() {
        let mut rows = vec![];
        for c in 0..10 {
            for k in 0..8 {
                rows.push((format!("c{c:02}"), ((k * 7 + c) % 3 == 0) as u8));
            }
        }
        let full = ClusterTable::new(rows.clone()).unwrap();
        let reduced =
            ClusterTable::new(rows.into_iter().filter(|(id, _)| id != "c03").collect()).unwrap();
        let a = subsample_clusters(&full, 42).unwrap();
        let b = subsample_clusters(&reduced, 42).unwrap();
        assert_eq!(a.n(), 10);
        assert_eq!(b.n(), 9);
        let mut expected = a.rows().to_vec();
        expected.remove(3);
        assert_eq!(b.rows(), expected.as_slice());
        assert_eq!(a, subsample_clusters(&full, 42).unwrap());
    }
}
