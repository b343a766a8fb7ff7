use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use super::{read_to_string, IngestError};

/// Library-level dependency edges plus the library → repository map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencySnapshot {
    /// `(dependent, dependency)` pairs, first-occurrence order, no self-edges or duplicates.
    pub edges: Vec<(String, String)>,
    pub library_to_repo: BTreeMap<String, Option<String>>,
    /// Every library named anywhere in the inputs.
    pub libraries: BTreeSet<String>,
    pub self_edges_dropped: usize,
}

impl DependencySnapshot {
    pub fn repo_of(&self, library: &str) -> Option<&str> {
        self.library_to_repo.get(library).and_then(|r| r.as_deref())
    }
}

fn csv_rows(content: &str) -> impl Iterator<Item = (usize, Result<csv::StringRecord, csv::Error>)> + '_ {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes())
        .into_records()
        .map(|r| {
            let line = r
                .as_ref()
                .ok()
                .and_then(|rec| rec.position())
                .map_or(0, |p| p.line() as usize);
            (line, r)
        })
}

fn parse_edges(content: &str, snap: &mut DependencySnapshot) -> Result<(), IngestError> {
    let mut seen = HashSet::new();
    for (idx, (line, row)) in csv_rows(content).enumerate() {
        let row = row.map_err(|e| {
            IngestError::MalformedRecord(e.position().map_or(idx + 1, |p| p.line() as usize))
        })?;
        if idx == 0 && row.iter().eq(["dependent", "dependency"]) {
            continue;
        }
        if row.len() != 2 || row[0].is_empty() || row[1].is_empty() {
            return Err(IngestError::MalformedRecord(line));
        }
        let (a, b) = (row[0].to_string(), row[1].to_string());
        snap.libraries.insert(a.clone());
        snap.libraries.insert(b.clone());
        if a == b {
            snap.self_edges_dropped += 1;
            continue;
        }
        if seen.insert((a.clone(), b.clone())) {
            snap.edges.push((a, b));
        }
    }
    Ok(())
}

fn parse_library_map(content: &str, snap: &mut DependencySnapshot) -> Result<(), IngestError> {
    for (idx, (line, row)) in csv_rows(content).enumerate() {
        let row = row.map_err(|_| IngestError::MalformedRecord(idx + 1))?;
        if idx == 0 && row.iter().eq(["library", "repo"]) {
            continue;
        }
        if row.is_empty() || row.len() > 2 || row[0].is_empty() {
            return Err(IngestError::MalformedRecord(line));
        }
        let repo = row.get(1).filter(|r| !r.is_empty()).map(str::to_string);
        snap.libraries.insert(row[0].to_string());
        snap.library_to_repo.insert(row[0].to_string(), repo);
    }
    Ok(())
}

pub fn parse_dependency_snapshot(
    edges: &str,
    library_map: Option<&str>,
) -> Result<DependencySnapshot, IngestError> {
    let mut snap = DependencySnapshot::default();
    parse_edges(edges, &mut snap)?;
    if let Some(map) = library_map {
        parse_library_map(map, &mut snap)?;
    }
    if snap.self_edges_dropped > 0 {
        log::warn!("dropped {} self-edges", snap.self_edges_dropped);
    }
    Ok(snap)
}

/// Reads `dependent,dependency` edges and, optionally, the `library,repo` companion map.
pub fn read_dependency_snapshot(
    edges_path: impl AsRef<Path>,
    map_path: Option<&Path>,
) -> Result<DependencySnapshot, IngestError> {
    let edges = read_to_string(edges_path.as_ref())?;
    let map = map_path.map(read_to_string).transpose()?;
    parse_dependency_snapshot(&edges, map.as_deref())
}
