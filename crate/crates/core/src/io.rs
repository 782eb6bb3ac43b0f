//! File formats: graph and atom JSON, dense CSV matrices, dataset
//! directories and result files.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dictionary::DictionaryAtom;
use crate::error::{Error, Result};

/// On-disk graph: an edge list over `n` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub directed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
    /// Per-node labels, e.g. planted blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    /// Graph-level class used by dataset tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<i64>,
}

/// A graph as loaded from disk, before any representation is built.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGraph {
    /// Adjacency for edge lists, the raw matrix for dense CSV input.
    pub matrix: Array2<f64>,
    pub directed: bool,
    pub features: Option<Array2<f64>>,
    pub distribution: Option<Array1<f64>>,
    pub labels: Option<Vec<usize>>,
    pub class: Option<i64>,
}

impl GraphFile {
    /// Edge list of a 0/1 adjacency matrix. Undirected graphs list each edge
    /// once with `i < j`; self-loops are kept as `[i, i]`.
    pub fn from_adjacency(adjacency: ArrayView2<f64>, directed: bool) -> Self {
        let n = adjacency.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            let start = if directed { 0 } else { i };
            for j in start..n {
                if adjacency[[i, j]] != 0.0 {
                    edges.push([i, j]);
                }
            }
        }
        GraphFile { n, edges, directed, features: None, distribution: None, labels: None, class: None }
    }

    pub fn into_loaded(self) -> Result<LoadedGraph> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidInput("graph file has no nodes".into()));
        }
        let mut a = Array2::zeros((n, n));
        for &[i, j] in &self.edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge [{i}, {j}] out of range for {n} nodes")));
            }
            a[[i, j]] = 1.0;
            if !self.directed {
                a[[j, i]] = 1.0;
            }
        }
        let features = self.features.map(|f| rows_to_array(&f, "features")).transpose()?;
        if let Some(f) = &features {
            if f.nrows() != n {
                return Err(Error::Dimension(format!("{} feature rows for {n} nodes", f.nrows())));
            }
        }
        let distribution = self.distribution.map(Array1::from);
        if let Some(h) = &distribution {
            if h.len() != n {
                return Err(Error::Dimension(format!("distribution of length {} for {n} nodes", h.len())));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::Dimension(format!("{} labels for {n} nodes", l.len())));
            }
        }
        Ok(LoadedGraph { matrix: a, directed: self.directed, features, distribution, labels: self.labels, class: self.class })
    }
}

/// Sidecar metadata for a dense CSV matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DenseMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<i64>,
}

/// `g.csv` keeps its metadata in `g.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn rows_to_array(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension(format!("{what} rows have unequal lengths")));
    }
    Ok(Array2::from_shape_fn((r, c), |(i, j)| rows[i][j]))
}

fn array_to_rows(a: ArrayView2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Dense matrix as headerless CSV; values use the shortest exact decimal form.
pub fn write_matrix_csv(path: &Path, m: ArrayView2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows_to_array(&rows, "matrix")
}

pub fn save_graph(path: &Path, file: &GraphFile) -> Result<()> {
    write_json(path, file)
}

/// Loads a graph JSON, or a dense CSV plus its optional sidecar.
pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let matrix = read_matrix_csv(path)?;
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!("dense graph is {:?}", matrix.dim())));
        }
        let side = sidecar_path(path);
        let meta: DenseMeta = if side.exists() { read_json(&side)? } else { DenseMeta::default() };
        let directed = crate::graph::max_asymmetry(matrix.view()) > 0.0;
        let features = meta.features.map(|f| rows_to_array(&f, "features")).transpose()?;
        return Ok(LoadedGraph {
            matrix,
            directed,
            features,
            distribution: meta.distribution.map(Array1::from),
            labels: meta.labels,
            class: meta.class,
        });
    }
    let file: GraphFile = read_json(path)?;
    file.into_loaded()
}

/// Graph files of a dataset directory (`*.json` except sidecars, and
/// `*.csv`), sorted by file name.
pub fn dataset_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let is_graph = (name.ends_with(".json") && !name.ends_with(".meta.json")) || name.ends_with(".csv");
        if path.is_file() && is_graph {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no graph files in {}", dir.display())));
    }
    Ok(files)
}

pub fn load_dataset(dir: &Path) -> Result<Vec<(PathBuf, LoadedGraph)>> {
    dataset_files(dir)?
        .into_iter()
        .map(|p| load_graph(&p).map(|g| (p, g)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomFile {
    pub m: usize,
    pub structure: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
}

pub fn save_atom(path: &Path, atom: &DictionaryAtom) -> Result<()> {
    let file = AtomFile {
        m: atom.m(),
        structure: array_to_rows(atom.structure.view()),
        features: atom.features.as_ref().map(|f| array_to_rows(f.view())),
    };
    write_json(path, &file)
}

pub fn load_atom(path: &Path) -> Result<DictionaryAtom> {
    let file: AtomFile = read_json(path)?;
    let structure = rows_to_array(&file.structure, "structure")?;
    if structure.dim() != (file.m, file.m) {
        return Err(Error::Dimension(format!("atom structure is {:?}, expected m = {}", structure.dim(), file.m)));
    }
    let features = file.features.map(|f| rows_to_array(&f, "features")).transpose()?;
    DictionaryAtom::new(structure, features)
}

pub fn matrix_rows(a: ArrayView2<f64>) -> Vec<Vec<f64>> {
    array_to_rows(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn graph_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let a = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let mut file = GraphFile::from_adjacency(a.view(), false);
        file.labels = Some(vec![0, 0, 1]);
        file.distribution = Some(vec![0.2, 0.5, 0.3]);
        save_graph(&path, &file).unwrap();
        let back: GraphFile = read_json(&path).unwrap();
        assert_eq!(back, file);
        let loaded = load_graph(&path).unwrap();
        assert_eq!(loaded.matrix, a);
        assert_eq!(loaded.distribution.unwrap(), array![0.2, 0.5, 0.3]);
    }

    #[test]
    fn directed_edges_stay_one_way() {
        let file = GraphFile { n: 2, edges: vec![[0, 1]], directed: true, features: None, distribution: None, labels: None, class: None };
        assert_eq!(file.into_loaded().unwrap().matrix, array![[0.0, 1.0], [0.0, 0.0]]);
    }

    #[test]
    fn bad_edges_rejected() {
        let file = GraphFile { n: 2, edges: vec![[0, 2]], directed: false, features: None, distribution: None, labels: None, class: None };
        assert!(file.into_loaded().is_err());
    }

    #[test]
    fn dense_csv_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let c = array![[0.0, 0.1 + 0.2], [0.1 + 0.2, 1e-300]];
        write_matrix_csv(&path, c.view()).unwrap();
        write_json(&sidecar_path(&path), &DenseMeta { features: Some(vec![vec![1.0], vec![2.0]]), ..Default::default() })
            .unwrap();
        let g = load_graph(&path).unwrap();
        assert_eq!(g.matrix, c);
        assert_eq!(g.features.unwrap(), array![[1.0], [2.0]]);
        assert!(!g.directed);
    }

    #[test]
    fn atom_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("atom.json");
        let atom = DictionaryAtom::new(array![[0.5, 0.25], [0.25, 1.0 / 3.0]], Some(array![[0.1], [0.7]])).unwrap();
        save_atom(&path, &atom).unwrap();
        assert_eq!(load_atom(&path).unwrap(), atom);
    }

    #[test]
    fn dataset_listing_is_sorted_and_skips_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        for name in ["b.json", "a.json"] {
            save_graph(&dir.path().join(name), &GraphFile::from_adjacency(a.view(), false)).unwrap();
        }
        write_matrix_csv(&dir.path().join("c.csv"), a.view()).unwrap();
        write_json(&dir.path().join("c.meta.json"), &DenseMeta::default()).unwrap();
        let names: Vec<String> = dataset_files(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["a.json", "b.json", "c.csv"]);
    }
}
