//! Graph containers, the positive-semidefinite projection, edge-list I/O
//! and edge down-sampling.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};
use crate::rng;

/// Symmetric tolerance accepted by [`PsdGraphMatrix::new`].
pub const PSD_SYMMETRY_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted by [`PsdGraphMatrix::new`].
pub const PSD_EIGEN_TOL: f64 = -1e-8;

/// Adjacency matrix of an undirected, unweighted graph without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    entries: DMatrix<f64>,
}

impl AdjacencyMatrix {
    /// Validates a dense 0/1 matrix: square, symmetric, binary, zero diagonal.
    pub fn from_dense(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "adjacency matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::NotBinary {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        let (row, col, delta) = linalg::max_asymmetry(&entries);
        if delta != 0.0 {
            return Err(Error::NotSymmetric { row, col, delta });
        }
        if let Some(i) = (0..n).find(|&i| entries[(i, i)] != 0.0) {
            return Err(Error::SelfLoop(i));
        }
        Ok(Self { entries })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut entries = DMatrix::from_element(n, n, 1.0);
        entries.fill_diagonal(0.0);
        Self { entries }
    }

    /// Builds a graph from unordered pairs; duplicates collapse.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut entries = DMatrix::zeros(n, n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    limit: n,
                });
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            entries[(i, j)] = 1.0;
            entries[(j, i)] = 1.0;
        }
        Ok(Self { entries })
    }

    /// Upper-triangle constructor used by samplers that already guarantee
    /// the invariants.
    pub(crate) fn from_dense_unchecked(entries: DMatrix<f64>) -> Self {
        debug_assert!(Self::from_dense(entries.clone()).is_ok());
        Self { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.entries[(i, j)] != 0.0
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| ((i + 1)..n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn to_edge_list(&self) -> EdgeList {
        EdgeList {
            n: self.n(),
            edges: self.edges().collect(),
        }
    }

    /// Edge density over the `n(n-1)/2` possible pairs.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }
}

/// Symmetric positive-semidefinite matrix, typically the positive part of
/// an adjacency matrix. Caches its squared Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdGraphMatrix {
    entries: DMatrix<f64>,
    norm_sq: f64,
}

impl PsdGraphMatrix {
    /// Validates symmetry (1e-10 entrywise) and eigenvalues (≥ -1e-8).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "PSD matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let (row, col, delta) = linalg::max_asymmetry(&entries);
        if delta.is_nan() || delta > PSD_SYMMETRY_TOL {
            return Err(Error::NotSymmetric { row, col, delta });
        }
        let eig = SymEigen::new(&entries)?;
        if let Some(&min) = eig.values.as_slice().last() {
            if min < PSD_EIGEN_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(Self::from_trusted(entries))
    }

    pub(crate) fn from_trusted(entries: DMatrix<f64>) -> Self {
        let norm_sq = entries.norm_squared();
        Self { entries, norm_sq }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// `‖A₊‖_F²`
    pub fn norm_squared(&self) -> f64 {
        self.norm_sq
    }
}

/// `V D₊ Vᵀ` for `A = V D Vᵀ`: drops the negative part of the spectrum.
pub fn positive_part(a: &AdjacencyMatrix) -> Result<PsdGraphMatrix> {
    project_psd(a.as_matrix())
}

/// [`positive_part`] for arbitrary real symmetric input (asymmetry up to
/// 1e-10 is tolerated and averaged away).
pub fn positive_part_symmetric(m: &DMatrix<f64>) -> Result<PsdGraphMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "positive part needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (row, col, delta) = linalg::max_asymmetry(m);
    if delta.is_nan() || delta > PSD_SYMMETRY_TOL {
        return Err(Error::NotSymmetric { row, col, delta });
    }
    project_psd(m)
}

fn project_psd(m: &DMatrix<f64>) -> Result<PsdGraphMatrix> {
    let eig = SymEigen::new(m)?;
    let keep = eig.values.iter().take_while(|&&v| v > 0.0).count();
    let vectors = eig.vectors.columns(0, keep).into_owned();
    let weights: DVector<f64> = eig.values.rows(0, keep).into_owned();
    Ok(PsdGraphMatrix::from_trusted(linalg::reconstruct(&vectors, &weights)))
}

/// Uniformly random subset of exactly `target` of the graph's edges.
pub fn downsample_edges(a: &AdjacencyMatrix, target: usize, seed: u64) -> Result<AdjacencyMatrix> {
    let edges: Vec<(usize, usize)> = a.edges().collect();
    if target > edges.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot down-sample to {target} edges: graph has only {}",
            edges.len()
        )));
    }
    if target == edges.len() {
        return Ok(a.clone());
    }
    let mut rng = rng::seeded(seed);
    let chosen = index::sample(&mut rng, edges.len(), target);
    AdjacencyMatrix::from_edges(a.n(), chosen.iter().map(|i| edges[i]))
}

/// Down-samples every graph to the smallest edge count among them. Graph
/// `g` uses the child seed `derive_seed(seed, g)`.
pub fn match_edge_counts(graphs: &[AdjacencyMatrix], seed: u64) -> Result<Vec<AdjacencyMatrix>> {
    let Some(target) = graphs.iter().map(AdjacencyMatrix::edge_count).min() else {
        return Ok(Vec::new());
    };
    graphs
        .iter()
        .enumerate()
        .map(|(g, a)| downsample_edges(a, target, rng::derive_seed(seed, g as u64)))
        .collect()
}

/// Node count plus a set of unordered pairs `(i, j)`, stored with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeList {
    pub fn new<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = BTreeSet::new();
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    limit: n,
                });
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            edges.insert((i.min(j), i.max(j)));
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn to_adjacency(&self) -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(self.n, self.edges()).expect("edge list invariants hold")
    }
}

/// Options for [`read_edge_list`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListFormat {
    /// Indices in the file start at 1 and are shifted down on read.
    pub one_based: bool,
}

/// Result of parsing an edge-list file: the edges plus non-fatal warnings
/// (duplicate pairs).
#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub list: EdgeList,
    pub warnings: Vec<String>,
}

/// Parses `i j` pairs separated by whitespace and/or commas. An optional
/// first line `n=<count>` fixes the node count; otherwise it is one more
/// than the largest index seen. Blank lines and `#` comments are skipped.
pub fn read_edge_list<R: BufRead>(reader: R, format: EdgeListFormat) -> Result<ParsedEdgeList> {
    let mut declared_n: Option<usize> = None;
    let mut seen_content = false;
    let mut edges = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut max_index: Option<usize> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if let Some(n) = parse_header(trimmed, line_no)? {
                declared_n = Some(n);
                continue;
            }
        }
        let tokens: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two node indices, found {} field(s)", tokens.len()),
            });
        }
        let mut pair = [0usize; 2];
        for (slot, tok) in pair.iter_mut().zip(&tokens) {
            let raw: usize = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{tok}` is not a non-negative integer"),
            })?;
            *slot = if format.one_based {
                raw.checked_sub(1).ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "index 0 in a 1-based edge list".into(),
                })?
            } else {
                raw
            };
        }
        let [i, j] = pair;
        if i == j {
            return Err(Error::Parse {
                line: line_no,
                message: format!("self-loop on node {i}"),
            });
        }
        if let Some(n) = declared_n {
            if i.max(j) >= n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("node index {} out of range for n={n}", i.max(j)),
                });
            }
        }
        max_index = Some(max_index.map_or(i.max(j), |m| m.max(i).max(j)));
        if !edges.insert((i.min(j), i.max(j))) {
            let msg = format!("line {line_no}: duplicate edge ({i}, {j}) ignored");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let n = declared_n.unwrap_or_else(|| max_index.map_or(0, |m| m + 1));
    Ok(ParsedEdgeList {
        list: EdgeList { n, edges },
        warnings,
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<Option<usize>> {
    let Some((key, value)) = line.split_once('=') else {
        return Ok(None);
    };
    if key.trim() != "n" {
        return Err(Error::Parse {
            line: line_no,
            message: format!("unrecognised header `{line}`"),
        });
    }
    let value = value.trim();
    value.parse().map(Some).map_err(|_| Error::Parse {
        line: line_no,
        message: format!("invalid node count `{value}`"),
    })
}

/// Writes the graph in the edge-list format (0-based, with `n=` header).
pub fn write_edge_list<W: Write>(a: &AdjacencyMatrix, mut out: W) -> Result<()> {
    writeln!(out, "n={}", a.n())?;
    for (i, j) in a.edges() {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

/// Dense CSV export: `n` rows of `n` comma-separated 0/1 values.
pub fn write_dense_csv<W: Write>(a: &AdjacencyMatrix, out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..a.n() {
        writer.write_record((0..a.n()).map(|j| if a.has_edge(i, j) { "1" } else { "0" }))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ParsedEdgeList> {
        read_edge_list(text.as_bytes(), EdgeListFormat::default())
    }

    #[test]
    fn adjacency_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            AdjacencyMatrix::from_dense(asym),
            Err(Error::NotSymmetric { .. })
        ));
        let weighted = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!(matches!(
            AdjacencyMatrix::from_dense(weighted),
            Err(Error::NotBinary { .. })
        ));
        let looped = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(AdjacencyMatrix::from_dense(looped), Err(Error::SelfLoop(0))));
    }

    #[test]
    fn positive_part_of_empty_graph() {
        let out = positive_part(&AdjacencyMatrix::empty(2)).unwrap();
        assert_eq!(out.as_matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn positive_part_of_single_edge() {
        let a = AdjacencyMatrix::from_edges(2, [(0, 1)]).unwrap();
        let out = positive_part(&a).unwrap();
        for v in out.as_matrix().iter() {
            assert!((v - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn psd_constructor_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(PsdGraphMatrix::new(m), Err(Error::NotPsd(_))));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(PsdGraphMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn reads_header_and_pairs() {
        let parsed = parse("n=3\n0 1\n1 2").unwrap();
        assert!(parsed.warnings.is_empty());
        let a = parsed.list.to_adjacency();
        assert_eq!(a.n(), 3);
        assert_eq!(a.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(a.has_edge(2, 1));
    }

    #[test]
    fn duplicate_lines_warn_once() {
        let parsed = parse("n=3\n0 1\n0 1\n1,0\n").unwrap();
        assert_eq!(parsed.list.len(), 1);
        assert_eq!(parsed.warnings.len(), 2);
        assert!(parsed.warnings[0].contains("line 3"));
    }

    #[test]
    fn empty_body_gives_zero_matrix() {
        let a = parse("n=4\n").unwrap().list.to_adjacency();
        assert_eq!(a.as_matrix(), &DMatrix::zeros(4, 4));
    }

    #[test]
    fn infers_n_and_accepts_commas_and_comments() {
        let parsed = parse("# comment\n0,4\n\n2 ,3\n").unwrap();
        assert_eq!(parsed.list.n(), 5);
        assert_eq!(parsed.list.len(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("n=3\n0 1\n1 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("n=3\n2 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("0 1\n1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("0 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse("m=3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn one_based_shift() {
        let fmt = EdgeListFormat { one_based: true };
        let parsed = read_edge_list("n=3\n1 2\n2 3\n".as_bytes(), fmt).unwrap();
        assert_eq!(parsed.list.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(read_edge_list("0 1\n".as_bytes(), fmt).is_err());
    }

    #[test]
    fn write_then_read_round_trip() {
        let a = AdjacencyMatrix::from_edges(5, [(0, 3), (1, 2), (3, 4)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&a, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap().list.to_adjacency();
        assert_eq!(a, back);
    }

    #[test]
    fn dense_csv_layout() {
        let a = AdjacencyMatrix::from_edges(3, [(0, 2)]).unwrap();
        let mut buf = Vec::new();
        write_dense_csv(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0,0,1\n0,0,0\n1,0,0\n");
    }

    #[test]
    fn downsample_boundaries() {
        let a = AdjacencyMatrix::complete(5);
        assert_eq!(downsample_edges(&a, 10, 1).unwrap(), a);
        assert_eq!(downsample_edges(&a, 0, 1).unwrap(), AdjacencyMatrix::empty(5));
        assert!(downsample_edges(&a, 11, 1).is_err());
        let half = downsample_edges(&a, 4, 9).unwrap();
        assert_eq!(half.edge_count(), 4);
        assert!(half.edges().all(|(i, j)| a.has_edge(i, j)));
        assert_eq!(half, downsample_edges(&a, 4, 9).unwrap());
    }

    #[test]
    fn matching_counts() {
        let a = AdjacencyMatrix::complete(6);
        let b = AdjacencyMatrix::from_edges(6, [(0, 1), (2, 3), (4, 5)]).unwrap();
        let out = match_edge_counts(&[a, b.clone()], 3).unwrap();
        assert_eq!(out[0].edge_count(), 3);
        assert_eq!(out[1], b);
    }
}
