use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GraphBuilder, LabelStore, TransactionGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFormat {
    #[default]
    Csv,
    Tsv,
}

impl EdgeFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            EdgeFormat::Csv => b',',
            EdgeFormat::Tsv => b'\t',
        }
    }

    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => EdgeFormat::Tsv,
            _ => EdgeFormat::Csv,
        }
    }
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeFormat, directed: bool) -> Result<TransactionGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(BufReader::new(file), format, directed)
}

fn is_header(fields: &[&str]) -> bool {
    let src = fields.first().map(|s| s.to_ascii_lowercase()).unwrap_or_default();
    let dst = fields.get(1).map(|s| s.to_ascii_lowercase()).unwrap_or_default();
    let named = matches!(src.as_str(), "src" | "source" | "from" | "u")
        && matches!(dst.as_str(), "dst" | "target" | "to" | "v");
    let weight_word = fields.get(2).is_some_and(|w| w.parse::<f64>().is_err());
    named || weight_word
}

/// Parses `src,dst[,weight]` rows. An optional header line is detected by
/// column names or a non-numeric weight column.
pub fn read_edge_list<R: Read>(reader: R, format: EdgeFormat, directed: bool) -> Result<TransactionGraph> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut builder = GraphBuilder::new(directed);
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields: Vec<&str> = record.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if is_header(&fields) {
                continue;
            }
        }
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected src,dst[,weight], found {} columns", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty node id".into(),
            });
        }
        let weight = match fields.get(2) {
            None | Some(&"") => 1.0,
            Some(w) => match w.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => v,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("invalid weight {w:?}"),
                    })
                }
            },
        };
        builder.add_edge(fields[0], fields[1], weight);
    }
    Ok(builder.build())
}

pub fn load_labels(path: impl AsRef<Path>, graph: &TransactionGraph) -> Result<(LabelStore, Vec<String>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(BufReader::new(file), graph)
}

/// Reads `id[,s[,y]]` rows. A bare id marks a labeled positive; the optional
/// 0/1 columns give the observed and true label. Ids missing from the graph
/// come back as warnings instead of being dropped silently.
pub fn read_labels<R: BufRead>(reader: R, graph: &TransactionGraph) -> Result<(LabelStore, Vec<String>)> {
    let mut store = LabelStore::unlabeled(graph.node_count());
    let mut y: Option<Vec<bool>> = None;
    let mut unknown = Vec::new();
    let mut seen_unknown = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut cols = line.split([',', '\t']).map(str::trim);
        let id = cols.next().unwrap_or("");
        if id.is_empty() || id.starts_with('#') {
            continue;
        }
        let Some(d) = graph.dense_id(id) else {
            if i == 0 && matches!(id.to_ascii_lowercase().as_str(), "id" | "node" | "node_id" | "address") {
                continue;
            }
            if seen_unknown.insert(id.to_owned()) {
                unknown.push(id.to_owned());
            }
            continue;
        };
        let flag = |v: &str| match v {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(Error::Parse {
                line: line_no,
                message: format!("expected 0/1 label, got `{other}`"),
            }),
        };
        let s = match cols.next() {
            Some(v) if !v.is_empty() => flag(v)?,
            _ => true,
        };
        store.s[d] = s;
        if let Some(v) = cols.next().filter(|v| !v.is_empty()) {
            let y = y.get_or_insert_with(|| vec![false; graph.node_count()]);
            y[d] = flag(v)? || s;
        }
    }
    if let Some(y) = &mut y {
        for (yi, &si) in y.iter_mut().zip(&store.s) {
            *yi |= si;
        }
    }
    store.y = y;
    Ok((store, unknown))
}

/// Writes `edges.csv`, `nodes.csv` (dense order) and `labels.csv` into `dir`.
pub fn write_snapshot(dir: &Path, graph: &TransactionGraph, labels: &LabelStore) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_nodes(&dir.join("nodes.csv"), graph)?;
    write_edges(&dir.join("edges.csv"), graph)?;
    let meta = serde_json::json!({
        "directed": graph.is_directed(),
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
    });
    let meta_path = dir.join("graph.json");
    create(&meta_path)?
        .write_all(serde_json::to_string_pretty(&meta)?.as_bytes())
        .map_err(|e| Error::io(&meta_path, e))?;

    let path = dir.join("labels.csv");
    let mut out = create(&path)?;
    let mut buf = String::from("id,s,y\n");
    for (i, id) in graph.node_ids().iter().enumerate() {
        let y = match &labels.y {
            Some(y) => (y[i] as u8).to_string(),
            None => String::new(),
        };
        buf.push_str(&format!("{},{},{}\n", id, labels.s[i] as u8, y));
    }
    out.write_all(buf.as_bytes()).map_err(|e| Error::io(&path, e))
}

/// Inverse of [`write_snapshot`]. Dense ids come back in the same order.
pub fn read_snapshot(dir: &Path) -> Result<(TransactionGraph, LabelStore)> {
    let meta_path = dir.join("graph.json");
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?,
    )?;
    let directed = meta["directed"].as_bool().unwrap_or(false);
    let nodes_path = dir.join("nodes.csv");
    let text = std::fs::read_to_string(&nodes_path).map_err(|e| Error::io(&nodes_path, e))?;
    let mut builder = GraphBuilder::new(directed);
    for line in text.lines().skip(1) {
        if !line.is_empty() {
            builder.add_node(line);
        }
    }
    let edges_path = dir.join("edges.csv");
    let edges = std::fs::read_to_string(&edges_path).map_err(|e| Error::io(&edges_path, e))?;
    for (i, line) in edges.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: i as u64 + 1,
                message: "expected src,dst,weight".into(),
            });
        }
        let w = parts[2].parse::<f64>().map_err(|e| Error::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        builder.add_edge(parts[0], parts[1], w);
    }
    let graph = builder.build();

    let labels_path = dir.join("labels.csv");
    let text = std::fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let mut s = vec![false; graph.node_count()];
    let mut y = vec![false; graph.node_count()];
    let mut has_y = false;
    for (i, line) in text.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        let node = parts.first().and_then(|id| graph.dense_id(id)).ok_or_else(|| Error::Parse {
            line: i as u64 + 1,
            message: format!("unknown node in labels: {line}"),
        })?;
        s[node] = parts.get(1) == Some(&"1");
        if let Some(v) = parts.get(2).filter(|v| !v.is_empty()) {
            has_y = true;
            y[node] = *v == "1";
        }
    }
    Ok((graph, LabelStore { s, y: has_y.then_some(y) }))
}

pub fn write_nodes(path: &Path, graph: &TransactionGraph) -> Result<()> {
    let mut buf = String::from("id\n");
    for id in graph.node_ids() {
        buf.push_str(id);
        buf.push('\n');
    }
    create(path)?.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

/// `src,dst,weight` with external ids and a header row.
pub fn write_edges(path: &Path, graph: &TransactionGraph) -> Result<()> {
    let mut buf = String::from("src,dst,weight\n");
    for e in graph.edges() {
        buf.push_str(&format!(
            "{},{},{}\n",
            graph.external_id(e.src),
            graph.external_id(e.dst),
            e.weight
        ));
    }
    create(path)?.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<TransactionGraph> {
        read_edge_list(text.as_bytes(), EdgeFormat::Csv, false)
    }

    #[test]
    fn empty_file_is_empty_graph() {
        let g = parse("").unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn three_rows() {
        let g = parse("a,b\nb,c\na,c\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degree(g.dense_id("b").unwrap()), 2);
    }

    #[test]
    fn header_and_weights() {
        let g = parse("src,dst,weight\n0xaa,0xbb,2.5\n0xbb,0xaa,1\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].weight, 3.5);
    }

    #[test]
    fn tsv_rows() {
        let g = read_edge_list("a\tb\nb\tc\n".as_bytes(), EdgeFormat::Tsv, true).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_directed());
    }

    #[test]
    fn malformed_row_reports_line() {
        match parse("a,b\nb,c\nlonely\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("a,b,1\nb,c,heavy\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn labels_with_unknown_and_duplicates() {
        let g = parse("a,b\nb,c\n").unwrap();
        let (store, warn) = read_labels("a\nzz,1\na\n".as_bytes(), &g).unwrap();
        assert_eq!(store.labeled_count(), 1);
        assert_eq!(warn, vec!["zz".to_string()]);
    }

    #[test]
    fn labels_with_flag_columns() {
        let g = parse("a,b\nb,c\nc,d\n").unwrap();
        let (store, _) = read_labels("id,s,y\na,1,1\nb,0,1\nc,0,0\n".as_bytes(), &g).unwrap();
        assert_eq!(store.s, vec![true, false, false, false]);
        assert_eq!(store.y, Some(vec![true, true, false, false]));
        assert!(read_labels("a,maybe\n".as_bytes(), &g).is_err());
    }

    #[test]
    fn empty_labels() {
        let g = parse("a,b\n").unwrap();
        let (store, warn) = read_labels("".as_bytes(), &g).unwrap();
        assert_eq!(store.labeled_count(), 0);
        assert!(warn.is_empty());
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = GraphBuilder::new(false);
        b.add_edge("x", "y", 1.0);
        b.add_edge("y", "z", 2.0);
        b.add_edge("z", "x", 1.0);
        b.add_node("isolated");
        let g = b.build();
        let labels = LabelStore {
            s: vec![true, false, false, false],
            y: Some(vec![true, true, false, false]),
        };
        write_snapshot(dir.path(), &g, &labels).unwrap();
        let (g2, l2) = read_snapshot(dir.path()).unwrap();
        assert_eq!(g, g2);
        assert_eq!(labels, l2);
    }
}
