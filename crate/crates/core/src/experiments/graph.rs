//! Directed graphs, edge-list I/O and a preferential-attachment generator.
//!
//! Edge-list format: one `src dst` pair per line, `#` starts a comment.
//! Two header comments are recognized anywhere before the first edge:
//! `# nodes N` declares the node count and `# base 0|1` the id offset
//! (default 0). Without `# nodes` the count is one past the largest id.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebGraph {
    n: usize,
    /// Sorted, deduplicated out-neighbours.
    out: Vec<Vec<usize>>,
}

impl WebGraph {
    /// Duplicate edges collapse; self-loops are kept once.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = vec![Vec::new(); n];
        for (s, d) in edges {
            if s >= n || d >= n {
                return Err(Error::NodeIdOverflow {
                    line: 0,
                    id: s.max(d) as u64,
                    nodes: n,
                });
            }
            out[s].push(d);
        }
        for row in &mut out {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self { n, out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn num_edges(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().map(move |&d| (s, d)))
    }

    /// `δ_i = 1` iff node `i` has no out-links.
    pub fn dangling(&self) -> Vec<bool> {
        self.out.iter().map(Vec::is_empty).collect()
    }
}

fn parse_header(rest: &str) -> Option<(&str, &str)> {
    let mut it = rest.split_whitespace();
    let key = it.next()?;
    let value = it.next()?;
    (it.next().is_none()).then_some((key, value))
}

pub fn read_edge_list<R: BufRead>(reader: R) -> Result<WebGraph> {
    let mut declared: Option<usize> = None;
    let mut base = 0u64;
    let mut raw: Vec<(usize, u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            match parse_header(rest) {
                Some(("nodes", v)) if raw.is_empty() => {
                    declared = Some(v.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad node count '{v}'"),
                    })?);
                }
                Some(("base", v)) if raw.is_empty() => {
                    base = match v {
                        "0" => 0,
                        "1" => 1,
                        _ => {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("base must be 0 or 1, got '{v}'"),
                            })
                        }
                    };
                }
                _ => {}
            }
            continue;
        }
        let mut fields = t.split_whitespace();
        let mut next = |what: &str| -> Result<u64> {
            let f = fields.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {what}"),
            })?;
            f.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad {what} '{f}'"),
            })
        };
        let s = next("source")?;
        let d = next("target")?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected exactly two fields".into(),
            });
        }
        raw.push((line_no, s, d));
    }
    let max_id = raw.iter().map(|&(_, s, d)| s.max(d)).max();
    let n = match declared {
        Some(n) => n,
        None => match max_id {
            Some(m) => usize::try_from(m + 1 - base).map_err(|_| Error::NodeIdOverflow {
                line: 0,
                id: m,
                nodes: usize::MAX,
            })?,
            None => 0,
        },
    };
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut edges = Vec::with_capacity(raw.len());
    for (line, s, d) in raw {
        for id in [s, d] {
            if id < base || id - base >= n as u64 {
                return Err(Error::NodeIdOverflow { line, id, nodes: n });
            }
        }
        edges.push(((s - base) as usize, (d - base) as usize));
    }
    WebGraph::from_edges(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WebGraph> {
    read_edge_list(BufReader::new(std::fs::File::open(path)?))
}

/// Writes the `# nodes` header, `# base 0`, then edges in sorted order.
pub fn write_edge_list<W: Write>(mut w: W, g: &WebGraph) -> Result<()> {
    writeln!(w, "# nodes {}", g.n())?;
    writeln!(w, "# base 0")?;
    for (s, d) in g.edges() {
        writeln!(w, "{s} {d}")?;
    }
    Ok(())
}

pub fn write_edge_list_path(path: impl AsRef<Path>, g: &WebGraph) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_edge_list(f, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub n: usize,
    /// Out-links attempted by each new node.
    pub out_degree: usize,
    /// Fraction of nodes (after the first) left without out-links.
    pub dangling_fraction: f64,
    pub seed: u64,
}

/// Directed preferential attachment: node `t` links to `out_degree` earlier
/// nodes picked with probability proportional to in-degree plus one.
pub fn power_law_graph(spec: &PowerLawSpec) -> Result<WebGraph> {
    if spec.n == 0 {
        return Err(Error::EmptyGraph);
    }
    if !(0.0..=1.0).contains(&spec.dangling_fraction) {
        return Err(Error::InvalidConfig("dangling fraction outside [0, 1]".into()));
    }
    let mut rng = stream_rng(spec.seed, 0);
    // One ticket per node plus one per received link.
    let mut tickets: Vec<usize> = vec![0];
    let mut edges = Vec::new();
    for t in 1..spec.n {
        if !rng.random_bool(spec.dangling_fraction) {
            for _ in 0..spec.out_degree.min(t) {
                let target = tickets[rng.random_range(0..tickets.len())];
                edges.push((t, target));
            }
            for &(_, d) in &edges[edges.len() - spec.out_degree.min(t)..] {
                tickets.push(d);
            }
        }
        tickets.push(t);
    }
    // Back-links so early nodes are not all sinks.
    for t in 0..spec.n.min(spec.out_degree + 1) {
        if spec.n > 1 {
            edges.push((t, (t + 1) % spec.n));
        }
    }
    WebGraph::from_edges(spec.n, edges)
}
