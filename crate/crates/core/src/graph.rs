//! Indexed communication graph shared read-only by every embedder.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::{EdgeRecord, EdgeType};

/// Largest node count for which dense matrices are built.
pub const DEFAULT_DENSE_CAP: usize = 10_000;

const SNAPSHOT_MAGIC: &[u8; 4] = b"BMG1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjacent {
    pub node: usize,
    pub kind: EdgeType,
    pub weight: u64,
}

/// Directed (or symmetrized) multigraph over dense node indices.
///
/// Node indices follow the sorted order of account ids. Parallel edges of
/// different types are kept apart in `out_adj`/`in_adj`; the collapsed view
/// merges them with summed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    out_adj: Vec<Vec<Adjacent>>,
    in_adj: Vec<Vec<Adjacent>>,
    collapsed_out: Vec<Vec<(usize, u64)>>,
    collapsed_in: Vec<Vec<(usize, u64)>>,
    undirected: bool,
}

impl CommGraph {
    /// Build from account ids and edge records. Ids are sorted and
    /// deduplicated; duplicate typed edges have their weights summed.
    pub fn from_edges<I, S>(ids: I, edges: &[EdgeRecord]) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        ids.sort();
        ids.dedup();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut typed: BTreeMap<(usize, usize, EdgeType), u64> = BTreeMap::new();
        for e in edges {
            let s = *index
                .get(&e.source)
                .ok_or_else(|| Error::Graph(format!("edge source '{}' is not a known account", e.source)))?;
            let t = *index
                .get(&e.target)
                .ok_or_else(|| Error::Graph(format!("edge target '{}' is not a known account", e.target)))?;
            if s == t {
                return Err(Error::Graph(format!("self-loop on '{}'", e.source)));
            }
            if e.weight == 0 {
                return Err(Error::Graph(format!("zero-weight edge {} -> {}", e.source, e.target)));
            }
            *typed.entry((s, t, e.edge_type)).or_default() += e.weight;
        }
        Ok(Self::from_typed(ids, index, typed, false))
    }

    fn from_typed(
        ids: Vec<String>,
        index: HashMap<String, usize>,
        typed: BTreeMap<(usize, usize, EdgeType), u64>,
        undirected: bool,
    ) -> Self {
        let n = ids.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (&(s, t, kind), &weight) in &typed {
            out_adj[s].push(Adjacent { node: t, kind, weight });
            in_adj[t].push(Adjacent { node: s, kind, weight });
        }
        for list in in_adj.iter_mut() {
            list.sort_by_key(|a| (a.node, a.kind));
        }
        let collapse = |adj: &Vec<Vec<Adjacent>>| -> Vec<Vec<(usize, u64)>> {
            adj.iter()
                .map(|list| {
                    let mut merged: Vec<(usize, u64)> = Vec::with_capacity(list.len());
                    for a in list {
                        match merged.last_mut() {
                            Some((node, w)) if *node == a.node => *w += a.weight,
                            _ => merged.push((a.node, a.weight)),
                        }
                    }
                    merged
                })
                .collect()
        };
        let collapsed_out = collapse(&out_adj);
        let collapsed_in = collapse(&in_adj);
        CommGraph { ids, index, out_adj, in_adj, collapsed_out, collapsed_in, undirected }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of typed edges. A symmetrized graph counts each direction.
    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn out_edges(&self, node: usize) -> &[Adjacent] {
        &self.out_adj[node]
    }

    pub fn in_edges(&self, node: usize) -> &[Adjacent] {
        &self.in_adj[node]
    }

    /// Out-neighbors with typed weights merged, sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.collapsed_out[node]
    }

    pub fn in_neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.collapsed_in[node]
    }

    /// Typed out-degree.
    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    /// Number of distinct out-neighbors.
    pub fn distinct_degree(&self, node: usize) -> usize {
        self.collapsed_out[node].len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.collapsed_out[from].binary_search_by_key(&to, |&(n, _)| n).is_ok()
    }

    /// Collapsed weight of `from -> to`, zero when absent.
    pub fn weight(&self, from: usize, to: usize) -> u64 {
        match self.collapsed_out[from].binary_search_by_key(&to, |&(n, _)| n) {
            Ok(i) => self.collapsed_out[from][i].1,
            Err(_) => 0,
        }
    }

    /// Undirected view with `w(u,v) = w(u->v) + w(v->u)` per edge type.
    /// Symmetrizing an already undirected graph returns it unchanged.
    pub fn symmetrize(&self) -> CommGraph {
        if self.undirected {
            return self.clone();
        }
        let mut typed: BTreeMap<(usize, usize, EdgeType), u64> = BTreeMap::new();
        for (s, list) in self.out_adj.iter().enumerate() {
            for a in list {
                *typed.entry((s, a.node, a.kind)).or_default() += a.weight;
                *typed.entry((a.node, s, a.kind)).or_default() += a.weight;
            }
        }
        Self::from_typed(self.ids.clone(), self.index.clone(), typed, true)
    }

    /// Dense collapsed adjacency, refusing graphs above `cap` nodes.
    pub fn dense_adjacency(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.node_count();
        if n > cap {
            return Err(Error::Size(format!("{n} nodes exceeds the dense matrix cap of {cap}")));
        }
        let mut a = DMatrix::zeros(n, n);
        for (s, list) in self.collapsed_out.iter().enumerate() {
            for &(t, w) in list {
                a[(s, t)] = w as f64;
            }
        }
        Ok(a)
    }

    /// Directed typed edges as records, in index order.
    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (s, list) in self.out_adj.iter().enumerate() {
            for a in list {
                out.push(EdgeRecord::new(self.ids[s].clone(), self.ids[a.node].clone(), a.kind, a.weight));
            }
        }
        out
    }

    /// Binary snapshot: `BMG1`, u64 N, u64 E, then E edges as
    /// (u64 source, u64 target, u64 type-tagged weight), then the N node ids
    /// as u32 length-prefixed UTF-8. The weight word holds `weight << 8 | type`.
    /// A trailing u8 records whether the graph is symmetrized.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_u64::<LittleEndian>(self.node_count() as u64)?;
        out.write_u64::<LittleEndian>(self.edge_count() as u64)?;
        for (s, list) in self.out_adj.iter().enumerate() {
            for a in list {
                out.write_u64::<LittleEndian>(s as u64)?;
                out.write_u64::<LittleEndian>(a.node as u64)?;
                out.write_u64::<LittleEndian>((a.weight << 8) | a.kind.code() as u64)?;
            }
        }
        for id in &self.ids {
            out.write_u32::<LittleEndian>(id.len() as u32)?;
            out.write_all(id.as_bytes())?;
        }
        out.write_u8(self.undirected as u8)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Format("not a BMG1 graph snapshot".into()));
        }
        let n = input.read_u64::<LittleEndian>()? as usize;
        let e = input.read_u64::<LittleEndian>()? as usize;
        let mut typed = BTreeMap::new();
        for _ in 0..e {
            let s = input.read_u64::<LittleEndian>()? as usize;
            let t = input.read_u64::<LittleEndian>()? as usize;
            let packed = input.read_u64::<LittleEndian>()?;
            let kind = EdgeType::from_code((packed & 0xff) as u8)
                .ok_or_else(|| Error::Format(format!("bad edge type code {}", packed & 0xff)))?;
            if s >= n || t >= n {
                return Err(Error::Format(format!("edge endpoint out of range ({s}, {t}) for N={n}")));
            }
            typed.insert((s, t, kind), packed >> 8);
        }
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let len = input.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            input.read_exact(&mut buf)?;
            ids.push(String::from_utf8(buf).map_err(|_| Error::Format("node id is not UTF-8".into()))?);
        }
        let undirected = input.read_u8()? != 0;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("snapshot node ids are not strictly sorted".into()));
        }
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(Self::from_typed(ids, index, typed, undirected))
    }
}
