//! Class hierarchy and tree distances between classifications.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Rooted is-a tree with model classes attached to nodes. Immutable once
/// loaded.
#[derive(Debug, Clone)]
pub struct TaxonomyTree {
    names: Vec<String>,
    ids: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    class_to_node: BTreeMap<usize, usize>,
}

fn bad(msg: String) -> Error {
    Error::Taxonomy(msg)
}

pub fn load_taxonomy(edges_path: &Path, mapping_path: &Path) -> Result<TaxonomyTree> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))
    };
    TaxonomyTree::parse(&read(edges_path)?, &read(mapping_path)?)
}

impl TaxonomyTree {
    /// Parses "parent child" edge lines and "class_index node" mapping lines.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(edges: &str, mapping: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut parent: Vec<Option<usize>> = Vec::new();
        let mut intern = |name: &str, names: &mut Vec<String>, parent: &mut Vec<Option<usize>>| {
            *ids.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                parent.push(None);
                names.len() - 1
            })
        };

        for (lineno, line) in content_lines(edges) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [p, c] = fields[..] else {
                return Err(bad(format!("edge line {lineno}: expected \"parent child\", got {line:?}")));
            };
            let pi = intern(p, &mut names, &mut parent);
            let ci = intern(c, &mut names, &mut parent);
            if pi == ci {
                return Err(bad(format!("edge line {lineno}: cycle, {p} is its own parent")));
            }
            match parent[ci] {
                Some(existing) if existing == pi => {}
                Some(existing) => {
                    return Err(bad(format!(
                        "edge line {lineno}: {c} already has parent {}, not a tree",
                        names[existing]
                    )))
                }
                None => parent[ci] = Some(pi),
            }
        }
        let ids: HashMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        if names.is_empty() {
            return Err(bad("edge file has no edges".into()));
        }

        let depth = depths(&names, &parent)?;
        let roots: Vec<&str> = (0..names.len())
            .filter(|&i| parent[i].is_none())
            .map(|i| names[i].as_str())
            .collect();
        if roots.len() != 1 {
            let shown: Vec<&str> = roots.iter().take(5).copied().collect();
            return Err(bad(format!("expected one root, found {}: {}", roots.len(), shown.join(", "))));
        }

        let mut class_to_node = BTreeMap::new();
        for (lineno, line) in content_lines(mapping) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [idx, node] = fields[..] else {
                return Err(bad(format!("mapping line {lineno}: expected \"class_index node\", got {line:?}")));
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| bad(format!("mapping line {lineno}: bad class index {idx:?}")))?;
            let &n = ids
                .get(node)
                .ok_or_else(|| bad(format!("mapping line {lineno}: unknown node {node}")))?;
            if class_to_node.insert(idx, n).is_some() {
                return Err(bad(format!("mapping line {lineno}: class {idx} mapped twice")));
            }
        }
        if class_to_node.is_empty() {
            return Err(bad("mapping file has no classes".into()));
        }
        Ok(TaxonomyTree { names, ids, parent, depth, class_to_node })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_to_node.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.class_to_node.keys().copied()
    }

    pub fn node_name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn node_of(&self, class: usize) -> Result<usize> {
        self.class_to_node
            .get(&class)
            .copied()
            .ok_or_else(|| bad(format!("class {class} is not mapped to a node")))
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Accepts a class index or the name of a node some class maps to.
    pub fn resolve_class(&self, token: &str) -> Result<usize> {
        if let Ok(idx) = token.parse::<usize>() {
            self.node_of(idx)?;
            return Ok(idx);
        }
        let node = self.ids.get(token).ok_or_else(|| bad(format!("unknown class {token}")))?;
        self.class_to_node
            .iter()
            .find(|(_, n)| *n == node)
            .map(|(c, _)| *c)
            .ok_or_else(|| bad(format!("node {token} has no class mapped to it")))
    }

    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root");
        }
        while a != b {
            a = self.parent[a].expect("non-root");
            b = self.parent[b].expect("non-root");
        }
        a
    }

    pub fn node_distance(&self, a: usize, b: usize) -> usize {
        self.depth[a] + self.depth[b] - 2 * self.depth[self.lca(a, b)]
    }

    pub fn shortest_path(&self, class_a: usize, class_b: usize) -> Result<usize> {
        Ok(self.node_distance(self.node_of(class_a)?, self.node_of(class_b)?))
    }

    /// Largest distance between any two mapped classes, with one pair
    /// attaining it.
    pub fn diameter(&self, execution: Execution) -> (usize, usize, usize) {
        let classes: Vec<(usize, usize)> = self.class_to_node.iter().map(|(c, n)| (*c, *n)).collect();
        let rows = execution.map_range(classes.len(), |i| {
            let (ca, na) = classes[i];
            classes[i + 1..]
                .iter()
                .map(|&(cb, nb)| (self.node_distance(na, nb), ca, cb))
                .fold((0, ca, ca), |best, x| if x.0 > best.0 { x } else { best })
        });
        rows.into_iter().fold((0, 0, 0), |best, x| if x.0 > best.0 { x } else { best })
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn depths(names: &[String], parent: &[Option<usize>]) -> Result<Vec<usize>> {
    const UNSET: usize = usize::MAX;
    let mut depth = vec![UNSET; names.len()];
    let mut on_path = vec![false; names.len()];
    let mut path = Vec::new();
    for start in 0..names.len() {
        let mut cur = start;
        while depth[cur] == UNSET {
            if on_path[cur] {
                return Err(bad(format!("cycle through {}", names[cur])));
            }
            on_path[cur] = true;
            path.push(cur);
            match parent[cur] {
                Some(p) => cur = p,
                None => {
                    depth[cur] = 0;
                    path.pop();
                    on_path[cur] = false;
                }
            }
        }
        let mut d = depth[cur];
        while let Some(n) = path.pop() {
            d += 1;
            depth[n] = d;
            on_path[n] = false;
        }
    }
    Ok(depth)
}
