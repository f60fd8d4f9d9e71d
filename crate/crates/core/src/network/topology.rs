use serde::Serialize;

use crate::error::{EtcError, Result};
use crate::numerics::{eig_sym, RealMatrix};

/// Undirected connected communication graph.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkTopology {
    n_agents: usize,
    adjacency: RealMatrix,
    laplacian: RealMatrix,
    lambda2: f64,
}

impl NetworkTopology {
    /// Builds the graph from 0-indexed undirected edges. Self-loops are
    /// rejected, duplicates are idempotent, disconnected graphs are rejected.
    pub fn from_edges(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_agents == 0 {
            return Err(EtcError::Validation("graph needs at least one agent".into()));
        }
        let mut adjacency = RealMatrix::zeros(n_agents, n_agents);
        for &(i, j) in edges {
            if i >= n_agents || j >= n_agents {
                return Err(EtcError::Validation(format!(
                    "edge ({}, {}) references an agent outside 1..={n_agents}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(EtcError::Validation(format!("self-loop at agent {}", i + 1)));
            }
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
        Self::from_adjacency(adjacency)
    }

    pub fn from_adjacency(adjacency: RealMatrix) -> Result<Self> {
        let n = adjacency.rows();
        if !adjacency.is_square() {
            return Err(EtcError::Dimension {
                op: "NetworkTopology",
                expected: "square adjacency".into(),
                got: format!("{}x{}", adjacency.rows(), adjacency.cols()),
            });
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(EtcError::Validation("adjacency must have a zero diagonal".into()));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if (a != 0.0 && a != 1.0) || a != adjacency[(j, i)] {
                    return Err(EtcError::Validation("adjacency must be symmetric 0/1".into()));
                }
            }
        }
        let mut laplacian = adjacency.scale(-1.0);
        for i in 0..n {
            laplacian[(i, i)] = adjacency.row(i).iter().sum();
        }
        let lambda2 = if n == 1 { 0.0 } else { eig_sym(&laplacian)?[1] };
        if n > 1 && !connected(&adjacency) {
            return Err(EtcError::Validation(format!(
                "graph is disconnected (lambda_2 = {lambda2:.3e}); consensus bounds need a connected graph"
            )));
        }
        Ok(Self { n_agents: n, adjacency, laplacian, lambda2 })
    }

    /// Path `1 - 2 - ... - n`.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Parses an edge list with one 1-indexed `i j` pair per line. Blank lines
    /// and `#` comments are skipped; the agent count is the largest index.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                let tok = tok.ok_or_else(|| {
                    EtcError::Validation(format!("edge list line {}: expected `i j`, got {raw:?}", lineno + 1))
                })?;
                let v: usize = tok.parse().map_err(|_| {
                    EtcError::Validation(format!("edge list line {}: {tok:?} is not a positive integer", lineno + 1))
                })?;
                if v == 0 {
                    return Err(EtcError::Validation(format!(
                        "edge list line {}: agents are 1-indexed",
                        lineno + 1
                    )));
                }
                Ok(v)
            };
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            if it.next().is_some() {
                return Err(EtcError::Validation(format!(
                    "edge list line {}: trailing tokens in {raw:?}",
                    lineno + 1
                )));
            }
            n = n.max(i).max(j);
            edges.push((i - 1, j - 1));
        }
        Self::from_edges(n, &edges)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn adjacency(&self) -> &RealMatrix {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &RealMatrix {
        &self.laplacian
    }

    /// Algebraic connectivity; zero for a single agent.
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n_agents).filter(|&j| self.adjacency[(i, j)] != 0.0).collect()
    }
}

fn connected(adj: &RealMatrix) -> bool {
    let n = adj.rows();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if adj[(i, j)] != 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2_spectrum() {
        let g = NetworkTopology::path(2).unwrap();
        assert!((g.lambda2() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn k3_lambda2_is_n() {
        let g = NetworkTopology::complete(3).unwrap();
        assert!((g.lambda2() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = NetworkTopology::path(5).unwrap();
        for i in 0..5 {
            assert_eq!(g.laplacian().row(i).iter().sum::<f64>(), 0.0);
        }
        assert_eq!(g.neighbors(2), vec![1, 3]);
    }

    #[test]
    fn disconnected_rejected() {
        assert!(NetworkTopology::from_edges(4, &[(0, 1), (2, 3)]).is_err());
    }

    #[test]
    fn edge_list_is_one_indexed() {
        let g = NetworkTopology::parse_edge_list("# path\n1 2\n2 3\n\n").unwrap();
        assert_eq!(g.n_agents(), 3);
        assert!(NetworkTopology::parse_edge_list("0 1\n").is_err());
        assert!(NetworkTopology::parse_edge_list("1 x\n").is_err());
        assert!(NetworkTopology::parse_edge_list("1 1\n").is_err());
    }
}
