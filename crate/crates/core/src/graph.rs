//! Communication topology of N followers plus one leader.
//!
//! Nodes are labelled `1..=N` for followers and `N + 1` for the leader. An edge
//! `(i, j)` means node `j` receives information from node `i`. Edge weights are
//! all one.
//!
//! Inside the crate followers are addressed by zero-based index and the leader
//! by index `N`; [`CommGraph::in_neighbors`] returns indices in that form.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result, TopologyViolation};

/// Smallest eigenvalue of `H`, relative to its largest, accepted as positive.
pub const PD_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    num_followers: usize,
    edges: BTreeSet<(usize, usize)>,
    // in_neighbors[j] = zero-based indices of nodes j listens to (leader = N)
    in_neighbors: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Build and validate a graph from one-based `(from, to)` labels.
    pub fn new(num_followers: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_followers == 0 {
            return Err(Error::InvalidTopology(TopologyViolation::NoFollowers));
        }
        let leader = num_followers + 1;
        let mut set = BTreeSet::new();
        for &(from, to) in edges {
            if from == 0 || from > leader || to == 0 || to > leader {
                return Err(Error::InvalidTopology(TopologyViolation::NodeOutOfRange {
                    from,
                    to,
                }));
            }
            if to == leader {
                return Err(Error::InvalidTopology(
                    TopologyViolation::LeaderHasIncoming { from },
                ));
            }
            if from == to {
                return Err(Error::InvalidTopology(TopologyViolation::SelfLoop {
                    node: from,
                }));
            }
            set.insert((from, to));
        }
        for &(from, to) in &set {
            if from != leader && !set.contains(&(to, from)) {
                return Err(Error::InvalidTopology(
                    TopologyViolation::AsymmetricFollowerEdge { from, to },
                ));
            }
        }

        let mut in_neighbors = vec![Vec::new(); num_followers];
        for &(from, to) in &set {
            in_neighbors[to - 1].push(from - 1);
        }

        let graph = Self {
            num_followers,
            edges: set,
            in_neighbors,
        };
        let unreachable = graph.unreachable_from_leader();
        if !unreachable.is_empty() {
            return Err(Error::InvalidTopology(
                TopologyViolation::LeaderUnreachable {
                    followers: unreachable,
                },
            ));
        }
        Ok(graph)
    }

    /// Leader linked to every follower, no follower-follower edges.
    pub fn star(num_followers: usize) -> Result<Self> {
        let leader = num_followers + 1;
        let edges: Vec<_> = (1..=num_followers).map(|j| (leader, j)).collect();
        Self::new(num_followers, &edges)
    }

    /// The default six-follower topology: leader -> 1, leader -> 4, and the
    /// undirected chain 1-2-3-4-5-6.
    pub fn reference() -> Self {
        let mut edges = vec![(7, 1), (7, 4)];
        for i in 1..6 {
            edges.push((i, i + 1));
            edges.push((i + 1, i));
        }
        Self::new(6, &edges).expect("reference topology is valid")
    }

    fn unreachable_from_leader(&self) -> Vec<usize> {
        let n = self.num_followers;
        let mut out_neighbors = vec![Vec::new(); n + 1];
        for &(from, to) in &self.edges {
            out_neighbors[from - 1].push(to - 1);
        }
        let mut seen = vec![false; n + 1];
        let mut queue = VecDeque::from([n]);
        seen[n] = true;
        while let Some(node) = queue.pop_front() {
            for &next in &out_neighbors[node] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).map(|i| i + 1).collect()
    }

    pub fn num_followers(&self) -> usize {
        self.num_followers
    }

    /// Zero-based index of the leader node.
    pub fn leader_index(&self) -> usize {
        self.num_followers
    }

    /// Validated edge set in one-based labels.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Zero-based in-neighbors of follower `i` (zero-based); the leader shows up as `N`.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    /// One-based neighbor set of a one-based follower label.
    pub fn neighbor_set(&self, label: usize) -> Option<Vec<usize>> {
        if label == 0 || label > self.num_followers {
            return None;
        }
        Some(self.in_neighbors[label - 1].iter().map(|j| j + 1).collect())
    }

    pub fn is_leader_linked(&self, i: usize) -> bool {
        self.in_neighbors[i].contains(&self.num_followers)
    }

    /// Laplacian of the full graph, `(N+1) x (N+1)`, leader last. The leader row is zero.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.num_followers;
        let mut l = DMatrix::zeros(n + 1, n + 1);
        for (i, nbrs) in self.in_neighbors.iter().enumerate() {
            l[(i, i)] = nbrs.len() as f64;
            for &j in nbrs {
                l[(i, j)] = -1.0;
            }
        }
        l
    }

    /// `H`: the Laplacian with the leader row and column removed, checked positive definite.
    pub fn h_matrix(&self) -> Result<HMatrix> {
        let n = self.num_followers;
        let h = self.laplacian().view((0, 0), (n, n)).into_owned();
        HMatrix::new(h)
    }
}

/// Symmetric positive definite `N x N` matrix derived from the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl HMatrix {
    fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigenvalues.sort_by(f64::total_cmp);
        let min = eigenvalues[0];
        let max = eigenvalues[eigenvalues.len() - 1];
        let asymmetric =
            (0..matrix.nrows()).any(|i| (0..i).any(|j| matrix[(i, j)] != matrix[(j, i)]));
        if asymmetric || !(min > PD_RELATIVE_TOLERANCE * max.abs().max(f64::MIN_POSITIVE)) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            matrix,
            eigenvalues,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `(H ⊗ I_m) x` for a stacked vector of N blocks of size `m`.
    pub fn kron_apply(&self, x: &[f64], m: usize) -> Vec<f64> {
        let n = self.matrix.nrows();
        assert_eq!(x.len(), n * m, "stacked vector length");
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..n {
                let h = self.matrix[(i, j)];
                if h != 0.0 {
                    for k in 0..m {
                        out[i * m + k] += h * x[j * m + k];
                    }
                }
            }
        }
        out
    }
}
