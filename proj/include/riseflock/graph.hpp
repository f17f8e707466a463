#pragma once

#include <Eigen/Dense>
#include <vector>

namespace riseflock::graph {

/// Undirected weighted edge between 1-based vertices i and j.
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

/// Communication topology: N agents, undirected weighted edges, a 0/1
/// pinning vector (which agents sense the target), and the per-agent state
/// dimension n.
struct GraphTopology {
  int agent_count = 0;               // N
  std::vector<Edge> edges;           // no self-loops, weights > 0
  std::vector<int> pinning;          // length N, entries in {0, 1}
  int state_dim = 1;                 // n

  /// Throws ValidationError on out-of-range endpoints, self-loops,
  /// non-positive weights, duplicate edges, or a bad pinning vector.
  void validate() const;
};

/// Convenience builder for the common unit-weight cycle topology.
GraphTopology cycle_topology(int agent_count, std::vector<int> pinning,
                             int state_dim);

Eigen::MatrixXd adjacency(const GraphTopology& topo);

/// L = D - A with D = diag(A 1). Rows sum to zero.
Eigen::MatrixXd laplacian(const GraphTopology& topo);

struct InteractionMatrix {
  Eigen::MatrixXd lb;      // L + B, N x N
  Eigen::MatrixXd h;       // (L + B) kron I_n, nN x nN
  Eigen::MatrixXd b_kron;  // B kron I_n, nN x nN
  int n = 1;
};

InteractionMatrix interaction_matrix(const GraphTopology& topo);

/// True iff the graph is connected and at least one agent is pinned.
bool check_pinned_connectivity(const GraphTopology& topo);

/// Eigenvalue extrema consumed by the gain conditions. All quantities are
/// derived from the N x N matrix L + B; the Kronecker factor I_n replicates
/// the spectrum without changing the extrema.
struct SpectralSummary {
  double lambda_min_h = 0.0;
  double lambda_max_h = 0.0;
  double lambda_min_bmi = 0.0;   // extrema of B kron I_n - I
  double lambda_max_bmi = 0.0;
  double lambda_max_imh2 = 0.0;  // max eigenvalue of I - H^2
  double lambda_min_q = 0.0;     // Q = diag(I_{2nN}, H)
  double lambda_max_q = 0.0;
  double norm1_h = 0.0;          // induced 1-norm of H
};

SpectralSummary spectral_summary(const InteractionMatrix& im);

}  // namespace riseflock::graph
