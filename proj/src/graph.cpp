#include "riseflock/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "riseflock/errors.hpp"

namespace riseflock::graph {

void GraphTopology::validate() const {
  if (agent_count < 1) {
    throw ValidationError("topology: agent count must be >= 1, got " +
                          std::to_string(agent_count));
  }
  if (state_dim < 1) {
    throw ValidationError("topology: state dimension must be >= 1, got " +
                          std::to_string(state_dim));
  }
  if (static_cast<int>(pinning.size()) != agent_count) {
    throw ValidationError("topology: pinning vector has length " +
                          std::to_string(pinning.size()) + ", expected " +
                          std::to_string(agent_count));
  }
  for (int b : pinning) {
    if (b != 0 && b != 1) {
      throw ValidationError("topology: pinning entries must be 0 or 1");
    }
  }
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges) {
    if (e.i < 1 || e.i > agent_count || e.j < 1 || e.j > agent_count) {
      throw ValidationError("topology: edge (" + std::to_string(e.i) + "," +
                            std::to_string(e.j) + ") has out-of-range endpoint");
    }
    if (e.i == e.j) {
      throw ValidationError("topology: self-loop at vertex " +
                            std::to_string(e.i));
    }
    if (!(e.weight > 0.0)) {
      throw ValidationError("topology: edge (" + std::to_string(e.i) + "," +
                            std::to_string(e.j) + ") has non-positive weight");
    }
    auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second) {
      throw ValidationError("topology: duplicate edge (" + std::to_string(e.i) +
                            "," + std::to_string(e.j) + ")");
    }
  }
}

GraphTopology cycle_topology(int agent_count, std::vector<int> pinning,
                             int state_dim) {
  GraphTopology topo;
  topo.agent_count = agent_count;
  topo.state_dim = state_dim;
  topo.pinning = std::move(pinning);
  for (int i = 1; i < agent_count; ++i) {
    topo.edges.push_back({i, i + 1, 1.0});
  }
  if (agent_count > 2) {
    topo.edges.push_back({agent_count, 1, 1.0});
  }
  return topo;
}

Eigen::MatrixXd adjacency(const GraphTopology& topo) {
  topo.validate();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(topo.agent_count, topo.agent_count);
  for (const Edge& e : topo.edges) {
    a(e.i - 1, e.j - 1) = e.weight;
    a(e.j - 1, e.i - 1) = e.weight;
  }
  return a;
}

Eigen::MatrixXd laplacian(const GraphTopology& topo) {
  Eigen::MatrixXd a = adjacency(topo);
  Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::MatrixXd l = -a;
  l.diagonal() += deg;
  return l;
}

InteractionMatrix interaction_matrix(const GraphTopology& topo) {
  Eigen::MatrixXd lb = laplacian(topo);
  for (int i = 0; i < topo.agent_count; ++i) {
    lb(i, i) += static_cast<double>(topo.pinning[i]);
  }

  const int n = topo.state_dim;
  const int big = n * topo.agent_count;
  InteractionMatrix im;
  im.n = n;
  im.lb = lb;
  im.h = Eigen::MatrixXd::Zero(big, big);
  im.b_kron = Eigen::MatrixXd::Zero(big, big);
  for (int i = 0; i < topo.agent_count; ++i) {
    for (int j = 0; j < topo.agent_count; ++j) {
      if (lb(i, j) != 0.0) {
        im.h.block(i * n, j * n, n, n) =
            lb(i, j) * Eigen::MatrixXd::Identity(n, n);
      }
    }
    im.b_kron.block(i * n, i * n, n, n) =
        static_cast<double>(topo.pinning[i]) *
        Eigen::MatrixXd::Identity(n, n);
  }
  return im;
}

bool check_pinned_connectivity(const GraphTopology& topo) {
  topo.validate();
  bool pinned = std::any_of(topo.pinning.begin(), topo.pinning.end(),
                            [](int b) { return b == 1; });
  if (!pinned) return false;

  // Union-find over edges.
  std::vector<int> parent(topo.agent_count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const Edge& e : topo.edges) {
    parent[find(e.i - 1)] = find(e.j - 1);
  }
  int root = find(0);
  for (int i = 1; i < topo.agent_count; ++i) {
    if (find(i) != root) return false;
  }
  return true;
}

SpectralSummary spectral_summary(const InteractionMatrix& im) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      im.lb, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("spectral_summary: eigen solver failed to converge on " +
                       std::to_string(im.lb.rows()) + "x" +
                       std::to_string(im.lb.cols()) +
                       " matrix, max |entry| = " +
                       std::to_string(im.lb.cwiseAbs().maxCoeff()));
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();

  SpectralSummary s;
  s.lambda_min_h = ev(0);
  s.lambda_max_h = ev(ev.size() - 1);
  s.lambda_max_imh2 = (1.0 - ev.array().square()).maxCoeff();

  // B kron I_n - I has the pinning bits minus one on its diagonal.
  const Eigen::VectorXd bdiag = im.b_kron.diagonal();
  s.lambda_min_bmi = bdiag.minCoeff() - 1.0;
  s.lambda_max_bmi = bdiag.maxCoeff() - 1.0;

  s.lambda_min_q = std::min(1.0, s.lambda_min_h);
  s.lambda_max_q = std::max(1.0, s.lambda_max_h);
  s.norm1_h = im.lb.cwiseAbs().colwise().sum().maxCoeff();
  return s;
}

}  // namespace riseflock::graph
