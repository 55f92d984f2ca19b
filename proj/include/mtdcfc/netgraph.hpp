#pragma once

// Undirected weighted graphs and the matrices derived from them: weighted
// Laplacians, orthonormal complements of the all-ones direction and the
// origin/terminal incidence matrices of directed line lists.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtdcfc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws std::invalid_argument if any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(what + ": non-finite entry");
  }
}

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double w = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected graph with strictly positive edge weights. Edges are kept in
/// insertion order; the unordered pair (i, j) may appear at most once.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  WeightedGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges_) {
      if (e.i >= n_ || e.j >= n_) {
        throw std::invalid_argument("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                    ") out of range for " + std::to_string(n_) + " nodes");
      }
      if (e.i == e.j) {
        throw std::invalid_argument("self-loop at node " + std::to_string(e.i));
      }
      if (!std::isfinite(e.w) || e.w <= 0.0) {
        throw std::invalid_argument("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                    ") has non-positive weight");
      }
      auto key = std::minmax(e.i, e.j);
      if (!seen.insert(key).second) {
        throw std::invalid_argument("duplicate edge (" + std::to_string(e.i) + ", " +
                                    std::to_string(e.j) + ")");
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

/// L with L(i,j) = -w_ij off the diagonal and zero row sums. The diagonal is
/// accumulated from the same weights, so L * 1 is exactly zero.
inline Matrix laplacian(const WeightedGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix L = Matrix::Zero(n, n);
  for (const auto& e : g.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    L(i, j) -= e.w;
    L(j, i) -= e.w;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) s += L(i, j);
    }
    L(i, i) = -s;
  }
  return L;
}

/// True iff the graph has exactly one connected component. The empty graph
/// (zero nodes) is reported as not connected.
inline bool is_connected(const WeightedGraph& g) {
  const auto n = g.size();
  if (n == 0) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::size_t components = n;
  for (const auto& e : g.edges()) {
    auto a = find(e.i);
    auto b = find(e.j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

/// n x (n-1) matrix S such that [1/sqrt(n) 1, S] is orthogonal. Built from the
/// Householder reflection mapping e_1 onto 1/sqrt(n) 1; S is its trailing
/// n-1 columns. For n = 1 the result is 1 x 0.
inline Matrix ones_complement(std::size_t n) {
  if (n == 0) throw std::invalid_argument("ones_complement: n must be positive");
  const auto N = static_cast<Eigen::Index>(n);
  if (n == 1) return Matrix(1, 0);
  Vector w = -Vector::Constant(N, 1.0 / std::sqrt(static_cast<double>(n)));
  w(0) += 1.0;
  w.normalize();
  Matrix H = Matrix::Identity(N, N) - 2.0 * w * w.transpose();
  return H.rightCols(N - 1);
}

struct DirectedLine {
  std::size_t from = 0;
  std::size_t to = 0;
};

struct LineIncidence {
  Matrix d_in;   // n x m, 1 where line k originates
  Matrix d_out;  // n x m, 1 where line k terminates
};

inline LineIncidence line_incidence(const std::vector<DirectedLine>& lines, std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  const auto m = static_cast<Eigen::Index>(lines.size());
  LineIncidence out{Matrix::Zero(N, m), Matrix::Zero(N, m)};
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& l = lines[static_cast<std::size_t>(k)];
    if (l.from >= n || l.to >= n) {
      throw std::invalid_argument("line " + std::to_string(k) + " endpoint out of range");
    }
    if (l.from == l.to) {
      throw std::invalid_argument("line " + std::to_string(k) + " is a self-loop");
    }
    out.d_in(static_cast<Eigen::Index>(l.from), k) = 1.0;
    out.d_out(static_cast<Eigen::Index>(l.to), k) = 1.0;
  }
  return out;
}

}  // namespace mtdcfc
