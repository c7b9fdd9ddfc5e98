// Laplacian spectral embedding of a line graph.
//
// L = D - T is decomposed densely. The first `components` eigenpairs span the
// per-component constant vectors and are skipped; the next `dim` eigenvectors
// become the embedding columns. Each column is sign-fixed so that its
// largest-magnitude entry (lowest vertex index on ties) is positive. Runs of
// eigenvalues closer than 1e-9 form a multiplet whose columns are reordered by
// the index of their sign-fixing entry. Missing columns are zero.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "inbet/geom.hpp"

namespace inbet {

namespace {

constexpr double kMultipletTol = 1e-9;
constexpr double kTieTol = 1e-12;

int count_components(const LineGraph& g) {
  const auto adj = adjacency_lists(g);
  std::vector<std::uint8_t> seen(adj.size(), 0);
  int comps = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < adj.size(); ++s) {
    if (seen[s]) continue;
    ++comps;
    seen[s] = 1;
    stack.push_back(static_cast<int>(s));
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int n : adj[v])
        if (!seen[n]) {
          seen[n] = 1;
          stack.push_back(n);
        }
    }
  }
  return comps;
}

// Index of the entry that fixes the sign of column c.
int sign_anchor(const Mat& vecs, std::size_t c) {
  int best = 0;
  double best_abs = -1.0;
  for (std::size_t r = 0; r < vecs.rows(); ++r) {
    const double a = std::abs(vecs(r, c));
    if (a > best_abs + kTieTol) {
      best_abs = a;
      best = static_cast<int>(r);
    }
  }
  return best;
}

}  // namespace

Mat laplacian(const LineGraph& g) {
  const std::size_t k = g.vertices.size();
  Mat l(k, k);
  for (auto [i, j] : g.edges) {
    l(i, j) -= 1.0;
    l(j, i) -= 1.0;
    l(i, i) += 1.0;
    l(j, j) += 1.0;
  }
  return l;
}

SpectralDecomposition laplacian_eigen(const LineGraph& g) {
  const int k = g.size();
  SpectralDecomposition out;
  out.components = count_components(g);
  if (k == 0) return out;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k, k);
  for (auto [i, j] : g.edges) {
    l(i, j) -= 1.0;
    l(j, i) -= 1.0;
    l(i, i) += 1.0;
    l(j, j) += 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l);
  if (solver.info() != Eigen::Success) throw Error("laplacian_eigen: decomposition failed");
  out.eigenvalues.resize(k);
  out.eigenvectors = Mat(k, k);
  for (int c = 0; c < k; ++c) {
    out.eigenvalues[c] = solver.eigenvalues()(c);
    for (int r = 0; r < k; ++r) out.eigenvectors(r, c) = solver.eigenvectors()(r, c);
  }
  return out;
}

Mat spectral_embedding(const LineGraph& g, int dim) {
  if (dim < 1) throw Error("spectral_embedding: dim must be >= 1");
  const int k = g.size();
  Mat out(k, dim);
  if (k == 0) return out;
  SpectralDecomposition eig = laplacian_eigen(g);
  Mat& vecs = eig.eigenvectors;

  const int first = eig.components;
  const int usable = std::min(dim, k - first);
  if (usable <= 0) return out;

  std::vector<int> anchor(k, 0);
  for (int c = first; c < first + usable; ++c) {
    anchor[c] = sign_anchor(vecs, c);
    if (vecs(anchor[c], c) < 0)
      for (int r = 0; r < k; ++r) vecs(r, c) = -vecs(r, c);
  }

  // Group into multiplets over the whole tail so a multiplet straddling the
  // cut is ordered consistently before truncation.
  std::vector<int> cols(k - first);
  std::iota(cols.begin(), cols.end(), first);
  for (int c = first + usable; c < k; ++c) anchor[c] = sign_anchor(vecs, c);
  std::size_t start = 0;
  while (start < cols.size()) {
    std::size_t end = start + 1;
    while (end < cols.size() &&
           eig.eigenvalues[cols[end]] - eig.eigenvalues[cols[end - 1]] < kMultipletTol)
      ++end;
    std::stable_sort(cols.begin() + start, cols.begin() + end,
                     [&](int a, int b) { return anchor[a] < anchor[b]; });
    start = end;
  }

  for (int c = 0; c < usable; ++c) {
    const int src = cols[c];
    int a = sign_anchor(vecs, src);
    const double sign = vecs(a, src) < 0 ? -1.0 : 1.0;
    for (int r = 0; r < k; ++r) out(r, c) = sign * vecs(r, src);
  }
  return out;
}

}  // namespace inbet
