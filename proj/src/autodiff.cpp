#include "inbet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inbet/kernels.hpp"

namespace inbet::ad {

namespace {

void require_same(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b))
    throw Error(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                b.shape_string());
}

}  // namespace

Var Tape::push(Mat value, bool requires_grad, std::function<void()> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Tape::any_requires(std::initializer_list<Var> vs) const {
  return std::any_of(vs.begin(), vs.end(), [this](Var v) { return nodes_[v.id].requires_grad; });
}

Mat& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Mat(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Mat value) { return push(std::move(value), false, {}); }

Var Tape::parameter(Mat value) { return push(std::move(value), true, [] {}); }

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Mat(n.value.rows(), n.value.cols());
  return n.grad;
}

double Tape::scalar(Var v) const {
  const Mat& m = value(v);
  if (m.size() != 1) throw Error("Tape::scalar: node is " + m.shape_string());
  return m[0];
}

void Tape::backward(Var out) {
  if (nodes_[out.id].value.size() != 1) throw Error("Tape::backward: output must be 1x1");
  for (auto& n : nodes_) n.grad = Mat();
  if (!nodes_[out.id].requires_grad) return;
  grad_ref(out.id)[0] = 1.0;
  for (int id = out.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.requires_grad && !n.grad.empty() && n.backward) n.backward();
  }
}

Var Tape::add(Var a, Var b) {
  require_same(value(a), value(b), "add");
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += value(b)[i];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a, b}), [this, a, b, self] {
    const Mat& g = nodes_[self].grad;
    for (Var v : {a, b})
      if (requires_grad(v)) {
        Mat& gv = grad_ref(v.id);
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      }
  });
}

Var Tape::sub(Var a, Var b) {
  require_same(value(a), value(b), "sub");
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= value(b)[i];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a, b}), [this, a, b, self] {
    const Mat& g = nodes_[self].grad;
    if (requires_grad(a)) {
      Mat& ga = grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (requires_grad(b)) {
      Mat& gb = grad_ref(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require_same(value(a), value(b), "mul");
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= value(b)[i];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a, b}), [this, a, b, self] {
    const Mat& g = nodes_[self].grad;
    if (requires_grad(a)) {
      Mat& ga = grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * value(b)[i];
    }
    if (requires_grad(b)) {
      Mat& gb = grad_ref(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * value(a)[i];
    }
  });
}

Var Tape::add_row(Var a, Var row) {
  const Mat& va = value(a);
  const Mat& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols())
    throw Error("add_row: expected 1x" + std::to_string(va.cols()) + " row, got " +
                vr.shape_string());
  Mat out = va;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += vr[c];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a, row}), [this, a, row, self] {
    const Mat& g = nodes_[self].grad;
    if (requires_grad(a)) {
      Mat& ga = grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (requires_grad(row)) {
      Mat& gr = grad_ref(row.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    }
  });
}

Var Tape::scale(Var a, double s) { return affine(a, s, 0.0); }

Var Tape::affine(Var a, double m, double b) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m * out[i] + b;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, m, self] {
    const Mat& g = nodes_[self].grad;
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += m * g[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  Mat out = inbet::matmul(value(a), value(b));
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a, b}), [this, a, b, self] {
    const Mat& g = nodes_[self].grad;
    const auto& k = simd::active_kernels();
    const Mat& va = value(a);
    const Mat& vb = value(b);
    // dA += G * B^T ; dB += A^T * G
    if (requires_grad(a))
      k.gemm_nt(g.data(), vb.data(), grad_ref(a.id).data(), g.rows(), g.cols(), vb.rows());
    if (requires_grad(b))
      k.gemm_tn(va.data(), g.data(), grad_ref(b.id).data(), va.rows(), va.cols(), g.cols());
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  Mat out = inbet::matmul_nt(value(a), value(b));
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a, b}), [this, a, b, self] {
    const Mat& g = nodes_[self].grad;  // m x n, a: m x k, b: n x k
    const auto& k = simd::active_kernels();
    const Mat& va = value(a);
    const Mat& vb = value(b);
    // dA += G * B ; dB += G^T * A
    if (requires_grad(a))
      k.gemm_nn(g.data(), vb.data(), grad_ref(a.id).data(), g.rows(), g.cols(), vb.cols());
    if (requires_grad(b))
      k.gemm_tn(g.data(), va.data(), grad_ref(b.id).data(), g.rows(), g.cols(), va.cols());
  });
}

Var Tape::transpose(Var a) {
  Mat out = inbet::transpose(value(a));
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    Mat& ga = grad_ref(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(c, r) += g(r, c);
  });
}

Var Tape::relu(Var a) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& va = value(a);
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (va[i] > 0.0) ga[i] += g[i];
  });
}

Var Tape::sigmoid(Var a) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& y = nodes_[self].value;
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::log(Var a) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& va = value(a);
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
  });
}

Var Tape::exp(Var a) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& y = nodes_[self].value;
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var Tape::abs(Var a) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(out[i]);
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& va = value(a);
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += va[i] > 0.0 ? g[i] : (va[i] < 0.0 ? -g[i] : 0.0);
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Mat out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo, hi);
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, lo, hi, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& va = value(a);
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (va[i] > lo && va[i] < hi) ga[i] += g[i];
  });
}

Var Tape::row_softmax(Var a) {
  Mat out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : row) v /= s;
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self] {
    const Mat& g = nodes_[self].grad;
    const Mat& y = nodes_[self].value;
    Mat& ga = grad_ref(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dotgy = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dotgy += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dotgy);
    }
  });
}

Var Tape::gather_blocks(Var a, std::vector<int> index, int blocks) {
  const Mat& va = value(a);
  if (blocks < 1 || index.size() % static_cast<std::size_t>(blocks) != 0)
    throw Error("gather_blocks: index length is not a multiple of blocks");
  const std::size_t rows = index.size() / blocks;
  const std::size_t w = va.cols();
  Mat out(rows, w * blocks);
  for (std::size_t r = 0; r < rows; ++r)
    for (int b = 0; b < blocks; ++b) {
      const int src = index[r * blocks + b];
      if (src < 0) continue;
      if (static_cast<std::size_t>(src) >= va.rows()) throw Error("gather_blocks: index out of range");
      std::copy_n(va.data() + src * w, w, out.data() + r * w * blocks + b * w);
    }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}),
              [this, a, self, idx = std::move(index), blocks, w, rows] {
                const Mat& g = nodes_[self].grad;
                Mat& ga = grad_ref(a.id);
                const auto& k = simd::active_kernels();
                for (std::size_t r = 0; r < rows; ++r)
                  for (int b = 0; b < blocks; ++b) {
                    const int src = idx[r * blocks + b];
                    if (src < 0) continue;
                    k.axpy(1.0, g.data() + r * w * blocks + b * w, ga.data() + src * w, w);
                  }
              });
}

Var Tape::scale_rows(Var a, std::vector<double> factor) {
  Mat out = value(a);
  if (factor.size() != out.rows()) throw Error("scale_rows: factor length mismatch");
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= factor[r];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self, f = std::move(factor)] {
    const Mat& g = nodes_[self].grad;
    Mat& ga = grad_ref(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += f[r] * g(r, c);
  });
}

Var Tape::gather_elements(Var a, std::vector<std::pair<int, int>> at) {
  const Mat& va = value(a);
  Mat out(at.size(), 1);
  for (std::size_t n = 0; n < at.size(); ++n) {
    auto [i, j] = at[n];
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= va.rows() ||
        static_cast<std::size_t>(j) >= va.cols())
      throw Error("gather_elements: index out of range");
    out[n] = va(i, j);
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({a}), [this, a, self, at = std::move(at)] {
    const Mat& g = nodes_[self].grad;
    Mat& ga = grad_ref(a.id);
    for (std::size_t n = 0; n < at.size(); ++n) ga(at[n].first, at[n].second) += g[n];
  });
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).storage()) s += v;
  const int self = static_cast<int>(nodes_.size());
  return push(Mat(1, 1, s), any_requires({a}), [this, a, self] {
    const double g = nodes_[self].grad[0];
    Mat& ga = grad_ref(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var Tape::mean(Var a) {
  const std::size_t n = value(a).size();
  if (n == 0) throw Error("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var Tape::log_sinkhorn(Var scores, Var alpha, int iters) {
  const Mat& s = value(scores);
  if (value(alpha).size() != 1) throw Error("log_sinkhorn: alpha must be 1x1");
  if (iters < 1) throw Error("log_sinkhorn: iters must be >= 1");
  const std::size_t m = s.rows();
  const std::size_t n = s.cols();
  if (m == 0 || n == 0) throw Error("log_sinkhorn: empty score matrix");
  const double a = value(alpha)[0];

  Mat z(m + 1, n + 1, a);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) z(i, j) = s(i, j);

  const double norm = -std::log(static_cast<double>(m + n));
  std::vector<double> log_mu(m + 1, norm), log_nu(n + 1, norm);
  log_mu[m] = std::log(static_cast<double>(n)) + norm;
  log_nu[n] = std::log(static_cast<double>(m)) + norm;

  // us[t], vs[t] hold the potentials after iteration t (vs[0] = 0).
  std::vector<std::vector<double>> us(iters + 1, std::vector<double>(m + 1, 0.0));
  std::vector<std::vector<double>> vs(iters + 1, std::vector<double>(n + 1, 0.0));
  for (int t = 1; t <= iters; ++t) {
    const auto& vprev = vs[t - 1];
    auto& u = us[t];
    for (std::size_t i = 0; i <= m; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j <= n; ++j) mx = std::max(mx, z(i, j) + vprev[j]);
      double acc = 0.0;
      for (std::size_t j = 0; j <= n; ++j) acc += std::exp(z(i, j) + vprev[j] - mx);
      u[i] = log_mu[i] - (mx + std::log(acc));
    }
    auto& v = vs[t];
    for (std::size_t j = 0; j <= n; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i <= m; ++i) mx = std::max(mx, z(i, j) + u[i]);
      double acc = 0.0;
      for (std::size_t i = 0; i <= m; ++i) acc += std::exp(z(i, j) + u[i] - mx);
      v[j] = log_nu[j] - (mx + std::log(acc));
    }
  }
  Mat out(m + 1, n + 1);
  for (std::size_t i = 0; i <= m; ++i)
    for (std::size_t j = 0; j <= n; ++j) out(i, j) = z(i, j) + us[iters][i] + vs[iters][j] - norm;

  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_requires({scores, alpha}),
              [this, scores, alpha, self, z = std::move(z), us = std::move(us),
               vs = std::move(vs), log_mu = std::move(log_mu), log_nu = std::move(log_nu), m, n,
               iters] {
                const Mat& g = nodes_[self].grad;
                Mat gz = g;
                std::vector<double> gu(m + 1, 0.0), gv(n + 1, 0.0);
                for (std::size_t i = 0; i <= m; ++i)
                  for (std::size_t j = 0; j <= n; ++j) {
                    gu[i] += g(i, j);
                    gv[j] += g(i, j);
                  }
                std::vector<double> gv_prev(n + 1);
                for (int t = iters; t >= 1; --t) {
                  const auto& u = us[t];
                  const auto& v = vs[t];
                  const auto& vprev = vs[t - 1];
                  // v_t[j] = log_nu[j] - LSE_i(z_ij + u_t[i])
                  for (std::size_t i = 0; i <= m; ++i)
                    for (std::size_t j = 0; j <= n; ++j) {
                      const double w = gv[j] * std::exp(z(i, j) + u[i] + v[j] - log_nu[j]);
                      gz(i, j) -= w;
                      gu[i] -= w;
                    }
                  // u_t[i] = log_mu[i] - LSE_j(z_ij + v_{t-1}[j])
                  std::fill(gv_prev.begin(), gv_prev.end(), 0.0);
                  for (std::size_t i = 0; i <= m; ++i) {
                    if (gu[i] == 0.0) continue;
                    for (std::size_t j = 0; j <= n; ++j) {
                      const double w = gu[i] * std::exp(z(i, j) + vprev[j] + u[i] - log_mu[i]);
                      gz(i, j) -= w;
                      gv_prev[j] -= w;
                    }
                  }
                  gv.swap(gv_prev);
                  std::fill(gu.begin(), gu.end(), 0.0);
                }
                if (requires_grad(scores)) {
                  Mat& gs = grad_ref(scores.id);
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gs(i, j) += gz(i, j);
                }
                if (requires_grad(alpha)) {
                  double ga = 0.0;
                  for (std::size_t j = 0; j <= n; ++j) ga += gz(m, j);
                  for (std::size_t i = 0; i < m; ++i) ga += gz(i, n);
                  grad_ref(alpha.id)[0] += ga;
                }
              });
}

}  // namespace inbet::ad
