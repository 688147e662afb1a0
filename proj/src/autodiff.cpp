#include "prn/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <memory>

#include "prn/errors.hpp"

namespace prn::ad {

namespace {

void check_same_size(const Vec& a, const Vec& b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeMismatch(std::string(op) + ": operand sizes differ");
  }
}

double stable_softplus(double s) {
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

}  // namespace

VarId Tape::push(Vec value, std::function<void(Tape&)> back) {
  Node node;
  node.grad.assign(value.size(), 0.0);
  node.value = std::move(value);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<VarId>(nodes_.size()) - 1;
}

VarId Tape::constant(Vec v) { return push(std::move(v), {}); }

VarId Tape::scalar(double v) { return push({v}, {}); }

VarId Tape::param(std::span<const double> v, double* grad_sink) {
  VarId id = push(Vec(v.begin(), v.end()), {});
  if (grad_sink != nullptr) params_.push_back({id, grad_sink});
  return id;
}

VarId Tape::affine(VarId w, int rows, int cols, VarId x, VarId b) {
  const Vec& wv = nodes_[w].value;
  const Vec& xv = nodes_[x].value;
  const Vec& bv = nodes_[b].value;
  if (static_cast<int>(wv.size()) != rows * cols ||
      static_cast<int>(xv.size()) != cols ||
      static_cast<int>(bv.size()) != rows) {
    throw ShapeMismatch("affine: shape mismatch");
  }
  Vec y(rows);
  for (int r = 0; r < rows; ++r) {
    const double* wr = wv.data() + static_cast<std::size_t>(r) * cols;
    double acc = bv[r];
    for (int c = 0; c < cols; ++c) acc += wr[c] * xv[c];
    y[r] = acc;
  }
  VarId out = push(std::move(y), {});
  nodes_[out].back = [w, rows, cols, x, b, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    const Vec& wv2 = t.nodes_[w].value;
    const Vec& xv2 = t.nodes_[x].value;
    Vec& dw = t.nodes_[w].grad;
    Vec& dx = t.nodes_[x].grad;
    Vec& db = t.nodes_[b].grad;
    for (int r = 0; r < rows; ++r) {
      double dyr = dy[r];
      db[r] += dyr;
      if (dyr == 0.0) continue;
      const double* wr = wv2.data() + static_cast<std::size_t>(r) * cols;
      double* dwr = dw.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        dwr[c] += dyr * xv2[c];
        dx[c] += dyr * wr[c];
      }
    }
  };
  return out;
}

VarId Tape::add(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "add");
  Vec y(nodes_[a].value);
  const Vec& bv = nodes_[b].value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, b, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    Vec& da = t.nodes_[a].grad;
    Vec& db = t.nodes_[b].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  };
  return out;
}

VarId Tape::sub(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "sub");
  Vec y(nodes_[a].value);
  const Vec& bv = nodes_[b].value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, b, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    Vec& da = t.nodes_[a].grad;
    Vec& db = t.nodes_[b].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] -= dy[i];
    }
  };
  return out;
}

VarId Tape::hadamard(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "hadamard");
  Vec y(nodes_[a].value);
  const Vec& bv = nodes_[b].value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, b, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    const Vec& av = t.nodes_[a].value;
    const Vec& bv2 = t.nodes_[b].value;
    Vec& da = t.nodes_[a].grad;
    Vec& db = t.nodes_[b].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i] * bv2[i];
      db[i] += dy[i] * av[i];
    }
  };
  return out;
}

VarId Tape::scale(VarId a, double k) {
  Vec y(nodes_[a].value);
  for (double& v : y) v *= k;
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, k, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    Vec& da = t.nodes_[a].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += k * dy[i];
  };
  return out;
}

VarId Tape::relu(VarId a) {
  Vec y(nodes_[a].value);
  for (double& v : y) v = v > 0 ? v : 0.0;
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    const Vec& av = t.nodes_[a].value;
    Vec& da = t.nodes_[a].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (av[i] > 0) da[i] += dy[i];
    }
  };
  return out;
}

VarId Tape::sigmoid(VarId a) {
  Vec y(nodes_[a].value);
  for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    const Vec& yv = t.nodes_[out].value;
    Vec& da = t.nodes_[a].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i] * yv[i] * (1.0 - yv[i]);
    }
  };
  return out;
}

VarId Tape::dot(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "dot");
  const Vec& av = nodes_[a].value;
  const Vec& bv = nodes_[b].value;
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  VarId out = push({acc}, {});
  nodes_[out].back = [a, b, out](Tape& t) {
    double dy = t.nodes_[out].grad[0];
    const Vec& av2 = t.nodes_[a].value;
    const Vec& bv2 = t.nodes_[b].value;
    Vec& da = t.nodes_[a].grad;
    Vec& db = t.nodes_[b].grad;
    for (std::size_t i = 0; i < av2.size(); ++i) {
      da[i] += dy * bv2[i];
      db[i] += dy * av2[i];
    }
  };
  return out;
}

VarId Tape::concat(const std::vector<VarId>& parts) {
  Vec y;
  for (VarId p : parts) {
    const Vec& pv = nodes_[p].value;
    y.insert(y.end(), pv.begin(), pv.end());
  }
  VarId out = push(std::move(y), {});
  nodes_[out].back = [parts, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    std::size_t offset = 0;
    for (VarId p : parts) {
      Vec& dp = t.nodes_[p].grad;
      for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += dy[offset + i];
      offset += dp.size();
    }
  };
  return out;
}

VarId Tape::row(VarId mat, int r, int cols) {
  const Vec& mv = nodes_[mat].value;
  std::size_t offset = static_cast<std::size_t>(r) * cols;
  if (offset + cols > mv.size()) throw ShapeMismatch("row: slice out of range");
  Vec y(mv.begin() + offset, mv.begin() + offset + cols);
  VarId out = push(std::move(y), {});
  nodes_[out].back = [mat, offset, cols, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    Vec& dm = t.nodes_[mat].grad;
    for (int i = 0; i < cols; ++i) dm[offset + i] += dy[i];
  };
  return out;
}

VarId Tape::stack(const std::vector<VarId>& scalars) {
  Vec y;
  y.reserve(scalars.size());
  for (VarId s : scalars) {
    if (nodes_[s].value.size() != 1) throw ShapeMismatch("stack: non-scalar input");
    y.push_back(nodes_[s].value[0]);
  }
  VarId out = push(std::move(y), {});
  nodes_[out].back = [scalars, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      t.nodes_[scalars[i]].grad[0] += dy[i];
    }
  };
  return out;
}

VarId Tape::sum(const std::vector<VarId>& scalars) {
  double acc = 0.0;
  for (VarId s : scalars) {
    if (nodes_[s].value.size() != 1) throw ShapeMismatch("sum: non-scalar input");
    acc += nodes_[s].value[0];
  }
  VarId out = push({acc}, {});
  nodes_[out].back = [scalars, out](Tape& t) {
    double dy = t.nodes_[out].grad[0];
    for (VarId s : scalars) t.nodes_[s].grad[0] += dy;
  };
  return out;
}

VarId Tape::softmax(VarId a) {
  const Vec& av = nodes_[a].value;
  if (av.empty()) throw ShapeMismatch("softmax: empty input");
  double m = *std::max_element(av.begin(), av.end());
  Vec y(av.size());
  double z = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    y[i] = std::exp(av[i] - m);
    z += y[i];
  }
  for (double& v : y) v /= z;
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    const Vec& p = t.nodes_[out].value;
    Vec& da = t.nodes_[a].grad;
    double dot_dp = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot_dp += dy[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) {
      da[i] += p[i] * (dy[i] - dot_dp);
    }
  };
  return out;
}

VarId Tape::logsumexp(VarId a) {
  const Vec& av = nodes_[a].value;
  if (av.empty()) throw ShapeMismatch("logsumexp: empty input");
  double m = *std::max_element(av.begin(), av.end());
  double z = 0.0;
  for (double v : av) z += std::exp(v - m);
  VarId out = push({m + std::log(z)}, {});
  nodes_[out].back = [a, out](Tape& t) {
    double dy = t.nodes_[out].grad[0];
    double lse = t.nodes_[out].value[0];
    const Vec& av2 = t.nodes_[a].value;
    Vec& da = t.nodes_[a].grad;
    for (std::size_t i = 0; i < av2.size(); ++i) {
      da[i] += dy * std::exp(av2[i] - lse);
    }
  };
  return out;
}

VarId Tape::logsumexp_subset(VarId a, std::vector<int> idx) {
  const Vec& av = nodes_[a].value;
  if (idx.empty()) throw ShapeMismatch("logsumexp_subset: empty index set");
  double m = av[idx[0]];
  for (int i : idx) m = std::max(m, av[i]);
  double z = 0.0;
  for (int i : idx) z += std::exp(av[i] - m);
  VarId out = push({m + std::log(z)}, {});
  nodes_[out].back = [a, idx = std::move(idx), out](Tape& t) {
    double dy = t.nodes_[out].grad[0];
    double lse = t.nodes_[out].value[0];
    const Vec& av2 = t.nodes_[a].value;
    Vec& da = t.nodes_[a].grad;
    for (int i : idx) da[i] += dy * std::exp(av2[i] - lse);
  };
  return out;
}

VarId Tape::bce_with_logit(VarId s, double label) {
  if (nodes_[s].value.size() != 1) throw ShapeMismatch("bce_with_logit: non-scalar");
  double sv = nodes_[s].value[0];
  VarId out = push({stable_softplus(sv) - label * sv}, {});
  nodes_[out].back = [s, label, out](Tape& t) {
    double dy = t.nodes_[out].grad[0];
    double sv2 = t.nodes_[s].value[0];
    double sig = 1.0 / (1.0 + std::exp(-sv2));
    t.nodes_[s].grad[0] += dy * (sig - label);
  };
  return out;
}

VarId Tape::weighted_rows(const double* xs, int k, int d, VarId weights) {
  const Vec& wv = nodes_[weights].value;
  if (static_cast<int>(wv.size()) != k) {
    throw ShapeMismatch("weighted_rows: weight count mismatch");
  }
  Vec y(d, 0.0);
  for (int t = 0; t < k; ++t) {
    const double* xr = xs + static_cast<std::size_t>(t) * d;
    for (int i = 0; i < d; ++i) y[i] += wv[t] * xr[i];
  }
  VarId out = push(std::move(y), {});
  nodes_[out].back = [xs, k, d, weights, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    Vec& dw = t.nodes_[weights].grad;
    for (int r = 0; r < k; ++r) {
      const double* xr = xs + static_cast<std::size_t>(r) * d;
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += xr[i] * dy[i];
      dw[r] += acc;
    }
  };
  return out;
}

VarId Tape::weighted_sum(VarId weights, const std::vector<VarId>& vecs) {
  const Vec& wv = nodes_[weights].value;
  if (wv.size() != vecs.size()) {
    throw ShapeMismatch("weighted_sum: weight count mismatch");
  }
  if (vecs.empty()) throw ShapeMismatch("weighted_sum: empty input");
  Vec y(nodes_[vecs[0]].value.size(), 0.0);
  for (std::size_t t = 0; t < vecs.size(); ++t) {
    const Vec& xv = nodes_[vecs[t]].value;
    check_same_size(y, xv, "weighted_sum");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += wv[t] * xv[i];
  }
  VarId out = push(std::move(y), {});
  nodes_[out].back = [weights, vecs, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    const Vec& wv2 = t.nodes_[weights].value;
    Vec& dw = t.nodes_[weights].grad;
    for (std::size_t r = 0; r < vecs.size(); ++r) {
      const Vec& xv = t.nodes_[vecs[r]].value;
      Vec& dx = t.nodes_[vecs[r]].grad;
      double acc = 0.0;
      for (std::size_t i = 0; i < dy.size(); ++i) {
        acc += xv[i] * dy[i];
        dx[i] += wv2[r] * dy[i];
      }
      dw[r] += acc;
    }
  };
  return out;
}

VarId Tape::dropout(VarId a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw InvalidParam("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return a;
  const Vec& av = nodes_[a].value;
  double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<char>>(av.size());
  Vec y(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    (*mask)[i] = rng.uniform() >= rate ? 1 : 0;
    y[i] = (*mask)[i] ? av[i] / keep : 0.0;
  }
  VarId out = push(std::move(y), {});
  nodes_[out].back = [a, mask, keep, out](Tape& t) {
    const Vec& dy = t.nodes_[out].grad;
    Vec& da = t.nodes_[a].grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if ((*mask)[i]) da[i] += dy[i] / keep;
    }
  };
  return out;
}

void Tape::backward(VarId loss) {
  if (nodes_[loss].value.size() != 1) {
    throw ShapeMismatch("backward: loss must be scalar");
  }
  nodes_[loss].grad[0] = 1.0;
  for (VarId id = loss; id >= 0; --id) {
    if (nodes_[id].back) nodes_[id].back(*this);
  }
}

void Tape::flush_grads() {
  for (auto& [id, sink] : params_) {
    const Vec& g = nodes_[id].grad;
    for (std::size_t i = 0; i < g.size(); ++i) sink[i] += g[i];
  }
}

}  // namespace prn::ad
