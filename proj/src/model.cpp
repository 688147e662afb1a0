#include "prn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "prn/errors.hpp"
#include "prn/rng.hpp"

namespace prn {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'N', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxSide = 1u << 24;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) {
    throw CheckpointError(CheckpointError::Kind::Truncated,
                          std::string("checkpoint truncated while reading ") + what);
  }
  return v;
}

Ffnn make_ffnn(int in_dim, int hidden) {
  Ffnn f;
  f.w1 = Mat::zeros(hidden, in_dim);
  f.b1.assign(hidden, 0.0);
  f.w2 = Mat::zeros(hidden, hidden);
  f.b2.assign(hidden, 0.0);
  return f;
}

void xavier_fill(std::vector<double>& data, int fan_in, int fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : data) v = rng.uniform(-bound, bound);
}

}  // namespace

ModelParams ModelParams::init(int token_dim, int feature_dim, int hidden,
                              std::uint64_t seed) {
  if (token_dim < 1 || feature_dim < 1 || hidden < 1) {
    throw InvalidParam("ModelParams::init: dimensions must be >= 1");
  }
  ModelParams p;
  p.token_dim = token_dim;
  p.feature_dim = feature_dim;
  p.hidden = hidden;
  int g = p.rep_dim();
  p.attention = make_ffnn(token_dim, hidden);
  p.attention_proj.assign(hidden, 0.0);
  p.mention = make_ffnn(g, hidden);
  p.mention_proj.assign(hidden, 0.0);
  p.antecedent = make_ffnn(3 * g, hidden);
  p.antecedent_proj.assign(hidden, 0.0);
  p.coarse = Mat::zeros(g, g);
  p.pronoun_features = Mat::zeros(4, feature_dim);
  p.refine_gate_w = Mat::zeros(g, 2 * g);
  p.refine_gate_b.assign(g, 0.0);

  // One fixed draw order keeps initialization reproducible across platforms.
  Rng rng(seed);
  auto fill_ffnn = [&](Ffnn& f) {
    xavier_fill(f.w1.a, f.w1.cols, f.w1.rows, rng);
    xavier_fill(f.w2.a, f.w2.cols, f.w2.rows, rng);
  };
  fill_ffnn(p.attention);
  xavier_fill(p.attention_proj, hidden, 1, rng);
  fill_ffnn(p.mention);
  // mention_proj (U_m) stays zero
  fill_ffnn(p.antecedent);
  // antecedent_proj (U_a) stays zero
  xavier_fill(p.coarse.a, g, g, rng);
  xavier_fill(p.pronoun_features.a, 4, feature_dim, rng);
  xavier_fill(p.refine_gate_w.a, 2 * g, g, rng);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p;
  p.token_dim = other.token_dim;
  p.feature_dim = other.feature_dim;
  p.hidden = other.hidden;
  int g = p.rep_dim();
  p.attention = make_ffnn(p.token_dim, p.hidden);
  p.attention_proj.assign(p.hidden, 0.0);
  p.mention = make_ffnn(g, p.hidden);
  p.mention_proj.assign(p.hidden, 0.0);
  p.antecedent = make_ffnn(3 * g, p.hidden);
  p.antecedent_proj.assign(p.hidden, 0.0);
  p.coarse = Mat::zeros(g, g);
  p.pronoun_features = Mat::zeros(4, p.feature_dim);
  p.refine_gate_w = Mat::zeros(g, 2 * g);
  p.refine_gate_b.assign(g, 0.0);
  return p;
}

std::vector<TensorView> ModelParams::tensors() {
  auto mat = [](const char* name, Mat& m) {
    return TensorView{name, {m.rows, m.cols}, &m.a};
  };
  auto vec = [](const char* name, std::vector<double>& v) {
    return TensorView{name, {static_cast<int>(v.size())}, &v};
  };
  return {
      mat("attention.w1", attention.w1),
      vec("attention.b1", attention.b1),
      mat("attention.w2", attention.w2),
      vec("attention.b2", attention.b2),
      vec("attention.proj", attention_proj),
      mat("mention.w1", mention.w1),
      vec("mention.b1", mention.b1),
      mat("mention.w2", mention.w2),
      vec("mention.b2", mention.b2),
      vec("mention.proj", mention_proj),
      mat("antecedent.w1", antecedent.w1),
      vec("antecedent.b1", antecedent.b1),
      mat("antecedent.w2", antecedent.w2),
      vec("antecedent.b2", antecedent.b2),
      vec("antecedent.proj", antecedent_proj),
      mat("coarse.w", coarse),
      mat("pronoun_features", pronoun_features),
      mat("refine_gate.w", refine_gate_w),
      vec("refine_gate.b", refine_gate_b),
  };
}

void ModelParams::check_shapes() const {
  int g = rep_dim();
  auto expect = [](bool ok, const char* what) {
    if (!ok) throw ShapeMismatch(std::string("ModelParams: bad shape for ") + what);
  };
  auto check_ffnn = [&](const Ffnn& f, int in_dim, const char* what) {
    expect(f.w1.rows == hidden && f.w1.cols == in_dim &&
               f.w1.a.size() == static_cast<std::size_t>(hidden) * in_dim,
           what);
    expect(static_cast<int>(f.b1.size()) == hidden, what);
    expect(f.w2.rows == hidden && f.w2.cols == hidden &&
               f.w2.a.size() == static_cast<std::size_t>(hidden) * hidden,
           what);
    expect(static_cast<int>(f.b2.size()) == hidden, what);
  };
  expect(token_dim >= 1 && feature_dim >= 1 && hidden >= 1, "dimensions");
  check_ffnn(attention, token_dim, "attention FFNN");
  expect(static_cast<int>(attention_proj.size()) == hidden, "attention.proj");
  check_ffnn(mention, g, "mention FFNN");
  expect(static_cast<int>(mention_proj.size()) == hidden, "mention.proj");
  check_ffnn(antecedent, 3 * g, "antecedent FFNN");
  expect(static_cast<int>(antecedent_proj.size()) == hidden, "antecedent.proj");
  expect(coarse.rows == g && coarse.cols == g &&
             coarse.a.size() == static_cast<std::size_t>(g) * g,
         "coarse.w");
  expect(pronoun_features.rows == 4 && pronoun_features.cols == feature_dim &&
             pronoun_features.a.size() == static_cast<std::size_t>(4) * feature_dim,
         "pronoun_features");
  expect(refine_gate_w.rows == g && refine_gate_w.cols == 2 * g &&
             refine_gate_w.a.size() == static_cast<std::size_t>(g) * 2 * g,
         "refine_gate.w");
  expect(static_cast<int>(refine_gate_b.size()) == g, "refine_gate.b");
}

bool ModelParams::all_finite() const {
  ModelParams& self = const_cast<ModelParams&>(*this);
  for (const TensorView& t : self.tensors()) {
    for (double v : *t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<double> ffnn_hidden(const Ffnn& f, std::span<const double> x) {
  if (static_cast<int>(x.size()) != f.w1.cols) {
    throw ShapeMismatch("ffnn_hidden: input size mismatch");
  }
  std::vector<double> h1(f.w1.rows);
  for (int r = 0; r < f.w1.rows; ++r) {
    double acc = f.b1[r];
    const double* wr = f.w1.a.data() + static_cast<std::size_t>(r) * f.w1.cols;
    for (int c = 0; c < f.w1.cols; ++c) acc += wr[c] * x[c];
    h1[r] = acc > 0 ? acc : 0.0;
  }
  std::vector<double> h2(f.w2.rows);
  for (int r = 0; r < f.w2.rows; ++r) {
    double acc = f.b2[r];
    const double* wr = f.w2.a.data() + static_cast<std::size_t>(r) * f.w2.cols;
    for (int c = 0; c < f.w2.cols; ++c) acc += wr[c] * h1[c];
    h2[r] = acc > 0 ? acc : 0.0;
  }
  return h2;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void save_checkpoint(const ModelParams& params, const TrainConfig& config,
                     std::ostream& out) {
  ModelParams& p = const_cast<ModelParams&>(params);
  p.check_shapes();
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.token_dim));
  put_u32(out, static_cast<std::uint32_t>(params.feature_dim));
  put_u32(out, static_cast<std::uint32_t>(params.hidden));
  std::string echo = config.to_kv_string();
  put_u32(out, static_cast<std::uint32_t>(echo.size()));
  out.write(echo.data(), static_cast<std::streamsize>(echo.size()));
  std::vector<TensorView> tensors = p.tensors();
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const TensorView& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int dim : t.shape) put_u32(out, static_cast<std::uint32_t>(dim));
    std::vector<float> buf(t.data->begin(), t.data->end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

void save_checkpoint_file(const ModelParams& params, const TrainConfig& config,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  save_checkpoint(params, config, out);
  if (!out) throw IoError("failed while writing checkpoint: " + path);
}

ModelParams load_checkpoint(std::istream& in, TrainConfig* config_out) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic,
                          "not a PRN1 checkpoint file");
  }
  std::uint32_t version = get_u32(in, "version");
  if (version != kVersion) {
    throw CheckpointError(CheckpointError::Kind::BadVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  std::uint32_t token_dim = get_u32(in, "token_dim");
  std::uint32_t feature_dim = get_u32(in, "feature_dim");
  std::uint32_t hidden = get_u32(in, "hidden");
  if (token_dim == 0 || token_dim > kMaxSide || feature_dim == 0 ||
      feature_dim > kMaxSide || hidden == 0 || hidden > kMaxSide) {
    throw CheckpointError(CheckpointError::Kind::Truncated,
                          "implausible checkpoint dimensions");
  }
  std::uint32_t echo_len = get_u32(in, "config length");
  if (echo_len > (1u << 20)) {
    throw CheckpointError(CheckpointError::Kind::Truncated,
                          "implausible config echo length");
  }
  std::string echo(echo_len, '\0');
  if (!in.read(echo.data(), echo_len)) {
    throw CheckpointError(CheckpointError::Kind::Truncated,
                          "checkpoint truncated while reading config echo");
  }
  if (config_out != nullptr) *config_out = TrainConfig::from_kv_string(echo);

  ModelParams params;
  {
    ModelParams proto;
    proto.token_dim = static_cast<int>(token_dim);
    proto.feature_dim = static_cast<int>(feature_dim);
    proto.hidden = static_cast<int>(hidden);
    params = ModelParams::zeros_like(proto);
  }
  std::vector<TensorView> tensors = params.tensors();
  std::uint32_t count = get_u32(in, "tensor count");
  if (count != tensors.size()) {
    throw CheckpointError(CheckpointError::Kind::TensorMismatch,
                          "checkpoint holds " + std::to_string(count) +
                              " tensors, expected " + std::to_string(tensors.size()));
  }
  for (TensorView& t : tensors) {
    std::uint32_t name_len = get_u32(in, "tensor name length");
    std::string name(name_len, '\0');
    if (name_len > 4096 || !in.read(name.data(), name_len)) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            "checkpoint truncated while reading tensor name");
    }
    if (name != t.name) {
      throw CheckpointError(CheckpointError::Kind::TensorMismatch,
                            "unexpected tensor '" + name + "', expected '" +
                                t.name + "'");
    }
    std::uint32_t ndim = get_u32(in, "tensor rank");
    if (ndim != t.shape.size()) {
      throw CheckpointError(CheckpointError::Kind::TensorMismatch,
                            "tensor '" + name + "' has unexpected rank");
    }
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      std::uint32_t dim = get_u32(in, "tensor dim");
      if (dim != static_cast<std::uint32_t>(t.shape[i])) {
        throw CheckpointError(CheckpointError::Kind::TensorMismatch,
                              "tensor '" + name + "' has unexpected shape");
      }
      total *= dim;
    }
    std::vector<float> buf(total);
    if (total > 0 &&
        !in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(total * sizeof(float)))) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            "checkpoint truncated while reading tensor '" + name + "'");
    }
    t.data->assign(buf.begin(), buf.end());
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw CheckpointError(CheckpointError::Kind::TensorMismatch,
                          "trailing bytes after checkpoint payload");
  }
  return params;
}

ModelParams load_checkpoint_file(const std::string& path, TrainConfig* config_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return load_checkpoint(in, config_out);
}

}  // namespace prn
