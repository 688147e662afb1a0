#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prn/train_config.hpp"

namespace prn {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  static Mat zeros(int r, int c) {
    Mat m;
    m.rows = r;
    m.cols = c;
    m.a.assign(static_cast<std::size_t>(r) * c, 0.0);
    return m;
  }
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const {
    return {a.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }
  bool operator==(const Mat&) const = default;
};

// Two rectifier hidden layers; callers apply their own output projection.
struct Ffnn {
  Mat w1;                  // hidden x in
  std::vector<double> b1;  // hidden
  Mat w2;                  // hidden x hidden
  std::vector<double> b2;  // hidden
  bool operator==(const Ffnn&) const = default;
};

// Named view over one parameter tensor, used by the optimizer and the
// checkpoint writer so every learnable tensor is enumerated exactly once.
struct TensorView {
  std::string name;
  std::vector<int> shape;
  std::vector<double>* data;
};

enum class PronounType;  // corpus.hpp

struct ModelParams {
  int token_dim = 0;    // d
  int feature_dim = 0;  // f
  int hidden = 0;       // h

  Ffnn attention;                        // input d
  std::vector<double> attention_proj;    // w_alpha, length h
  Ffnn mention;                          // input 3d+f
  std::vector<double> mention_proj;      // U_m, length h
  Ffnn antecedent;                       // input 3(3d+f)
  std::vector<double> antecedent_proj;   // U_a, length h
  Mat coarse;                            // W_c, (3d+f) x (3d+f)
  Mat pronoun_features;                  // 4 x f, rows indexed by PronounType
  Mat refine_gate_w;                     // (3d+f) x 2(3d+f)
  std::vector<double> refine_gate_b;     // 3d+f

  int rep_dim() const { return 3 * token_dim + feature_dim; }

  // Xavier-uniform weights, zero biases; U_m and U_a start at zero so initial
  // scores are 0 and the dummy antecedent is competitive.
  static ModelParams init(int token_dim, int feature_dim, int hidden,
                          std::uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);

  std::vector<TensorView> tensors();  // canonical order, stable names
  void check_shapes() const;          // throws ShapeMismatch
  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;
};

// Plain forward pass through both rectifier layers (inference path).
std::vector<double> ffnn_hidden(const Ffnn& f, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, TensorMismatch };
  CheckpointError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Checkpoint: "PRN1" magic, u32 version, dims, TrainConfig echo, named f32
// tensors. load(save(p)) is bit-exact because parameters are quantized to f32
// on save and promoted back on load.
void save_checkpoint(const ModelParams& params, const TrainConfig& config,
                     std::ostream& out);
void save_checkpoint_file(const ModelParams& params, const TrainConfig& config,
                          const std::string& path);
ModelParams load_checkpoint(std::istream& in, TrainConfig* config_out = nullptr);
ModelParams load_checkpoint_file(const std::string& path,
                                 TrainConfig* config_out = nullptr);

}  // namespace prn
