#pragma once

#include <cstdint>
#include <string>

namespace prn {

// Training hyperparameters. Also embedded (as a key = value echo) in
// checkpoints so a model file records how it was produced.
struct TrainConfig {
  int max_span_width = 10;     // L
  double top_span_ratio = 0.4; // lambda
  double detect_weight = 0.2;  // lambda_detect
  int epochs = 100;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int patience = 10;
  std::uint64_t seed = 1;
  int hidden = 1200;
  int feature_dim = 20;
  double dropout = 0.3;
  int refine_rounds = 1;
  int coarse_cap = 50;       // C
  double dev_fraction = 0.1; // 0 means dev = train

  void validate() const;  // throws InvalidParam
  // Sorted "key = value" lines; doubles use shortest round-trip form.
  std::string to_kv_string() const;
  static TrainConfig from_kv_string(const std::string& text);

  // Assigns one field by key; returns false for unknown keys, throws
  // InvalidParam on unparseable values.
  bool set(const std::string& key, const std::string& value);

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace prn
