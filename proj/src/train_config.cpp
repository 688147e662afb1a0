#include "prn/train_config.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "prn/errors.hpp"

namespace prn {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_num(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw InvalidParam("bad value for '" + key + "': '" + value + "'");
  }
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidParam(std::string("TrainConfig: ") + what);
  };
  require(max_span_width >= 1, "max_span_width must be >= 1");
  require(top_span_ratio > 0.0 && top_span_ratio <= 1.0,
          "top_span_ratio must be in (0, 1]");
  require(detect_weight >= 0.0, "detect_weight must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must be in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must be in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be > 0");
  require(clip_norm > 0.0, "clip_norm must be > 0");
  require(patience >= 0, "patience must be >= 0");
  require(hidden >= 1, "hidden must be >= 1");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(refine_rounds >= 0 && refine_rounds <= 2,
          "refine_rounds must be in [0, 2]");
  require(coarse_cap >= 1, "coarse_cap must be >= 1");
  require(dev_fraction >= 0.0 && dev_fraction < 1.0,
          "dev_fraction must be in [0, 1)");
}

std::string TrainConfig::to_kv_string() const {
  std::ostringstream out;
  out << "adam_beta1 = " << fmt_double(adam_beta1) << '\n'
      << "adam_beta2 = " << fmt_double(adam_beta2) << '\n'
      << "adam_eps = " << fmt_double(adam_eps) << '\n'
      << "clip_norm = " << fmt_double(clip_norm) << '\n'
      << "coarse_cap = " << coarse_cap << '\n'
      << "detect_weight = " << fmt_double(detect_weight) << '\n'
      << "dev_fraction = " << fmt_double(dev_fraction) << '\n'
      << "dropout = " << fmt_double(dropout) << '\n'
      << "epochs = " << epochs << '\n'
      << "feature_dim = " << feature_dim << '\n'
      << "hidden = " << hidden << '\n'
      << "learning_rate = " << fmt_double(learning_rate) << '\n'
      << "max_span_width = " << max_span_width << '\n'
      << "patience = " << patience << '\n'
      << "refine_rounds = " << refine_rounds << '\n'
      << "seed = " << seed << '\n'
      << "top_span_ratio = " << fmt_double(top_span_ratio) << '\n';
  return out.str();
}

bool TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "max_span_width") max_span_width = parse_num<int>(key, value);
  else if (key == "top_span_ratio") top_span_ratio = parse_num<double>(key, value);
  else if (key == "detect_weight") detect_weight = parse_num<double>(key, value);
  else if (key == "epochs") epochs = parse_num<int>(key, value);
  else if (key == "learning_rate") learning_rate = parse_num<double>(key, value);
  else if (key == "adam_beta1") adam_beta1 = parse_num<double>(key, value);
  else if (key == "adam_beta2") adam_beta2 = parse_num<double>(key, value);
  else if (key == "adam_eps") adam_eps = parse_num<double>(key, value);
  else if (key == "clip_norm") clip_norm = parse_num<double>(key, value);
  else if (key == "patience") patience = parse_num<int>(key, value);
  else if (key == "seed") seed = parse_num<std::uint64_t>(key, value);
  else if (key == "hidden") hidden = parse_num<int>(key, value);
  else if (key == "feature_dim") feature_dim = parse_num<int>(key, value);
  else if (key == "dropout") dropout = parse_num<double>(key, value);
  else if (key == "refine_rounds") refine_rounds = parse_num<int>(key, value);
  else if (key == "coarse_cap") coarse_cap = parse_num<int>(key, value);
  else if (key == "dev_fraction") dev_fraction = parse_num<double>(key, value);
  else return false;
  return true;
}

TrainConfig TrainConfig::from_kv_string(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InvalidParam("config line " + std::to_string(line_no) +
                         ": expected 'key = value'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (!cfg.set(key, value)) {
      throw InvalidParam("config line " + std::to_string(line_no) +
                         ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace prn
