#include "slm/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slm/errors.hpp"

namespace slm::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw FormatError("config: bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw FormatError("config: bad boolean '" + value + "' for " + key);
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file", path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str(), path);
}

Bounding parse_bounding(const std::string& text) {
  if (text == "A" || text == "a") return Bounding::TypeA;
  if (text == "B" || text == "b") return Bounding::TypeB;
  throw FormatError("bounding must be A or B, got '" + text + "'");
}

VarianceSource parse_variance(const std::string& text, std::uint64_t seed) {
  if (text == "exact") return VarianceSource::exact();
  const std::string prefix = "lanczos:";
  if (text.rfind(prefix, 0) == 0) {
    const int k = parse_number<int>("variance", text.substr(prefix.size()));
    if (k < 1) throw FormatError("variance: Lanczos k must be positive");
    return VarianceSource::lanczos(k, seed);
  }
  throw FormatError("variance must be exact or lanczos:K, got '" + text + "'");
}

ExperimentConfig apply_key_values(ExperimentConfig c, const KeyValues& kv) {
  // Seed first: the Lanczos probe seed follows it.
  if (auto it = kv.find("seed"); it != kv.end()) c.seed = parse_number<std::uint64_t>("seed", it->second);
  for (const auto& [key, value] : kv) {
    if (key == "seed") {
      continue;
    } else if (key == "image") {
      c.image = value;
    } else if (key == "generator") {
      c.generator = value;
    } else if (key == "side") {
      c.side = parse_number<Index>(key, value);
    } else if (key == "tau_a") {
      c.tau_a = parse_number<double>(key, value);
    } else if (key == "tau_r") {
      c.tau_r = parse_number<double>(key, value);
    } else if (key == "potential") {
      if (value == "laplace") {
        c.potential = PotentialKind::Laplace;
      } else if (value == "student_t") {
        c.potential = PotentialKind::StudentT;
      } else {
        throw FormatError("potential must be laplace or student_t, got '" + value + "'");
      }
    } else if (key == "nu") {
      c.nu = parse_number<double>(key, value);
    } else if (key == "isotropic_tv") {
      c.isotropic_tv = parse_bool(key, value);
    } else if (key == "haar_levels") {
      c.haar_levels = parse_number<int>(key, value);
    } else if (key == "sigma2") {
      c.sigma2 = parse_number<double>(key, value);
    } else if (key == "noise_ratio") {
      c.noise_ratio = parse_number<double>(key, value);
    } else if (key == "bounding") {
      c.bounding = parse_bounding(value);
    } else if (key == "variance") {
      c.variance = parse_variance(value, c.seed);
    } else if (key == "outer_max") {
      c.outer_max = parse_number<int>(key, value);
    } else if (key == "map_epsilon") {
      c.map_epsilon = parse_number<double>(key, value);
    } else if (key == "columns") {
      c.columns = parse_number<Index>(key, value);
    } else if (key == "posterior_mean") {
      c.posterior_mean = parse_bool(key, value);
    } else if (key == "compare_bounding") {
      c.compare_bounding = parse_bool(key, value);
    } else if (key == "design") {
      c.design = value;
    } else if (key == "init_columns") {
      c.init_columns = parse_number<Index>(key, value);
    } else if (key == "total_columns") {
      c.total_columns = parse_number<Index>(key, value);
    } else if (key == "rd_repeats") {
      c.rd_repeats = parse_number<int>(key, value);
    } else if (key == "timing") {
      c.timing = parse_bool(key, value);
    } else if (key == "out") {
      c.out = value;
    } else {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
  if (!c.variance.is_exact()) c.variance.seed = c.seed;
  return c;
}

void validate(const ExperimentConfig& c) {
  if (!c.image.empty() && !std::filesystem::exists(c.image)) throw IoError("image file not found", c.image);
  if (c.image.empty() && c.generator != "phantom" && c.generator != "smooth_edges" &&
      c.generator != "smooth+edges") {
    throw FormatError("unknown generator '" + c.generator + "'");
  }
  if (c.side < 4 || (c.side & (c.side - 1)) != 0) throw DomainError("side must be a power of two >= 4");
  if (!(c.tau_a > 0.0) || !(c.tau_r > 0.0)) throw DomainError("tau_a and tau_r must be positive");
  if (c.potential == PotentialKind::StudentT && !(c.nu > 2.0)) throw DomainError("nu must exceed 2");
  if (!(c.noise_ratio > 0.0)) throw DomainError("noise_ratio must be positive");
  if (c.outer_max < 1) throw DomainError("outer_max must be positive");
  if (!(c.map_epsilon > 0.0)) throw DomainError("map_epsilon must be positive");
  if (c.rd_repeats < 1) throw DomainError("rd_repeats must be positive");
  static const char* kinds[] = {"op", "ct", "eq", "rd", "all"};
  if (std::find(std::begin(kinds), std::end(kinds), c.design) == std::end(kinds)) {
    throw FormatError("design must be op, ct, eq, rd or all, got '" + c.design + "'");
  }
}

}  // namespace slm::app
