#include "qrmap/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qrmap/errors.hpp"
#include "qrmap/loss.hpp"
#include "qrmap/text_io.hpp"

namespace qrmap {

namespace {

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Transform parse_transform(const std::string& s, int line) {
  if (s == "none") return Transform::none;
  if (s == "log") return Transform::log;
  throw ConfigError("config line " + std::to_string(line) + ": unknown transform '" + s + "' (none|log)");
}

std::uint64_t parse_uint(const std::string& s, int line, const std::string& key) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) throw ConfigError("config line " + std::to_string(line) + ": " + key + " must be a non-negative integer");
  return v;
}

bool parse_bool(const std::string& s, int line, const std::string& key) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ConfigError("config line " + std::to_string(line) + ": " + key + " must be true or false");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> parse_tau_list(const std::string& text) {
  const auto t = std::string(trim(text));
  if (t == "default" || t.empty()) return default_tau_grid();
  std::vector<double> taus;
  for (const auto& field : split_csv_record(t)) {
    double v = 0.0;
    if (!parse_double(field, v)) throw ConfigError("cannot parse tau '" + field + "'");
    taus.push_back(v);
  }
  try {
    validate_tau_grid(taus);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return taus;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.taus = default_tau_grid();
  cfg.config_hash = fnv1a64(text);
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto where = [&] { return "config line " + std::to_string(line_no) + ": "; };
    auto number = [&] {
      double v = 0.0;
      if (!parse_double(value, v)) throw ConfigError(where() + key + " must be a number");
      return v;
    };

    if (key == "input") {
      cfg.input_csv = resolve(value);
    } else if (key == "x_column") {
      cfg.x_column = value;
    } else if (key == "y_column") {
      cfg.y_column = value;
    } else if (key == "response") {
      cfg.schema.response = value;
    } else if (key == "response_transform") {
      cfg.schema.response_transform = parse_transform(value, line_no);
    } else if (key == "covariate") {
      const auto parts = split_ws(value);
      if (parts.size() < 2 || parts.size() > 3) {
        throw ConfigError(where() + "covariate needs 'name kind [transform]'");
      }
      CovariateSpec spec;
      spec.name = parts[0];
      if (parts[1] == "continuous") {
        spec.kind = CovariateKind::continuous;
      } else if (parts[1] == "categorical") {
        spec.kind = CovariateKind::categorical;
      } else {
        throw ConfigError(where() + "unknown covariate kind '" + parts[1] + "'");
      }
      if (parts.size() == 3) spec.transform = parse_transform(parts[2], line_no);
      cfg.schema.covariates.push_back(spec);
    } else if (key == "taus") {
      try {
        cfg.taus = parse_tau_list(value);
      } catch (const ConfigError& e) {
        throw ConfigError(where() + e.what());
      }
    } else if (key == "collinearity_threshold") {
      cfg.collinearity_threshold = number();
      if (!(cfg.collinearity_threshold > 0.0 && cfg.collinearity_threshold <= 1.0)) {
        throw ConfigError(where() + "collinearity_threshold must lie in (0, 1]");
      }
    } else if (key == "rare_threshold") {
      cfg.rare_threshold = parse_uint(value, line_no, key);
    } else if (key == "bootstrap_b") {
      cfg.bootstrap_b = parse_uint(value, line_no, key);
    } else if (key == "seed") {
      cfg.seed = parse_uint(value, line_no, key);
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(parse_uint(value, line_no, key));
      if (cfg.workers < 1) throw ConfigError(where() + "workers must be at least 1");
    } else if (key == "out") {
      cfg.out_dir = resolve(value);
    } else if (key.rfind("raster.", 0) == 0 && key.size() > 7) {
      cfg.covariate_rasters[key.substr(7)] = resolve(value);
    } else if (key.rfind("benchmark.", 0) == 0 && key.size() > 10) {
      cfg.benchmark_rasters[key.substr(10)] = resolve(value);
    } else if (key == "reference_map") {
      cfg.reference_map = resolve(value);
    } else if (key == "iqr_maps") {
      cfg.iqr_maps = parse_bool(value, line_no, key);
    } else if (key == "density_bins") {
      cfg.density_bins = parse_uint(value, line_no, key);
      if (cfg.density_bins == 0) throw ConfigError(where() + "density_bins must be positive");
    } else if (key == "qq_points") {
      cfg.qq_points = parse_uint(value, line_no, key);
    } else {
      throw ConfigError(where() + "unknown key '" + key + "'");
    }
  }
  cfg.schema.validate();
  if (cfg.input_csv.empty()) throw ConfigError("config does not name an input csv");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace qrmap
