// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "lds/artifacts.hpp"
#include "lds/wire.hpp"

namespace lds {

namespace {

struct ParseError {
  std::string message;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ParseError{"empty list item"};
    out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + xs[i];
  return out;
}

double to_double(const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ParseError{"expected a number, got '" + v + "'"};
  return x;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError{"expected a non-negative integer, got '" + v + "'"};
  }
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError{"expected true or false, got '" + v + "'"};
}

std::string fmt(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string fmt(std::uint64_t x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + fmt(xs[i]);
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

// Schema names/targets are staged and assembled after every line is read.
struct Staging {
  std::vector<std::string> attributes;
  std::vector<std::string> targets;
};

std::vector<Field> fields(RunConfig& c, Staging& st) {
  auto& p = c.pipeline;
  auto& w = c.synthetic.world;
  auto& t = c.synthetic.transform;
  std::vector<Field> f;
  auto real = [&](const char* sec, const char* key, double& x) {
    f.push_back({sec, key, [&x](const std::string& v) { x = to_double(v); }, [&x] { return fmt(x); }});
  };
  auto count = [&](const char* sec, const char* key, std::size_t& x) {
    f.push_back({sec, key, [&x](const std::string& v) { x = static_cast<std::size_t>(to_u64(v)); },
                 [&x] { return fmt(static_cast<std::uint64_t>(x)); }});
  };
  auto u64 = [&](const char* sec, const char* key, std::uint64_t& x) {
    f.push_back({sec, key, [&x](const std::string& v) { x = to_u64(v); }, [&x] { return fmt(x); }});
  };
  auto flag = [&](const char* sec, const char* key, bool& x) {
    f.push_back({sec, key, [&x](const std::string& v) { x = to_bool(v); }, [&x] { return fmt(x); }});
  };

  f.push_back({"schema", "attributes", [&st](const std::string& v) { st.attributes = split_list(v); },
               [&st] { return join(st.attributes); }});
  f.push_back({"schema", "targets", [&st](const std::string& v) { st.targets = split_list(v); },
               [&st] { return join(st.targets); }});

  real("pipeline", "alpha", p.alpha_magnitude);
  count("pipeline", "n_edit", p.n_edit);
  count("pipeline", "gmm_k", p.gmm_k);
  count("pipeline", "total_n", p.total_n);
  real("pipeline", "beta", p.beta);
  real("pipeline", "extreme_fraction", p.extreme_fraction);
  count("pipeline", "corpus_n", p.corpus_n);
  flag("pipeline", "resample_gmm_check", p.resample_gmm_check);
  count("pipeline", "resample_retry_cap", p.resample_retry_cap);
  real("pipeline", "min_acceptance", p.min_acceptance);
  real("pipeline", "pseudo_count", p.pseudo_count);
  real("pipeline", "orthogonality_threshold", p.orthogonality_threshold);
  flag("pipeline", "allow_non_orthogonal", p.allow_non_orthogonal);
  u64("pipeline", "seed", p.seed);

  f.push_back({"em", "covariance",
               [&p](const std::string& v) {
                 if (v == "diagonal") p.em.mode = CovarianceMode::kDiagonal;
                 else if (v == "full") p.em.mode = CovarianceMode::kFull;
                 else throw ParseError{"expected diagonal or full, got '" + v + "'"};
               },
               [&p] { return std::string(p.em.mode == CovarianceMode::kFull ? "full" : "diagonal"); }});
  real("em", "variance_floor", p.em.variance_floor);
  count("em", "n_init", p.em.n_init);
  count("em", "max_iterations", p.em.max_iterations);
  real("em", "tolerance", p.em.tolerance);
  count("em", "min_points_per_component", p.em.min_points_per_component);

  real("svm", "lambda", p.svm.lambda);
  count("svm", "epochs", p.svm.epochs);

  f.push_back({"backend", "kind",
               [&c](const std::string& v) {
                 if (v == "synthetic") c.backend.kind = BackendKind::kSynthetic;
                 else if (v == "exec") c.backend.kind = BackendKind::kExec;
                 else throw ParseError{"expected synthetic or exec, got '" + v + "'"};
               },
               [&c] { return std::string(c.backend.kind == BackendKind::kExec ? "exec" : "synthetic"); }});
  f.push_back({"backend", "command", [&c](const std::string& v) { c.backend.command = v; },
               [&c] { return c.backend.command; }});
  f.push_back({"backend", "timeout_ms",
               [&c](const std::string& v) {
                 const auto x = to_u64(v);
                 if (x == 0 || x > 3600000) throw ParseError{"timeout_ms must lie in [1, 3600000]"};
                 c.backend.timeout_ms = static_cast<int>(x);
               },
               [&c] { return std::to_string(c.backend.timeout_ms); }});

  count("synthetic", "dim", w.dim);
  f.push_back({"synthetic", "attributes", [&w](const std::string& v) { w.attributes = split_list(v); },
               [&w] { return join(w.attributes); }});
  f.push_back({"synthetic", "positive_rates",
               [&w](const std::string& v) {
                 w.positive_rates.clear();
                 for (const auto& x : split_list(v)) w.positive_rates.push_back(to_double(x));
               },
               [&w] { return fmt_list(w.positive_rates); }});
  real("synthetic", "separation", w.separation);
  flag("synthetic", "threshold_skew", w.threshold_skew);
  real("synthetic", "steepness", w.steepness);
  real("synthetic", "noise", w.noise);
  real("synthetic", "bump", w.bump);
  real("synthetic", "bump_threshold", w.bump_threshold);
  real("synthetic", "bump_width", w.bump_width);
  flag("synthetic", "bump_two_sided", w.bump_two_sided);
  real("synthetic", "anisotropy", w.anisotropy);
  f.push_back({"synthetic", "score_mode",
               [&w](const std::string& v) {
                 if (v == "tanh") w.mode = ScoreMode::kTanh;
                 else if (v == "linear") w.mode = ScoreMode::kLinear;
                 else throw ParseError{"expected tanh or linear, got '" + v + "'"};
               },
               [&w] { return std::string(w.mode == ScoreMode::kLinear ? "linear" : "tanh"); }});
  u64("synthetic", "world_seed", w.seed);
  u64("synthetic", "noise_seed", c.synthetic.backend_seed);
  f.push_back({"synthetic", "transform",
               [&t](const std::string& v) {
                 if (v == "none") t.kind = TransformSpec::Kind::kNone;
                 else if (v == "identity") t.kind = TransformSpec::Kind::kIdentity;
                 else if (v == "majority_regressor") t.kind = TransformSpec::Kind::kMajorityRegressor;
                 else throw ParseError{"expected none, identity or majority_regressor, got '" + v + "'"};
               },
               [&t] {
                 switch (t.kind) {
                   case TransformSpec::Kind::kIdentity: return std::string("identity");
                   case TransformSpec::Kind::kMajorityRegressor: return std::string("majority_regressor");
                   default: return std::string("none");
                 }
               }});
  f.push_back({"synthetic", "transform_attribute",
               [&c](const std::string& v) { c.synthetic.transform_attribute = v; },
               [&c] { return c.synthetic.transform_attribute; }});
  real("synthetic", "transform_gamma", t.gamma);
  real("synthetic", "transform_center", t.center);

  f.push_back({"output", "artifacts", [&c](const std::string& v) { c.artifacts = v; },
               [&c] { return c.artifacts; }});
  f.push_back({"output", "format",
               [&c](const std::string& v) {
                 if (v == "table") c.format = ReportFormat::kTable;
                 else if (v == "structured") c.format = ReportFormat::kStructured;
                 else throw ParseError{"expected table or structured, got '" + v + "'"};
               },
               [&c] { return std::string(c.format == ReportFormat::kStructured ? "structured" : "table"); }});
  return f;
}

std::string emit(const RunConfig& config, bool with_output) {
  RunConfig c = config;
  Staging st;
  st.attributes = c.pipeline.schema.names();
  st.targets = c.pipeline.schema.target_names();
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields(c, st)) {
    if (!with_output && f.section == "output") continue;
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get() << '\n';
  }
  return out.str();
}

}  // namespace

SkewedWorldOptions default_world() {
  SkewedWorldOptions w;
  w.dim = 64;
  w.attributes = {"a0", "a1", "c0"};
  w.positive_rates = {0.15, 0.2, 0.3};
  w.separation = 0.0;
  w.threshold_skew = true;
  w.seed = 1;
  return w;
}

RunConfig default_run_config() {
  RunConfig c;
  c.synthetic.world = default_world();
  c.synthetic.backend_seed = 1;
  return c;
}

RunConfig parse_config(std::string_view text) {
  RunConfig c = default_run_config();
  Staging st;
  auto table = fields(c, st);
  std::map<std::string, std::size_t> seen;  // "section.key" -> line
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto err = [&](const std::string& msg) {
    fail(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": " + msg);
  };
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') err("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      const bool known = std::any_of(table.begin(), table.end(),
                                     [&](const Field& f) { return f.section == section; });
      if (!known) err("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) err("expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) err("key '" + key + "' appears before any [section]");
    const std::string full = section + "." + key;
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) {
      return f.section == section && f.key == key;
    });
    if (it == table.end()) err("unknown key '" + full + "'");
    if (seen.count(full)) {
      err("duplicate key '" + full + "' (first set on line " + std::to_string(seen[full]) + ")");
    }
    seen[full] = line_no;
    try {
      it->set(value);
    } catch (const ParseError& e) {
      err("key '" + full + "': " + e.message);
    }
  }

  auto line_of = [&](const char* key) {
    const auto it = seen.find(key);
    return it == seen.end() ? std::string("default") : "line " + std::to_string(it->second);
  };
  auto late = [&](const std::string& where, const std::string& msg) {
    fail(ErrorKind::kParse, "config " + where + ": " + msg);
  };
  if (st.attributes.empty() != st.targets.empty()) {
    late(line_of(st.attributes.empty() ? "schema.targets" : "schema.attributes"),
         "key 'schema.attributes' and 'schema.targets' must be given together");
  }
  if (!st.attributes.empty()) {
    try {
      c.pipeline.schema = AttributeSchema::from_names(st.attributes, st.targets);
    } catch (const Error& e) {
      late(line_of("schema.targets"), std::string("key 'schema.targets': ") + e.what());
    }
    const std::size_t k = c.pipeline.schema.subgroup_count();
    if (c.pipeline.total_n == 0 || c.pipeline.total_n % k != 0) {
      late(line_of("pipeline.total_n"), "key 'pipeline.total_n' = " +
                                            std::to_string(c.pipeline.total_n) +
                                            " is not a positive multiple of K = " + std::to_string(k));
    }
  }
  if (c.backend.kind == BackendKind::kExec && c.backend.command.empty()) {
    late(line_of("backend.kind"), "key 'backend.command' is required for exec backends");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  if (!file_exists(path)) fail(ErrorKind::kParse, "config file not found: " + path);
  return parse_config(read_file(path));
}

std::string emit_config(const RunConfig& config) { return emit(config, true); }

std::string config_digest(const RunConfig& config) { return sha256_hex(emit(config, false)); }

BackendSelection parse_backend_flag(std::string_view flag) {
  BackendSelection b;
  if (flag == "synthetic") return b;
  if (flag.starts_with("exec:") && flag.size() > 5) {
    b.kind = BackendKind::kExec;
    b.command = std::string(flag.substr(5));
    return b;
  }
  fail(ErrorKind::kParse, "--backend must be 'synthetic' or 'exec:<command>', got '" +
                              std::string(flag) + "'");
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend.kind == BackendKind::kExec) {
    return spawn_external(config.backend.command, ExternalConfig{config.backend.timeout_ms});
  }
  SyntheticSpec spec = make_skewed_spec(config.synthetic.world);
  spec.transform = config.synthetic.transform;
  if (spec.transform.kind == TransformSpec::Kind::kMajorityRegressor) {
    const auto& names = config.synthetic.world.attributes;
    const auto it = std::find(names.begin(), names.end(), config.synthetic.transform_attribute);
    require(it != names.end(), ErrorKind::kPrecondition,
            "synthetic.transform_attribute '" + config.synthetic.transform_attribute +
                "' is not a synthetic attribute");
    spec.transform.attribute = static_cast<std::size_t>(it - names.begin());
  }
  return make_synthetic(std::move(spec), config.synthetic.backend_seed);
}

void resolve_schema(RunConfig& config, const BackendInfo& info) {
  if (config.pipeline.schema.attribute_count() == 0) {
    require(!info.attributes.empty(), ErrorKind::kPrecondition, "backend declares no attributes");
    config.pipeline.schema = AttributeSchema::from_names(info.attributes, {info.attributes.front()});
  }
  attribute_columns(info, config.pipeline.schema.names());
  config.pipeline.validate();
}

}  // namespace lds
