#include "nrdf/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nrdf {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::Validation, "config: " + what); }

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    invalid("'" + key + "' has the wrong type");
  }
}

// Accepts either a scalar or a sequence.
template <class T>
std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& key) {
  if (node.IsSequence()) {
    std::vector<T> out;
    for (const auto& v : node) out.push_back(scalar<T>(v, key));
    return out;
  }
  return {scalar<T>(node, key)};
}

Matrix matrix(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) invalid("'" + key + "' must be a matrix (list of rows)");
  std::vector<std::vector<double>> rows;
  for (const auto& r : node) {
    if (!r.IsSequence()) invalid("'" + key + "' must be a matrix (list of rows)");
    rows.push_back(scalar<std::vector<double>>(r, key));
  }
  try {
    return Matrix::from_rows(rows);
  } catch (const Error&) {
    invalid("'" + key + "' has ragged rows");
  }
}

std::vector<Matrix> matrices(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence() || node.size() == 0) invalid("'" + key + "' must be a non-empty list");
  // A single matrix is a list of numeric rows; a list of matrices nests one deeper.
  if (node[0].IsSequence() && node[0].size() > 0 && node[0][0].IsScalar()) return {matrix(node, key)};
  std::vector<Matrix> out;
  for (const auto& m : node) out.push_back(matrix(m, key));
  return out;
}

void emit_matrix(YAML::Emitter& e, const Matrix& m) {
  e << YAML::Flow << YAML::BeginSeq;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double v : m.row(r)) e << v;
    e << YAML::EndSeq;
  }
  e << YAML::EndSeq;
}

template <class T>
void emit_scalar_or_list(YAML::Emitter& e, const std::vector<T>& v) {
  if (v.size() == 1) {
    e << v.front();
  } else {
    e << YAML::Flow << v;
  }
}

template <class T>
void expect_count(const std::vector<T>& v, std::size_t expected, const std::string& key) {
  if (v.size() != 1 && v.size() != expected) {
    invalid("'" + key + "' needs 1 or " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
}

template <class T>
T at_stage(const std::vector<T>& v, std::size_t i) {
  return v.size() == 1 ? v.front() : v[i];
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& ex) {
    invalid(std::string("malformed YAML: ") + ex.what());
  }
  if (!root.IsMap()) invalid("top level must be a mapping");

  static const std::vector<std::string> known = {
      "horizon", "source", "y_size", "distortion", "grid_levels", "s", "epsilon", "max_iter", "workers",
      "out_dir", "log_base", "p0_output", "trace_every", "grid_cap", "table_cap_mb", "sweep_s",
      "bench_workers", "oracle"};
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) invalid("unknown key '" + key + "'");
  }

  RunConfig c;
  if (root["horizon"]) {
    const long long n = scalar<long long>(root["horizon"], "horizon");
    if (n < 0) invalid("'horizon' must be >= 0");
    c.horizon = static_cast<std::size_t>(n);
  }
  if (const auto src = root["source"]) {
    if (!src.IsMap()) invalid("'source' must be a mapping");
    if (src["alpha"]) c.source.alpha = scalar<double>(src["alpha"], "source.alpha");
    if (src["alphas"]) c.source.alphas = scalar<std::vector<double>>(src["alphas"], "source.alphas");
    if (src["kernels"]) c.source.kernels = matrices(src["kernels"], "source.kernels");
    if (src["initial"]) c.source.initial = scalar<std::vector<double>>(src["initial"], "source.initial");
  }
  if (root["y_size"]) c.y_size = scalar_or_list<std::size_t>(root["y_size"], "y_size");
  if (const auto d = root["distortion"]) {
    if (d.IsScalar()) {
      if (d.as<std::string>() != "hamming") invalid("'distortion' must be 'hamming' or {matrices: ...}");
    } else if (d.IsMap() && d["matrices"]) {
      c.distortion = matrices(d["matrices"], "distortion.matrices");
    } else {
      invalid("'distortion' must be 'hamming' or {matrices: ...}");
    }
  }
  if (root["grid_levels"]) c.grid_levels = scalar_or_list<std::size_t>(root["grid_levels"], "grid_levels");
  if (root["s"]) c.s = scalar_or_list<double>(root["s"], "s");
  if (root["epsilon"]) c.epsilon = scalar<double>(root["epsilon"], "epsilon");
  if (root["max_iter"]) c.max_iter = scalar<std::size_t>(root["max_iter"], "max_iter");
  if (root["workers"]) c.workers = scalar<int>(root["workers"], "workers");
  if (root["out_dir"]) c.out_dir = scalar<std::string>(root["out_dir"], "out_dir");
  if (root["log_base"]) c.log_base = scalar<std::string>(root["log_base"], "log_base");
  if (root["p0_output"]) c.p0_output = scalar<std::vector<double>>(root["p0_output"], "p0_output");
  if (root["trace_every"]) c.trace_every = scalar<std::size_t>(root["trace_every"], "trace_every");
  if (root["grid_cap"]) c.grid_cap = scalar<std::size_t>(root["grid_cap"], "grid_cap");
  if (root["table_cap_mb"]) c.table_cap_mb = scalar<std::size_t>(root["table_cap_mb"], "table_cap_mb");
  if (root["sweep_s"]) c.sweep_s = scalar_or_list<double>(root["sweep_s"], "sweep_s");
  if (root["bench_workers"]) c.bench_workers = scalar_or_list<int>(root["bench_workers"], "bench_workers");
  if (const auto o = root["oracle"]) {
    if (!o.IsMap() || !o["pred"]) invalid("'oracle' needs at least 'pred'");
    OracleSpec spec;
    spec.pred = scalar<std::vector<double>>(o["pred"], "oracle.pred");
    if (o["s"]) spec.s = scalar<double>(o["s"], "oracle.s");
    if (o["rho"]) spec.rho = matrix(o["rho"], "oracle.rho");
    c.oracle = spec;
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "horizon" << YAML::Value << c.horizon;
  e << YAML::Key << "source" << YAML::Value << YAML::BeginMap;
  if (c.source.alpha) e << YAML::Key << "alpha" << YAML::Value << *c.source.alpha;
  if (!c.source.alphas.empty()) e << YAML::Key << "alphas" << YAML::Value << YAML::Flow << c.source.alphas;
  if (!c.source.kernels.empty()) {
    e << YAML::Key << "kernels" << YAML::Value << YAML::BeginSeq;
    for (const Matrix& m : c.source.kernels) emit_matrix(e, m);
    e << YAML::EndSeq;
  }
  if (c.source.initial) e << YAML::Key << "initial" << YAML::Value << YAML::Flow << *c.source.initial;
  e << YAML::EndMap;
  if (!c.y_size.empty()) {
    e << YAML::Key << "y_size" << YAML::Value;
    emit_scalar_or_list(e, c.y_size);
  }
  e << YAML::Key << "distortion" << YAML::Value;
  if (c.distortion.empty()) {
    e << "hamming";
  } else {
    e << YAML::BeginMap << YAML::Key << "matrices" << YAML::Value << YAML::BeginSeq;
    for (const Matrix& m : c.distortion) emit_matrix(e, m);
    e << YAML::EndSeq << YAML::EndMap;
  }
  e << YAML::Key << "grid_levels" << YAML::Value;
  emit_scalar_or_list(e, c.grid_levels);
  e << YAML::Key << "s" << YAML::Value;
  emit_scalar_or_list(e, c.s);
  e << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
  e << YAML::Key << "max_iter" << YAML::Value << c.max_iter;
  e << YAML::Key << "workers" << YAML::Value << c.workers;
  e << YAML::Key << "out_dir" << YAML::Value << c.out_dir;
  e << YAML::Key << "log_base" << YAML::Value << c.log_base;
  if (c.p0_output) e << YAML::Key << "p0_output" << YAML::Value << YAML::Flow << *c.p0_output;
  e << YAML::Key << "trace_every" << YAML::Value << c.trace_every;
  e << YAML::Key << "grid_cap" << YAML::Value << c.grid_cap;
  e << YAML::Key << "table_cap_mb" << YAML::Value << c.table_cap_mb;
  if (!c.sweep_s.empty()) e << YAML::Key << "sweep_s" << YAML::Value << YAML::Flow << c.sweep_s;
  if (!c.bench_workers.empty()) e << YAML::Key << "bench_workers" << YAML::Value << YAML::Flow << c.bench_workers;
  if (c.oracle) {
    e << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "pred" << YAML::Value << YAML::Flow << c.oracle->pred;
    e << YAML::Key << "s" << YAML::Value << c.oracle->s;
    if (c.oracle->rho) {
      e << YAML::Key << "rho" << YAML::Value;
      emit_matrix(e, *c.oracle->rho);
    }
    e << YAML::EndMap;
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate(const RunConfig& c) {
  const std::size_t n = c.horizon;
  const int kinds = (c.source.alpha ? 1 : 0) + (c.source.alphas.empty() ? 0 : 1) + (c.source.kernels.empty() ? 0 : 1);
  if (kinds > 1) invalid("give only one of source.alpha, source.alphas, source.kernels");
  if (!c.source.alphas.empty() && c.source.alphas.size() != n) {
    invalid("source.alphas needs one entry per stage 1..n (" + std::to_string(n) + ")");
  }
  if (!c.source.kernels.empty() && c.source.kernels.size() != 1 && c.source.kernels.size() != n) {
    invalid("source.kernels needs 1 or n matrices");
  }
  if (c.grid_levels.empty()) invalid("'grid_levels' is empty");
  for (std::size_t v : c.grid_levels) {
    if (v < 1) invalid("'grid_levels' entries must be >= 1");
  }
  if (n > 0) expect_count(c.grid_levels, n, "grid_levels");
  if (c.s.empty()) invalid("'s' is empty");
  expect_count(c.s, n + 1, "s");
  for (double v : c.s) {
    if (!(v <= 0.0)) invalid("every s must be <= 0");
  }
  for (double v : c.sweep_s) {
    if (!(v <= 0.0)) invalid("every sweep_s entry must be <= 0");
  }
  if (!(c.epsilon > 0.0)) invalid("'epsilon' must be > 0");
  if (c.max_iter < 1) invalid("'max_iter' must be >= 1");
  if (c.workers < 1) invalid("'workers' must be >= 1");
  for (int w : c.bench_workers) {
    if (w < 1) invalid("'bench_workers' entries must be >= 1");
  }
  if (c.log_base != "nats" && c.log_base != "bits") invalid("'log_base' must be nats or bits");
  if (!c.y_size.empty()) expect_count(c.y_size, n + 1, "y_size");
  if (!c.distortion.empty() && c.distortion.size() != 1 && c.distortion.size() != n + 1) {
    invalid("distortion.matrices needs 1 or n+1 matrices");
  }
  if (c.oracle && !(c.oracle->s <= 0.0)) invalid("oracle.s must be <= 0");
}

Problem build_problem(const RunConfig& c) {
  validate(c);
  const std::size_t n = c.horizon;

  std::vector<TransitionKernel> kernels;
  std::size_t x0 = 2;
  if (!c.source.kernels.empty()) {
    for (std::size_t t = 1; t <= n; ++t) kernels.emplace_back(at_stage(c.source.kernels, t - 1));
    x0 = c.source.initial ? c.source.initial->size() : (n > 0 ? kernels.front().cols() : c.source.kernels.front().cols());
  } else {
    std::vector<double> alphas = c.source.alphas;
    if (alphas.empty()) {
      if (!c.source.alpha) invalid("source needs alpha, alphas or kernels");
      alphas.assign(n, *c.source.alpha);
    }
    for (double a : alphas) {
      if (!(a > 0.0 && a < 1.0)) invalid("source alphas must lie in (0,1)");
      kernels.emplace_back(Matrix::from_rows({{1.0 - a, a}, {a, 1.0 - a}}));
    }
  }
  ProbVector initial = c.source.initial ? ProbVector(*c.source.initial) : ProbVector::uniform(x0);
  MarkovSource source(std::move(initial), std::move(kernels));

  StageAlphabets alpha;
  for (std::size_t t = 0; t <= n; ++t) {
    alpha.x_sizes.push_back(source.x_size(t));
    alpha.y_sizes.push_back(c.y_size.empty() ? source.x_size(t) : at_stage(c.y_size, t));
  }
  std::vector<Matrix> rho;
  if (c.distortion.empty()) {
    const DistortionModel hamming = DistortionModel::hamming(alpha);
    for (std::size_t t = 0; t <= n; ++t) rho.push_back(hamming.stage(t));
  } else {
    for (std::size_t t = 0; t <= n; ++t) rho.push_back(at_stage(c.distortion, t));
  }
  DistortionModel distortion(std::move(rho));
  alpha = alphabets_of(source, distortion);
  if (!c.y_size.empty()) {
    for (std::size_t t = 0; t <= n; ++t) {
      if (alpha.y_sizes[t] != at_stage(c.y_size, t)) invalid("y_size disagrees with the distortion matrices");
    }
  }

  std::vector<double> s(n + 1);
  for (std::size_t t = 0; t <= n; ++t) s[t] = at_stage(c.s, t);
  std::vector<std::size_t> levels(n);
  for (std::size_t t = 1; t <= n; ++t) levels[t - 1] = at_stage(c.grid_levels, t - 1);

  return Problem{std::move(source), std::move(distortion), LagrangeSchedule(std::move(s)), std::move(alpha),
                 std::move(levels)};
}

BackwardOptions backward_options(const RunConfig& c) {
  BackwardOptions o;
  o.epsilon = c.epsilon;
  o.max_iter = c.max_iter;
  o.workers = c.workers;
  o.table_cap_bytes = c.table_cap_mb << 20;
  return o;
}

}  // namespace nrdf
