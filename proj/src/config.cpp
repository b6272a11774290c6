#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "kinfrac/harness.hpp"

namespace kinfrac {

using nlohmann::json;

namespace {

// A JSON object plus the path it was reached by, for error messages.
class Section {
 public:
  Section(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) fail(path_, "expected a table");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> known(keys.begin(), keys.end());
    for (auto it = value_.begin(); it != value_.end(); ++it)
      if (!known.count(it.key())) fail(child(it.key()), "unknown field");
  }

  bool has(const std::string& key) const { return value_.contains(key); }

  Section section(const std::string& key) const {
    static const json empty = json::object();
    return has(key) ? Section(value_.at(key), child(key)) : Section(empty, child(key));
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_number()) fail(child(key), "expected a number");
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail(child(key), "must be positive");
    return v;
  }

  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_number_integer()) fail(child(key), "expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_boolean()) fail(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_string()) fail(child(key), "expected a string");
    return v.get<std::string>();
  }

  const json& array(const std::string& key) const {
    const json& v = value_.at(key);
    if (!v.is_array()) fail(child(key), "expected an array");
    return v;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    const json& v = array(key);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(child(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const {
    if (!has(key)) return fallback;
    std::vector<int> out;
    const json& v = array(key);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer())
        fail(child(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
    return out;
  }

  const std::string& path() const { return path_; }
  const json& value() const { return value_; }

 private:
  const json& value_;
  std::string path_;
};

ModeIndex parse_mode(const json& v, const std::string& path, int d) {
  if (v.is_number_integer()) {
    if (d != 1) Section::fail(path, "expected an index array of length 2");
    return {v.get<int>(), 0};
  }
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    Section::fail(path, "expected an index array of length " + std::to_string(d));
  ModeIndex k{0, 0};
  for (int c = 0; c < d; ++c) {
    if (!v[static_cast<std::size_t>(c)].is_number_integer())
      Section::fail(path + "[" + std::to_string(c) + "]", "expected an integer");
    k[static_cast<std::size_t>(c)] = v[static_cast<std::size_t>(c)].get<int>();
  }
  return k;
}

KernelSpec parse_kernel(const Section& s, int d, bool check_fields = true) {
  if (check_fields) s.allow({"kind", "coefficients"});
  KernelSpec spec;
  try {
    spec.kind = kernel_kind_from_string(s.text("kind", "isotropic"));
  } catch (const InvalidArgument& e) {
    Section::fail(s.child("kind"), e.what());
  }
  spec.coefficients = s.numbers("coefficients", {});
  if (spec.kind == KernelKind::rayleigh_d2 && d != 2)
    Section::fail(s.child("kind"), "the Rayleigh kernel requires dimension = 2");
  if (spec.kind == KernelKind::even_polynomial && spec.coefficients.empty())
    Section::fail(s.child("coefficients"), "even-polynomial kernel needs coefficients");
  return spec;
}

SourceSpec parse_source(const Section& s, int d) {
  s.allow({"kind", "mean", "amplitude", "k", "modes", "t0", "epsilon", "samples", "grid", "kmax"});
  SourceSpec src;
  const std::string kind = s.text("kind", "cosine");
  if (kind == "cosine") {
    src.kind = SourceSpec::Kind::cosine;
    src.mean = s.number("mean", 1.0);
    src.amplitude = s.number("amplitude", 1.0);
    src.k = s.has("k") ? parse_mode(s.value().at("k"), s.child("k"), d) : ModeIndex{1, 0};
  } else if (kind == "fourier") {
    src.kind = SourceSpec::Kind::fourier;
    if (!s.has("modes")) Section::fail(s.child("modes"), "required for kind = \"fourier\"");
    const json& list = s.array("modes");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Section entry(list[i], s.child("modes") + "[" + std::to_string(i) + "]");
      entry.allow({"k", "re", "im"});
      if (!entry.has("k")) Section::fail(entry.child("k"), "required");
      src.modes.push_back(parse_mode(entry.value().at("k"), entry.child("k"), d));
      src.coeffs.emplace_back(entry.number("re", 0.0), entry.number("im", 0.0));
    }
    if (src.modes.empty()) Section::fail(s.child("modes"), "must not be empty");
  } else if (kind == "temperature") {
    src.kind = SourceSpec::Kind::temperature;
    src.t0 = s.number("t0", 1.0);
    src.epsilon = s.number("epsilon", 0.5);
    src.k = s.has("k") ? parse_mode(s.value().at("k"), s.child("k"), d) : ModeIndex{1, 0};
    src.samples = s.numbers("samples", {});
    src.grid = s.integer("grid", 64);
    src.kmax = s.integer("kmax", 2);
    if (src.grid < 1) Section::fail(s.child("grid"), "must be >= 1");
    if (src.kmax < 0) Section::fail(s.child("kmax"), "must be >= 0");
    if (src.t0 < 0.0) Section::fail(s.child("t0"), "temperature must be nonnegative");
    if (std::abs(src.epsilon) > 1.0) Section::fail(s.child("epsilon"), "|epsilon| must be <= 1");
    if (!src.samples.empty()) {
      std::size_t expected = static_cast<std::size_t>(src.grid);
      if (d == 2) expected *= expected;
      if (src.samples.size() != expected)
        Section::fail(s.child("samples"), "expected " + std::to_string(expected) + " samples");
      for (std::size_t i = 0; i < src.samples.size(); ++i)
        if (src.samples[i] < 0.0)
          Section::fail(s.child("samples") + "[" + std::to_string(i) + "]",
                        "temperature must be nonnegative");
    }
  } else {
    Section::fail(s.child("kind"), "unknown source kind '" + kind + "'");
  }
  return src;
}

Config parse_root(const json& root) {
  const Section s(root, "");
  s.allow({"dimension", "kappa", "lambda", "gamma", "sigmas", "threads", "si_units", "quadrature",
           "kernel", "source", "grid", "solver", "output", "extension", "dtn", "audit"});
  Config c;
  c.dimension = s.integer("dimension", 1);
  if (c.dimension != 1 && c.dimension != 2) Section::fail("dimension", "must be 1 or 2");
  c.kappa = s.positive("kappa", 1.0);
  c.lambda = s.number("lambda", 0.0);
  if (c.lambda < 0.0) Section::fail("lambda", "must be nonnegative");
  c.gamma = s.number("gamma", 1.0);
  if (!(c.gamma > 0.0 && c.gamma < 2.0)) Section::fail("gamma", "must lie in (0, 2)");
  c.sigmas = s.numbers("sigmas", c.sigmas);
  if (c.sigmas.empty()) Section::fail("sigmas", "must not be empty");
  for (std::size_t i = 0; i < c.sigmas.size(); ++i) {
    const std::string path = "sigmas[" + std::to_string(i) + "]";
    if (!(c.sigmas[i] > 0.0)) Section::fail(path, "must be positive");
    if (i > 0 && !(c.sigmas[i] > c.sigmas[i - 1])) Section::fail(path, "sigmas must be strictly increasing");
  }
  c.threads = s.integer("threads", 1);
  if (c.threads < 1) Section::fail("threads", "must be >= 1");
  c.si_units = s.boolean("si_units", false);

  const Section quad = s.section("quadrature");
  quad.allow({"n"});
  c.quadrature_n = quad.integer("n", 8);
  if (c.quadrature_n < 4 || c.quadrature_n % 2 != 0) Section::fail("quadrature.n", "must be even and >= 4");

  c.kernel = parse_kernel(s.section("kernel"), c.dimension);
  c.source = parse_source(s.section("source"), c.dimension);

  const Section grid = s.section("grid");
  grid.allow({"cells", "depth", "first_cell_factor", "growth"});
  c.grid.cells = grid.integer("cells", c.grid.cells);
  if (c.grid.cells < 2) Section::fail("grid.cells", "must be >= 2");
  c.grid.depth_in_decay_lengths = grid.positive("depth", c.grid.depth_in_decay_lengths);
  c.grid.first_cell_factor = grid.positive("first_cell_factor", c.grid.first_cell_factor);
  if (c.grid.first_cell_factor > 1.0) Section::fail("grid.first_cell_factor", "must be <= 1");
  c.grid.growth = grid.number("growth", c.grid.growth);
  if (!(c.grid.growth > 1.0)) Section::fail("grid.growth", "must exceed 1");

  const Section solver = s.section("solver");
  solver.allow({"inner", "boundary", "tolerance", "max_iterations", "seed"});
  const std::string inner = solver.text("inner", "direct");
  if (inner == "direct") c.solver.inner = InnerSolver::direct;
  else if (inner == "source-iteration") c.solver.inner = InnerSolver::source_iteration;
  else Section::fail("solver.inner", "expected \"direct\" or \"source-iteration\"");
  const std::string boundary = solver.text("boundary", "affine");
  if (boundary == "affine") c.solver.boundary = BoundaryScheme::affine;
  else if (boundary == "fixed-point") c.solver.boundary = BoundaryScheme::fixed_point;
  else Section::fail("solver.boundary", "expected \"affine\" or \"fixed-point\"");
  c.solver.tolerance = solver.positive("tolerance", c.solver.tolerance);
  c.solver.max_iterations = solver.integer("max_iterations", c.solver.max_iterations);
  if (c.solver.max_iterations < 1) Section::fail("solver.max_iterations", "must be >= 1");
  const int seed = solver.integer("seed", 0);
  if (seed < 0) Section::fail("solver.seed", "must be nonnegative");
  c.solver.initial_source_seed = static_cast<std::uint64_t>(seed);

  const Section output = s.section("output");
  output.allow({"trace_points", "truncation_check"});
  c.trace_points = output.integer("trace_points", c.dimension == 1 ? 64 : 32);
  if (c.trace_points < 4) Section::fail("output.trace_points", "must be >= 4");
  c.truncation_check = output.boolean("truncation_check", true);

  const Section ext = s.section("extension");
  ext.allow({"gammas", "ks", "cells", "decay_lengths"});
  c.extension.gammas = ext.numbers("gammas", c.extension.gammas);
  for (std::size_t i = 0; i < c.extension.gammas.size(); ++i)
    if (!(c.extension.gammas[i] > 0.0 && c.extension.gammas[i] < 2.0))
      Section::fail("extension.gammas[" + std::to_string(i) + "]", "must lie in (0, 2)");
  c.extension.ks = ext.integers("ks", c.extension.ks);
  for (std::size_t i = 0; i < c.extension.ks.size(); ++i)
    if (c.extension.ks[i] < 1) Section::fail("extension.ks[" + std::to_string(i) + "]", "must be >= 1");
  c.extension.options.cells = ext.integer("cells", c.extension.options.cells);
  if (c.extension.options.cells < 8) Section::fail("extension.cells", "must be >= 8");
  c.extension.options.decay_lengths = ext.positive("decay_lengths", c.extension.options.decay_lengths);

  const Section dtn = s.section("dtn");
  dtn.allow({"dimensions", "n_max", "shoot_max"});
  c.dtn.dimensions = dtn.integers("dimensions", c.dtn.dimensions);
  for (std::size_t i = 0; i < c.dtn.dimensions.size(); ++i)
    if (c.dtn.dimensions[i] < 1) Section::fail("dtn.dimensions[" + std::to_string(i) + "]", "must be >= 1");
  c.dtn.n_max = dtn.integer("n_max", c.dtn.n_max);
  if (c.dtn.n_max < 2) Section::fail("dtn.n_max", "must be >= 2");
  c.dtn.shoot_max = dtn.integer("shoot_max", c.dtn.shoot_max);

  const Section audit = s.section("audit");
  audit.allow({"n", "kernels", "seed"});
  c.audit.n = audit.integer("n", c.audit.n);
  if (c.audit.n < 4 || c.audit.n % 2 != 0) Section::fail("audit.n", "must be even and >= 4");
  const int audit_seed = audit.integer("seed", 12345);
  if (audit_seed < 0) Section::fail("audit.seed", "must be nonnegative");
  c.audit.seed = static_cast<std::uint64_t>(audit_seed);
  if (audit.has("kernels")) {
    c.audit.kernels.clear();
    const json& list = audit.array("kernels");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Section entry(list[i], "audit.kernels[" + std::to_string(i) + "]");
      entry.allow({"dimension", "kind", "coefficients"});
      AuditKernel k;
      k.dimension = entry.integer("dimension", 2);
      if (k.dimension != 1 && k.dimension != 2) Section::fail(entry.child("dimension"), "must be 1 or 2");
      k.spec = parse_kernel(entry, k.dimension, false);
      c.audit.kernels.push_back(k);
    }
  }
  return c;
}

}  // namespace

Config parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
  }
  return parse_root(root);
}

Config parse_config_toml(const std::string& text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "<root>: invalid TOML at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  std::ostringstream as_json;
  as_json << toml::json_formatter{table};
  return parse_root(json::parse(as_json.str()));
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (path.extension() == ".toml") return parse_config_toml(buffer.str());
  return parse_config_json(buffer.str());
}

std::string config_to_json(const Config& c) {
  auto mode_json = [&](const ModeIndex& k) {
    return c.dimension == 1 ? json(k[0]) : json::array({k[0], k[1]});
  };
  json source;
  switch (c.source.kind) {
    case SourceSpec::Kind::cosine:
      source = {{"kind", "cosine"}, {"mean", c.source.mean}, {"amplitude", c.source.amplitude},
                {"k", mode_json(c.source.k)}};
      break;
    case SourceSpec::Kind::fourier: {
      json modes = json::array();
      for (std::size_t i = 0; i < c.source.modes.size(); ++i)
        modes.push_back({{"k", mode_json(c.source.modes[i])},
                         {"re", c.source.coeffs[i].real()},
                         {"im", c.source.coeffs[i].imag()}});
      source = {{"kind", "fourier"}, {"modes", modes}};
      break;
    }
    case SourceSpec::Kind::temperature:
      source = {{"kind", "temperature"}, {"t0", c.source.t0}, {"epsilon", c.source.epsilon},
                {"k", mode_json(c.source.k)}, {"grid", c.source.grid}, {"kmax", c.source.kmax}};
      if (!c.source.samples.empty()) source["samples"] = c.source.samples;
      break;
  }
  json out = {
      {"dimension", c.dimension},
      {"kappa", c.kappa},
      {"lambda", c.lambda},
      {"gamma", c.gamma},
      {"sigmas", c.sigmas},
      {"threads", c.threads},
      {"si_units", c.si_units},
      {"quadrature", {{"n", c.quadrature_n}}},
      {"kernel", {{"kind", to_string(c.kernel.kind)}, {"coefficients", c.kernel.coefficients}}},
      {"source", source},
      {"grid",
       {{"cells", c.grid.cells},
        {"depth", c.grid.depth_in_decay_lengths},
        {"first_cell_factor", c.grid.first_cell_factor},
        {"growth", c.grid.growth}}},
      {"solver",
       {{"inner", c.solver.inner == InnerSolver::direct ? "direct" : "source-iteration"},
        {"boundary", c.solver.boundary == BoundaryScheme::affine ? "affine" : "fixed-point"},
        {"tolerance", c.solver.tolerance},
        {"max_iterations", c.solver.max_iterations},
        {"seed", c.solver.initial_source_seed}}},
      {"output", {{"trace_points", c.trace_points}, {"truncation_check", c.truncation_check}}},
      {"extension",
       {{"gammas", c.extension.gammas},
        {"ks", c.extension.ks},
        {"cells", c.extension.options.cells},
        {"decay_lengths", c.extension.options.decay_lengths}}},
      {"dtn", {{"dimensions", c.dtn.dimensions}, {"n_max", c.dtn.n_max}, {"shoot_max", c.dtn.shoot_max}}},
  };
  json kernels = json::array();
  for (const auto& k : c.audit.kernels)
    kernels.push_back({{"dimension", k.dimension},
                       {"kind", to_string(k.spec.kind)},
                       {"coefficients", k.spec.coefficients}});
  out["audit"] = {{"n", c.audit.n}, {"seed", c.audit.seed}, {"kernels", kernels}};
  return out.dump(2);
}

}  // namespace kinfrac
