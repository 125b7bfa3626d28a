#include "pricelab/plan.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pricelab/errors.hpp"

namespace pricelab {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key()))
      throw ValidationError(path.empty() ? it.key() : path + "." + it.key(),
                            "unknown key");
}

const json& require(const json& obj, const std::string& path,
                    const char* key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ValidationError(path.empty() ? key : path + "." + key,
                          "missing required field");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number())
    throw ValidationError(path, "expected a number");
  return v.get<double>();
}

int64_t as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer())
    throw ValidationError(path, "expected an integer");
  return v.get<int64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string())
    throw ValidationError(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean())
    throw ValidationError(path, "expected a boolean");
  return v.get<bool>();
}

Vec as_vector(const json& v, const std::string& path) {
  if (!v.is_array())
    throw ValidationError(path, "expected an array of numbers");
  Vec out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty())
    throw ValidationError(path, "expected a nonempty array of rows");
  const size_t rows = v.size();
  Matrix m;
  for (size_t i = 0; i < rows; ++i) {
    const Vec row = as_vector(v[i], path + "[" + std::to_string(i) + "]");
    if (i == 0)
      m = Matrix(static_cast<int>(rows), static_cast<int>(row.size()));
    else if (static_cast<int>(row.size()) != m.cols())
      throw ValidationError(path, "rows differ in length");
    for (size_t j = 0; j < row.size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = row[j];
  }
  return m;
}

PriceBox parse_box(const json& j) {
  reject_unknown_keys(j, "box", {"lower", "upper"});
  return PriceBox(as_vector(require(j, "box", "lower"), "box.lower"),
                  as_vector(require(j, "box", "upper"), "box.upper"));
}

DemandSystem parse_demand(const json& j, PriceBox box) {
  reject_unknown_keys(j, "demand", {"kind", "a", "b"});
  const std::string kind = as_string(require(j, "demand", "kind"), "demand.kind");
  const Vec a = as_vector(require(j, "demand", "a"), "demand.a");
  if (kind == "linear")
    return DemandSystem::linear(a, as_matrix(require(j, "demand", "b"), "demand.b"),
                                std::move(box));
  if (kind == "mnl")
    return DemandSystem::mnl(a, as_vector(require(j, "demand", "b"), "demand.b"),
                             std::move(box));
  throw ValidationError("demand.kind", "expected \"linear\" or \"mnl\"");
}

NoiseSpec parse_noise(const json* j, const DemandSystem& d) {
  if (!j) {
    // Default: bounded shocks scaled so realized demand stays nonnegative
    // (support half-width equal to the scanned demand floor).
    const BoundsScan scan =
        scan_bounds(d, d.box(), default_scan_resolution(d.n()));
    const double sigma = scan.bounds.m0 / std::sqrt(3.0);
    if (!(sigma > 0.0))
      throw ValidationError("noise",
                            "cannot default noise: demand floor is zero");
    return NoiseSpec::bounded_uniform(Vec(d.n(), sigma));
  }
  reject_unknown_keys(*j, "noise", {"kind", "sigma", "correlation"});
  const std::string kind = as_string(require(*j, "noise", "kind"), "noise.kind");
  if (kind == "none") {
    if (j->contains("sigma") || j->contains("correlation"))
      throw ValidationError("noise", "kind \"none\" takes no parameters");
    return NoiseSpec::none(d.n());
  }
  const Vec sigma = as_vector(require(*j, "noise", "sigma"), "noise.sigma");
  if (static_cast<int>(sigma.size()) != d.n())
    throw ValidationError("noise.sigma", "dimension mismatch with demand");
  if (kind == "bounded_uniform") {
    if (j->contains("correlation"))
      throw ValidationError("noise.correlation",
                            "bounded_uniform supports independent shocks only");
    return NoiseSpec::bounded_uniform(sigma);
  }
  if (kind == "gaussian") {
    if (j->contains("correlation"))
      return NoiseSpec::gaussian(
          sigma, as_matrix((*j)["correlation"], "noise.correlation"));
    return NoiseSpec::gaussian(sigma);
  }
  throw ValidationError("noise.kind",
                        "expected \"none\", \"bounded_uniform\" or \"gaussian\"");
}

ExperimentDesign parse_design(const json& j, int n) {
  reject_unknown_keys(j, "design", {"kind", "q", "rho", "table"});
  const std::string kind = as_string(require(j, "design", "kind"), "design.kind");
  if (kind == "independent") {
    const Vec q = as_vector(require(j, "design", "q"), "design.q");
    if (static_cast<int>(q.size()) != n)
      throw ValidationError("design.q", "dimension mismatch with demand");
    return ExperimentDesign::independent(q);
  }
  if (kind == "mixture") {
    const double rho = as_number(require(j, "design", "rho"), "design.rho");
    const double q = as_number(require(j, "design", "q"), "design.q");
    return ExperimentDesign::common_shock_mixture(n, rho, q);
  }
  if (kind == "table") {
    const json& tbl = require(j, "design", "table");
    if (!tbl.is_object())
      throw ValidationError("design.table",
                            "expected an object keyed by bitstrings");
    Vec table(size_t{1} << n, 0.0);
    for (auto it = tbl.begin(); it != tbl.end(); ++it) {
      const std::string& bits = it.key();
      if (static_cast<int>(bits.size()) != n)
        throw ValidationError("design.table",
                              "key \"" + bits + "\" must have n bits");
      uint32_t idx = 0;
      for (char c : bits) {
        if (c != '0' && c != '1')
          throw ValidationError("design.table",
                                "key \"" + bits + "\" must be a bitstring");
        idx = (idx << 1) | static_cast<uint32_t>(c - '0');
      }
      table[idx] = as_number(it.value(), "design.table." + bits);
    }
    return ExperimentDesign::explicit_table(n, std::move(table));
  }
  throw ValidationError("design.kind",
                        "expected \"independent\", \"mixture\" or \"table\"");
}

DesignSweepSpec parse_design_sweep(const json& j) {
  reject_unknown_keys(j, "design_sweep", {"rho_values", "q"});
  DesignSweepSpec s;
  s.rho_values =
      as_vector(require(j, "design_sweep", "rho_values"), "design_sweep.rho_values");
  if (s.rho_values.empty())
    throw ValidationError("design_sweep.rho_values", "need at least one rho");
  s.q = as_number(require(j, "design_sweep", "q"), "design_sweep.q");
  return s;
}

ConjectureSpec parse_conjecture(const json& j, int n) {
  reject_unknown_keys(j, "conjecture", {"kind", "matrix", "value"});
  const std::string kind =
      as_string(require(j, "conjecture", "kind"), "conjecture.kind");
  ConjectureSpec spec;
  if (kind == "zero") {
    spec.kind = ConjectureSpec::Kind::Zero;
  } else if (kind == "from_design") {
    spec.kind = ConjectureSpec::Kind::FromDesign;
  } else if (kind == "explicit") {
    spec.kind = ConjectureSpec::Kind::Explicit;
    spec.matrix = as_matrix(require(j, "conjecture", "matrix"), "conjecture.matrix");
    if (spec.matrix.rows() != n || spec.matrix.cols() != n)
      throw ValidationError("conjecture.matrix", "must be n x n");
  } else if (kind == "symmetric") {
    spec.kind = ConjectureSpec::Kind::Symmetric;
    spec.value = as_number(require(j, "conjecture", "value"), "conjecture.value");
  } else {
    throw ValidationError(
        "conjecture.kind",
        "expected \"zero\", \"from_design\", \"explicit\" or \"symmetric\"");
  }
  return spec;
}

ConjectureSweepSpec parse_conjecture_sweep(const json& j, int n) {
  reject_unknown_keys(j, "conjecture_sweep", {"kind", "values", "matrices"});
  const std::string kind =
      as_string(require(j, "conjecture_sweep", "kind"), "conjecture_sweep.kind");
  ConjectureSweepSpec s;
  if (kind == "symmetric") {
    s.kind = ConjectureSweepSpec::Kind::SymmetricValues;
    s.values =
        as_vector(require(j, "conjecture_sweep", "values"), "conjecture_sweep.values");
    if (s.values.empty())
      throw ValidationError("conjecture_sweep.values", "need at least one value");
  } else if (kind == "explicit") {
    s.kind = ConjectureSweepSpec::Kind::ExplicitList;
    const json& arr = require(j, "conjecture_sweep", "matrices");
    if (!arr.is_array() || arr.empty())
      throw ValidationError("conjecture_sweep.matrices",
                            "expected a nonempty array of matrices");
    for (size_t i = 0; i < arr.size(); ++i) {
      Matrix m = as_matrix(arr[i], "conjecture_sweep.matrices[" +
                                       std::to_string(i) + "]");
      if (m.rows() != n || m.cols() != n)
        throw ValidationError(
            "conjecture_sweep.matrices[" + std::to_string(i) + "]",
            "must be n x n");
      s.matrices.push_back(std::move(m));
    }
  } else {
    throw ValidationError("conjecture_sweep.kind",
                          "expected \"symmetric\" or \"explicit\"");
  }
  return s;
}

BatchSchedule parse_batches(const json& j) {
  reject_unknown_keys(j, "sldl.batches",
                      {"kind", "first", "growth", "count", "lengths"});
  const std::string kind =
      as_string(require(j, "sldl.batches", "kind"), "sldl.batches.kind");
  if (kind == "geometric") {
    return BatchSchedule::geometric(
        as_integer(require(j, "sldl.batches", "first"), "sldl.batches.first"),
        as_number(require(j, "sldl.batches", "growth"), "sldl.batches.growth"),
        static_cast<int>(as_integer(require(j, "sldl.batches", "count"),
                                    "sldl.batches.count")));
  }
  if (kind == "explicit") {
    const json& arr = require(j, "sldl.batches", "lengths");
    if (!arr.is_array())
      throw ValidationError("sldl.batches.lengths", "expected an array");
    std::vector<int64_t> lengths;
    for (size_t i = 0; i < arr.size(); ++i)
      lengths.push_back(as_integer(
          arr[i], "sldl.batches.lengths[" + std::to_string(i) + "]"));
    return BatchSchedule::explicit_lengths_of(std::move(lengths));
  }
  throw ValidationError("sldl.batches.kind",
                        "expected \"geometric\" or \"explicit\"");
}

DeltaSchedule parse_deltas(const json& j, int n) {
  reject_unknown_keys(j, "sldl.delta", {"kind", "c", "eta", "per_seller"});
  const std::string kind =
      as_string(require(j, "sldl.delta", "kind"), "sldl.delta.kind");
  if (kind == "theorem2") return DeltaSchedule::theorem2_rate();
  if (kind == "power_law")
    return DeltaSchedule::power_law(
        as_number(require(j, "sldl.delta", "c"), "sldl.delta.c"),
        as_number(require(j, "sldl.delta", "eta"), "sldl.delta.eta"));
  if (kind == "explicit") {
    const json& arr = require(j, "sldl.delta", "per_seller");
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
      throw ValidationError("sldl.delta.per_seller",
                            "need one delta list per seller");
    std::vector<Vec> lists;
    for (size_t i = 0; i < arr.size(); ++i)
      lists.push_back(as_vector(
          arr[i], "sldl.delta.per_seller[" + std::to_string(i) + "]"));
    return DeltaSchedule::explicit_deltas(std::move(lists));
  }
  throw ValidationError("sldl.delta.kind",
                        "expected \"theorem2\", \"power_law\" or \"explicit\"");
}

SldlConfig parse_sldl(const json& j, int n) {
  reject_unknown_keys(j, "sldl",
                      {"u", "initial_price", "batches", "delta",
                       "slope_tolerance", "seed", "log_periods"});
  SldlConfig cfg;
  cfg.u = as_vector(require(j, "sldl", "u"), "sldl.u");
  if (static_cast<int>(cfg.u.size()) != n)
    throw ValidationError("sldl.u", "dimension mismatch with demand");
  cfg.initial_price =
      as_vector(require(j, "sldl", "initial_price"), "sldl.initial_price");
  if (static_cast<int>(cfg.initial_price.size()) != n)
    throw ValidationError("sldl.initial_price", "dimension mismatch with demand");
  cfg.batches = parse_batches(require(j, "sldl", "batches"));
  cfg.deltas = parse_deltas(require(j, "sldl", "delta"), n);
  if (j.contains("slope_tolerance")) {
    cfg.slope_tolerance = as_number(j["slope_tolerance"], "sldl.slope_tolerance");
    if (!(cfg.slope_tolerance > 0.0))
      throw ValidationError("sldl.slope_tolerance", "must be positive");
  }
  cfg.seed = static_cast<uint64_t>(
      as_integer(require(j, "sldl", "seed"), "sldl.seed"));
  if (j.contains("log_periods"))
    cfg.log_periods = as_bool(j["log_periods"], "sldl.log_periods");
  return cfg;
}

TargetSpec parse_target(const json& j, int n) {
  reject_unknown_keys(j, "harness.target", {"kind", "price"});
  const std::string kind =
      as_string(require(j, "harness.target", "kind"), "harness.target.kind");
  TargetSpec t;
  if (kind == "nash") {
    t.kind = TargetSpec::Kind::Nash;
  } else if (kind == "cv_from_design") {
    t.kind = TargetSpec::Kind::CvFromDesign;
  } else if (kind == "explicit") {
    t.kind = TargetSpec::Kind::ExplicitPrice;
    t.price = as_vector(require(j, "harness.target", "price"),
                        "harness.target.price");
    if (static_cast<int>(t.price.size()) != n)
      throw ValidationError("harness.target.price", "dimension mismatch");
  } else {
    throw ValidationError("harness.target.kind",
                          "expected \"nash\", \"cv_from_design\" or \"explicit\"");
  }
  return t;
}

}  // namespace

Vec LoadedPlan::learning_rates() const {
  if (sldl) return sldl->u;
  return Vec(demand.n(), 0.5);
}

ConjectureMatrix LoadedPlan::resolve_conjecture() const {
  const int n = demand.n();
  switch (conjecture.kind) {
    case ConjectureSpec::Kind::Zero:
      return ConjectureMatrix::zero(n);
    case ConjectureSpec::Kind::FromDesign:
      if (!design)
        throw ValidationError("conjecture",
                              "kind \"from_design\" needs a design section");
      return conjecture_matrix(*design);
    case ConjectureSpec::Kind::Explicit:
      return ConjectureMatrix(conjecture.matrix);
    case ConjectureSpec::Kind::Symmetric:
      return ConjectureMatrix::uniform_off_diagonal(n, conjecture.value);
  }
  throw ValidationError("conjecture", "unresolved conjecture kind");
}

std::vector<ConjectureMatrix> LoadedPlan::resolve_conjecture_path() const {
  if (!conjecture_sweep)
    throw ValidationError("conjecture_sweep", "missing section");
  std::vector<ConjectureMatrix> path;
  if (conjecture_sweep->kind == ConjectureSweepSpec::Kind::SymmetricValues) {
    for (double v : conjecture_sweep->values)
      path.push_back(ConjectureMatrix::uniform_off_diagonal(demand.n(), v));
  } else {
    for (const Matrix& m : conjecture_sweep->matrices)
      path.push_back(ConjectureMatrix(m));
  }
  return path;
}

ExperimentPlan LoadedPlan::experiment_plan() const {
  if (!design)
    throw ValidationError("design", "missing section (required to simulate)");
  if (!sldl) throw ValidationError("sldl", "missing section");
  if (!has_harness) throw ValidationError("harness", "missing section");
  ExperimentPlan p{demand,  noise,        *design,       *sldl,
                   replications, target, tail_fraction, bootstrap_resamples,
                   solve_options};
  return p;
}

ExperimentPlan LoadedPlan::experiment_plan_for_sweep() const {
  if (!sldl) throw ValidationError("sldl", "missing section");
  if (!has_harness) throw ValidationError("harness", "missing section");
  ExperimentDesign d =
      design ? *design : ExperimentDesign::independent(Vec(demand.n(), 0.5));
  ExperimentPlan p{demand,       noise,  d,             *sldl,
                   replications, target, tail_fraction, bootstrap_resamples,
                   solve_options};
  return p;
}

LoadedPlan parse_plan_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("plan is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("", "plan must be a JSON object");
  reject_unknown_keys(j, "",
                      {"schema_version", "box", "demand", "noise", "design",
                       "design_sweep", "conjecture", "conjecture_sweep",
                       "sldl", "harness", "equilibrium", "outputs"});
  const int version = static_cast<int>(
      as_integer(require(j, "", "schema_version"), "schema_version"));
  if (version != 1)
    throw ValidationError("schema_version", "unsupported version " +
                                                std::to_string(version));

  PriceBox box = parse_box(require(j, "", "box"));
  DemandSystem demand = parse_demand(require(j, "", "demand"), std::move(box));
  const int n = demand.n();
  NoiseSpec noise =
      parse_noise(j.contains("noise") ? &j["noise"] : nullptr, demand);

  LoadedPlan plan(std::move(demand), std::move(noise));
  plan.schema_version = version;

  if (j.contains("design") && j.contains("design_sweep"))
    throw ValidationError("design_sweep",
                          "provide either design or design_sweep, not both");
  if (j.contains("design")) plan.design = parse_design(j["design"], n);
  if (j.contains("design_sweep"))
    plan.design_sweep = parse_design_sweep(j["design_sweep"]);

  if (j.contains("conjecture"))
    plan.conjecture = parse_conjecture(j["conjecture"], n);
  if (j.contains("conjecture_sweep"))
    plan.conjecture_sweep = parse_conjecture_sweep(j["conjecture_sweep"], n);

  if (j.contains("sldl")) plan.sldl = parse_sldl(j["sldl"], n);

  if (j.contains("harness")) {
    const json& h = j["harness"];
    reject_unknown_keys(h, "harness",
                        {"replications", "target", "tail_fraction", "bootstrap"});
    plan.has_harness = true;
    plan.replications = static_cast<int>(as_integer(
        require(h, "harness", "replications"), "harness.replications"));
    if (plan.replications < 1)
      throw ValidationError("harness.replications", "need at least 1");
    plan.target = parse_target(require(h, "harness", "target"), n);
    if (h.contains("tail_fraction")) {
      plan.tail_fraction = as_number(h["tail_fraction"], "harness.tail_fraction");
      if (!(plan.tail_fraction > 0.0) || !(plan.tail_fraction <= 1.0))
        throw ValidationError("harness.tail_fraction", "must lie in (0, 1]");
    }
    if (h.contains("bootstrap")) {
      plan.bootstrap_resamples =
          static_cast<int>(as_integer(h["bootstrap"], "harness.bootstrap"));
      if (plan.bootstrap_resamples < 0)
        throw ValidationError("harness.bootstrap", "must be nonnegative");
    }
  }

  if (j.contains("equilibrium")) {
    const json& e = j["equilibrium"];
    reject_unknown_keys(e, "equilibrium",
                        {"map_tol", "foc_tol", "max_iter", "contraction_grid"});
    if (e.contains("map_tol"))
      plan.solve_options.map_tol = as_number(e["map_tol"], "equilibrium.map_tol");
    if (e.contains("foc_tol"))
      plan.solve_options.foc_tol = as_number(e["foc_tol"], "equilibrium.foc_tol");
    if (e.contains("max_iter"))
      plan.solve_options.max_iter = static_cast<int>(
          as_integer(e["max_iter"], "equilibrium.max_iter"));
    if (e.contains("contraction_grid"))
      plan.solve_options.contraction_grid = static_cast<int>(
          as_integer(e["contraction_grid"], "equilibrium.contraction_grid"));
  }

  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    reject_unknown_keys(o, "outputs", {"dir", "format"});
    if (o.contains("dir")) plan.outputs.dir = as_string(o["dir"], "outputs.dir");
    if (o.contains("format")) {
      plan.outputs.format = as_string(o["format"], "outputs.format");
      if (plan.outputs.format != "csv" && plan.outputs.format != "json")
        throw ValidationError("outputs.format", "expected \"csv\" or \"json\"");
    }
  }

  plan.canonical_text = j.dump();
  return plan;
}

LoadedPlan load_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("", "cannot open plan file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan_text(ss.str());
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace pricelab
