#include "kaf/snapshot.hpp"

#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kaf/errors.hpp"

namespace kaf {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) {
  throw ConfigError("snapshot: " + ctx + ": " + msg);
}

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(ctx, "unknown key '" + it.key() + "'");
  }
}

const json& get_field(const json& obj, const std::string& ctx, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ctx, std::string("missing key '") + key + "'");
  return *it;
}

double get_double(const json& v, const std::string& ctx) {
  if (!v.is_number()) fail(ctx, "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) fail(ctx, "expected an integer");
  return v.get<std::int64_t>();
}

}  // namespace

std::string to_string(Likelihood tag) {
  switch (tag) {
    case Likelihood::Gaussian:
      return "gaussian";
    case Likelihood::Poisson:
      return "poisson";
    case Likelihood::Bernoulli:
      return "bernoulli";
  }
  throw std::invalid_argument("to_string: unknown likelihood");
}

Likelihood likelihood_from_string(const std::string& name) {
  if (name == "gaussian") return Likelihood::Gaussian;
  if (name == "poisson") return Likelihood::Poisson;
  if (name == "bernoulli") return Likelihood::Bernoulli;
  throw ConfigError("unknown likelihood '" + name + "'");
}

std::string snapshot_to_json(const FilterState& state, Likelihood likelihood) {
  json j;
  j["format_version"] = kSnapshotFormatVersion;
  j["kernel"] = json{{"family", "squared_exponential"}, {"gamma", state.kernel.gamma}};
  j["likelihood"] = to_string(likelihood);
  j["lambda"] = state.lambda;
  j["sigma_d2"] = state.sigma_d2;
  j["sigma_n2"] = state.sigma_n2;
  j["budget"] = state.budget ? json(*state.budget) : json(nullptr);
  j["prune_threshold"] = state.prune_threshold ? json(*state.prune_threshold) : json(nullptr);
  j["step"] = state.step;
  json centers = json::array();
  for (const Center& c : state.centers) {
    json jc;
    jc["x"] = std::vector<double>(c.point.data(), c.point.data() + c.point.size());
    jc["coeff"] = c.coeff;
    jc["step_added"] = c.step_added;
    centers.push_back(std::move(jc));
  }
  j["centers"] = std::move(centers);
  return j.dump(2) + "\n";
}

ModelSnapshot snapshot_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("snapshot: ") + e.what());
  }
  if (!j.is_object()) fail("root", "expected a JSON object");
  check_keys(j, "root",
             {"format_version", "kernel", "likelihood", "lambda", "sigma_d2", "sigma_n2", "budget",
              "prune_threshold", "step", "centers"});

  const std::int64_t version = get_int(get_field(j, "root", "format_version"), "format_version");
  if (version != kSnapshotFormatVersion)
    fail("format_version", "unsupported format_version " + std::to_string(version) +
                               " (expected " + std::to_string(kSnapshotFormatVersion) + ")");

  ModelSnapshot snap;
  const json& jk = get_field(j, "root", "kernel");
  if (!jk.is_object()) fail("kernel", "expected an object");
  check_keys(jk, "kernel", {"family", "gamma"});
  const json& fam = get_field(jk, "kernel", "family");
  if (!fam.is_string() || fam.get<std::string>() != "squared_exponential")
    fail("kernel.family", "only 'squared_exponential' is supported");
  snap.state.kernel.gamma = get_double(get_field(jk, "kernel", "gamma"), "kernel.gamma");
  if (!(snap.state.kernel.gamma > 0.0)) fail("kernel.gamma", "must be positive");

  const json& lik = get_field(j, "root", "likelihood");
  if (!lik.is_string()) fail("likelihood", "expected a string");
  snap.likelihood = likelihood_from_string(lik.get<std::string>());

  snap.state.lambda = get_double(get_field(j, "root", "lambda"), "lambda");
  if (!(snap.state.lambda > 0.0 && snap.state.lambda <= 1.0)) fail("lambda", "must be in (0,1]");
  snap.state.sigma_d2 = get_double(get_field(j, "root", "sigma_d2"), "sigma_d2");
  if (!(snap.state.sigma_d2 > 0.0)) fail("sigma_d2", "must be positive");
  snap.state.sigma_n2 = get_double(get_field(j, "root", "sigma_n2"), "sigma_n2");
  if (!(snap.state.sigma_n2 > 0.0)) fail("sigma_n2", "must be positive");

  const json& jb = get_field(j, "root", "budget");
  if (jb.is_null()) {
    snap.state.budget.reset();
  } else {
    const std::int64_t b = get_int(jb, "budget");
    if (b < 1) fail("budget", "must be >= 1");
    snap.state.budget = static_cast<int>(b);
  }
  const json& jp = get_field(j, "root", "prune_threshold");
  if (jp.is_null()) {
    snap.state.prune_threshold.reset();
  } else {
    const double p = get_double(jp, "prune_threshold");
    if (!(p >= 0.0)) fail("prune_threshold", "must be >= 0");
    snap.state.prune_threshold = p;
  }

  snap.state.step = get_int(get_field(j, "root", "step"), "step");
  if (snap.state.step < 0) fail("step", "must be >= 0");

  const json& jc = get_field(j, "root", "centers");
  if (!jc.is_array()) fail("centers", "expected an array");
  Eigen::Index dim = -1;
  snap.state.centers.reserve(jc.size());
  for (std::size_t i = 0; i < jc.size(); ++i) {
    const std::string ctx = "centers[" + std::to_string(i) + "]";
    const json& item = jc[i];
    if (!item.is_object()) fail(ctx, "expected an object");
    check_keys(item, ctx, {"x", "coeff", "step_added"});
    const json& jx = get_field(item, ctx, "x");
    if (!jx.is_array() || jx.empty()) fail(ctx + ".x", "expected a non-empty array");
    Center c;
    c.point.resize(static_cast<Eigen::Index>(jx.size()));
    for (std::size_t d = 0; d < jx.size(); ++d)
      c.point[static_cast<Eigen::Index>(d)] = get_double(jx[d], ctx + ".x");
    if (dim < 0) dim = c.point.size();
    if (c.point.size() != dim) fail(ctx + ".x", "inconsistent input dimension");
    c.coeff = get_double(get_field(item, ctx, "coeff"), ctx + ".coeff");
    c.step_added = get_int(get_field(item, ctx, "step_added"), ctx + ".step_added");
    snap.state.centers.push_back(std::move(c));
  }
  return snap;
}

void save_snapshot(const FilterState& state, Likelihood likelihood, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("save_snapshot: cannot open " + path);
  out << snapshot_to_json(state, likelihood);
  if (!out) throw ConfigError("save_snapshot: write failed for " + path);
}

ModelSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_snapshot: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return snapshot_from_json(buf.str());
}

}  // namespace kaf
