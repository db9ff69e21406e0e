// Copyright 2026 The eminv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eminv/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <vector>

#include "eminv/dense_oracle.hpp"
#include "eminv/errors.hpp"
#include "eminv/estimator.hpp"
#include "eminv/io.hpp"
#include "eminv/kalman.hpp"
#include "eminv/metamodel.hpp"
#include "eminv/parallel.hpp"
#include "eminv/problem.hpp"
#include "eminv/version.hpp"

namespace eminv {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Strict JSON access: every object checks its key set, so a typo in a config
// fails loudly instead of silently falling back to a default.

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(ctx + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.contains(key)) {
      throw ValidationError("unknown key '" + ctx + "." + key + "'");
    }
  }
}

const json& require_key(const json& obj, const std::string& ctx, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing key '" + ctx + "." + key + "'");
  return *it;
}

int get_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) throw ValidationError(ctx + " must be an integer");
  return v.get<int>();
}

double get_num(const json& v, const std::string& ctx) {
  if (!v.is_number()) throw ValidationError(ctx + " must be a number");
  return v.get<double>();
}

std::uint64_t get_u64(const json& v, const std::string& ctx) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ValidationError(ctx + " must be a non-negative integer");
}

std::string get_string(const json& v, const std::string& ctx) {
  if (!v.is_string()) throw ValidationError(ctx + " must be a string");
  return v.get<std::string>();
}

std::array<double, 2> parse_prior_component(const json& spec, const std::string& ctx) {
  check_keys(spec, ctx, {"type", "a", "b"});
  const std::string type = get_string(require_key(spec, ctx, "type"), ctx + ".type");
  if (type == "uniform") {
    if (spec.contains("a") || spec.contains("b")) {
      throw ValidationError(ctx + ": uniform takes no shape parameters");
    }
    return {1.0, 1.0};
  }
  if (type == "beta") {
    return {get_num(require_key(spec, ctx, "a"), ctx + ".a"),
            get_num(require_key(spec, ctx, "b"), ctx + ".b")};
  }
  throw ValidationError(ctx + ".type must be 'uniform' or 'beta'");
}

RhoPrior parse_rho_prior(const json& spec, int dim, const std::string& ctx) {
  std::vector<std::array<double, 2>> shapes;
  if (spec.is_array()) {
    if (static_cast<int>(spec.size()) != dim) {
      throw ValidationError(ctx + " must list exactly " + std::to_string(dim) +
                            " components for this correlation case");
    }
    for (std::size_t i = 0; i < spec.size(); ++i) {
      shapes.push_back(parse_prior_component(spec[i], ctx + "[" + std::to_string(i) + "]"));
    }
  } else {
    shapes.assign(static_cast<std::size_t>(dim), parse_prior_component(spec, ctx));
  }
  return RhoPrior(std::move(shapes));
}

json rho_prior_to_json(const RhoPrior& prior) {
  json arr = json::array();
  for (const auto& [a, b] : prior.shapes()) {
    if (a == 1.0 && b == 1.0) {
      arr.push_back(json{{"type", "uniform"}});
    } else {
      arr.push_back(json{{"type", "beta"}, {"a", a}, {"b", b}});
    }
  }
  return arr;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["layout"] = {{"areas_per_block", c.layout.areas_per_block()}};
  j["frequencies"] = c.frequencies;
  j["angles"] = c.angles;
  json reference = json::array();
  for (Eigen::Index b = 0; b < c.prior.reference.rows(); ++b) {
    json row = json::array();
    for (Eigen::Index p = 0; p < c.prior.reference.cols(); ++p) {
      row.push_back(c.prior.reference(b, p));
    }
    reference.push_back(row);
  }
  j["prior"] = {{"reference", reference},
                {"sigma_abs", c.prior.sigma_abs},
                {"sigma_rel", c.prior.sigma_rel},
                {"spatial_correlation", c.prior.spatial_correlation}};
  j["rho"] = {{"case", static_cast<int>(c.rho_case)}, {"prior", rho_prior_to_json(c.rho_prior)}};
  j["noise_scale"] = c.noise_scale;
  json mm;
  switch (c.metamodel_source) {
    case MetamodelSource::kSynthetic:
      mm["source"] = "synthetic";
      break;
    case MetamodelSource::kTraining:
      mm["source"] = "training";
      break;
    case MetamodelSource::kMatrices:
      mm["source"] = "matrices";
      break;
  }
  mm["gamma"] = c.gamma;
  mm["solver_seed"] = c.solver_seed;
  mm["training_pairs"] = c.training_pairs;
  mm["bootstrap_replicates"] = c.bootstrap_replicates;
  if (!c.metamodel_path.empty()) mm["path"] = c.metamodel_path;
  j["metamodel"] = mm;
  j["smc"] = {{"particles", c.smc.particles},
              {"ess_fraction", c.smc.ess_fraction},
              {"mh_steps", c.smc.mh_steps},
              {"step_scale", c.smc.step_scale},
              {"target_acceptance", c.smc.target_acceptance},
              {"max_generations", c.smc.max_generations}};
  json truth;
  truth["trajectory"] = c.truth_smooth ? "smooth" : "independent";
  if (c.truth_rho) {
    json rho = json::array();
    for (Eigen::Index i = 0; i < c.truth_rho->size(); ++i) rho.push_back((*c.truth_rho)[i]);
    truth["rho"] = rho;
  }
  j["truth"] = truth;
  j["output"] = {{"dir", c.output_dir},
                 {"histogram_bins", c.histogram_bins},
                 {"posterior_draws", c.posterior_draws},
                 {"dense_cap", c.dense_cap}};
  j["seed"] = c.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Artifact names and shared read/write helpers.

constexpr const char* kConfigEcho = "config_echo.json";
constexpr const char* kTruthState = "truth_state.csv";
constexpr const char* kTruthRho = "truth_rho.csv";
constexpr const char* kMeasurements = "measurements.csv";
constexpr const char* kMetamodel = "metamodel.csv";
constexpr const char* kDiagnostics = "diagnostics.csv";
constexpr const char* kParticles = "particles.csv";
constexpr const char* kProfiles = "profiles.csv";
constexpr const char* kHistograms = "histograms.csv";
constexpr const char* kSummary = "summary.csv";
constexpr const char* kSamples = "samples.csv";
constexpr const char* kOracle = "oracle.csv";
constexpr const char* kBootstrap = "bootstrap.csv";
constexpr const char* kBootstrapMeta = "bootstrap_meta.csv";

ArtifactHeader make_header(const ScenarioConfig& c) {
  return ArtifactHeader{kVersion, scenario_hash(c), c.seed};
}

std::string freq_file_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "freq_%03d.csv", k);
  return buf;
}

std::vector<std::string> channel_names(int angles) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(kChannelsPerAngle * angles));
  for (int m = 0; m < angles; ++m) {
    for (int ch = 0; ch < kChannelsPerAngle; ++ch) {
      names.push_back("a" + std::to_string(m) + ".c" + std::to_string(ch));
    }
  }
  return names;
}

std::vector<std::string> state_names(const BlockLayout& layout) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(layout.state_dim()));
  for (int i = 0; i < layout.state_dim(); ++i) names.push_back(layout.component_name(i));
  return names;
}

/// Writes rows of per-frequency vectors: `frequency` column plus one column
/// per component.
void write_frequency_rows(const std::filesystem::path& path, const ArtifactHeader& header,
                          const std::vector<std::string>& names,
                          const std::vector<Eigen::VectorXd>& rows) {
  std::vector<std::string> columns{"frequency"};
  columns.insert(columns.end(), names.begin(), names.end());
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (Eigen::Index i = 0; i < rows[k].size(); ++i) row.push_back(format_double(rows[k][i]));
    cells.push_back(std::move(row));
  }
  write_table(path, header, columns, cells);
}

std::vector<Eigen::VectorXd> read_frequency_rows(const std::filesystem::path& path,
                                                 int num_frequencies, int dim) {
  const Table table = read_table(path);
  if (static_cast<int>(table.rows.size()) != num_frequencies) {
    throw ValidationError(path.string() + ": expected " + std::to_string(num_frequencies) +
                          " frequency rows, found " + std::to_string(table.rows.size()));
  }
  if (static_cast<int>(table.columns.size()) != dim + 1) {
    throw ValidationError(path.string() + ": expected " + std::to_string(dim + 1) +
                          " columns, found " + std::to_string(table.columns.size()));
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(num_frequencies));
  const int freq_col = table.column("frequency");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.value(r, freq_col) != static_cast<double>(r)) {
      throw ValidationError(path.string() + ": frequency rows must be 0..K-1 in order");
    }
    Eigen::VectorXd v(dim);
    int j = 0;
    for (int cidx = 0; cidx < static_cast<int>(table.columns.size()); ++cidx) {
      if (cidx == freq_col) continue;
      v[j++] = table.value(r, cidx);
    }
    out.push_back(std::move(v));
  }
  return out;
}

void write_metamodel_csv(const std::filesystem::path& path, const ArtifactHeader& header,
                         const std::vector<Eigen::MatrixXd>& a,
                         const std::vector<Eigen::VectorXd>& y0,
                         const std::vector<Eigen::MatrixXd>& r) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::string ks = std::to_string(k);
    for (Eigen::Index i = 0; i < a[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < a[k].cols(); ++j) {
        rows.push_back({ks, "a", std::to_string(i), std::to_string(j),
                        format_double(a[k](i, j))});
      }
    }
    for (Eigen::Index i = 0; i < y0[k].size(); ++i) {
      rows.push_back({ks, "y0", std::to_string(i), "0", format_double(y0[k][i])});
    }
    for (Eigen::Index i = 0; i < r[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < r[k].cols(); ++j) {
        rows.push_back({ks, "r", std::to_string(i), std::to_string(j),
                        format_double(r[k](i, j))});
      }
    }
  }
  write_table(path, header, {"frequency", "kind", "row", "col", "value"}, rows);
}

struct RawMetamodel {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::VectorXd> y0;
  std::vector<Eigen::MatrixXd> r;
};

RawMetamodel read_metamodel_csv(const std::filesystem::path& path, int num_frequencies,
                                int state_dim, int obs_dim) {
  const Table table = read_table(path);
  const double nan = std::nan("");
  RawMetamodel out;
  out.a.assign(static_cast<std::size_t>(num_frequencies),
               Eigen::MatrixXd::Constant(obs_dim, state_dim, nan));
  out.y0.assign(static_cast<std::size_t>(num_frequencies),
                Eigen::VectorXd::Constant(obs_dim, nan));
  out.r.assign(static_cast<std::size_t>(num_frequencies),
               Eigen::MatrixXd::Constant(obs_dim, obs_dim, nan));
  const int c_freq = table.column("frequency");
  const int c_kind = table.column("kind");
  const int c_row = table.column("row");
  const int c_col = table.column("col");
  const int c_val = table.column("value");
  for (std::size_t rix = 0; rix < table.rows.size(); ++rix) {
    const int k = static_cast<int>(table.value(rix, c_freq));
    const int i = static_cast<int>(table.value(rix, c_row));
    const int j = static_cast<int>(table.value(rix, c_col));
    const double v = table.value(rix, c_val);
    const std::string& kind = table.rows[rix][static_cast<std::size_t>(c_kind)];
    if (k < 0 || k >= num_frequencies) {
      throw ValidationError(path.string() + ": frequency index out of range");
    }
    auto at = [&](Eigen::MatrixXd& m) -> double& {
      if (i < 0 || i >= m.rows() || j < 0 || j >= m.cols()) {
        throw ValidationError(path.string() + ": matrix index out of range for kind '" + kind +
                              "'");
      }
      return m(i, j);
    };
    if (kind == "a") {
      at(out.a[static_cast<std::size_t>(k)]) = v;
    } else if (kind == "y0") {
      if (i < 0 || i >= obs_dim || j != 0) {
        throw ValidationError(path.string() + ": y0 index out of range");
      }
      out.y0[static_cast<std::size_t>(k)][i] = v;
    } else if (kind == "r") {
      at(out.r[static_cast<std::size_t>(k)]) = v;
    } else {
      throw ValidationError(path.string() + ": unknown kind '" + kind + "'");
    }
  }
  for (int k = 0; k < num_frequencies; ++k) {
    if (out.a[static_cast<std::size_t>(k)].hasNaN() ||
        out.y0[static_cast<std::size_t>(k)].hasNaN() ||
        out.r[static_cast<std::size_t>(k)].hasNaN()) {
      throw ValidationError(path.string() + ": incomplete surrogate at frequency " +
                            std::to_string(k));
    }
  }
  return out;
}

std::vector<MarginalPrior> build_priors(const ScenarioConfig& c) {
  return std::vector<MarginalPrior>(static_cast<std::size_t>(c.frequencies),
                                    build_spatial_prior(c.layout, c.prior));
}

InverseProblem load_problem(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  const auto measurements =
      read_frequency_rows(out_dir / kMeasurements, c.frequencies, c.obs_dim());
  const std::filesystem::path mm_path = c.metamodel_source == MetamodelSource::kMatrices
                                            ? std::filesystem::path(c.metamodel_path)
                                            : out_dir / kMetamodel;
  RawMetamodel raw = read_metamodel_csv(mm_path, c.frequencies, c.state_dim(), c.obs_dim());
  std::vector<LinearObservationModel> obs;
  obs.reserve(static_cast<std::size_t>(c.frequencies));
  for (int k = 0; k < c.frequencies; ++k) {
    try {
      obs.push_back(LinearObservationModel{std::move(raw.a[static_cast<std::size_t>(k)]),
                                           std::move(raw.y0[static_cast<std::size_t>(k)]),
                                           SpdMatrix(symmetrize(raw.r[static_cast<std::size_t>(k)]))});
    } catch (const NotPositiveDefiniteError&) {
      throw NotPositiveDefiniteError("measurement noise covariance at frequency " +
                                     std::to_string(k) + " is not positive definite");
    }
  }
  return InverseProblem(c.layout, build_priors(c), std::move(obs), measurements, c.rho_case);
}

void write_echo(const ScenarioConfig& c, const std::filesystem::path& out_dir,
                const std::string& command) {
  std::ofstream out(out_dir / kConfigEcho);
  if (!out) throw ValidationError("cannot write " + (out_dir / kConfigEcho).string());
  out << scenario_echo_json(c, command) << "\n";
}

Eigen::VectorXd stack_measurements(const std::vector<Eigen::VectorXd>& ys) {
  Eigen::Index total = 0;
  for (const auto& y : ys) total += y.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& y : ys) {
    out.segment(at, y.size()) = y;
    at += y.size();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing.

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(source_name + ": " + e.what());
  }
  // "_provenance" is what scenario_echo_json adds, so an echoed config can be
  // fed straight back in.
  check_keys(root, "config",
             {"layout", "frequencies", "angles", "prior", "rho", "noise_scale", "metamodel",
              "smc", "truth", "output", "seed", "_provenance"});

  ScenarioConfig c;

  const json& layout = require_key(root, "config", "layout");
  check_keys(layout, "layout", {"areas_per_block"});
  const json& areas = require_key(layout, "layout", "areas_per_block");
  if (!areas.is_array() || areas.empty()) {
    throw ValidationError("layout.areas_per_block must be a non-empty array");
  }
  std::vector<int> areas_vec;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    areas_vec.push_back(get_int(areas[i], "layout.areas_per_block[" + std::to_string(i) + "]"));
  }
  c.layout = BlockLayout(areas_vec);

  c.frequencies = get_int(require_key(root, "config", "frequencies"), "frequencies");
  if (c.frequencies < 1) throw ValidationError("frequencies must be at least 1");
  c.angles = get_int(require_key(root, "config", "angles"), "angles");
  if (c.angles < 1) throw ValidationError("angles must be at least 1");

  const json& prior = require_key(root, "config", "prior");
  check_keys(prior, "prior", {"reference", "sigma_abs", "sigma_rel", "spatial_correlation"});
  const json& reference = require_key(prior, "prior", "reference");
  if (!reference.is_array() || static_cast<int>(reference.size()) != c.layout.num_blocks()) {
    throw ValidationError("prior.reference must list one row per block");
  }
  c.prior.reference.resize(c.layout.num_blocks(), kNumProperties);
  for (std::size_t b = 0; b < reference.size(); ++b) {
    const json& row = reference[b];
    if (!row.is_array() || row.size() != kNumProperties) {
      throw ValidationError("prior.reference[" + std::to_string(b) + "] must have " +
                            std::to_string(kNumProperties) +
                            " entries (eps_re, eps_im, mu_re, mu_im)");
    }
    for (std::size_t p = 0; p < row.size(); ++p) {
      c.prior.reference(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p)) =
          get_num(row[p], "prior.reference entry");
    }
  }
  c.prior.sigma_abs = get_num(require_key(prior, "prior", "sigma_abs"), "prior.sigma_abs");
  c.prior.sigma_rel = get_num(require_key(prior, "prior", "sigma_rel"), "prior.sigma_rel");
  c.prior.spatial_correlation = get_num(require_key(prior, "prior", "spatial_correlation"),
                                        "prior.spatial_correlation");
  c.prior.validate(c.layout);

  const json& rho = require_key(root, "config", "rho");
  check_keys(rho, "rho", {"case", "prior"});
  c.rho_case = rho_case_from_int(get_int(require_key(rho, "rho", "case"), "rho.case"));
  const int rdim = rho_dim(c.rho_case, c.layout);
  if (rho.contains("prior")) {
    c.rho_prior = parse_rho_prior(rho["prior"], rdim, "rho.prior");
  } else {
    c.rho_prior = RhoPrior::uniform(rdim);
  }

  if (root.contains("noise_scale")) {
    c.noise_scale = get_num(root["noise_scale"], "noise_scale");
    if (!(c.noise_scale >= 0.0) || !std::isfinite(c.noise_scale)) {
      throw ValidationError("noise_scale must be finite and non-negative");
    }
  }

  const json& mm = require_key(root, "config", "metamodel");
  check_keys(mm, "metamodel",
             {"source", "gamma", "solver_seed", "training_pairs", "bootstrap_replicates",
              "path"});
  const std::string source = get_string(require_key(mm, "metamodel", "source"),
                                        "metamodel.source");
  if (source == "synthetic") {
    c.metamodel_source = MetamodelSource::kSynthetic;
  } else if (source == "training") {
    c.metamodel_source = MetamodelSource::kTraining;
  } else if (source == "matrices") {
    c.metamodel_source = MetamodelSource::kMatrices;
  } else {
    throw ValidationError("metamodel.source must be 'synthetic', 'training' or 'matrices'");
  }
  if (mm.contains("gamma")) {
    c.gamma = get_num(mm["gamma"], "metamodel.gamma");
    if (!std::isfinite(c.gamma)) throw ValidationError("metamodel.gamma must be finite");
  }
  if (mm.contains("solver_seed")) c.solver_seed = get_u64(mm["solver_seed"], "metamodel.solver_seed");
  if (mm.contains("training_pairs")) {
    c.training_pairs = get_int(mm["training_pairs"], "metamodel.training_pairs");
    if (c.training_pairs < 0) throw ValidationError("metamodel.training_pairs must be non-negative");
  }
  if (mm.contains("bootstrap_replicates")) {
    c.bootstrap_replicates = get_int(mm["bootstrap_replicates"], "metamodel.bootstrap_replicates");
    if (c.bootstrap_replicates < 0) {
      throw ValidationError("metamodel.bootstrap_replicates must be non-negative");
    }
  }
  if (mm.contains("path")) c.metamodel_path = get_string(mm["path"], "metamodel.path");
  if (c.metamodel_source != MetamodelSource::kSynthetic && c.metamodel_path.empty()) {
    throw ValidationError("metamodel.path is required for source '" + source + "'");
  }
  if (c.training_pairs == 0) {
    c.training_pairs = 2 * (c.state_dim() + 1) + c.obs_dim();
  }

  if (root.contains("smc")) {
    const json& smc = root["smc"];
    check_keys(smc, "smc",
               {"particles", "ess_fraction", "mh_steps", "step_scale", "target_acceptance",
                "max_generations"});
    if (smc.contains("particles")) c.smc.particles = get_int(smc["particles"], "smc.particles");
    if (smc.contains("ess_fraction")) {
      c.smc.ess_fraction = get_num(smc["ess_fraction"], "smc.ess_fraction");
    }
    if (smc.contains("mh_steps")) c.smc.mh_steps = get_int(smc["mh_steps"], "smc.mh_steps");
    if (smc.contains("step_scale")) c.smc.step_scale = get_num(smc["step_scale"], "smc.step_scale");
    if (smc.contains("target_acceptance")) {
      c.smc.target_acceptance = get_num(smc["target_acceptance"], "smc.target_acceptance");
    }
    if (smc.contains("max_generations")) {
      c.smc.max_generations = get_int(smc["max_generations"], "smc.max_generations");
    }
  }
  c.smc.validate();

  if (root.contains("truth")) {
    const json& truth = root["truth"];
    check_keys(truth, "truth", {"trajectory", "rho"});
    if (truth.contains("trajectory")) {
      const std::string mode = get_string(truth["trajectory"], "truth.trajectory");
      if (mode == "smooth") {
        c.truth_smooth = true;
      } else if (mode == "independent") {
        c.truth_smooth = false;
      } else {
        throw ValidationError("truth.trajectory must be 'smooth' or 'independent'");
      }
    }
    if (truth.contains("rho")) {
      const json& tr = truth["rho"];
      if (!tr.is_array() || static_cast<int>(tr.size()) != rdim) {
        throw ValidationError("truth.rho must list exactly " + std::to_string(rdim) +
                              " components for this correlation case");
      }
      Eigen::VectorXd v(rdim);
      for (std::size_t i = 0; i < tr.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = get_num(tr[i], "truth.rho entry");
      }
      if ((v.array() < 0.0).any() || (v.array() > 1.0).any()) {
        throw ValidationError("truth.rho components must lie in [0, 1]");
      }
      c.truth_rho = std::move(v);
    }
  }

  if (root.contains("output")) {
    const json& output = root["output"];
    check_keys(output, "output", {"dir", "histogram_bins", "posterior_draws", "dense_cap"});
    if (output.contains("dir")) c.output_dir = get_string(output["dir"], "output.dir");
    if (output.contains("histogram_bins")) {
      c.histogram_bins = get_int(output["histogram_bins"], "output.histogram_bins");
      if (c.histogram_bins < 2) throw ValidationError("output.histogram_bins must be at least 2");
    }
    if (output.contains("posterior_draws")) {
      c.posterior_draws = get_int(output["posterior_draws"], "output.posterior_draws");
      if (c.posterior_draws < 0) throw ValidationError("output.posterior_draws must be non-negative");
    }
    if (output.contains("dense_cap")) {
      c.dense_cap = get_int(output["dense_cap"], "output.dense_cap");
      if (c.dense_cap < 1) throw ValidationError("output.dense_cap must be positive");
    }
  }
  if (c.output_dir.empty()) throw ValidationError("output.dir must be non-empty");

  if (root.contains("seed")) c.seed = get_u64(root["seed"], "seed");
  return c;
}

ScenarioConfig parse_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path.string());
}

std::uint64_t scenario_hash(const ScenarioConfig& config) {
  json j = scenario_to_json(config);
  j.erase("output");
  j.erase("seed");
  return fnv1a(j.dump());
}

std::string scenario_echo_json(const ScenarioConfig& config, const std::string& command) {
  json j = scenario_to_json(config);
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(scenario_hash(config)));
  j["_provenance"] = {{"version", kVersion},
                      {"command", command},
                      {"seed", config.seed},
                      {"scenario", std::string(hash_hex)}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// generate

void run_generate(const ScenarioConfig& c, const std::filesystem::path& out_dir, int threads) {
  if (c.metamodel_source != MetamodelSource::kSynthetic) {
    throw ValidationError("generate requires metamodel.source = 'synthetic'");
  }
  if (c.training_pairs <= c.state_dim() + 1) {
    throw ValidationError("metamodel.training_pairs must exceed state_dim + 1");
  }
  std::filesystem::create_directories(out_dir / "training");
  const ArtifactHeader header = make_header(c);
  const int num_freq = c.frequencies;
  const int dim = c.state_dim();
  const std::vector<MarginalPrior> priors = build_priors(c);
  const SyntheticSolver solver(c.layout, num_freq, c.angles, c.gamma, c.solver_seed);

  write_echo(c, out_dir, "generate");

  // Truth trajectory (and its correlation when the profile is smooth).
  std::vector<Eigen::VectorXd> truth;
  if (c.truth_smooth) {
    Eigen::VectorXd rho_values;
    if (c.truth_rho) {
      rho_values = *c.truth_rho;
    } else {
      RandomStream rho_rng(derive_seed(c.seed, "truth_rho"));
      rho_values = c.rho_prior.sample(rho_rng);
    }
    const CorrelationParam rho{c.rho_case, rho_values};
    RandomStream state_rng(derive_seed(c.seed, "truth_state"));
    truth = sample_prior_trajectory(rho, c.layout, priors, state_rng);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < rho_values.size(); ++i) {
      rows.push_back({std::to_string(i), rho_component_name(c.rho_case, c.layout, i),
                      format_double(rho_values[i])});
    }
    write_table(out_dir / kTruthRho, header, {"component", "name", "value"}, rows);
  } else {
    RandomStream state_rng(derive_seed(c.seed, "truth_state"));
    truth.reserve(static_cast<std::size_t>(num_freq));
    for (int k = 0; k < num_freq; ++k) {
      const auto& p = priors[static_cast<std::size_t>(k)];
      truth.push_back(p.mean + p.sqrt.matrix() * state_rng.normal_vector(dim));
    }
  }
  write_frequency_rows(out_dir / kTruthState, header, state_names(c.layout), truth);

  // Training tables and the per-frequency surrogate fit.
  std::vector<Eigen::MatrixXd> fit_a(static_cast<std::size_t>(num_freq));
  std::vector<Eigen::VectorXd> fit_y0(static_cast<std::size_t>(num_freq));
  std::vector<Eigen::MatrixXd> fit_r(static_cast<std::size_t>(num_freq));
  std::vector<TrainingSet> training(static_cast<std::size_t>(num_freq));
  parallel_for(num_freq, threads, [&](int k) {
    RandomStream rng(derive_seed(c.seed, "training", static_cast<std::uint64_t>(k)));
    const auto& p = priors[static_cast<std::size_t>(k)];
    TrainingSet& data = training[static_cast<std::size_t>(k)];
    data.states.resize(c.training_pairs, dim);
    data.observations.resize(c.training_pairs, c.obs_dim());
    for (int i = 0; i < c.training_pairs; ++i) {
      const Eigen::VectorXd x = p.mean + p.sqrt.matrix() * rng.normal_vector(dim);
      data.states.row(i) = x.transpose();
      data.observations.row(i) = solver.evaluate(k, x).transpose();
    }
    const MetamodelFit fit = fit_linear_metamodel(data);
    const ResidualCovariance res = residual_covariance(fit.residuals, dim + 1);
    fit_a[static_cast<std::size_t>(k)] = fit.a;
    fit_y0[static_cast<std::size_t>(k)] = fit.y0;
    fit_r[static_cast<std::size_t>(k)] = symmetrize(
        c.noise_scale * c.noise_scale *
            Eigen::MatrixXd::Identity(c.obs_dim(), c.obs_dim()) +
        res.cov);
  });
  const auto obs_names = channel_names(c.angles);
  for (int k = 0; k < num_freq; ++k) {
    const TrainingSet& data = training[static_cast<std::size_t>(k)];
    std::vector<std::string> columns;
    for (const auto& n : state_names(c.layout)) columns.push_back("x." + n);
    for (const auto& n : obs_names) columns.push_back("y." + n);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(c.training_pairs));
    for (int i = 0; i < c.training_pairs; ++i) {
      std::vector<std::string> row;
      for (int j = 0; j < dim; ++j) row.push_back(format_double(data.states(i, j)));
      for (int j = 0; j < c.obs_dim(); ++j) row.push_back(format_double(data.observations(i, j)));
      rows.push_back(std::move(row));
    }
    write_table(out_dir / "training" / freq_file_name(k), header, columns, rows);
  }
  write_metamodel_csv(out_dir / kMetamodel, header, fit_a, fit_y0, fit_r);

  // Noisy measurements of the truth through the synthetic solver.
  RandomStream noise_rng(derive_seed(c.seed, "noise"));
  std::vector<Eigen::VectorXd> measurements;
  measurements.reserve(static_cast<std::size_t>(num_freq));
  for (int k = 0; k < num_freq; ++k) {
    Eigen::VectorXd y = solver.evaluate(k, truth[static_cast<std::size_t>(k)]);
    if (c.noise_scale > 0.0) {
      y += c.noise_scale * noise_rng.normal_vector(c.obs_dim());
    }
    measurements.push_back(std::move(y));
  }
  write_frequency_rows(out_dir / kMeasurements, header, obs_names, measurements);
}

// ---------------------------------------------------------------------------
// fit

void run_fit(const ScenarioConfig& c, const std::filesystem::path& out_dir, int threads) {
  if (c.metamodel_source != MetamodelSource::kTraining) {
    throw ValidationError("fit requires metamodel.source = 'training'");
  }
  std::filesystem::create_directories(out_dir);
  const ArtifactHeader header = make_header(c);
  const int dim = c.state_dim();
  const int obs_dim = c.obs_dim();
  const std::filesystem::path training_dir(c.metamodel_path);

  write_echo(c, out_dir, "fit");

  std::vector<Eigen::MatrixXd> fit_a(static_cast<std::size_t>(c.frequencies));
  std::vector<Eigen::VectorXd> fit_y0(static_cast<std::size_t>(c.frequencies));
  std::vector<Eigen::MatrixXd> fit_r(static_cast<std::size_t>(c.frequencies));
  std::vector<TrainingSet> training(static_cast<std::size_t>(c.frequencies));

  const auto x_names = state_names(c.layout);
  const auto y_names = channel_names(c.angles);
  for (int k = 0; k < c.frequencies; ++k) {
    const auto path = training_dir / freq_file_name(k);
    const Table table = read_table(path);
    TrainingSet& data = training[static_cast<std::size_t>(k)];
    data.states.resize(static_cast<Eigen::Index>(table.rows.size()), dim);
    data.observations.resize(static_cast<Eigen::Index>(table.rows.size()), obs_dim);
    for (int j = 0; j < dim; ++j) {
      const int col = table.column("x." + x_names[static_cast<std::size_t>(j)]);
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        data.states(static_cast<Eigen::Index>(i), j) = table.value(i, col);
      }
    }
    for (int j = 0; j < obs_dim; ++j) {
      const int col = table.column("y." + y_names[static_cast<std::size_t>(j)]);
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        data.observations(static_cast<Eigen::Index>(i), j) = table.value(i, col);
      }
    }
    const MetamodelFit fit = fit_linear_metamodel(data);
    const ResidualCovariance res = residual_covariance(fit.residuals, dim + 1);
    fit_a[static_cast<std::size_t>(k)] = fit.a;
    fit_y0[static_cast<std::size_t>(k)] = fit.y0;
    fit_r[static_cast<std::size_t>(k)] =
        symmetrize(c.noise_scale * c.noise_scale * Eigen::MatrixXd::Identity(obs_dim, obs_dim) +
                   res.cov);
  }
  write_metamodel_csv(out_dir / kMetamodel, header, fit_a, fit_y0, fit_r);

  if (c.bootstrap_replicates > 0) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<std::string>> meta;
    for (int k = 0; k < c.frequencies; ++k) {
      const BootstrapSummary bs = bootstrap_linearity_error(
          training[static_cast<std::size_t>(k)], c.bootstrap_replicates,
          derive_seed(c.seed, "bootstrap_fit", static_cast<std::uint64_t>(k)), threads);
      const std::string ks = std::to_string(k);
      for (Eigen::Index i = 0; i < bs.a_sd.rows(); ++i) {
        for (Eigen::Index j = 0; j < bs.a_sd.cols(); ++j) {
          rows.push_back({ks, "a", std::to_string(i), std::to_string(j),
                          format_double(bs.a_sd(i, j)), format_double(bs.a_lo(i, j)),
                          format_double(bs.a_hi(i, j))});
        }
      }
      for (Eigen::Index i = 0; i < bs.y0_sd.size(); ++i) {
        rows.push_back({ks, "y0", std::to_string(i), "0", format_double(bs.y0_sd[i]),
                        format_double(bs.y0_lo[i]), format_double(bs.y0_hi[i])});
      }
      meta.push_back({ks, std::to_string(bs.replicates), std::to_string(bs.skipped)});
    }
    write_table(out_dir / kBootstrap, header,
                {"frequency", "kind", "row", "col", "sd", "lo", "hi"}, rows);
    write_table(out_dir / kBootstrapMeta, header, {"frequency", "replicates", "skipped"}, meta);
  }
}

// ---------------------------------------------------------------------------
// invert

void run_invert(const ScenarioConfig& c, const std::filesystem::path& out_dir, int threads) {
  std::filesystem::create_directories(out_dir);
  const ArtifactHeader header = make_header(c);
  const InverseProblem problem = load_problem(c, out_dir);
  if (c.rho_prior.dim() != problem.rho_dimension()) {
    throw ValidationError("rho prior dimension does not match the correlation case");
  }
  write_echo(c, out_dir, "invert");

  SmcConfig smc = c.smc;
  smc.threads = threads;

  std::ofstream diag(out_dir / kDiagnostics);
  if (!diag) throw ValidationError("cannot write " + (out_dir / kDiagnostics).string());
  diag << header.line() << "\n"
       << "generation,alpha,ess,acceptance_rate,step_scale,wall_seconds,likelihood_evals\n";
  const auto on_generation = [&diag](const GenerationDiagnostics& d) {
    diag << d.generation << ',' << format_double(d.alpha) << ',' << format_double(d.ess) << ','
         << format_double(d.acceptance_rate) << ',' << format_double(d.step_scale) << ','
         << format_double(d.wall_seconds) << ',' << d.likelihood_evals << '\n';
    diag.flush();
  };

  const SmcResult result =
      run_smc(problem, c.rho_prior, smc, derive_seed(c.seed, "smc"), on_generation);
  const ParticleCloud& cloud = result.cloud;

  // Particles.
  {
    std::vector<std::string> columns{"particle", "weight", "log_lik"};
    for (int i = 0; i < problem.rho_dimension(); ++i) {
      columns.push_back(rho_component_name(c.rho_case, c.layout, i));
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(cloud.particles.size());
    for (std::size_t i = 0; i < cloud.particles.size(); ++i) {
      std::vector<std::string> row{std::to_string(i),
                                   format_double(cloud.weights[static_cast<Eigen::Index>(i)]),
                                   format_double(cloud.particles[i].log_lik)};
      for (Eigen::Index j = 0; j < cloud.particles[i].rho.size(); ++j) {
        row.push_back(format_double(cloud.particles[i].rho[j]));
      }
      rows.push_back(std::move(row));
    }
    write_table(out_dir / kParticles, header, columns, rows);
  }

  // State posterior: profiles over frequency for every (property, area).
  const PosteriorSummary posterior = rb_moments(problem, cloud, threads);
  {
    std::vector<std::vector<std::string>> rows;
    for (int p = 0; p < kNumProperties; ++p) {
      for (int area = 0; area < c.layout.num_areas(); ++area) {
        const auto profile =
            frequency_profiles(posterior, c.layout, static_cast<Property>(p), area);
        for (const auto& r : profile) {
          rows.push_back({std::to_string(r.frequency), property_name(static_cast<Property>(p)),
                          std::to_string(area), format_double(r.mean),
                          format_double(r.std_dev)});
        }
      }
    }
    write_table(out_dir / kProfiles, header,
                {"frequency", "property", "area", "mean", "std_dev"}, rows);
  }

  // Weighted histograms of rho.
  {
    const auto histograms = rho_histograms(cloud, c.histogram_bins);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t comp = 0; comp < histograms.size(); ++comp) {
      const auto& h = histograms[comp];
      for (int b = 0; b < h.counts.size(); ++b) {
        rows.push_back({std::to_string(comp),
                        rho_component_name(c.rho_case, c.layout, static_cast<int>(comp)),
                        std::to_string(b), format_double(h.edges[b]),
                        format_double(h.edges[b + 1]), std::to_string(h.counts[b]),
                        format_double(h.mass[b])});
      }
    }
    write_table(out_dir / kHistograms, header,
                {"component", "name", "bin", "lo", "hi", "count", "mass"}, rows);
  }

  // Optional joint posterior draws.
  if (c.posterior_draws > 0) {
    const auto draws = posterior_samples(problem, cloud, c.posterior_draws,
                                         derive_seed(c.seed, "posterior_draws"), threads);
    std::vector<std::string> columns{"draw", "frequency"};
    for (const auto& n : state_names(c.layout)) columns.push_back(n);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t d = 0; d < draws.size(); ++d) {
      for (std::size_t k = 0; k < draws[d].size(); ++k) {
        std::vector<std::string> row{std::to_string(d), std::to_string(k)};
        for (Eigen::Index i = 0; i < draws[d][k].size(); ++i) {
          row.push_back(format_double(draws[d][k][i]));
        }
        rows.push_back(std::move(row));
      }
    }
    write_table(out_dir / kSamples, header, columns, rows);
  }

  // Scalar summary, with truth-based errors when the truth is on disk.
  {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"generations", std::to_string(cloud.generation)});
    rows.push_back({"likelihood_evals", std::to_string(result.total_likelihood_evals)});
    rows.push_back({"final_alpha", format_double(cloud.alpha)});
    rows.push_back({"final_ess", format_double(effective_sample_size(cloud.weights))});
    rows.push_back({"final_step_scale", format_double(result.final_step_scale)});
    const int rdim = problem.rho_dimension();
    for (int i = 0; i < rdim; ++i) {
      double mean = 0.0;
      for (std::size_t p = 0; p < cloud.particles.size(); ++p) {
        mean += cloud.weights[static_cast<Eigen::Index>(p)] * cloud.particles[p].rho[i];
      }
      double var = 0.0;
      for (std::size_t p = 0; p < cloud.particles.size(); ++p) {
        const double d = cloud.particles[p].rho[i] - mean;
        var += cloud.weights[static_cast<Eigen::Index>(p)] * d * d;
      }
      const std::string name = rho_component_name(c.rho_case, c.layout, i);
      rows.push_back({"mean." + name, format_double(mean)});
      rows.push_back({"sd." + name, format_double(std::sqrt(std::max(var, 0.0)))});
    }
    const auto truth_path = out_dir / kTruthState;
    if (std::filesystem::exists(truth_path)) {
      const auto truth = read_frequency_rows(truth_path, c.frequencies, c.state_dim());
      const auto prior_means = prior_summary(problem.priors());
      double post_sq = 0.0;
      double prior_sq = 0.0;
      for (int k = 0; k < c.frequencies; ++k) {
        post_sq += (posterior.mean[static_cast<std::size_t>(k)] -
                    truth[static_cast<std::size_t>(k)])
                       .squaredNorm();
        prior_sq += (prior_means.mean[static_cast<std::size_t>(k)] -
                     truth[static_cast<std::size_t>(k)])
                        .squaredNorm();
      }
      const double n = static_cast<double>(c.frequencies * c.state_dim());
      const double post_rmse = std::sqrt(post_sq / n);
      const double prior_rmse = std::sqrt(prior_sq / n);
      rows.push_back({"posterior_rmse", format_double(post_rmse)});
      rows.push_back({"prior_rmse", format_double(prior_rmse)});
      rows.push_back(
          {"rmse_ratio", format_double(prior_rmse > 0.0 ? post_rmse / prior_rmse
                                                        : std::nan(""))});
    }
    write_table(out_dir / kSummary, header, {"key", "value"}, rows);
  }
}

// ---------------------------------------------------------------------------
// oracle

OracleResult run_oracle(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  if (!c.truth_rho) {
    throw ValidationError("oracle requires truth.rho in the config");
  }
  std::filesystem::create_directories(out_dir);
  const InverseProblem problem = load_problem(c, out_dir);
  const CorrelationParam rho = problem.make_rho(*c.truth_rho);

  OracleResult result;
  result.log_lik_filter = log_likelihood(problem, rho);
  const GaussianDist dense = dense_joint_y_distribution(problem, rho, c.dense_cap);
  result.log_lik_dense = log_mvn_density(stack_measurements(problem.measurements()), dense);
  result.abs_diff = std::abs(result.log_lik_filter - result.log_lik_dense);
  result.rel_diff =
      result.abs_diff / (std::abs(result.log_lik_dense) > 0.0 ? std::abs(result.log_lik_dense)
                                                              : 1.0);

  write_table(out_dir / kOracle, make_header(c), {"key", "value"},
              {{"log_lik_filter", format_double(result.log_lik_filter)},
               {"log_lik_dense", format_double(result.log_lik_dense)},
               {"abs_diff", format_double(result.abs_diff)},
               {"rel_diff", format_double(result.rel_diff)}});
  return result;
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ValidationError*>(&error)) return 2;
  if (dynamic_cast<const GenerationCapError*>(&error)) return 4;
  return 3;
}

}  // namespace eminv
