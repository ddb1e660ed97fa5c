#include "spar/experiment.hpp"

#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/io.hpp"
#include "spar/methods.hpp"
#include "spar/metrics.hpp"
#include "spar/rng.hpp"
#include "spar/spar.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;

namespace spar {

namespace {

const std::vector<std::string>& scenarios() {
  static const std::vector<std::string> s{"lowdim", "highdim", "gwas-bn", "gwas-psd", "gwas-spatial"};
  return s;
}

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    raise(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "'");
  }
}

struct MethodJob {
  std::string name;   // registry name
  std::string label;  // name in the results
  std::optional<int> q;
};

std::vector<MethodJob> expand_methods(const ExperimentSpec& spec) {
  std::vector<MethodJob> jobs;
  for (const auto& m : spec.methods) {
    if (uses_components(m) && !spec.q_grid.empty()) {
      for (int q : spec.q_grid) jobs.push_back({m, m + "@q" + std::to_string(q), q});
    } else {
      jobs.push_back({m, m, std::nullopt});
    }
  }
  return jobs;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ResultRow> run_replication(const ExperimentSpec& spec, const std::vector<MethodJob>& jobs, int rep) {
  const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(rep);
  std::vector<ResultRow> rows;
  Simulated sim;
  try {
    sim = generate(spec.scenario, spec.generator, seed);
  } catch (const Error& e) {
    for (const auto& job : jobs) {
      ResultRow r;
      r.method = job.label;
      r.rep = rep;
      r.status = std::string(to_string(e.code()));
      r.message = std::string("[generate] ") + e.what();
      rows.push_back(std::move(r));
    }
    return rows;
  }
  const Dataset& data = sim.data;
  const std::uint64_t hash = dataset_hash(data);

  // spar and null share the factor and regression stages for a given q.
  std::map<int, std::pair<std::optional<SparComponents>, double>> cache;
  auto components = [&](std::optional<int> q) -> std::pair<const SparComponents*, double> {
    const int key = q.value_or(-1);
    auto& slot = cache[key];
    if (!slot.first) {
      const auto t0 = std::chrono::steady_clock::now();
      slot.first = estimate_components(prepare(data), q, derive_seed(seed, "components"));
      slot.second = elapsed_ms(t0);
    }
    return {&*slot.first, slot.second};
  };

  for (const auto& job : jobs) {
    ResultRow row;
    row.method = job.label;
    row.rep = rep;
    row.dataset_hash = hash;
    auto t0 = std::chrono::steady_clock::now();
    double shared_ms = 0.0;
    try {
      MethodContext ctx;
      ctx.seed = derive_seed(seed, job.name);
      ctx.q = job.q;
      ctx.M = spec.M;
      ctx.limits = spec.limits;
      ctx.deconf_k = spec.deconf_k;
      if (uses_components(job.name)) {
        auto [comp, ms] = components(job.q);
        ctx.components = comp;
        shared_ms = ms;
        t0 = std::chrono::steady_clock::now();
      }
      const MethodOutput out = run_method(job.name, data, ctx);
      const ErrorMetrics em = metrics(out.beta_hat, sim.truth.beta);
      const SupportMetrics sm = tpr_fpr(out.beta_hat, sim.truth.beta);
      row.mae = em.mae;
      row.rmse = em.rmse;
      row.tpr = sm.tpr;
      row.fpr = sm.fpr;
      row.status = out.status;
    } catch (const Error& e) {
      row.status = std::string(to_string(e.code()));
      row.message = e.what();
    } catch (const std::exception& e) {
      row.status = "Exception";
      row.message = e.what();
    }
    // Shared stages are charged to every method that used them.
    row.wall_ms = spec.record_timings ? elapsed_ms(t0) + shared_ms : 0.0;
    if (dataset_hash(data) != hash) raise(ErrorCode::InvalidConfig, "dataset modified by method " + job.name);
    rows.push_back(std::move(row));
  }
  return rows;
}

bool failed(const ResultRow& r) { return !r.mae.has_value(); }

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {m, sd};
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix + ".csv");
}

}  // namespace

bool ExperimentResult::partial_failure() const {
  return std::any_of(rows.begin(), rows.end(), failed);
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::InvalidConfig, "experiment spec must be a JSON object");
  ExperimentSpec s;
  s.name = field<std::string>(j, "name", s.name);
  s.scenario = field<std::string>(j, "scenario", s.scenario);
  if (std::find(scenarios().begin(), scenarios().end(), s.scenario) == scenarios().end()) {
    raise(ErrorCode::InvalidConfig, "unknown scenario '" + s.scenario + "'");
  }
  if (j.contains("generator")) {
    require(j["generator"].is_object(), ErrorCode::InvalidConfig, "generator must be an object");
    s.generator = j["generator"];
  }
  s.methods = field<std::vector<std::string>>(j, "methods", {});
  require(!s.methods.empty(), ErrorCode::InvalidConfig, "methods must be a non-empty list");
  for (const auto& m : s.methods) {
    if (!is_method(m)) raise(ErrorCode::InvalidConfig, "unknown method '" + m + "'");
  }
  s.replications = field<int>(j, "replications", s.replications);
  require(s.replications >= 1, ErrorCode::InvalidConfig, "replications must be >= 1");
  s.base_seed = field<std::uint64_t>(j, "base_seed", s.base_seed);
  s.q_grid = field<std::vector<int>>(j, "q_grid", {});
  for (int q : s.q_grid) require(q >= 0, ErrorCode::InvalidConfig, "q_grid entries must be >= 0");
  s.M = field<double>(j, "M", s.M);
  require(s.M > 0.0, ErrorCode::InvalidConfig, "M must be > 0");
  s.limits.max_nodes = field<long>(j, "mip_max_nodes", s.limits.max_nodes);
  s.limits.time_budget_s = field<double>(j, "mip_time_budget_s", s.limits.time_budget_s);
  s.deconf_k = field<int>(j, "deconf_k", s.deconf_k);
  s.record_timings = field<bool>(j, "record_timings", s.record_timings);
  require(s.limits.max_nodes >= 1, ErrorCode::InvalidConfig, "mip_max_nodes must be >= 1");
  require(s.deconf_k >= 0, ErrorCode::InvalidConfig, "deconf_k must be >= 0");
  return s;
}

nlohmann::json to_json(const ExperimentSpec& s) {
  return {{"name", s.name},
          {"scenario", s.scenario},
          {"generator", s.generator},
          {"methods", s.methods},
          {"replications", s.replications},
          {"base_seed", s.base_seed},
          {"q_grid", s.q_grid},
          {"M", s.M},
          {"mip_max_nodes", s.limits.max_nodes},
          {"mip_time_budget_s", s.limits.time_budget_s},
          {"deconf_k", s.deconf_k},
          {"record_timings", s.record_timings}};
}

Simulated generate(const std::string& scenario, const nlohmann::json& g, std::uint64_t seed) {
  if (scenario == "lowdim") {
    LowDimConfig c;
    c.n = field<Index>(g, "n", c.n);
    c.p = field<Index>(g, "p", c.p);
    c.q = field<Index>(g, "q", c.q);
    c.s = field<Index>(g, "s", c.s);
    c.r = field<Index>(g, "r", c.r);
    c.seed = seed;
    return gen_lowdim(c);
  }
  if (scenario == "highdim") {
    HighDimConfig c;
    c.n = field<Index>(g, "n", c.n);
    c.p = field<Index>(g, "p", c.p);
    c.q = field<Index>(g, "q", c.q);
    c.s = field<Index>(g, "s", c.s);
    c.r = field<Index>(g, "r", c.r);
    c.noise_offdiag_mean = field<double>(g, "noise_offdiag_mean", c.noise_offdiag_mean);
    c.noise_offdiag_sd = field<double>(g, "noise_offdiag_sd", c.noise_offdiag_sd);
    c.noise_sparsity_rate = field<double>(g, "noise_sparsity_rate", c.noise_sparsity_rate);
    c.seed = seed;
    return gen_highdim(c);
  }
  if (scenario.rfind("gwas-", 0) == 0) {
    GwasConfig c;
    c.model = parse_gwas_model(scenario.substr(5));
    c.n = field<Index>(g, "n", c.n);
    c.p = field<Index>(g, "p", c.p);
    c.d = field<Index>(g, "d", c.d);
    c.snr = field<double>(g, "snr", c.snr);
    c.causal_fraction = field<double>(g, "causal_fraction", c.causal_fraction);
    c.causal_value = field<double>(g, "causal_value", c.causal_value);
    c.perturb_null_beta = field<bool>(g, "perturb_null_beta", c.perturb_null_beta);
    c.seed = seed;
    return gen_gwas(c);
  }
  raise(ErrorCode::InvalidConfig, "unknown scenario '" + scenario + "'");
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  require(spec.replications >= 1, ErrorCode::InvalidConfig, "replications must be >= 1");
  for (const auto& m : spec.methods) {
    if (!is_method(m)) raise(ErrorCode::InvalidConfig, "unknown method '" + m + "'");
  }
  const auto method_jobs = expand_methods(spec);
  std::vector<std::vector<ResultRow>> per_rep(static_cast<std::size_t>(spec.replications));
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (true) {
      const int rep = next.fetch_add(1);
      if (rep >= spec.replications) return;
      try {
        per_rep[static_cast<std::size_t>(rep)] = run_replication(spec, method_jobs, rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, spec.replications));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult out;
  for (std::size_t mi = 0; mi < method_jobs.size(); ++mi) {
    for (const auto& rows : per_rep) out.rows.push_back(rows[mi]);
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
  }
  std::vector<SummaryRow> out;
  for (const auto& m : order) {
    std::vector<double> mae, rmse, tpr, fpr, wall;
    for (const auto& r : rows) {
      if (r.method != m || failed(r)) continue;
      mae.push_back(*r.mae);
      rmse.push_back(*r.rmse);
      if (r.tpr) tpr.push_back(*r.tpr);
      if (r.fpr) fpr.push_back(*r.fpr);
      wall.push_back(r.wall_ms);
    }
    SummaryRow s;
    s.method = m;
    s.n = static_cast<int>(mae.size());
    std::tie(s.mae_mean, s.mae_sd) = mean_sd(mae);
    std::tie(s.rmse_mean, s.rmse_sd) = mean_sd(rmse);
    if (!tpr.empty()) std::tie(s.tpr_mean, s.tpr_sd) = mean_sd(tpr);
    if (!fpr.empty()) std::tie(s.fpr_mean, s.fpr_sd) = mean_sd(fpr);
    s.wall_ms_mean = mean_sd(wall).first;
    out.push_back(s);
  }
  return out;
}

void write_results(const std::vector<ResultRow>& rows, const fs::path& path, const std::string& format) {
  const auto summary = summarize(rows);
  if (format == "json") {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : rows) {
      recs.push_back({{"method", r.method},
                      {"rep", r.rep},
                      {"mae", opt_json(r.mae)},
                      {"rmse", opt_json(r.rmse)},
                      {"tpr", opt_json(r.tpr)},
                      {"fpr", opt_json(r.fpr)},
                      {"wall_ms_total", r.wall_ms},
                      {"status", r.status},
                      {"message", r.message},
                      {"dataset_hash", r.dataset_hash}});
    }
    nlohmann::json agg = nlohmann::json::array();
    for (const auto& s : summary) {
      agg.push_back({{"method", s.method},
                     {"n", s.n},
                     {"mae_mean", s.mae_mean},
                     {"mae_sd", s.mae_sd},
                     {"rmse_mean", s.rmse_mean},
                     {"rmse_sd", s.rmse_sd},
                     {"tpr_mean", opt_json(s.tpr_mean)},
                     {"tpr_sd", opt_json(s.tpr_sd)},
                     {"fpr_mean", opt_json(s.fpr_mean)},
                     {"fpr_sd", opt_json(s.fpr_sd)},
                     {"wall_ms_mean", s.wall_ms_mean}});
    }
    auto out = open_out(path);
    out << nlohmann::json{{"rows", recs}, {"summary", agg}}.dump(2) << '\n';
    if (!out) raise(ErrorCode::IoError, "write failed: " + path.string());
    return;
  }
  if (format != "csv") raise(ErrorCode::InvalidConfig, "format must be csv or json");

  {
    auto out = open_out(path);
    out << "method,rep,mae,rmse,tpr,fpr,wall_ms_total\n";
    for (const auto& r : rows) {
      out << r.method << ',' << r.rep << ',' << opt(r.mae) << ',' << opt(r.rmse) << ',' << opt(r.tpr) << ','
          << opt(r.fpr) << ',' << format_double(r.wall_ms) << '\n';
    }
    if (!out) raise(ErrorCode::IoError, "write failed: " + path.string());
  }
  {
    auto out = open_out(sibling(path, "_summary"));
    out << "method,n,mae_mean,mae_sd,rmse_mean,rmse_sd,tpr_mean,tpr_sd,fpr_mean,fpr_sd,wall_ms_mean\n";
    for (const auto& s : summary) {
      out << s.method << ',' << s.n << ',' << format_double(s.mae_mean) << ',' << format_double(s.mae_sd) << ','
          << format_double(s.rmse_mean) << ',' << format_double(s.rmse_sd) << ',' << opt(s.tpr_mean) << ','
          << opt(s.tpr_sd) << ',' << opt(s.fpr_mean) << ',' << opt(s.fpr_sd) << ','
          << format_double(s.wall_ms_mean) << '\n';
    }
  }
  {
    auto out = open_out(sibling(path, "_status"));
    out << "method,rep,status,message\n";
    for (const auto& r : rows) {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      out << r.method << ',' << r.rep << ',' << r.status << ",\"" << msg << "\"\n";
    }
  }
}

std::vector<ResultRow> read_results_json(const fs::path& path) {
  const nlohmann::json j = read_json_file(path);
  std::vector<ResultRow> rows;
  try {
    for (const auto& r : j.at("rows")) {
      ResultRow row;
      row.method = r.at("method").get<std::string>();
      row.rep = r.at("rep").get<int>();
      row.mae = opt_from(r, "mae");
      row.rmse = opt_from(r, "rmse");
      row.tpr = opt_from(r, "tpr");
      row.fpr = opt_from(r, "fpr");
      row.wall_ms = r.at("wall_ms_total").get<double>();
      row.status = r.value("status", std::string("ok"));
      row.message = r.value("message", std::string());
      row.dataset_hash = r.value("dataset_hash", std::uint64_t{0});
      rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::IoError, path.string() + ": " + e.what());
  }
  return rows;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "table1", "fig4", "fig7-bn", "fig7-psd", "fig7-spatial"};
  return names;
}

std::vector<ExperimentSpec> preset_specs(const std::string& name, double scale, std::optional<Index> n,
                                         std::optional<Index> p, std::uint64_t base_seed) {
  require(scale > 0.0 && scale <= 1.0, ErrorCode::InvalidConfig, "scale must be in (0, 1]");
  auto reps = [&](int full) { return std::max(1, static_cast<int>(std::lround(full * scale))); };
  std::vector<ExperimentSpec> out;
  ExperimentSpec base;
  base.base_seed = base_seed;
  // Node limits rather than wall-clock limits keep presets deterministic.
  base.limits.max_nodes = 2000;
  base.limits.time_budget_s = 1e9;

  if (name == "fig2") {
    const Index pp = p.value_or(13);
    for (Index s = 1; s <= pp; ++s) {
      ExperimentSpec e = base;
      e.name = "fig2_s" + std::to_string(s);
      e.scenario = "lowdim";
      e.generator = {{"n", n.value_or(1000)}, {"p", pp}, {"q", 3}, {"s", s}};
      e.methods = {"spar", "null", "ols"};
      e.replications = reps(1000);
      out.push_back(e);
    }
  } else if (name == "table1" || name == "fig4") {
    ExperimentSpec e = base;
    e.name = name;
    e.scenario = "highdim";
    e.generator = {{"n", n.value_or(300)}, {"p", p.value_or(300)}, {"q", 3}, {"s", 5}};
    e.methods = {"spar", "null", "lasso", "deconf-lasso"};
    e.replications = reps(100);
    out.push_back(e);
  } else if (name.rfind("fig7-", 0) == 0) {
    const std::string model = name.substr(5);
    parse_gwas_model(model);
    for (double snr : gwas_snr_grid()) {
      ExperimentSpec e = base;
      e.name = name + "_snr" + format_double(snr);
      e.scenario = "gwas-" + model;
      e.generator = {{"n", n.value_or(1000)}, {"p", p.value_or(1000)}, {"snr", snr}};
      e.methods = {"spar", "null", "lasso", "ridge", "deconf-ridge"};
      e.replications = reps(100);
      out.push_back(e);
    }
  } else {
    raise(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
  }
  return out;
}

}  // namespace spar
