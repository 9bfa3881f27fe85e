#include "ebk/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "ebk/action.hpp"
#include "ebk/bs_solver.hpp"
#include "ebk/compare.hpp"
#include "ebk/error.hpp"
#include "ebk/oracle.hpp"
#include "ebk/parallel.hpp"
#include "ebk/phase_portrait.hpp"

namespace ebk {

using ojson = nlohmann::ordered_json;

namespace {

const std::map<std::string, std::vector<std::string>>& dependencies() {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"trace", {}},
      {"actions", {"trace"}},
      {"spectrum", {"actions"}},
      {"oracle", {}},
      {"compare", {"spectrum", "oracle"}},
      {"weyl", {"spectrum", "oracle"}},
      {"branches", {"spectrum"}},
      {"doublets", {"spectrum", "oracle"}},
  };
  return deps;
}

const std::vector<std::string>& output_files() {
  static const std::vector<std::string> files = {
      "components.csv", "actions.csv",   "spectrum.csv",  "density.json", "oracle.csv",
      "match.json",     "weyl.json",     "branches.csv",  "doublets.json", "manifest.json"};
  return files;
}

std::string label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Non-finite values become null so the JSON stays valid.
ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out_ << header << '\n';
  }

  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::mt19937_64 stage_rng(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  return std::mt19937_64(seq);
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

class Pipeline {
 public:
  Pipeline(const RunConfig& c, const RunOptions& o, std::filesystem::path dir)
      : config_(c), opts_(o), dir_(std::move(dir)), spec_(make_symbol(c.symbol_name, c.symbol_params)) {
    trace_.trace_tol = c.tolerances.trace_tol;
  }

  std::vector<std::string> written;
  std::vector<Check> checks;

  void run_stage(const std::string& name) {
    if (name == "trace") trace_stage();
    else if (name == "actions") actions_stage();
    else if (name == "spectrum") spectrum_stage();
    else if (name == "oracle") oracle_stage();
    else if (name == "compare") compare_stage();
    else if (name == "weyl") weyl_stage();
    else if (name == "branches") branches_stage();
    else if (name == "doublets") doublets_stage();
    else throw Error(ErrorCode::ConfigError, "unknown stage " + name);
  }

 private:
  std::filesystem::path file(const std::string& name) {
    written.push_back(name);
    return dir_ / name;
  }

  void check(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }

  void log(const std::string& msg) const {
    if (opts_.log != nullptr) *opts_.log << msg << '\n';
  }

  void trace_stage() {
    FamilyOptions fo;
    fo.trace = trace_;
    fo.threads = opts_.threads;
    families_ = build_families(spec_, config_.window, 9, fo);
    const RegularityReport reg =
        regularity_report(spec_, config_.window, compact_preimage_box(spec_, config_.window));
    if (!reg.regular) {
      std::ostringstream os;
      os << "critical values inside the window:";
      for (double v : reg.critical_values_found) os << ' ' << v;
      throw Error(ErrorCode::IrregularWindow, os.str());
    }
    CsvWriter csv(file("components.csv"), "k,E,t,x,xi");
    for (const auto& fam : families_) {
      for (const auto& s : fam.samples) {
        const auto& c = s.component;
        for (std::size_t i = 0; i < c.points.size(); ++i) {
          csv.row(fam.k, s.energy, c.times[i], c.points[i].x, c.points[i].xi);
        }
      }
    }
    log("trace: " + std::to_string(families_.size()) + " component families");
  }

  void actions_stage() {
    ActionOptions ao;
    ao.trace = trace_;
    ao.threads = opts_.threads;
    tables_.clear();
    for (const auto& fam : families_) {
      tables_.push_back(
          build_action_table(spec_, fam, config_.window, config_.tolerances.action_samples, ao));
    }
    CsvWriter csv(file("actions.csv"), "k,E,A0,tau,maslov");
    for (const auto& t : tables_) {
      for (const auto& s : t.samples) csv.row(t.k, s.energy, s.action, s.period, t.maslov);
    }
    for (const auto& t : tables_) {
      check("maslov_k" + std::to_string(t.k), t.maslov == 2, "index " + std::to_string(t.maslov));
    }
  }

  void spectrum_stage() {
    spectra_.clear();
    CsvWriter csv(file("spectrum.csv"), "hbar,k,n,E");
    auto rng = stage_rng(config_.seed, 1);
    ojson density = ojson::array();
    bool all_ok = true;
    for (double hbar : config_.hbars) {
      spectra_.push_back(merged_spectrum(tables_, hbar, config_.window));
      for (const auto& e : spectra_.back().entries) csv.row(hbar, e.k, e.n, e.energy);
      ojson probes = ojson::array();
      try {
        for (const auto& p : density_probes(tables_, spectra_.back(), 50, rng)) {
          probes.push_back({{"e0", p.e0}, {"nearest", p.nearest}, {"gap", p.gap}, {"bound", p.bound},
                            {"ok", p.ok}});
          all_ok = all_ok && p.ok;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidArgument && e.code() != ErrorCode::EmptySpectrum) throw;
      }
      density.push_back({{"hbar", hbar}, {"probes", probes}});
    }
    write_json(file("density.json"), density);
    check("density", all_ok, "nearest-level gap within 1.1 pi hbar / tau_min");
  }

  void oracle_stage() {
    oracles_.clear();
    nodes_.clear();
    CsvWriter csv(file("oracle.csv"), "hbar,index,E,nodes");
    for (double hbar : config_.hbars) {
      oracles_.push_back(run_oracle(spec_, config_.window, hbar, {}, opts_.threads));
      const OracleRun& run = oracles_.back();
      const EigenResult& r = run.spectrum();
      std::vector<int> nodes(r.indices.size());
      parallel_for(r.indices.size(), opts_.threads, [&](std::size_t i) {
        const double lambda = eigenvalue_by_index(run.op, r.indices[i]);
        nodes[i] = node_count(eigenvector(run.op, lambda, config_.seed + r.indices[i]));
      });
      std::map<int, int> by_index;
      for (std::size_t i = 0; i < r.indices.size(); ++i) {
        csv.row(hbar, r.indices[i], r.eigenvalues[i], nodes[i]);
        by_index[r.indices[i]] = nodes[i];
      }
      nodes_.push_back(std::move(by_index));
      const double gate = run.richardson.gate_difference;
      check("oracle_gate_hbar_" + label(hbar), gate <= config_.tolerances.oracle_tol,
            "Richardson difference " + fmt(gate));
      log("oracle: hbar " + label(hbar) + ", L " + label(run.domain.L) + ", N " +
          std::to_string(run.domain.N) + ", " + std::to_string(r.eigenvalues.size()) +
          " eigenvalues");
    }
  }

  void compare_stage() {
    ojson per = ojson::array();
    std::vector<ConvergencePoint> points;
    bool nodes_ok = true;
    for (std::size_t h = 0; h < config_.hbars.size(); ++h) {
      MatchReport m = match_spectra(spectra_[h], oracles_[h].spectrum(), tables_);
      ojson pairs = ojson::array();
      for (auto& p : m.pairs) {
        p.node_count = nodes_[h].at(p.oracle_index);
        if (*p.node_count != p.n) nodes_ok = false;
        pairs.push_back({{"k", p.k}, {"n", p.n}, {"e_bs", p.e_bs}, {"e_oracle", p.e_oracle},
                         {"abs_err", p.abs_err}, {"oracle_index", p.oracle_index},
                         {"node_count", *p.node_count}});
      }
      per.push_back({{"hbar", m.hbar}, {"lo", m.lo}, {"hi", m.hi}, {"max_err", m.max_err},
                     {"mean_err", m.mean_err},
                     {"core_max_err", m.core_max_err}, {"core_pairs", m.core_pairs},
                     {"unmatched_bs", m.unmatched_bs},
                     {"unmatched_oracle", m.unmatched_oracle},
                     {"oracle_gate", oracles_[h].richardson.gate_difference}, {"pairs", pairs}});
      points.push_back({m.hbar, m.core_max_err, oracles_[h].richardson.gate_difference,
                        m.core_pairs});
    }
    check("bijection", true, "interior counts agree at every hbar");
    if (tables_.size() == 1) check("node_identity", nodes_ok, "oracle node count equals n");

    ojson conv = nullptr;
    bool halving = config_.hbars.size() >= 3;
    for (std::size_t i = 1; i < config_.hbars.size(); ++i) {
      halving = halving && std::abs(config_.hbars[i] / config_.hbars[i - 1] - 0.5) <= 1e-9;
    }
    if (halving) {
      const ConvergenceReport r = fit_convergence(points, config_.tolerances.oracle_tol);
      ojson pts = ojson::array();
      for (const auto& p : r.points) {
        pts.push_back({{"hbar", p.hbar}, {"max_err", p.max_err}, {"oracle_error", p.oracle_error},
                       {"pairs", p.pairs}});
      }
      conv = {{"slope", num(r.slope)}, {"intercept", num(r.intercept)},
              {"residual", num(r.residual)}, {"floor_limited", r.floor_limited}, {"points", pts}};
      if (!r.floor_limited && tables_.size() == 1) {
        check("convergence_order", r.slope >= 1.7 && r.slope <= 2.3, "slope " + fmt(r.slope));
      }
    }
    write_json(file("match.json"), {{"hbars", per}, {"convergence", conv}});
  }

  void weyl_stage() {
    auto rng = stage_rng(config_.seed, 2);
    ojson trials = ojson::array();
    bool all = true;
    for (std::size_t h = 0; h < config_.hbars.size(); ++h) {
      const Study study{spec_, config_.window, families_, tables_};
      for (const auto& [a, b] : safe_endpoint_pairs(tables_, spectra_[h], 20, rng)) {
        const WeylCheck w = verify_weyl(study, spectra_[h], oracles_[h], a, b);
        all = all && w.agree;
        trials.push_back({{"hbar", config_.hbars[h]}, {"e1", a}, {"e2", b},
                          {"total", w.formula.count}, {"per_family", w.formula.per_family},
                          {"leading", w.formula.leading}, {"correction", w.formula.correction},
                          {"delta", w.formula.delta}, {"oracle_count", w.oracle_count},
                          {"agree", w.agree}});
      }
    }
    write_json(file("weyl.json"), {{"trials", trials}});
    check("weyl_exact", all, std::to_string(trials.size()) + " endpoint pairs");
  }

  void branches_stage() {
    CsvWriter csv(file("branches.csv"), "k,n,hbar_exit,hbar,E");
    bool exits = true;
    bool monotone = true;
    for (const auto& e : spectra_.front().entries) {
      const auto& table = *std::find_if(tables_.begin(), tables_.end(),
                                        [&](const ActionTable& t) { return t.k == e.k; });
      const BranchTrace b = trace_branch(table, e.n);
      exits = exits && b.exits && b.hbar_exit > 0.0;
      monotone = monotone && b.monotone;
      for (std::size_t i = 0; i < b.hbars.size(); ++i) {
        csv.row(b.k, b.n, b.hbar_exit, b.hbars[i], b.energies[i]);
      }
    }
    check("branch_exit", exits, "every branch leaves the window below its exit hbar");
    check("branch_monotone", monotone, "branch energies increase with hbar");
  }

  void doublets_stage() {
    ojson out = ojson::array();
    bool ok = true;
    for (std::size_t h = 0; h < config_.hbars.size(); ++h) {
      const double hbar = config_.hbars[h];
      ojson clusters = ojson::array();
      for (const auto& d : verify_doublets(spectra_[h], oracles_[h])) {
        ojson members = ojson::array();
        for (const auto& m : d.cluster.members) {
          members.push_back({{"k", m.k}, {"n", m.n}, {"E", m.energy}});
        }
        const bool pass = d.multiplicity == static_cast<int>(d.cluster.families.size()) &&
                          d.oracle_splitting <= hbar * hbar * hbar && d.bs_spread <= 1e-9;
        ok = ok && pass;
        clusters.push_back({{"center", d.cluster.center}, {"members", members},
                            {"families", d.cluster.families}, {"bs_spread", d.bs_spread},
                            {"multiplicity", d.multiplicity}, {"oracle_energies", d.oracle_energies},
                            {"oracle_splitting", num(d.oracle_splitting)}, {"pass", pass}});
      }
      out.push_back({{"hbar", hbar}, {"radius", hbar * hbar}, {"clusters", clusters}});
    }
    write_json(file("doublets.json"), out);
    check("doublets", ok, "multiplicity, splitting <= hbar^3, coincident BS energies");
  }

  const RunConfig& config_;
  const RunOptions& opts_;
  std::filesystem::path dir_;
  SymbolSpec spec_;
  TraceOptions trace_;
  std::vector<ComponentFamily> families_;
  std::vector<ActionTable> tables_;
  std::vector<BsSpectrum> spectra_;
  std::vector<OracleRun> oracles_;
  std::vector<std::map<int, int>> nodes_;
};

}  // namespace

std::vector<std::string> resolve_pipeline(const std::vector<std::string>& requested) {
  std::set<std::string> needed;
  std::function<void(const std::string&)> add = [&](const std::string& s) {
    const auto it = dependencies().find(s);
    if (it == dependencies().end()) throw Error(ErrorCode::ConfigError, "unknown stage " + s);
    if (!needed.insert(s).second) return;
    for (const auto& d : it->second) add(d);
  };
  for (const auto& s : requested) add(s);
  std::vector<std::string> order;
  for (const auto& s : stage_names()) {
    if (needed.count(s) != 0) order.push_back(s);
  }
  return order;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof b, "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

RunResult run(const RunConfig& config, const RunOptions& opts) {
  RunResult result;
  result.output_dir = opts.output_dir.value_or(std::filesystem::path(config.output_dir));
  std::filesystem::create_directories(result.output_dir);
  for (const auto& f : output_files()) std::filesystem::remove(result.output_dir / f);

  const std::vector<std::string> order = resolve_pipeline(config.pipeline);
  Pipeline pipe(config, opts, result.output_dir);
  std::set<std::string> failed;
  bool hypothesis = false;
  bool hard_failure = false;
  ojson stages = ojson::array();

  for (const auto& name : order) {
    ojson rec;
    rec["name"] = name;
    rec["auto_inserted"] =
        std::find(config.pipeline.begin(), config.pipeline.end(), name) == config.pipeline.end();
    const auto& deps = dependencies().at(name);
    const auto blocked = std::find_if(deps.begin(), deps.end(),
                                      [&](const std::string& d) { return failed.count(d) != 0; });
    if (blocked != deps.end()) {
      failed.insert(name);
      rec["status"] = "skipped";
      rec["seconds"] = 0.0;
      rec["error"] = "prerequisite " + *blocked + " failed";
      stages.push_back(rec);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      pipe.run_stage(name);
      rec["status"] = "ok";
    } catch (const Error& e) {
      failed.insert(name);
      rec["status"] = "failed";
      rec["error"] = e.what();
      rec["code"] = std::string(to_string(e.code()));
      hard_failure = true;
      hypothesis = hypothesis || is_hypothesis_violation(e.code());
    } catch (const std::exception& e) {
      failed.insert(name);
      rec["status"] = "failed";
      rec["error"] = e.what();
      hard_failure = true;
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    rec["seconds"] = dt.count();
    if (opts.log != nullptr) {
      *opts.log << name << ": " << rec["status"].get<std::string>() << " (" << fmt(dt.count())
                << " s)";
      if (rec.contains("error")) *opts.log << " " << rec["error"].get<std::string>();
      *opts.log << '\n';
    }
    stages.push_back(rec);
  }

  ojson checks = ojson::array();
  bool checks_ok = true;
  for (const auto& c : pipe.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    checks_ok = checks_ok && c.pass;
  }
  if (hypothesis) {
    result.exit_code = exit_hypothesis;
  } else if (hard_failure || !checks_ok) {
    result.exit_code = exit_verification;
  }

  std::vector<std::string> names = pipe.written;
  std::sort(names.begin(), names.end());
  ojson files = ojson::array();
  for (const auto& n : names) {
    const auto p = result.output_dir / n;
    files.push_back({{"name", n}, {"sha256", sha256_file(p)},
                     {"bytes", static_cast<std::uint64_t>(std::filesystem::file_size(p))}});
  }

  ojson& m = result.manifest;
  m["toolkit"] = "ebk";
  m["version"] = toolkit_version;
  m["config"] = to_json(config);
  m["seed"] = config.seed;
  m["threads"] = opts.threads;
  m["stages"] = stages;
  m["files"] = files;
  m["checks"] = checks;
  m["exit_code"] = result.exit_code;
  write_json(result.output_dir / "manifest.json", m);
  return result;
}

}  // namespace ebk
