#include "ebk/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ebk/error.hpp"

namespace ebk {

using ojson = nlohmann::ordered_json;

namespace {

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

Position position_at(const std::string& text, std::size_t offset) {
  Position p;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

// Locates the first occurrence of "key" followed by a colon.
std::string locate(const std::string& text, const std::string& key) {
  const std::string quoted = '"' + key + '"';
  for (std::size_t at = text.find(quoted); at != std::string::npos;
       at = text.find(quoted, at + 1)) {
    std::size_t j = at + quoted.size();
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j < text.size() && text[j] == ':') {
      const Position p = position_at(text, at);
      return " (line " + std::to_string(p.line) + ", column " + std::to_string(p.column) + ")";
    }
  }
  return {};
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorCode::ConfigError, what + locate(text_, key));
  }

  void only_keys(const ojson& obj, const std::string& where, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(where, "\"" + where + "\" must be an object");
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        fail(k, "unknown key \"" + k + "\" in " + where);
      }
    }
  }

  const ojson& require(const ojson& obj, const char* key, const std::string& where) const {
    if (!obj.contains(key)) fail(where, "missing key \"" + std::string(key) + "\" in " + where);
    return obj.at(key);
  }

  double number(const ojson& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "\"" + key + "\" must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "\"" + key + "\" must be finite");
    return d;
  }

  long long integer(const ojson& v, const std::string& key) const {
    if (!v.is_number_integer()) fail(key, "\"" + key + "\" must be an integer");
    return v.get<long long>();
  }

 private:
  const std::string& text_;
};

double param(const ojson& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) {
    throw Error(ErrorCode::ConfigError, "symbol parameter \"" + std::string(key) + "\" must be a number");
  }
  return v.get<double>();
}

void only_params(const std::string& name, const ojson& params, std::initializer_list<const char*> keys) {
  if (!params.is_object()) throw Error(ErrorCode::ConfigError, "symbol params must be an object");
  for (const auto& [k, v] : params.items()) {
    (void)v;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw Error(ErrorCode::ConfigError, "unknown parameter \"" + k + "\" for symbol " + name);
    }
  }
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"trace",   "actions", "spectrum", "oracle",
                                                 "compare", "weyl",    "branches", "doublets"};
  return names;
}

SymbolSpec make_symbol(const std::string& name, const ojson& params) {
  if (name == "harmonic") {
    only_params(name, params, {"omega"});
    const double omega = param(params, "omega", 1.0);
    if (!(omega > 0.0)) throw Error(ErrorCode::ConfigError, "harmonic omega must be positive");
    return SymbolSpec::harmonic(omega);
  }
  if (name == "quartic") {
    only_params(name, params, {});
    return SymbolSpec::quartic();
  }
  if (name == "polynomial") {
    only_params(name, params, {"coeffs"});
    if (!params.contains("coeffs") || !params.at("coeffs").is_array()) {
      throw Error(ErrorCode::ConfigError, "polynomial needs a \"coeffs\" array");
    }
    std::vector<double> coeffs;
    for (const auto& c : params.at("coeffs")) {
      if (!c.is_number()) throw Error(ErrorCode::ConfigError, "polynomial coefficients must be numbers");
      coeffs.push_back(c.get<double>());
    }
    return SymbolSpec::polynomial(std::move(coeffs));
  }
  if (name == "double_well") {
    only_params(name, params, {"a"});
    return SymbolSpec::double_well(param(params, "a", 1.0));
  }
  if (name == "morse") {
    only_params(name, params, {"depth", "width"});
    return SymbolSpec::morse(param(params, "depth", 1.0), param(params, "width", 1.0));
  }
  if (name == "kerr") {
    only_params(name, params, {"omega", "kappa"});
    return SymbolSpec::closed_form(ClosedFormId::KerrOscillator,
                                   {param(params, "omega", 1.0), param(params, "kappa", 0.0)});
  }
  if (name == "quartic_kinetic") {
    only_params(name, params, {});
    return SymbolSpec::closed_form(ClosedFormId::QuarticKinetic, {});
  }
  throw Error(ErrorCode::ConfigError, "unknown symbol \"" + name + "\"");
}

RunConfig parse_config(const std::string& text) {
  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const Position p = position_at(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream os;
    os << "malformed JSON at line " << p.line << ", column " << p.column << ": " << e.what();
    throw Error(ErrorCode::ConfigError, os.str());
  }
  const Reader r(text);
  r.only_keys(root, "config",
              {"symbol", "window", "hbars", "pipeline", "tolerances", "seed", "output_dir"});
  RunConfig c;

  const ojson& sym = r.require(root, "symbol", "config");
  r.only_keys(sym, "symbol", {"name", "params"});
  const ojson& name = r.require(sym, "name", "symbol");
  if (!name.is_string()) r.fail("name", "symbol name must be a string");
  c.symbol_name = name.get<std::string>();
  if (sym.contains("params")) c.symbol_params = sym.at("params");
  try {
    make_symbol(c.symbol_name, c.symbol_params);
  } catch (const Error& e) {
    r.fail("symbol", e.what());
  }

  const ojson& win = r.require(root, "window", "config");
  r.only_keys(win, "window", {"e1", "e2", "margin"});
  const double e1 = r.number(r.require(win, "e1", "window"), "e1");
  const double e2 = r.number(r.require(win, "e2", "window"), "e2");
  const double margin = r.number(r.require(win, "margin", "window"), "margin");
  if (!(e1 < e2)) r.fail("e1", "window needs e1 < e2");
  if (!(margin > 0.0)) r.fail("margin", "window margin must be positive");
  c.window = EnergyWindow(e1, e2, margin);

  const ojson& hb = r.require(root, "hbars", "config");
  if (!hb.is_array() || hb.empty()) r.fail("hbars", "\"hbars\" must be a non-empty array");
  for (const auto& h : hb) {
    const double v = r.number(h, "hbars");
    if (!(v > 0.0)) r.fail("hbars", "hbar values must be positive");
    if (!c.hbars.empty() && !(v < c.hbars.back())) {
      r.fail("hbars", "hbar values must be strictly decreasing");
    }
    c.hbars.push_back(v);
  }

  if (root.contains("pipeline")) {
    const ojson& pl = root.at("pipeline");
    if (!pl.is_array()) r.fail("pipeline", "\"pipeline\" must be an array");
    for (const auto& s : pl) {
      if (!s.is_string()) r.fail("pipeline", "pipeline entries must be strings");
      const auto stage = s.get<std::string>();
      const auto& known = stage_names();
      if (std::find(known.begin(), known.end(), stage) == known.end()) {
        r.fail("pipeline", "unknown pipeline stage \"" + stage + "\"");
      }
      if (std::find(c.pipeline.begin(), c.pipeline.end(), stage) != c.pipeline.end()) {
        r.fail("pipeline", "duplicate pipeline stage \"" + stage + "\"");
      }
      c.pipeline.push_back(stage);
    }
  } else {
    c.pipeline = {"trace", "actions", "spectrum"};
  }

  if (root.contains("tolerances")) {
    const ojson& tol = root.at("tolerances");
    r.only_keys(tol, "tolerances", {"trace_tol", "oracle_tol", "action_samples"});
    if (tol.contains("trace_tol")) c.tolerances.trace_tol = r.number(tol.at("trace_tol"), "trace_tol");
    if (tol.contains("oracle_tol")) {
      c.tolerances.oracle_tol = r.number(tol.at("oracle_tol"), "oracle_tol");
    }
    if (tol.contains("action_samples")) {
      const long long n = r.integer(tol.at("action_samples"), "action_samples");
      if (n < 9 || n > 100000) r.fail("action_samples", "action_samples must lie in [9, 100000]");
      c.tolerances.action_samples = static_cast<int>(n);
    }
    if (!(c.tolerances.trace_tol > 0.0)) r.fail("trace_tol", "trace_tol must be positive");
    if (!(c.tolerances.oracle_tol > 0.0)) r.fail("oracle_tol", "oracle_tol must be positive");
  }

  if (root.contains("seed")) {
    const long long s = r.integer(root.at("seed"), "seed");
    if (s < 0) r.fail("seed", "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) r.fail("output_dir", "output_dir must be a string");
    c.output_dir = root.at("output_dir").get<std::string>();
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ojson to_json(const RunConfig& c) {
  ojson j;
  j["symbol"] = {{"name", c.symbol_name}, {"params", c.symbol_params}};
  j["window"] = {{"e1", c.window.e1}, {"e2", c.window.e2}, {"margin", c.window.margin}};
  j["hbars"] = c.hbars;
  j["pipeline"] = c.pipeline;
  j["tolerances"] = {{"trace_tol", c.tolerances.trace_tol},
                     {"oracle_tol", c.tolerances.oracle_tol},
                     {"action_samples", c.tolerances.action_samples}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

std::string canonical_json(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace ebk
