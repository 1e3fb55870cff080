#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "suite.hpp"

namespace hypergauss {

using json = nlohmann::json;

inline constexpr const char* kArtifactName = "hypergauss";
inline constexpr const char* kArtifactVersion = "1.0.0";

// Exit codes.
inline constexpr int kExitHolds = 0;
inline constexpr int kExitViolated = 1;
inline constexpr int kExitInconclusive = 2;
inline constexpr int kExitUsage = 64;

// Schema violation; the message starts with the offending field path.
class UsageError : public MalformedInput {
 public:
  using MalformedInput::MalformedInput;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_digest(const json& config) { return hex64(fnv1a64(config.dump())); }

// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> env_seed;  // HYPERGAUSS_SEED, used only when nothing else sets a seed
  std::optional<std::size_t> samples;
  std::optional<int> nodes;
  std::optional<double> tolerance;
  std::optional<double> p, q, rho;
  std::optional<int> n;
};

struct RunOptions {
  int jobs = 1;
};

namespace report_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) { throw UsageError(path + ": " + msg); }

// A JSON value together with its path from the config root.
class Field {
 public:
  Field(const json& v, std::string path) : v_(&v), path_(std::move(path)) {}

  const json& raw() const { return *v_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const { return v_->is_object() && v_->contains(key); }

  Field at(const std::string& key) const {
    object();
    if (!v_->contains(key)) fail(path_ + "." + key, "required field is missing");
    return Field((*v_)[key], path_ + "." + key);
  }

  std::optional<Field> opt(const std::string& key) const {
    object();
    if (!v_->contains(key)) return std::nullopt;
    return Field((*v_)[key], path_ + "." + key);
  }

  Field operator[](std::size_t i) const {
    array();
    if (i >= v_->size()) fail(path_, "index " + std::to_string(i) + " out of range");
    return Field((*v_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  std::size_t size() const { return array(), v_->size(); }

  void object() const {
    if (!v_->is_object()) fail(path_, "expected an object");
  }

  void array() const {
    if (!v_->is_array()) fail(path_, "expected an array");
  }

  void allow(std::initializer_list<const char*> keys) const {
    object();
    for (const auto& [k, v] : v_->items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) fail(path_ + "." + k, "unknown field");
    }
  }

  // Numbers, plus the strings "inf", "-inf" for unbounded endpoints.
  double number() const {
    if (v_->is_number()) return v_->get<double>();
    if (v_->is_string()) {
      const std::string s = v_->get<std::string>();
      if (s == "inf" || s == "+inf") return INFINITY;
      if (s == "-inf") return -INFINITY;
    }
    fail(path_, "expected a number");
  }

  double finite() const {
    const double x = number();
    if (!std::isfinite(x)) fail(path_, "expected a finite number");
    return x;
  }

  long long integer() const {
    if (!v_->is_number_integer()) fail(path_, "expected an integer");
    return v_->get<long long>();
  }

  int positive_int() const {
    const long long k = integer();
    if (k <= 0 || k > 1000000000) fail(path_, "expected a positive integer");
    return static_cast<int>(k);
  }

  std::uint64_t unsigned_int() const {
    if (!v_->is_number_unsigned() && !(v_->is_number_integer() && v_->get<long long>() >= 0))
      fail(path_, "expected a nonnegative integer");
    return v_->get<std::uint64_t>();
  }

  bool boolean() const {
    if (!v_->is_boolean()) fail(path_, "expected true or false");
    return v_->get<bool>();
  }

  std::string string() const {
    if (!v_->is_string()) fail(path_, "expected a string");
    return v_->get<std::string>();
  }

  std::string choice(std::initializer_list<const char*> options) const {
    const std::string s = string();
    std::string all;
    for (const char* o : options) {
      if (s == o) return s;
      all += all.empty() ? o : std::string(", ") + o;
    }
    fail(path_, "'" + s + "' is not one of " + all);
  }

  std::vector<double> numbers() const {
    std::vector<double> r;
    for (std::size_t i = 0; i < size(); ++i) r.push_back((*this)[i].finite());
    return r;
  }

  std::vector<int> positive_ints() const {
    std::vector<int> r;
    for (std::size_t i = 0; i < size(); ++i) r.push_back((*this)[i].positive_int());
    return r;
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> r;
    for (std::size_t i = 0; i < size(); ++i) r.push_back((*this)[i].numbers());
    return r;
  }

  cplx complex() const {
    if (v_->is_number()) return finite();
    if (!v_->is_array() || v_->size() != 2) fail(path_, "expected a number or [re, im]");
    return {(*this)[0].finite(), (*this)[1].finite()};
  }

 private:
  const json* v_;
  std::string path_;
};

// Rethrows library errors raised while building an object, prefixed with its path.
template <class Fn>
auto guarded(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

inline json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline json cplx_json(cplx c) { return json::array({num(c.real()), num(c.imag())}); }

inline json details_json(const std::vector<std::pair<std::string, double>>& d) {
  json o = json::object();
  for (const auto& [k, v] : d) o[k] = num(v);
  return o;
}

inline std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) fail(field, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- config pieces ----

inline BlockCovariance parse_cov(const Field& f) {
  f.object();
  const std::string kind = f.at("kind").choice({"identity", "correlated_pair", "equicorrelated", "inline", "file"});
  BlockCovariance cov;
  if (kind == "identity") {
    f.allow({"kind", "blocks"});
    const auto blocks = f.at("blocks").positive_ints();
    cov = guarded(f.path(), [&] { return BlockCovariance::identity(blocks); });
  } else if (kind == "correlated_pair") {
    f.allow({"kind", "k", "rho"});
    const int k = f.opt("k") ? f.at("k").positive_int() : 1;
    const double rho = f.at("rho").finite();
    cov = guarded(f.path(), [&] { return BlockCovariance::correlated_pair(k, rho); });
  } else if (kind == "equicorrelated") {
    f.allow({"kind", "n", "rho"});
    const int n = f.at("n").positive_int();
    const double rho = f.at("rho").finite();
    cov = guarded(f.path(), [&] { return BlockCovariance::equicorrelated(n, rho); });
  } else if (kind == "inline") {
    f.allow({"kind", "blocks", "matrix"});
    const auto blocks = f.at("blocks").positive_ints();
    const auto rows = f.at("matrix").rows();
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].size() != rows.size()) fail(f.at("matrix")[i].path(), "covariance matrix must be square");
    cov = guarded(f.path() + ".matrix", [&] { return BlockCovariance(blocks, Matrix::from_rows(rows)); });
  } else {
    f.allow({"kind", "blocks", "path", "content_digest"});
    const auto blocks = f.at("blocks").positive_ints();
    const std::string path = f.at("path").string();
    const std::string text = read_file(path, f.path() + ".path");
    cov = guarded(f.path() + ".path", [&] { return parse_covariance(text, blocks); });
  }
  if (!cov.validation().ok) fail(f.path(), "covariance failed validation: " + cov.validation().reason);
  return cov;
}

inline HyperParams parse_mode(const Field& f) {
  f.allow({"kind", "z", "s", "r", "p", "alpha", "pq"});
  const std::string kind = f.at("kind").choice({"complex", "imaginary", "real"});
  const std::vector<double> p = f.at("p").numbers();
  const double alpha = f.opt("alpha") ? f.at("alpha").finite() : 1.0;
  HyperParams hp = guarded(f.path(), [&] {
    if (kind == "complex") {
      const Field zf = f.at("z");
      std::vector<cplx> z;
      for (std::size_t i = 0; i < zf.size(); ++i) z.push_back(zf[i].complex());
      return HyperParams::complex_mode(z, p, alpha);
    }
    if (kind == "imaginary") return HyperParams::imaginary_mode(f.at("s").numbers(), p, alpha);
    return HyperParams::real_mode(f.at("r").numbers(), p, alpha);
  });
  if (auto pq = f.opt("pq")) {
    const auto v = pq->numbers();
    if (v.size() != 2) fail(pq->path(), "expected [p, q]");
    guarded(pq->path(), [&] { hp.with_pq(v[0], v[1]); });
  }
  return hp;
}

inline Direction parse_direction(const Field& root) {
  if (auto d = root.opt("direction")) return d->choice({"forward", "reverse"}) == "forward" ? Direction::forward : Direction::reverse;
  return Direction::forward;
}

inline HermitePoly parse_poly(const Field& f) {
  if (f.has("text")) {
    const std::string t = f.at("text").string();
    return guarded(f.path() + ".text", [&] { return from_text(t); });
  }
  if (f.has("path")) {
    const std::string t = read_file(f.at("path").string(), f.path() + ".path");
    return guarded(f.path() + ".path", [&] { return from_text(t); });
  }
  const int dim = f.at("dim").positive_int();
  const Basis basis =
      f.opt("basis") ? (f.at("basis").choice({"hermite", "monomial"}) == "hermite" ? Basis::hermite : Basis::monomial) : Basis::hermite;
  HermitePoly h(dim, basis);
  const Field terms = f.at("terms");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Field t = terms[i];
    t.allow({"coef", "index"});
    const cplx c = t.at("coef").complex();
    const Field idx = t.at("index");
    std::vector<int> e;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const long long v = idx[k].integer();
      if (v < 0 || v > 64) fail(idx[k].path(), "exponents must lie in 0..64");
      e.push_back(static_cast<int>(v));
    }
    guarded(t.path(), [&] { h.add_term(MultiIndex(e), c); });
  }
  return h;
}

inline HermitePoly parse_poly_field(const Field& f) {
  f.allow({"text", "path", "dim", "basis", "terms"});
  return parse_poly(f);
}

inline TestFunction parse_function(const Field& f) {
  f.object();
  const std::string kind =
      f.at("kind").choice({"polynomial", "gauss_poly", "exp_linear", "halfspace", "interval_union", "shifted_positive"});
  if (kind == "polynomial") {
    f.allow({"kind", "text", "path", "dim", "basis", "terms"});
    return make_polynomial(parse_poly(f));
  }
  if (kind == "gauss_poly") {
    f.allow({"kind", "poly", "t"});
    HermitePoly h = parse_poly_field(f.at("poly"));
    const double t = f.at("t").finite();
    return guarded(f.path(), [&] { return make_gauss_poly(h, t); });
  }
  if (kind == "exp_linear") {
    f.allow({"kind", "a", "c"});
    const auto a = f.at("a").numbers();
    const double c = f.opt("c") ? f.at("c").finite() : 1.0;
    return guarded(f.path(), [&] { return make_exp_linear(a, c); });
  }
  if (kind == "halfspace") {
    f.allow({"kind", "threshold"});
    return make_halfspace(f.at("threshold").number());
  }
  if (kind == "interval_union") {
    f.allow({"kind", "intervals"});
    const Field iv = f.at("intervals");
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < iv.size(); ++i) {
      if (iv[i].size() != 2) fail(iv[i].path(), "expected [lo, hi]");
      v.emplace_back(iv[i][0].number(), iv[i][1].number());
    }
    return guarded(f.path(), [&] { return make_interval_union(v); });
  }
  f.allow({"kind", "poly", "delta"});
  HermitePoly h = parse_poly_field(f.at("poly"));
  const double delta = f.at("delta").finite();
  return guarded(f.path(), [&] { return make_shifted_positive(h, delta); });
}

inline OuterFn parse_outer(const Field& f) {
  const std::string name = f.at("name").choice({"power", "identity", "scaled_affine"});
  if (name == "power") {
    f.allow({"name", "alpha", "scale"});
    const double alpha = f.at("alpha").finite();
    const double scale = f.opt("scale") ? f.at("scale").finite() : 1.0;
    return guarded(f.path(), [&] { return power_F(alpha, scale); });
  }
  if (name == "identity") {
    f.allow({"name"});
    return identity_F();
  }
  f.allow({"name", "a", "b"});
  const double a = f.at("a").finite(), b = f.at("b").finite();
  return guarded(f.path(), [&] { return scaled_affine_F(a, b); });
}

inline InnerFn parse_inner(const Field& f) {
  const std::string name = f.at("name").choice({"product_of_powers", "borell", "quadratic", "sum_of_squares", "bilinear"});
  if (name == "product_of_powers") {
    f.allow({"name", "p"});
    const auto p = f.at("p").numbers();
    return guarded(f.path(), [&] { return product_of_powers_B(p); });
  }
  if (name == "borell") {
    f.allow({"name", "s"});
    const double s = f.at("s").finite();
    return guarded(f.path(), [&] { return borell_B(s); });
  }
  if (name == "quadratic") {
    f.allow({"name", "matrix"});
    const auto rows = f.at("matrix").rows();
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].size() != rows.size()) fail(f.at("matrix")[i].path(), "matrix must be square");
    return guarded(f.path(), [&] { return quadratic_B(Matrix::from_rows(rows)); });
  }
  if (name == "sum_of_squares") {
    f.allow({"name", "n"});
    const int n = f.at("n").positive_int();
    return sum_of_squares_B(n);
  }
  f.allow({"name"});
  return bilinear_B();
}

inline FunctionPair parse_pair(const Field& f) {
  f.allow({"F", "B"});
  return {parse_outer(f.at("F")), parse_inner(f.at("B"))};
}

inline std::vector<std::vector<double>> parse_grid(const Field& root, const InnerFn& B) {
  if (auto g = root.opt("grid")) {
    auto pts = g->rows();
    if (pts.empty()) fail(g->path(), "grid must not be empty");
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (static_cast<int>(pts[i].size()) != B.n) fail((*g)[i].path(), "grid point length differs from the B arity");
    return pts;
  }
  return default_grid(B.box);
}

// Test-function tuples: "tests" (array of tuples) or "functions" (a single tuple).
inline std::vector<Field> tuples(const Field& root) {
  std::vector<Field> out;
  if (auto t = root.opt("tests")) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      (*t)[i].array();
      out.push_back((*t)[i]);
    }
  } else {
    const Field f = root.at("functions");
    f.array();
    out.push_back(f);
  }
  if (out.empty()) fail(root.path() + ".tests", "at least one test tuple is required");
  return out;
}

inline std::vector<TestFunction> parse_functions(const Field& tuple) {
  std::vector<TestFunction> fs;
  for (std::size_t i = 0; i < tuple.size(); ++i) fs.push_back(parse_function(tuple[i]));
  return fs;
}

inline std::vector<HermitePoly> parse_polys(const Field& tuple) {
  std::vector<HermitePoly> fs;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    const TestFunction f = parse_function(tuple[i]);
    if (!std::holds_alternative<PolynomialFn>(f)) fail(tuple[i].path(), "this check needs polynomial test functions");
    fs.push_back(std::get<PolynomialFn>(f).f);
  }
  return fs;
}

inline std::vector<GaussPoly> parse_gauss_polys(const Field& tuple) {
  std::vector<GaussPoly> gs;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    const TestFunction f = parse_function(tuple[i]);
    if (!std::holds_alternative<GaussPoly>(f)) fail(tuple[i].path(), "this check needs gauss_poly test functions");
    gs.push_back(std::get<GaussPoly>(f));
  }
  return gs;
}

inline IntervalUnion parse_set(const Field& f) {
  const TestFunction t = parse_function(f);
  if (const auto* h = std::get_if<HalfspaceIndicator>(&t)) return IntervalUnion{{{-INFINITY, h->threshold}}};
  if (const auto* u = std::get_if<IntervalUnion>(&t)) return *u;
  fail(f.path(), "expected an interval_union or halfspace");
}

inline Field params(const Field& root) {
  static const json empty = json::object();
  if (auto p = root.opt("params")) {
    p->object();
    return *p;
  }
  return Field(empty, root.path() + ".params");
}

inline Budget parse_budget(const Field& root) {
  Budget b;
  b.seed = root.at("seed").unsigned_int();
  if (auto bf = root.opt("budget")) {
    bf->allow({"samples", "nodes", "inner_nodes", "tolerance", "force_mc", "estimate_error"});
    if (auto v = bf->opt("samples")) b.samples = v->unsigned_int();
    if (auto v = bf->opt("nodes")) b.nodes = v->positive_int();
    if (auto v = bf->opt("tolerance")) b.tol = v->finite();
    if (auto v = bf->opt("force_mc")) b.force_mc = v->boolean();
  }
  return b;
}

inline FlowBudget parse_flow_budget(const Field& root) {
  FlowBudget b;
  b.seed = root.at("seed").unsigned_int();
  if (auto bf = root.opt("budget")) {
    bf->allow({"samples", "nodes", "inner_nodes", "tolerance", "force_mc", "estimate_error"});
    if (auto v = bf->opt("samples")) b.samples = v->unsigned_int();
    if (auto v = bf->opt("nodes")) b.nodes = v->positive_int();
    if (auto v = bf->opt("inner_nodes")) b.inner_nodes = v->positive_int();
    if (auto v = bf->opt("tolerance")) b.tol = v->finite();
    if (auto v = bf->opt("force_mc")) b.force_mc = v->boolean();
    if (auto v = bf->opt("estimate_error")) b.estimate_error = v->boolean();
  }
  return b;
}

// ---- records ----

inline const char* condition_verdict(const ConditionReport& r) {
  if (std::isnan(r.margin)) return "inconclusive";
  return r.holds ? "holds" : "violated";
}

inline json condition_json(const std::string& check, const ConditionReport& r) {
  json w = json::array();
  for (cplx c : r.witness_w) w.push_back(cplx_json(c));
  return {{"type", "condition"},
          {"check", check},
          {"holds", r.holds},
          {"margin", num(r.margin)},
          {"scale", num(r.scale)},
          {"witness", nums(r.witness)},
          {"witness_w", w},
          {"witness_c", nums(r.witness_c)},
          {"convexity_ok", r.convexity_ok},
          {"details", details_json(r.details)},
          {"note", r.note},
          {"verdict", condition_verdict(r)}};
}

inline json comparison_json(const Comparison& c) {
  return {{"type", "comparison"},
          {"name", c.name},
          {"relation", c.relation},
          {"lhs", num(c.lhs)},
          {"rhs", num(c.rhs)},
          {"margin", num(c.margin)},
          {"method", method_name(c.method)},
          {"stderr", num(c.stderr_)},
          {"error_estimate", num(c.error_estimate)},
          {"tainted", c.tainted},
          {"seed", c.seed},
          {"samples", c.samples},
          {"nodes", c.nodes},
          {"details", details_json(c.details)},
          {"note", c.note},
          {"verdict", verdict_name(c.verdict)}};
}

inline json witness_json(const std::string& local_check, const ConditionReport& local, const PerturbationResult& r) {
  json cs = json::array();
  for (const auto& c : r.comparisons) cs.push_back(comparison_json(c));
  return {{"type", "witness"},
          {"local", condition_json(local_check, local)},
          {"eps", nums(r.eps)},
          {"comparisons", cs},
          {"fitted", num(r.fitted)},
          {"expected", num(r.expected)},
          {"relative_error", num(r.relative_error)},
          {"residual", num(r.residual)},
          {"matches_local", r.matches_local},
          {"certified", r.certified},
          {"verdict", verdict_name(r.verdict)}};
}

inline json flow_json(const FlowReport& r) {
  const FlowProfile& p = r.profile;
  json ok = json::array();
  for (bool b : r.pair_ok) ok.push_back(b);
  json affine = json::array();
  for (const auto& a : p.affine) affine.push_back(json{{"shift", num(a.shift)}, {"scale", num(a.scale)}});
  return {{"type", "flow"},
          {"direction", r.direction},
          {"method", method_name(p.method)},
          {"s", nums(p.s)},
          {"value", nums(p.value)},
          {"stderr", nums(p.stderr_)},
          {"error", nums(p.error)},
          {"pair_diff", nums(p.pair_diff)},
          {"pair_stderr", nums(p.pair_stderr)},
          {"pair_ok", ok},
          {"monotone", r.monotone},
          {"gap", num(r.gap)},
          {"endpoint_lhs_diff", num(r.endpoint_lhs_diff)},
          {"endpoint_rhs_diff", num(r.endpoint_rhs_diff)},
          {"endpoints_match", r.endpoints_match},
          {"gap_consistent", r.gap_consistent},
          {"global", comparison_json(r.global)},
          {"nodes", p.nodes},
          {"inner_nodes", p.inner_nodes},
          {"samples", p.samples},
          {"seed", p.seed},
          {"affine", affine},
          {"verdict", verdict_name(r.verdict)}};
}

inline json criterion_json(const CriterionResult& r) {
  json m = json::object();
  for (const auto& [k, v] : r.metrics) m[k] = num(v);
  return {{"type", "criterion"},
          {"id", r.id},
          {"title", r.title},
          {"pass", r.pass},
          {"summary", r.summary},
          {"metrics", m},
          {"notes", r.notes},
          {"verdict", r.pass ? "holds" : "violated"}};
}

inline json covariance_json(const BlockCovariance& cov) {
  return {{"blocks", cov.blocks()},
          {"dim", cov.dim()},
          {"lambda_min", num(cov.lambda_min())},
          {"lambda_max", num(cov.lambda_max())}};
}

inline json summarize(const json& records) {
  int h = 0, v = 0, i = 0;
  for (const auto& r : records) {
    const std::string s = r.at("verdict").get<std::string>();
    if (s == "holds") ++h;
    else if (s == "violated") ++v;
    else ++i;
  }
  const char* verdict = v > 0 ? "violated" : i > 0 ? "inconclusive" : "holds";
  return {{"records", records.size()}, {"holds", h}, {"violated", v}, {"inconclusive", i}, {"verdict", verdict}};
}

// Runs fn(0..n−1) on up to `jobs` threads; results keep index order.
template <class Fn>
std::vector<json> ordered_map(std::size_t n, int jobs, Fn fn) {
  std::vector<json> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const std::size_t t = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < t; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---- commands ----

inline json run_check_local(const Field& root) {
  const std::string check = root.at("check").choice(
      {"complex", "sandwich", "real", "correlated_r", "fb_complex", "fb_real", "gaussian_jensen", "convexity"});
  json records = json::array();
  json extra = json::object();
  const Field prm = params(root);
  if (check == "convexity") {
    const FunctionPair pair = parse_pair(root.at("pair"));
    prm.allow({"abs_denominator"});
    const bool absd = prm.opt("abs_denominator") ? prm.at("abs_denominator").boolean() : false;
    ConditionReport r;
    r.holds = r.convexity_ok = check_convexity(pair.F, absd);
    r.note = "convexity of (t,y) -> kappa(t) y^2 for F = " + pair.F.name;
    records.push_back(condition_json(check, r));
    return {{"records", records}};
  }
  const BlockCovariance cov = parse_cov(root.at("covariance"));
  extra["covariance"] = covariance_json(cov);
  ConditionReport r;
  const std::string where = root.path() + ".check";
  if (check == "correlated_r") {
    prm.allow({"p", "q", "r"});
    const double p = prm.at("p").finite(), q = prm.at("q").finite(), rr = prm.at("r").finite();
    r = guarded(where, [&] { return check_correlated_r_bound(p, q, rr, cov); });
  } else {
    const HyperParams hp = parse_mode(root.at("mode"));
    const Direction dir = parse_direction(root);
    if (check == "complex") r = guarded(where, [&] { return check_complex_local(hp, cov); });
    else if (check == "sandwich") r = guarded(where, [&] { return check_imaginary_sandwich(hp, cov); });
    else if (check == "real") r = guarded(where, [&] { return check_real_local(hp, cov, dir); });
    else {
      const FunctionPair pair = parse_pair(root.at("pair"));
      const auto grid = parse_grid(root, pair.B);
      if (check == "fb_complex") r = guarded(where, [&] { return check_fb_complex_local(pair, hp, cov, grid); });
      else if (check == "fb_real") r = guarded(where, [&] { return check_fb_real_local(pair, hp, cov, grid, dir); });
      else {
        if (hp.mode != Mode::real) fail(root.path() + ".mode.kind", "gaussian_jensen needs real mode");
        r = guarded(where, [&] { return check_gaussian_jensen(pair.B, cov, hp.r, grid, dir); });
      }
    }
  }
  records.push_back(condition_json(check, r));
  extra["records"] = records;
  return extra;
}

inline json run_witness(const Field& root, const BlockCovariance& cov, const Budget& budget) {
  const HyperParams hp = parse_mode(root.at("mode"));
  const Direction dir = parse_direction(root);
  const Field prm = params(root);
  prm.allow({"eps", "normalized", "local"});
  const std::vector<double> eps = prm.opt("eps") ? prm.at("eps").numbers() : default_eps_grid();
  if (eps.size() < 3) fail(prm.path() + ".eps", "at least three step sizes are needed");
  const std::string where = root.path() + ".verify";
  if (!root.has("pair")) {
    const std::string lc = hp.mode == Mode::real ? "real" : "complex";
    const ConditionReport local = guarded(where, [&] {
      return hp.mode == Mode::real ? check_real_local(hp, cov, dir) : check_complex_local(hp, cov);
    });
    const PerturbationResult w = guarded(where, [&] { return perturbation_witness(hp, cov, local, eps, dir, budget); });
    return witness_json(lc, local, w);
  }
  const FunctionPair pair = parse_pair(root.at("pair"));
  const std::string lc = prm.opt("local") ? prm.at("local").choice({"fb_real", "gaussian_jensen"}) : "fb_real";
  const bool normalized = prm.opt("normalized") ? prm.at("normalized").boolean() : lc == "fb_real";
  const auto grid = parse_grid(root, pair.B);
  if (hp.mode != Mode::real) fail(root.path() + ".mode.kind", "the FB witness needs real mode");
  const ConditionReport local = guarded(where, [&] {
    return lc == "fb_real" ? check_fb_real_local(pair, hp, cov, grid, dir) : check_gaussian_jensen(pair.B, cov, hp.r, grid, dir);
  });
  const PerturbationResult w =
      guarded(where, [&] { return perturbation_witness_fb(pair, hp, cov, local, eps, dir, normalized, budget); });
  return witness_json(lc, local, w);
}

inline json run_verify_global(const Field& root) {
  const std::string kind = root.at("verify").choice({"complex_hc", "real_hc", "hausdorff_young", "pq_hausdorff_young", "rho_hy",
                                                     "log_sobolev", "chaos", "noisy_borell", "fb_real", "fb_complex", "witness"});
  const Budget budget = parse_budget(root);
  const std::string where = root.path() + ".verify";
  json out = json::object();
  json records = json::array();
  const Field prm = params(root);

  // Kinds that do not take a covariance.
  if (kind == "rho_hy" || kind == "noisy_borell") {
    for (const Field& t : tuples(root)) {
      if (t.size() != 2) fail(t.path(), "expected exactly two test functions");
      Comparison c;
      if (kind == "rho_hy") {
        prm.allow({"rho", "p", "q"});
        const auto gs = parse_gauss_polys(t);
        const double rho = prm.at("rho").finite(), p = prm.at("p").finite(), q = prm.at("q").finite();
        c = guarded(where, [&] { return verify_rho_hy(gs[0], gs[1], rho, p, q, budget); });
      } else {
        prm.allow({"r1", "r2", "s"});
        const IntervalUnion A = parse_set(t[0]), B = parse_set(t[1]);
        const double r1 = prm.at("r1").finite(), r2 = prm.at("r2").finite(), s = prm.at("s").finite();
        c = guarded(where, [&] { return verify_noisy_borell(A, B, r1, r2, s, budget); });
      }
      records.push_back(comparison_json(c));
    }
    out["records"] = records;
    return out;
  }

  const BlockCovariance cov = parse_cov(root.at("covariance"));
  out["covariance"] = covariance_json(cov);
  if (kind == "witness") {
    records.push_back(run_witness(root, cov, budget));
    out["records"] = records;
    return out;
  }
  for (const Field& t : tuples(root)) {
    Comparison c;
    if (kind == "complex_hc") {
      const HyperParams hp = parse_mode(root.at("mode"));
      const auto fs = parse_polys(t);
      c = guarded(where, [&] { return verify_complex_hc(fs, hp, cov, budget); });
    } else if (kind == "real_hc") {
      const HyperParams hp = parse_mode(root.at("mode"));
      const auto fs = parse_functions(t);
      c = guarded(where, [&] { return verify_real_hc(fs, hp, cov, parse_direction(root), budget); });
    } else if (kind == "hausdorff_young") {
      prm.allow({"p", "alpha"});
      const auto gs = parse_gauss_polys(t);
      const auto p = prm.at("p").numbers();
      const double alpha = prm.at("alpha").finite();
      c = guarded(where, [&] { return verify_hausdorff_young(gs, p, alpha, cov, budget); });
    } else if (kind == "pq_hausdorff_young") {
      prm.allow({"p", "q"});
      const auto gs = parse_gauss_polys(t);
      const double p = prm.at("p").finite(), q = prm.at("q").finite();
      c = guarded(where, [&] { return verify_pq_hausdorff_young(gs, p, q, cov, budget); });
    } else if (kind == "log_sobolev") {
      prm.allow({"p", "form", "constant"});
      const auto fs = parse_functions(t);
      const double p = prm.at("p").finite();
      const LogSobolevForm form = prm.opt("form") && prm.at("form").choice({"printed", "corrected"}) == "corrected"
                                      ? LogSobolevForm::corrected
                                      : LogSobolevForm::printed;
      std::optional<double> constant;
      if (auto k = prm.opt("constant")) constant = k->finite();
      c = guarded(where, [&] { return verify_log_sobolev(fs, p, cov, budget, form, constant); });
    } else if (kind == "chaos") {
      prm.allow({"p", "q", "variant"});
      const auto fs = parse_polys(t);
      const double p = prm.at("p").finite(), q = prm.at("q").finite();
      const ChaosVariant v = prm.opt("variant") && prm.at("variant").choice({"complex", "real"}) == "real" ? ChaosVariant::real
                                                                                                          : ChaosVariant::complex;
      c = guarded(where, [&] { return verify_chaos_moments(fs, p, q, cov, v, budget); });
    } else if (kind == "fb_real") {
      const HyperParams hp = parse_mode(root.at("mode"));
      const FunctionPair pair = parse_pair(root.at("pair"));
      const auto fs = parse_functions(t);
      c = guarded(where, [&] { return verify_fb_real(pair, hp, cov, fs, parse_direction(root), budget); });
    } else {
      const HyperParams hp = parse_mode(root.at("mode"));
      const FunctionPair pair = parse_pair(root.at("pair"));
      const auto fs = parse_polys(t);
      c = guarded(where, [&] { return verify_fb_complex(pair.F, pair.B, hp, cov, fs, budget); });
    }
    records.push_back(comparison_json(c));
  }
  out["records"] = records;
  return out;
}

inline json run_flow(const Field& root) {
  const BlockCovariance cov = parse_cov(root.at("covariance"));
  const HyperParams hp = parse_mode(root.at("mode"));
  const Field prm = params(root);
  prm.allow({"variant", "s_grid"});
  const std::string variant = prm.at("variant").choice({"real", "complex"});
  const Field fns = root.at("functions");
  FlowSpec spec;
  if (variant == "real") {
    const FunctionPair pair = parse_pair(root.at("pair"));
    spec = real_flow(pair, hp, cov, parse_functions(fns));
  } else {
    const auto fs = parse_polys(fns);
    if (root.has("pair")) {
      const FunctionPair pair = parse_pair(root.at("pair"));
      spec = complex_flow(pair.F, pair.B, hp, cov, fs);
    } else {
      auto [F, M] = complex_power_pair(hp.p, hp.alpha);
      spec = complex_flow(F, M, hp, cov, fs);
    }
  }
  if (auto g = prm.opt("s_grid")) {
    spec.s_grid = g->numbers();
    if (spec.s_grid.size() < 2) fail(g->path(), "at least two s values are needed");
  }
  spec.budget = parse_flow_budget(root);
  const FlowReport r = guarded(root.path(), [&] { return certify_monotone(spec); });
  return {{"covariance", covariance_json(cov)}, {"records", json::array({flow_json(r)})}};
}

inline json run_constants(const Field& root) {
  const Field prm = params(root);
  prm.allow({"p", "q", "n", "rho", "d"});
  const double p = prm.at("p").finite();
  const bool has_q = prm.has("q");
  const double q = has_q ? prm.at("q").finite() : 0.0;
  const int n = prm.opt("n") ? prm.at("n").positive_int() : 1;
  json values = json::object(), skipped = json::object();
  auto put = [&](const char* name, auto fn) {
    try {
      values[name] = num(fn());
    } catch (const Error& e) {
      skipped[name] = e.what();
    }
  };
  if (has_q) {
    put("beckner_babenko", [&] { return SharpConstants::beckner_babenko(p, q, n); });
    if (auto rho = prm.opt("rho")) {
      const double r = rho->finite();
      put("rho_hy", [&] { return SharpConstants::rho_hy(p, q, r, n); });
    }
  }
  json out = json::object();
  if (root.has("covariance")) {
    const BlockCovariance cov = parse_cov(root.at("covariance"));
    out["covariance"] = covariance_json(cov);
    const double lmin = cov.lambda_min(), lmax = cov.lambda_max();
    put("pq_hy", [&] { return SharpConstants::pq_hy(p, lmin, cov.dim()); });
    put("log_sobolev", [&] { return SharpConstants::log_sobolev(p, lmin); });
    put("log_sobolev_corrected", [&] { return SharpConstants::log_sobolev_corrected(p, lmin); });
    if (has_q) {
      const int d = prm.opt("d") ? prm.at("d").positive_int() : 1;
      put("chaos_complex", [&] { return SharpConstants::chaos_complex(p, q, lmin, lmax, d); });
      put("chaos_real", [&] { return SharpConstants::chaos_real(p, q, lmin, d); });
    }
  }
  json rec = {{"type", "constants"}, {"values", values}, {"skipped", skipped}, {"verdict", "holds"}};
  out["records"] = json::array({rec});
  return out;
}

json run_command(const Field& root, const RunOptions& opt, json& timing);

inline json run_suite(const Field& root, const RunOptions& opt, json& timing) {
  if (root.has("entries")) {
    const Field entries = root.at("entries");
    entries.array();
    std::vector<double> secs(entries.size());
    const auto results = ordered_map(entries.size(), opt.jobs, [&](std::size_t i) {
      const Field e = entries[i];
      e.object();
      if (e.has("command") && e.at("command").string() == "suite") fail(e.path() + ".command", "suites do not nest");
      const auto t0 = std::chrono::steady_clock::now();
      json ignored;
      json r = run_command(e, opt, ignored);
      secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      json rec = {{"type", "entry"},
                  {"index", i},
                  {"command", e.at("command").string()},
                  {"config_digest", config_digest(e.raw())},
                  {"records", r.at("records")}};
      if (r.contains("covariance")) rec["covariance"] = r["covariance"];
      rec["summary"] = summarize(rec["records"]);
      rec["verdict"] = rec["summary"]["verdict"];
      return rec;
    });
    timing["entries_seconds"] = secs;
    return {{"records", results}};
  }
  const std::string name = root.at("name").choice({"paper-theorems"});
  std::vector<int> ids;
  if (auto c = root.opt("criteria")) {
    for (std::size_t i = 0; i < c->size(); ++i) {
      const long long id = (*c)[i].integer();
      if (id < 1 || id > kCriteria) fail((*c)[i].path(), "criterion ids lie in 1.." + std::to_string(kCriteria));
      ids.push_back(static_cast<int>(id));
    }
  } else {
    for (int i = 1; i <= kCriteria; ++i) ids.push_back(i);
  }
  SuiteOptions so;
  if (auto s = root.opt("suite_seed")) so.seed = s->unsigned_int();
  std::vector<double> secs(ids.size());
  const auto results = ordered_map(ids.size(), opt.jobs, [&](std::size_t i) {
    CriterionResult r;
    try {
      r = run_criterion(ids[i], so);
    } catch (const Error& e) {
      r.id = ids[i];
      r.title = "error";
      r.summary = e.what();
    }
    secs[i] = r.seconds;
    return criterion_json(r);
  });
  timing["criteria_seconds"] = secs;
  return {{"records", results}};
}

inline json run_command(const Field& root, const RunOptions& opt, json& timing) {
  root.allow({"command", "description", "seed", "budget", "covariance", "mode", "direction", "pair", "check", "verify",
              "functions", "tests", "grid", "params", "name", "criteria", "entries", "suite_seed"});
  const std::string cmd = root.at("command").choice({"check-local", "verify-global", "flow", "constants", "suite"});
  if (cmd == "check-local") return run_check_local(root);
  if (cmd == "verify-global") return run_verify_global(root);
  if (cmd == "flow") return run_flow(root);
  if (cmd == "constants") return run_constants(root);
  return run_suite(root, opt, timing);
}

// Fills seeds and budget overrides; inherited keys flow into suite entries.
inline void normalize(json& cfg, const Overrides& o, const json* parent, const std::string& path) {
  if (!cfg.is_object()) fail(path, "expected an object");
  if (parent) {
    for (const char* key : {"seed", "covariance", "mode", "direction", "pair", "params"})
      if (!cfg.contains(key) && parent->contains(key)) cfg[key] = (*parent)[key];
    if (parent->contains("budget") && (*parent)["budget"].is_object()) {
      if (!cfg.contains("budget")) cfg["budget"] = json::object();
      if (cfg["budget"].is_object())
        for (const auto& [k, v] : (*parent)["budget"].items())
          if (!cfg["budget"].contains(k)) cfg["budget"][k] = v;
    }
  }
  if (o.seed) cfg["seed"] = *o.seed;
  else if (!cfg.contains("seed")) cfg["seed"] = o.env_seed.value_or(1);
  if (o.samples || o.nodes || o.tolerance) {
    if (!cfg.contains("budget")) cfg["budget"] = json::object();
    if (!cfg["budget"].is_object()) fail(path + ".budget", "expected an object");
    if (o.samples) cfg["budget"]["samples"] = *o.samples;
    if (o.nodes) cfg["budget"]["nodes"] = *o.nodes;
    if (o.tolerance) cfg["budget"]["tolerance"] = *o.tolerance;
  }
  if (o.p || o.q || o.n || o.rho) {
    if (!cfg.contains("params")) cfg["params"] = json::object();
    if (!cfg["params"].is_object()) fail(path + ".params", "expected an object");
    if (o.p) cfg["params"]["p"] = *o.p;
    if (o.q) cfg["params"]["q"] = *o.q;
    if (o.n) cfg["params"]["n"] = *o.n;
    if (o.rho) cfg["params"]["rho"] = *o.rho;
  }
  if (cfg.contains("covariance") && cfg["covariance"].is_object() && cfg["covariance"].value("kind", "") == "file" &&
      cfg["covariance"].contains("path") && cfg["covariance"]["path"].is_string())
    cfg["covariance"]["content_digest"] =
        hex64(fnv1a64(read_file(cfg["covariance"]["path"].get<std::string>(), path + ".covariance.path")));
  if (cfg.contains("entries") && cfg["entries"].is_array()) {
    json base = cfg;
    base.erase("entries");
    for (std::size_t i = 0; i < cfg["entries"].size(); ++i)
      normalize(cfg["entries"][i], o, &base, path + ".entries[" + std::to_string(i) + "]");
  }
}

}  // namespace report_detail

inline json parse_config_text(const std::string& text) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
}

// Applies overrides and returns the canonical config whose dump is digested.
inline json canonical_config(json cfg, const Overrides& o) {
  report_detail::normalize(cfg, o, nullptr, "config");
  return cfg;
}

// Runs a canonical config. Everything except "timing" is a deterministic function of the config.
inline json run(const json& cfg, const RunOptions& opt = {}) {
  using namespace report_detail;
  const auto t0 = std::chrono::steady_clock::now();
  json timing = json::object();
  const Field root(cfg, "config");
  json body = run_command(root, opt, timing);
  json rep = json::object();
  rep["artifact"] = {{"name", kArtifactName}, {"version", kArtifactVersion}};
  rep["config_digest"] = config_digest(cfg);
  rep["command"] = cfg.at("command");
  if (body.contains("covariance")) rep["covariance"] = body["covariance"];
  rep["records"] = body.at("records");
  rep["summary"] = summarize(rep["records"]);
  timing["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep["timing"] = timing;
  return rep;
}

inline int exit_code(const json& report) {
  const std::string v = report.at("summary").at("verdict").get<std::string>();
  if (v == "violated") return kExitViolated;
  if (v == "inconclusive") return kExitInconclusive;
  return kExitHolds;
}

}  // namespace hypergauss
