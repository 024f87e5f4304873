#include "r2opt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace r2opt {

namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string with_location(const std::string& source, std::size_t line, const std::string& message) {
  if (line == 0) return source + ": " + message;
  return source + ":" + std::to_string(line) + ": " + message;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Line-addressed JSON parsing.

struct LineCounter {
  std::size_t line = 1;
  char last = 0;
};

// Counts newlines as the lexer consumes them.
class CountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator(const char* p, LineCounter* c) : p_(p), c_(c) {}
  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    c_->last = *p_;
    if (*p_ == '\n') ++c_->line;
    ++p_;
    return *this;
  }
  CountingIterator operator++(int) {
    auto t = *this;
    ++*this;
    return t;
  }
  bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  LineCounter* c_;
};

using LineMap = std::map<std::string, std::size_t>;

// DOM builder that also maps every JSON pointer to the line of its key, or
// of the value for array elements. Duplicate keys are rejected.
class LocatingSax : public nlohmann::detail::json_sax_dom_parser<json> {
  using base = nlohmann::detail::json_sax_dom_parser<json>;

 public:
  LocatingSax(json& root, const LineCounter& counter, LineMap& lines)
      : base(root, true), counter_(counter), lines_(lines) {}

  bool null() { return value(false) && base::null() && after(); }
  bool boolean(bool v) { return value(false) && base::boolean(v) && after(); }
  bool number_integer(number_integer_t v) { return value(true) && base::number_integer(v) && after(); }
  bool number_unsigned(number_unsigned_t v) { return value(true) && base::number_unsigned(v) && after(); }
  bool number_float(number_float_t v, const string_t& s) { return value(true) && base::number_float(v, s) && after(); }
  bool string(string_t& v) { return value(false) && base::string(v) && after(); }
  bool binary(binary_t& v) { return value(false) && base::binary(v) && after(); }

  bool start_object(std::size_t n) {
    value(false);
    frames_.push_back({false, 0, {}, {}});
    return base::start_object(n);
  }
  bool key(string_t& k) {
    auto& f = frames_.back();
    f.key = k;
    if (!f.seen.insert(k).second) {
      duplicate_ = pointer();
      duplicate_line_ = counter_.line;
      return false;
    }
    lines_.emplace(pointer(), counter_.line);
    return base::key(k);
  }
  bool end_object() {
    frames_.pop_back();
    return base::end_object() && after();
  }
  bool start_array(std::size_t n) {
    value(false);
    frames_.push_back({true, 0, {}, {}});
    return base::start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    return base::end_array() && after();
  }

  [[nodiscard]] const std::string& duplicate() const { return duplicate_; }
  [[nodiscard]] std::size_t duplicate_line() const { return duplicate_line_; }

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string key;
    std::set<std::string> seen;
  };

  std::string pointer() const {
    std::string p;
    for (const auto& f : frames_) p += "/" + (f.array ? std::to_string(f.index) : f.key);
    return p;
  }

  // Numbers are recognised one character late.
  bool value(bool lookahead) {
    if (!frames_.empty() && frames_.back().array) {
      std::size_t line = counter_.line;
      if (lookahead && counter_.last == '\n' && line > 1) --line;
      lines_.emplace(pointer(), line);
    }
    return true;
  }

  bool after() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    return true;
  }

  const LineCounter& counter_;
  LineMap& lines_;
  std::vector<Frame> frames_;
  std::string duplicate_;
  std::size_t duplicate_line_ = 0;
};

struct Located {
  json root;
  LineMap lines;
};

Located parse_located(const std::string& text, const std::string& source) {
  Located out;
  LineCounter counter;
  LocatingSax sax(out.root, counter, out.lines);
  const char* begin = text.data();
  const char* end = begin + text.size();
  bool ok = false;
  try {
    ok = json::sax_parse(CountingIterator(begin, &counter), CountingIterator(end, &counter), &sax);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) line += text[i] == '\n';
    std::string msg = e.what();
    if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError(source, line, "invalid JSON: " + msg);
  }
  if (!ok) {
    if (!sax.duplicate().empty()) {
      throw ConfigError(source, sax.duplicate_line(), "duplicate key " + sax.duplicate());
    }
    throw ConfigError(source, counter.line, "invalid JSON");
  }
  return out;
}

class Reader {
 public:
  Reader(const Located& doc, std::string source) : doc_(doc), source_(std::move(source)) {}

  struct Node {
    const json* value;
    std::string ptr;
  };

  [[nodiscard]] Node root() const { return {&doc_.root, ""}; }

  [[noreturn]] void fail(const std::string& ptr, const std::string& message) const {
    throw ConfigError(source_, line(ptr), (ptr.empty() ? std::string("/") : ptr) + ": " + message);
  }

  // The line of ptr or of its nearest located ancestor.
  [[nodiscard]] std::size_t line(std::string ptr) const {
    while (!ptr.empty()) {
      if (auto it = doc_.lines.find(ptr); it != doc_.lines.end()) return it->second;
      ptr.erase(ptr.rfind('/'));
    }
    return 1;
  }

  void object(const Node& n, std::initializer_list<const char*> allowed) const {
    if (!n.value->is_object()) fail(n.ptr, "expected an object");
    for (const auto& [k, v] : n.value->items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        fail(n.ptr + "/" + k, "unknown key '" + k + "'");
      }
    }
  }

  [[nodiscard]] std::optional<Node> child(const Node& n, const char* key) const {
    auto it = n.value->find(key);
    if (it == n.value->end() || it->is_null()) return std::nullopt;
    return Node{&*it, n.ptr + "/" + key};
  }

  [[nodiscard]] std::string text(const Node& n) const {
    if (!n.value->is_string()) fail(n.ptr, "expected a string");
    return n.value->get<std::string>();
  }
  [[nodiscard]] double number(const Node& n) const {
    if (!n.value->is_number()) fail(n.ptr, "expected a number");
    const double v = n.value->get<double>();
    if (!std::isfinite(v)) fail(n.ptr, "expected a finite number");
    return v;
  }
  [[nodiscard]] std::uint64_t count(const Node& n) const {
    if (!n.value->is_number_unsigned()) fail(n.ptr, "expected a non-negative integer");
    return n.value->get<std::uint64_t>();
  }
  [[nodiscard]] std::vector<double> vector(const Node& n) const {
    if (!n.value->is_array()) fail(n.ptr, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.value->size(); ++i) out.push_back(number({&(*n.value)[i], n.ptr + "/" + std::to_string(i)}));
    return out;
  }
  [[nodiscard]] std::vector<std::vector<double>> matrix(const Node& n) const {
    if (!n.value->is_array()) fail(n.ptr, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < n.value->size(); ++i) out.push_back(vector({&(*n.value)[i], n.ptr + "/" + std::to_string(i)}));
    return out;
  }

  template <class T, class F>
  void get(const Node& n, const char* key, T& target, F&& convert) const {
    if (auto c = child(n, key)) target = convert(*c);
  }
  void get(const Node& n, const char* key, std::string& t) const {
    get(n, key, t, [&](const Node& c) { return text(c); });
  }
  void get(const Node& n, const char* key, double& t) const {
    get(n, key, t, [&](const Node& c) { return number(c); });
  }
  void get(const Node& n, const char* key, std::size_t& t) const {
    get(n, key, t, [&](const Node& c) { return static_cast<std::size_t>(count(c)); });
  }
  void get(const Node& n, const char* key, std::vector<double>& t) const {
    get(n, key, t, [&](const Node& c) { return vector(c); });
  }

 private:
  const Located& doc_;
  std::string source_;
};

ResamplePolicy resample_from_string(const std::string& s) {
  if (s == "frozen") return ResamplePolicy::frozen;
  if (s == "per_call") return ResamplePolicy::per_call;
  throw std::invalid_argument("resample must be frozen or per_call");
}

const char* to_cstr(ResamplePolicy p) { return p == ResamplePolicy::frozen ? "frozen" : "per_call"; }

const char* to_cstr(NormalisationMode m) {
  switch (m) {
    case NormalisationMode::none: return "none";
    case NormalisationMode::front: return "front";
    case NormalisationMode::bounds: return "bounds";
  }
  return "none";
}

// Runs convert and re-addresses any std::invalid_argument at ptr.
template <class F>
auto checked(const Reader& r, const std::string& ptr, F&& convert) {
  try {
    return convert();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    r.fail(ptr, e.what());
  }
}

void read_utility(const Reader& r, const Reader::Node& n, UtilityConfig& u) {
  r.object(n, {"kind", "ideal", "nadir", "references", "weights", "p", "q", "gamma", "J_eval"});
  r.get(n, "kind", u.kind);
  r.get(n, "ideal", u.ideal);
  r.get(n, "nadir", u.nadir);
  if (auto c = r.child(n, "references")) u.references = r.matrix(*c);
  r.get(n, "weights", u.weights);
  r.get(n, "p", u.p);
  r.get(n, "q", u.q);
  r.get(n, "gamma", u.gamma);
  r.get(n, "J_eval", u.J_eval);
}

ExperimentConfig read_config(const Reader& r) {
  ExperimentConfig c;
  const auto root = r.root();
  r.object(root, {"$schema", "name", "problem", "noise", "normalisation", "utility", "acquisition", "budget",
                  "initial_design", "candidates", "model", "seed", "replications", "front", "greedy"});
  r.get(root, "name", c.name);
  if (auto n = r.child(root, "problem")) {
    r.object(*n, {"name", "D", "M"});
    r.get(*n, "name", c.problem.name);
    r.get(*n, "D", c.problem.D);
    r.get(*n, "M", c.problem.M);
  }
  if (auto n = r.child(root, "noise")) {
    r.object(*n, {"sigma_fraction"});
    r.get(*n, "sigma_fraction", c.sigma_fraction);
  }
  if (auto n = r.child(root, "normalisation")) {
    r.object(*n, {"mode", "lower", "upper"});
    if (auto m = r.child(*n, "mode")) {
      const auto s = r.text(*m);
      if (s == "none") c.normalisation.mode = NormalisationMode::none;
      else if (s == "front") c.normalisation.mode = NormalisationMode::front;
      else if (s == "bounds") c.normalisation.mode = NormalisationMode::bounds;
      else r.fail(m->ptr, "mode must be none, front or bounds");
    }
    r.get(*n, "lower", c.normalisation.lower);
    r.get(*n, "upper", c.normalisation.upper);
  }
  if (auto n = r.child(root, "utility")) read_utility(r, *n, c.utility);
  if (auto n = r.child(root, "acquisition")) {
    auto& a = c.acquisition;
    r.object(*n, {"kind", "J", "H", "beta", "a_delta", "b_delta", "delta", "mixing", "resample"});
    if (auto k = r.child(*n, "kind")) {
      a.kind = checked(r, k->ptr, [&] { return acquisition_kind_from_string(r.text(*k)); });
    }
    r.get(*n, "J", a.J);
    r.get(*n, "H", a.H);
    r.get(*n, "beta", a.beta);
    r.get(*n, "a_delta", a.adjustment.a_delta);
    r.get(*n, "b_delta", a.adjustment.b_delta);
    r.get(*n, "delta", a.adjustment.delta);
    if (auto m = r.child(*n, "mixing")) {
      r.object(*m, {"rule", "p"});
      if (auto rule = r.child(*m, "rule")) {
        const auto s = r.text(*rule);
        if (s == "threshold") a.mixing.rule = MixingRule::threshold;
        else if (s == "bernoulli") a.mixing.rule = MixingRule::bernoulli;
        else r.fail(rule->ptr, "rule must be threshold or bernoulli");
      }
      r.get(*m, "p", a.mixing.p);
    }
    if (auto s = r.child(*n, "resample")) a.resample = checked(r, s->ptr, [&] { return resample_from_string(r.text(*s)); });
  }
  r.get(root, "budget", c.budget);
  if (auto n = r.child(root, "initial_design")) c.initial_design = static_cast<std::size_t>(r.count(*n));
  if (auto n = r.child(root, "candidates")) {
    r.object(*n, {"count", "polish_steps", "thompson_limit"});
    r.get(*n, "count", c.candidates.count);
    r.get(*n, "polish_steps", c.candidates.polish_steps);
    r.get(*n, "thompson_limit", c.candidates.thompson_limit);
  }
  if (auto n = r.child(root, "model")) {
    r.object(*n, {"fixed_noise", "starts", "max_evaluations", "fixed_lengthscale", "fixed_signal", "prior",
                  "prior_shape", "prior_rate"});
    if (auto v = r.child(*n, "fixed_noise")) c.model.fixed_noise = r.number(*v);
    r.get(*n, "starts", c.model.starts);
    r.get(*n, "max_evaluations", c.model.max_evaluations);
    if (auto v = r.child(*n, "fixed_lengthscale")) c.model.fixed_lengthscale = r.number(*v);
    r.get(*n, "fixed_signal", c.model.fixed_signal);
    if (auto v = r.child(*n, "prior")) {
      const auto s = r.text(*v);
      if (s == "none") c.model.lengthscale_prior.reset();
      else if (s != "gamma") r.fail(v->ptr, "prior must be gamma or none");
    }
    if (c.model.lengthscale_prior) {
      r.get(*n, "prior_shape", c.model.lengthscale_prior->shape);
      r.get(*n, "prior_rate", c.model.lengthscale_prior->rate);
    } else if (r.child(*n, "prior_shape") || r.child(*n, "prior_rate")) {
      r.fail(n->ptr, "prior_shape and prior_rate require prior gamma");
    }
  }
  if (auto n = r.child(root, "seed")) c.seed = r.count(*n);
  r.get(root, "replications", c.replications);
  if (auto n = r.child(root, "front")) {
    r.object(*n, {"resolution"});
    r.get(*n, "resolution", c.front_resolution);
  }
  if (auto n = r.child(root, "greedy")) {
    r.object(*n, {"pool", "J", "resample", "P", "delta"});
    r.get(*n, "pool", c.greedy.pool);
    r.get(*n, "J", c.greedy.J);
    if (auto s = r.child(*n, "resample")) {
      c.greedy.resample = checked(r, s->ptr, [&] { return resample_from_string(r.text(*s)); });
    }
    r.get(*n, "P", c.greedy.P);
    r.get(*n, "delta", c.greedy.delta);
  }
  return c;
}

void validate_normalisation(const NormalisationConfig& n, std::size_t M) {
  if (n.mode == NormalisationMode::bounds) {
    if (n.lower.size() != M || n.upper.size() != M) throw DimensionError("normalisation bounds must have M entries");
    ObjectiveTransform{ObjectiveVector(n.lower), ObjectiveVector(n.upper)}.validate();
  } else if (!n.lower.empty() || !n.upper.empty()) {
    throw std::invalid_argument("normalisation lower/upper apply only to mode bounds");
  }
}

// Validation failures are attributed to the closest section of the document.
void validate_located(const Reader& r, const ExperimentConfig& c) {
  checked(r, "/budget", [&] {
    if (c.budget < 1) throw std::invalid_argument("budget must be >= 1");
    return 0;
  });
  checked(r, "/replications", [&] {
    if (c.replications < 1) throw std::invalid_argument("replications must be >= 1");
    return 0;
  });
  checked(r, "/problem", [&] {
    (void)make_problem(c.problem.name, c.problem.D, c.problem.M);
    return 0;
  });
  const auto p = make_problem(c.problem.name, c.problem.D, c.problem.M);
  checked(r, "/noise", [&] {
    if (!(c.sigma_fraction >= 0.0)) throw std::invalid_argument("sigma_fraction must be >= 0");
    return 0;
  });
  checked(r, "/utility", [&] {
    (void)c.utility.build(p.M);
    return 0;
  });
  checked(r, "/normalisation", [&] {
    validate_normalisation(c.normalisation, p.M);
    return 0;
  });
  checked(r, "/acquisition", [&] {
    AcquisitionSpec s;
    s.kind = c.acquisition.kind;
    s.utility = c.utility.build(p.M);
    s.J = c.acquisition.J;
    s.H = c.acquisition.H;
    s.beta = c.acquisition.beta;
    s.adjustment = c.acquisition.adjustment;
    s.mixing = c.acquisition.mixing;
    s.validate();
    return 0;
  });
  checked(r, "", [&] {
    c.validate();
    return 0;
  });
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = {{"name", c.problem.name}, {"D", c.problem.D}, {"M", c.problem.M}};
  j["noise"] = {{"sigma_fraction", c.sigma_fraction}};
  j["normalisation"] = {{"mode", to_cstr(c.normalisation.mode)},
                        {"lower", c.normalisation.lower},
                        {"upper", c.normalisation.upper}};
  const auto& u = c.utility;
  j["utility"] = {{"kind", u.kind}, {"ideal", u.ideal}, {"nadir", u.nadir}, {"references", u.references},
                  {"weights", u.weights}, {"p", u.p}, {"q", u.q}, {"gamma", u.gamma}, {"J_eval", u.J_eval}};
  const auto& a = c.acquisition;
  j["acquisition"] = {{"kind", to_string(a.kind)},
                      {"J", a.J},
                      {"H", a.H},
                      {"beta", a.beta},
                      {"a_delta", a.adjustment.a_delta},
                      {"b_delta", a.adjustment.b_delta},
                      {"delta", a.adjustment.delta},
                      {"mixing", {{"rule", a.mixing.rule == MixingRule::threshold ? "threshold" : "bernoulli"},
                                  {"p", a.mixing.p}}},
                      {"resample", to_cstr(a.resample)}};
  j["budget"] = c.budget;
  j["initial_design"] = c.initial_design ? json(*c.initial_design) : json(nullptr);
  j["candidates"] = {{"count", c.candidates.count},
                     {"polish_steps", c.candidates.polish_steps},
                     {"thompson_limit", c.candidates.thompson_limit}};
  j["model"] = {{"fixed_noise", c.model.fixed_noise ? json(*c.model.fixed_noise) : json(nullptr)},
                {"starts", c.model.starts},
                {"max_evaluations", c.model.max_evaluations},
                {"fixed_lengthscale", c.model.fixed_lengthscale ? json(*c.model.fixed_lengthscale) : json(nullptr)},
                {"fixed_signal", c.model.fixed_signal},
                {"prior", c.model.lengthscale_prior ? "gamma" : "none"},
                {"prior_shape", c.model.lengthscale_prior ? json(c.model.lengthscale_prior->shape) : json(nullptr)},
                {"prior_rate", c.model.lengthscale_prior ? json(c.model.lengthscale_prior->rate) : json(nullptr)}};
  j["seed"] = c.seed;
  j["replications"] = c.replications;
  j["front"] = {{"resolution", c.front_resolution}};
  j["greedy"] = {{"pool", c.greedy.pool},
                 {"J", c.greedy.J},
                 {"resample", to_cstr(c.greedy.resample)},
                 {"P", c.greedy.P},
                 {"delta", c.greedy.delta}};
  return j;
}

std::vector<double> uniform_point(const Box& box, RandomStream& rng) {
  std::vector<double> x(box.dim());
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = rng.uniform(box.lower[d], box.upper[d]);
  return x;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

FitOptions fit_options(const Experiment& ex) {
  const auto& m = ex.config.model;
  FitOptions fo;
  fo.input_box = ex.problem.box;
  fo.starts = m.starts;
  fo.max_evaluations = m.max_evaluations;
  fo.fixed_noise = m.fixed_noise;
  fo.lengthscale_prior = m.lengthscale_prior;
  if (!fo.fixed_noise && ex.config.sigma_fraction == 0.0) fo.fixed_noise = 0.0;
  if (m.fixed_lengthscale) {
    GpHyperparams h;
    const double noise = fo.fixed_noise.value_or(1e-2);
    for (std::size_t k = 0; k < ex.problem.M; ++k) {
      h.outputs.push_back({std::vector<double>(ex.problem.D, *m.fixed_lengthscale), m.fixed_signal, noise});
    }
    fo.fixed = h;
  }
  return fo;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& message)
    : std::invalid_argument(with_location(source, line, message)), line_(line) {}

R2UtilitySpec UtilityConfig::build(std::size_t M) const {
  auto need = [&](const std::vector<double>& v, const char* what) {
    if (v.size() != M) throw DimensionError(std::string("utility: ") + what + " must have " + std::to_string(M) + " entries");
  };
  auto refs = [&] {
    if (references.empty()) throw std::invalid_argument("utility: references must be non-empty");
    ObjectiveSet set(M);
    for (const auto& r : references) {
      need(r, "each reference");
      set.insert(ObjectiveVector(r));
    }
    return set;
  };
  const std::vector<double> placeholder(M, 1.0 / static_cast<double>(M));
  R2UtilitySpec spec;
  if (kind == "hypervolume") {
    need(nadir, "nadir");
    spec = hypervolume_spec(nadir, J_eval);
  } else if (kind == "chebyshev") {
    need(ideal, "ideal");
    spec = standard_r2_spec(ideal, J_eval);
  } else if (kind == "aug_chebyshev") {
    need(ideal, "ideal");
    spec.base = AugChebyshev{ideal, placeholder, gamma};
    spec.dist = UniformSimplex{M};
  } else if (kind == "lp") {
    need(ideal, "ideal");
    spec.base = Lp{ideal, placeholder, p};
    spec.dist = UniformSimplex{M};
  } else if (kind == "linear") {
    spec.base = Linear{placeholder};
    spec.dist = UniformSimplex{M};
  } else if (kind == "igd" || kind == "igd_plus") {
    spec = igd_spec(refs(), p, q, kind == "igd_plus");
  } else if (kind == "d1") {
    need(weights, "weights");
    spec = d1_spec(refs(), weights);
  } else {
    throw std::invalid_argument("utility: unknown kind '" + kind + "'");
  }
  if (J_eval < 1) throw std::invalid_argument("utility: J_eval must be >= 1");
  spec.J = J_eval;
  spec.resample = ResamplePolicy::frozen;
  spec.validate();
  if (spec.dim() != M) throw DimensionError("utility: dimension does not match the problem");
  return spec;
}

void ExperimentConfig::validate_nested() const {
  const auto p = make_problem(problem.name, problem.D, problem.M);
  p.validate();
  if (!(sigma_fraction >= 0.0) || !std::isfinite(sigma_fraction)) {
    throw std::invalid_argument("sigma_fraction must be finite and >= 0");
  }
  validate_normalisation(normalisation, p.M);
  (void)utility.build(p.M);
  AcquisitionSpec s;
  s.kind = acquisition.kind;
  s.utility = utility.build(p.M);
  s.J = acquisition.J;
  s.H = acquisition.H;
  s.beta = acquisition.beta;
  s.adjustment = acquisition.adjustment;
  s.mixing = acquisition.mixing;
  s.validate();
  if (initial_design && *initial_design < 2) throw std::invalid_argument("initial_design must be >= 2");
  if (candidates.polish_steps > 1000) throw std::invalid_argument("candidates.polish_steps must be <= 1000");
  if (model.starts < 1 || model.max_evaluations < 1) throw std::invalid_argument("model: starts and max_evaluations must be >= 1");
  if (model.fixed_noise && !(*model.fixed_noise >= 0.0)) throw std::invalid_argument("model.fixed_noise must be >= 0");
  if (model.fixed_lengthscale && !(*model.fixed_lengthscale > 0.0)) {
    throw std::invalid_argument("model.fixed_lengthscale must be > 0");
  }
  if (!(model.fixed_signal > 0.0)) throw std::invalid_argument("model.fixed_signal must be > 0");
  if (model.lengthscale_prior && !(model.lengthscale_prior->shape > 0.0 && model.lengthscale_prior->rate > 0.0)) {
    throw std::invalid_argument("model: prior_shape and prior_rate must be > 0");
  }
  if (front_resolution < 1) throw std::invalid_argument("front.resolution must be >= 1");
  if (greedy.pool < 1 || greedy.J < 1) throw std::invalid_argument("greedy: pool and J must be >= 1");
  if (!(greedy.delta > 0.0 && greedy.delta < 1.0)) throw std::invalid_argument("greedy.delta must lie in (0, 1)");
}

void ExperimentConfig::validate() const {
  validate_nested();
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  const auto doc = parse_located(text, source);
  Reader reader(doc, source);
  auto config = read_config(reader);
  validate_located(reader, config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(path, 0, e.what());
  }
  return parse_config(text, path);
}

std::string canonical_json(const ExperimentConfig& config) { return to_json(config).dump(); }

std::string config_digest(const ExperimentConfig& config) { return hex16(fnv1a64(canonical_json(config))); }

// ---------------------------------------------------------------------------

Experiment prepare_experiment(const ExperimentConfig& config, const std::optional<std::string>& cache_dir) {
  config.validate_nested();
  Experiment ex;
  ex.config = config;
  ex.problem = make_problem(config.problem.name, config.problem.D, config.problem.M);
  ex.master_seed = config.seed;
  ex.digest = config_digest(config);
  const std::size_t M = ex.problem.M;

  RandomStream master(config.seed);
  auto front = reference_front(ex.problem, config.front_resolution, master, cache_dir);
  if (config.normalisation.mode == NormalisationMode::front) {
    std::vector<double> lo(M, std::numeric_limits<double>::infinity()), hi(M, -std::numeric_limits<double>::infinity());
    for (const auto& y : front.points) {
      for (std::size_t m = 0; m < M; ++m) {
        lo[m] = std::min(lo[m], y[m]);
        hi[m] = std::max(hi[m], y[m]);
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      if (!(hi[m] > lo[m])) throw std::runtime_error("reference front is degenerate in objective " + std::to_string(m));
    }
    ex.transform = ObjectiveTransform{ObjectiveVector(lo), ObjectiveVector(hi)};
  } else if (config.normalisation.mode == NormalisationMode::bounds) {
    ex.transform = ObjectiveTransform{ObjectiveVector(config.normalisation.lower),
                                      ObjectiveVector(config.normalisation.upper)};
  }

  ReferenceFront scaled = front;
  if (ex.transform) {
    ObjectiveSet pts(M);
    for (const auto& y : front.points) pts.insert(apply_transform(*ex.transform, y));
    scaled.points = pts;
  }
  scaled.utility_cache.clear();
  ex.front_size = scaled.points.size();

  ex.utility = config.utility.build(M);
  RandomStream bank_rng = master.child("scalarisation-bank").child("reporting");
  R2UtilitySpec reporting = ex.utility;
  if (auto exact = exact_utility(reporting)) {
    ex.reporter = std::shared_ptr<const SetUtility>(std::move(exact));
  } else {
    reporting = freeze(reporting, bank_rng);
    ex.reporter = std::shared_ptr<const SetUtility>(bank_utility(reporting, bank_rng, reporting.J));
  }
  ex.max_utility = max_utility(scaled, reporting, bank_rng, config.utility.J_eval);
  return ex;
}

ObjectiveVector normalised(const Experiment& experiment, const ObjectiveVector& y) {
  return experiment.transform ? apply_transform(*experiment.transform, y) : y;
}

double log_regret(double max_utility, double utility) { return std::log(std::max(max_utility - utility, 1e-12)); }

RunRecord bo_run(const Experiment& ex, const RandomStream& rng, bool timing, std::optional<std::size_t> budget) {
  const auto& cfg = ex.config;
  const auto& problem = ex.problem;
  const std::size_t N = budget.value_or(cfg.budget);

  RunRecord rec;
  rec.seed = rng.key();
  rec.digest = ex.digest;
  rec.initial_size = cfg.initial_size(problem.D);
  rec.D = problem.D;
  rec.M = problem.M;
  rec.max_utility = ex.max_utility;

  RandomStream init_rng = rng.child("initial-design");
  const RandomStream fit_rng = rng.child("model-fit");
  const RandomStream acq_rng = rng.child("acquisition");
  RandomStream noise_rng = rng.child("noise");
  RandomStream bank_rng = rng.child("scalarisation-bank");

  const NoiseWrapper noisy{problem, cfg.sigma_fraction};
  auto tracker = ex.reporter->tracker();
  Dataset data;

  auto record = [&](std::size_t iteration, const InputVector& x, double acq, double lambda, double ms) {
    const auto f = evaluate(problem, x);
    auto y = noisy.evaluate(x, noise_rng);
    tracker->add(normalised(ex, f).values());
    RunRow row;
    row.iteration = iteration;
    row.x.assign(x.begin(), x.end());
    row.y.assign(y.begin(), y.end());
    row.utility = tracker->utility();
    row.log_regret = log_regret(ex.max_utility, row.utility);
    row.acq_value = acq;
    row.lambda = lambda;
    row.millis = timing ? ms : 0.0;
    rec.rows.push_back(std::move(row));
    data.append(x, std::move(y));
  };

  for (std::size_t i = 0; i < rec.initial_size; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    InputVector x(uniform_point(problem.box, init_rng), problem.box);
    record(0, x, kNaN, kNaN, elapsed_ms(t0));
  }

  AcquisitionSpec spec;
  spec.kind = cfg.acquisition.kind;
  spec.utility = ex.utility;
  spec.utility.J = cfg.acquisition.J;
  spec.utility.sample_bank.reset();
  spec.utility.resample = cfg.acquisition.resample;
  if (cfg.acquisition.resample == ResamplePolicy::frozen) spec.utility = freeze(spec.utility, bank_rng);
  spec.J = cfg.acquisition.J;
  spec.H = cfg.acquisition.H;
  spec.beta = cfg.acquisition.beta;
  spec.adjustment = cfg.acquisition.adjustment;
  spec.mixing = cfg.acquisition.mixing;
  spec.transform = ex.transform;
  const FitOptions options = fit_options(ex);

  for (std::size_t n = 1; n <= N; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    RandomStream arng = acq_rng.child(n);
    if (spec.kind == AcquisitionKind::random) {
      InputVector x(uniform_point(problem.box, arng), problem.box);
      record(n, x, kNaN, kNaN, elapsed_ms(t0));
      continue;
    }
    try {
      RandomStream frng = fit_rng.child(n);
      const auto model = GpModel::fit(data, options, frng);
      const auto res = acquire(model, spec, cfg.candidates, problem.box, n, N, arng);
      record(n, res.x, res.value, res.lambda, elapsed_ms(t0));
    } catch (const std::runtime_error& e) {
      rec.error = "iteration " + std::to_string(n) + ": " + e.what();
      break;
    }
  }
  return rec;
}

RunRecord greedy_run(const Experiment& ex, const RandomStream& rng, BoundReport* bound, bool timing) {
  const auto& cfg = ex.config;
  const auto& problem = ex.problem;
  const std::size_t N = cfg.budget;
  const auto t0 = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.seed = rng.key();
  rec.digest = ex.digest;
  rec.initial_size = 0;
  rec.D = problem.D;
  rec.M = problem.M;
  rec.max_utility = ex.max_utility;

  RandomStream pool_rng = rng.child("pool");
  RandomStream greedy_rng = rng.child("greedy");
  CandidatePool pool;
  std::vector<ObjectiveVector> raw;
  for (std::size_t i = 0; i < cfg.greedy.pool; ++i) {
    InputVector x(uniform_point(problem.box, pool_rng), problem.box);
    raw.push_back(evaluate(problem, x));
    pool.images.push_back(normalised(ex, raw.back()));
    pool.inputs.push_back(std::move(x));
  }

  R2UtilitySpec spec = ex.utility;
  spec.sample_bank.reset();
  spec.resample = cfg.greedy.resample;
  const auto trace = approx_greedy_maximise(pool, spec, cfg.greedy.J, N, cfg.greedy.resample, greedy_rng,
                                            ex.reporter.get());
  const double ms = timing ? elapsed_ms(t0) : 0.0;
  for (std::size_t k = 0; k < trace.picks.size(); ++k) {
    const auto i = trace.picks[k];
    RunRow row;
    row.iteration = k + 1;
    row.x.assign(pool.inputs[i].begin(), pool.inputs[i].end());
    row.y.assign(raw[i].begin(), raw[i].end());
    row.utility = trace.utilities[k];
    row.log_regret = log_regret(ex.max_utility, row.utility);
    row.acq_value = trace.gains[k];
    row.lambda = kNaN;
    row.millis = k + 1 == trace.picks.size() ? ms : 0.0;
    rec.rows.push_back(std::move(row));
  }

  if (bound && cfg.greedy.P > 0) {
    const auto opt = brute_force_optimum(pool, *ex.reporter, cfg.greedy.P);
    // Constant cap: the spread of scalarised values over the pool under a
    // large bank stands in for sup - inf of s over atoms and pool points.
    RandomStream crng = rng.child("bound");
    const ScalarisationBank bank = draw_bank(spec, crng, 4096);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<double> vals(bank.size());
    for (const auto& y : pool.images) {
      bank.values(y.values(), vals);
      for (double v : vals) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    *bound = approx_bound_check(trace, opt.value, cfg.greedy.P, N, cfg.greedy.delta, cfg.greedy.J,
                                std::vector<double>(N, hi - lo), true);
  }
  return rec;
}

RegretCurve aggregate(const std::vector<RunRecord>& records) {
  RegretCurve curve;
  const RunRecord* first = nullptr;
  for (const auto& r : records) {
    if (r.failed()) {
      ++curve.failures;
      continue;
    }
    if (!first) first = &r;
    if (r.rows.size() != first->rows.size()) throw std::invalid_argument("aggregate: runs differ in length");
    ++curve.runs;
  }
  if (!first) return curve;
  const std::size_t L = first->rows.size();
  curve.mean.assign(L, 0.0);
  curve.std.assign(L, 0.0);
  for (std::size_t i = 0; i < L; ++i) curve.iteration.push_back(first->rows[i].iteration);
  const double R = static_cast<double>(curve.runs);
  for (std::size_t i = 0; i < L; ++i) {
    double s = 0.0;
    for (const auto& r : records) {
      if (!r.failed()) s += r.rows[i].log_regret;
    }
    const double mean = s / R;
    double ss = 0.0;
    for (const auto& r : records) {
      if (!r.failed()) ss += (r.rows[i].log_regret - mean) * (r.rows[i].log_regret - mean);
    }
    curve.mean[i] = mean;
    curve.std[i] = curve.runs > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
  }
  return curve;
}

Replication replicate(const Experiment& ex, std::size_t parallelism, RunMode mode, bool timing) {
  const std::size_t R = ex.config.replications;
  if (R < 1) throw std::invalid_argument("replicate: replications must be >= 1");
  const RandomStream master(ex.master_seed);
  Replication out;
  out.records.resize(R);
  const bool with_bounds = mode == RunMode::greedy && ex.config.greedy.P > 0;
  if (with_bounds) out.bounds.resize(R);
  std::vector<std::exception_ptr> errors(R);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t r = next++; r < R; r = next++) {
      try {
        const RandomStream rng = master.child("replication-" + std::to_string(r));
        if (mode == RunMode::bo) {
          out.records[r] = bo_run(ex, rng, timing);
        } else {
          out.records[r] = greedy_run(ex, rng, with_bounds ? &out.bounds[r] : nullptr, timing);
        }
        out.records[r].replication = r;
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, R);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.curve = aggregate(out.records);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence.

namespace {

std::vector<std::string> csv_columns(std::size_t D, std::size_t M) {
  std::vector<std::string> cols{"iteration"};
  for (std::size_t d = 0; d < D; ++d) cols.push_back("x_" + std::to_string(d));
  for (std::size_t m = 0; m < M; ++m) cols.push_back("y_" + std::to_string(m));
  for (const char* c : {"utility", "log_regret", "acq_value", "lambda_n", "millis"}) cols.emplace_back(c);
  return cols;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("parse_run_csv: bad number '" + s + "'");
  return v;
}

json bound_json(const BoundReport& b) {
  return {{"P", b.P}, {"N", b.N}, {"delta", b.delta}, {"J", b.J}, {"epsilon", b.epsilon},
          {"bound_rhs", b.bound_rhs}, {"achieved", b.achieved}, {"holds", b.holds}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string run_csv(const RunRecord& record) {
  std::string out;
  const auto cols = csv_columns(record.D, record.M);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& row : record.rows) {
    out += std::to_string(row.iteration);
    for (double v : row.x) out += "," + fmt_double(v);
    for (double v : row.y) out += "," + fmt_double(v);
    for (double v : {row.utility, row.log_regret, row.acq_value, row.lambda, row.millis}) out += "," + fmt_double(v);
    out += '\n';
  }
  return out;
}

RunRecord parse_run_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("parse_run_csv: empty document");
  const auto header = split(line, ',');
  RunRecord rec;
  for (const auto& h : header) {
    rec.D += h.rfind("x_", 0) == 0;
    rec.M += h.rfind("y_", 0) == 0;
  }
  if (header != csv_columns(rec.D, rec.M)) throw std::invalid_argument("parse_run_csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw std::invalid_argument("parse_run_csv: wrong number of cells");
    RunRow row;
    row.iteration = static_cast<std::size_t>(std::stoull(cells[0]));
    std::size_t c = 1;
    for (std::size_t d = 0; d < rec.D; ++d) row.x.push_back(parse_double(cells[c++]));
    for (std::size_t m = 0; m < rec.M; ++m) row.y.push_back(parse_double(cells[c++]));
    row.utility = parse_double(cells[c++]);
    row.log_regret = parse_double(cells[c++]);
    row.acq_value = parse_double(cells[c++]);
    row.lambda = parse_double(cells[c++]);
    row.millis = parse_double(cells[c++]);
    if (row.iteration == 0) ++rec.initial_size;
    rec.rows.push_back(std::move(row));
  }
  return rec;
}

std::string run_json(const RunRecord& record, const ExperimentConfig& config) {
  json j;
  j["columns"] = csv_columns(record.D, record.M);
  j["config"] = to_json(config);
  j["config_digest"] = record.digest;
  j["error"] = record.error ? json(*record.error) : json(nullptr);
  j["initial_size"] = record.initial_size;
  j["max_utility"] = record.max_utility;
  j["replication"] = record.replication;
  j["rows"] = record.rows.size();
  j["seed"] = hex16(record.seed);
  j["version"] = record.version;
  return j.dump(2) + "\n";
}

std::string curve_csv(const RegretCurve& curve) {
  std::string out = "row,iteration,mean_log_regret,std_log_regret\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(curve.iteration[i]) + "," + fmt_double(curve.mean[i]) + "," +
           fmt_double(curve.std[i]) + "\n";
  }
  return out;
}

void write_replication(const Replication& rep, const Experiment& ex, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& r : rep.records) {
    const auto stem = fs::path(dir) / ("run-" + std::to_string(r.replication));
    write_file(stem.string() + ".csv", run_csv(r));
    write_file(stem.string() + ".json", run_json(r, ex.config));
  }
  write_file(fs::path(dir) / "curve.csv", curve_csv(rep.curve));

  json s;
  s["config"] = to_json(ex.config);
  s["config_digest"] = ex.digest;
  s["version"] = kVersion;
  s["master_seed"] = ex.master_seed;
  s["replications"] = rep.records.size();
  s["runs"] = rep.curve.runs;
  s["failures"] = rep.curve.failures;
  s["max_utility"] = ex.max_utility;
  s["front_size"] = ex.front_size;
  s["reporter"] = ex.reporter->describe();
  json errors = json::array();
  for (const auto& r : rep.records) {
    if (r.error) errors.push_back({{"replication", r.replication}, {"error", *r.error}});
  }
  s["errors"] = errors;
  if (rep.curve.size() > 0) {
    s["final_mean_log_regret"] = finite_or_null(rep.curve.mean.back());
    s["final_std_log_regret"] = finite_or_null(rep.curve.std.back());
  }
  if (!rep.bounds.empty()) {
    json b = json::array();
    std::size_t holds = 0;
    for (const auto& r : rep.bounds) {
      b.push_back(bound_json(r));
      holds += r.holds;
    }
    s["bounds"] = b;
    s["bounds_holding"] = holds;
  }
  write_file(fs::path(dir) / "summary.json", s.dump(2) + "\n");
}

}  // namespace r2opt
