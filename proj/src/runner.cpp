#include "coarsel2/runner.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw InternalConsistencyError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string raw_sha256(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  return std::string(reinterpret_cast<const char*>(md), len);
}

constexpr char kCacheMagic[8] = {'C', 'L', '2', 'L', 'A', 'P', '1', '\n'};

template <class T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(const std::string& in, std::size_t& pos, T& v) {
  if (pos + sizeof v > in.size()) return false;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return true;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::atomic<unsigned> counter{0};
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id() << "." << counter++;
  const fs::path tmp = path.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigurationError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<Json> parallel_map(std::size_t count, int jobs,
                               const std::function<Json(std::size_t)>& fn) {
  std::vector<Json> out(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t i) {
    try {
      out[i] = fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------

OperatorCache::OperatorCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string OperatorCache::key(const Window& window, int degree, int scale) const {
  return sha256_hex(std::string("laplacian|") + kVersion + "|" + window.group()->fingerprint() +
                    "|" + window.fingerprint() + "|n=" + std::to_string(degree) +
                    "|R=" + std::to_string(scale));
}

fs::path OperatorCache::entry_path(const std::string& key) const { return dir_ / (key + ".lap"); }

std::vector<std::string> OperatorCache::warnings() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

std::optional<SparseMatrix> OperatorCache::load(const fs::path& path, std::size_t rows,
                                                std::string& problem) const {
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kCacheMagic + 32 ||
      std::memcmp(bytes.data(), kCacheMagic, sizeof kCacheMagic) != 0) {
    problem = "bad header";
    return std::nullopt;
  }
  const std::string body = bytes.substr(0, bytes.size() - 32);
  if (raw_sha256(body) != bytes.substr(bytes.size() - 32)) {
    problem = "checksum mismatch";
    return std::nullopt;
  }
  std::size_t pos = sizeof kCacheMagic;
  std::uint64_t r = 0, c = 0, nnz = 0;
  if (!get(body, pos, r) || !get(body, pos, c) || !get(body, pos, nnz) || r != rows || c != rows ||
      body.size() != pos + (r + 1) * 8 + nnz * 16) {
    problem = "shape mismatch";
    return std::nullopt;
  }
  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  std::vector<std::int64_t> outer(r + 1);
  for (auto& o : outer) get(body, pos, o);
  std::vector<std::int64_t> inner(nnz);
  for (auto& i : inner) get(body, pos, i);
  for (std::uint64_t row = 0; row < r; ++row) {
    if (outer[row] > outer[row + 1] || outer[row + 1] > static_cast<std::int64_t>(nnz)) {
      problem = "corrupt index";
      return std::nullopt;
    }
    for (std::int64_t k = outer[row]; k < outer[row + 1]; ++k) {
      double v = 0.0;
      std::memcpy(&v, body.data() + pos + static_cast<std::size_t>(k) * 8, 8);
      if (inner[k] < 0 || inner[k] >= static_cast<std::int64_t>(c)) {
        problem = "corrupt index";
        return std::nullopt;
      }
      triplets.emplace_back(static_cast<int>(row), static_cast<int>(inner[k]), v);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

void OperatorCache::store(const fs::path& path, const SparseMatrix& m) const {
  std::string body(kCacheMagic, sizeof kCacheMagic);
  put<std::uint64_t>(body, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(body, static_cast<std::uint64_t>(m.cols()));
  put<std::uint64_t>(body, static_cast<std::uint64_t>(m.nonZeros()));
  for (Eigen::Index i = 0; i <= m.rows(); ++i) put<std::int64_t>(body, m.outerIndexPtr()[i]);
  for (Eigen::Index k = 0; k < m.nonZeros(); ++k) put<std::int64_t>(body, m.innerIndexPtr()[k]);
  for (Eigen::Index k = 0; k < m.nonZeros(); ++k) put<double>(body, m.valuePtr()[k]);
  write_atomic(path, body + raw_sha256(body));
}

Laplacian OperatorCache::laplacian(const WindowPtr& window, int degree, int scale,
                                   std::size_t cap) {
  const auto k = key(*window, degree, scale);
  const auto path = entry_path(k);
  if (fs::exists(path)) {
    Laplacian lap;
    lap.degree = degree;
    lap.scale = scale;
    lap.space = enumerate_tuples(window, degree, scale, cap);
    std::string problem;
    if (auto m = load(path, lap.space->size(), problem)) {
      ++hits_;
      lap.matrix = std::move(*m);
      return lap;
    }
    ++rebuilt_;
    std::lock_guard lock(mutex_);
    warnings_.push_back("cache entry " + k + " is corrupt (" + problem + "); rebuilt");
  } else {
    ++misses_;
  }
  auto lap = coarsel2::laplacian(window, degree, scale, cap);
  store(path, lap.matrix);
  return lap;
}

std::string report_fingerprint(const Json& report) {
  Json copy = report;
  copy.erase("run_info");
  copy.erase("fingerprint");
  return sha256_hex(copy.dump());
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kKinds = {"verify-complex",   "verify-bridge", "verify-coarse-pair",
                                         "betti-finite",     "window-sweep",  "main-theorem-chain"};

struct Context {
  const Json& s;
  fs::path base;
  std::size_t cap = kDefaultTupleCap;
  int jobs = 1;
  OperatorCache* cache = nullptr;
  std::vector<std::string> warnings;

  Laplacian lap(const WindowPtr& w, int n, int r) const {
    return cache ? cache->laplacian(w, n, r, cap) : laplacian(w, n, r, cap);
  }
  LaplacianBuilder builder() const {
    return [this](const WindowPtr& w, int n, int r) { return lap(w, n, r); };
  }
};

const Json* field(const Json& j, const char* key) {
  return j.contains(key) && !j.at(key).is_null() ? &j.at(key) : nullptr;
}

std::int64_t get_int(const Json& j, const char* key, std::int64_t fallback) {
  const Json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ValidationError(std::string("\"") + key + "\" must be an integer");
  return v->get<std::int64_t>();
}

double get_double(const Json& j, const char* key, double fallback) {
  const Json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ValidationError(std::string("\"") + key + "\" must be a number");
  return v->get<double>();
}

std::vector<int> get_ints(const Json& j, const char* key, std::vector<int> fallback) {
  const Json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_array()) throw ValidationError(std::string("\"") + key + "\" must be a list");
  std::vector<int> out;
  for (const auto& x : *v) {
    if (!x.is_number_integer()) throw ValidationError(std::string("\"") + key + "\" must hold integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::uint64_t get_seed(const Json& j) {
  const Json* v = field(j, "seed");
  if (!v || !v->is_number_integer() || v->get<std::int64_t>() < 0)
    throw ValidationError("scenario needs an explicit non-negative integer \"seed\"");
  return v->get<std::uint64_t>();
}

int get_trials(const Json& j, int fallback) {
  const auto t = get_int(j, "trials", fallback);
  if (t < 1 || t > 100000) throw ValidationError("\"trials\" must lie in 1..100000");
  return static_cast<int>(t);
}

void check_degrees(const std::vector<int>& degrees, int max) {
  for (int n : degrees)
    if (n < 0 || n > max)
      throw ValidationError("degree " + std::to_string(n) + " outside 0.." + std::to_string(max));
}

Json check(const std::string& name, bool passed, std::optional<double> residual = std::nullopt,
           std::optional<double> tolerance = std::nullopt, Json extra = Json::object()) {
  Json c = {{"name", name}, {"passed", passed}};
  if (residual) c["residual"] = number(*residual);
  if (tolerance) c["tolerance"] = *tolerance;
  if (!extra.empty()) c["detail"] = std::move(extra);
  return c;
}

// Task output: {"checks": [...], "result": ...}.
Json task(Json checks, Json result) { return {{"checks", std::move(checks)}, {"result", std::move(result)}}; }

GroupPtr scenario_group(const Context& ctx, const char* key = "group") {
  const Json* g = field(ctx.s, key);
  if (!g) throw ValidationError(std::string("scenario needs \"") + key + "\"");
  return build_group(parse_group_spec(*g, ctx.base));
}

CoarsePairSpec scenario_pair(const Context& ctx) {
  if (const Json* m = field(ctx.s, "map")) return parse_coarse_pair(*m, ctx.base);
  if (const Json* p = field(ctx.s, "map_file")) {
    const fs::path rel = p->get<std::string>();
    const auto path = rel.is_absolute() ? rel : ctx.base / rel;
    return parse_coarse_pair(read_json_file(path), path.parent_path());
  }
  throw ValidationError("scenario needs \"map\" or \"map_file\"");
}

std::vector<std::pair<int, int>> scenario_kernels(const Json& s) {
  const Json* k = field(s, "kernels");
  if (!k) return {{1, 1}};
  std::vector<std::pair<int, int>> out;
  for (const auto& p : *k) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      throw ValidationError("\"kernels\" entries are [c, c'] radius pairs");
    out.emplace_back(p[0].get<int>(), p[1].get<int>());
  }
  return out;
}

double max_abs_values(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// ---------------------------------------------------------------------------

Json run_verify_complex(Context& ctx, Json& checks) {
  const auto group = scenario_group(ctx);
  const auto window = parse_window(field(ctx.s, "window"), group);
  const auto degrees = get_ints(ctx.s, "degrees", {0, 1});
  const auto scales = get_ints(ctx.s, "scales", {1, 2, 3});
  check_degrees(degrees, kMaxDegree - 1);
  const int trials = get_trials(ctx.s, 100);
  const double tol = get_double(ctx.s, "tolerance", 1e-12);
  const auto seed = get_seed(ctx.s);

  std::vector<std::pair<int, int>> jobs;
  for (int n : degrees)
    for (int r : scales) {
      if (r < 0) throw ValidationError("scales must be non-negative");
      jobs.emplace_back(n, r);
    }
  auto parts = parallel_map(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const auto [n, r] = jobs[i];
    const auto c0 = enumerate_tuples(window, n, r, ctx.cap);
    const auto c1 = enumerate_tuples(window, n + 1, r, ctx.cap);
    const auto c2 = enumerate_tuples(window, n + 2, r, ctx.cap);
    const auto d0 = coboundary_matrix(c0, c1);
    const auto d1 = coboundary_matrix(c1, c2);
    const auto d0_star = adjoint(d0);
    double dd = 0.0, adj = 0.0, lin = 0.0, cont = -std::numeric_limits<double>::infinity();
    double literal = -std::numeric_limits<double>::infinity();
    // Each face term is bounded by sqrt(mu(B(R))): a tuple of degree n
    // extends to at most |B(R)| tuples of degree n+1.
    const double face_bound = std::sqrt(group->measure_weight() * static_cast<double>(group->ball_size(r)));
    for (int t = 0; t < trials; ++t) {
      const auto a = random_cochain(c0, seed + static_cast<std::uint64_t>(t));
      const auto b = random_cochain(c0, seed + static_cast<std::uint64_t>(t) + 7919);
      const auto y = random_cochain(c1, seed + static_cast<std::uint64_t>(t) + 104729);
      const auto da = d0.apply(a);
      dd = std::max(dd, max_abs(d1.apply(da)));
      const double lhs = inner_product(da, y);
      const double rhs = inner_product(a, d0_star.apply(y));
      adj = std::max(adj, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
      const Cochain mix(c0, 0.75 * a.values() - 1.5 * b.values());
      lin = std::max(lin, max_abs_values(d0.apply(mix).values() - 0.75 * da.values() +
                                         1.5 * d0.apply(b).values()));
      cont = std::max(cont, seminorm(da, r) - (n + 2) * face_bound * seminorm(a, r));
      literal = std::max(literal, seminorm(da, r) - (n + 2) * seminorm(a, r));
    }
    const std::string at = "(n=" + std::to_string(n) + ", R=" + std::to_string(r) + ")";
    Json cs = Json::array();
    cs.push_back(check("d-squared-zero " + at, dd <= tol, dd, tol));
    cs.push_back(check("adjoint-identity " + at, adj <= tol, adj, tol,
                       {{"measure", "relative to max(1, |<d a, y>|)"}}));
    cs.push_back(check("linearity " + at, lin <= tol, lin, tol));
    cs.push_back(check("coboundary-continuity " + at, cont <= 1e-12, cont, 1e-12,
                       {{"bound", "||d a||_R <= (n+2) sqrt(mu(B(R))) ||a||_R"},
                        {"face_bound", face_bound},
                        {"max_excess_without_ball_factor", literal}}));
    return task(cs, {{"degree", n},
                     {"scale", r},
                     {"tuples", {c0->size(), c1->size(), c2->size()}},
                     {"max_dd_residual", dd}});
  });
  Json results = Json::array();
  for (auto& p : parts) {
    for (auto& c : p["checks"]) checks.push_back(c);
    results.push_back(p["result"]);
  }
  return {{"window_size", window->size()}, {"instances", results}};
}

// Bridge identities for one finite group and degree.
Json bridge_task(const GroupPtr& group, int n, int trials, std::uint64_t seed, double tol,
                 const std::vector<int>& chain_scales, std::optional<int> smoothing_radius,
                 std::size_t cap) {
  const auto whole = Window::whole(group);
  const int diam = whole->diameter();
  const auto c0 = enumerate_tuples(whole, n, diam, cap);
  const auto c1 = enumerate_tuples(whole, n + 1, diam, cap);
  const auto d = coboundary_matrix(c0, c1);
  double em = 0.0, me = 0.0, ed = 0.0, md = 0.0;
  bool e_chain = true, m_chain = true;
  Json chains = Json::array();
  for (int t = 0; t < trials; ++t) {
    const auto beta = random_cochain(c0, seed + static_cast<std::uint64_t>(t));
    const auto alpha = induce_M(beta);
    em = std::max(em, max_abs_values(evaluate_E(alpha, c0).values() - beta.values()));
    const auto again = induce_M(evaluate_E(alpha, c0));
    me = std::max(me, max_abs_values(again.data().values() - alpha.data().values()));
    ed = std::max(ed, max_abs_values(evaluate_E(l2_coboundary(alpha), c1).values() -
                                     d.apply(evaluate_E(alpha, c0)).values()));
    md = std::max(md, max_abs_values(induce_M(d.apply(beta)).data().values() -
                                     l2_coboundary(alpha).data().values()));
    for (int r : chain_scales) {
      const auto e = e_norm_chain(alpha, r);
      const auto m = m_norm_chain(beta, r);
      e_chain = e_chain && e.holds();
      m_chain = m_chain && m.holds();
      if (t == 0)
        chains.push_back({{"scale", r},
                          {"E", {{"evaluated", e.evaluated}, {"local", e.local}, {"global", e.global}}},
                          {"M", {{"coarse", m.coarse}, {"induced", m.induced}}}});
    }
  }
  const std::string at = "(" + group->fingerprint() + ", n=" + std::to_string(n) + ")";
  Json cs = Json::array();
  cs.push_back(check("E-after-M-identity " + at, em <= tol, em, tol));
  cs.push_back(check("M-after-E-identity " + at, me <= tol, me, tol));
  cs.push_back(check("E-commutes-with-d " + at, ed <= tol, ed, tol));
  cs.push_back(check("M-commutes-with-d " + at, md <= tol, md, tol));
  cs.push_back(check("E-norm-chain " + at, e_chain));
  cs.push_back(check("M-norm-chain " + at, m_chain));
  Json subs = Json::array();
  for (int r : chain_scales) {
    const auto sc = check_substitutions(group, n, r);
    const bool ok = sc.automorphism && sc.m_bijective && sc.m_image_contained && sc.m_value_preserving &&
                    sc.variant_bijective && sc.variant_image_contained;
    subs.push_back({{"scale", r},
                    {"automorphism", sc.automorphism},
                    {"m_bijective", sc.m_bijective},
                    {"m_image_contained", sc.m_image_contained},
                    {"m_value_preserving", sc.m_value_preserving},
                    {"variant_bijective", sc.variant_bijective},
                    {"variant_image_contained", sc.variant_image_contained}});
    cs.push_back(check("substitutions " + at + " R=" + std::to_string(r), ok));
  }
  Json result = {{"group", group->fingerprint()},
                 {"degree", n},
                 {"max_EM_residual", em},
                 {"max_ME_residual", me},
                 {"norm_chains", chains},
                 {"substitutions", subs}};
  if (smoothing_radius) {
    const SmoothingKernel chi(group, *smoothing_radius);
    const auto r0 = smoothing_operator(chi, c0);
    const auto r1 = smoothing_operator(chi, c1);
    const auto lhs = compose(d, r0);
    const auto rhs = compose(r1, d);
    double comm = 0.0, valued = 0.0;
    for (int t = 0; t < trials; ++t) {
      const auto a = random_cochain(c0, seed + 31337 + static_cast<std::uint64_t>(t));
      comm = std::max(comm, max_abs_values(lhs.apply(a).values() - rhs.apply(a).values()));
      if (t < 3) {
        const ValuedCochain f(group, n, induce_M(a).data().values() +
                                            Eigen::VectorXd::LinSpaced(induce_M(a).data().values().size(), -1.0, 1.0));
        valued = std::max(valued, max_abs_values(smoothing_R(chi, l2_coboundary(f)).values() -
                                                 l2_coboundary(smoothing_R(chi, f)).values()));
      }
    }
    const auto lap = laplacian(whole, n, diam, cap);
    const auto harmonic = harmonic_space(lap);
    double proj = 0.0;
    for (const auto& h : harmonic.basis) {
      const Cochain diff(c0, r0.apply(h).values() - h.values());
      const auto p = project(harmonic, diff);
      proj = std::max(proj, std::sqrt(inner_product(p, p)));
    }
    cs.push_back(check("smoothing-commutes-with-d " + at, comm <= tol, comm, tol));
    cs.push_back(check("valued-smoothing-commutes-with-d " + at, valued <= tol, valued, tol));
    cs.push_back(check("smoothing-induces-identity " + at, proj <= 1e-8, proj, 1e-8));
    result["smoothing"] = {{"radius", *smoothing_radius},
                           {"harmonic_count", harmonic.basis.size()},
                           {"max_harmonic_projection", proj}};
  }
  return task(cs, result);
}

Json run_verify_bridge(Context& ctx, Json& checks) {
  const auto group = scenario_group(ctx);
  if (!group->is_finite()) throw ValidationError("verify-bridge needs a finite group");
  const auto degrees = get_ints(ctx.s, "degrees", {0, 1, 2});
  check_degrees(degrees, kMaxDegree - 1);
  const int trials = get_trials(ctx.s, 50);
  const double tol = get_double(ctx.s, "tolerance", 1e-12);
  const auto seed = get_seed(ctx.s);
  const auto scales = get_ints(ctx.s, "scales", {1});
  std::optional<int> radius;
  if (field(ctx.s, "smoothing_radius")) radius = static_cast<int>(get_int(ctx.s, "smoothing_radius", 1));
  auto parts = parallel_map(degrees.size(), ctx.jobs, [&](std::size_t i) {
    return bridge_task(group, degrees[i], trials, seed, tol, scales, radius, ctx.cap);
  });
  Json results = Json::array();
  for (auto& p : parts) {
    for (auto& c : p["checks"]) checks.push_back(c);
    results.push_back(p["result"]);
  }
  return {{"instances", results}};
}

Json kernel_checks(const SmoothingKernel& chi, const Window& w, const std::string& label) {
  bool rows = true, sym = true;
  for (const auto& x : w.elements()) {
    rows = rows && chi.row_sum(x) == Rational(1);
    for (const auto& y : w.elements()) sym = sym && chi.mass(x, y) == chi.mass(y, x);
  }
  Json cs = Json::array();
  cs.push_back(check("kernel-row-sums-exact " + label, rows));
  cs.push_back(check("kernel-symmetry " + label, sym));
  return cs;
}

Json measurablize_json(const CoarseMap& f, double t, const std::string& label, Json& cs) {
  try {
    const auto m = measurablize(f, t);
    cs.push_back(check("measurablization " + label + " t=" + std::to_string(static_cast<int>(t)), true));
    return {{"t", t},
            {"cells", m.cells.size()},
            {"max_closeness", m.max_closeness},
            {"closeness_bound", m.closeness_bound},
            {"min_pair_slack", m.min_pair_slack}};
  } catch (const InternalConsistencyError& e) {
    cs.push_back(check("measurablization " + label, false, std::nullopt, std::nullopt,
                       {{"error", e.what()}}));
    return {{"t", t}, {"error", e.what()}};
  }
}

struct PairTask {
  int c = 0;
  int c_prime = 0;
  int degree = 0;
  int scale = 0;
};

Json coarse_pair_task(const CoarsePairSpec& pair, const PairTask& pt, int trials,
                      std::uint64_t seed, double tol, double norm_slack, std::size_t cap) {
  const SmoothingKernel chi(pair.source, pt.c);
  const SmoothingKernel chi_t(pair.target, pt.c_prime);
  const CoarseSetup setup{pair.forward, *pair.inverse, chi, chi_t};
  const std::string at = "(c=" + std::to_string(pt.c) + ", c'=" + std::to_string(pt.c_prime) +
                         ", n=" + std::to_string(pt.degree) + ", R=" + std::to_string(pt.scale) + ")";
  Json cs = Json::array();
  Json result = {{"c", pt.c}, {"c_prime", pt.c_prime}, {"degree", pt.degree}, {"scale", pt.scale}};

  const auto fwd = verify_homotopy_identity(setup, pt.degree, pt.scale, trials, seed, cap);
  const auto bwd = verify_homotopy_identity(setup.reversed(), pt.degree, pt.scale, trials, seed, cap);
  auto relation_checks = [&](const HomotopyReport& r, const std::string& side) {
    for (const auto& rel : r.relations)
      cs.push_back(check("relation " + rel.name + " on " + side + " " + at,
                         rel.max_residual <= tol, rel.max_residual, tol));
    cs.push_back(check("homotopy-identity on " + side + " " + at, r.passed(tol),
                       r.homotopy_residual, tol, {{"interior_rows", r.interior_rows}}));
  };
  relation_checks(fwd, "target");
  relation_checks(bwd, "source");
  result["homotopy_target"] = to_json(fwd);
  result["homotopy_source"] = to_json(bwd);

  const auto cm_f = verify_cochain_map(pair.forward, chi_t, pt.degree, pt.scale, trials, seed, cap);
  const auto cm_g = verify_cochain_map(*pair.inverse, chi, pt.degree, pt.scale, trials, seed, cap);
  cs.push_back(check("cochain-map f " + at, cm_f.max_residual <= 1e-12, cm_f.max_residual, 1e-12));
  cs.push_back(check("cochain-map g " + at, cm_g.max_residual <= 1e-12, cm_g.max_residual, 1e-12));
  result["cochain_map_f"] = to_json(cm_f);
  result["cochain_map_g"] = to_json(cm_g);

  const auto nb_f = verify_norm_bound(pair.forward, chi_t, pt.degree, pt.scale, trials, seed, norm_slack, cap);
  const auto nb_g = verify_norm_bound(*pair.inverse, chi, pt.degree, pt.scale, trials, seed, norm_slack, cap);
  for (const auto& [nb, name] : {std::pair{&nb_f, "f"}, std::pair{&nb_g, "g"}}) {
    cs.push_back(check(std::string("norm-bound ") + name + " " + at, nb->literal_violations == 0,
                       nb->max_literal_excess, norm_slack,
                       {{"bound", "||f* a||_R <= ||a||_{a(R)+c'}"}, {"violations", nb->literal_violations}}));
    cs.push_back(check(std::string("norm-bound-fibre ") + name + " " + at, nb->fiber_violations == 0,
                       nb->max_fiber_excess, norm_slack,
                       {{"bound", "||f* a||_R^2 <= Phi^{n+1} ||a||^2_{floor(a(R))+2c'}"},
                        {"Phi", nb->fiber_constant}}));
  }
  result["norm_bound_f"] = to_json(nb_f);
  result["norm_bound_g"] = to_json(nb_g);

  if (pair.source_window->is_whole_group() && pair.target_window->is_whole_group()) {
    const int r = std::max({pt.scale, pair.source_window->diameter(), pair.target_window->diameter()});
    const auto ind_t = verify_induced_identity(setup, pt.degree, r, kDefaultHarmonicTolerance, cap);
    const auto ind_s = verify_induced_identity(setup.reversed(), pt.degree, r, kDefaultHarmonicTolerance, cap);
    cs.push_back(check("induced-identity on target " + at, ind_t.max_projection <= 1e-8, ind_t.max_projection, 1e-8));
    cs.push_back(check("induced-identity on source " + at, ind_s.max_projection <= 1e-8, ind_s.max_projection, 1e-8));
    result["induced_identity"] = {{"target_harmonic", ind_t.harmonic_count},
                                  {"target_projection", ind_t.max_projection},
                                  {"source_harmonic", ind_s.harmonic_count},
                                  {"source_projection", ind_s.max_projection}};
  }
  return task(cs, result);
}

Json run_verify_coarse_pair(Context& ctx, Json& checks) {
  const auto pair = scenario_pair(ctx);
  if (!pair.inverse) throw ValidationError("verify-coarse-pair needs an \"inverse\" map");
  const auto degrees = get_ints(ctx.s, "degrees", {0, 1});
  check_degrees(degrees, kMaxDegree);
  const auto scales = get_ints(ctx.s, "scales", {1});
  const int trials = get_trials(ctx.s, 50);
  const double tol = get_double(ctx.s, "tolerance", 1e-10);
  const double slack = get_double(ctx.s, "norm_slack", 1e-12);
  const auto seed = get_seed(ctx.s);

  const auto closeness = verify_coarse_pair(pair.forward, *pair.inverse, pair.closeness);
  checks.push_back(check("closeness", closeness.passed, std::nullopt, std::nullopt, to_json(closeness)));

  Json meas = Json::array();
  for (int t : get_ints(ctx.s, "measurablize", {0, 1, 2})) {
    meas.push_back(measurablize_json(pair.forward, t, "f", checks));
    meas.push_back(measurablize_json(*pair.inverse, t, "g", checks));
  }

  std::vector<PairTask> tasks;
  for (const auto& [c, cp] : scenario_kernels(ctx.s)) {
    for (auto& k : kernel_checks(SmoothingKernel(pair.source, c), *pair.source_window,
                                 "chi (c=" + std::to_string(c) + ")"))
      checks.push_back(k);
    for (auto& k : kernel_checks(SmoothingKernel(pair.target, cp), *pair.target_window,
                                 "chi' (c'=" + std::to_string(cp) + ")"))
      checks.push_back(k);
    for (int n : degrees)
      for (int r : scales) tasks.push_back({c, cp, n, r});
  }
  auto parts = parallel_map(tasks.size(), ctx.jobs, [&](std::size_t i) {
    return coarse_pair_task(pair, tasks[i], trials, seed, tol, slack, ctx.cap);
  });
  Json results = Json::array();
  for (auto& p : parts) {
    for (auto& c : p["checks"]) checks.push_back(c);
    results.push_back(p["result"]);
  }
  return {{"closeness", to_json(closeness)},
          {"control_f", pair.forward.control().breakpoints()},
          {"control_g", pair.inverse->control().breakpoints()},
          {"measurablization", meas},
          {"instances", results}};
}

// Vanishing and harmonic data for one finite group and degree.
Json betti_task(const Context& ctx, const GroupPtr& group, int n, int scale, double eps,
                std::optional<double> expected, const std::string& tables_dir) {
  const auto whole = Window::whole(group);
  const auto lap = ctx.lap(whole, n, scale);
  const auto harmonic = harmonic_space(lap, eps, EigenMethod::kDense);
  const auto count = harmonic.report.harmonic_count;
  const double vn = vn_dimension_finite(*group, count);
  const auto upper = enumerate_tuples(whole, n + 1, scale, ctx.cap);
  const auto d = coboundary_matrix(lap.space, upper);
  double cocycle = 0.0;
  for (const auto& h : harmonic.basis)
    cocycle = std::max(cocycle, std::sqrt(inner_product(d.apply(h), d.apply(h)) / inner_product(h, h)));
  const double min_eig = harmonic.report.eigenvalues.empty() ? 0.0 : harmonic.report.eigenvalues.front();
  const SparseMatrix asym = SparseMatrix(lap.matrix.transpose()) - lap.matrix;
  const double sym = asym.nonZeros() ? Eigen::Map<const Eigen::VectorXd>(asym.valuePtr(), asym.nonZeros()).cwiseAbs().maxCoeff() : 0.0;
  const auto hodge = hodge_bookkeeping(whole, n, scale, eps, ctx.cap);

  const std::string at = "(" + group->fingerprint() + ", n=" + std::to_string(n) + ")";
  Json cs = Json::array();
  cs.push_back(check("vanishing-iff-harmonic-zero " + at, (vn == 0.0) == (count == 0), std::nullopt, std::nullopt,
                     {{"vn_dimension", vn}, {"harmonic_count", count}}));
  cs.push_back(check("laplacian-psd " + at, min_eig >= -1e-12, min_eig, -1e-12));
  cs.push_back(check("laplacian-symmetric " + at, sym <= 1e-12, sym, 1e-12));
  cs.push_back(check("harmonic-cocycles " + at, cocycle <= 1e-8, cocycle, 1e-8));
  cs.push_back(check("hodge-bookkeeping " + at, hodge.consistent, std::nullopt, std::nullopt,
                     {{"kernel_dimension", hodge.kernel_dimension},
                      {"harmonic_count", hodge.harmonic_count},
                      {"lower_rank", hodge.lower_rank}}));
  if (expected)
    cs.push_back(check("expected-betti " + at, std::abs(vn - *expected) <= 1e-9, std::abs(vn - *expected), 1e-9,
                       {{"expected", *expected}}));
  if (!tables_dir.empty()) {
    std::ostringstream os;
    write_eigenvalues_csv(harmonic.report, os);
    write_atomic(fs::path(tables_dir) / ("eigenvalues_n" + std::to_string(n) + ".csv"), os.str());
  }
  return task(cs, {{"degree", n},
                   {"scale", scale},
                   {"harmonic_count", count},
                   {"vn_dimension", vn},
                   {"vanishing", count == 0},
                   {"spectrum", to_json(harmonic.report)}});
}

std::string tables_dir(const Context& ctx) {
  const Json* t = field(ctx.s, "tables_dir");
  if (!t) return {};
  const fs::path p = t->get<std::string>();
  return (p.is_absolute() ? p : ctx.base / p).string();
}

Json run_betti_finite(Context& ctx, Json& checks) {
  const auto group = scenario_group(ctx);
  if (!group->is_finite()) throw ValidationError("betti-finite needs a finite group");
  const auto degrees = get_ints(ctx.s, "degrees", {0, 1, 2});
  check_degrees(degrees, kMaxDegree);
  const int diam = static_cast<int>(group->diameter());
  const int scale = static_cast<int>(get_int(ctx.s, "scale", diam));
  if (scale < diam)
    throw ValidationError("betti-finite needs scale >= the group diameter " + std::to_string(diam));
  const double eps = get_double(ctx.s, "tolerance", kDefaultHarmonicTolerance);
  const Json* expected = field(ctx.s, "expected");
  const auto tables = tables_dir(ctx);
  auto parts = parallel_map(degrees.size(), ctx.jobs, [&](std::size_t i) {
    std::optional<double> exp;
    const auto key = std::to_string(degrees[i]);
    if (expected && expected->contains(key)) exp = expected->at(key).get<double>();
    return betti_task(ctx, group, degrees[i], scale, eps, exp, tables);
  });
  Json results = Json::array();
  for (auto& p : parts) {
    for (auto& c : p["checks"]) checks.push_back(c);
    results.push_back(p["result"]);
  }
  return {{"group", group->fingerprint()}, {"order", group->order()}, {"degrees", results}};
}

SweepOptions sweep_options(const Json& s, std::size_t cap) {
  SweepOptions o;
  o.tolerance = get_double(s, "tolerance", o.tolerance);
  o.threshold = get_double(s, "threshold", o.threshold);
  o.stability = get_double(s, "stability", o.stability);
  o.cap = cap;
  const std::string method = field(s, "method") ? s.at("method").get<std::string>() : "auto";
  if (method == "dense") o.method = EigenMethod::kDense;
  else if (method == "iterative") o.method = EigenMethod::kIterative;
  else if (method != "auto") throw ValidationError("method must be auto, dense or iterative");
  return o;
}

SweepResult parallel_sweep(const Context& ctx, const GroupPtr& group, int n, int scale,
                           const std::vector<int>& radii, const SweepOptions& opts) {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) throw ValidationError("window radii must be increasing");
  auto parts = parallel_map(radii.size(), ctx.jobs, [&](std::size_t i) -> Json {
    try {
      const auto w = Window::ball(group, radii[i]);
      return {{"estimate", to_json(estimate_dimension(w, radii[i], n, scale, opts, ctx.builder()))}};
    } catch (const CapError& e) {
      return {{"error", e.what()}};
    }
  });
  std::vector<DimensionEstimate> estimates;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].contains("error")) {
      warnings.push_back("window radius " + std::to_string(radii[i]) +
                         " skipped, sweep truncated: " + parts[i]["error"].get<std::string>());
      break;
    }
    const auto& e = parts[i]["estimate"];
    DimensionEstimate d;
    d.group = e["group"];
    d.degree = e["degree"];
    d.scale = e["scale"];
    d.window_radius = e["window_radius"];
    d.window_size = e["window_size"];
    d.tuple_count = e["tuple_count"];
    d.raw_dimension = e["raw_dimension"];
    d.window_measure = e["window_measure"];
    d.normalized_dimension = e["normalized_dimension"];
    estimates.push_back(d);
  }
  return summarize_sweep(std::move(estimates), std::move(warnings), opts);
}

Json sweep_json(const SweepResult& r) {
  Json est = Json::array();
  for (const auto& e : r.estimates) est.push_back(to_json(e));
  return {{"estimates", est},
          {"verdict", to_string(r.verdict)},
          {"non_increasing", r.non_increasing},
          {"strictly_decreasing", r.strictly_decreasing},
          {"warnings", r.warnings}};
}

Json run_window_sweep(Context& ctx, Json& checks) {
  const auto group = scenario_group(ctx);
  const int n = static_cast<int>(get_int(ctx.s, "degree", 0));
  check_degrees({n}, kMaxDegree);
  const int scale = static_cast<int>(get_int(ctx.s, "scale", 1));
  const auto radii = get_ints(ctx.s, "radii", {4, 8, 16, 32});
  const auto opts = sweep_options(ctx.s, ctx.cap);
  const auto r = parallel_sweep(ctx, group, n, scale, radii, opts);
  for (const auto& w : r.warnings) ctx.warnings.push_back(w);
  checks.push_back(check("sweep-complete", r.estimates.size() == radii.size(), std::nullopt, std::nullopt,
                         {{"windows", r.estimates.size()}, {"requested", radii.size()}}));
  if (const Json* v = field(ctx.s, "expect_verdict"))
    checks.push_back(check("verdict", to_string(r.verdict) == v->get<std::string>(), std::nullopt, std::nullopt,
                           {{"expected", *v}, {"actual", to_string(r.verdict)}}));
  if (const Json* v = field(ctx.s, "expect_normalized")) {
    double worst = v->size() == r.estimates.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < std::min(v->size(), r.estimates.size()); ++i)
      worst = std::max(worst, std::abs((*v)[i].get<double>() - r.estimates[i].normalized_dimension));
    checks.push_back(check("normalized-dimensions", worst <= 1e-9, worst, 1e-9));
  }
  if (field(ctx.s, "expect_strictly_decreasing") && ctx.s.at("expect_strictly_decreasing").get<bool>())
    checks.push_back(check("strictly-decreasing", r.strictly_decreasing));
  const auto tables = tables_dir(ctx);
  if (!tables.empty()) {
    std::ostringstream os;
    write_estimates_csv(r.estimates, os);
    write_atomic(fs::path(tables) / "sweep.csv", os.str());
  }
  return sweep_json(r);
}

// ---------------------------------------------------------------------------

Json run_main_chain(Context& ctx, Json& checks) {
  const auto pair = scenario_pair(ctx);
  if (!pair.inverse) throw ValidationError("main-theorem-chain needs an \"inverse\" map");
  const bool exact = pair.source->is_finite() && pair.target->is_finite() &&
                     pair.source_window->is_whole_group() && pair.target_window->is_whole_group();
  const std::string regime = field(ctx.s, "regime") ? ctx.s.at("regime").get<std::string>()
                                                    : (exact ? "exact" : "truncated");
  if (regime == "exact" && !exact)
    throw ValidationError("the exact regime needs two finite groups on whole windows");
  if (regime != "exact" && regime != "truncated")
    throw ValidationError("regime must be exact or truncated");
  const auto degrees = get_ints(ctx.s, "degrees", regime == "exact" ? std::vector<int>{0, 1, 2}
                                                                     : std::vector<int>{0});
  check_degrees(degrees, regime == "exact" ? kMaxDegree - 1 : kMaxDegree);
  const int trials = get_trials(ctx.s, 20);
  const double tol = get_double(ctx.s, "tolerance", 1e-10);
  const auto seed = get_seed(ctx.s);
  const auto kernels = scenario_kernels(ctx.s);

  const std::vector<std::pair<std::string, GroupPtr>> groups = {{"source", pair.source},
                                                                {"target", pair.target}};
  Json links = Json::object();
  Json patterns = Json::object();
  std::vector<std::string> broken;

  const auto closeness = verify_coarse_pair(pair.forward, *pair.inverse, pair.closeness);
  checks.push_back(check("closeness", closeness.passed, std::nullopt, std::nullopt, to_json(closeness)));
  if (!closeness.passed) broken.push_back("coarse-equivalence");

  // Link 1: vanishing of the dimension versus vanishing of reduced cohomology.
  {
    Json link_checks = Json::array();
    Json data = Json::object();
    bool ok = true;
    for (const auto& [side, group] : groups) {
      Json pat = Json::object();
      if (regime == "exact") {
        const int diam = static_cast<int>(group->diameter());
        auto parts = parallel_map(degrees.size(), ctx.jobs, [&](std::size_t i) {
          return betti_task(ctx, group, degrees[i], diam, kDefaultHarmonicTolerance, std::nullopt, {});
        });
        Json rows = Json::array();
        for (auto& p : parts) {
          for (auto& c : p["checks"]) {
            ok = ok && c["passed"].get<bool>();
            link_checks.push_back(c);
          }
          const auto& res = p["result"];
          pat[std::to_string(res["degree"].get<int>())] = res["vanishing"].get<bool>() ? "vanishing" : "non-vanishing";
          rows.push_back({{"degree", res["degree"]}, {"harmonic_count", res["harmonic_count"]},
                          {"vn_dimension", res["vn_dimension"]}});
        }
        data[side] = rows;
      } else {
        const Json& sw = field(ctx.s, "sweep") ? ctx.s.at("sweep") : Json::object();
        const int scale = static_cast<int>(get_int(sw, "scale", 1));
        const auto radii = get_ints(sw, side == "source" ? "source_radii" : "target_radii", {4, 8, 16, 32});
        const auto opts = sweep_options(sw, ctx.cap);
        Json rows = Json::array();
        for (int n : degrees) {
          const auto r = parallel_sweep(ctx, group, n, scale, radii, opts);
          for (const auto& w : r.warnings) ctx.warnings.push_back(side + ": " + w);
          const bool complete = r.estimates.size() == radii.size();
          ok = ok && complete;
          link_checks.push_back(check("sweep-complete " + side + " n=" + std::to_string(n), complete));
          pat[std::to_string(n)] = to_string(r.verdict);
          auto j = sweep_json(r);
          j["degree"] = n;
          rows.push_back(j);
        }
        data[side] = rows;
      }
      patterns[side] = pat;
    }
    for (auto& c : link_checks) checks.push_back(c);
    links["dimension-vs-cohomology"] = {{"status", ok ? "passed" : "failed"}, {"data", data}};
    if (!ok) broken.push_back("dimension-vs-cohomology");
  }

  // Link 2: invariant cochains with l2 coefficients versus coarse cochains.
  if (regime == "exact") {
    bool ok = true;
    Json data = Json::array();
    for (const auto& [side, group] : groups) {
      auto parts = parallel_map(degrees.size(), ctx.jobs, [&](std::size_t i) {
        return bridge_task(group, degrees[i], trials, seed, 1e-12, {1}, std::nullopt, ctx.cap);
      });
      for (auto& p : parts) {
        for (auto& c : p["checks"]) {
          ok = ok && c["passed"].get<bool>();
          checks.push_back(c);
        }
        data.push_back(p["result"]);
      }
    }
    links["invariant-vs-coarse"] = {{"status", ok ? "passed" : "failed"}, {"data", data}};
    if (!ok) broken.push_back("invariant-vs-coarse");
  } else {
    links["invariant-vs-coarse"] = {
        {"status", "not-applicable"},
        {"reason", "the invariant side has no finite model for a truncated infinite group"}};
  }

  // Link 3: the homotopy certifying coarse invariance.
  {
    bool ok = true;
    std::vector<PairTask> tasks;
    int scale = static_cast<int>(get_int(ctx.s, "scale", 1));
    if (regime == "exact" && !field(ctx.s, "scale"))
      scale = std::max(pair.source_window->diameter(), pair.target_window->diameter());
    for (const auto& [c, cp] : kernels)
      for (int n : degrees) tasks.push_back({c, cp, n, scale});
    auto parts = parallel_map(tasks.size(), ctx.jobs, [&](std::size_t i) -> Json {
      const auto& pt = tasks[i];
      const SmoothingKernel chi(pair.source, pt.c);
      const SmoothingKernel chi_t(pair.target, pt.c_prime);
      const CoarseSetup setup{pair.forward, *pair.inverse, chi, chi_t};
      const std::string at = "(c=" + std::to_string(pt.c) + ", c'=" + std::to_string(pt.c_prime) +
                             ", n=" + std::to_string(pt.degree) + ", R=" + std::to_string(pt.scale) + ")";
      Json cs = Json::array();
      Json res = {{"c", pt.c}, {"c_prime", pt.c_prime}, {"degree", pt.degree}};
      for (const auto& [side, s] : {std::pair{std::string("target"), setup},
                                    std::pair{std::string("source"), setup.reversed()}}) {
        const auto r = verify_homotopy_identity(s, pt.degree, pt.scale, trials, seed, ctx.cap);
        cs.push_back(check("homotopy on " + side + " " + at, r.passed(tol),
                           std::max(r.homotopy_residual, r.max_relation_residual()), tol,
                           {{"interior_rows", r.interior_rows}}));
        res[side] = to_json(r);
        if (regime == "exact") {
          const auto ind = verify_induced_identity(s, pt.degree, pt.scale, kDefaultHarmonicTolerance, ctx.cap);
          cs.push_back(check("induced-identity on " + side + " " + at, ind.max_projection <= 1e-8,
                             ind.max_projection, 1e-8));
        }
      }
      return task(cs, res);
    });
    Json data = Json::array();
    for (auto& p : parts) {
      for (auto& c : p["checks"]) {
        ok = ok && c["passed"].get<bool>();
        checks.push_back(c);
      }
      data.push_back(p["result"]);
    }
    links["coarse-homotopy"] = {{"status", ok ? "passed" : "failed"}, {"data", data}};
    if (!ok) broken.push_back("coarse-homotopy");
  }

  bool agree = true;
  bool conclusive = true;
  for (int n : degrees) {
    const auto key = std::to_string(n);
    const std::string a = patterns["source"][key];
    const std::string b = patterns["target"][key];
    agree = agree && a == b;
    conclusive = conclusive && a != "inconclusive" && b != "inconclusive";
  }
  std::string verdict;
  if (!broken.empty()) verdict = "chain-broken";
  else if (!conclusive) verdict = "patterns-inconclusive";
  else verdict = agree ? "patterns-agree" : "patterns-disagree";
  checks.push_back(check("vanishing-patterns-agree", agree && conclusive, std::nullopt, std::nullopt,
                         {{"patterns", patterns}}));
  return {{"regime", regime},
          {"verdict", verdict},
          {"broken_links", broken},
          {"patterns", patterns},
          {"links", links}};
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string residual_table(const Json& checks) {
  std::ostringstream os;
  os << "failed checks:\n";
  for (const auto& c : checks) {
    if (c["passed"].get<bool>()) continue;
    os << "  " << c["name"].get<std::string>();
    if (c.contains("residual")) os << "  residual=" << c["residual"].dump();
    if (c.contains("tolerance")) os << "  tolerance=" << c["tolerance"].dump();
    os << "\n";
  }
  return os.str();
}

}  // namespace

RunResult run_scenario(const Json& scenario, const fs::path& base_dir, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  Json run_info = {{"timestamp", iso_timestamp()}, {"jobs", std::max(opts.jobs, 1)}};
  std::unique_ptr<OperatorCache> cache;
  Json report = {{"schema", kReportSchema}, {"version", kVersion}};
  try {
    if (!scenario.is_object()) throw ValidationError("scenario must be a JSON object");
    const Json* schema = field(scenario, "schema");
    if (!schema || !schema->is_string() || schema->get<std::string>() != kScenarioSchema)
      throw ValidationError(std::string("scenario \"schema\" must be \"") + kScenarioSchema + "\"");
    const Json* kind_field = field(scenario, "kind");
    if (!kind_field || !kind_field->is_string()) throw ValidationError("scenario needs a \"kind\"");
    const std::string kind = kind_field->get<std::string>();
    if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end())
      throw ValidationError("unknown scenario kind \"" + kind + "\"");

    Context ctx{scenario, base_dir, kDefaultTupleCap, 1, nullptr, {}};
    ctx.jobs = std::max(opts.jobs, 1);
    ctx.cap = opts.tuple_cap ? *opts.tuple_cap
                             : static_cast<std::size_t>(get_int(scenario, "tuple_cap", kDefaultTupleCap));
    std::optional<fs::path> cache_dir = opts.cache_dir;
    if (!cache_dir)
      if (const char* env = std::getenv(kCacheEnv); env && *env) cache_dir = fs::path(env);
    if (cache_dir) {
      cache = std::make_unique<OperatorCache>(*cache_dir);
      ctx.cache = cache.get();
    }
    report["kind"] = kind;
    report["name"] = field(scenario, "name") ? scenario.at("name") : Json(kind);
    report["scenario"] = scenario;
    report["configuration"] = {{"tuple_cap", ctx.cap}};
    report["configuration_fingerprint"] =
        sha256_hex(scenario.dump() + "|" + kVersion + "|" + std::to_string(ctx.cap));

    Json checks = Json::array();
    Json results;
    if (kind == "verify-complex") results = run_verify_complex(ctx, checks);
    else if (kind == "verify-bridge") results = run_verify_bridge(ctx, checks);
    else if (kind == "verify-coarse-pair") results = run_verify_coarse_pair(ctx, checks);
    else if (kind == "betti-finite") results = run_betti_finite(ctx, checks);
    else if (kind == "window-sweep") results = run_window_sweep(ctx, checks);
    else results = run_main_chain(ctx, checks);

    bool passed = !checks.empty();
    for (const auto& c : checks) passed = passed && c["passed"].get<bool>();
    report["checks"] = checks;
    report["results"] = results;
    report["warnings"] = ctx.warnings;
    report["passed"] = passed;
    report["status"] = passed ? "passed" : "failed";
    out.exit_code = passed ? 0 : 1;
    if (!passed) out.diagnostics = residual_table(checks);
  } catch (const NumericalError& e) {
    report["status"] = "failed";
    report["passed"] = false;
    report["error"] = std::string("numerical failure: ") + e.what();
    out.exit_code = 1;
    out.diagnostics = report["error"].get<std::string>() + "\n";
  } catch (const InternalConsistencyError& e) {
    report["status"] = "failed";
    report["passed"] = false;
    report["error"] = std::string("internal consistency failure: ") + e.what();
    out.exit_code = 1;
    out.diagnostics = report["error"].get<std::string>() + "\n";
  } catch (const std::exception& e) {
    report["status"] = "invalid";
    report["passed"] = false;
    report["error"] = e.what();
    out.exit_code = 2;
    out.diagnostics = std::string("invalid scenario: ") + e.what() + "\n";
  }
  report["exit_code"] = out.exit_code;
  report["fingerprint"] = report_fingerprint(report);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run_info["wall_time_s"] = seconds;
  if (cache) {
    run_info["cache"] = {{"dir", cache->entry_path("").parent_path().string()},
                         {"hits", cache->hits()},
                         {"misses", cache->misses()},
                         {"rebuilt", cache->rebuilt()},
                         {"warnings", cache->warnings()}};
  } else {
    run_info["cache"] = nullptr;
  }
  report["run_info"] = run_info;
  out.report = std::move(report);
  return out;
}

RunResult run_file(const fs::path& scenario_path, const RunOptions& opts) {
  RunResult out;
  Json scenario;
  try {
    scenario = read_json_file(scenario_path);
  } catch (const std::exception& e) {
    out.exit_code = 2;
    out.diagnostics = std::string("invalid scenario: ") + e.what() + "\n";
    out.report = {{"schema", kReportSchema}, {"version", kVersion}, {"status", "invalid"},
                  {"passed", false}, {"error", e.what()}, {"exit_code", 2}};
    out.report["fingerprint"] = report_fingerprint(out.report);
    if (opts.out) write_atomic(*opts.out, out.report.dump(2) + "\n");
    return out;
  }
  out = run_scenario(scenario, scenario_path.parent_path(), opts);
  std::optional<fs::path> target = opts.out;
  if (!target && scenario.is_object() && scenario.contains("output") && scenario.at("output").is_string()) {
    const fs::path rel = scenario.at("output").get<std::string>();
    target = rel.is_absolute() ? rel : scenario_path.parent_path() / rel;
  }
  if (target) write_atomic(*target, out.report.dump(2) + "\n");
  return out;
}

}  // namespace coarsel2
