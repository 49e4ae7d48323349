#include "coarsel2/bridge.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

namespace {

// Cayley table of a finite group in canonical element order.
struct FiniteTable {
  WindowPtr whole;
  int n = 0;
  int e = 0;
  std::vector<int> mul;
  std::vector<int> inv;

  int times(int a, int b) const { return mul[a * n + b]; }
  int length(int a) const { return whole->distance(e, a); }
};

FiniteTable finite_table(const GroupPtr& group) {
  if (!group->is_finite())
    throw UnsupportedError("l2-valued cochains are represented for finite groups only");
  FiniteTable t;
  t.whole = Window::whole(group);
  t.n = static_cast<int>(t.whole->size());
  t.e = t.whole->identity_index();
  t.mul.resize(static_cast<std::size_t>(t.n) * t.n);
  t.inv.resize(t.n);
  for (int a = 0; a < t.n; ++a) {
    t.inv[a] = *t.whole->index_of(group->inverse(t.whole->element(a)));
    for (int b = 0; b < t.n; ++b)
      t.mul[a * t.n + b] = *t.whole->index_of(group->multiply(t.whole->element(a), t.whole->element(b)));
  }
  return t;
}

std::size_t power_checked(std::size_t base, int exp) {
  double estimate = std::pow(static_cast<double>(base), exp);
  if (estimate > static_cast<double>(kDefaultTupleCap))
    throw CapError("valued cochain with " + std::to_string(static_cast<long long>(estimate)) +
                       " entries exceeds the cap",
                   estimate);
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// Mixed-radix digits of a flat index, most significant first.
void decode(std::size_t flat, int base, std::vector<int>& digits) {
  for (std::size_t k = digits.size(); k-- > 0;) {
    digits[k] = static_cast<int>(flat % static_cast<std::size_t>(base));
    flat /= static_cast<std::size_t>(base);
  }
}

std::size_t encode(const std::vector<int>& digits, int base) {
  std::size_t flat = 0;
  for (int d : digits) flat = flat * static_cast<std::size_t>(base) + static_cast<std::size_t>(d);
  return flat;
}

bool same_group(const GroupPtr& a, const GroupPtr& b) {
  return a == b || a->fingerprint() == b->fingerprint();
}

std::vector<int> to_table_indices(const FiniteTable& t, const Window& w) {
  std::vector<int> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = *t.whole->index_of(w.element(static_cast<int>(i)));
  return out;
}

std::vector<int> from_table_indices(const FiniteTable& t, const Window& w) {
  std::vector<int> out(static_cast<std::size_t>(t.n), -1);
  for (int a = 0; a < t.n; ++a)
    if (auto j = w.index_of(t.whole->element(a))) out[a] = *j;
  return out;
}

int max_pairwise(const FiniteTable& t, const std::vector<int>& xs, std::size_t count) {
  int m = 0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j) m = std::max(m, t.whole->distance(xs[i], xs[j]));
  return m;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ValuedCochain::ValuedCochain(GroupPtr group, int degree, Eigen::VectorXd values)
    : group_(std::move(group)), degree_(degree), values_(std::move(values)) {
  if (!group_->is_finite())
    throw UnsupportedError("l2-valued cochains are represented for finite groups only");
  if (degree_ < 0 || degree_ > kMaxDegree + 1)
    throw RangeError("valued cochain degree must lie in 0.." + std::to_string(kMaxDegree + 1));
  order_ = static_cast<std::size_t>(group_->order());
  const std::size_t expected = power_checked(order_, degree_ + 2);
  if (static_cast<std::size_t>(values_.size()) != expected)
    throw ConfigurationError("valued cochain needs " + std::to_string(expected) +
                             " entries, got " + std::to_string(values_.size()));
  if (!values_.allFinite()) throw ValidationError("valued cochain has non-finite entries");
}

ValuedCochain ValuedCochain::zero(GroupPtr group, int degree) {
  const auto n = static_cast<std::size_t>(group->order());
  return ValuedCochain(group, degree,
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(power_checked(n, degree + 2))));
}

std::size_t ValuedCochain::index(std::span<const int> xs, int x) const {
  if (xs.size() != static_cast<std::size_t>(degree_) + 1)
    throw ConfigurationError("valued cochain: wrong tuple length");
  std::size_t flat = 0;
  for (int v : xs) flat = flat * order_ + static_cast<std::size_t>(v);
  return flat * order_ + static_cast<std::size_t>(x);
}

InvariantCochain::InvariantCochain(ValuedCochain data) : data_(std::move(data)) {
  const auto t = finite_table(data_.group());
  const std::size_t total = static_cast<std::size_t>(data_.values().size());
  std::vector<int> d(static_cast<std::size_t>(data_.degree()) + 2), gd(d.size());
  for (int g = 0; g < t.n; ++g) {
    if (g == t.e) continue;
    for (std::size_t flat = 0; flat < total; ++flat) {
      decode(flat, t.n, d);
      for (std::size_t k = 0; k < d.size(); ++k) gd[k] = t.times(g, d[k]);
      const std::size_t moved = encode(gd, t.n);
      if (data_.values()[static_cast<Eigen::Index>(moved)] !=
          data_.values()[static_cast<Eigen::Index>(flat)]) {
        std::string tuple;
        for (std::size_t k = 0; k + 1 < d.size(); ++k)
          tuple += (k ? "," : "") + data_.group()->describe(t.whole->element(d[k]));
        throw ValidationError("invariance fails under g = " +
                              data_.group()->describe(t.whole->element(g)) + " at (" + tuple +
                              "; " + data_.group()->describe(t.whole->element(d.back())) + ")");
      }
    }
  }
}

ValuedCochain l2_coboundary(const ValuedCochain& b) {
  const auto t = finite_table(b.group());
  auto out = ValuedCochain::zero(b.group(), b.degree() + 1);
  Eigen::VectorXd v = out.values();
  const int m = b.degree() + 2;  // tuple length of the output
  std::vector<int> d(static_cast<std::size_t>(m) + 1), face(static_cast<std::size_t>(m));
  for (std::size_t flat = 0; flat < static_cast<std::size_t>(v.size()); ++flat) {
    decode(flat, t.n, d);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      std::size_t k = 0;
      for (int l = 0; l < m; ++l)
        if (l != i) face[k++] = d[l];
      face[k] = d[m];
      const double term = b.values()[static_cast<Eigen::Index>(encode(face, t.n))];
      acc += i % 2 ? -term : term;
    }
    v[static_cast<Eigen::Index>(flat)] = acc;
  }
  return ValuedCochain(b.group(), b.degree() + 1, std::move(v));
}

InvariantCochain l2_coboundary(const InvariantCochain& alpha) {
  return InvariantCochain(l2_coboundary(alpha.data()));
}

Cochain evaluate_E(const InvariantCochain& alpha, const TupleSpacePtr& space) {
  if (!same_group(space->window()->group(), alpha.group()))
    throw ConfigurationError("evaluate_E: tuple space lives on a different group");
  if (space->degree() != alpha.degree())
    throw ConfigurationError("evaluate_E: degree mismatch");
  const auto t = finite_table(alpha.group());
  const auto map = to_table_indices(t, *space->window());
  Eigen::VectorXd v(static_cast<Eigen::Index>(space->size()));
  std::vector<int> xs(space->arity());
  for (std::size_t r = 0; r < space->size(); ++r) {
    const auto tuple = space->tuple(r);
    for (std::size_t l = 0; l < xs.size(); ++l) xs[l] = map[tuple[l]];
    v[static_cast<Eigen::Index>(r)] = alpha.data().at(xs, t.e);
  }
  return Cochain(space, std::move(v));
}

Cochain evaluate_E(const InvariantCochain& alpha) {
  const auto whole = Window::whole(alpha.group());
  return evaluate_E(alpha, enumerate_tuples(whole, alpha.degree(), whole->diameter()));
}

InvariantCochain induce_M(const Cochain& beta) {
  const auto& space = *beta.space();
  if (!space.window()->is_whole_group() || !space.is_complete())
    throw DomainError("induce_M needs the cochain on every tuple of the whole group");
  const auto t = finite_table(space.window()->group());
  const auto back = from_table_indices(t, *space.window());
  const int n = space.degree();
  auto out = ValuedCochain::zero(space.window()->group(), n);
  Eigen::VectorXd v = out.values();
  std::vector<int> d(static_cast<std::size_t>(n) + 2), u(static_cast<std::size_t>(n) + 1);
  for (std::size_t flat = 0; flat < static_cast<std::size_t>(v.size()); ++flat) {
    decode(flat, t.n, d);
    const int ginv = t.inv[d.back()];
    for (int l = 0; l <= n; ++l) u[l] = back[t.times(ginv, d[l])];
    v[static_cast<Eigen::Index>(flat)] = beta[*space.find(u)];
  }
  return InvariantCochain(ValuedCochain(out.group(), n, std::move(v)));
}

ValuedCochain smoothing_R(const SmoothingKernel& chi, const ValuedCochain& f) {
  if (!same_group(chi.group(), f.group()))
    throw ConfigurationError("smoothing kernel lives on a different group");
  const auto t = finite_table(f.group());
  std::vector<std::vector<int>> ball(static_cast<std::size_t>(t.n));
  for (int a = 0; a < t.n; ++a)
    for (int b = 0; b < t.n; ++b)
      if (t.whole->distance(a, b) <= chi.radius()) ball[a].push_back(b);
  const double mass = 1.0 / static_cast<double>(chi.ball_size());
  const int n = f.degree();
  Eigen::VectorXd v(f.values().size());
  std::vector<int> d(static_cast<std::size_t>(n) + 2), h(d.size());
  std::vector<std::size_t> pos(static_cast<std::size_t>(n) + 1);
  for (std::size_t flat = 0; flat < static_cast<std::size_t>(v.size()); ++flat) {
    decode(flat, t.n, d);
    h.back() = d.back();
    std::fill(pos.begin(), pos.end(), 0);
    double acc = 0.0;
    for (;;) {
      double w = 1.0;
      for (int l = 0; l <= n; ++l) {
        h[l] = ball[d[l]][pos[l]];
        w *= mass;
      }
      acc += w * f.values()[static_cast<Eigen::Index>(encode(h, t.n))];
      int l = n;
      while (l >= 0 && ++pos[l] == ball[d[l]].size()) pos[l--] = 0;
      if (l < 0) break;
    }
    v[static_cast<Eigen::Index>(flat)] = acc;
  }
  return ValuedCochain(f.group(), n, std::move(v));
}

SparseOperator smoothing_operator(const SmoothingKernel& chi, const TupleSpacePtr& space) {
  return tensor_kernel_operator(smoothing_transition(chi, space->window()), space, space);
}

// ---------------------------------------------------------------------------

bool ENormChain::holds(double slack) const {
  return std::abs(evaluated - local) <= slack * std::max(1.0, local) &&
         local <= global + slack * std::max(1.0, global);
}

ENormChain e_norm_chain(const InvariantCochain& alpha, int scale) {
  if (scale < 0) throw RangeError("scale must be non-negative");
  const auto t = finite_table(alpha.group());
  const int n = alpha.degree();
  const double w = alpha.group()->measure_weight();
  const double tuple_w = std::pow(w, n + 1);
  const double ball_measure = w * static_cast<double>(alpha.group()->ball_size(scale));
  ENormChain out;
  out.degree = n;
  out.scale = scale;
  const auto& values = alpha.data().values();
  std::vector<int> d(static_cast<std::size_t>(n) + 2);
  for (std::size_t flat = 0; flat < static_cast<std::size_t>(values.size()); ++flat) {
    decode(flat, t.n, d);
    const double sq = values[static_cast<Eigen::Index>(flat)] * values[static_cast<Eigen::Index>(flat)];
    const bool in_tuples = max_pairwise(t, d, d.size() - 1) <= scale;
    if (in_tuples && d.back() == t.e) out.evaluated += ball_measure * tuple_w * sq;
    if (in_tuples && t.length(d.back()) <= scale) out.local += tuple_w * w * sq;
    bool near = true;
    for (std::size_t l = 0; l + 1 < d.size(); ++l) near = near && t.length(d[l]) <= 2 * scale;
    if (near) out.global += tuple_w * w * sq;
  }
  return out;
}

MNormChain m_norm_chain(const Cochain& beta, int scale) {
  if (scale < 0) throw RangeError("scale must be non-negative");
  const auto& space = *beta.space();
  const auto induced = induce_M(beta);
  const auto t = finite_table(space.window()->group());
  const int n = space.degree();
  const double w = t.whole->group()->measure_weight();
  MNormChain out;
  out.degree = n;
  out.scale = scale;
  double sum = 0.0;
  for (std::size_t r = 0; r < space.size(); ++r)
    if (space.max_pairwise_distance(space.tuple(r)) <= 2 * scale) sum += beta[r] * beta[r];
  out.coarse = w * static_cast<double>(t.whole->group()->ball_size(scale)) *
               std::pow(w, n + 1) * sum;
  const auto& values = induced.data().values();
  std::vector<int> d(static_cast<std::size_t>(n) + 2);
  for (std::size_t flat = 0; flat < static_cast<std::size_t>(values.size()); ++flat) {
    decode(flat, t.n, d);
    bool inside = true;
    for (int l = 0; l <= n; ++l) inside = inside && t.length(d[l]) <= scale;
    if (inside) {
      const double v = values[static_cast<Eigen::Index>(flat)];
      out.induced += std::pow(w, n + 2) * v * v;
    }
  }
  return out;
}

SubstitutionCheck check_substitutions(const GroupPtr& group, int degree, int scale) {
  if (degree < 0 || degree > kMaxDegree) throw RangeError("degree out of range");
  const auto t = finite_table(group);
  const std::size_t total = power_checked(static_cast<std::size_t>(t.n), degree + 2);
  const std::size_t m = static_cast<std::size_t>(degree) + 2;
  std::vector<int> d(m), img(m), alt(m);
  std::vector<std::uint8_t> hit_auto(total, 0), hit_m(total, 0), hit_alt(total, 0);
  SubstitutionCheck out;
  out.automorphism = out.m_bijective = out.m_image_contained = out.m_value_preserving = true;
  out.variant_bijective = out.variant_image_contained = true;
  auto in_region = [&](const std::vector<int>& p) {
    return max_pairwise(t, p, m - 1) <= scale && t.length(p.back()) <= scale;
  };
  auto near = [&](const std::vector<int>& p) {
    for (std::size_t l = 0; l + 1 < m; ++l)
      if (t.length(p[l]) > 2 * scale) return false;
    return true;
  };
  for (std::size_t flat = 0; flat < total; ++flat) {
    decode(flat, t.n, d);
    const int x = d.back();
    const int x0inv = t.inv[d[0]];
    const bool region = in_region(d);

    if (region) {
      for (std::size_t l = 0; l + 1 < m; ++l) img[l] = t.times(t.inv[x], d[l]);
      img.back() = x;
      if (!in_region(img)) out.automorphism = false;
      const std::size_t k = encode(img, t.n);
      if (hit_auto[k]++) out.automorphism = false;
    }

    img[0] = x;
    alt[0] = x;
    for (std::size_t l = 1; l + 1 < m; ++l) img[l] = alt[l] = t.times(t.times(x, x0inv), d[l]);
    img.back() = t.times(t.times(x, x0inv), x);
    alt.back() = d[0];
    if (hit_m[encode(img, t.n)]++) out.m_bijective = false;
    if (hit_alt[encode(alt, t.n)]++) out.variant_bijective = false;
    if (region && !near(img)) out.m_image_contained = false;
    if (region && !near(alt)) out.variant_image_contained = false;
    const int zinv = t.inv[img.back()];
    for (std::size_t l = 0; l + 1 < m; ++l)
      if (t.times(zinv, img[l]) != t.times(t.inv[x], d[l])) out.m_value_preserving = false;
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_valued_csv(const ValuedCochain& b, std::ostream& out) {
  const auto t = finite_table(b.group());
  const int m = b.degree() + 2;
  for (int l = 0; l + 1 < m; ++l) out << "g_" << l << ",";
  out << "g,value\n";
  std::vector<int> d(static_cast<std::size_t>(m));
  char buf[40];
  for (std::size_t flat = 0; flat < static_cast<std::size_t>(b.values().size()); ++flat) {
    decode(flat, t.n, d);
    for (int v : d) out << csv_field(b.group()->describe(t.whole->element(v))) << ",";
    std::snprintf(buf, sizeof buf, "%.17g", b.values()[static_cast<Eigen::Index>(flat)]);
    out << buf << "\n";
  }
}

ValuedCochain read_valued_csv(const GroupPtr& group, int degree, std::istream& in) {
  const auto t = finite_table(group);
  std::map<std::string, int> by_name;
  for (int a = 0; a < t.n; ++a) by_name[group->describe(t.whole->element(a))] = a;
  auto out = ValuedCochain::zero(group, degree);
  Eigen::VectorXd v = out.values();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(v.size()), 0);
  const std::size_t m = static_cast<std::size_t>(degree) + 2;
  std::vector<int> d(m);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "g_0") continue;
    if (fields.size() != m + 1)
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(m + 1) + " fields");
    for (std::size_t l = 0; l < m; ++l) {
      const auto it = by_name.find(fields[l]);
      if (it == by_name.end())
        throw ValidationError("line " + std::to_string(line_no) + ": unknown element '" +
                              fields[l] + "'");
      d[l] = it->second;
    }
    const std::size_t flat = encode(d, t.n);
    if (seen[flat]++)
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate entry");
    try {
      v[static_cast<Eigen::Index>(flat)] = std::stod(fields.back());
    } catch (const std::exception&) {
      throw ValidationError("line " + std::to_string(line_no) + ": bad value '" +
                            fields.back() + "'");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ValidationError("valued cochain file does not cover every entry");
  return ValuedCochain(group, degree, std::move(v));
}

}  // namespace coarsel2
