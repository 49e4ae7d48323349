#include "coarsel2/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

std::int64_t as_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ValidationError(what + " must be an integer");
  return j.get<std::int64_t>();
}

double as_double(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ValidationError(what + " must be a number");
  return j.get<double>();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::function<Element(const Element&)> parse_rule(const Json& rule, const GroupPtr& source,
                                                  const GroupPtr& target) {
  const std::string kind = require(rule, "kind", "rule").get<std::string>();
  if (kind == "identity") {
    if (source->fingerprint() != target->fingerprint())
      throw ValidationError("identity rule needs equal source and target groups");
    return [](const Element& x) { return x; };
  }
  if (kind == "constant") {
    const Element value = parse_element(require(rule, "value", "constant rule"), *target);
    return [value](const Element&) { return value; };
  }
  if (kind == "multiply") {
    const std::int64_t k = as_int(require(rule, "factor", "multiply rule"), "factor");
    if (source->arity() != target->arity())
      throw ValidationError("multiply rule needs source and target of equal arity");
    return [k](const Element& x) {
      Element y = x;
      for (auto& c : y.coords) c *= k;
      return y;
    };
  }
  if (kind == "floor_divide") {
    const std::int64_t k = as_int(require(rule, "divisor", "floor_divide rule"), "divisor");
    if (k <= 0) throw ValidationError("floor_divide divisor must be positive");
    if (source->arity() != target->arity())
      throw ValidationError("floor_divide rule needs source and target of equal arity");
    return [k](const Element& x) {
      Element y = x;
      for (auto& c : y.coords) c = floor_div(c, k);
      return y;
    };
  }
  throw ValidationError("unknown map rule \"" + kind + "\"");
}

std::optional<ControlFunction> parse_control(const Json& j) {
  if (!j.contains("control")) return std::nullopt;
  const auto& c = j.at("control");
  std::vector<std::pair<double, double>> pts;
  if (c.is_object() && c.contains("slope")) {
    return ControlFunction::affine(as_double(c.at("slope"), "control slope"),
                                   c.contains("intercept")
                                       ? as_double(c.at("intercept"), "control intercept")
                                       : 0.0);
  }
  if (!c.is_array()) throw ValidationError("control must be a breakpoint list or {slope, intercept}");
  for (const auto& p : c) {
    if (!p.is_array() || p.size() != 2) throw ValidationError("control breakpoints are [t, a(t)] pairs");
    pts.emplace_back(as_double(p[0], "breakpoint t"), as_double(p[1], "breakpoint value"));
  }
  return ControlFunction(std::move(pts));
}

CoarseMap parse_map(const Json& j, const WindowPtr& source, const WindowPtr& target,
                    const std::string& where) {
  auto control = parse_control(j);
  if (j.contains("table")) {
    const auto& table = j.at("table");
    if (!table.is_array()) throw ValidationError(where + ": table must be a list of pairs");
    std::vector<std::optional<Element>> images(source->size());
    for (const auto& row : table) {
      if (!row.is_array() || row.size() != 2)
        throw ValidationError(where + ": table rows are [x, f(x)] pairs");
      const Element x = parse_element(row[0], *source->group());
      const auto i = source->index_of(x);
      if (!i)
        throw ValidationError(where + ": table entry " + source->group()->describe(x) +
                              " is outside the source window");
      if (images[*i]) throw ValidationError(where + ": duplicate table entry for " +
                                            source->group()->describe(x));
      images[*i] = parse_element(row[1], *target->group());
    }
    std::vector<Element> out;
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!images[i])
        throw ValidationError(where + ": table misses " +
                              source->group()->describe(source->element(static_cast<int>(i))));
      out.push_back(*images[i]);
    }
    return CoarseMap(source, target, std::move(out), std::move(control));
  }
  if (j.contains("rule"))
    return CoarseMap::tabulate(source, target,
                               parse_rule(j.at("rule"), source->group(), target->group()),
                               std::move(control));
  throw ValidationError(where + ": needs a \"table\" or a \"rule\"");
}

}  // namespace

Json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

GroupSpec parse_group_spec(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("group spec must be an object");
  const std::string family = require(j, "family", "group spec").get<std::string>();
  const double weight = j.contains("measure_weight")
                            ? as_double(j.at("measure_weight"), "measure_weight")
                            : 1.0;
  GroupSpec spec;
  if (family == "cyclic") {
    spec = GroupSpec::cyclic(as_int(require(j, "n", "cyclic group"), "n"), weight);
  } else if (family == "integer_lattice") {
    spec = GroupSpec::integer_lattice(
        static_cast<int>(as_int(require(j, "d", "integer lattice"), "d")), weight);
  } else if (family == "direct_product") {
    const auto& fs = require(j, "factors", "direct product");
    if (!fs.is_array()) throw ValidationError("factors must be a list");
    std::vector<GroupSpec> factors;
    for (const auto& f : fs) factors.push_back(parse_group_spec(f, base_dir));
    spec = GroupSpec::direct_product(std::move(factors), weight);
  } else if (family == "table") {
    const std::filesystem::path rel = require(j, "path", "table group").get<std::string>();
    const auto path = rel.is_absolute() ? rel : base_dir / rel;
    if (!std::filesystem::exists(path))
      throw ValidationError("group table file not found: " + path.string());
    spec = GroupSpec::from_table(
        std::make_shared<MultiplicationTable>(MultiplicationTable::from_csv_file(path.string())),
        weight);
    spec.table_source = rel.string();
  } else {
    throw ValidationError("unknown group family \"" + family + "\"");
  }
  if (j.contains("generators")) {
    // Parsed against the family defaults, then rebuilt with the declared set.
    const auto base = build_group(spec);
    for (const auto& g : j.at("generators")) spec.generators.push_back(parse_element(g, *base));
  }
  return spec;
}

Json to_json(const GroupSpec& spec) {
  Json j;
  switch (spec.family) {
    case GroupSpec::Family::kCyclic:
      j["family"] = "cyclic";
      j["n"] = spec.order;
      break;
    case GroupSpec::Family::kIntegerLattice:
      j["family"] = "integer_lattice";
      j["d"] = spec.dimension;
      break;
    case GroupSpec::Family::kDirectProduct:
      j["family"] = "direct_product";
      j["factors"] = Json::array();
      for (const auto& f : spec.factors) j["factors"].push_back(to_json(f));
      break;
    case GroupSpec::Family::kTable:
      j["family"] = "table";
      j["path"] = spec.table_source;
      break;
  }
  if (!spec.generators.empty()) {
    j["generators"] = Json::array();
    for (const auto& g : spec.generators) j["generators"].push_back(g.coords);
  }
  j["measure_weight"] = spec.measure_weight;
  return j;
}

Element parse_element(const Json& j, const MetricMeasureGroup& group) {
  Element e;
  if (j.is_number_integer()) {
    e = Element{j.get<std::int64_t>()};
  } else if (j.is_array()) {
    for (const auto& c : j) e.coords.push_back(as_int(c, "element coordinate"));
  } else if (j.is_string()) {
    if (group.spec().family != GroupSpec::Family::kTable)
      throw ValidationError("named elements are only valid for table groups");
    const int idx = group.spec().table->index_of(j.get<std::string>());
    e = Element{idx};
  } else {
    throw ValidationError("element must be an integer, a coordinate list, or a name");
  }
  return group.canonical(e);
}

Json element_to_json(const Element& e, const MetricMeasureGroup& group) {
  if (group.spec().family == GroupSpec::Family::kTable) return group.describe(e);
  if (e.coords.size() == 1) return e.coords[0];
  return e.coords;
}

WindowPtr parse_window(const Json* j, const GroupPtr& group) {
  if (j == nullptr || j->is_null()) {
    if (!group->is_finite())
      throw ValidationError("an infinite group needs an explicit window");
    return Window::whole(group);
  }
  const std::string kind = require(*j, "kind", "window").get<std::string>();
  if (kind == "whole") return Window::whole(group);
  if (kind == "ball") return Window::ball(group, as_int(require(*j, "radius", "ball window"), "radius"));
  if (kind == "box")
    return Window::box(group, as_int(require(*j, "lo", "box window"), "lo"),
                       as_int(require(*j, "hi", "box window"), "hi"));
  if (kind == "elements") {
    std::vector<Element> elems;
    for (const auto& e : require(*j, "elements", "element window")) elems.push_back(parse_element(e, *group));
    return Window::from_elements(group, std::move(elems));
  }
  throw ValidationError("unknown window kind \"" + kind + "\"");
}

CoarsePairSpec parse_coarse_pair(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("coarse map must be an object");
  const auto source = build_group(parse_group_spec(require(j, "source", "coarse map"), base_dir));
  const auto target = build_group(parse_group_spec(require(j, "target", "coarse map"), base_dir));
  const auto sw = parse_window(j.contains("source_window") ? &j.at("source_window") : nullptr, source);
  const auto tw = parse_window(j.contains("target_window") ? &j.at("target_window") : nullptr, target);
  CoarsePairSpec out{source, target, sw, tw, parse_map(j.contains("forward") ? j.at("forward") : j, sw, tw, "forward map"), std::nullopt,
                     std::numeric_limits<double>::infinity()};
  if (j.contains("inverse")) out.inverse = parse_map(j.at("inverse"), tw, sw, "inverse map");
  if (j.contains("closeness") && !j.at("closeness").is_null()) {
    out.closeness = as_double(j.at("closeness"), "closeness");
    if (out.closeness < 0) throw ValidationError("closeness must be non-negative");
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("file not found: " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

Json to_json(const SpectralReport& r) {
  Json ev = Json::array();
  for (double v : r.eigenvalues) ev.push_back(v);
  return {{"eigenvalues", ev},
          {"harmonic_count", r.harmonic_count},
          {"spectral_gap", r.spectral_gap ? Json(*r.spectral_gap) : Json(nullptr)},
          {"tolerance", r.tolerance},
          {"method", r.method},
          {"max_residual", r.max_residual}};
}

Json to_json(const DimensionEstimate& e) {
  return {{"group", e.group},
          {"degree", e.degree},
          {"scale", e.scale},
          {"window_radius", e.window_radius},
          {"window_size", e.window_size},
          {"tuple_count", e.tuple_count},
          {"raw_dimension", e.raw_dimension},
          {"window_measure", e.window_measure},
          {"normalized_dimension", e.normalized_dimension}};
}

Json to_json(const RequiredScales& s) {
  return {{"scale", s.scale},
          {"source_scale", s.source_scale},
          {"pullback_scale", s.pullback_scale},
          {"spread", s.spread},
          {"homotopy_scale", s.homotopy_scale},
          {"cochain_scale", s.cochain_scale}};
}

Json to_json(const HomotopyReport& r) {
  auto rel = [](const std::vector<RelationResidual>& v) {
    Json a = Json::array();
    for (const auto& x : v)
      a.push_back({{"relation", x.name}, {"max_residual", x.max_residual}, {"instances", x.instances}});
    return a;
  };
  return {{"degree", r.degree},
          {"scales", to_json(r.scales)},
          {"total_rows", r.total_rows},
          {"interior_rows", r.interior_rows},
          {"trials", r.trials},
          {"relations", rel(r.relations)},
          {"homotopy_residual", r.homotopy_residual},
          {"boundary_index_cases", rel(r.boundary_cases)}};
}

Json to_json(const NormBoundReport& r) {
  return {{"degree", r.degree},
          {"scale", r.scale},
          {"control_value", r.control_value},
          {"literal_scale", r.literal_scale},
          {"support_scale", r.support_scale},
          {"trials", r.trials},
          {"max_literal_excess", number(r.max_literal_excess)},
          {"literal_violations", r.literal_violations},
          {"fiber_constant", r.fiber_constant},
          {"max_fiber_excess", number(r.max_fiber_excess)},
          {"fiber_violations", r.fiber_violations}};
}

Json to_json(const CochainMapReport& r) {
  return {{"degree", r.degree},
          {"scale", r.scale},
          {"max_residual", r.max_residual},
          {"covered_rows", r.covered_rows}};
}

Json to_json(const ClosenessReport& r) {
  return {{"sup_gf", r.sup_gf},
          {"sup_fg", r.sup_fg},
          {"closeness", number(r.closeness)},
          {"passed", r.passed}};
}

void write_eigenvalues_csv(const SpectralReport& r, std::ostream& out) {
  out << "index,eigenvalue\n";
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) out << i << "," << fmt(r.eigenvalues[i]) << "\n";
}

void write_estimates_csv(const std::vector<DimensionEstimate>& rows, std::ostream& out) {
  out << "group,degree,scale,window_radius,window_size,tuple_count,raw_dimension,"
         "window_measure,normalized_dimension\n";
  for (const auto& e : rows)
    out << '"' << e.group << "\"," << e.degree << "," << e.scale << "," << e.window_radius << ","
        << e.window_size << "," << e.tuple_count << "," << e.raw_dimension << ","
        << fmt(e.window_measure) << "," << fmt(e.normalized_dimension) << "\n";
}

}  // namespace coarsel2
