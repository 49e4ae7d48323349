#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "coarsel2/bridge.hpp"
#include "coarsel2/coarse_map.hpp"
#include "coarsel2/cohomology.hpp"

namespace coarsel2 {

using Json = nlohmann::json;

// {"family": "cyclic", "n": 6}, {"family": "integer_lattice", "d": 2},
// {"family": "direct_product", "factors": [...]}, {"family": "table",
// "path": "group.csv"}; optional "generators" and "measure_weight".
// Relative table paths resolve against `base_dir`.
GroupSpec parse_group_spec(const Json& j, const std::filesystem::path& base_dir = {});
Json to_json(const GroupSpec& spec);

// Integers, integer arrays, or element names for table groups.
Element parse_element(const Json& j, const MetricMeasureGroup& group);
Json element_to_json(const Element& e, const MetricMeasureGroup& group);

// {"kind": "ball", "radius": L} | {"kind": "whole"} |
// {"kind": "box", "lo": a, "hi": b} | {"kind": "elements", "elements": [...]}.
// A missing window means the whole group, which must then be finite.
WindowPtr parse_window(const Json* j, const GroupPtr& group);

// Coarse pair file: source/target group specs and windows, the forward map
// (under "forward" or inline) as "table" ([[x, f(x)], ...]) or "rule", optional "control" breakpoints,
// optional "inverse" (table or rule, with its own "control"), optional
// "closeness". Rules: identity, constant, multiply (factor), floor_divide
// (divisor).
struct CoarsePairSpec {
  GroupPtr source;
  GroupPtr target;
  WindowPtr source_window;
  WindowPtr target_window;
  CoarseMap forward;
  std::optional<CoarseMap> inverse;
  double closeness = std::numeric_limits<double>::infinity();
};

CoarsePairSpec parse_coarse_pair(const Json& j, const std::filesystem::path& base_dir = {});

Json read_json_file(const std::filesystem::path& path);

Json to_json(const SpectralReport& r);
Json to_json(const DimensionEstimate& e);
Json to_json(const HomotopyReport& r);
Json to_json(const NormBoundReport& r);
Json to_json(const CochainMapReport& r);
Json to_json(const ClosenessReport& r);
Json to_json(const RequiredScales& s);

void write_eigenvalues_csv(const SpectralReport& r, std::ostream& out);
void write_estimates_csv(const std::vector<DimensionEstimate>& rows, std::ostream& out);

// Finite doubles as numbers, infinities as the strings "inf"/"-inf", NaN as null.
Json number(double v);

}  // namespace coarsel2
