#pragma once

#include "mfgsc/mfg.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace mfgsc {

using json = nlohmann::json;

// Throws std::invalid_argument when j is not an object, misses a required
// key, or carries a key outside `allowed`.
void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::vector<std::string>& required, const std::string& ctx);

json to_json(const CadlagPath& x);
CadlagPath path_from_json(const json& j);

json to_json(const RelaxedControlGrid& q);
RelaxedControlGrid grid_from_json(const json& j);

json to_json(const EmpiricalMeasure& m);
EmpiricalMeasure measure_from_json(const json& j);

json to_json(const Coeff& c);
Coeff coeff_from_json(const json& j);

json to_json(const MfgModel& m);
MfgModel model_from_json(const json& j);

FamilySpec family_from_json(const json& j);
SolveConfig solve_config_from_json(const json& j, const SolveConfig& base = {});

// Reads and parses a JSON file; std::invalid_argument on missing file or
// parse error.
json load_json_file(const std::string& path);
// A string value is a file reference resolved against base_dir; any other
// value is returned as-is (inline object).
json resolve_ref(const json& v, const std::string& base_dir);

// RFC-4180: quotes fields containing comma, quote or newline.
std::string csv_field(const std::string& s);
// Shortest round-trip decimal form, locale-independent.
std::string csv_num(double v);
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);
void write_text(const std::string& path, const std::string& content);

}  // namespace mfgsc
