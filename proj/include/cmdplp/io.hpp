#pragma once

#include "cmdplp/evaluation.hpp"
#include "cmdplp/lp.hpp"
#include "cmdplp/model.hpp"

#include "json.hpp"

#include <string>

namespace cmdplp {

using Json = nlohmann::ordered_json;

Json instance_to_json(const CmdpInstance& instance);
/// Throws InputError on missing or malformed fields, then validates the instance.
CmdpInstance instance_from_json(const Json& j);

void save_instance(const std::string& path, const CmdpInstance& instance);
CmdpInstance load_instance(const std::string& path);

/// {cols: [[s, a], ...], rows_cost: [...], rows_flow: [...]}
Json basis_to_json(const BasisPair& basis, std::size_t num_actions);
BasisPair basis_from_json(const Json& j, std::size_t num_actions);

Json value_report_to_json(const ValueReport& report);

} // namespace cmdplp
