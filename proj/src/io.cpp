#include "cmdplp/io.hpp"

#include "cmdplp/errors.hpp"

#include <fstream>

namespace cmdplp {

Json instance_to_json(const CmdpInstance& inst) {
    const std::size_t S = inst.num_states, A = inst.num_actions;
    Json j;
    j["num_states"] = S;
    j["num_actions"] = A;
    j["gamma"] = inst.gamma;
    Json kernel = Json::array();
    for (std::size_t s = 0; s < S; ++s) {
        Json per_action = Json::array();
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = inst.next_distribution(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
        }
        kernel.push_back(std::move(per_action));
    }
    j["kernel"] = std::move(kernel);
    const auto table = [&](const std::vector<double>& v) {
        Json t = Json::array();
        for (std::size_t s = 0; s < S; ++s) t.push_back(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(s * A), v.begin() + static_cast<std::ptrdiff_t>((s + 1) * A)));
        return t;
    };
    j["mean_reward"] = table(inst.mean_reward);
    Json costs = Json::array();
    for (const auto& c : inst.mean_costs) costs.push_back(table(c));
    j["mean_costs"] = std::move(costs);
    j["budgets"] = inst.budgets;
    j["init_dist"] = inst.init_dist;
    j["noise"] = inst.noise;
    j["scale"] = {{"low", inst.scale.low}, {"high", inst.scale.high}};
    return j;
}

CmdpInstance instance_from_json(const Json& j) {
    CmdpInstance inst;
    try {
        inst.num_states = j.at("num_states").get<std::size_t>();
        inst.num_actions = j.at("num_actions").get<std::size_t>();
        inst.gamma = j.at("gamma").get<double>();
        const std::size_t S = inst.num_states, A = inst.num_actions;
        const auto& kernel = j.at("kernel");
        if (kernel.size() != S) throw InputError("kernel must have num_states entries");
        for (const auto& per_action : kernel) {
            if (per_action.size() != A) throw InputError("kernel[s] must have num_actions entries");
            for (const auto& row : per_action) {
                if (row.size() != S) throw InputError("kernel[s][a] must have num_states entries");
                for (const auto& p : row) inst.kernel.push_back(p.get<double>());
            }
        }
        const auto read_table = [&](const Json& t, const char* what) {
            if (t.size() != S) throw InputError(std::string(what) + " must have num_states rows");
            std::vector<double> out;
            for (const auto& row : t) {
                if (row.size() != A) throw InputError(std::string(what) + " rows must have num_actions entries");
                for (const auto& v : row) out.push_back(v.get<double>());
            }
            return out;
        };
        inst.mean_reward = read_table(j.at("mean_reward"), "mean_reward");
        for (const auto& c : j.at("mean_costs")) inst.mean_costs.push_back(read_table(c, "mean_costs"));
        inst.budgets = j.at("budgets").get<std::vector<double>>();
        inst.init_dist = j.at("init_dist").get<std::vector<double>>();
        inst.noise = j.value("noise", 0.0);
        if (j.contains("scale")) {
            inst.scale.low = j.at("scale").at("low").get<double>();
            inst.scale.high = j.at("scale").at("high").get<double>();
        }
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed instance: ") + e.what());
    }
    inst.validate();
    return inst;
}

void save_instance(const std::string& path, const CmdpInstance& instance) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << instance_to_json(instance).dump(1) << '\n';
    if (!out) throw InputError("failed writing " + path);
}

CmdpInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return instance_from_json(j);
}

Json basis_to_json(const BasisPair& basis, std::size_t num_actions) {
    Json cols = Json::array();
    for (auto c : basis.cols) cols.push_back({c / num_actions, c % num_actions});
    Json j;
    j["cols"] = std::move(cols);
    j["rows_cost"] = basis.rows_cost;
    j["rows_flow"] = basis.rows_flow;
    return j;
}

BasisPair basis_from_json(const Json& j, std::size_t num_actions) {
    BasisPair b;
    try {
        for (const auto& c : j.at("cols")) {
            const auto s = c.at(0).get<std::size_t>(), a = c.at(1).get<std::size_t>();
            if (a >= num_actions) throw InputError("basis column action out of range");
            b.cols.push_back(s * num_actions + a);
        }
        b.rows_cost = j.at("rows_cost").get<std::vector<std::size_t>>();
        b.rows_flow = j.at("rows_flow").get<std::vector<std::size_t>>();
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed basis: ") + e.what());
    }
    return b;
}

Json value_report_to_json(const ValueReport& r) {
    Json j;
    j["v_reward"] = r.v_reward;
    j["v_costs"] = r.v_costs;
    if (!r.state_reward.empty()) j["state_reward"] = r.state_reward;
    if (!r.state_costs.empty()) j["state_costs"] = r.state_costs;
    if (r.truncation > 0) {
        j["se_reward"] = r.se_reward;
        j["se_costs"] = r.se_costs;
        j["truncation"] = r.truncation;
    }
    return j;
}

} // namespace cmdplp
