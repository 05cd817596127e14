#include "acmdp/serialize.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>

namespace acmdp {

using nlohmann::json;

namespace {

std::string format_real(Real v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Real parse_real(const std::string& token) {
    if (token == "inf") return kInf;
    if (token == "-inf") return -kInf;
    Real v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw std::runtime_error("bad numeric field '" + token + "'");
    return v;
}

json cost_to_json(Real cost) {
    if (cost == kInf) return json("inf");
    return json(cost);
}

Real cost_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kInf;
        throw std::runtime_error("cost must be a number or the string \"inf\"");
    }
    return j.get<Real>();
}

json values_to_json(const std::vector<Real>& values) {
    json out = json::array();
    for (Real v : values) {
        if (v == kInf)
            out.push_back(nullptr);
        else
            out.push_back(v);
    }
    return out;
}

std::vector<Real> values_from_json(const json& j) {
    std::vector<Real> out;
    out.reserve(j.size());
    for (const auto& entry : j) out.push_back(entry.is_null() ? kInf : entry.get<Real>());
    return out;
}

// per-state action-index lists <-> external action ids
json action_sets_to_json(const FiniteMdp& model, const std::vector<std::vector<int>>& sets) {
    json out = json::array();
    for (int x = 0; x < model.num_states; ++x) {
        json ids = json::array();
        for (int a : sets[static_cast<size_t>(x)]) ids.push_back(model.action(x, a).id);
        out.push_back(std::move(ids));
    }
    return out;
}

int index_of_id(const FiniteMdp& model, int x, int id) {
    for (int a = 0; a < model.num_actions(x); ++a)
        if (model.action(x, a).id == id) return a;
    throw std::runtime_error("unknown action id " + std::to_string(id) + " at state " +
                             std::to_string(x));
}

std::vector<std::vector<int>> action_sets_from_json(const FiniteMdp& model, const json& j) {
    std::vector<std::vector<int>> sets;
    sets.reserve(j.size());
    int x = 0;
    for (const auto& ids : j) {
        std::vector<int> indices;
        for (const auto& id : ids) indices.push_back(index_of_id(model, x, id.get<int>()));
        sets.push_back(std::move(indices));
        ++x;
    }
    return sets;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

std::vector<int> policy_to_ids(const FiniteMdp& model, const StationaryPolicy& policy) {
    std::vector<int> ids;
    ids.reserve(policy.size());
    for (int x = 0; x < model.num_states; ++x) ids.push_back(model.action(x, policy(x)).id);
    return ids;
}

StationaryPolicy policy_from_ids(const FiniteMdp& model, const std::vector<int>& ids) {
    StationaryPolicy policy;
    policy.choice.reserve(ids.size());
    for (int x = 0; x < static_cast<int>(ids.size()); ++x)
        policy.choice.push_back(index_of_id(model, x, ids[static_cast<size_t>(x)]));
    return policy;
}

std::string write_model_json(const FiniteMdp& model) {
    json j;
    j["num_states"] = model.num_states;
    j["lower_bound"] = model.lower_bound;
    json states = json::array();
    for (const auto& state : model.states) {
        json actions = json::array();
        for (const auto& act : state) {
            json kernel = json::object();
            for (const auto& [y, p] : act.kernel) kernel[std::to_string(y)] = p;
            actions.push_back({{"id", act.id}, {"cost", cost_to_json(act.cost)},
                               {"kernel", std::move(kernel)}});
        }
        states.push_back({{"actions", std::move(actions)}});
    }
    j["states"] = std::move(states);
    return j.dump(2) + "\n";
}

FiniteMdp parse_model_json(const std::string& text) {
    const json j = json::parse(text);
    FiniteMdp model;
    model.num_states = j.at("num_states").get<int>();
    model.lower_bound = j.at("lower_bound").get<Real>();
    for (const auto& state : j.at("states")) {
        std::vector<FiniteMdp::Action> actions;
        for (const auto& act : state.at("actions")) {
            FiniteMdp::Action a;
            a.id = act.at("id").get<int>();
            a.cost = cost_from_json(act.at("cost"));
            for (const auto& [key, value] : act.at("kernel").items())
                a.kernel.emplace_back(std::stoi(key), value.get<Real>());
            std::sort(a.kernel.begin(), a.kernel.end());
            actions.push_back(std::move(a));
        }
        model.states.push_back(std::move(actions));
    }
    return validate_mdp(std::move(model));
}

std::string write_solution_json(const FiniteMdp& model, const DiscountedSolution& solution) {
    json j;
    j["alpha"] = solution.alpha;
    j["values"] = values_to_json(solution.values);
    j["policy"] = policy_to_ids(model, solution.policy);
    j["opt_actions"] = action_sets_to_json(model, solution.opt_actions);
    j["residual"] = solution.residual;
    j["iterations"] = solution.iterations;
    j["monotone"] = solution.monotone;
    j["tol"] = solution.tol;
    j["match_tol"] = solution.match_tol;
    return j.dump(2) + "\n";
}

DiscountedSolution parse_solution_json(const FiniteMdp& model, const std::string& text) {
    const json j = json::parse(text);
    DiscountedSolution sol;
    sol.alpha = j.at("alpha").get<Real>();
    sol.values = values_from_json(j.at("values"));
    sol.policy = policy_from_ids(model, j.at("policy").get<std::vector<int>>());
    sol.opt_actions = action_sets_from_json(model, j.at("opt_actions"));
    sol.residual = j.at("residual").get<Real>();
    sol.iterations = j.at("iterations").get<long long>();
    sol.monotone = j.at("monotone").get<bool>();
    sol.tol = j.at("tol").get<Real>();
    sol.match_tol = j.at("match_tol").get<Real>();
    return sol;
}

std::string write_trace_csv(const VanishingTrace& trace) {
    std::string out = "alpha,state,v,m_alpha,u_alpha,scaled_m_alpha\n";
    for (size_t k = 0; k < trace.size(); ++k) {
        const auto& rec = trace.records[k];
        const std::string alpha = format_real(rec.alpha);
        const std::string m = format_real(rec.min_value);
        const std::string scaled = format_real(trace.scaled_min(k));
        for (size_t x = 0; x < rec.values.size(); ++x) {
            out += alpha;
            out += ',';
            out += std::to_string(x);
            out += ',';
            out += format_real(rec.values[x]);
            out += ',';
            out += m;
            out += ',';
            out += format_real(rec.relative_values[x]);
            out += ',';
            out += scaled;
            out += '\n';
        }
    }
    return out;
}

TraceRows parse_trace_csv(const std::string& text) {
    TraceRows rows;
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw std::runtime_error("empty trace CSV");
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 6) throw std::runtime_error("bad trace CSV row: " + line);
        const Real alpha = parse_real(fields[0]);
        if (rows.alphas.empty() || rows.alphas.back() != alpha) {
            rows.alphas.push_back(alpha);
            rows.values.emplace_back();
            rows.relative_values.emplace_back();
            rows.min_values.push_back(parse_real(fields[3]));
            rows.scaled_min_values.push_back(parse_real(fields[5]));
        }
        rows.values.back().push_back(parse_real(fields[2]));
        rows.relative_values.back().push_back(parse_real(fields[4]));
    }
    return rows;
}

std::string write_certificate_json(const FiniteMdp& model, const AcoiCertificate& cert) {
    json j;
    j["u"] = values_to_json(cert.u);
    j["w_bar"] = cert.w_bar;
    j["policy"] = policy_to_ids(model, cert.policy);
    json slack = json::array();
    for (Real s : cert.slack) slack.push_back(s == -kInf ? json(nullptr) : json(s));
    j["slack"] = std::move(slack);
    j["pass"] = cert.pass;
    j["tol"] = cert.tol;
    j["match_tol"] = cert.match_tol;
    j["certified_actions"] = action_sets_to_json(model, cert.certified_actions);
    j["minimizing_actions"] = action_sets_to_json(model, cert.minimizing_actions);
    if (cert.failure_state) {
        j["failure_state"] = *cert.failure_state;
        j["failure_gap"] = cert.failure_gap == kInf ? json(nullptr) : json(cert.failure_gap);
        j["failure_reason"] = cert.failure_reason;
    }
    return j.dump(2) + "\n";
}

AcoiCertificate parse_certificate_json(const FiniteMdp& model, const std::string& text) {
    const json j = json::parse(text);
    AcoiCertificate cert;
    cert.u = values_from_json(j.at("u"));
    cert.w_bar = j.at("w_bar").get<Real>();
    cert.policy = policy_from_ids(model, j.at("policy").get<std::vector<int>>());
    for (const auto& s : j.at("slack")) cert.slack.push_back(s.is_null() ? -kInf : s.get<Real>());
    cert.pass = j.at("pass").get<bool>();
    cert.tol = j.at("tol").get<Real>();
    cert.match_tol = j.at("match_tol").get<Real>();
    cert.certified_actions = action_sets_from_json(model, j.at("certified_actions"));
    cert.minimizing_actions = action_sets_from_json(model, j.at("minimizing_actions"));
    if (j.contains("failure_state")) {
        cert.failure_state = j.at("failure_state").get<int>();
        cert.failure_gap = j.at("failure_gap").is_null() ? kInf : j.at("failure_gap").get<Real>();
        cert.failure_reason = j.at("failure_reason").get<std::string>();
    }
    return cert;
}

std::string write_limit_actions_json(const FiniteMdp& model, const LimitActionSets& sets) {
    json j;
    j["actions"] = action_sets_to_json(model, sets.actions);
    json counts = json::array();
    for (int x = 0; x < model.num_states; ++x) {
        json per_state = json::object();
        const auto& row = sets.support_counts[static_cast<size_t>(x)];
        for (size_t a = 0; a < row.size(); ++a)
            if (row[a] > 0)
                per_state[std::to_string(model.action(x, static_cast<int>(a)).id)] = row[a];
        counts.push_back(std::move(per_state));
    }
    j["support_counts"] = std::move(counts);
    j["fallback_states"] = sets.fallback_states;
    j["tail_window"] = sets.tail_window;
    j["min_count"] = sets.min_count;
    return j.dump(2) + "\n";
}

LimitActionSets parse_limit_actions_json(const FiniteMdp& model, const std::string& text) {
    const json j = json::parse(text);
    LimitActionSets sets;
    sets.actions = action_sets_from_json(model, j.at("actions"));
    int x = 0;
    for (const auto& per_state : j.at("support_counts")) {
        std::vector<int> row(static_cast<size_t>(model.num_actions(x)), 0);
        for (const auto& [id, count] : per_state.items())
            row[static_cast<size_t>(index_of_id(model, x, std::stoi(id)))] = count.get<int>();
        sets.support_counts.push_back(std::move(row));
        ++x;
    }
    sets.fallback_states = j.at("fallback_states").get<std::vector<int>>();
    sets.tail_window = j.at("tail_window").get<int>();
    sets.min_count = j.at("min_count").get<int>();
    return sets;
}

std::string write_oracle_json(const FiniteMdp& model, const OracleResult& result) {
    json j;
    j["method"] = result.method == OracleMethod::enumeration ? "enumeration"
                                                             : "relative_value_iteration";
    j["optimal_gain"] = values_to_json(result.optimal_gain);
    j["policy"] = policy_to_ids(model, result.optimal_policy);
    j["aperiodicity_applied"] = result.aperiodicity_applied;
    return j.dump(2) + "\n";
}

OracleResult parse_oracle_json(const FiniteMdp& model, const std::string& text) {
    const json j = json::parse(text);
    OracleResult result;
    result.method = j.at("method").get<std::string>() == "enumeration"
                        ? OracleMethod::enumeration
                        : OracleMethod::relative_value_iteration;
    result.optimal_gain = values_from_json(j.at("optimal_gain"));
    result.optimal_policy = policy_from_ids(model, j.at("policy").get<std::vector<int>>());
    result.aperiodicity_applied = j.at("aperiodicity_applied").get<bool>();
    return result;
}

std::string write_tauberian_csv(const TauberianReport& report) {
    std::string out = "route,parameter,state,value,gap\n";
    for (size_t k = 0; k < report.alphas.size(); ++k) {
        for (size_t x = 0; x < report.abel[k].size(); ++x) {
            out += "abel,";
            out += format_real(report.alphas[k]);
            out += ',';
            out += std::to_string(x);
            out += ',';
            out += format_real(report.abel[k][x]);
            out += ',';
            out += format_real(std::abs(report.abel[k][x] - report.gain[x]));
            out += '\n';
        }
    }
    for (size_t i = 0; i < report.horizons.size(); ++i) {
        for (size_t x = 0; x < report.cesaro[i].size(); ++x) {
            out += "cesaro,";
            out += std::to_string(report.horizons[i]);
            out += ',';
            out += std::to_string(x);
            out += ',';
            out += format_real(report.cesaro[i][x]);
            out += ',';
            out += format_real(std::abs(report.cesaro[i][x] - report.gain[x]));
            out += '\n';
        }
    }
    return out;
}

TauberianRows parse_tauberian_csv(const std::string& text) {
    TauberianRows rows;
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw std::runtime_error("empty tauberian CSV");
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 5) throw std::runtime_error("bad tauberian CSV row: " + line);
        if (fields[0] == "abel") {
            const Real alpha = parse_real(fields[1]);
            if (rows.abel_alphas.empty() || rows.abel_alphas.back() != alpha) {
                rows.abel_alphas.push_back(alpha);
                rows.abel.emplace_back();
            }
            rows.abel.back().push_back(parse_real(fields[3]));
        } else if (fields[0] == "cesaro") {
            const long long horizon = std::stoll(fields[1]);
            if (rows.horizons.empty() || rows.horizons.back() != horizon) {
                rows.horizons.push_back(horizon);
                rows.cesaro.emplace_back();
            }
            rows.cesaro.back().push_back(parse_real(fields[3]));
        } else {
            throw std::runtime_error("unknown tauberian route '" + fields[0] + "'");
        }
    }
    return rows;
}

std::string write_min_states_json(const MinStateReport& report) {
    json j;
    j["tol"] = report.tol;
    j["per_alpha"] = report.per_alpha;
    j["union"] = report.union_states;
    j["min_index"] = report.min_index;
    j["max_index"] = report.max_index;
    return j.dump(2) + "\n";
}

MinStateReport parse_min_states_json(const std::string& text) {
    const json j = json::parse(text);
    MinStateReport report;
    report.tol = j.at("tol").get<Real>();
    report.per_alpha = j.at("per_alpha").get<std::vector<std::vector<int>>>();
    report.union_states = j.at("union").get<std::vector<int>>();
    report.min_index = j.at("min_index").get<int>();
    report.max_index = j.at("max_index").get<int>();
    return report;
}

std::string write_lq_comparison_csv(const LqComparisonRows& rows) {
    std::string out = "x,policy_action,reference_action,abs_diff\n";
    for (size_t i = 0; i < rows.x.size(); ++i) {
        out += format_real(rows.x[i]);
        out += ',';
        out += format_real(rows.policy_action[i]);
        out += ',';
        out += format_real(rows.reference_action[i]);
        out += ',';
        out += format_real(std::abs(rows.policy_action[i] - rows.reference_action[i]));
        out += '\n';
    }
    return out;
}

LqComparisonRows parse_lq_comparison_csv(const std::string& text) {
    LqComparisonRows rows;
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw std::runtime_error("empty comparison CSV");
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 4) throw std::runtime_error("bad comparison CSV row: " + line);
        rows.x.push_back(parse_real(fields[0]));
        rows.policy_action.push_back(parse_real(fields[1]));
        rows.reference_action.push_back(parse_real(fields[2]));
    }
    return rows;
}

void save_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string load_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace acmdp
