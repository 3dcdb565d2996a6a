#include "spibb/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace spibb {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw std::invalid_argument(path + ": " + message);
}

[[noreturn]] void fail_line(const std::string& path, size_t line, const std::string& message) {
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": " + message);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) fail(path, "read error");
    return buffer.str();
}

json parse_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
}

int get_int(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) fail(path, std::string("missing field \"") + key + "\"");
    if (!j[key].is_number_integer()) fail(path, std::string("field \"") + key + "\" must be an integer");
    return j[key].get<int>();
}

double get_double(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) fail(path, std::string("missing field \"") + key + "\"");
    if (!j[key].is_number()) fail(path, std::string("field \"") + key + "\" must be a number");
    return j[key].get<double>();
}

// Nested [rows][cols] numeric array into a flat row-major vector.
std::vector<double> get_matrix(const json& j, const char* key, int rows, int cols,
                               const std::string& path) {
    if (!j.contains(key)) fail(path, std::string("missing field \"") + key + "\"");
    const json& m = j[key];
    if (!m.is_array() || static_cast<int>(m.size()) != rows) {
        fail(path, std::string("field \"") + key + "\" must be an array of " + std::to_string(rows) +
                       " rows");
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = m[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            fail(path, std::string("field \"") + key + "\" row " + std::to_string(r) + " must have " +
                           std::to_string(cols) + " entries");
        }
        for (int c = 0; c < cols; ++c) {
            const json& cell = row[static_cast<size_t>(c)];
            if (!cell.is_number()) {
                fail(path, std::string("field \"") + key + "\" row " + std::to_string(r) +
                               " entry " + std::to_string(c) + " must be a number");
            }
            out.push_back(cell.get<double>());
        }
    }
    return out;
}

json matrix_to_json(const std::vector<double>& flat, int rows, int cols) {
    json m = json::array();
    for (int r = 0; r < rows; ++r) {
        json row = json::array();
        for (int c = 0; c < cols; ++c) row.push_back(flat[static_cast<size_t>(r) * cols + c]);
        m.push_back(std::move(row));
    }
    return m;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

long long parse_ll(const std::string& field, const std::string& path, size_t line,
                   const char* column) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(field.c_str(), &end, 10);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE) {
        fail_line(path, line, std::string("column \"") + column + "\": not an integer: \"" + field +
                                  "\"");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& field, const std::string& path, size_t line,
                        const char* column) {
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(field.c_str(), &end, 10);
    if (field.empty() || field[0] == '-' || end != field.c_str() + field.size() || errno == ERANGE) {
        fail_line(path, line, std::string("column \"") + column +
                                  "\": not an unsigned integer: \"" + field + "\"");
    }
    return v;
}

double parse_d(const std::string& field, const std::string& path, size_t line, const char* column) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
        fail_line(path, line, std::string("column \"") + column + "\": not a number: \"" + field +
                                  "\"");
    }
    return v;
}

int parse_index(const std::string& field, const std::string& path, size_t line, const char* column) {
    long long v = parse_ll(field, path, line, column);
    if (v < 0 || v > std::numeric_limits<int>::max()) {
        fail_line(path, line, std::string("column \"") + column + "\": out of range");
    }
    return static_cast<int>(v);
}

// Lines of a CSV file after checking the exact expected header.
std::vector<std::string> csv_body(const std::string& text, const std::string& path,
                                  const std::string& header) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != header) fail_line(path, 1, "expected header \"" + header + "\"");
            continue;
        }
        if (line.empty()) continue;
        lines.push_back(line);
    }
    if (lineno == 0) fail(path, "empty file, expected header \"" + header + "\"");
    return lines;
}

// CVaR column label: level 10 -> cvar_10, 0.1 -> cvar_0_1.
std::string cvar_column(double level) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", level);
    std::string name = buffer;
    for (char& ch : name) {
        if (ch == '.') ch = '_';
    }
    return "cvar_" + name;
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path temp = target;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(temp.string() + ": cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error(temp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(temp, target, ec);
    if (ec) {
        fs::remove(temp);
        throw std::runtime_error(path + ": rename failed: " + ec.message());
    }
}

Mdp load_mdp(const std::string& path) {
    json j = parse_json(path);
    Mdp mdp;
    mdp.n_states = get_int(j, "n_states", path);
    mdp.n_actions = get_int(j, "n_actions", path);
    mdp.gamma = get_double(j, "gamma", path);
    mdp.r_max = get_double(j, "r_max", path);
    mdp.initial_state = get_int(j, "initial_state", path);
    if (mdp.n_states < 1 || mdp.n_actions < 1) fail(path, "state and action counts must be positive");

    if (!j.contains("terminal") || !j["terminal"].is_array() ||
        static_cast<int>(j["terminal"].size()) != mdp.n_states) {
        fail(path, "field \"terminal\" must be an array of n_states flags");
    }
    mdp.terminal.resize(static_cast<size_t>(mdp.n_states));
    for (int x = 0; x < mdp.n_states; ++x) {
        const json& cell = j["terminal"][static_cast<size_t>(x)];
        if (!cell.is_number_integer() || (cell.get<int>() != 0 && cell.get<int>() != 1)) {
            fail(path, "field \"terminal\" entries must be 0 or 1");
        }
        mdp.terminal[static_cast<size_t>(x)] = static_cast<std::uint8_t>(cell.get<int>());
    }

    mdp.reward = get_matrix(j, "reward", mdp.n_states, mdp.n_actions, path);
    mdp.transition =
        get_matrix(j, "transition", mdp.n_states * mdp.n_actions, mdp.n_states, path);
    try {
        mdp.validate();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return mdp;
}

void save_mdp(const Mdp& mdp, const std::string& path) {
    mdp.validate();
    json j;
    j["n_states"] = mdp.n_states;
    j["n_actions"] = mdp.n_actions;
    j["gamma"] = mdp.gamma;
    j["r_max"] = mdp.r_max;
    j["initial_state"] = mdp.initial_state;
    json terminal = json::array();
    for (std::uint8_t t : mdp.terminal) terminal.push_back(static_cast<int>(t));
    j["terminal"] = std::move(terminal);
    j["reward"] = matrix_to_json(mdp.reward, mdp.n_states, mdp.n_actions);
    j["transition"] = matrix_to_json(mdp.transition, mdp.n_states * mdp.n_actions, mdp.n_states);
    atomic_write_text(path, j.dump(2) + "\n");
}

PolicyTable load_policy(const std::string& path) {
    json j = parse_json(path);
    PolicyTable policy;
    policy.n_states = get_int(j, "n_states", path);
    policy.n_actions = get_int(j, "n_actions", path);
    if (policy.n_states < 1 || policy.n_actions < 1) {
        fail(path, "state and action counts must be positive");
    }
    policy.probs = get_matrix(j, "probs", policy.n_states, policy.n_actions, path);

    int renormalized = 0;
    double worst = 0.0;
    for (int x = 0; x < policy.n_states; ++x) {
        double sum = 0.0;
        for (int a = 0; a < policy.n_actions; ++a) {
            double p = policy.at(x, a);
            if (!std::isfinite(p) || p < 0.0) {
                fail(path, "row " + std::to_string(x) + " has a negative or non-finite probability");
            }
            sum += p;
        }
        double deviation = std::abs(sum - 1.0);
        if (deviation > 1e-9) {
            fail(path, "row " + std::to_string(x) + " sums to " + format_double(sum) +
                           ", outside the 1e-9 tolerance");
        }
        if (sum != 1.0) {
            for (int a = 0; a < policy.n_actions; ++a) policy.at(x, a) /= sum;
            ++renormalized;
            worst = std::max(worst, deviation);
        }
    }
    if (renormalized > 0) {
        std::cerr << "load_policy: " << path << ": renormalized " << renormalized
                  << " row(s), largest deviation " << format_double(worst) << "\n";
    }
    return policy;
}

void save_policy(const PolicyTable& policy, const std::string& path) {
    policy.validate();
    json j;
    j["n_states"] = policy.n_states;
    j["n_actions"] = policy.n_actions;
    j["probs"] = matrix_to_json(policy.probs, policy.n_states, policy.n_actions);
    atomic_write_text(path, j.dump(2) + "\n");
}

QTable load_q_table(const std::string& path) {
    json j = parse_json(path);
    QTable table;
    table.n_states = get_int(j, "n_states", path);
    table.n_actions = get_int(j, "n_actions", path);
    if (table.n_states < 1 || table.n_actions < 1) {
        fail(path, "state and action counts must be positive");
    }
    table.values = get_matrix(j, "values", table.n_states, table.n_actions, path);
    for (double v : table.values) {
        if (!std::isfinite(v)) fail(path, "field \"values\" must contain finite numbers");
    }
    return table;
}

void save_q_table(const QTable& table, const std::string& path) {
    json j;
    j["n_states"] = table.n_states;
    j["n_actions"] = table.n_actions;
    j["values"] = matrix_to_json(table.values, table.n_states, table.n_actions);
    atomic_write_text(path, j.dump(2) + "\n");
}

ErrorTable load_error_table(const std::string& path) {
    json j = parse_json(path);
    ErrorTable table;
    table.n_states = get_int(j, "n_states", path);
    table.n_actions = get_int(j, "n_actions", path);
    if (table.n_states < 1 || table.n_actions < 1) {
        fail(path, "state and action counts must be positive");
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
        fail(path, "missing string field \"kind\"");
    }
    try {
        table.kind = error_kind_from_name(j["kind"].get<std::string>());
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }

    if (!j.contains("values") || !j["values"].is_array() ||
        static_cast<int>(j["values"].size()) != table.n_states) {
        fail(path, "field \"values\" must be an array of n_states rows");
    }
    table.values.reserve(static_cast<size_t>(table.n_states) * table.n_actions);
    for (int x = 0; x < table.n_states; ++x) {
        const json& row = j["values"][static_cast<size_t>(x)];
        if (!row.is_array() || static_cast<int>(row.size()) != table.n_actions) {
            fail(path, "field \"values\" row " + std::to_string(x) + " must have " +
                           std::to_string(table.n_actions) + " entries");
        }
        for (int a = 0; a < table.n_actions; ++a) {
            const json& cell = row[static_cast<size_t>(a)];
            double v;
            if (cell.is_string()) {
                if (cell.get<std::string>() != "inf") {
                    fail(path, "field \"values\" row " + std::to_string(x) +
                                   ": the only string entry allowed is \"inf\"");
                }
                v = error_sentinel;
            } else if (cell.is_number()) {
                v = cell.get<double>();
                if (std::isnan(v) || v < 0.0) {
                    fail(path, "field \"values\" row " + std::to_string(x) +
                                   ": entries must be nonnegative");
                }
            } else {
                fail(path, "field \"values\" row " + std::to_string(x) +
                               ": entries must be numbers or \"inf\"");
            }
            table.values.push_back(v);
        }
    }
    return table;
}

void save_error_table(const ErrorTable& table, const std::string& path) {
    json j;
    j["n_states"] = table.n_states;
    j["n_actions"] = table.n_actions;
    j["kind"] = error_kind_name(table.kind);
    json values = json::array();
    for (int x = 0; x < table.n_states; ++x) {
        json row = json::array();
        for (int a = 0; a < table.n_actions; ++a) {
            double v = table.at(x, a);
            if (std::isnan(v) || v < 0.0) {
                throw std::invalid_argument(path + ": error values must be nonnegative");
            }
            if (std::isinf(v)) row.push_back("inf");
            else row.push_back(v);
        }
        values.push_back(std::move(row));
    }
    j["values"] = std::move(values);
    atomic_write_text(path, j.dump(2) + "\n");
}

Dataset load_dataset(const std::string& path, int n_states, int n_actions) {
    const std::string header = "trajectory,step,state,action,reward,next_state";
    std::vector<std::string> lines = csv_body(read_text(path), path, header);

    Dataset dataset;
    int max_state = -1;
    int max_action = -1;
    size_t lineno = 1;
    for (const std::string& line : lines) {
        ++lineno;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != 6) fail_line(path, lineno, "expected 6 fields");
        Transition t;
        t.trajectory_id = parse_index(fields[0], path, lineno, "trajectory");
        t.step = parse_index(fields[1], path, lineno, "step");
        t.state = parse_index(fields[2], path, lineno, "state");
        t.action = parse_index(fields[3], path, lineno, "action");
        t.reward = parse_d(fields[4], path, lineno, "reward");
        t.next_state = parse_index(fields[5], path, lineno, "next_state");
        max_state = std::max({max_state, t.state, t.next_state});
        max_action = std::max(max_action, t.action);
        dataset.transitions.push_back(t);
    }
    dataset.n_states = n_states > 0 ? n_states : max_state + 1;
    dataset.n_actions = n_actions > 0 ? n_actions : max_action + 1;
    try {
        dataset.validate();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    dataset.validate();
    std::string text = "trajectory,step,state,action,reward,next_state\n";
    for (const Transition& t : dataset.transitions) {
        text += std::to_string(t.trajectory_id);
        text += ',';
        text += std::to_string(t.step);
        text += ',';
        text += std::to_string(t.state);
        text += ',';
        text += std::to_string(t.action);
        text += ',';
        text += format_double(t.reward);
        text += ',';
        text += std::to_string(t.next_state);
        text += '\n';
    }
    atomic_write_text(path, text);
}

std::vector<RunRecord> load_run_records(const std::string& path) {
    const std::string header = "seed,eta,n_trajectories,algorithm,hyperparameter,raw_perf,normalized_perf";
    std::vector<std::string> lines = csv_body(read_text(path), path, header);

    std::vector<RunRecord> records;
    records.reserve(lines.size());
    size_t lineno = 1;
    for (const std::string& line : lines) {
        ++lineno;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != 7) fail_line(path, lineno, "expected 7 fields");
        RunRecord r;
        r.seed = parse_u64(fields[0], path, lineno, "seed");
        r.eta = parse_d(fields[1], path, lineno, "eta");
        r.n_trajectories = parse_index(fields[2], path, lineno, "n_trajectories");
        r.algorithm = fields[3];
        if (r.algorithm.empty()) fail_line(path, lineno, "column \"algorithm\": empty");
        r.hyperparameter = parse_d(fields[4], path, lineno, "hyperparameter");
        r.raw_perf = parse_d(fields[5], path, lineno, "raw_perf");
        r.normalized_perf = parse_d(fields[6], path, lineno, "normalized_perf");
        records.push_back(std::move(r));
    }
    return records;
}

void save_run_records(const std::vector<RunRecord>& records, const std::string& path) {
    std::string text = "seed,eta,n_trajectories,algorithm,hyperparameter,raw_perf,normalized_perf\n";
    for (const RunRecord& r : records) {
        text += std::to_string(r.seed);
        text += ',';
        text += format_double(r.eta);
        text += ',';
        text += std::to_string(r.n_trajectories);
        text += ',';
        text += r.algorithm;
        text += ',';
        text += format_double(r.hyperparameter);
        text += ',';
        text += format_double(r.raw_perf);
        text += ',';
        text += format_double(r.normalized_perf);
        text += '\n';
    }
    atomic_write_text(path, text);
}

std::string format_aggregate_csv(const std::vector<AggregateRow>& rows,
                                 const std::vector<double>& levels) {
    std::string text = "eta,n_trajectories,algorithm,hyperparameter,mean";
    for (double level : levels) {
        text += ',';
        text += cvar_column(level);
    }
    text += ",n_runs\n";
    for (const AggregateRow& row : rows) {
        if (row.cvar_values.size() != levels.size()) {
            throw std::invalid_argument("aggregate row has " +
                                        std::to_string(row.cvar_values.size()) +
                                        " CVaR values for " + std::to_string(levels.size()) +
                                        " levels");
        }
        text += format_double(row.eta);
        text += ',';
        text += std::to_string(row.n_trajectories);
        text += ',';
        text += row.algorithm;
        text += ',';
        text += format_double(row.hyperparameter);
        text += ',';
        text += format_double(row.mean);
        for (double v : row.cvar_values) {
            text += ',';
            text += format_double(v);
        }
        text += ',';
        text += std::to_string(row.n_runs);
        text += '\n';
    }
    return text;
}

void save_aggregate(const std::vector<AggregateRow>& rows, const std::vector<double>& levels,
                    const std::string& path) {
    atomic_write_text(path, format_aggregate_csv(rows, levels));
}

}  // namespace spibb
