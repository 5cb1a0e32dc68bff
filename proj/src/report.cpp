#include "probe/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace probe {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

namespace {

ordered_json record_to_json(const VerificationRecord& r) {
    ordered_json j;
    j["node"] = r.node;
    j["method"] = r.method_tag;
    j["metric"] = r.metric_name;
    j["theorem"] = to_string(r.theorem);
    j["metric_value"] = r.metric_value;
    j["bound_value"] = r.bound_value;
    j["slack"] = r.slack;
    j["violated"] = r.violated;
    return j;
}

VerificationRecord record_from_json(const nlohmann::json& j) {
    VerificationRecord r;
    r.node = j.at("node").get<int>();
    r.method_tag = j.at("method").get<std::string>();
    r.metric_name = j.at("metric").get<std::string>();
    const std::string t = j.at("theorem").get<std::string>();
    for (Theorem th : {Theorem::T1_node, Theorem::T1_edge, Theorem::T2, Theorem::T3, Theorem::T4,
                       Theorem::T5, Theorem::T6, Theorem::T7, Theorem::T8})
        if (to_string(th) == t) r.theorem = th;
    r.metric_value = j.at("metric_value").get<double>();
    r.bound_value = j.at("bound_value").get<double>();
    r.slack = j.at("slack").get<double>();
    r.violated = j.at("violated").get<bool>();
    return r;
}

template <typename T>
void put_opt(ordered_json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

}  // namespace

std::string ReliabilityReport::to_json() const {
    ordered_json j;
    j["metadata"]["seed"] = global_seed;
    j["metadata"]["workers"] = workers;
    j["metadata"]["train_accuracy"] = train_accuracy;
    j["metadata"]["test_accuracy"] = test_accuracy;
    j["metadata"]["config"] = nlohmann::json::parse(config_echo);
    j["eval_nodes"] = eval_nodes;

    ordered_json cells_json = ordered_json::array();
    for (const CellResult& c : cells) {
        ordered_json cj;
        cj["node"] = c.node;
        cj["method"] = c.method;
        put_opt(cj, "unfaithfulness", c.unfaithfulness);
        put_opt(cj, "instability", c.instability);
        put_opt(cj, "cf_mismatch", c.cf_mismatch);
        put_opt(cj, "group_fairness_mismatch", c.group_fairness);
        put_opt(cj, "cf_prediction_gap", c.cf_prediction_gap);
        put_opt(cj, "t1_bound", c.t1_bound);
        put_opt(cj, "t8_bound_difference", c.t8_bound_difference);
        put_opt(cj, "t8_bound_label", c.t8_bound_label);
        put_opt(cj, "worst_case", c.worst_case);
        if (!c.skips.empty()) cj["skips"] = c.skips;
        ordered_json recs = ordered_json::array();
        for (const auto& r : c.records) recs.push_back(record_to_json(r));
        cj["records"] = recs;
        cells_json.push_back(cj);
    }
    j["cells"] = cells_json;

    ordered_json checks = ordered_json::array();
    for (const TheoremCheck& tc : theorem_checks) {
        ordered_json t;
        t["theorem"] = to_string(tc.theorem);
        t["checked"] = tc.checked;
        t["violations"] = tc.violations;
        t["skipped"] = tc.skipped;
        t["min_slack"] = tc.min_slack;
        ordered_json recs = ordered_json::array();
        for (const auto& r : tc.records) recs.push_back(record_to_json(r));
        t["records"] = recs;
        if (!tc.skip_reasons.empty()) t["skip_reasons"] = tc.skip_reasons;
        checks.push_back(t);
    }
    j["theorem_checks"] = checks;

    ordered_json aggs = ordered_json::array();
    for (const MethodAggregate& a : aggregates) {
        aggs.push_back({{"method", a.method},
                        {"metric", a.metric},
                        {"mean", a.mean},
                        {"standard_error", a.standard_error},
                        {"count", a.count}});
    }
    j["aggregates"] = aggs;

    ordered_json corr;
    for (const auto& [name, pr] : correlations)
        corr[name] = {{"pearson", pr.first}, {"spearman", pr.second}};
    j["correlations"] = corr;
    j["verification"] = {{"records", record_count}, {"violations", violation_count}};
    return j.dump(2);
}

ReliabilityReport ReliabilityReport::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ReliabilityReport rep;
    rep.global_seed = j.at("metadata").at("seed").get<std::uint64_t>();
    rep.workers = j.at("metadata").at("workers").get<int>();
    rep.train_accuracy = j.at("metadata").at("train_accuracy").get<double>();
    rep.test_accuracy = j.at("metadata").at("test_accuracy").get<double>();
    rep.config_echo = j.at("metadata").at("config").dump(2);
    rep.eval_nodes = j.at("eval_nodes").get<std::vector<int>>();
    for (const auto& cj : j.at("cells")) {
        CellResult c;
        c.node = cj.at("node").get<int>();
        c.method = cj.at("method").get<std::string>();
        auto get_opt = [&](const char* key) -> std::optional<double> {
            if (cj.contains(key)) return cj[key].get<double>();
            return std::nullopt;
        };
        c.unfaithfulness = get_opt("unfaithfulness");
        c.instability = get_opt("instability");
        c.cf_mismatch = get_opt("cf_mismatch");
        c.group_fairness = get_opt("group_fairness_mismatch");
        c.cf_prediction_gap = get_opt("cf_prediction_gap");
        c.t1_bound = get_opt("t1_bound");
        c.t8_bound_difference = get_opt("t8_bound_difference");
        c.t8_bound_label = get_opt("t8_bound_label");
        c.worst_case = get_opt("worst_case");
        if (cj.contains("skips")) c.skips = cj["skips"].get<std::vector<std::string>>();
        for (const auto& rj : cj.at("records")) c.records.push_back(record_from_json(rj));
        rep.cells.push_back(std::move(c));
    }
    for (const auto& tj : j.at("theorem_checks")) {
        TheoremCheck tc;
        const std::string t = tj.at("theorem").get<std::string>();
        for (Theorem th : {Theorem::T2, Theorem::T3, Theorem::T4, Theorem::T5, Theorem::T6,
                           Theorem::T7})
            if (to_string(th) == t) tc.theorem = th;
        tc.checked = tj.at("checked").get<int>();
        tc.violations = tj.at("violations").get<int>();
        tc.skipped = tj.at("skipped").get<int>();
        tc.min_slack = tj.at("min_slack").get<double>();
        for (const auto& rj : tj.at("records")) tc.records.push_back(record_from_json(rj));
        rep.theorem_checks.push_back(std::move(tc));
    }
    for (const auto& aj : j.at("aggregates")) {
        MethodAggregate a;
        a.method = aj.at("method").get<std::string>();
        a.metric = aj.at("metric").get<std::string>();
        a.mean = aj.at("mean").get<double>();
        a.standard_error = aj.at("standard_error").get<double>();
        a.count = aj.at("count").get<int>();
        rep.aggregates.push_back(a);
    }
    if (j.contains("correlations"))
        for (auto it = j["correlations"].begin(); it != j["correlations"].end(); ++it)
            rep.correlations[it.key()] = {it.value().at("pearson").get<double>(),
                                          it.value().at("spearman").get<double>()};
    rep.record_count = j.at("verification").at("records").get<int>();
    rep.violation_count = j.at("verification").at("violations").get<int>();
    return rep;
}

void write_records_csv(const ReliabilityReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "node,method,metric,theorem,metric_value,bound_value,slack,violated\n";
    auto emit = [&](const VerificationRecord& r) {
        out << r.node << ',' << r.method_tag << ',' << r.metric_name << ',' << to_string(r.theorem)
            << ',' << format_double(r.metric_value) << ',' << format_double(r.bound_value) << ','
            << format_double(r.slack) << ',' << (r.violated ? 1 : 0) << '\n';
    };
    for (const CellResult& c : rep.cells)
        for (const auto& r : c.records) emit(r);
    for (const TheoremCheck& tc : rep.theorem_checks)
        for (const auto& r : tc.records) emit(r);
}

void write_aggregate_csv(const ReliabilityReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "method,metric,mean,standard_error,count\n";
    for (const MethodAggregate& a : rep.aggregates)
        out << a.method << ',' << a.metric << ',' << format_double(a.mean) << ','
            << format_double(a.standard_error) << ',' << a.count << '\n';
}

void write_series_csv(const ReliabilityReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    // one file per method: node, empirical unfaithfulness, T1 bound, worst case
    std::vector<std::string> methods;
    for (const CellResult& c : rep.cells)
        if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
            methods.push_back(c.method);
    for (const std::string& m : methods) {
        std::ofstream out(fs::path(dir) / ("bound_vs_empirical_" + m + ".csv"));
        out << "node,unfaithfulness,t1_bound,worst_case\n";
        for (const CellResult& c : rep.cells) {
            if (c.method != m || !c.unfaithfulness) continue;
            out << c.node << ',' << format_double(*c.unfaithfulness) << ','
                << (c.t1_bound ? format_double(*c.t1_bound) : "") << ','
                << (c.worst_case ? format_double(*c.worst_case) : "") << '\n';
        }
    }
}

}  // namespace probe
