#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "probe/harness.hpp"
#include "probe/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitBoundViolation = 3;

probe::ExperimentConfig load_config(const std::string& path) {
    return probe::ExperimentConfig::from_file(path);
}

int cmd_train(const std::string& config_path, std::string out_dir) {
    const auto cfg = load_config(config_path);
    if (out_dir.empty()) out_dir = cfg.output_dir;
    fs::create_directories(out_dir);
    const probe::Graph graph = cfg.build_graph();
    probe::GnnModel init(graph.feature_dim, cfg.hidden_dims, graph.class_count, cfg.model_seed);
    const probe::TrainResult tr = probe::train(init, graph, cfg.train);
    tr.model.save((fs::path(out_dir) / "checkpoint.json").string());
    {
        std::ofstream log(fs::path(out_dir) / "train_loss.csv");
        log << "epoch,loss\n";
        for (std::size_t i = 0; i < tr.loss_trace.size(); ++i)
            log << i << ',' << probe::format_double(tr.loss_trace[i]) << '\n';
    }
    const double train_acc = probe::masked_accuracy(tr.model, graph, graph.train_mask);
    const double test_acc = probe::masked_accuracy(tr.model, graph, graph.test_mask);
    std::cout << "checkpoint: " << (fs::path(out_dir) / "checkpoint.json").string() << "\n"
              << "train_accuracy: " << train_acc << "\n"
              << "test_accuracy: " << test_acc << "\n";
    return 0;
}

std::vector<int> parse_nodes(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

int cmd_explain(const std::string& config_path, const std::string& checkpoint_path,
                std::string out_dir, const std::string& nodes_csv) {
    const auto cfg = load_config(config_path);
    if (out_dir.empty()) out_dir = cfg.output_dir;
    fs::create_directories(out_dir);
    std::optional<probe::GnnModel> ckpt;
    if (!checkpoint_path.empty()) ckpt = probe::GnnModel::load(checkpoint_path);
    const probe::RunArtifacts art = probe::prepare_run(cfg, ckpt);

    std::vector<int> nodes;
    if (!nodes_csv.empty()) {
        nodes = parse_nodes(nodes_csv);
    } else {
        for (int u = 0; u < art.graph.node_count; ++u) {
            if (static_cast<int>(nodes.size()) >= cfg.max_eval_nodes) break;
            if (art.graph.test_mask[u]) nodes.push_back(u);
        }
    }
    int written = 0, skipped = 0;
    const int hops = art.model.layer_count();
    for (int u : nodes) {
        const probe::ComputationSubgraph sg = probe::computation_subgraph(art.graph, u, hops);
        for (const std::string& method : cfg.methods) {
            try {
                const probe::Explanation e = probe::explain_node(method, art, cfg, sg, 0);
                std::ofstream out(fs::path(out_dir) /
                                  ("explanation_" + std::to_string(u) + "_" + method + ".json"));
                out << e.to_json() << "\n";
                ++written;
            } catch (const probe::ExplainError& ex) {
                std::cout << "skip node " << u << " method " << method << ": " << ex.what() << "\n";
                ++skipped;
            }
        }
    }
    std::cout << "explanations written: " << written << " skipped: " << skipped << "\n";
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                 std::string out_dir, bool fail_on_violation) {
    const auto cfg = load_config(config_path);
    if (out_dir.empty()) out_dir = cfg.output_dir;
    fs::create_directories(out_dir);
    std::optional<probe::GnnModel> ckpt;
    if (!checkpoint_path.empty()) ckpt = probe::GnnModel::load(checkpoint_path);
    const probe::ReliabilityReport rep = probe::run_evaluation(cfg, ckpt);
    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        out << rep.to_json() << "\n";
    }
    probe::write_records_csv(rep, (fs::path(out_dir) / "records.csv").string());
    std::cout << "report: " << (fs::path(out_dir) / "report.json").string() << "\n"
              << "records: " << rep.record_count << " violations: " << rep.violation_count << "\n";
    if (fail_on_violation && rep.violation_count > 0) return kExitBoundViolation;
    return 0;
}

int cmd_report(const std::string& report_path, std::string out_dir, const std::string& format) {
    std::ifstream in(report_path);
    if (!in) {
        std::cerr << "cannot open report: " << report_path << "\n";
        return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const probe::ReliabilityReport rep = probe::ReliabilityReport::from_json(ss.str());
    if (out_dir.empty()) out_dir = fs::path(report_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
    fs::create_directories(out_dir);
    if (format == "json") {
        std::ofstream out(fs::path(out_dir) / "report_echo.json");
        out << rep.to_json() << "\n";
    } else {
        probe::write_aggregate_csv(rep, (fs::path(out_dir) / "aggregates.csv").string());
        probe::write_records_csv(rep, (fs::path(out_dir) / "records.csv").string());
        probe::write_series_csv(rep, (fs::path(out_dir) / "series").string());
    }
    std::cout << "report artifacts written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explanation-reliability probe for the softplus message-passing GNN"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_dir, nodes_csv, report_path, format = "csv";
    bool fail_on_violation = false;

    auto* train_cmd = app.add_subcommand("train", "train the model and write a checkpoint");
    train_cmd->add_option("--config", config_path, "config JSON path")->required();
    train_cmd->add_option("--out", out_dir, "output directory");

    auto* explain_cmd = app.add_subcommand("explain", "write per-(node, method) explanations");
    explain_cmd->add_option("--config", config_path, "config JSON path")->required();
    explain_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint");
    explain_cmd->add_option("--out", out_dir, "output directory");
    explain_cmd->add_option("--nodes", nodes_csv, "comma-separated node ids");

    auto* eval_cmd = app.add_subcommand("evaluate", "metrics, bounds and verification records");
    eval_cmd->add_option("--config", config_path, "config JSON path")->required();
    eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint");
    eval_cmd->add_option("--out", out_dir, "output directory");
    eval_cmd->add_flag("--fail-on-violation", fail_on_violation,
                       "exit 3 when any bound is violated");

    auto* report_cmd = app.add_subcommand("report", "emit tables and plot series from a report");
    report_cmd->add_option("--report", report_path, "report.json path")->required();
    report_cmd->add_option("--out", out_dir, "output directory");
    report_cmd->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, out_dir);
        if (explain_cmd->parsed()) return cmd_explain(config_path, checkpoint_path, out_dir, nodes_csv);
        if (eval_cmd->parsed())
            return cmd_evaluate(config_path, checkpoint_path, out_dir, fail_on_violation);
        if (report_cmd->parsed()) return cmd_report(report_path, out_dir, format);
    } catch (const probe::ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
