// SPDX-License-Identifier: Apache-2.0
// igk: graph kernels, consistency analysis and GNN training from the command line.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "igk/consistency.hpp"
#include "igk/consistency_loss.hpp"
#include "igk/gnn.hpp"
#include "igk/graph.hpp"
#include "igk/kernels.hpp"
#include "igk/metrics.hpp"
#include "igk/wl.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchemaVersion = "1.0";

enum Exit { ok = 0, violations = 1, usage = 2, data = 3 };

/// Flat JSON objects as CLI11 config: {"iterations": 3, "normalize": true}.
/// Keys are routed to the subcommand named in `section`.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const std::string& section) : section_(section) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames()[0];
            if (opt->count() > 0) j[name] = opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
            else if (default_also && !opt->get_default_str().empty()) j[name] = opt->get_default_str();
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::ConversionError("config is not valid JSON: " + std::string(e.what()));
        }
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            if (!section_.empty()) item.parents = {section_};
            item.name = key;
            auto as_text = [](const json& v) {
                if (v.is_string()) return v.get<std::string>();
                if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
                return v.dump();
            };
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(as_text(v));
            else
                item.inputs.push_back(as_text(value));
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    const std::string& section_;
};

class Timer {
public:
    void phase(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        if (!current_.empty()) timings_[current_] = std::chrono::duration<double>(now - start_).count();
        current_ = name;
        start_ = now;
    }
    json finish() {
        phase("");
        return timings_;
    }

private:
    std::string current_;
    std::chrono::steady_clock::time_point start_;
    json timings_ = json::object();
};

struct DataArgs {
    std::string dataset;
    std::string name;
};

igk::GraphCollection load(const DataArgs& a) {
    const fs::path dir(a.dataset);
    std::string name = a.name;
    if (name.empty()) name = fs::path(dir).lexically_normal().filename().string();
    if (name.empty()) name = fs::path(dir).lexically_normal().parent_path().filename().string();
    return igk::parse_tu_dataset(dir, name);
}

json dataset_json(const igk::GraphCollection& c) {
    return {{"name", c.name}, {"fingerprint", igk::fingerprint(c)}, {"graphs", c.size()},
            {"classes", c.class_count}};
}

struct KernelArgs {
    std::string kernel = "wloa";
    std::size_t iterations = 3;
    std::string omega = "one";
    bool normalize = false;
    bool include_zero = false;
    bool constant_labels = false;
    std::size_t threads = 1;
};

void add_kernel_options(CLI::App* cmd, KernelArgs& k) {
    cmd->add_option("--kernel", k.kernel, "Kernel family")
        ->check(CLI::IsMember({"wl-subtree", "wloa"}))
        ->capture_default_str();
    cmd->add_option("--iterations", k.iterations, "Number of WL iterations H")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--omega", k.omega, "WLOA iteration weight")
        ->check(CLI::IsMember({"one", "linear"}))
        ->capture_default_str();
    cmd->add_flag("--include-iteration-zero", k.include_zero, "Also count the initial coloring");
    cmd->add_flag("--ignore-node-labels", k.constant_labels, "Start refinement from a uniform coloring");
    cmd->add_option("--threads", k.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
}

igk::KernelSpec kernel_spec(const KernelArgs& a, bool normalized) {
    igk::KernelSpec s;
    s.kind = *igk::kernel_from_string(a.kernel);
    s.iterations = a.iterations;
    s.omega = a.omega == "linear" ? igk::WeightFunction::linear() : igk::WeightFunction::constant_one();
    s.include_iteration_zero = a.include_zero;
    s.normalized = normalized;
    s.use_node_labels = !a.constant_labels;
    s.validate();
    return s;
}

json kernel_spec_json(const igk::KernelSpec& s) {
    return {{"kernel", igk::to_string(s.kind)},        {"iterations", s.iterations},
            {"omega", s.omega.name()},                 {"include_iteration_zero", s.include_iteration_zero},
            {"normalized", s.normalized},              {"use_node_labels", s.use_node_labels}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json correlation_json(const igk::LayerCorrelationReport& r) {
    json pairs = json::array();
    for (std::size_t h = 0; h < r.mean_rho.size(); ++h) {
        json p = {{"layers", {h + 1, h + 2}}, {"mean_rho", opt_json(r.mean_rho[h])}};
        if (r.distribution[h])
            p["distribution"] = {{"min", r.distribution[h]->min},
                                 {"median", r.distribution[h]->median},
                                 {"max", r.distribution[h]->max}};
        else
            p["distribution"] = nullptr;
        pairs.push_back(p);
    }
    return {{"layer_pairs", pairs}, {"overall", opt_json(r.overall)}, {"excluded_rows", r.excluded_rows}};
}

json violation_json(const igk::ViolationReport& r) {
    json list = json::array();
    for (const auto& v : r.violations) {
        json j = {{"i", v.i}, {"j", v.j}};
        if (v.k) j["k"] = *v.k;
        j["h"] = v.h;
        j["lhs"] = v.lhs;
        j["rhs"] = v.rhs;
        j["magnitude"] = v.magnitude;
        list.push_back(j);
    }
    json per = json::array();
    for (const auto& t : r.per_transition)
        per.push_back({{"h", t.h}, {"checked", t.checked}, {"violations", t.violations}, {"rate", t.rate}});
    return {{"property", igk::to_string(r.property)},
            {"kernel", igk::to_string(r.kernel)},
            {"iterations", r.iterations},
            {"tolerance", r.tolerance},
            {"checked", r.checked},
            {"violation_count", r.violation_count},
            {"rate", r.rate},
            {"sampled", r.sampled},
            {"truncated", r.truncated},
            {"per_transition", per},
            {"violations", list}};
}

json report(const std::string& command, const json& config, std::uint64_t seed) {
    return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", config}, {"seed", seed}};
}

void emit(json& rep, Timer& timer, const std::string& out) {
    rep["timings"] = timer.finish();
    const std::string text = rep.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw igk::Error("cannot write " + out);
    f << text;
}

std::vector<double> parse_split(const std::string& s) {
    std::vector<double> r;
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, ':')) {
        try {
            std::size_t used = 0;
            r.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw igk::InvalidConfig("split must look like 8:1:1");
        }
    }
    if (r.size() != 3 || r[0] <= 0.0 || r[1] < 0.0 || r[2] < 0.0)
        throw igk::InvalidConfig("split must be three nonnegative ratios with a positive training share");
    return r;
}

// ---------------------------------------------------------------------------

int cmd_kernel(const DataArgs& d, const KernelArgs& k, bool normalize, const std::string& out) {
    Timer timer;
    timer.phase("load");
    const auto c = load(d);
    const auto spec = kernel_spec(k, normalize);
    timer.phase("gram");
    const auto s = igk::gram_series(c, spec, igk::resolve_threads(k.threads));
    timer.phase("write");
    const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    json per_h = json::array();
    for (std::size_t h = 1; h <= s.depth(); ++h) {
        const auto& m = s.at(h);
        const std::string file = "gram_h" + std::to_string(h) + ".csv";
        std::ofstream f(dir / file);
        if (!f) throw igk::Error("cannot write " + (dir / file).string());
        igk::write_gram_csv(f, m);
        double dmin = m(0, 0), dmax = m(0, 0), omin = 0.0, omax = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                if (i == j) {
                    dmin = std::min(dmin, m(i, i));
                    dmax = std::max(dmax, m(i, i));
                } else if (!any) {
                    omin = omax = m(i, j);
                    any = true;
                } else {
                    omin = std::min(omin, m(i, j));
                    omax = std::max(omax, m(i, j));
                }
            }
        json entry = {{"h", h}, {"file", file}, {"diagonal_min", dmin}, {"diagonal_max", dmax}};
        entry["offdiagonal_min"] = any ? json(omin) : json(nullptr);
        entry["offdiagonal_max"] = any ? json(omax) : json(nullptr);
        per_h.push_back(entry);
    }
    json config = kernel_spec_json(spec);
    config["dataset"] = d.dataset;
    json rep = report("kernel", config, 0);
    rep["results"] = {{"dataset", dataset_json(c)}, {"gram", per_h}};
    emit(rep, timer, (dir / "kernel_report.json").string());
    std::cout << "wrote " << s.depth() << " Gram matrices for " << c.size() << " graphs to " << dir.string()
              << "\n";
    return Exit::ok;
}

int cmd_analyze(const DataArgs& d, const KernelArgs& k, const std::string& property, double tolerance,
                std::uint64_t seed, const std::string& out) {
    Timer timer;
    timer.phase("load");
    const auto c = load(d);
    const auto spec = kernel_spec(k, true);
    if (property == "wloa-bound" && spec.kind != igk::KernelKind::wloa)
        throw igk::InvalidInput("wloa-bound applies to the wloa kernel only");
    if (property == "margin") {
        std::vector<int> labels = c.labels();
        if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels.front(); }))
            throw igk::InvalidInput("margin needs at least two classes");
    }
    timer.phase("gram");
    const auto s = igk::gram_series(c, spec, igk::resolve_threads(k.threads));
    timer.phase("analyze");

    json config = kernel_spec_json(spec);
    config["dataset"] = d.dataset;
    config["property"] = property;
    config["tolerance"] = tolerance;
    json rep = report("analyze", config, seed);
    int code = Exit::ok;
    if (property == "margin") {
        const auto labels = c.labels();
        const auto m = igk::margin_curve(s, labels);
        json curve = json::array();
        for (std::size_t h = 0; h < m.margin.size(); ++h)
            curve.push_back({{"h", h + 1}, {"margin", m.margin[h]}, {"pair", {m.argmin[h].first, m.argmin[h].second}}});
        bool nondecreasing = true;
        for (std::size_t h = 1; h < m.margin.size(); ++h) nondecreasing &= m.margin[h] >= m.margin[h - 1] - tolerance;
        rep["results"] = {{"dataset", dataset_json(c)}, {"margin", curve}, {"nondecreasing", nondecreasing}};
    } else {
        igk::AnalysisOptions opt;
        opt.tolerance = tolerance;
        opt.seed = seed;
        opt.threads = igk::resolve_threads(k.threads);
        igk::ViolationReport r;
        if (property == "monotonic") r = igk::check_monotonic_decrease(s, opt);
        else if (property == "order") r = igk::check_order_consistency(s, opt);
        else r = igk::check_wloa_bound(s, opt);
        rep["results"] = {{"dataset", dataset_json(c)}, {"report", violation_json(r)}};
        if (r.violation_count > 0) code = Exit::violations;
        std::cerr << igk::to_string(r.property) << ": " << r.violation_count << " violations in " << r.checked
                  << " checks\n";
    }
    emit(rep, timer, out);
    return code;
}

struct TrainArgs {
    igk::GnnConfig cfg;
    std::string consistency = "off";
    std::string split = "8:1:1";
    std::string checkpoint;
    std::vector<std::uint64_t> paired_seeds;
};

json train_config_json(const igk::GnnConfig& cfg, const std::string& split) {
    return {{"layers", cfg.layer_count},
            {"hidden", cfg.hidden_dim},
            {"learning_rate", cfg.learning_rate},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"dropout", cfg.dropout_rate},
            {"lambda", cfg.lambda},
            {"consistency", igk::to_string(cfg.consistency.mode)},
            {"paper_literal_sign", cfg.consistency.paper_literal_sign},
            {"all_references", cfg.consistency.all_references},
            {"split", split}};
}

json train_result_json(const igk::TrainResult& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"origin_loss", e.origin_loss},
                          {"consistency_loss", e.consistency_loss},
                          {"total_loss", e.total_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"valid_accuracy", opt_json(e.valid_accuracy)}});
    json j = {{"epochs", epochs},
              {"best_epoch", r.best_epoch},
              {"best_valid_accuracy", opt_json(r.best_valid_accuracy)},
              {"test_accuracy", opt_json(r.test_accuracy)}};
    j["correlation"] = r.test_correlation ? correlation_json(*r.test_correlation) : json(nullptr);
    return j;
}

int cmd_train(const DataArgs& d, TrainArgs& a, const std::string& out) {
    Timer timer;
    timer.phase("load");
    const auto c = load(d);
    const auto mode = igk::consistency_mode_from_string(a.consistency);
    if (!mode) throw igk::InvalidConfig("unknown consistency mode " + a.consistency);
    a.cfg.consistency.mode = *mode;
    a.cfg.validate();
    const auto ratios = parse_split(a.split);

    json config = train_config_json(a.cfg, a.split);
    config["dataset"] = d.dataset;

    if (!a.paired_seeds.empty()) {
        if (a.cfg.consistency.mode == igk::ConsistencyMode::off || a.cfg.lambda == 0.0)
            throw igk::InvalidConfig("paired runs need an active consistency mode and lambda > 0");
        config["paired_seeds"] = a.paired_seeds;
        json rows = json::array();
        std::size_t rho_wins = 0, acc_wins = 0;
        for (auto seed : a.paired_seeds) {
            timer.phase("train_seed_" + std::to_string(seed));
            const auto split = igk::make_split(c.size(), ratios, seed);
            igk::GnnConfig off = a.cfg;
            off.seed = seed;
            off.lambda = 0.0;
            off.consistency.mode = igk::ConsistencyMode::off;
            igk::GnnConfig on = a.cfg;
            on.seed = seed;
            const auto r0 = igk::train(c, split, off);
            const auto r1 = igk::train(c, split, on);
            auto rho = [](const igk::TrainResult& r) {
                return r.test_correlation ? r.test_correlation->overall : std::optional<double>{};
            };
            const auto rho0 = rho(r0), rho1 = rho(r1);
            if (rho0 && rho1 && *rho1 >= *rho0) ++rho_wins;
            if (r0.test_accuracy && r1.test_accuracy && *r1.test_accuracy >= *r0.test_accuracy) ++acc_wins;
            rows.push_back({{"seed", seed},
                            {"rho_without", opt_json(rho0)},
                            {"rho_with", opt_json(rho1)},
                            {"accuracy_without", opt_json(r0.test_accuracy)},
                            {"accuracy_with", opt_json(r1.test_accuracy)}});
        }
        json rep = report("train", config, a.paired_seeds.front());
        rep["results"] = {{"dataset", dataset_json(c)},
                          {"paired", rows},
                          {"rho_wins", rho_wins},
                          {"accuracy_wins", acc_wins}};
        emit(rep, timer, out);
        return Exit::ok;
    }

    timer.phase("train");
    const auto split = igk::make_split(c.size(), ratios, a.cfg.seed);
    const auto r = igk::train(c, split, a.cfg);
    if (!a.checkpoint.empty()) igk::save_checkpoint(a.checkpoint, r.weights);
    json rep = report("train", config, a.cfg.seed);
    json results = train_result_json(r);
    results["dataset"] = dataset_json(c);
    results["split_sizes"] = {split.train.size(), split.valid.size(), split.test.size()};
    rep["results"] = results;
    emit(rep, timer, out);
    return Exit::ok;
}

int cmd_verify(const std::string& check, std::uint64_t seed, const std::string& out) {
    Timer timer;
    json results = json::object();
    bool all_pass = true;
    if (check == "counterexample" || check == "all") {
        timer.phase("counterexample");
        const auto [k1, k2] = igk::reproduce_counterexample();
        const auto fixture = igk::counterexample_collection();
        igk::KernelSpec spec;
        spec.kind = igk::KernelKind::wl_subtree;
        spec.iterations = 2;
        const auto s = igk::gram_series(fixture, spec);
        const double f1 = s.at(1)(0, 1), f2 = s.at(2)(0, 1);
        auto close = [](double v, double target) { return std::abs(v - target) <= 5e-4; };
        const bool pass = close(k1, 0.0400) && close(k2, 0.0404) && k1 < k2 && close(f1, 0.0400) &&
                          close(f2, 0.0404) && f1 < f2;
        all_pass &= pass;
        results["counterexample"] = {{"histograms", {k1, k2}}, {"fixture", {f1, f2}}, {"pass", pass}};
        std::printf("counterexample: histograms (%.4f, %.4f), fixture graphs (%.4f, %.4f) %s\n", k1, k2, f1, f2,
                    pass ? "PASS" : "FAIL");
    }
    if (check == "gradients" || check == "all") {
        timer.phase("gradients");
        igk::SyntheticSpec sp;
        sp.family = igk::Family::cycles_vs_paths;
        sp.sizes = {4, 5, 6, 7};
        sp.count = 4;
        const auto c = igk::generate_synthetic(sp, seed);
        igk::GnnConfig cfg;
        cfg.seed = seed;
        cfg.lambda = 1.0;
        cfg.consistency.mode = igk::ConsistencyMode::all;
        const std::vector<std::size_t> batch{0, 1, 2, 3};
        const auto g = igk::check_training_gradients(c, batch, cfg, 1e-5);
        const bool pass = g.max_relative_error < 1e-4;
        all_pass &= pass;
        results["gradients"] = {{"max_relative_error", g.max_relative_error},
                                {"checked", g.checked},
                                {"skipped", g.skipped},
                                {"pass", pass}};
        std::printf("gradients: max relative error %.3e over %zu coordinates %s\n", g.max_relative_error, g.checked,
                    pass ? "PASS" : "FAIL");
    }
    results["pass"] = all_pass;
    json rep = report("verify", {{"check", check}}, seed);
    rep["results"] = results;
    if (!out.empty()) emit(rep, timer, out);
    return all_pass ? Exit::ok : Exit::violations;
}

int cmd_generate(const std::string& family, const std::vector<std::size_t>& sizes, std::size_t count,
                 bool constant_labels, double p, std::uint64_t seed, const std::string& name,
                 const std::string& out) {
    igk::GraphCollection c;
    if (family == "counterexample") {
        c = igk::counterexample_collection();
    } else {
        igk::SyntheticSpec sp;
        sp.family = *igk::family_from_string(family);
        sp.sizes = sizes;
        sp.count = count;
        sp.edge_probability = p;
        sp.node_labels = constant_labels ? igk::NodeLabelRule::constant : igk::NodeLabelRule::degree;
        c = igk::generate_synthetic(sp, seed);
    }
    c.name = name.empty() ? fs::path(out).lexically_normal().filename().string() : name;
    igk::write_tu_dataset(c, out, c.name);
    std::cout << "wrote " << c.size() << " graphs (" << igk::fingerprint(c) << ") to " << out << "\n";
    return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weisfeiler-Lehman graph kernels, consistency analysis and consistency-regularized GNNs"};
    app.require_subcommand(1);
    std::string section;
    for (int i = 1; i < argc && section.empty(); ++i) {
        const std::string arg = argv[i];
        if (arg == "kernel" || arg == "analyze" || arg == "train" || arg == "verify" || arg == "generate")
            section = arg;
    }
    app.config_formatter(std::make_shared<JsonConfig>(section));
    app.set_config("--config", "", "JSON config file with flag defaults; flags given explicitly win");

    DataArgs data;
    KernelArgs kargs;
    std::string out;
    std::uint64_t seed = 0;

    auto add_data = [&](CLI::App* cmd) {
        cmd->add_option("--dataset", data.dataset, "TU dataset directory")->required()->check(CLI::ExistingDirectory);
        cmd->add_option("--name", data.name, "Dataset file prefix (default: directory name)");
    };

    auto* kernel = app.add_subcommand("kernel", "Compute Gram matrices for h = 1..H");
    kernel->fallthrough();
    add_data(kernel);
    add_kernel_options(kernel, kargs);
    bool normalize = false;
    kernel->add_flag("--normalize", normalize, "Cosine-normalize the Gram matrices");
    kernel->add_option("--out", out, "Output directory for CSVs and the report (default: .)");

    auto* analyze = app.add_subcommand("analyze", "Check monotonicity, order consistency, the WLOA bound or margins");
    analyze->fallthrough();
    add_data(analyze);
    add_kernel_options(analyze, kargs);
    std::string property;
    double tolerance = 1e-9;
    analyze->add_option("--property", property, "Property to check")
        ->required()
        ->check(CLI::IsMember({"monotonic", "order", "wloa-bound", "margin"}));
    analyze->add_option("--tolerance", tolerance, "Violation tolerance")->check(CLI::NonNegativeNumber)->capture_default_str();
    analyze->add_option("--seed", seed, "Seed for sampled triple checks")->capture_default_str();
    analyze->add_option("--out", out, "Report file (default: stdout)");

    auto* train = app.add_subcommand("train", "Train a GCN with optional consistency loss");
    train->fallthrough();
    add_data(train);
    TrainArgs targs;
    train->add_option("--layers", targs.cfg.layer_count, "Message-passing layers")->capture_default_str();
    train->add_option("--hidden", targs.cfg.hidden_dim, "Hidden width")->capture_default_str();
    train->add_option("--epochs", targs.cfg.epochs, "Training epochs")->capture_default_str();
    train->add_option("--lr", targs.cfg.learning_rate, "Gradient-descent step size")->capture_default_str();
    train->add_option("--batch-size", targs.cfg.batch_size, "Graphs per batch")->capture_default_str();
    train->add_option("--dropout", targs.cfg.dropout_rate, "Dropout rate on hidden layers")->capture_default_str();
    train->add_option("--lambda", targs.cfg.lambda, "Consistency loss weight")->capture_default_str();
    train->add_option("--consistency", targs.consistency, "Layer pairs penalized")
        ->check(CLI::IsMember({"off", "all", "first-last"}))
        ->capture_default_str();
    train->add_flag("--paper-literal-sign", targs.cfg.consistency.paper_literal_sign,
                    "Use the farther-graph orientation of the ordering probabilities");
    train->add_flag("--all-references", targs.cfg.consistency.all_references,
                    "Average over every reference graph instead of sampling one");
    train->add_option("--seed", targs.cfg.seed, "Run seed (split, init, shuffling, references)")->capture_default_str();
    train->add_option("--split", targs.split, "train:valid:test ratios")->capture_default_str();
    train->add_option("--checkpoint", targs.checkpoint, "Write the selected weights to this file");
    train->add_option("--paired", targs.paired_seeds,
                      "Seeds for paired runs with and without the consistency loss")
        ->delimiter(',');
    train->add_option("--out", out, "Report file (default: stdout)");

    auto* verify = app.add_subcommand("verify", "Reproduce the counterexample and check gradients");
    std::string check = "all";
    verify->add_option("--check", check, "What to verify")
        ->check(CLI::IsMember({"counterexample", "gradients", "all"}))
        ->capture_default_str();
    verify->add_option("--seed", seed, "Seed for the gradient check")->capture_default_str();
    verify->add_option("--out", out, "Also write a JSON report here");

    auto* generate = app.add_subcommand("generate", "Write a synthetic corpus in TU format");
    std::string family = "cycles-vs-paths", gen_name;
    std::vector<std::size_t> sizes{4, 5, 6, 7, 8, 9};
    std::size_t count = 0;
    bool constant_labels = false;
    double edge_p = 0.2;
    generate->add_option("--family", family, "Graph family or 'counterexample'")
        ->check(CLI::IsMember({"cycle", "path", "cycles-vs-paths", "erdos-renyi", "er-vs-ba", "split-by-density",
                               "counterexample"}))
        ->capture_default_str();
    generate->add_option("--sizes", sizes, "Node counts, cycled through")->delimiter(',');
    generate->add_option("--count", count, "Number of graphs (0 = one per size and class)");
    generate->add_option("--edge-probability", edge_p, "G(n, p) edge probability")->capture_default_str();
    generate->add_flag("--constant-labels", constant_labels, "Label every node 1 instead of by degree");
    generate->add_option("--seed", seed, "Generator seed")->capture_default_str();
    generate->add_option("--name", gen_name, "File prefix (default: directory name)");
    generate->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Exit::usage;
    }

    try {
        if (*kernel) return cmd_kernel(data, kargs, normalize, out);
        if (*analyze) return cmd_analyze(data, kargs, property, tolerance, seed, out);
        if (*train) return cmd_train(data, targs, out);
        if (*verify) return cmd_verify(check, seed, out);
        if (*generate) return cmd_generate(family, sizes, count, constant_labels, edge_p, seed, gen_name, out);
    } catch (const igk::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return Exit::data;
    } catch (const igk::DegenerateKernel& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return Exit::data;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return Exit::data;
    } catch (const igk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::usage;
    }
    return Exit::usage;
}
