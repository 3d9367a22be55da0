#include "cli.hpp"

#include "neurodavis/analysis.hpp"
#include "neurodavis/datasets.hpp"
#include "neurodavis/error.hpp"
#include "neurodavis/metrics.hpp"
#include "neurodavis/model.hpp"
#include "neurodavis/model_io.hpp"
#include "neurodavis/plot.hpp"
#include "neurodavis/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace neurodavis::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kKinds = {"elliptic_ring", "olympic", "spiral", "shape", "world_map"};
const std::vector<std::string> kMetricNames = {"distance", "centroid",      "area",        "knn",
                                               "kmeans",   "agglomerative", "cluster_rest"};

// Training flags shared by fit, suite and sweep.
struct ConfigFlags {
    std::size_t k = 2;
    std::string hidden;
    double alpha = 1e-6;
    double beta = 1e-4;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t epochs = 1000;
    std::size_t batch = 0;
    std::uint64_t seed = 0;
    std::size_t window = 20;
    double rel_tol = 1e-5;
    bool no_convergence = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    cmd->add_option("--k", f.k, "Latent dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--hidden", f.hidden, "Hidden widths, e.g. 64,64, or 'none' (default: two of clamp(ceil(d/2),16,256))");
    cmd->add_option("--alpha", f.alpha, "Activity regularization weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--beta", f.beta, "Weight regularization weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--adam-beta1", f.beta1, "Adam first-moment decay");
    cmd->add_option("--adam-beta2", f.beta2, "Adam second-moment decay");
    cmd->add_option("--adam-eps", f.eps, "Adam epsilon");
    cmd->add_option("--epochs", f.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", f.batch, "Batch size (default: min(n, 64))")->check(CLI::PositiveNumber);
    cmd->add_option("--window", f.window, "Early-stopping window in epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--rel-tol", f.rel_tol, "Early-stopping relative improvement threshold");
    cmd->add_flag("--no-convergence", f.no_convergence, "Always run every epoch");
}

std::vector<std::size_t> parse_widths(const std::string& text) {
    std::vector<std::size_t> widths;
    if (text == "none") {
        return widths;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long value = 0;
        try {
            value = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || value == 0) {
            throw InvalidConfig("--hidden expects positive comma-separated widths or 'none', got '" + text + "'");
        }
        widths.push_back(value);
    }
    if (widths.empty()) {
        throw InvalidConfig("--hidden is empty");
    }
    return widths;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw InvalidConfig(flag + " expects comma-separated numbers, got '" + text + "'");
        }
        values.push_back(value);
    }
    if (values.empty()) {
        throw InvalidConfig(flag + " is empty");
    }
    return values;
}

// Config with the data-dependent defaults filled in, so the echo is explicit.
ModelConfig build_config(const ConfigFlags& f, std::size_t n, std::size_t d) {
    ModelConfig config;
    config.latent_dim = f.k;
    if (!f.hidden.empty()) {
        config.hidden_widths = parse_widths(f.hidden);
    }
    config.alpha = f.alpha;
    config.beta = f.beta;
    config.learning_rate = f.lr;
    config.adam_beta1 = f.beta1;
    config.adam_beta2 = f.beta2;
    config.adam_eps = f.eps;
    config.epochs = f.epochs;
    if (f.batch > 0) {
        config.batch_size = f.batch;
    }
    config.seed = f.seed;
    if (f.no_convergence) {
        config.convergence.reset();
    } else {
        config.convergence = ConvergencePolicy{f.window, f.rel_tol};
    }
    validate(config);
    config.hidden_widths = resolve_hidden_widths(config, d);
    config.batch_size = resolve_batch_size(config, n);
    return config;
}

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

bool header_has(const fs::path& path, const std::string& column) {
    std::stringstream ss(first_line(path));
    std::string field;
    while (std::getline(ss, field, ',')) {
        if (field == column) {
            return true;
        }
    }
    return false;
}

// Input CSV flags shared by commands that read a data table.
struct TableFlags {
    std::string label_column = "label";
    bool no_header = false;
    bool no_labels = false;
};

void add_table_flags(CLI::App* cmd, TableFlags& t) {
    cmd->add_option("--label-column", t.label_column,
                    "Label column name or zero-based index; used when present (default: label)");
    cmd->add_flag("--no-header", t.no_header, "First row is data");
    cmd->add_flag("--no-labels", t.no_labels, "Treat every column as a feature");
}

Dataset read_table(const fs::path& path, const TableFlags& t) {
    std::optional<LabelColumn> label;
    if (!t.no_labels) {
        const bool numeric = !t.label_column.empty() &&
                             t.label_column.find_first_not_of("0123456789") == std::string::npos;
        if (numeric) {
            label = static_cast<std::size_t>(std::stoul(t.label_column));
        } else if (t.no_header) {
            throw InvalidInput("--label-column must be an index when --no-header is given");
        } else if (header_has(path, t.label_column)) {
            label = t.label_column;
        }
    }
    Dataset ds = load_csv(path, label, !t.no_header);
    ds.name = path.stem().string();
    return ds;
}

// Embedding coordinates; a column named like the label column is skipped.
Dataset read_embedding(const fs::path& path, const std::string& label_column) {
    std::optional<LabelColumn> label;
    if (header_has(path, label_column)) {
        label = label_column;
    }
    Dataset ds = load_csv(path, label, true);
    ds.name = path.string();
    return ds;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw InvalidInput("failed writing " + path.string());
    }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void save_embedding(const Matrix& emb, const fs::path& path) {
    Dataset ds;
    ds.x = emb;
    for (std::size_t c = 0; c < emb.cols(); ++c) {
        ds.feature_names.push_back("z" + std::to_string(c));
    }
    save_csv(ds, path);
}

Dataset apply_standardize(const Dataset& ds, const std::string& mode) {
    if (mode == "isotropic") {
        return isotropic_standardize(ds);
    }
    if (mode == "minmax") {
        return minmax_scale(ds);
    }
    return ds;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// --- gen ----------------------------------------------------------------------

struct GenFlags {
    std::string kind;
    std::uint64_t seed = 0;
    std::string out;
    bool lift = false;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
    Rng rng(f.seed);
    Dataset ds = gen_synthetic(*parse_synthetic_kind(f.kind), rng);
    if (f.lift) {
        ds = lift9(ds);
    }
    save_csv(ds, f.out);
    out << "wrote " << ds.samples() << " rows x " << ds.features() << " features (" << ds.class_count()
        << " classes) to " << f.out << "\n";
    return kOk;
}

// --- fit ----------------------------------------------------------------------

struct FitFlags {
    std::string in;
    TableFlags table;
    ConfigFlags config;
    std::string standardize = "isotropic";
    std::string model_out;
    std::string embedding_out;
    std::string report_out;
};

fs::path default_output(const fs::path& in, const std::string& suffix) {
    return in.parent_path() / (in.stem().string() + suffix);
}

int cmd_fit(const FitFlags& f, std::ostream& out, std::ostream& err) {
    const fs::path in = f.in;
    const fs::path model_path = f.model_out.empty() ? default_output(in, ".model.json") : fs::path(f.model_out);
    const fs::path emb_path = f.embedding_out.empty() ? default_output(in, ".embedding.csv") : fs::path(f.embedding_out);
    const fs::path report_path = f.report_out.empty() ? default_output(in, ".fit.json") : fs::path(f.report_out);

    const Dataset raw = read_table(in, f.table);
    const ModelConfig config = build_config(f.config, raw.samples(), raw.features());
    const Dataset data = apply_standardize(raw, f.standardize);

    json report = {
        {"schema_version", kReportSchemaVersion},
        {"command", "fit"},
        {"input", in.string()},
        {"samples", raw.samples()},
        {"features", raw.features()},
        {"standardize", f.standardize},
        {"config", to_json(config)},
        {"config_hash", config_hash(config)},
    };
    try {
        const FitResult fitted = fit(data.x, config);
        report["status"] = fitted.report.converged ? "converged" : "max_epochs";
        report["train"] = to_json(fitted.report);
        save_checkpoint(model_path, config, fitted.model);
        save_embedding(embed(fitted.model), emb_path);
        write_json(report_path, report);
        const double final_loss =
            fitted.report.epochs.empty() ? fitted.report.initial_loss : fitted.report.epochs.back().total;
        out << "fit " << raw.samples() << " x " << raw.features() << " -> " << config.latent_dim << "D in "
            << fitted.report.epochs_run << " epochs (" << report["status"].get<std::string>()
            << "), loss " << format_double(fitted.report.initial_loss) << " -> " << format_double(final_loss)
            << "\n";
        out << "wrote " << model_path.string() << ", " << emb_path.string() << ", " << report_path.string() << "\n";
        return kOk;
    } catch (const TrainingDiverged& e) {
        report["status"] = "diverged";
        report["error"] = e.what();
        report["train"] = to_json(e.report());
        write_json(report_path, report);
        err << "error: " << e.what() << "; report written to " << report_path.string() << "\n";
        return kNumeric;
    }
}

// --- eval ---------------------------------------------------------------------

struct EvalFlags {
    std::string high;
    TableFlags table;
    std::vector<std::string> low;
    std::vector<std::string> compare;
    std::string metrics = "distance";
    std::uint64_t pair_budget = kDefaultPairBudget;
    bool all_pairs = false;
    std::uint64_t seed = 0;
    std::size_t knn_k = 5;
    double test_fraction = 0.2;
    std::size_t clusters = 0;
    std::size_t restarts = 10;
    std::string out;
};

std::set<std::string> parse_metric_list(const std::string& text) {
    std::set<std::string> chosen;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (std::find(kMetricNames.begin(), kMetricNames.end(), item) == kMetricNames.end()) {
            throw InvalidInput("unknown metric '" + item + "'");
        }
        chosen.insert(item);
    }
    if (chosen.empty()) {
        throw InvalidInput("--metrics is empty");
    }
    return chosen;
}

struct EvalContext {
    const Dataset& high;
    const std::set<std::string>& metrics;
    const std::vector<IndexPair>& pairs;
    const std::vector<double>& high_distances;
    std::optional<std::uint64_t> budget;
    const EvalFlags& flags;
};

EvalReport eval_one(const EvalContext& ctx, const Dataset& low) {
    const Dataset& high = ctx.high;
    if (low.samples() != high.samples()) {
        throw InvalidInput("row count mismatch: " + low.name + " has " + std::to_string(low.samples()) +
                           " rows, high-dimensional data has " + std::to_string(high.samples()));
    }
    EvalReport report;
    report.dataset = low.name;
    report.seed = ctx.flags.seed;
    const auto need_labels = [&](const std::string& metric) -> const std::vector<int>& {
        if (!high.labels) {
            throw InvalidInput("metric '" + metric + "' needs labels in the high-dimensional file");
        }
        return *high.labels;
    };
    if (ctx.metrics.count("distance")) {
        report.metrics["distance_rho"] = spearman_rho(ctx.high_distances, pair_distances(low.x, ctx.pairs));
    }
    if (ctx.metrics.count("centroid")) {
        report.metrics["centroid_rho"] = centroid_distance_preservation(high.x, low.x, need_labels("centroid"));
    }
    if (ctx.metrics.count("area")) {
        report.metrics["area_r"] = cluster_area_preservation(high.x, low.x, need_labels("area"));
    }
    if (ctx.metrics.count("knn")) {
        Rng rng = Rng(ctx.flags.seed).fork(0x4B4E);
        const KnnResult knn =
            knn_evaluate(low.x, need_labels("knn"), ctx.flags.knn_k, ctx.flags.test_fraction, rng);
        report.metrics["knn_accuracy"] = knn.accuracy;
        report.metrics["knn_f1_macro"] = knn.f1_macro;
    }
    const std::size_t clusters = ctx.flags.clusters > 0 ? ctx.flags.clusters : high.class_count();
    if (ctx.metrics.count("kmeans")) {
        const auto& labels = need_labels("kmeans");
        Rng rng = Rng(ctx.flags.seed).fork(0x4B4D);
        const KMeansResult km = kmeans(low.x, clusters, rng, ctx.flags.restarts);
        report.metrics["kmeans_ari"] = ari(labels, km.labels);
        report.metrics["kmeans_fmi"] = fmi(labels, km.labels);
    }
    if (ctx.metrics.count("agglomerative")) {
        const auto& labels = need_labels("agglomerative");
        const std::vector<int> assigned = agglomerative(low.x, clusters);
        report.metrics["agglomerative_ari"] = ari(labels, assigned);
        report.metrics["agglomerative_fmi"] = fmi(labels, assigned);
    }
    if (ctx.metrics.count("cluster_rest")) {
        const auto& labels = need_labels("cluster_rest");
        for (std::size_t c = 0; c < high.class_count(); ++c) {
            Rng rng = Rng(ctx.flags.seed).fork(0xC105 + c);
            report.metrics["cluster_rest_rho." + std::to_string(c)] =
                cluster_to_rest_preservation(high.x, low.x, labels, static_cast<int>(c), ctx.budget, rng);
        }
    }
    return report;
}

std::map<std::string, MetricSummary> summarize_runs(const std::vector<EvalReport>& runs) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& run : runs) {
        for (const auto& [name, value] : run.metrics) {
            values[name].push_back(value);
        }
    }
    std::map<std::string, MetricSummary> out;
    for (auto& [name, v] : values) {
        out[name] = summarize(std::move(v));
    }
    return out;
}

json summary_json(const std::map<std::string, MetricSummary>& summary) {
    json j = json::object();
    for (const auto& [name, s] : summary) {
        j[name] = to_json(s);
    }
    return j;
}

int cmd_eval(const EvalFlags& f, std::ostream& out) {
    if (f.low.empty()) {
        throw InvalidInput("eval needs at least one --low embedding");
    }
    const auto metrics = parse_metric_list(f.metrics);
    const Dataset high = read_table(f.high, f.table);

    std::optional<std::uint64_t> budget;
    if (!f.all_pairs && f.pair_budget < pair_count(high.samples())) {
        budget = f.pair_budget;
    }
    Rng pair_rng = Rng(f.seed).fork(0xD157);
    const std::vector<IndexPair> pairs = select_pairs(high.samples(), budget, pair_rng);
    const std::vector<double> high_distances = pair_distances(high.x, pairs);
    const EvalContext ctx{high, metrics, pairs, high_distances, budget, f};

    std::vector<EvalReport> runs;
    for (const auto& path : f.low) {
        runs.push_back(eval_one(ctx, read_embedding(path, f.table.label_column)));
    }
    std::vector<EvalReport> compare_runs;
    for (const auto& path : f.compare) {
        compare_runs.push_back(eval_one(ctx, read_embedding(path, f.table.label_column)));
    }

    json report = {
        {"schema_version", kReportSchemaVersion},
        {"command", "eval"},
        {"high", f.high},
        {"pairs", pairs.size()},
        {"seed", f.seed},
    };
    report["runs"] = json::array();
    for (const auto& r : runs) {
        report["runs"].push_back(to_json(r));
    }
    const auto summary = summarize_runs(runs);
    report["summary"] = summary_json(summary);
    if (!compare_runs.empty()) {
        report["compare_runs"] = json::array();
        for (const auto& r : compare_runs) {
            report["compare_runs"].push_back(to_json(r));
        }
        report["compare_summary"] = summary_json(summarize_runs(compare_runs));
        json comparison = json::object();
        for (const auto& [name, s] : summary) {
            std::vector<double> a;
            std::vector<double> b;
            for (const auto& r : runs) {
                a.push_back(r.metrics.at(name));
            }
            for (const auto& r : compare_runs) {
                b.push_back(r.metrics.at(name));
            }
            const MannWhitneyResult mw = mann_whitney_u(a, b);
            comparison[name] = {{"u", mw.u}, {"z", mw.z}, {"p_two_sided", mw.p_two_sided},
                                {"n_low", a.size()}, {"n_compare", b.size()}};
        }
        report["mann_whitney"] = comparison;
    }

    if (f.out.empty()) {
        out << report.dump(2) << "\n";
    } else {
        write_json(f.out, report);
        for (const auto& [name, s] : summary) {
            out << name << ": median " << format_double(s.median) << " (min " << format_double(s.min) << ", max "
                << format_double(s.max) << ", n=" << s.count << ")\n";
        }
        out << "wrote " << f.out << "\n";
    }
    return kOk;
}

// --- plot ---------------------------------------------------------------------

struct PlotFlags {
    std::string embedding;
    std::string labels;
    std::string label_column = "label";
    std::string out;
    PlotOptions options;
    bool no_color = false;
};

int cmd_plot(const PlotFlags& f, std::ostream& out) {
    TableFlags embedding_table;
    embedding_table.label_column = f.label_column;
    const Dataset emb = read_table(f.embedding, embedding_table);
    if (emb.samples() == 0) {
        throw InvalidInput("embedding " + f.embedding + " has no rows");
    }
    if (emb.features() != 2) {
        throw InvalidInput("plot needs a 2D embedding, got " + std::to_string(emb.features()) + " columns");
    }
    std::optional<std::vector<int>> labels = emb.labels;
    if (!f.labels.empty()) {
        if (!header_has(f.labels, f.label_column)) {
            throw InvalidInput("label column '" + f.label_column + "' not found in " + f.labels);
        }
        const Dataset source = load_csv(f.labels, LabelColumn{f.label_column}, true);
        if (source.samples() != emb.samples()) {
            throw InvalidInput("row count mismatch: " + f.labels + " has " + std::to_string(source.samples()) +
                               " rows, embedding has " + std::to_string(emb.samples()));
        }
        labels = source.labels;
    }
    PlotOptions options = f.options;
    options.color_by_label = !f.no_color;
    std::optional<std::span<const int>> view;
    if (labels) {
        view = std::span<const int>(*labels);
    }
    write_text(f.out, render_scatter_svg(emb.x, view, options));
    out << "wrote " << emb.samples() << " points to " << f.out << "\n";
    return kOk;
}

// --- check --------------------------------------------------------------------

struct CheckFlags {
    std::string which = "all";
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    std::string out;
};

int cmd_check(const CheckFlags& f, std::ostream& out) {
    json report = {{"schema_version", kReportSchemaVersion}, {"command", "check"}, {"seed", f.seed}};
    bool all_pass = true;
    const bool all = f.which == "all";
    if (all || f.which == "lemma1") {
        Rng rng(f.seed);
        const std::size_t trials = f.trials > 0 ? f.trials : 1000;
        const Lemma1Report r = check_lemma1(trials, 8, rng);
        const bool pass = r.max_norm <= 1.0 + 1e-9;
        all_pass = all_pass && pass;
        char line[160];
        std::snprintf(line, sizeof line, "lemma1: %s  trials=%zu max |I - eta W W^T|_2 = %.17g (bound 1 + 1e-9)\n",
                      pass ? "PASS" : "FAIL", r.trials, r.max_norm);
        out << line;
        report["lemma1"] = {{"pass", pass}, {"trials", r.trials}, {"max_norm", r.max_norm},
                            {"worst_trial", r.worst_trial}};
    }
    if (all || f.which == "theorem1") {
        Rng rng(f.seed);
        const std::size_t configs = f.trials > 0 ? f.trials : 20;
        const Theorem1SuiteReport r = check_theorem1_suite(configs, rng);
        const bool pass = r.non_increasing == r.configurations;
        all_pass = all_pass && pass;
        char line[200];
        std::snprintf(line, sizeof line,
                      "theorem1: %s  %zu/%zu traces non-increasing, worst step ratio %.12g, final/initial gap "
                      "%.3g..%.3g\n",
                      pass ? "PASS" : "FAIL", r.non_increasing, r.configurations, r.worst_step_ratio,
                      r.min_final_over_initial, r.max_final_over_initial);
        out << line;
        report["theorem1"] = {{"pass", pass},
                              {"configurations", r.configurations},
                              {"non_increasing", r.non_increasing},
                              {"worst_step_ratio", r.worst_step_ratio},
                              {"min_final_over_initial", r.min_final_over_initial},
                              {"max_final_over_initial", r.max_final_over_initial}};
    }
    if (all || f.which == "gradients") {
        Rng rng(f.seed);
        const std::size_t models = f.trials > 0 ? f.trials : 50;
        const GradientCheckReport r = check_gradient_suite(models, rng);
        const bool pass = r.max_rel_error < 1e-4;
        all_pass = all_pass && pass;
        char line[200];
        std::snprintf(line, sizeof line,
                      "gradients: %s  models=%zu parameters=%zu max relative error %.3g (bound 1e-4), max "
                      "absolute %.3g\n",
                      pass ? "PASS" : "FAIL", models, r.parameters, r.max_rel_error, r.max_abs_error);
        out << line;
        report["gradients"] = {{"pass", pass},
                               {"models", models},
                               {"parameters", r.parameters},
                               {"max_rel_error", r.max_rel_error},
                               {"max_abs_error", r.max_abs_error}};
    }
    report["pass"] = all_pass;
    if (!f.out.empty()) {
        write_json(f.out, report);
    }
    return all_pass ? kOk : kNumeric;
}

// --- suite and sweep ----------------------------------------------------------

struct SourceFlags {
    std::string kind;
    std::string in;
    TableFlags table;
    std::uint64_t data_seed = 0;
    bool lift = false;
};

void add_source_flags(CLI::App* cmd, SourceFlags& s) {
    auto* kind = cmd->add_option("--kind", s.kind, "Synthetic dataset")->check(CLI::IsMember(kKinds));
    auto* in = cmd->add_option("--in", s.in, "CSV dataset");
    kind->excludes(in);
    cmd->add_option("--data-seed", s.data_seed, "Generator seed for --kind");
    cmd->add_flag("--lift9", s.lift, "Lift 2D data to nine dimensions first");
    add_table_flags(cmd, s.table);
}

Dataset load_source(const SourceFlags& s) {
    Dataset ds;
    if (!s.kind.empty()) {
        Rng rng(s.data_seed);
        ds = gen_synthetic(*parse_synthetic_kind(s.kind), rng);
    } else if (!s.in.empty()) {
        ds = read_table(s.in, s.table);
    } else {
        throw InvalidInput("one of --kind or --in is required");
    }
    if (s.lift) {
        ds = lift9(ds);
        ds.name += "_9d";
    }
    return ds;
}

struct SuiteFlags {
    SourceFlags source;
    ConfigFlags config;
    std::size_t runs = 10;
    std::uint64_t pair_budget = kDefaultPairBudget;
    bool cluster_rest = false;
    std::size_t threads = 0;
    std::string out;
};

SuiteOptions suite_options(std::uint64_t base_seed, std::uint64_t budget, bool cluster_rest, std::size_t threads) {
    SuiteOptions options;
    options.base_seed = base_seed;
    options.pair_budget = budget;
    options.cluster_to_rest = cluster_rest;
    options.threads = threads;
    return options;
}

int cmd_suite(const SuiteFlags& f, std::ostream& out) {
    const Dataset ds = load_source(f.source);
    const ModelConfig config = build_config(f.config, ds.samples(), ds.features());
    const SuiteResult result = run_preservation_suite(
        ds, config, f.runs, suite_options(f.config.seed, f.pair_budget, f.cluster_rest, f.threads));
    for (const auto& [name, s] : result.summary) {
        out << ds.name << " " << name << ": median " << format_double(s.median) << " (min "
            << format_double(s.min) << ", max " << format_double(s.max) << ", n=" << s.count << ")\n";
    }
    if (!f.out.empty()) {
        json report = to_json(result);
        report["command"] = "suite";
        report["dataset"] = ds.name;
        report["config"] = to_json(config);
        write_json(f.out, report);
        out << "wrote " << f.out << "\n";
    }
    return kOk;
}

struct SweepFlags {
    SourceFlags source;
    ConfigFlags config;
    std::string alphas = "0,1e-6,1e-4";
    std::string betas = "0,1e-4,1e-2";
    std::size_t runs = 3;
    std::uint64_t pair_budget = kDefaultPairBudget;
    std::size_t threads = 0;
    std::string out;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
    const Dataset ds = load_source(f.source);
    const auto alphas = parse_doubles(f.alphas, "--alphas");
    const auto betas = parse_doubles(f.betas, "--betas");
    json cells = json::array();
    for (double alpha : alphas) {
        for (double beta : betas) {
            ConfigFlags flags = f.config;
            flags.alpha = alpha;
            flags.beta = beta;
            const ModelConfig config = build_config(flags, ds.samples(), ds.features());
            const SuiteResult result =
                run_preservation_suite(ds, config, f.runs, suite_options(f.config.seed, f.pair_budget, false, f.threads));
            const MetricSummary& rho = result.summary.at("distance_rho");
            out << "alpha=" << format_double(alpha) << " beta=" << format_double(beta) << " distance_rho median "
                << format_double(rho.median) << " (min " << format_double(rho.min) << ", max "
                << format_double(rho.max) << ")\n";
            cells.push_back({{"alpha", alpha}, {"beta", beta}, {"config_hash", config_hash(config)},
                             {"summary", summary_json(result.summary)}});
        }
    }
    if (!f.out.empty()) {
        write_json(f.out, {{"schema_version", kReportSchemaVersion},
                           {"command", "sweep"},
                           {"dataset", ds.name},
                           {"runs", f.runs},
                           {"cells", cells}});
        out << "wrote " << f.out << "\n";
    }
    return kOk;
}

void print_usage(const CLI::App& app, std::ostream& err) {
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neural embeddings: generate data, fit, evaluate, plot and check", "neurodavis"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", "neurodavis 1.0");

    GenFlags gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a seeded synthetic benchmark dataset as CSV");
    gen_cmd->add_option("--kind", gen.kind, "Dataset kind")->required()->check(CLI::IsMember(kKinds));
    gen_cmd->add_option("--seed", gen.seed, "Generator seed");
    gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();
    gen_cmd->add_flag("--lift9", gen.lift, "Lift the 2D points to nine dimensions");

    FitFlags fitf;
    auto* fit_cmd = app.add_subcommand("fit", "Train an embedding and write checkpoint, embedding CSV and report");
    fit_cmd->add_option("--in", fitf.in, "Input CSV")->required();
    add_table_flags(fit_cmd, fitf.table);
    add_config_flags(fit_cmd, fitf.config);
    fit_cmd->add_option("--seed", fitf.config.seed, "Training seed");
    fit_cmd->add_option("--standardize", fitf.standardize, "Preprocessing before training")
        ->check(CLI::IsMember({"none", "isotropic", "minmax"}));
    fit_cmd->add_option("--model-out", fitf.model_out, "Checkpoint path (default: <stem>.model.json)");
    fit_cmd->add_option("--embedding-out", fitf.embedding_out, "Embedding CSV path (default: <stem>.embedding.csv)");
    fit_cmd->add_option("--report-out", fitf.report_out, "Training report path (default: <stem>.fit.json)");

    EvalFlags evalf;
    auto* eval_cmd = app.add_subcommand("eval", "Score embeddings against their high-dimensional source");
    eval_cmd->add_option("--high", evalf.high, "High-dimensional CSV (labels used when present)")->required();
    add_table_flags(eval_cmd, evalf.table);
    eval_cmd->add_option("--low", evalf.low, "Embedding CSV; repeat for a run set")->required();
    eval_cmd->add_option("--compare", evalf.compare,
                         "Embedding CSV of a second run set; adds a Mann-Whitney U test per metric");
    eval_cmd->add_option("--metrics", evalf.metrics,
                         "Comma list of distance,centroid,area,knn,kmeans,agglomerative,cluster_rest");
    eval_cmd->add_option("--pair-budget", evalf.pair_budget, "Sampled pairs for distance metrics");
    eval_cmd->add_flag("--all-pairs", evalf.all_pairs, "Use every pair");
    eval_cmd->add_option("--seed", evalf.seed, "Seed for pair sampling, splits and k-means");
    eval_cmd->add_option("--knn-k", evalf.knn_k, "Neighbours for k-NN")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--test-fraction", evalf.test_fraction, "k-NN test fraction (0.2 is an 80:20 split)")
        ->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--clusters", evalf.clusters, "Clusters for k-means and agglomerative (default: classes)");
    eval_cmd->add_option("--restarts", evalf.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", evalf.out, "Report JSON path (default: stdout)");

    PlotFlags plotf;
    auto* plot_cmd = app.add_subcommand("plot", "Render a 2D embedding as an SVG scatter plot");
    plot_cmd->add_option("--embedding", plotf.embedding, "Embedding CSV")->required();
    plot_cmd->add_option("--labels", plotf.labels, "CSV whose label column colours the points");
    plot_cmd->add_option("--label-column", plotf.label_column, "Label column name");
    plot_cmd->add_option("--out", plotf.out, "Output SVG path")->required();
    plot_cmd->add_option("--width", plotf.options.width, "Width in px")->check(CLI::PositiveNumber);
    plot_cmd->add_option("--height", plotf.options.height, "Height in px")->check(CLI::PositiveNumber);
    plot_cmd->add_option("--radius", plotf.options.point_radius, "Point radius in px")->check(CLI::PositiveNumber);
    plot_cmd->add_option("--title", plotf.options.title, "Plot title");
    plot_cmd->add_flag("--no-color", plotf.no_color, "Draw every point in the first palette colour");

    CheckFlags checkf;
    auto* check_cmd = app.add_subcommand("check", "Run the numerical verification suites");
    check_cmd->add_option("--which", checkf.which, "Suite to run")
        ->check(CLI::IsMember({"lemma1", "theorem1", "gradients", "all"}));
    check_cmd->add_option("--seed", checkf.seed, "Suite seed");
    check_cmd->add_option("--trials", checkf.trials, "Trials, configurations or models (default per suite)");
    check_cmd->add_option("--out", checkf.out, "Report JSON path");

    SuiteFlags suitef;
    auto* suite_cmd = app.add_subcommand("suite", "Repeated fits of one dataset with structure scores");
    add_source_flags(suite_cmd, suitef.source);
    add_config_flags(suite_cmd, suitef.config);
    suite_cmd->add_option("--seed", suitef.config.seed, "Seed of the first run");
    suite_cmd->add_option("--runs", suitef.runs, "Number of runs")->check(CLI::PositiveNumber);
    suite_cmd->add_option("--pair-budget", suitef.pair_budget, "Sampled pairs for distance metrics");
    suite_cmd->add_flag("--cluster-rest", suitef.cluster_rest, "Add per-class cluster-to-rest scores");
    suite_cmd->add_option("--threads", suitef.threads, "Worker threads (default: NEURODAVIS_THREADS or 1)");
    suite_cmd->add_option("--out", suitef.out, "Report JSON path");

    SweepFlags sweepf;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid over alpha and beta with repeated fits per cell");
    add_source_flags(sweep_cmd, sweepf.source);
    add_config_flags(sweep_cmd, sweepf.config);
    sweep_cmd->add_option("--seed", sweepf.config.seed, "Seed of the first run in each cell");
    sweep_cmd->add_option("--alphas", sweepf.alphas, "Comma list of alpha values");
    sweep_cmd->add_option("--betas", sweepf.betas, "Comma list of beta values");
    sweep_cmd->add_option("--runs", sweepf.runs, "Runs per cell")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--pair-budget", sweepf.pair_budget, "Sampled pairs for distance metrics");
    sweep_cmd->add_option("--threads", sweepf.threads, "Worker threads");
    sweep_cmd->add_option("--out", sweepf.out, "Report JSON path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        print_usage(app, err);
        return kUsage;
    }

    try {
        if (*gen_cmd) {
            return cmd_gen(gen, out);
        }
        if (*fit_cmd) {
            return cmd_fit(fitf, out, err);
        }
        if (*eval_cmd) {
            return cmd_eval(evalf, out);
        }
        if (*plot_cmd) {
            return cmd_plot(plotf, out);
        }
        if (*check_cmd) {
            return cmd_check(checkf, out);
        }
        if (*suite_cmd) {
            return cmd_suite(suitef, out);
        }
        if (*sweep_cmd) {
            return cmd_sweep(sweepf, out);
        }
    } catch (const TrainingDiverged& e) {
        err << "error: " << e.what() << "\n";
        return kNumeric;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return kNumeric;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    print_usage(app, err);
    return kUsage;
}

}  // namespace neurodavis::cli
