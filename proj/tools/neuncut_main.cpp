// Command-line surface for the NeuNcut library: dataset generation, affinity
// diagnostics, training, inference, evaluation, the classical spectral
// baseline and label-free gamma search. Every output file is written
// atomically (temp file + rename); every pipeline is reproducible byte for
// byte given identical flags and seed.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "neuncut/neuncut.hpp"

namespace {

using namespace neuncut;

std::vector<std::size_t> parse_dim_list(const std::string& text) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            const long v = std::stol(item);
            if (v <= 0) throw std::exception();
            dims.push_back(static_cast<std::size_t>(v));
        } catch (...) {
            throw InvalidConfig("bad hidden layer list: '" + text + "'");
        }
    }
    return dims;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (...) {
            throw InvalidConfig("bad number list: '" + text + "'");
        }
    }
    return values;
}

std::vector<int> read_labels_file(const std::string& path) {
    const DataMatrix data = load_csv(path);
    if (data.labels) return *data.labels;
    if (data.dim() == 1) {
        std::vector<int> labels(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double v = data.points(i, 0);
            const long long rounded = std::llround(v);
            if (std::fabs(v - static_cast<double>(rounded)) > 1e-9)
                throw InvalidData("non-integer label in " + path);
            labels[i] = static_cast<int>(rounded);
        }
        return labels;
    }
    throw InvalidData("no label column in " + path);
}

void write_labels_file(const std::vector<int>& labels, const std::string& path) {
    std::string out;
    out.reserve(labels.size() * 4);
    for (int v : labels) {
        out += std::to_string(v);
        out += '\n';
    }
    detail::atomic_write_text(path, out);
}

void write_plot_file(const Matrix& points, const std::vector<int>& labels,
                     const std::string& path) {
    if (points.cols() != 2)
        throw InvalidInput("plot output needs 2-D data, got dimension " +
                           std::to_string(points.cols()));
    std::string out = "x,y,predicted_label\n";
    for (std::size_t i = 0; i < points.rows(); ++i) {
        out += detail::format_double(points(i, 0));
        out += ',';
        out += detail::format_double(points(i, 1));
        out += ',';
        out += std::to_string(labels[i]);
        out += '\n';
    }
    detail::atomic_write_text(path, out);
}

struct TrainFlags {
    std::string data_path;
    std::size_t limit = 0;
    TrainConfig cfg;
    std::string hidden = "512,512";
    std::string objective = "ncut";
    std::string config_path;
    CLI::App* sub = nullptr;
};

/// Newline-delimited key=value defaults; keys mirror the long flag names.
/// Flags given explicitly on the command line win.
void apply_config_file(TrainFlags& flags) {
    if (flags.config_path.empty()) return;
    std::ifstream in(flags.config_path);
    if (!in) throw InvalidInput("cannot open config file: " + flags.config_path);

    const auto parse_unsigned = [](const std::string& v, const std::string& key) {
        try {
            const long long parsed = std::stoll(v);
            if (parsed < 0) throw std::exception();
            return static_cast<std::size_t>(parsed);
        } catch (...) {
            throw InvalidConfig("config: bad value '" + v + "' for " + key);
        }
    };
    const auto parse_real = [](const std::string& v, const std::string& key) {
        try {
            return std::stod(v);
        } catch (...) {
            throw InvalidConfig("config: bad value '" + v + "' for " + key);
        }
    };

    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto split = trimmed.find('=');
        if (split == std::string::npos)
            throw ParseError("config line is not key=value", line_number);
        const std::string key = detail::trim(trimmed.substr(0, split));
        const std::string value = detail::trim(trimmed.substr(split + 1));
        if (flags.sub->count("--" + key) > 0) continue;  // explicit flag wins

        if (key == "data")
            flags.data_path = value;
        else if (key == "limit")
            flags.limit = parse_unsigned(value, key);
        else if (key == "clusters")
            flags.cfg.clusters = parse_unsigned(value, key);
        else if (key == "gamma")
            flags.cfg.gamma = parse_real(value, key);
        else if (key == "lr")
            flags.cfg.lr0 = parse_real(value, key);
        else if (key == "weight-decay")
            flags.cfg.weight_decay = parse_real(value, key);
        else if (key == "batch-size")
            flags.cfg.batch_size = parse_unsigned(value, key);
        else if (key == "epochs")
            flags.cfg.epochs = parse_unsigned(value, key);
        else if (key == "sigma")
            flags.cfg.sigma = parse_real(value, key);
        else if (key == "knn-s")
            flags.cfg.knn_s = parse_unsigned(value, key);
        else if (key == "seed")
            flags.cfg.seed = parse_unsigned(value, key);
        else if (key == "objective")
            flags.objective = value;
        else if (key == "hidden")
            flags.hidden = value;
        else
            throw InvalidConfig("config: unknown key '" + key + "'");
    }
}

void add_train_flags(CLI::App* sub, TrainFlags& flags) {
    flags.sub = sub;
    sub->add_option("--data", flags.data_path, "Input CSV of points")->required();
    sub->add_option("--limit", flags.limit,
                    "Use only the first N rows of the data file (0 = all)")
        ->capture_default_str();
    sub->add_option("--clusters", flags.cfg.clusters, "Number of clusters k")
        ->capture_default_str();
    sub->add_option("--gamma", flags.cfg.gamma, "Orthogonality penalty weight")
        ->capture_default_str();
    sub->add_option("--lr", flags.cfg.lr0, "Initial learning rate (cosine-annealed to 0)")
        ->capture_default_str();
    sub->add_option("--weight-decay", flags.cfg.weight_decay, "Decoupled weight decay")
        ->capture_default_str();
    sub->add_option("--batch-size", flags.cfg.batch_size, "Mini-batch size m")
        ->capture_default_str();
    sub->add_option("--epochs", flags.cfg.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--sigma", flags.cfg.sigma, "Heat-kernel bandwidth")->capture_default_str();
    sub->add_option("--knn-s", flags.cfg.knn_s,
                    "Keep only the s largest affinities per row (0 = dense)")
        ->capture_default_str();
    sub->add_option("--seed", flags.cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--objective", flags.objective, "Graph-cut objective")
        ->check(CLI::IsMember({"ncut", "rcut"}))
        ->capture_default_str();
    sub->add_option("--hidden", flags.hidden, "Comma-separated hidden layer widths")
        ->capture_default_str();
    sub->add_option("--config", flags.config_path,
                    "Read key=value defaults from a file (explicit flags win)");
}

DataMatrix load_train_data(const TrainFlags& flags) {
    DataMatrix data = load_csv(flags.data_path);
    if (flags.limit == 0 || flags.limit >= data.size()) return data;
    DataMatrix subset;
    subset.points = Matrix(flags.limit, data.dim());
    for (std::size_t i = 0; i < flags.limit; ++i)
        for (std::size_t c = 0; c < data.dim(); ++c) subset.points(i, c) = data.points(i, c);
    if (data.labels)
        subset.labels = std::vector<int>(data.labels->begin(),
                                         data.labels->begin() + static_cast<long>(flags.limit));
    return subset;
}

TrainConfig finalize_config(TrainFlags& flags) {
    apply_config_file(flags);
    flags.cfg.hidden_dims = parse_dim_list(flags.hidden);
    flags.cfg.objective = objective_from_string(flags.objective);
    return flags.cfg;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"NeuNcut: differentiable normalized-cut clustering"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "Generate a synthetic 2-D dataset");
    std::string gen_shape = "rings";
    std::size_t gen_n = 10000;
    double gen_noise = 0.1, gen_r_inner = 1.0, gen_r_outer = 3.0, gen_scale = 2.0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    generate->add_option("--shape", gen_shape, "Dataset shape")
        ->check(CLI::IsMember({"rings", "c"}))
        ->capture_default_str();
    generate->add_option("--n", gen_n, "Number of points (even)")->capture_default_str();
    generate->add_option("--noise", gen_noise, "Gaussian noise level")->capture_default_str();
    generate->add_option("--r-inner", gen_r_inner, "Inner ring radius")->capture_default_str();
    generate->add_option("--r-outer", gen_r_outer, "Outer ring radius")->capture_default_str();
    generate->add_option("--scale", gen_scale, "Arc radius for the double-C shape")
        ->capture_default_str();
    generate->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
    generate->add_option("--out", gen_out, "Output CSV path")->required();
    generate->callback([&] {
        const DataMatrix data =
            gen_shape == "rings"
                ? gen_double_rings(gen_n, {gen_r_inner, gen_r_outer}, gen_noise, gen_seed)
                : gen_double_c(gen_n, gen_scale, gen_noise, gen_seed);
        save_csv(data, gen_out);
        std::cout << "wrote " << data.size() << " points to " << gen_out << "\n";
    });

    // affinity-stats
    auto* stats = app.add_subcommand("affinity-stats", "Summarize a heat-kernel affinity graph");
    std::string stats_data;
    double stats_sigma = 0.5;
    std::size_t stats_knn = 0;
    stats->add_option("--data", stats_data, "Input CSV of points")->required();
    stats->add_option("--sigma", stats_sigma, "Heat-kernel bandwidth")->capture_default_str();
    stats->add_option("--knn-s", stats_knn, "Keep only the s largest affinities per row (0 = dense)")
        ->capture_default_str();
    stats->callback([&] {
        const DataMatrix data = load_csv(stats_data);
        AffinityGraph graph = heat_kernel_affinity(data.points, stats_sigma);
        if (stats_knn != 0) graph = sparsify_knn(graph, stats_knn);
        double min_deg = graph.degrees.empty() ? 0.0 : graph.degrees[0];
        double max_deg = min_deg, mean_deg = 0.0;
        std::size_t zero_rows = 0, nonzero = 0;
        for (double d : graph.degrees) {
            min_deg = std::min(min_deg, d);
            max_deg = std::max(max_deg, d);
            mean_deg += d;
            if (d == 0.0) ++zero_rows;
        }
        mean_deg /= static_cast<double>(graph.size());
        for (double v : graph.affinity.data())
            if (v != 0.0) ++nonzero;
        nlohmann::json j;
        j["n"] = graph.size();
        j["d"] = data.dim();
        j["sigma"] = stats_sigma;
        j["knn_s"] = stats_knn;
        j["mean_degree"] = mean_deg;
        j["min_degree"] = min_deg;
        j["max_degree"] = max_deg;
        j["zero_degree_rows"] = zero_rows;
        j["nonzero_affinities"] = nonzero;
        std::cout << j.dump() << "\n";
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the membership network");
    TrainFlags train_flags;
    std::string model_out = "model.json";
    std::string log_out;
    bool track_metrics = false;
    add_train_flags(train_cmd, train_flags);
    train_cmd->add_option("--model-out", model_out, "Model JSON output path")
        ->capture_default_str();
    train_cmd->add_option("--log-out", log_out, "Training log CSV output path");
    train_cmd->add_flag("--track-metrics", track_metrics,
                        "Evaluate ACC/NMI/ARI on the training data each epoch");
    int train_exit = 0;
    train_cmd->callback([&] {
        TrainConfig cfg = finalize_config(train_flags);
        const DataMatrix data = load_train_data(train_flags);
        cfg.track_metrics = track_metrics;
        cfg.checkpoint_path = model_out;
        const TrainResult result = train(data, cfg);
        const ModelMeta meta{cfg.objective, cfg.clusters, cfg.sigma,
                             cfg.knn_s ? std::optional<std::size_t>(cfg.knn_s) : std::nullopt};
        save_model(result.model, meta, model_out);
        if (!log_out.empty()) detail::atomic_write_text(log_out, train_log_to_csv(result.log));
        if (result.log.aborted) {
            std::cerr << "training aborted (" << result.log.abort_reason
                      << "); last-good checkpoint written to " << model_out << "\n";
            train_exit = 2;
            return;
        }
        const IterationRecord& last = result.log.records.back();
        std::cout << "trained " << result.log.records.size() << " iterations; final lap="
                  << last.lap << " orth=" << last.orth << " total=" << last.total << "\n";
    });

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Assign cluster labels with a trained model");
    std::string infer_model, infer_data, labels_out, memberships_out, plot_out;
    infer_cmd->add_option("--model", infer_model, "Model JSON path")->required();
    infer_cmd->add_option("--data", infer_data, "Input CSV of points")->required();
    infer_cmd->add_option("--labels-out", labels_out, "Predicted labels output path")->required();
    infer_cmd->add_option("--memberships-out", memberships_out,
                          "Optional CSV of soft memberships");
    infer_cmd->add_option("--plot-out", plot_out,
                          "Optional CSV of (x,y,predicted_label) rows for 2-D data");
    infer_cmd->callback([&] {
        const auto [model, meta] = load_model(infer_model);
        const DataMatrix data = load_csv(infer_data);
        const Inference result = infer(model, data);
        write_labels_file(result.labels, labels_out);
        if (!memberships_out.empty()) {
            std::string out;
            for (std::size_t i = 0; i < result.memberships.rows(); ++i) {
                for (std::size_t c = 0; c < result.memberships.cols(); ++c) {
                    if (c) out += ',';
                    out += detail::format_double(result.memberships(i, c));
                }
                out += '\n';
            }
            detail::atomic_write_text(memberships_out, out);
        }
        if (!plot_out.empty()) write_plot_file(data.points, result.labels, plot_out);
        std::cout << "inferred " << result.labels.size() << " labels\n";
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate predicted labels against ground truth");
    std::string eval_pred, eval_truth;
    eval_cmd->add_option("--pred", eval_pred, "Predicted labels (labels-only file or CSV)")
        ->required();
    eval_cmd->add_option("--truth", eval_truth, "Ground-truth labels (labels-only file or CSV)")
        ->required();
    eval_cmd->callback([&] {
        const std::vector<int> pred = read_labels_file(eval_pred);
        const std::vector<int> truth = read_labels_file(eval_truth);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "{\"acc\": %.6f, \"nmi\": %.6f, \"ari\": %.6f}",
                      accuracy(pred, truth), nmi(pred, truth), ari(pred, truth));
        std::cout << buf << "\n";
    });

    // baseline-ncut
    auto* baseline_cmd =
        app.add_subcommand("baseline-ncut", "Classical spectral clustering (dense eigensolver)");
    std::string base_data, base_labels_out;
    std::size_t base_clusters = 2, base_knn = 0, base_restarts = 10,
                base_max_n = kDefaultBaselineCap;
    double base_sigma = 0.5;
    std::uint64_t base_seed = 0;
    baseline_cmd->add_option("--data", base_data, "Input CSV of points")->required();
    baseline_cmd->add_option("--clusters", base_clusters, "Number of clusters k")
        ->capture_default_str();
    baseline_cmd->add_option("--sigma", base_sigma, "Heat-kernel bandwidth")
        ->capture_default_str();
    baseline_cmd->add_option("--knn-s", base_knn,
                             "Keep only the s largest affinities per row (0 = dense)")
        ->capture_default_str();
    baseline_cmd->add_option("--seed", base_seed, "Random seed for k-means")
        ->capture_default_str();
    baseline_cmd->add_option("--restarts", base_restarts, "k-means restarts")
        ->capture_default_str();
    baseline_cmd->add_option("--max-n", base_max_n, "Dense eigensolver size cap")
        ->capture_default_str();
    baseline_cmd->add_option("--labels-out", base_labels_out, "Labels output path")->required();
    baseline_cmd->callback([&] {
        const DataMatrix data = load_csv(base_data);
        const std::vector<int> labels = ncut_baseline(data.points, base_clusters, base_sigma,
                                                      base_knn, base_seed, base_restarts,
                                                      base_max_n);
        write_labels_file(labels, base_labels_out);
        std::cout << "clustered " << labels.size() << " points\n";
    });

    // gamma-search
    auto* gamma_cmd =
        app.add_subcommand("gamma-search", "Label-free penalty-weight selection");
    TrainFlags gamma_flags;
    std::string grid_list;
    double grid_max = 1e6, grid_min = 1.0, grid_ratio = 2.0, tau = 0.05;
    std::size_t probe_epochs = 0;
    std::string report_out;
    add_train_flags(gamma_cmd, gamma_flags);
    gamma_cmd->add_option("--grid", grid_list,
                          "Explicit descending comma-separated gamma grid");
    gamma_cmd->add_option("--grid-max", grid_max, "Largest gamma of the geometric grid")
        ->capture_default_str();
    gamma_cmd->add_option("--grid-min", grid_min, "Smallest gamma of the geometric grid")
        ->capture_default_str();
    gamma_cmd->add_option("--grid-ratio", grid_ratio, "Geometric grid ratio")
        ->capture_default_str();
    gamma_cmd->add_option("--tau", tau, "Relative tolerance on the penalty bound")
        ->capture_default_str();
    gamma_cmd->add_option("--probe-epochs", probe_epochs,
                          "Epochs per probe (0 = epochs/4)")
        ->capture_default_str();
    gamma_cmd->add_option("--report-out", report_out, "Probe report CSV path");
    gamma_cmd->callback([&] {
        const TrainConfig cfg = finalize_config(gamma_flags);
        const DataMatrix data = load_train_data(gamma_flags);
        std::vector<double> grid;
        if (!grid_list.empty()) {
            grid = parse_double_list(grid_list);
        } else {
            if (!(grid_ratio > 1.0))
                throw InvalidConfig("gamma-search: grid ratio must exceed 1");
            for (double g = grid_max; g >= grid_min * (1.0 - 1e-12); g /= grid_ratio)
                grid.push_back(g);
        }
        const GammaSearchResult result = search(data, cfg, grid, tau, probe_epochs);
        if (!report_out.empty())
            detail::atomic_write_text(report_out, gamma_report_to_csv(result));
        nlohmann::json j;
        j["selected_gamma"] = result.selected;
        j["orth_bound"] = result.orth_bound;
        j["probes"] = result.probes.size();
        std::cout << j.dump() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return train_exit;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const neuncut::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const neuncut::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
