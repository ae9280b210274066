#include "rtrc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rtrc/config.hpp"
#include "rtrc/csv.hpp"
#include "rtrc/emit.hpp"
#include "rtrc/series.hpp"
#include "rtrc/tasks.hpp"

namespace rtrc {

namespace {

using nlohmann::json;

constexpr std::uint64_t kSeriesPurpose = 8;

/// Everything needed to run one subcommand; also what a manifest stores.
struct Invocation {
    std::string command;
    ExperimentConfig cfg;
    std::string param;
    std::vector<double> values;
    std::optional<int> steps;
    std::optional<int> length;
};

std::vector<double> load_series(const ExperimentConfig& cfg, int length) {
    if (!cfg.series_path.empty()) return read_series_csv(cfg.series_path).values;
    auto rng = stream(cfg.seed, kSeriesPurpose);
    return synth_series(cfg.synth, length, rng);
}

void apply_task(ExperimentConfig& cfg, const std::string& task) {
    if (task == "task1-density") {
        cfg.task = TaskKind::density_link;
        cfg.model = Model::density;
    } else if (task == "task1-agents") {
        cfg.task = TaskKind::density_link;
        cfg.model = Model::agents;
    } else if (task == "task2") {
        cfg.task = TaskKind::external_series;
        cfg.model = Model::density;
    } else if (!task.empty()) {
        throw ConfigError("task", "'" + task + "' is not one of task1-density, task1-agents, task2");
    }
}

json extras(const Invocation& inv) {
    json j = json::object();
    if (inv.command == "sweep") {
        j["param"] = inv.param;
        j["values"] = inv.values;
    }
    if (inv.steps) j["steps"] = *inv.steps;
    if (inv.length) j["length"] = *inv.length;
    return j;
}

void report_trials(std::ostream& out, const std::vector<TrialResult>& trials) {
    const double mean = mean_score(trials);
    int scored = 0;
    for (const auto& t : trials) scored += t.skipped ? 0 : 1;
    if (scored)
        out << "mean logNRMSE " << format_double(mean) << " over " << scored << " trials\n";
    else
        out << "no scored trials\n";
}

void execute(const Invocation& inv, const std::filesystem::path& dir, std::ostream& out) {
    ExperimentConfig cfg = inv.cfg;
    OutputDir od(dir);

    if (inv.command == "synth") {
        const int length = inv.length.value_or(cfg.required_steps());
        auto rng = stream(cfg.seed, kSeriesPurpose);
        const auto values = synth_series(cfg.synth, length, rng);
        auto os = od.open("series.csv");
        os.close();
        write_series_csv((dir / "series.csv").string(), values);
        out << "wrote " << length << " samples\n";
    } else if (inv.command == "simulate") {
        const int steps = inv.steps.value_or(cfg.required_steps());
        emit_trace(od, simulate(cfg, steps));
        out << "simulated " << steps << " steps\n";
    } else if (inv.command == "sweep") {
        std::vector<double> series;
        if (cfg.task == TaskKind::external_series) {
            int longest = cfg.required_steps();
            for (double v : inv.values) {
                ExperimentConfig c = cfg;
                set_parameter(c, inv.param, v);
                longest = std::max(longest, c.required_steps());
            }
            series = load_series(cfg, longest);
        }
        const auto table = sweep(cfg, inv.param, inv.values, series);
        emit_sweep(od, table);
        for (const auto& row : table.rows)
            out << inv.param << '=' << format_double(row.value) << " mean logNRMSE " << format_double(row.mean)
                << '\n';
    } else {
        std::vector<double> series;
        if (cfg.task == TaskKind::external_series) {
            series = load_series(cfg, cfg.required_steps());
            auto os = od.open("input_series.csv");
            os.close();
            write_series_csv((dir / "input_series.csv").string(), series);
        }
        const auto trials = run_experiment(cfg, series);
        const Network net = build_lattice(cfg.n, cfg.resolved_link_length(), cfg.link_lengths);
        std::optional<TrialResult> averaged;
        if (cfg.task == TaskKind::external_series && cfg.trials >= cfg.trial_average)
            averaged = average_predictions(trials, cfg.trial_average, cfg.log_base, cfg.max_lag);
        emit_results(od, trials, &net, averaged ? &*averaged : nullptr);
        report_trials(out, trials);
        if (averaged)
            out << "average of " << cfg.trial_average << " trials logNRMSE " << format_double(averaged->score) << '\n';
    }
    od.write_manifest(inv.command, cfg, extras(inv));
    out << "output " << dir.string() << '\n';
}

Invocation from_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("command") || !j.contains("config"))
        throw ConfigError("command", "not a run manifest");
    Invocation inv;
    inv.command = j.at("command").get<std::string>();
    inv.cfg = config_from_json(j.at("config"));
    if (j.contains("param")) inv.param = j.at("param").get<std::string>();
    if (j.contains("values")) inv.values = j.at("values").get<std::vector<double>>();
    if (j.contains("steps")) inv.steps = j.at("steps").get<int>();
    if (j.contains("length")) inv.length = j.at("length").get<int>();
    return inv;
}

std::filesystem::path default_out(const std::string& command) {
    const char* root = std::getenv("RTRC_OUT_ROOT");
    return std::filesystem::path(root && *root ? root : "runs") / command;
}

void error_line(std::ostream& err, const std::string& kind, const std::string& message,
                const std::string& key = {}) {
    json j{{"error", kind}, {"message", message}};
    if (!key.empty()) j["key"] = key;
    err << j.dump() << '\n';
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    for (const auto& field : split_csv_line(text)) {
        double v = 0.0;
        if (!parse_double(trim(field), v)) throw ConfigError("values", "cannot parse '" + field + "'");
        values.push_back(v);
    }
    if (values.empty()) throw ConfigError("values", "needs at least one value");
    return values;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Traffic-signal reservoir computing on lattice road networks"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir, param, values_text, task, series_path, manifest_path, kind;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials, threads, steps, length;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config or run manifest");
        sub->add_option("--seed", seed, "Base seed");
        sub->add_option("--out", out_dir, "Output directory");
    };
    auto experiment = [&](CLI::App* sub) {
        common(sub);
        sub->add_option("--trials", trials, "Number of trials");
        sub->add_option("--threads", threads, "Trials run in parallel");
    };

    auto* simulate_cmd = app.add_subcommand("simulate", "Free-run the traffic model and dump snapshots");
    common(simulate_cmd);
    simulate_cmd->add_option("--steps", steps, "Number of steps")->check(CLI::NonNegativeNumber);

    auto* t1d = app.add_subcommand("task1-density", "Predict a link density of the density model");
    experiment(t1d);
    auto* t1a = app.add_subcommand("task1-agents", "Predict omitted road densities of the agent model");
    experiment(t1a);
    auto* t2 = app.add_subcommand("task2", "Predict an external time series");
    experiment(t2);
    t2->add_option("--series", series_path, "CSV series; a synthetic series is used otherwise");

    auto* sweep_cmd = app.add_subcommand("sweep", "Score a task over values of one parameter");
    experiment(sweep_cmd);
    sweep_cmd->add_option("--param", param, "p, M, T, beta or tau")->required();
    sweep_cmd->add_option("--values", values_text, "Comma separated values")->required();
    sweep_cmd->add_option("--task", task, "task1-density, task1-agents or task2");
    sweep_cmd->add_option("--series", series_path, "CSV series for task2");

    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic series");
    common(synth_cmd);
    synth_cmd->add_option("--length", length, "Number of samples")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--kind", kind, "sinusoid or sinusoid+ar1");

    auto* rerun_cmd = app.add_subcommand("rerun", "Repeat a run from its manifest");
    rerun_cmd->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    rerun_cmd->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        error_line(err, "usage", e.what());
        return 2;
    }

    try {
        Invocation inv;
        CLI::App* chosen = app.get_subcommands().front();
        if (chosen == rerun_cmd) {
            inv = from_manifest(manifest_path);
        } else {
            inv.command = chosen->get_name();
            if (!config_path.empty()) inv.cfg = load_config(config_path);
            if (seed) inv.cfg.seed = *seed;
            if (trials) inv.cfg.trials = *trials;
            if (threads) inv.cfg.threads = *threads;
            if (!series_path.empty()) inv.cfg.series_path = series_path;
            if (!kind.empty()) inv.cfg.synth.kind = kind;
            inv.steps = steps;
            inv.length = length;
            if (inv.command == "sweep") {
                inv.param = param;
                inv.values = parse_values(values_text);
                apply_task(inv.cfg, task);
            } else if (inv.command != "simulate" && inv.command != "synth") {
                apply_task(inv.cfg, inv.command);
            }
            // re-validate after command line overrides
            inv.cfg = config_from_json(config_to_json(inv.cfg));
        }
        const std::filesystem::path dir = out_dir.empty() ? default_out(inv.command) : std::filesystem::path(out_dir);
        execute(inv, dir, out);
        return 0;
    } catch (const ConfigError& e) {
        error_line(err, "config", e.what(), e.key());
        return 2;
    } catch (const std::exception& e) {
        error_line(err, "runtime", e.what());
        return 1;
    }
}

}  // namespace rtrc
