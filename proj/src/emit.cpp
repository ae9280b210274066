#include "rtrc/emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "rtrc/config.hpp"
#include "rtrc/csv.hpp"

namespace rtrc {

namespace {

std::string fmt(double x, const char* pattern = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, x);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string trial_name(const char* stem, int trial, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d.%s", stem, trial, ext);
    return buf;
}

void check(const std::ostream& os, const std::string& what) {
    if (!os) throw std::runtime_error("write failed for " + what);
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

}  // namespace

void write_results_csv(std::ostream& os, const std::vector<TrialResult>& trials) {
    os << "trial,seed,logNRMSE,lag,skipped\n";
    for (const auto& t : trials) {
        os << t.trial << ',' << t.seed << ',';
        if (t.skipped)
            os << ",," << 1;
        else
            os << format_double(t.score) << ',' << t.lag << ',' << 0;
        os << '\n';
    }
}

void write_trial_series_csv(std::ostream& os, const TrialResult& trial, const Network* net) {
    const std::size_t m = trial.teacher.size();
    if (trial.predicted.size() != m) throw std::invalid_argument("teacher and prediction target counts differ");
    os << 't';
    for (std::size_t i = 0; i < m; ++i) {
        std::string suffix;
        if (m > 1) {
            if (net && i < trial.targets.size()) {
                const auto& l = net->link(trial.targets[i]);
                suffix = "_" + std::to_string(l.from + 1) + "_" + std::to_string(l.to + 1);
            } else {
                suffix = "_" + std::to_string(i + 1);
            }
        }
        os << ",teacher" << suffix << ",predicted" << suffix;
    }
    os << '\n';
    const std::size_t rows = m ? trial.teacher.front().size() : 0;
    for (std::size_t s = 0; s < rows; ++s) {
        os << s;
        for (std::size_t i = 0; i < m; ++i)
            os << ',' << format_double(trial.teacher[i].at(s)) << ',' << format_double(trial.predicted[i].at(s));
        os << '\n';
    }
}

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
    os << table.parameter << ",trial,seed,logNRMSE,lag\n";
    for (const auto& row : table.rows)
        for (const auto& t : row.trials) {
            if (t.skipped) continue;
            os << format_double(row.value) << ',' << t.trial << ',' << t.seed << ',' << format_double(t.score) << ','
               << t.lag << '\n';
        }
}

void write_sweep_summary_csv(std::ostream& os, const SweepTable& table) {
    os << table.parameter << ",mean,stderr,n\n";
    for (const auto& row : table.rows) {
        const auto n = std::count_if(row.trials.begin(), row.trials.end(), [](const auto& t) { return !t.skipped; });
        os << format_double(row.value) << ',';
        if (n)
            os << format_double(row.mean) << ',' << format_double(row.std_error);
        else
            os << ',';
        os << ',' << n << '\n';
    }
}

void write_line_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series) {
    constexpr double W = 720, H = 440, left = 70, right = 20, top = 40, bottom = 55;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
       << H - top - bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << fmt(px(xv), "%.1f") << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
           << fmt(xv) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(py(yv) + 4, "%.1f") << "\" text-anchor=\"end\">" << fmt(yv)
           << "</text>\n";
        os << "<line x1=\"" << left << "\" x2=\"" << W - right << "\" y1=\"" << fmt(py(yv), "%.1f") << "\" y2=\""
           << fmt(py(yv), "%.1f") << "\" stroke=\"#ddd\"/>\n";
    }
    os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
       << escape_xml(x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << (top + H - bottom) / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!first) os << ' ';
            os << fmt(px(s.x[i]), "%.2f") << ',' << fmt(py(s.y[i]), "%.2f");
            first = false;
        }
        os << "\"/>\n";
        const double ly = top + 16 + 16.0 * static_cast<double>(k);
        os << "<line x1=\"" << W - right - 150 << "\" x2=\"" << W - right - 130 << "\" y1=\"" << ly - 4 << "\" y2=\""
           << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - right - 124 << "\" y=\"" << ly << "\">" << escape_xml(s.label) << "</text>\n";
    }
    os << "</svg>\n";
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_))
        throw std::runtime_error("cannot create output directory " + root_.string());
}

std::ofstream OutputDir::open(const std::string& name) {
    std::ofstream out(root_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root_ / name).string());
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
    return out;
}

void OutputDir::write_manifest(const std::string& command, const ExperimentConfig& cfg, const nlohmann::json& extra) {
    nlohmann::json j;
    j["tool"] = kToolVersion;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["config"] = config_to_json(cfg);
    j["artifacts"] = artifacts_;
    for (const auto& [key, value] : extra.items()) j[key] = value;
    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root_ / "manifest.json").string());
    out << j.dump(2) << '\n';
    check(out, "manifest.json");
}

void emit_results(OutputDir& out, const std::vector<TrialResult>& trials, const Network* net,
                  const TrialResult* averaged) {
    if (trials.empty()) throw std::invalid_argument("no results to emit");
    {
        auto os = out.open("results.csv");
        write_results_csv(os, trials);
        check(os, "results.csv");
    }
    const TrialResult* shown = nullptr;
    for (const auto& t : trials) {
        if (t.skipped) continue;
        if (!shown) shown = &t;
        const auto series_name = trial_name("trial", t.trial, "csv");
        auto os = out.open(series_name);
        write_trial_series_csv(os, t, net);
        check(os, series_name);
        const auto weights_name = trial_name("weights", t.trial, "csv");
        auto ws = out.open(weights_name);
        write_weights_csv(ws, t.model);
        check(ws, weights_name);
    }
    if (averaged) {
        auto os = out.open("averaged.csv");
        write_trial_series_csv(os, *averaged, net);
        check(os, "averaged.csv");
        shown = averaged;
    }
    if (shown && !shown->teacher.empty()) {
        PlotSeries teacher{"teacher", {}, shown->teacher.front()}, predicted{"predicted", {}, shown->predicted.front()};
        for (std::size_t s = 0; s < teacher.y.size(); ++s) teacher.x.push_back(static_cast<double>(s));
        predicted.x = teacher.x;
        const std::string title = shown == averaged ? "averaged prediction, logNRMSE " + fmt(shown->score)
                                                    : "trial " + std::to_string(shown->trial) + ", logNRMSE " +
                                                          fmt(shown->score);
        auto os = out.open("prediction.svg");
        write_line_svg(os, title, "test step", "value", {teacher, predicted});
        check(os, "prediction.svg");
    }
}

void emit_sweep(OutputDir& out, const SweepTable& table) {
    if (table.rows.empty()) throw std::invalid_argument("no results to emit");
    {
        auto os = out.open("sweep.csv");
        write_sweep_csv(os, table);
        check(os, "sweep.csv");
    }
    {
        auto os = out.open("sweep_summary.csv");
        write_sweep_summary_csv(os, table);
        check(os, "sweep_summary.csv");
    }
    PlotSeries mean{"mean logNRMSE", {}, {}};
    for (const auto& row : table.rows) {
        mean.x.push_back(row.value);
        mean.y.push_back(row.mean);
    }
    auto os = out.open("sweep.svg");
    write_line_svg(os, "logNRMSE vs " + table.parameter, table.parameter, "logNRMSE", {mean});
    check(os, "sweep.svg");
}

void emit_trace(OutputDir& out, const SimulationTrace& trace) {
    {
        auto os = out.open("snapshots.csv");
        write_snapshot_header(os, trace.net);
        for (const auto& s : trace.snapshots) write_snapshot_row(os, s);
        check(os, "snapshots.csv");
    }
    auto os = out.open("network.json");
    os << to_json(trace.net, trace.turns).dump(2) << '\n';
    check(os, "network.json");
}

}  // namespace rtrc
