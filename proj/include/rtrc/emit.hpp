#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtrc/snapshot.hpp"
#include "rtrc/tasks.hpp"

namespace rtrc {

inline constexpr const char* kToolVersion = "rtrc 0.3.0";

/// trial,seed,logNRMSE,lag,skipped
void write_results_csv(std::ostream& os, const std::vector<TrialResult>& trials);

/// One row per test step: t, then teacher and predicted for each target.
void write_trial_series_csv(std::ostream& os, const TrialResult& trial, const Network* net = nullptr);

/// value,trial,seed,logNRMSE,lag
void write_sweep_csv(std::ostream& os, const SweepTable& table);
/// value,mean,stderr,n
void write_sweep_summary_csv(std::ostream& os, const SweepTable& table);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// A plain polyline chart with axes, tick labels and a legend.
void write_line_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series);

/// Collects files written into one output directory and records them in the
/// manifest.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Opens `name` under the root for writing and registers it.
    std::ofstream open(const std::string& name);
    const std::vector<std::string>& artifacts() const { return artifacts_; }

    /// manifest.json with the command, the resolved config and the artifact
    /// list. `extra` entries are merged in at top level.
    void write_manifest(const std::string& command, const ExperimentConfig& cfg,
                        const nlohmann::json& extra = nlohmann::json::object());

private:
    std::filesystem::path root_;
    std::vector<std::string> artifacts_;
};

/// results.csv, per-trial series and weights, a teacher/prediction plot of
/// the first scored trial and, with `averaged`, the trial-averaged series.
void emit_results(OutputDir& out, const std::vector<TrialResult>& trials, const Network* net = nullptr,
                  const TrialResult* averaged = nullptr);

/// sweep.csv, sweep_summary.csv and sweep.svg.
void emit_sweep(OutputDir& out, const SweepTable& table);

/// snapshots.csv and network.json.
void emit_trace(OutputDir& out, const SimulationTrace& trace);

}  // namespace rtrc
