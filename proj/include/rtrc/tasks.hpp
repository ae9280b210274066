#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rtrc/agent_sim.hpp"
#include "rtrc/density_sim.hpp"
#include "rtrc/lattice.hpp"
#include "rtrc/readout.hpp"
#include "rtrc/signal_phase.hpp"

namespace rtrc {

enum class Model : std::uint8_t { density, agents };
enum class TaskKind : std::uint8_t { density_link, external_series };

/// Parameters of the synthetic stand-in for an external series: a sinusoid
/// with optional AR(1) noise on a 15-minute grid.
struct SynthParams {
    std::string kind = "sinusoid+ar1";  // or "sinusoid"
    double period = 96.0;
    double amplitude = 1.0;
    double offset = 0.0;
    double ar_rho = 0.9;
    double ar_sigma = 0.1;
};

struct ExperimentConfig {
    TaskKind task = TaskKind::density_link;
    Model model = Model::density;
    int n = 5;
    int horizon = 5;  // T
    std::vector<double> tau{100.0};  // one value for all junctions, or one per junction
    PhaseMode phase_mode = PhaseMode::constant_rate;
    PhaseInput phase_input = PhaseInput::offset;
    bool ns_stop_first = true;
    double beta = 1e-8;
    double p = 1.0;
    int roads = 20;  // M, agents task only
    int washout = 100;
    int train = 4000;
    int test = 2000;
    int trials = 20;
    std::uint64_t seed = 1;
    /// 1-based junction ids of the target link; defaults to the link entering
    /// the central junction from the west.
    std::optional<std::pair<int, int>> target_link;
    TurnWeights turn_weights;
    TurnAssignment turn_assignment = TurnAssignment::shuffled;
    std::optional<double> link_length;  // 1 for density, 20 for agents when unset
    LinkLengths link_lengths;           // 0-based junction ids
    std::optional<double> total_vehicles;  // defaults to one vehicle per link
    DensityInit init = DensityInit::random;
    OVParams ov;
    int agents_per_link = 4;
    double input_sigma = 1.0;
    int trial_average = 5;
    std::optional<FeatureTag> feature_def;
    int max_lag = 20;
    double log_base = 10.0;
    std::string series_path;  // empty: use the synthetic generator
    SynthParams synth;
    int threads = 1;

    double resolved_link_length() const { return link_length.value_or(model == Model::agents ? 20.0 : 1.0); }
    FeatureTag resolved_feature_def() const;
    std::vector<double> resolved_tau() const;
    /// Simulated steps needed: washout + T + train + test.
    int required_steps() const;
    void validate() const;
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    double score = 0.0;               // aggregate logNRMSE over targets
    std::vector<double> target_scores;  // per target
    std::vector<LinkId> targets;      // target links (density tasks)
    int lag = 0;
    std::vector<std::vector<double>> teacher;    // [target][test step]
    std::vector<std::vector<double>> predicted;  // [target][test step]
    bool skipped = false;
    std::string note;
    ReadoutModel model;
};

/// Per-trial seed, base seed xor trial index.
std::uint64_t trial_seed(std::uint64_t base, int trial);

/// Independent generator for one purpose within a trial.
std::mt19937_64 stream(std::uint64_t trial_seed, std::uint64_t purpose);

/// ceil(p * n^2) junctions. While at most n^2 - 2 are needed the endpoints of
/// `target` are never picked. Larger p gives a superset of smaller p for the
/// same generator state.
std::vector<JunctionId> select_reservoir_fraction(double p, const Network& net, std::optional<LinkId> target,
                                                  std::mt19937_64& rng);

/// Lag in [-max_lag, max_lag] maximising the correlation of y_hat(t) with
/// y(t - lag). A positive lag means the prediction trails the teacher.
int lag_diagnostic(std::span<const double> y, std::span<const double> y_hat, int max_lag);

LinkId resolve_target_link(const ExperimentConfig& cfg, const Network& net);

struct SimulationTrace {
    Network net;
    TurnTable turns;
    std::vector<ReservoirSnapshot> snapshots;
};

/// Free run of the configured model without input, using the generators of
/// trial `trial`.
SimulationTrace simulate(const ExperimentConfig& cfg, int steps, int trial = 0);

std::vector<TrialResult> run_task1_density(const ExperimentConfig& cfg);
std::vector<TrialResult> run_task1_agents(const ExperimentConfig& cfg);
std::vector<TrialResult> run_task2_external(const ExperimentConfig& cfg, std::span<const double> series);

/// Mean of the first `count` trials' predictions, scored against their
/// shared teacher.
TrialResult average_predictions(std::span<const TrialResult> trials, int count, double log_base = 10.0,
                                int max_lag = 20);

/// Runs the task selected by the config. `series` is required for the
/// external-series task.
std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg, std::span<const double> series = {});

struct SweepRow {
    double value = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<TrialResult> trials;
};

struct SweepTable {
    std::string parameter;
    std::vector<SweepRow> rows;
};

/// Applies a named parameter (p, M, T, beta, tau) to a config.
void set_parameter(ExperimentConfig& cfg, const std::string& name, double value);

/// One row per value; every row uses the same trial seeds.
SweepTable sweep(const ExperimentConfig& cfg, const std::string& parameter, std::span<const double> values,
                 std::span<const double> series = {});

double mean_score(std::span<const TrialResult> trials);

}  // namespace rtrc
