#include "rtrc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rtrc {

namespace {

// generator purposes within a trial
enum Purpose : std::uint64_t {
    kTurns = 1,
    kPhases = 2,
    kInit = 3,
    kMask = 4,
    kInput = 5,
    kMotion = 6,
    kRoads = 7,
};

Network make_network(const ExperimentConfig& cfg) {
    return build_lattice(cfg.n, cfg.resolved_link_length(), cfg.link_lengths);
}

PhaseBank make_phases(const ExperimentConfig& cfg, std::uint64_t seed) {
    auto rng = stream(seed, kPhases);
    PhaseBank bank = PhaseBank::random(cfg.resolved_tau(), cfg.phase_mode, rng);
    bank.set_ns_stop_first(std::vector<std::uint8_t>(bank.size(), cfg.ns_stop_first ? 1 : 0));
    bank.set_input_mode(cfg.phase_input);
    return bank;
}

TurnTable make_turns(const ExperimentConfig& cfg, const Network& net, std::uint64_t seed) {
    auto rng = stream(seed, kTurns);
    return assign_turn_table(net, cfg.turn_weights, rng, cfg.turn_assignment);
}

DensitySimulation make_density_sim(const ExperimentConfig& cfg, const Network& net, std::uint64_t seed,
                                   bool with_input) {
    auto phases = make_phases(cfg, seed);
    if (with_input) {
        auto rng = stream(seed, kInput);
        phases.draw_input_weights(cfg.input_sigma, rng);
    }
    auto init_rng = stream(seed, kInit);
    const double total = cfg.total_vehicles.value_or(static_cast<double>(net.link_count()));
    auto state = init_density(net, total, cfg.init, init_rng);
    return DensitySimulation(net, make_turns(cfg, net, seed), std::move(phases), std::move(state));
}

bool is_constant(std::span<const double> s) {
    return std::adjacent_find(s.begin(), s.end(), std::not_equal_to<>()) == s.end();
}

/// Runs the trial bodies, in parallel when configured. Results keep trial
/// order regardless of scheduling.
template <typename Fn>
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, Fn&& body) {
    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
    const int workers = std::max(1, cfg.threads);
    if (workers == 1) {
        for (int k = 0; k < cfg.trials; ++k) results[static_cast<std::size_t>(k)] = body(k);
        return results;
    }
    for (int start = 0; start < cfg.trials; start += workers) {
        std::vector<std::future<TrialResult>> batch;
        for (int k = start; k < std::min(cfg.trials, start + workers); ++k)
            batch.push_back(std::async(std::launch::async, [&body, k] { return body(k); }));
        for (int k = start; k < std::min(cfg.trials, start + workers); ++k)
            results[static_cast<std::size_t>(k)] = batch[static_cast<std::size_t>(k - start)].get();
    }
    return results;
}

/// Fits on [t0, t0 + train) and scores [t0 + train, t0 + train + test).
template <typename FeatureFn, typename TargetFn>
TrialResult fit_and_score(const ExperimentConfig& cfg, const FeatureDef& def, int targets, FeatureFn&& features,
                          TargetFn&& teacher) {
    const int t0 = cfg.washout + cfg.horizon;
    const auto dim = static_cast<Eigen::Index>(def.dimension());
    Eigen::MatrixXd x_train(dim, cfg.train);
    Eigen::MatrixXd y_train(targets, cfg.train);
    for (int s = 0; s < cfg.train; ++s) {
        x_train.col(s) = features(t0 + s);
        y_train.col(s) = teacher(t0 + s);
    }
    const auto model = ridge_fit(x_train, y_train, cfg.beta, def);

    TrialResult r;
    r.teacher.assign(static_cast<std::size_t>(targets), std::vector<double>(static_cast<std::size_t>(cfg.test)));
    r.predicted = r.teacher;
    for (int s = 0; s < cfg.test; ++s) {
        const int t = t0 + cfg.train + s;
        const Eigen::VectorXd yhat = predict(model, Eigen::VectorXd(features(t)));
        const Eigen::VectorXd y = teacher(t);
        for (int m = 0; m < targets; ++m) {
            r.teacher[static_cast<std::size_t>(m)][static_cast<std::size_t>(s)] = y[m];
            r.predicted[static_cast<std::size_t>(m)][static_cast<std::size_t>(s)] = yhat[m];
        }
    }
    // roads frozen over the test window have no score and stay out of the mean
    int scored = 0, first = -1, frozen = 0;
    double sum = 0.0;
    for (int m = 0; m < targets; ++m) {
        const auto& y = r.teacher[static_cast<std::size_t>(m)];
        if (targets > 1 && is_constant(y)) {
            r.target_scores.push_back(std::numeric_limits<double>::quiet_NaN());
            ++frozen;
            continue;
        }
        r.target_scores.push_back(log_nrmse(y, r.predicted[static_cast<std::size_t>(m)], cfg.log_base));
        sum += r.target_scores.back();
        ++scored;
        if (first < 0) first = m;
    }
    if (scored == 0) throw std::invalid_argument("every teacher series is constant; logNRMSE undefined");
    if (frozen > 0) r.note = std::to_string(frozen) + " constant road(s) not scored";
    r.score = sum / scored;
    const auto& yl = r.teacher[static_cast<std::size_t>(first)];
    const auto& pl = r.predicted[static_cast<std::size_t>(first)];
    r.lag = is_constant(pl) ? 0 : lag_diagnostic(yl, pl, cfg.max_lag);
    r.model = model;
    return r;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

FeatureTag ExperimentConfig::resolved_feature_def() const {
    if (feature_def) return *feature_def;
    if (task == TaskKind::external_series) return FeatureTag::b;
    return model == Model::agents ? FeatureTag::a_prime : FeatureTag::a;
}

std::vector<double> ExperimentConfig::resolved_tau() const {
    const auto junctions = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (tau.size() == 1) return std::vector<double>(junctions, tau.front());
    if (tau.size() != junctions)
        throw std::invalid_argument("tau needs 1 or " + std::to_string(junctions) + " entries");
    return tau;
}

int ExperimentConfig::required_steps() const { return washout + horizon + train + test; }

void ExperimentConfig::validate() const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (horizon < 0) throw std::invalid_argument("T must be >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (washout < 0 || train < 1 || test < 2) throw std::invalid_argument("invalid series lengths");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (roads < 0) throw std::invalid_argument("M must be >= 0");
    for (double t : resolved_tau())
        if (!(t > 0.0)) throw std::invalid_argument("tau must be positive");
    ov.validate();
}

std::uint64_t trial_seed(std::uint64_t base, int trial) { return base ^ static_cast<std::uint64_t>(trial); }

std::mt19937_64 stream(std::uint64_t trial_seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(trial_seed), static_cast<std::uint32_t>(trial_seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

std::vector<JunctionId> select_reservoir_fraction(double p, const Network& net, std::optional<LinkId> target,
                                                  std::mt19937_64& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    const int total = net.junction_count();
    // tolerance keeps products such as 0.6 * 25 from rounding up past an integer
    const int count = std::min(total, static_cast<int>(std::ceil(p * total - 1e-9)));

    std::vector<JunctionId> pool;
    std::vector<JunctionId> endpoints;
    for (JunctionId j = 0; j < total; ++j) {
        if (target && (net.link(*target).from == j || net.link(*target).to == j))
            endpoints.push_back(j);
        else
            pool.push_back(j);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    std::shuffle(endpoints.begin(), endpoints.end(), rng);
    pool.insert(pool.end(), endpoints.begin(), endpoints.end());
    std::vector<JunctionId> mask(pool.begin(), pool.begin() + count);
    std::sort(mask.begin(), mask.end());
    return mask;
}

int lag_diagnostic(std::span<const double> y, std::span<const double> y_hat, int max_lag) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("series lengths differ");
    if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
    if (y.size() <= 2 * static_cast<std::size_t>(max_lag))
        throw std::invalid_argument("series too short for the lag window");
    if (is_constant(y) || is_constant(y_hat)) throw std::invalid_argument("lag undefined for a constant series");

    const auto n = static_cast<int>(y.size());
    int best = 0;
    double best_corr = -std::numeric_limits<double>::infinity();
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        const int lo = std::max(0, lag);
        const int hi = n + std::min(0, lag);
        const auto len = static_cast<std::size_t>(hi - lo);
        const double c = pearson(y_hat.subspan(static_cast<std::size_t>(lo), len),
                                 y.subspan(static_cast<std::size_t>(lo - lag), len));
        if (std::isnan(c)) continue;
        if (c > best_corr) {
            best_corr = c;
            best = lag;
        }
    }
    return best;
}

LinkId resolve_target_link(const ExperimentConfig& cfg, const Network& net) {
    if (cfg.target_link) {
        const auto [from, to] = *cfg.target_link;
        auto link = net.find_link(from - 1, to - 1);
        if (!link)
            throw std::invalid_argument("target link " + std::to_string(from) + "->" + std::to_string(to) +
                                        " does not exist");
        return *link;
    }
    if (net.side() < 2) throw std::invalid_argument("lattice has no links to predict");
    const int c = net.side() / 2;
    return *net.find_link(net.junction_at(c, c - 1), net.junction_at(c, c));
}

SimulationTrace simulate(const ExperimentConfig& cfg, int steps, int trial) {
    cfg.validate();
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    const auto seed = trial_seed(cfg.seed, trial);
    SimulationTrace trace{make_network(cfg), {}, {}};
    trace.turns = make_turns(cfg, trace.net, seed);
    trace.snapshots.reserve(static_cast<std::size_t>(steps));
    if (cfg.model == Model::agents) {
        AgentSimulation sim(trace.net, trace.turns, make_phases(cfg, seed),
                            place_agents(trace.net, cfg.agents_per_link, cfg.ov), cfg.ov, stream(seed, kMotion)());
        for (int t = 0; t < steps; ++t) trace.snapshots.push_back(sim.advance());
    } else {
        auto sim = make_density_sim(cfg, trace.net, seed, false);
        for (int t = 0; t < steps; ++t) trace.snapshots.push_back(sim.advance());
    }
    return trace;
}

std::vector<TrialResult> run_task1_density(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.model != Model::density) throw std::invalid_argument("task1-density needs the density model");
    const Network net = make_network(cfg);
    const LinkId target = resolve_target_link(cfg, net);
    const FeatureTag tag = cfg.resolved_feature_def();
    if (tag == FeatureTag::a_prime) throw std::invalid_argument("feature definition a_prime needs the agents model");

    return run_trials(cfg, [&](int k) {
        const auto seed = trial_seed(cfg.seed, k);
        auto sim = make_density_sim(cfg, net, seed, false);
        auto mask_rng = stream(seed, kMask);
        FeatureDef def{tag, select_reservoir_fraction(cfg.p, net, target, mask_rng), {}, cfg.horizon};

        std::vector<ReservoirSnapshot> snaps;
        snaps.reserve(static_cast<std::size_t>(cfg.required_steps()));
        for (int t = 0; t < cfg.required_steps(); ++t) snaps.push_back(sim.advance());
        auto y = [&](int t) { return snaps[static_cast<std::size_t>(t)].k[static_cast<std::size_t>(target)]; };

        auto result = fit_and_score(
            cfg, def, 1,
            [&](int t) {
                std::optional<double> u;
                if (tag == FeatureTag::a) u = y(t - cfg.horizon);
                return assemble_features(def, snaps[static_cast<std::size_t>(t)], u);
            },
            [&](int t) { return Eigen::VectorXd::Constant(1, y(t)); });
        result.trial = k;
        result.seed = seed;
        result.targets = {target};
        return result;
    });
}

std::vector<TrialResult> run_task1_agents(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.model != Model::agents) throw std::invalid_argument("task1-agents needs the agents model");
    const Network net = make_network(cfg);
    if (cfg.roads > net.link_count())
        throw std::invalid_argument("M = " + std::to_string(cfg.roads) + " exceeds the " +
                                    std::to_string(net.link_count()) + " roads");
    const FeatureTag tag = cfg.resolved_feature_def();

    return run_trials(cfg, [&](int k) {
        const auto seed = trial_seed(cfg.seed, k);
        auto road_rng = stream(seed, kRoads);
        std::vector<LinkId> order(static_cast<std::size_t>(net.link_count()));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), road_rng);
        std::vector<LinkId> observed(order.begin(), order.begin() + cfg.roads);
        std::vector<LinkId> omitted(order.begin() + cfg.roads, order.end());
        std::sort(observed.begin(), observed.end());
        std::sort(omitted.begin(), omitted.end());

        TrialResult skipped;
        skipped.trial = k;
        skipped.seed = seed;
        if (omitted.empty()) {
            skipped.skipped = true;
            skipped.note = "all roads observed; nothing to predict";
            return skipped;
        }

        auto mask_rng = stream(seed, kMask);
        FeatureDef def{tag, select_reservoir_fraction(cfg.p, net, std::nullopt, mask_rng),
                       tag == FeatureTag::a_prime ? observed : std::vector<LinkId>{}, cfg.horizon};

        AgentSimulation sim(net, make_turns(cfg, net, seed), make_phases(cfg, seed),
                            place_agents(net, cfg.agents_per_link, cfg.ov), cfg.ov,
                            stream(seed, kMotion)());
        std::vector<ReservoirSnapshot> snaps;
        snaps.reserve(static_cast<std::size_t>(cfg.required_steps()));
        for (int t = 0; t < cfg.required_steps(); ++t) snaps.push_back(sim.advance());

        auto teacher = [&](int t) {
            Eigen::VectorXd y(static_cast<Eigen::Index>(omitted.size()));
            const auto& kv = snaps[static_cast<std::size_t>(t)].k;
            for (std::size_t m = 0; m < omitted.size(); ++m)
                y[static_cast<Eigen::Index>(m)] = kv[static_cast<std::size_t>(omitted[m])];
            return y;
        };
        auto result = fit_and_score(
            cfg, def, static_cast<int>(omitted.size()),
            [&](int t) {
                const auto& delayed = snaps[static_cast<std::size_t>(t - cfg.horizon)];
                std::optional<double> u;
                std::optional<std::span<const double>> kd;
                if (tag != FeatureTag::b) u = teacher(t - cfg.horizon).mean();
                if (tag == FeatureTag::a_prime) kd = std::span<const double>(delayed.k);
                return assemble_features(def, snaps[static_cast<std::size_t>(t)], u, kd);
            },
            teacher);
        result.trial = k;
        result.seed = seed;
        result.targets = omitted;
        return result;
    });
}

std::vector<TrialResult> run_task2_external(const ExperimentConfig& cfg, std::span<const double> series) {
    cfg.validate();
    if (cfg.model != Model::density) throw std::invalid_argument("task2 runs on the density model");
    const int steps = cfg.required_steps();
    if (static_cast<int>(series.size()) < steps)
        throw std::invalid_argument("series has " + std::to_string(series.size()) + " samples, needs " +
                                    std::to_string(steps));
    for (std::size_t i = 0; i < static_cast<std::size_t>(steps); ++i)
        if (!std::isfinite(series[i])) throw std::invalid_argument("series sample " + std::to_string(i) + " is not finite");

    // normalisation statistics from the part seen before the test window
    const int fit_len = cfg.washout + cfg.horizon + cfg.train;
    const double mean =
        std::accumulate(series.begin(), series.begin() + fit_len, 0.0) / static_cast<double>(fit_len);
    double var = 0.0;
    for (int i = 0; i < fit_len; ++i) var += (series[static_cast<std::size_t>(i)] - mean) * (series[static_cast<std::size_t>(i)] - mean);
    const double sd = std::sqrt(var / static_cast<double>(fit_len));
    if (!(sd > 0.0) || is_constant(series.first(static_cast<std::size_t>(steps))))
        throw std::invalid_argument("series is constant; logNRMSE undefined");
    std::vector<double> z(static_cast<std::size_t>(steps));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (series[i] - mean) / sd;

    const Network net = make_network(cfg);
    const FeatureTag tag = cfg.resolved_feature_def();
    if (tag == FeatureTag::a_prime) throw std::invalid_argument("feature definition a_prime needs the agents model");

    return run_trials(cfg, [&](int k) {
        const auto seed = trial_seed(cfg.seed, k);
        auto sim = make_density_sim(cfg, net, seed, true);
        auto mask_rng = stream(seed, kMask);
        FeatureDef def{tag, select_reservoir_fraction(cfg.p, net, std::nullopt, mask_rng), {}, cfg.horizon};

        std::vector<ReservoirSnapshot> snaps;
        snaps.reserve(static_cast<std::size_t>(steps));
        for (int t = 0; t < steps; ++t) {
            std::optional<double> u;
            if (t >= cfg.horizon) u = z[static_cast<std::size_t>(t - cfg.horizon)];
            snaps.push_back(sim.advance(u));
        }
        auto result = fit_and_score(
            cfg, def, 1,
            [&](int t) {
                std::optional<double> u;
                if (tag == FeatureTag::a) u = z[static_cast<std::size_t>(t - cfg.horizon)];
                return assemble_features(def, snaps[static_cast<std::size_t>(t)], u);
            },
            [&](int t) { return Eigen::VectorXd::Constant(1, z[static_cast<std::size_t>(t)]); });
        for (auto* v : {&result.teacher, &result.predicted})
            for (auto& x : v->front()) x = x * sd + mean;
        result.trial = k;
        result.seed = seed;
        return result;
    });
}

TrialResult average_predictions(std::span<const TrialResult> trials, int count, double log_base, int max_lag) {
    if (count < 1 || static_cast<std::size_t>(count) > trials.size())
        throw std::invalid_argument("cannot average " + std::to_string(count) + " of " +
                                    std::to_string(trials.size()) + " trials");
    TrialResult avg;
    avg.trial = -1;
    avg.seed = trials.front().seed;
    avg.teacher = trials.front().teacher;
    avg.targets = trials.front().targets;
    avg.predicted = trials.front().predicted;
    for (auto& row : avg.predicted) std::fill(row.begin(), row.end(), 0.0);
    for (int k = 0; k < count; ++k) {
        const auto& tr = trials[static_cast<std::size_t>(k)];
        if (tr.skipped || tr.predicted.size() != avg.predicted.size())
            throw std::invalid_argument("trials do not share a prediction layout");
        for (std::size_t m = 0; m < avg.predicted.size(); ++m) {
            if (tr.predicted[m].size() != avg.predicted[m].size() || tr.teacher[m] != avg.teacher[m])
                throw std::invalid_argument("trials do not share a teacher");
            for (std::size_t s = 0; s < avg.predicted[m].size(); ++s) avg.predicted[m][s] += tr.predicted[m][s];
        }
    }
    for (auto& row : avg.predicted)
        for (auto& x : row) x /= count;
    for (std::size_t m = 0; m < avg.predicted.size(); ++m)
        avg.target_scores.push_back(log_nrmse(avg.teacher[m], avg.predicted[m], log_base));
    avg.score = std::accumulate(avg.target_scores.begin(), avg.target_scores.end(), 0.0) /
                static_cast<double>(avg.target_scores.size());
    avg.lag = lag_diagnostic(avg.teacher.front(), avg.predicted.front(), max_lag);
    avg.note = "mean of " + std::to_string(count) + " trials";
    return avg;
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg, std::span<const double> series) {
    if (cfg.task == TaskKind::external_series) return run_task2_external(cfg, series);
    return cfg.model == Model::agents ? run_task1_agents(cfg) : run_task1_density(cfg);
}

void set_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
    auto as_int = [&](const char* what) {
        if (value != std::floor(value)) throw std::invalid_argument(std::string(what) + " must be an integer");
        return static_cast<int>(value);
    };
    if (name == "p")
        cfg.p = value;
    else if (name == "M")
        cfg.roads = as_int("M");
    else if (name == "T")
        cfg.horizon = as_int("T");
    else if (name == "beta")
        cfg.beta = value;
    else if (name == "tau")
        cfg.tau = {value};
    else
        throw std::invalid_argument("unknown sweep parameter '" + name + "' (expected p, M, T, beta, tau)");
}

double mean_score(std::span<const TrialResult> trials) {
    double sum = 0.0;
    int n = 0;
    for (const auto& t : trials) {
        if (t.skipped) continue;
        sum += t.score;
        ++n;
    }
    return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

SweepTable sweep(const ExperimentConfig& cfg, const std::string& parameter, std::span<const double> values,
                 std::span<const double> series) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    SweepTable table;
    table.parameter = parameter;
    for (double v : values) {
        ExperimentConfig c = cfg;
        set_parameter(c, parameter, v);
        SweepRow row;
        row.value = v;
        row.trials = run_experiment(c, series);
        row.mean = mean_score(row.trials);
        double ss = 0.0;
        int n = 0;
        for (const auto& t : row.trials) {
            if (t.skipped) continue;
            ss += (t.score - row.mean) * (t.score - row.mean);
            ++n;
        }
        row.std_error = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace rtrc
