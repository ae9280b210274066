#include "rtrc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace rtrc {

namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

/// Reads the entries of one JSON object and remembers which keys were used.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() || it->is_null() ? nullptr : &*it;
    }

    template <typename T>
    bool read(const std::string& key, T& out) {
        const json* v = find(key);
        if (!v) return false;
        try {
            out = v->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(join(path_, key), "has the wrong type");
        }
        return true;
    }

    bool read(const std::string& key, int& out) {
        const json* v = find(key);
        if (!v) return false;
        if (!v->is_number_integer() && !(v->is_number_float() && v->get<double>() == std::floor(v->get<double>())))
            throw ConfigError(join(path_, key), "must be an integer");
        out = static_cast<int>(v->get<double>());
        return true;
    }

    bool read(const std::string& key, double& out) {
        const json* v = find(key);
        if (!v) return false;
        if (!v->is_number()) throw ConfigError(join(path_, key), "must be a number");
        out = v->get<double>();
        if (!std::isfinite(out)) throw ConfigError(join(path_, key), "must be finite");
        return true;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }

    std::string path(const std::string& key) const { return join(path_, key); }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename E>
E parse_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<const char*, E>> options) {
    std::string allowed;
    for (const auto& [name, e] : options) {
        if (value == name) return e;
        allowed += allowed.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(key, "'" + value + "' is not one of " + allowed);
}

void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError(key, message);
}

const char* name_of(TaskKind t) { return t == TaskKind::density_link ? "density_link" : "external_series"; }
const char* name_of(Model m) { return m == Model::density ? "density" : "agents"; }
const char* name_of(PhaseMode m) { return m == PhaseMode::constant_rate ? "constant-rate" : "literal"; }
const char* name_of(PhaseInput m) { return m == PhaseInput::offset ? "offset" : "integrate"; }
const char* name_of(TurnAssignment m) { return m == TurnAssignment::shuffled ? "shuffled" : "labelled"; }
const char* name_of(DensityInit m) { return m == DensityInit::uniform ? "uniform" : "random"; }

void read_agents(const json& j, ExperimentConfig& cfg) {
    ObjectReader r(j, "agents");
    r.read("per_link", cfg.agents_per_link);
    r.read("a", cfg.ov.sensitivity);
    r.read("v_scale", cfg.ov.v_scale);
    r.read("c", cfg.ov.offset);
    r.read("w", cfg.ov.width);
    r.read("dt", cfg.ov.dt);
    r.read("d_min", cfg.ov.d_min);
    r.read("horizon", cfg.ov.horizon);
    r.read("substeps", cfg.ov.substeps);
    r.finish();
    require(cfg.agents_per_link >= 0, "agents.per_link", "must be >= 0");
    require(cfg.ov.sensitivity > 0.0, "agents.a", "must be > 0");
    require(cfg.ov.v_scale >= 0.0, "agents.v_scale", "must be >= 0");
    require(cfg.ov.width > 0.0, "agents.w", "must be > 0");
    require(cfg.ov.dt > 0.0, "agents.dt", "must be > 0");
    require(cfg.ov.d_min >= 0.0, "agents.d_min", "must be >= 0");
    require(cfg.ov.horizon > 0.0, "agents.horizon", "must be > 0");
    require(cfg.ov.substeps >= 1, "agents.substeps", "must be >= 1");
}

void read_series(const json& j, ExperimentConfig& cfg) {
    ObjectReader r(j, "series");
    r.read("path", cfg.series_path);
    r.read("kind", cfg.synth.kind);
    r.read("period", cfg.synth.period);
    r.read("amplitude", cfg.synth.amplitude);
    r.read("offset", cfg.synth.offset);
    r.read("ar_rho", cfg.synth.ar_rho);
    r.read("ar_sigma", cfg.synth.ar_sigma);
    r.finish();
    require(cfg.synth.kind == "sinusoid" || cfg.synth.kind == "sinusoid+ar1", "series.kind",
            "must be sinusoid or sinusoid+ar1");
    require(cfg.synth.period > 0.0, "series.period", "must be > 0");
    require(cfg.synth.ar_sigma >= 0.0, "series.ar_sigma", "must be >= 0");
    require(std::abs(cfg.synth.ar_rho) < 1.0, "series.ar_rho", "must lie in (-1, 1)");
}

}  // namespace

ExperimentConfig config_from_json(const json& input) {
    if (input.is_object() && input.contains("config") && input.contains("tool"))
        return config_from_json(input.at("config"));

    ExperimentConfig cfg;
    ObjectReader r(input, "");

    std::string s;
    if (r.read("task", s))
        cfg.task = parse_enum<TaskKind>("task", s,
                                        {{"density_link", TaskKind::density_link},
                                         {"external_series", TaskKind::external_series}});
    if (r.read("model", s))
        cfg.model = parse_enum<Model>("model", s, {{"density", Model::density}, {"agents", Model::agents}});
    r.read("n", cfg.n);
    r.read("T", cfg.horizon);
    if (const json* tau = r.find("tau")) {
        if (tau->is_number()) {
            cfg.tau = {tau->get<double>()};
        } else if (tau->is_array() && !tau->empty()) {
            cfg.tau.clear();
            for (const auto& v : *tau) {
                require(v.is_number(), "tau", "entries must be numbers");
                cfg.tau.push_back(v.get<double>());
            }
        } else {
            throw ConfigError("tau", "must be a number or a nonempty array");
        }
    }
    if (r.read("phase_mode", s))
        cfg.phase_mode = parse_enum<PhaseMode>(
            "phase_mode", s, {{"constant-rate", PhaseMode::constant_rate}, {"literal", PhaseMode::literal}});
    if (r.read("phase_input", s))
        cfg.phase_input =
            parse_enum<PhaseInput>("phase_input", s, {{"offset", PhaseInput::offset}, {"integrate", PhaseInput::integrate}});
    r.read("ns_stop_first", cfg.ns_stop_first);
    r.read("beta", cfg.beta);
    r.read("p", cfg.p);
    r.read("M", cfg.roads);
    r.read("washout", cfg.washout);
    r.read("train", cfg.train);
    r.read("test", cfg.test);
    r.read("trials", cfg.trials);
    if (const json* seed = r.find("seed")) {
        require(seed->is_number_unsigned() || (seed->is_number_integer() && seed->get<long long>() >= 0), "seed",
                "must be a nonnegative integer");
        cfg.seed = seed->get<std::uint64_t>();
    }
    if (const json* tl = r.find("target_link")) {
        require(tl->is_array() && tl->size() == 2 && (*tl)[0].is_number_integer() && (*tl)[1].is_number_integer(),
                "target_link", "must be [from, to] junction ids");
        cfg.target_link = std::make_pair((*tl)[0].get<int>(), (*tl)[1].get<int>());
    }
    if (const json* w = r.find("turn_weights")) {
        require(w->is_array() && w->size() == 3, "turn_weights", "must be [w_r, w_l, w_s]");
        for (const auto& v : *w) require(v.is_number(), "turn_weights", "entries must be numbers");
        cfg.turn_weights = {(*w)[0].get<double>(), (*w)[1].get<double>(), (*w)[2].get<double>()};
    }
    if (r.read("turn_assignment", s))
        cfg.turn_assignment = parse_enum<TurnAssignment>(
            "turn_assignment", s, {{"shuffled", TurnAssignment::shuffled}, {"labelled", TurnAssignment::labelled}});
    double len = 0.0;
    if (r.read("link_length", len)) cfg.link_length = len;
    if (const json* ll = r.find("link_lengths")) {
        require(ll->is_array(), "link_lengths", "must be an array of {from, to, length}");
        for (std::size_t i = 0; i < ll->size(); ++i) {
            ObjectReader e((*ll)[i], "link_lengths[" + std::to_string(i) + "]");
            int from = 0, to = 0;
            double length = 0.0;
            require(e.read("from", from) && e.read("to", to) && e.read("length", length),
                    e.path("from"), "needs from, to and length");
            e.finish();
            require(length > 0.0, e.path("length"), "must be > 0");
            cfg.link_lengths[{from - 1, to - 1}] = length;
        }
    }
    double total = 0.0;
    if (r.read("total_vehicles", total)) cfg.total_vehicles = total;
    if (r.read("init", s))
        cfg.init = parse_enum<DensityInit>("init", s, {{"uniform", DensityInit::uniform}, {"random", DensityInit::random}});
    if (const json* a = r.find("agents")) read_agents(*a, cfg);
    r.read("input_sigma", cfg.input_sigma);
    r.read("trial_average", cfg.trial_average);
    if (r.read("feature_def", s)) {
        try {
            cfg.feature_def = feature_tag_from_string(s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("feature_def", e.what());
        }
    }
    r.read("max_lag", cfg.max_lag);
    r.read("log_base", cfg.log_base);
    if (const json* se = r.find("series")) read_series(*se, cfg);
    r.read("threads", cfg.threads);
    r.finish();

    require(cfg.n >= 1, "n", "must be >= 1");
    require(cfg.horizon >= 0, "T", "must be >= 0");
    for (double t : cfg.tau) require(t > 0.0 && std::isfinite(t), "tau", "entries must be > 0");
    require(cfg.tau.size() == 1 || cfg.tau.size() == static_cast<std::size_t>(cfg.n * cfg.n), "tau",
            "needs 1 or n^2 entries");
    require(cfg.beta >= 0.0, "beta", "must be >= 0");
    require(cfg.p >= 0.0 && cfg.p <= 1.0, "p", "must lie in [0, 1]");
    require(cfg.roads >= 0, "M", "must be >= 0");
    require(cfg.roads <= 4 * cfg.n * (cfg.n - 1), "M", "exceeds the number of roads 4n(n-1)");
    require(cfg.washout >= 0, "washout", "must be >= 0");
    require(cfg.train >= 1, "train", "must be >= 1");
    require(cfg.test >= 2, "test", "must be >= 2");
    require(cfg.trials >= 1, "trials", "must be >= 1");
    require(cfg.test > 2 * cfg.max_lag, "max_lag", "test window must exceed 2 * max_lag");
    require(cfg.max_lag >= 0, "max_lag", "must be >= 0");
    const double sum = cfg.turn_weights.right + cfg.turn_weights.left + cfg.turn_weights.straight;
    require(cfg.turn_weights.right >= 0.0 && cfg.turn_weights.left >= 0.0 && cfg.turn_weights.straight >= 0.0,
            "turn_weights", "must be nonnegative");
    require(std::abs(sum - 1.0) <= 1e-12, "turn_weights", "must sum to 1");
    if (cfg.link_length) require(*cfg.link_length > 0.0, "link_length", "must be > 0");
    if (cfg.total_vehicles) require(*cfg.total_vehicles > 0.0, "total_vehicles", "must be > 0");
    require(cfg.input_sigma >= 0.0, "input_sigma", "must be >= 0");
    require(cfg.trial_average >= 1, "trial_average", "must be >= 1");
    require(cfg.log_base > 0.0 && cfg.log_base != 1.0, "log_base", "must be positive and not 1");
    require(cfg.threads >= 1, "threads", "must be >= 1");
    if (cfg.task == TaskKind::external_series)
        require(cfg.model == Model::density, "model", "external_series runs on the density model");
    if (cfg.feature_def == FeatureTag::a_prime)
        require(cfg.model == Model::agents, "feature_def", "a_prime needs the agents model");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("parse error: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["task"] = name_of(cfg.task);
    j["model"] = name_of(cfg.model);
    j["n"] = cfg.n;
    j["T"] = cfg.horizon;
    if (cfg.tau.size() == 1)
        j["tau"] = cfg.tau.front();
    else
        j["tau"] = cfg.tau;
    j["phase_mode"] = name_of(cfg.phase_mode);
    j["phase_input"] = name_of(cfg.phase_input);
    j["ns_stop_first"] = cfg.ns_stop_first;
    j["beta"] = cfg.beta;
    j["p"] = cfg.p;
    j["M"] = cfg.roads;
    j["washout"] = cfg.washout;
    j["train"] = cfg.train;
    j["test"] = cfg.test;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    if (cfg.target_link)
        j["target_link"] = {cfg.target_link->first, cfg.target_link->second};
    else
        j["target_link"] = nullptr;
    j["turn_weights"] = {cfg.turn_weights.right, cfg.turn_weights.left, cfg.turn_weights.straight};
    j["turn_assignment"] = name_of(cfg.turn_assignment);
    j["link_length"] = cfg.resolved_link_length();
    auto lengths = json::array();
    for (const auto& [key, len] : cfg.link_lengths)
        lengths.push_back({{"from", key.first + 1}, {"to", key.second + 1}, {"length", len}});
    j["link_lengths"] = lengths;
    if (cfg.total_vehicles)
        j["total_vehicles"] = *cfg.total_vehicles;
    else
        j["total_vehicles"] = nullptr;
    j["init"] = name_of(cfg.init);
    j["agents"] = {{"per_link", cfg.agents_per_link}, {"a", cfg.ov.sensitivity}, {"v_scale", cfg.ov.v_scale},
                   {"c", cfg.ov.offset},          {"w", cfg.ov.width},       {"dt", cfg.ov.dt},
                   {"d_min", cfg.ov.d_min},       {"horizon", cfg.ov.horizon}, {"substeps", cfg.ov.substeps}};
    j["input_sigma"] = cfg.input_sigma;
    j["trial_average"] = cfg.trial_average;
    j["feature_def"] = to_string(cfg.resolved_feature_def());
    j["max_lag"] = cfg.max_lag;
    j["log_base"] = cfg.log_base;
    j["series"] = {{"path", cfg.series_path},       {"kind", cfg.synth.kind},         {"period", cfg.synth.period},
                   {"amplitude", cfg.synth.amplitude}, {"offset", cfg.synth.offset}, {"ar_rho", cfg.synth.ar_rho},
                   {"ar_sigma", cfg.synth.ar_sigma}};
    j["threads"] = cfg.threads;
    return j;
}

}  // namespace rtrc
