#include "rtrc/signal_phase.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rtrc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double wrap_phase(double theta) {
    double r = std::fmod(theta, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod of a negative multiple can round up to exactly 2*pi
    if (r >= kTwoPi) r = 0.0;
    return r;
}

SignalState signal_state(double theta, bool ns_stop_first) {
    const bool first_half = wrap_phase(theta) < std::numbers::pi;
    const bool ns_stopped = first_half == ns_stop_first;
    return ns_stopped ? SignalState{Light::stop, Light::go} : SignalState{Light::go, Light::stop};
}

Observables reservoir_observables(double inflow, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {inflow * (c * c), inflow * (s * s)};
}

PhaseBank::PhaseBank(std::vector<double> tau, std::vector<double> xi, PhaseMode mode)
    : tau_(std::move(tau)), xi_(std::move(xi)), mode_(mode) {
    if (tau_.size() != xi_.size()) throw std::invalid_argument("tau and xi sizes differ");
    for (double t : tau_)
        if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("signal period tau must be positive");
    ns_stop_first_.assign(tau_.size(), 1);
    acc_.assign(tau_.size(), 0.0);
}

PhaseBank PhaseBank::random(std::vector<double> tau, PhaseMode mode, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> offset(0.0, kTwoPi);
    std::vector<double> xi(tau.size());
    for (auto& x : xi) x = offset(rng);
    return PhaseBank(std::move(tau), std::move(xi), mode);
}

void PhaseBank::draw_input_weights(double sigma, std::mt19937_64& rng) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("input weight scale must be nonnegative");
    std::uniform_real_distribution<double> dist(-sigma, sigma);
    std::vector<double> w(tau_.size());
    for (auto& x : w) x = sigma == 0.0 ? 0.0 : dist(rng);
    w_in_ = std::move(w);
}

void PhaseBank::set_input_weights(std::vector<double> w) {
    if (w.size() != tau_.size()) throw std::invalid_argument("input weight count must match signal count");
    w_in_ = std::move(w);
}

void PhaseBank::set_ns_stop_first(std::vector<std::uint8_t> flags) {
    if (flags.size() != tau_.size()) throw std::invalid_argument("stop-order flag count must match signal count");
    ns_stop_first_ = std::move(flags);
}

void PhaseBank::step(std::int64_t t, std::optional<double> u_ext) {
    if (t < 0) throw std::invalid_argument("time step must be nonnegative");
    if (u_ext) {
        if (w_in_.empty()) throw std::invalid_argument("external input given but no input weights configured");
        if (!std::isfinite(*u_ext)) throw std::invalid_argument("external input must be finite");
    }
    const auto td = static_cast<double>(t);
    for (std::size_t i = 0; i < tau_.size(); ++i) {
        if (mode_ == PhaseMode::constant_rate) {
            if (input_mode_ == PhaseInput::integrate) {
                if (u_ext) acc_[i] += w_in_[i] * *u_ext;
            } else {
                acc_[i] = u_ext ? w_in_[i] * *u_ext : 0.0;
            }
        } else {
            double inc = kTwoPi * td / tau_[i] + xi_[i];
            if (u_ext) inc += w_in_[i] * *u_ext;
            acc_[i] += inc;
        }
    }
    t_ = t + 1;
}

double PhaseBank::theta(std::size_t i) const {
    if (mode_ == PhaseMode::constant_rate)
        return xi_[i] + kTwoPi * static_cast<double>(t_) / tau_[i] + acc_[i];
    return acc_[i];
}

SignalState PhaseBank::state(std::size_t i) const { return signal_state(theta(i), ns_stop_first_[i] != 0); }

}  // namespace rtrc
