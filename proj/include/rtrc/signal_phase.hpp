#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rtrc/lattice.hpp"

namespace rtrc {

/// How the per-step phase increment is interpreted.
///
/// `constant_rate` rotates each signal at a fixed angular speed, so without
/// input theta(t) = xi + 2*pi*t/tau. `literal` applies
/// theta(t+1) = theta(t) + 2*pi*t/tau + xi verbatim, which is a chirp.
enum class PhaseMode : std::uint8_t { constant_rate, literal };

/// How external input enters the phase in constant-rate mode.
///
/// `offset`: theta(t+1) = xi + 2*pi*(t+1)/tau + W*u(t), a transient shift
/// like the offset xi itself. `integrate`: theta accumulates W*u every step.
/// Literal mode always accumulates.
enum class PhaseInput : std::uint8_t { offset, integrate };

enum class Light : std::uint8_t { stop, go };

struct SignalState {
    Light north_south = Light::stop;
    Light east_west = Light::go;

    Light for_axis(Axis a) const { return a == Axis::north_south ? north_south : east_west; }
    bool operator==(const SignalState&) const = default;
};

/// Theta reduced into [0, 2*pi).
double wrap_phase(double theta);

/// Stop/go lights for a phase. In the first half turn the north-south axis
/// stops (or the east-west axis, when `ns_stop_first` is false).
SignalState signal_state(double theta, bool ns_stop_first = true);

struct Observables {
    double x1 = 0.0;
    double x2 = 0.0;
};

/// u*cos^2(theta), u*sin^2(theta).
Observables reservoir_observables(double inflow, double theta);

/// Phases of all signals in the lattice.
class PhaseBank {
public:
    PhaseBank() = default;

    /// Builds a bank with explicit periods and offsets. In literal mode theta
    /// starts at zero; in constant-rate mode it starts at the offset.
    PhaseBank(std::vector<double> tau, std::vector<double> xi, PhaseMode mode);

    /// Periods from `tau` and offsets drawn uniformly from [0, 2*pi).
    static PhaseBank random(std::vector<double> tau, PhaseMode mode, std::mt19937_64& rng);

    /// Input weights drawn uniformly from [-sigma, sigma].
    void draw_input_weights(double sigma, std::mt19937_64& rng);
    void set_input_weights(std::vector<double> w);
    bool has_input() const { return !w_in_.empty(); }

    void set_ns_stop_first(std::vector<std::uint8_t> flags);
    void set_input_mode(PhaseInput mode) { input_mode_ = mode; }
    PhaseInput input_mode() const { return input_mode_; }

    /// Advances every phase from step t to t+1. `u_ext` perturbs the phases
    /// through the input weights and is only allowed once they are set.
    void step(std::int64_t t, std::optional<double> u_ext = std::nullopt);

    std::size_t size() const { return tau_.size(); }
    double theta(std::size_t i) const;
    const std::vector<double>& tau() const { return tau_; }
    const std::vector<double>& xi() const { return xi_; }
    const std::vector<double>& input_weights() const { return w_in_; }
    PhaseMode mode() const { return mode_; }
    std::int64_t time() const { return t_; }

    SignalState state(std::size_t i) const;

private:
    std::vector<double> tau_;
    std::vector<double> xi_;
    std::vector<double> w_in_;
    std::vector<std::uint8_t> ns_stop_first_;
    // constant-rate: input drive; literal: the phase itself
    std::vector<double> acc_;
    PhaseMode mode_ = PhaseMode::constant_rate;
    PhaseInput input_mode_ = PhaseInput::offset;
    std::int64_t t_ = 0;
};

}  // namespace rtrc
