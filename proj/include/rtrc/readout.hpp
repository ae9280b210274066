#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtrc/snapshot.hpp"

namespace rtrc {

/// Readout input layouts.
///
///  a       [1; U; X1(mask); X2(mask)]
///  b       [1; X1(mask); X2(mask)]
///  a_prime [1; U; X1(mask); X2(mask); K(t-T) over the chosen roads]
enum class FeatureTag : std::uint8_t { a, b, a_prime };

std::string to_string(FeatureTag tag);
FeatureTag feature_tag_from_string(const std::string& s);

struct FeatureDef {
    FeatureTag tag = FeatureTag::a;
    std::vector<JunctionId> mask;  // reservoir units read by the readout
    std::vector<LinkId> roads;     // a_prime only
    int horizon = 1;

    std::size_t dimension() const;
    /// Column names matching the layout of assemble_features.
    std::vector<std::string> column_names() const;
};

/// Concatenates the feature vector for one step. `u` must be given exactly
/// for tags a and a_prime, `k_delayed` (all link densities at t - T) exactly
/// for a_prime.
Eigen::VectorXd assemble_features(const FeatureDef& def, const ReservoirSnapshot& snap,
                                  std::optional<double> u = std::nullopt,
                                  std::optional<std::span<const double>> k_delayed = std::nullopt);

struct ReadoutModel {
    Eigen::MatrixXd w_out;  // targets x features
    double beta = 0.0;
    FeatureDef def;
};

/// W = Y X^T (X X^T + beta I)^{-1} with X features x samples and Y targets x
/// samples, solved through a symmetric factorisation.
ReadoutModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double beta, FeatureDef def = {});

Eigen::VectorXd predict(const ReadoutModel& model, const Eigen::VectorXd& features);
/// Predicts every column of a features x samples matrix.
Eigen::MatrixXd predict(const ReadoutModel& model, const Eigen::MatrixXd& features);

inline constexpr double kLogNrmseFloor = -12.0;

/// log_base(sqrt(<(y - yhat)^2> / <(y - <y>)^2>)), floored at -12.
double log_nrmse(std::span<const double> y, std::span<const double> y_hat, double base = 10.0);

/// W^out as CSV: header of feature names, one row per target.
void write_weights_csv(std::ostream& os, const ReadoutModel& model);
Eigen::MatrixXd read_weights_csv(std::istream& is, std::vector<std::string>* header = nullptr);

}  // namespace rtrc
