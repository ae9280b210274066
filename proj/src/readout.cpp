#include "rtrc/readout.hpp"

#include <algorithm>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rtrc/csv.hpp"

namespace rtrc {

std::string to_string(FeatureTag tag) {
    switch (tag) {
    case FeatureTag::a: return "a";
    case FeatureTag::b: return "b";
    case FeatureTag::a_prime: return "a_prime";
    }
    return "?";
}

FeatureTag feature_tag_from_string(const std::string& s) {
    if (s == "a") return FeatureTag::a;
    if (s == "b") return FeatureTag::b;
    if (s == "a_prime") return FeatureTag::a_prime;
    throw std::invalid_argument("unknown feature definition '" + s + "'");
}

std::size_t FeatureDef::dimension() const {
    std::size_t d = 1 + 2 * mask.size();
    if (tag != FeatureTag::b) d += 1;
    if (tag == FeatureTag::a_prime) d += roads.size();
    return d;
}

std::vector<std::string> FeatureDef::column_names() const {
    std::vector<std::string> names{"bias"};
    if (tag != FeatureTag::b) names.emplace_back("U");
    for (auto j : mask) names.push_back("x1_" + std::to_string(j + 1));
    for (auto j : mask) names.push_back("x2_" + std::to_string(j + 1));
    if (tag == FeatureTag::a_prime)
        for (auto l : roads) names.push_back("k_" + std::to_string(l));
    return names;
}

Eigen::VectorXd assemble_features(const FeatureDef& def, const ReservoirSnapshot& snap, std::optional<double> u,
                                  std::optional<std::span<const double>> k_delayed) {
    const bool wants_u = def.tag != FeatureTag::b;
    const bool wants_k = def.tag == FeatureTag::a_prime;
    if (wants_u != u.has_value())
        throw std::invalid_argument(wants_u ? "feature definition needs the delayed teacher U"
                                            : "feature definition b takes no U");
    if (wants_k != k_delayed.has_value())
        throw std::invalid_argument(wants_k ? "feature definition a_prime needs delayed road densities"
                                            : "delayed road densities only apply to a_prime");

    Eigen::VectorXd f(static_cast<Eigen::Index>(def.dimension()));
    Eigen::Index i = 0;
    f[i++] = 1.0;
    if (wants_u) f[i++] = *u;
    for (auto j : def.mask) f[i++] = snap.x1.at(static_cast<std::size_t>(j));
    for (auto j : def.mask) f[i++] = snap.x2.at(static_cast<std::size_t>(j));
    if (wants_k) {
        for (auto l : def.roads) {
            if (l < 0 || static_cast<std::size_t>(l) >= k_delayed->size())
                throw std::invalid_argument("road " + std::to_string(l) + " outside the density vector");
            f[i++] = (*k_delayed)[static_cast<std::size_t>(l)];
        }
    }
    return f;
}

ReadoutModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double beta, FeatureDef def) {
    if (x.cols() < 1) throw std::invalid_argument("ridge fit needs at least one sample");
    if (x.cols() != y.cols()) throw std::invalid_argument("feature and target sample counts differ");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("ridge parameter must be >= 0");
    if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("ridge fit inputs must be finite");

    const Eigen::Index d = x.rows();
    Eigen::MatrixXd gram = x * x.transpose();
    gram.diagonal().array() += beta;
    const Eigen::MatrixXd rhs = x * y.transpose();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("ridge system factorisation failed");
    const auto diag = ldlt.vectorD().cwiseAbs();
    const double scale = diag.size() > 0 ? diag.maxCoeff() : 0.0;
    if (beta == 0.0 && d > 0 && diag.minCoeff() <= scale * static_cast<double>(d) * std::numeric_limits<double>::epsilon())
        throw std::runtime_error("ridge system is singular; use beta > 0");

    ReadoutModel model;
    model.w_out = ldlt.solve(rhs).transpose();
    if (!model.w_out.allFinite()) throw std::runtime_error("ridge solution is not finite");
    model.beta = beta;
    model.def = std::move(def);
    return model;
}

Eigen::VectorXd predict(const ReadoutModel& model, const Eigen::VectorXd& features) {
    if (features.size() != model.w_out.cols())
        throw std::invalid_argument("feature vector has dimension " + std::to_string(features.size()) +
                                    ", readout expects " + std::to_string(model.w_out.cols()));
    return model.w_out * features;
}

Eigen::MatrixXd predict(const ReadoutModel& model, const Eigen::MatrixXd& features) {
    if (features.rows() != model.w_out.cols())
        throw std::invalid_argument("feature matrix has " + std::to_string(features.rows()) +
                                    " rows, readout expects " + std::to_string(model.w_out.cols()));
    return model.w_out * features;
}

double log_nrmse(std::span<const double> y, std::span<const double> y_hat, double base) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("series lengths differ");
    if (y.size() < 2) throw std::invalid_argument("logNRMSE needs at least two samples");
    if (!(base > 0.0) || base == 1.0) throw std::invalid_argument("invalid logarithm base");

    const auto n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double err = 0.0;
    double var = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double e = y[t] - y_hat[t];
        const double c = y[t] - mean;
        err += e * e;
        var += c * c;
    }
    if (!(var > 0.0) || std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); }))
        throw std::invalid_argument("teacher series is constant; logNRMSE undefined");
    if (!std::isfinite(err)) throw std::invalid_argument("prediction is not finite");
    if (err == 0.0) return kLogNrmseFloor;
    const double score = 0.5 * std::log(err / var) / std::log(base);
    return std::max(score, kLogNrmseFloor);
}

void write_weights_csv(std::ostream& os, const ReadoutModel& model) {
    const auto names = model.def.column_names();
    const bool named = static_cast<Eigen::Index>(names.size()) == model.w_out.cols();
    for (Eigen::Index c = 0; c < model.w_out.cols(); ++c) {
        if (c) os << ',';
        os << (named ? names[static_cast<std::size_t>(c)] : "f" + std::to_string(c));
    }
    os << '\n';
    for (Eigen::Index r = 0; r < model.w_out.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.w_out.cols(); ++c) {
            if (c) os << ',';
            os << format_double(model.w_out(r, c));
        }
        os << '\n';
    }
}

Eigen::MatrixXd read_weights_csv(std::istream& is, std::vector<std::string>* header) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("weights file is empty");
    const auto names = split_csv_line(line);
    if (header) *header = names;
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != names.size())
            throw std::runtime_error("weights row " + std::to_string(lineno) + " has wrong column count");
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            if (!parse_double(fields[c], row[c]) || !std::isfinite(row[c]))
                throw std::runtime_error("weights row " + std::to_string(lineno) + " has a bad value");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < names.size(); ++c)
            w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return w;
}

}  // namespace rtrc
