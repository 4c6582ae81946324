#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mixtau/errors.hpp"

namespace mixtau {

/// One outcome column plus the covariate matrix. Ordinal outcomes are stored as
/// contiguous category codes 1..J; continuous outcomes as raw values.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;  // n x d, d may be 0 (intercept-only models)

    int n() const { return static_cast<int>(y.size()); }
    int d() const { return static_cast<int>(X.cols()); }

    void validate() const {
        if (X.rows() != y.size())
            throw ShapeMismatch("Dataset: X has " + std::to_string(X.rows()) + " rows, y has " +
                                std::to_string(y.size()));
        if (!y.allFinite() || !X.allFinite()) throw NonNumericCell("Dataset contains non-finite values");
    }
};

/// Category counts for an ordinal column coded 1..J; throws if codes are not
/// contiguous integers in 1..J or a category is unobserved.
inline std::vector<int> ordinal_counts(const Eigen::VectorXd& y, int J) {
    std::vector<int> counts(static_cast<std::size_t>(J), 0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        const int code = static_cast<int>(v);
        if (v != code || code < 1 || code > J)
            throw OutOfSupport("ordinal code " + std::to_string(v) + " outside 1.." + std::to_string(J) +
                               " at row " + std::to_string(i));
        ++counts[static_cast<std::size_t>(code - 1)];
    }
    for (int j = 0; j < J; ++j)
        if (counts[static_cast<std::size_t>(j)] == 0)
            throw EmptyCategory("category " + std::to_string(j + 1) + " unobserved");
    return counts;
}

/// Two outcome columns sharing one covariate matrix, the unit of the pairwise
/// association pipeline.
struct PairData {
    Eigen::VectorXd y1;
    Eigen::VectorXd y2;
    Eigen::MatrixXd X;

    int n() const { return static_cast<int>(y1.size()); }

    void validate() const {
        if (y1.size() != y2.size() || X.rows() != y1.size())
            throw ShapeMismatch("PairData: inconsistent row counts");
    }

    PairData rows(const std::vector<int>& idx) const {
        PairData out;
        const auto k = static_cast<Eigen::Index>(idx.size());
        out.y1.resize(k);
        out.y2.resize(k);
        out.X.resize(k, X.cols());
        for (Eigen::Index i = 0; i < k; ++i) {
            const int r = idx[static_cast<std::size_t>(i)];
            out.y1[i] = y1[r];
            out.y2[i] = y2[r];
            out.X.row(i) = X.row(r);
        }
        return out;
    }
};

/// Map raw values to codes 1..J by sort order of the distinct values observed.
struct OrdinalEncoding {
    std::vector<double> levels;  // levels[j-1] is the raw value for code j
    Eigen::VectorXd codes;
};

inline OrdinalEncoding encode_ordinal(const Eigen::VectorXd& raw) {
    std::vector<double> levels(raw.data(), raw.data() + raw.size());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::map<double, int> code;
    for (std::size_t j = 0; j < levels.size(); ++j) code[levels[j]] = static_cast<int>(j) + 1;
    OrdinalEncoding enc;
    enc.levels = std::move(levels);
    enc.codes.resize(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) enc.codes[i] = code.at(raw[i]);
    return enc;
}

}  // namespace mixtau
