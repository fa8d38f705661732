#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "netsurv/error.hpp"

namespace netsurv {

/// Length of one year in days. Every conversion between ages/dates in days
/// and rate-table year indices goes through this constant.
inline constexpr double kDaysPerYear = 365.241;

/// Clamp a number of days `x` between the years `lo` and `hi` and return the
/// integral number of years before the clamped value.
template <typename Scalar>
inline int clf(Scalar x, int lo, int hi) {
    const Scalar years = x / Scalar(kDaysPerYear);
    return static_cast<int>(std::floor(std::min(std::max(years, Scalar(lo)), Scalar(hi))));
}

/// Daily hazard rates on a yearly (age, calendar date) lattice. Rows are ages
/// `min_age..max_age`, columns are calendar years `min_date..max_date`, both
/// inclusive. Out-of-range queries saturate onto the border rows/columns.
template <typename Scalar>
class BasicRateTableT {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    BasicRateTableT(Matrix rates, int min_age, int max_age, int min_date, int max_date)
        : rates_(std::move(rates)),
          min_age_(min_age),
          max_age_(max_age),
          min_date_(min_date),
          max_date_(max_date) {
        if (min_age >= max_age || min_date >= max_date) {
            throw Error(ErrorCode::Domain, "rate table bounds must satisfy min < max on both axes");
        }
        if (rates_.rows() != max_age - min_age + 1 || rates_.cols() != max_date - min_date + 1) {
            throw Error(ErrorCode::Domain,
                        "rate matrix is " + std::to_string(rates_.rows()) + "x" +
                            std::to_string(rates_.cols()) + " but bounds require " +
                            std::to_string(max_age - min_age + 1) + "x" +
                            std::to_string(max_date - min_date + 1));
        }
        for (Eigen::Index i = 0; i < rates_.rows(); ++i) {
            for (Eigen::Index j = 0; j < rates_.cols(); ++j) {
                const Scalar r = rates_(i, j);
                if (!std::isfinite(r) || r < Scalar(0)) {
                    throw Error(ErrorCode::Domain,
                                "invalid rate at age " + std::to_string(min_age + i) + ", date " +
                                    std::to_string(min_date + j) + ": rates must be finite and >= 0");
                }
            }
        }
    }

    int min_age() const { return min_age_; }
    int max_age() const { return max_age_; }
    int min_date() const { return min_date_; }
    int max_date() const { return max_date_; }
    const Matrix& rates() const { return rates_; }

    /// Rate of the cell for integral years; both indices must be in bounds.
    Scalar cell(int age_year, int date_year) const {
        return rates_(age_year - min_age_, date_year - min_date_);
    }

    Scalar daily_hazard(Scalar age, Scalar date) const {
        return cell(clf(age, min_age_, max_age_), clf(date, min_date_, max_date_));
    }

    bool same_bounds(const BasicRateTableT& other) const {
        return min_age_ == other.min_age_ && max_age_ == other.max_age_ &&
               min_date_ == other.min_date_ && max_date_ == other.max_date_;
    }

private:
    Matrix rates_;
    int min_age_;
    int max_age_;
    int min_date_;
    int max_date_;
};

using BasicRateTable = BasicRateTableT<double>;

/// Convert yearly death probabilities into daily hazards under a constant
/// hazard within each year: rate = -log(1 - q) / 365.241.
template <typename Derived>
BasicRateTableT<typename Derived::Scalar> from_annual_probabilities(
    const Eigen::MatrixBase<Derived>& q, int min_age, int max_age, int min_date, int max_date) {
    using Scalar = typename Derived::Scalar;
    typename BasicRateTableT<Scalar>::Matrix rates(q.rows(), q.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            const Scalar p = q(i, j);
            if (!(p >= Scalar(0) && p < Scalar(1))) {
                throw Error(ErrorCode::Domain,
                            "annual death probability at age " + std::to_string(min_age + i) +
                                ", date " + std::to_string(min_date + j) + " is " +
                                std::to_string(p) + "; expected a value in [0, 1)");
            }
            rates(i, j) = -std::log(Scalar(1) - p) / Scalar(kDaysPerYear);
        }
    }
    return BasicRateTableT<Scalar>(std::move(rates), min_age, max_age, min_date, max_date);
}

/// A collection of basic rate tables keyed by one value per covariate axis,
/// e.g. axes (country, sex) with keys such as {"svn", "male"}.
class RateTable {
public:
    using Key = std::vector<std::string>;

    RateTable(std::vector<std::string> axes, std::vector<std::vector<std::string>> axis_values,
              std::map<Key, BasicRateTable> tables);

    /// Convenience for a table without covariates.
    explicit RateTable(BasicRateTable table);

    const std::vector<std::string>& axes() const { return axes_; }
    const std::map<Key, BasicRateTable>& tables() const { return tables_; }

    /// Declared values of `axis`, in file order. Throws UnmatchedAxis when the
    /// axis does not exist.
    const std::vector<std::string>& available_covariates(std::string_view axis) const;

    const BasicRateTable& at(const Key& values) const;

    double daily_hazard(double age, double date, const Key& values) const {
        return at(values).daily_hazard(age, date);
    }

    const BasicRateTable& any() const { return tables_.begin()->second; }

private:
    std::vector<std::string> axes_;
    std::vector<std::vector<std::string>> axis_values_;
    std::map<Key, BasicRateTable> tables_;
};

/// Render a list as "(a, b, c)" for error messages.
std::string join_values(const std::vector<std::string>& values);

} // namespace netsurv
