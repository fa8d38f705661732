#pragma once

#include <cmath>
#include <limits>

#include "netsurv/ratetable.hpp"

namespace netsurv {

/// Other-cause lifetime of one individual: follows `table` starting from
/// `age0` and `date0`, both in days.
template <typename Scalar>
struct LifeT {
    const BasicRateTableT<Scalar>* table = nullptr;
    Scalar age0 = 0;
    Scalar date0 = 0;
};

using Life = LifeT<double>;

/// One piece of the piecewise-constant hazard path: the hazard equals `rate`
/// on (start, end], and the cumulative hazard at `start` is `cumhaz`.
template <typename Scalar>
struct HazardSegment {
    Scalar start;
    Scalar end;
    Scalar rate;
    Scalar cumhaz;
};

/// Walks the cells crossed by a life in increasing time order. Age and date
/// boundaries are merged; a coincident boundary yields a single breakpoint.
/// The last segment is the terminal clamp cell and has `end == +inf`.
template <typename Scalar>
class HazardWalk {
public:
    explicit HazardWalk(const LifeT<Scalar>& life)
        : table_(life.table),
          age0_(life.age0),
          date0_(life.date0),
          age_year_(clf(life.age0, table_->min_age(), table_->max_age())),
          date_year_(clf(life.date0, table_->min_date(), table_->max_date())) {
        seg_.start = Scalar(0);
        seg_.cumhaz = Scalar(0);
        fill();
    }

    const HazardSegment<Scalar>& segment() const { return seg_; }
    bool terminal() const { return std::isinf(seg_.end); }

    void next() {
        const Scalar boundary = seg_.end;
        seg_.cumhaz += seg_.rate * (boundary - seg_.start);
        seg_.start = boundary;
        if (next_age_ == boundary) ++age_year_;
        if (next_date_ == boundary) ++date_year_;
        fill();
    }

    /// Cumulative hazard at `t`, advancing forward as needed. Calls must use
    /// non-decreasing `t`.
    Scalar cumulative_hazard(Scalar t) {
        while (seg_.end < t) next();
        return seg_.cumhaz + seg_.rate * (t - seg_.start);
    }

private:
    void fill() {
        constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
        next_age_ = age_year_ < table_->max_age()
                        ? Scalar(age_year_ + 1) * Scalar(kDaysPerYear) - age0_
                        : inf;
        next_date_ = date_year_ < table_->max_date()
                         ? Scalar(date_year_ + 1) * Scalar(kDaysPerYear) - date0_
                         : inf;
        seg_.end = std::min(next_age_, next_date_);
        seg_.rate = table_->cell(age_year_, date_year_);
    }

    const BasicRateTableT<Scalar>* table_;
    Scalar age0_;
    Scalar date0_;
    int age_year_;
    int date_year_;
    Scalar next_age_ = 0;
    Scalar next_date_ = 0;
    HazardSegment<Scalar> seg_{};
};

/// Exact integral of the hazard path over [0, t].
template <typename Scalar>
Scalar cumulative_hazard(const LifeT<Scalar>& life, Scalar t) {
    HazardWalk<Scalar> walk(life);
    return walk.cumulative_hazard(t);
}

template <typename Scalar>
Scalar survival(const LifeT<Scalar>& life, Scalar t) {
    return std::exp(-cumulative_hazard(life, t));
}

/// Expected lifetime in days, summed cell by cell:
///   sum_j S(t_{j-1}) (1 - exp(-(t_j - t_{j-1}) rate_j)) / rate_j
/// with the terminal cell contributing S / rate and zero-rate cells S * length.
template <typename Scalar>
Scalar expectation(const LifeT<Scalar>& life) {
    HazardWalk<Scalar> walk(life);
    Scalar total = 0;
    while (true) {
        const auto& seg = walk.segment();
        const Scalar surv = std::exp(-seg.cumhaz);
        if (walk.terminal()) {
            if (seg.rate == Scalar(0)) {
                throw Error(ErrorCode::DivergentExpectation,
                            "expectation diverges: the terminal rate-table cell has zero hazard");
            }
            return total + surv / seg.rate;
        }
        const Scalar len = seg.end - seg.start;
        if (seg.rate == Scalar(0)) {
            total += surv * len;
        } else {
            total += surv * -std::expm1(-len * seg.rate) / seg.rate;
        }
        walk.next();
    }
}

/// Inverse-transform draw: the time t with cumulative hazard -log(u).
/// Returns +inf when the hazard path never reaches that level.
template <typename Scalar>
Scalar sample(const LifeT<Scalar>& life, Scalar u) {
    if (!(u > Scalar(0) && u < Scalar(1))) {
        throw Error(ErrorCode::Domain, "sample requires a uniform variate in (0, 1)");
    }
    const Scalar target = -std::log(u);
    HazardWalk<Scalar> walk(life);
    while (true) {
        const auto& seg = walk.segment();
        if (seg.rate > Scalar(0)) {
            const Scalar t = seg.start + (target - seg.cumhaz) / seg.rate;
            if (t <= seg.end) return t;
        }
        if (walk.terminal()) return std::numeric_limits<Scalar>::infinity();
        walk.next();
    }
}

} // namespace netsurv
