#include "netsurv/crude.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "netsurv/error.hpp"

namespace netsurv {

namespace {

// total - part, nudged so that part + result rounds back to total.
double exact_complement(double total, double part) {
    double rest = total - part;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 8 && part + rest != total; ++step) {
        rest = std::nextafter(rest, part + rest < total ? inf : -inf);
    }
    return rest;
}

// Splits total into (part', rest) with part' + rest == total in floating point.
// When part is negative the rest has a coarser ulp than total and no exact rest
// may exist, so part is also allowed to move by a few ulps.
std::pair<double, double> exact_split(double total, double part) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    // total - fl(total - part) is exact whenever Sterbenz applies.
    const double mirrored = total - (total - part);
    for (double candidate : {part, mirrored}) {
        const double rest = exact_complement(total, candidate);
        if (candidate + rest == total) return {candidate, rest};
    }
    double up = part, down = part;
    for (int step = 0; step < 16; ++step) {
        up = std::nextafter(up, inf);
        down = std::nextafter(down, -inf);
        for (double candidate : {up, down}) {
            const double rest = exact_complement(total, candidate);
            if (candidate + rest == total) return {candidate, rest};
        }
    }
    return {part, total - part};
}

} // namespace

CrudeMortality crude_mortality(const NetSurvivalFit& net, const SurvivalFit& km) {
    if (!(net.grid == km.grid) || net.S.size() != km.S.size()) {
        throw Error(ErrorCode::GridMismatch, "net survival fit and Kaplan-Meier fit use different grids");
    }
    if (net.group_label != km.group_label) {
        throw Error(ErrorCode::GridMismatch, "net survival fit is for group '" + net.group_label +
                                                 "' but Kaplan-Meier fit is for group '" + km.group_label + "'");
    }
    const Eigen::Index days = net.grid.t_max;
    CrudeMortality out;
    out.grid = net.grid;
    out.group_label = net.group_label;
    out.one_minus_S_O.resize(days);
    out.excess.resize(days);
    out.population.resize(days);

    double surv_before = 1.0;
    double excess = 0.0;
    for (Eigen::Index s = 0; s < days; ++s) {
        excess += surv_before * net.dLambda[s];
        const double total = 1.0 - km.S[s];
        out.one_minus_S_O[s] = total;
        const auto [e, p] = exact_split(total, excess);
        out.excess[s] = e;
        out.population[s] = p;
        surv_before = km.S[s];
    }
    return out;
}

} // namespace netsurv
