#pragma once

#include <map>
#include <string>
#include <vector>

#include "netsurv/cohort.hpp"
#include "netsurv/formula.hpp"
#include "netsurv/life.hpp"
#include "netsurv/ratetable.hpp"

namespace netsurv {

/// Rate-table axis name -> cohort column name. Axes not listed bind to the
/// cohort column of the same name.
struct AxisBinding {
    std::map<std::string, std::string> columns;
};

/// Result of binding: the resolved axis columns and one population life per
/// patient. Lives point into the rate table, which must outlive them.
struct PopulationBinding {
    std::map<std::string, std::string> axis_columns;
    std::vector<Life> lives;
};

/// Resolve every rate-table axis to a cohort column and check that each
/// patient's covariate values exist in the table. Throws UnmatchedAxis
/// (listing cohort columns) or UnknownValue (listing available values).
PopulationBinding bind_axes(const Cohort& cohort, const RateTable& table, const AxisBinding& binding = {});

/// Partition of the patients by the observed combinations of some columns.
/// Groups are the non-empty cells of the Cartesian product of levels, in
/// lexicographic order of the per-column natural level order.
struct Grouping {
    std::vector<std::string> columns;
    std::vector<std::string> labels;               // "stage=1,sex=male"; "all" when ungrouped
    std::vector<std::vector<std::size_t>> members; // ascending patient indices
    std::vector<int> group_of;                     // per patient
};

Grouping make_grouping(const Cohort& cohort, const std::vector<std::string>& columns);

} // namespace netsurv
