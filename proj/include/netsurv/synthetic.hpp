#pragma once

#include <cstdint>

#include "netsurv/cohort.hpp"

namespace netsurv {

/// Reproducible synthetic cohort for smoke tests and benchmarks. Follow-up is
/// administratively censored at `days`; covariates `sex` (female/male) and
/// `stage` (1..4) are attached, `age` and `year` are in days.
Cohort synthetic_cohort(std::size_t n, int days, std::uint64_t seed = 20240101);

} // namespace netsurv
