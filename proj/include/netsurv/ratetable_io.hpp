#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "netsurv/ratetable.hpp"

namespace netsurv {

/// Text rate-table format, version 1:
///
///     format: netsurv-ratetable/1
///     axes: country,sex
///     levels country: svn
///     levels sex: female,male,total
///     bounds: 0 110 1983 2019
///     values: annual_q            (or: rates)
///     step: yearly                (optional; only "yearly" is supported)
///     data:
///     country,sex,age_year,date_year,value
///     svn,male,0,1983,0.00512
///     ...
///
/// Lines starting with '#' are comments. Every (key, age, date) cell must
/// appear exactly once.
RateTable read_rate_table(std::istream& in);
RateTable load_rate_table(const std::filesystem::path& path);

/// Writes daily rates (`values: rates`) with round-trip precision.
void write_rate_table(std::ostream& out, const RateTable& table);

/// Period life tables exported in long CSV form. Accepted layouts:
///   Year,Age,Sex,qx          one row per (year, age, sex)
///   Year,Age,qx_female,...   one qx column per sex
/// Ages such as "110+" are read as 110. Each (country, path) pair contributes
/// one country value; the result has axes (country, sex).
RateTable load_hmd_csv(const std::vector<std::pair<std::string, std::filesystem::path>>& files);

/// Small Gompertz-Makeham table with a `sex` axis (female, male), ages
/// 0..110 and dates 1950..2030, for demos and smoke tests.
RateTable synthetic_demo_table();

/// Resolve a built-in table by name ("demo"); throws UnknownValue otherwise.
RateTable builtin_rate_table(const std::string& name);

} // namespace netsurv
