#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace netsurv {

class Cohort;

/// Parsed `Surv(time, status) ~ g1 + g2 + Strata(s1)`. `~ 1` means no
/// grouping and no strata.
struct FormulaSpec {
    std::string time_col;
    std::string status_col;
    std::vector<std::string> group_cols;
    std::vector<std::string> strata_cols;

    bool operator==(const FormulaSpec&) const = default;
};

/// Grammar: Surv(<id>,<id>) ~ (1 | <id> (+ <id>)* (+ Strata(<id>))*)
/// Whitespace is free. Throws Syntax with the byte offset on malformed input
/// and on any column used twice.
FormulaSpec parse_formula(std::string_view text);

/// Canonical text form; parse_formula(render(f)) == f.
std::string render(const FormulaSpec& formula);

/// Throws MissingColumn when a grouping or strata column is absent from the
/// cohort. The follow-up columns are chosen when the cohort is loaded (see
/// CohortSchema), so they are not looked up here.
void validate_formula(const FormulaSpec& formula, const Cohort& cohort);

} // namespace netsurv
