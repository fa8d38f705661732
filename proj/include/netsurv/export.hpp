#pragma once

#include "json.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "netsurv/crude.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/graffeo.hpp"
#include "netsurv/nessie.hpp"

namespace netsurv {

/// Run description written into every JSON document.
struct RunMetadata {
    std::string command;
    std::string method;
    std::string formula;
    std::string table;
    int t_max = 0;
    double level = 0.05;
    std::vector<std::string> warnings;
};

nlohmann::ordered_json metadata_json(const RunMetadata& meta);

// Fit: day, dLambda, sigma_cum, S, lower, upper. A leading `group` column is
// written when there is more than one fit or the fit is grouped.
void write_fit_csv(std::ostream& out, std::span<const NetSurvivalFit> fits, double level);
nlohmann::ordered_json fit_json(std::span<const NetSurvivalFit> fits, const RunMetadata& meta);

// Crude mortality: t, one_minus_S_O, M_E, M_P.
void write_crude_csv(std::ostream& out, std::span<const CrudeMortality> results);
nlohmann::ordered_json crude_json(std::span<const CrudeMortality> results, const RunMetadata& meta);

// Test: grouping, strata, statistic, dof, p_value.
void write_test_csv(std::ostream& out, const GraffeoResult& result, const FormulaSpec& formula);
nlohmann::ordered_json test_json(const GraffeoResult& result, const FormulaSpec& formula, const RunMetadata& meta);

// Nessie: elt as (group, years); ess as time x group.
void write_elt_csv(std::ostream& out, const NessieResult& result);
void write_ess_csv(std::ostream& out, const NessieResult& result);
nlohmann::ordered_json nessie_json(const NessieResult& result, const RunMetadata& meta);

/// Static SVG of net survival with a confidence ribbon per fit.
void write_survival_svg(std::ostream& out, std::span<const NetSurvivalFit> fits, double level,
                        const std::string& title = "Net survival");

} // namespace netsurv
