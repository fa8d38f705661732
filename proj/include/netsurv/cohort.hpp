#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netsurv {

/// One cohort column. Every column is interned as categorical levels; columns
/// whose values all parse as numbers additionally carry `numeric`.
struct Column {
    std::string name;
    std::vector<std::string> levels; // natural order: numeric when all levels are numbers
    std::vector<int> codes;          // per patient, index into levels
    std::optional<Eigen::VectorXd> numeric;

    const std::string& value(std::size_t i) const { return levels[static_cast<std::size_t>(codes[i])]; }
};

/// Columnar patient data. `time`, `age` and `date` are in days; `status` is
/// 1 for an observed death and 0 for censoring.
class Cohort {
public:
    Eigen::VectorXd time;
    Eigen::VectorXi status;
    Eigen::VectorXd age;
    Eigen::VectorXd date;

    std::size_t size() const { return static_cast<std::size_t>(time.size()); }

    bool has_column(std::string_view name) const;
    /// Throws MissingColumn listing the available columns.
    const Column& column(std::string_view name) const;
    std::vector<std::string> column_names() const;

    void add_column(Column column);

private:
    std::vector<Column> columns_;
};

enum class DateFormat {
    Days, // already in days (year * 365.241 + offset)
    Iso,  // YYYY-MM-DD, converted to year * 365.241 + (day of year - 1)
};

/// Which columns carry the follow-up data. An empty `date` picks `year`,
/// falling back to `date`.
struct CohortSchema {
    std::string time = "time";
    std::string status = "status";
    std::string age = "age";
    std::string date;
    DateFormat date_format = DateFormat::Days;
};

Cohort read_cohort_csv(std::istream& in, const CohortSchema& schema = {});
Cohort parse_cohort_csv(const std::filesystem::path& path, const CohortSchema& schema = {});

/// Build a cohort in memory; `covariates` maps column name to per-patient text.
Cohort make_cohort(Eigen::VectorXd time, Eigen::VectorXi status, Eigen::VectorXd age,
                   Eigen::VectorXd date,
                   const std::map<std::string, std::vector<std::string>>& covariates = {});

/// Build an interned column from raw text values.
Column make_column(std::string name, const std::vector<std::string>& values);

/// year * 365.241 + (day of year - 1) for an ISO calendar date.
double iso_date_to_days(std::string_view text);

} // namespace netsurv
