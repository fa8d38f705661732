#include "netsurv/cohort.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "netsurv/csv.hpp"
#include "netsurv/error.hpp"
#include "netsurv/ratetable.hpp"

namespace netsurv {

bool Cohort::has_column(std::string_view name) const {
    return std::any_of(columns_.begin(), columns_.end(), [&](const Column& c) { return c.name == name; });
}

const Column& Cohort::column(std::string_view name) const {
    for (const auto& c : columns_) {
        if (c.name == name) return c;
    }
    throw Error(ErrorCode::MissingColumn, "cohort has no column '" + std::string(name) +
                                              "'; available columns are " + join_values(column_names()));
}

std::vector<std::string> Cohort::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.name);
    return names;
}

void Cohort::add_column(Column column) {
    if (column.codes.size() != size()) {
        throw Error(ErrorCode::InvalidArgument, "column '" + column.name + "' has " +
                                                    std::to_string(column.codes.size()) +
                                                    " values, cohort has " + std::to_string(size()));
    }
    if (has_column(column.name)) {
        throw Error(ErrorCode::InvalidArgument, "duplicate column '" + column.name + "'");
    }
    columns_.push_back(std::move(column));
}

Column make_column(std::string name, const std::vector<std::string>& values) {
    Column col;
    col.name = std::move(name);

    std::vector<std::string> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    bool all_numeric = true;
    for (const auto& v : distinct) {
        if (!csv::parse_double(v)) {
            all_numeric = false;
            break;
        }
    }
    if (all_numeric) {
        std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
            return *csv::parse_double(a) < *csv::parse_double(b);
        });
    }
    col.levels = distinct;

    std::unordered_map<std::string, int> index;
    for (std::size_t l = 0; l < distinct.size(); ++l) index.emplace(distinct[l], static_cast<int>(l));
    col.codes.reserve(values.size());
    for (const auto& v : values) col.codes.push_back(index.at(v));

    if (all_numeric) {
        Eigen::VectorXd num(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) num[static_cast<Eigen::Index>(i)] = *csv::parse_double(values[i]);
        col.numeric = std::move(num);
    }
    return col;
}

double iso_date_to_days(std::string_view text) {
    using namespace std::chrono;
    text = csv::trim(text);
    int y = 0;
    unsigned m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw Error(ErrorCode::Parse, "invalid calendar date '" + std::string(text) + "'; expected YYYY-MM-DD");
    }
    const auto yy = csv::parse_integer(text.substr(0, 4));
    const auto mm = csv::parse_integer(text.substr(5, 2));
    const auto dd = csv::parse_integer(text.substr(8, 2));
    if (!yy || !mm || !dd) {
        throw Error(ErrorCode::Parse, "invalid calendar date '" + std::string(text) + "'");
    }
    y = static_cast<int>(*yy);
    m = static_cast<unsigned>(*mm);
    d = static_cast<unsigned>(*dd);
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw Error(ErrorCode::Parse, "invalid calendar date '" + std::string(text) + "'");
    const auto day_of_year = (sys_days{ymd} - sys_days{year{y} / January / 1}).count();
    return y * kDaysPerYear + static_cast<double>(day_of_year);
}

namespace {

void validate_follow_up(const Cohort& cohort) {
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (!(cohort.time[k] >= 0) || !std::isfinite(cohort.time[k])) {
            throw Error(ErrorCode::Domain, "patient " + std::to_string(i + 1) + ": time must be finite and >= 0");
        }
        if (cohort.status[k] != 0 && cohort.status[k] != 1) {
            throw Error(ErrorCode::Domain, "patient " + std::to_string(i + 1) + ": status must be 0 or 1");
        }
        if (!(cohort.age[k] >= 0) || !std::isfinite(cohort.age[k])) {
            throw Error(ErrorCode::Domain, "patient " + std::to_string(i + 1) + ": age must be finite and >= 0");
        }
        if (!std::isfinite(cohort.date[k])) {
            throw Error(ErrorCode::Domain, "patient " + std::to_string(i + 1) + ": date must be finite");
        }
    }
}

} // namespace

Cohort make_cohort(Eigen::VectorXd time, Eigen::VectorXi status, Eigen::VectorXd age, Eigen::VectorXd date,
                   const std::map<std::string, std::vector<std::string>>& covariates) {
    const auto n = time.size();
    if (status.size() != n || age.size() != n || date.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "time, status, age and date must have equal lengths");
    }
    Cohort cohort;
    cohort.time = std::move(time);
    cohort.status = std::move(status);
    cohort.age = std::move(age);
    cohort.date = std::move(date);
    validate_follow_up(cohort);
    for (const auto& [name, values] : covariates) cohort.add_column(make_column(name, values));
    return cohort;
}

Cohort read_cohort_csv(std::istream& in, const CohortSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "cohort file is empty (no header row)");
    const auto header = csv::split_record(line);

    std::vector<std::vector<std::string>> cells(header.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        auto fields = csv::split_record(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::Parse, "cohort line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) cells[c].push_back(std::move(fields[c]));
    }

    auto find = [&](const std::string& name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };
    auto require = [&](const std::string& name) -> std::size_t {
        const auto c = find(name);
        if (c < 0) {
            throw Error(ErrorCode::MissingColumn,
                        "cohort is missing column '" + name + "'; available columns are " + join_values(header));
        }
        return static_cast<std::size_t>(c);
    };

    std::string date_name = schema.date;
    if (date_name.empty()) date_name = find("year") >= 0 ? "year" : "date";

    const auto time_c = require(schema.time);
    const auto status_c = require(schema.status);
    const auto age_c = require(schema.age);
    const auto date_c = require(date_name);

    const auto n = static_cast<Eigen::Index>(cells.empty() ? 0 : cells[0].size());
    Eigen::VectorXd time(n), age(n), date(n);
    Eigen::VectorXi status(n);
    auto numeric = [&](std::size_t c, Eigen::Index i, const std::string& what) {
        const auto v = csv::parse_double(cells[c][static_cast<std::size_t>(i)]);
        if (!v) {
            throw Error(ErrorCode::Parse, "cohort row " + std::to_string(i + 1) + ": " + what + " value '" +
                                              cells[c][static_cast<std::size_t>(i)] + "' is not numeric");
        }
        return *v;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        time[i] = numeric(time_c, i, schema.time);
        const double st = numeric(status_c, i, schema.status);
        if (st != 0.0 && st != 1.0) {
            throw Error(ErrorCode::Domain, "cohort row " + std::to_string(i + 1) + ": status must be 0 or 1, got '" +
                                               cells[status_c][static_cast<std::size_t>(i)] + "'");
        }
        status[i] = static_cast<int>(st);
        age[i] = numeric(age_c, i, schema.age);
        date[i] = schema.date_format == DateFormat::Iso
                      ? iso_date_to_days(cells[date_c][static_cast<std::size_t>(i)])
                      : numeric(date_c, i, date_name);
    }

    Cohort cohort = make_cohort(std::move(time), std::move(status), std::move(age), std::move(date));
    for (std::size_t c = 0; c < header.size(); ++c) cohort.add_column(make_column(header[c], cells[c]));
    return cohort;
}

Cohort parse_cohort_csv(const std::filesystem::path& path, const CohortSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open cohort file '" + path.string() + "'");
    return read_cohort_csv(in, schema);
}

} // namespace netsurv
