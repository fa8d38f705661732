#include "netsurv/ratetable_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "netsurv/csv.hpp"

namespace netsurv {

namespace {

Error parse_error(std::size_t line_no, const std::string& what) {
    return Error(ErrorCode::Parse, "rate table line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    for (auto& f : csv::split_record(text)) {
        if (!f.empty()) out.push_back(std::move(f));
    }
    return out;
}

struct Grid {
    Eigen::MatrixXd values;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen;
};

} // namespace

RateTable read_rate_table(std::istream& in) {
    std::vector<std::string> axes;
    std::map<std::string, std::vector<std::string>> levels;
    bool have_bounds = false;
    int min_age = 0, max_age = 0, min_date = 0, max_date = 0;
    std::string value_kind;
    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;

    while (std::getline(in, line)) {
        ++line_no;
        const auto text = csv::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto colon = text.find(':');
        if (colon == std::string_view::npos) throw parse_error(line_no, "expected 'key: value'");
        const auto key = csv::trim(text.substr(0, colon));
        const auto value = csv::trim(text.substr(colon + 1));
        if (key == "format") {
            if (value != "netsurv-ratetable/1") {
                throw parse_error(line_no, "unsupported format '" + std::string(value) + "'");
            }
        } else if (key == "axes") {
            axes = split_list(value);
        } else if (key.rfind("levels ", 0) == 0) {
            levels[std::string(csv::trim(key.substr(7)))] = split_list(value);
        } else if (key == "bounds") {
            std::istringstream ss{std::string(value)};
            if (!(ss >> min_age >> max_age >> min_date >> max_date)) {
                throw parse_error(line_no, "bounds must be four integers: min_age max_age min_date max_date");
            }
            have_bounds = true;
        } else if (key == "values") {
            value_kind = std::string(value);
            if (value_kind != "rates" && value_kind != "annual_q") {
                throw parse_error(line_no, "values must be 'rates' or 'annual_q'");
            }
        } else if (key == "step") {
            if (value != "yearly") {
                throw Error(ErrorCode::Domain, "rate table line " + std::to_string(line_no) +
                                                   ": only yearly axes are supported, got '" +
                                                   std::string(value) + "'");
            }
        } else if (key == "data") {
            in_data = true;
            break;
        } else {
            throw parse_error(line_no, "unknown header key '" + std::string(key) + "'");
        }
    }
    if (!in_data) throw Error(ErrorCode::Parse, "rate table has no 'data:' section");
    if (!have_bounds) throw Error(ErrorCode::Parse, "rate table header is missing 'bounds'");
    if (value_kind.empty()) throw Error(ErrorCode::Parse, "rate table header is missing 'values'");
    if (min_age >= max_age || min_date >= max_date) {
        throw Error(ErrorCode::Domain, "rate table bounds must satisfy min < max on both axes");
    }

    std::vector<std::vector<std::string>> axis_values;
    for (const auto& axis : axes) {
        const auto it = levels.find(axis);
        if (it == levels.end() || it->second.empty()) {
            throw Error(ErrorCode::Parse, "rate table header is missing 'levels " + axis + "'");
        }
        axis_values.push_back(it->second);
    }

    if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "rate table data has no header row");
    ++line_no;
    {
        auto header = csv::split_record(line);
        std::vector<std::string> expected = axes;
        expected.insert(expected.end(), {"age_year", "date_year", "value"});
        if (header != expected) {
            throw parse_error(line_no, "data header must be " + join_values(expected));
        }
    }

    const Eigen::Index rows = max_age - min_age + 1;
    const Eigen::Index cols = max_date - min_date + 1;
    std::map<RateTable::Key, Grid> grids;
    const std::size_t width = axes.size() + 3;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        auto fields = csv::split_record(line);
        if (fields.size() != width) {
            throw parse_error(line_no, "expected " + std::to_string(width) + " fields, got " +
                                           std::to_string(fields.size()));
        }
        RateTable::Key key(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(axes.size()));
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& allowed = axis_values[a];
            if (std::find(allowed.begin(), allowed.end(), key[a]) == allowed.end()) {
                throw parse_error(line_no, "value '" + key[a] + "' is not listed in 'levels " +
                                               axes[a] + "'");
            }
        }
        const auto age = csv::parse_integer(fields[axes.size()]);
        const auto date = csv::parse_integer(fields[axes.size() + 1]);
        const auto val = csv::parse_double(fields[axes.size() + 2]);
        if (!age || !date || !val) throw parse_error(line_no, "age_year, date_year and value must be numeric");
        if (*age < min_age || *age > max_age || *date < min_date || *date > max_date) {
            throw parse_error(line_no, "cell (" + std::to_string(*age) + ", " + std::to_string(*date) +
                                           ") lies outside the declared bounds");
        }
        auto [it, inserted] = grids.try_emplace(key);
        if (inserted) {
            it->second.values = Eigen::MatrixXd::Zero(rows, cols);
            it->second.seen.setConstant(rows, cols, false);
        }
        const auto i = static_cast<Eigen::Index>(*age - min_age);
        const auto j = static_cast<Eigen::Index>(*date - min_date);
        if (it->second.seen(i, j)) {
            throw parse_error(line_no, "duplicate cell (" + std::to_string(*age) + ", " +
                                           std::to_string(*date) + ") for " + join_values(key));
        }
        it->second.seen(i, j) = true;
        it->second.values(i, j) = *val;
    }

    std::map<RateTable::Key, BasicRateTable> tables;
    for (auto& [key, grid] : grids) {
        if (!grid.seen.all()) {
            throw Error(ErrorCode::Parse, "rate table " + join_values(key) + " has missing cells");
        }
        if (value_kind == "annual_q") {
            tables.emplace(key, from_annual_probabilities(grid.values, min_age, max_age, min_date, max_date));
        } else {
            tables.emplace(key, BasicRateTable(grid.values, min_age, max_age, min_date, max_date));
        }
    }
    return RateTable(std::move(axes), std::move(axis_values), std::move(tables));
}

RateTable load_rate_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open rate table '" + path.string() + "'");
    return read_rate_table(in);
}

void write_rate_table(std::ostream& out, const RateTable& table) {
    const auto& first = table.any();
    out << "format: netsurv-ratetable/1\n";
    out << "axes: ";
    for (std::size_t a = 0; a < table.axes().size(); ++a) out << (a ? "," : "") << table.axes()[a];
    out << "\n";
    for (const auto& axis : table.axes()) {
        out << "levels " << axis << ": ";
        const auto& vals = table.available_covariates(axis);
        for (std::size_t v = 0; v < vals.size(); ++v) out << (v ? "," : "") << csv::escape(vals[v]);
        out << "\n";
    }
    out << "bounds: " << first.min_age() << ' ' << first.max_age() << ' ' << first.min_date() << ' '
        << first.max_date() << "\n";
    out << "values: rates\nstep: yearly\ndata:\n";
    for (const auto& axis : table.axes()) out << axis << ',';
    out << "age_year,date_year,value\n";
    for (const auto& [key, t] : table.tables()) {
        for (int a = t.min_age(); a <= t.max_age(); ++a) {
            for (int d = t.min_date(); d <= t.max_date(); ++d) {
                for (const auto& k : key) out << csv::escape(k) << ',';
                out << a << ',' << d << ',' << csv::format_double(t.cell(a, d)) << '\n';
            }
        }
    }
}

RateTable load_hmd_csv(const std::vector<std::pair<std::string, std::filesystem::path>>& files) {
    if (files.empty()) throw Error(ErrorCode::InvalidArgument, "no life-table files given");

    // (country, sex) -> (age, year) -> qx
    std::map<RateTable::Key, std::map<std::pair<int, int>, double>> cells;
    std::vector<std::string> countries;
    std::vector<std::string> sexes;
    int min_age = std::numeric_limits<int>::max(), max_age = std::numeric_limits<int>::min();
    int min_year = min_age, max_year = max_age;

    auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };

    for (const auto& [country, path] : files) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::Io, "cannot open life table '" + path.string() + "'");
        add_unique(countries, country);
        std::string line;
        if (!std::getline(in, line)) throw Error(ErrorCode::Parse, path.string() + ": empty file");
        const auto header = csv::split_record(line);
        auto column = [&](const std::string& name) -> std::ptrdiff_t {
            const auto it = std::find(header.begin(), header.end(), name);
            return it == header.end() ? -1 : it - header.begin();
        };
        const auto year_col = column("Year");
        const auto age_col = column("Age");
        if (year_col < 0 || age_col < 0) {
            throw Error(ErrorCode::MissingColumn, path.string() + ": life table needs 'Year' and 'Age' columns");
        }
        // Either a Sex + qx pair, or one qx_<sex> column per sex.
        std::vector<std::pair<std::string, std::ptrdiff_t>> wide;
        const auto sex_col = column("Sex");
        const auto qx_col = column("qx");
        if (sex_col < 0 || qx_col < 0) {
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (header[c].rfind("qx_", 0) == 0) {
                    wide.emplace_back(header[c].substr(3), static_cast<std::ptrdiff_t>(c));
                }
            }
            if (wide.empty()) {
                throw Error(ErrorCode::MissingColumn,
                            path.string() + ": life table needs 'Sex' and 'qx' columns or 'qx_<sex>' columns");
            }
        }

        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (csv::trim(line).empty()) continue;
            const auto f = csv::split_record(line);
            auto need = [&](std::ptrdiff_t c) -> const std::string& {
                if (c >= static_cast<std::ptrdiff_t>(f.size())) {
                    throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": short row");
                }
                return f[static_cast<std::size_t>(c)];
            };
            std::string age_text = need(age_col);
            if (!age_text.empty() && age_text.back() == '+') age_text.pop_back();
            const auto year = csv::parse_integer(need(year_col));
            const auto age = csv::parse_integer(age_text);
            if (!year || !age) {
                throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) +
                                                  ": Year and Age must be integers");
            }
            auto store = [&](const std::string& sex, const std::string& qtext) {
                const auto q = csv::parse_double(qtext);
                if (!q) {
                    throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) +
                                                      ": qx must be numeric");
                }
                add_unique(sexes, sex);
                cells[{country, sex}][{static_cast<int>(*age), static_cast<int>(*year)}] = *q;
            };
            if (wide.empty()) {
                store(need(sex_col), need(qx_col));
            } else {
                for (const auto& [sex, c] : wide) store(sex, need(c));
            }
            min_age = std::min(min_age, static_cast<int>(*age));
            max_age = std::max(max_age, static_cast<int>(*age));
            min_year = std::min(min_year, static_cast<int>(*year));
            max_year = std::max(max_year, static_cast<int>(*year));
        }
    }

    std::map<RateTable::Key, BasicRateTable> tables;
    for (const auto& [key, values] : cells) {
        Eigen::MatrixXd q(max_age - min_age + 1, max_year - min_year + 1);
        for (int a = min_age; a <= max_age; ++a) {
            for (int y = min_year; y <= max_year; ++y) {
                const auto it = values.find({a, y});
                if (it == values.end()) {
                    throw Error(ErrorCode::Parse, "life table " + join_values(key) + " is missing age " +
                                                      std::to_string(a) + " in year " + std::to_string(y));
                }
                q(a - min_age, y - min_year) = it->second;
            }
        }
        tables.emplace(key, from_annual_probabilities(q, min_age, max_age, min_year, max_year));
    }
    return RateTable({"country", "sex"}, {countries, sexes}, std::move(tables));
}

RateTable synthetic_demo_table() {
    constexpr int min_age = 0, max_age = 110, min_date = 1950, max_date = 2030;
    std::map<RateTable::Key, BasicRateTable> tables;
    for (const auto& [sex, scale] : {std::pair{"female", 0.6}, std::pair{"male", 1.0}}) {
        BasicRateTable::Matrix rates(max_age - min_age + 1, max_date - min_date + 1);
        for (int a = min_age; a <= max_age; ++a) {
            for (int d = min_date; d <= max_date; ++d) {
                const double yearly = scale * (2e-4 + 3e-5 * std::exp(0.095 * a)) *
                                      std::pow(0.985, d - 2000);
                rates(a - min_age, d - min_date) = yearly / kDaysPerYear;
            }
        }
        tables.emplace(RateTable::Key{sex}, BasicRateTable(std::move(rates), min_age, max_age, min_date, max_date));
    }
    return RateTable({"sex"}, {{"female", "male"}}, std::move(tables));
}

RateTable builtin_rate_table(const std::string& name) {
    if (name == "demo") return synthetic_demo_table();
    throw Error(ErrorCode::UnknownValue, "unknown built-in rate table '" + name + "'; available: (demo)");
}

} // namespace netsurv
