#include "netsurv/binding.hpp"

#include <algorithm>

#include "netsurv/error.hpp"

namespace netsurv {

PopulationBinding bind_axes(const Cohort& cohort, const RateTable& table, const AxisBinding& binding) {
    PopulationBinding out;
    const auto& axes = table.axes();

    for (const auto& [axis, col] : binding.columns) {
        if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
            throw Error(ErrorCode::UnmatchedAxis,
                        "binding refers to axis '" + axis + "', but the rate table axes are " + join_values(axes));
        }
    }

    std::vector<const Column*> columns;
    std::vector<std::vector<int>> allowed(axes.size()); // column level -> position in table values, or -1
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto it = binding.columns.find(axes[a]);
        const std::string col_name = it == binding.columns.end() ? axes[a] : it->second;
        if (!cohort.has_column(col_name)) {
            throw Error(ErrorCode::UnmatchedAxis,
                        "rate table axis '" + axes[a] + "' has no matching cohort column '" + col_name +
                            "'; available columns are " + join_values(cohort.column_names()));
        }
        const Column& col = cohort.column(col_name);
        const auto& values = table.available_covariates(axes[a]);
        for (const auto& level : col.levels) {
            const auto pos = std::find(values.begin(), values.end(), level);
            allowed[a].push_back(pos == values.end() ? -1 : static_cast<int>(pos - values.begin()));
        }
        out.axis_columns.emplace(axes[a], col_name);
        columns.push_back(&col);
    }

    // Resolve each distinct key once.
    std::map<RateTable::Key, const BasicRateTable*> cache;
    out.lives.reserve(cohort.size());
    RateTable::Key key(axes.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const int code = columns[a]->codes[i];
            if (allowed[a][static_cast<std::size_t>(code)] < 0) {
                throw Error(ErrorCode::UnknownValue,
                            "patient " + std::to_string(i + 1) + ": value '" + columns[a]->value(i) +
                                "' of column '" + columns[a]->name + "' is not available for axis '" + axes[a] +
                                "'; available values are " + join_values(table.available_covariates(axes[a])));
            }
            key[a] = columns[a]->value(i);
        }
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, &table.at(key)).first;
        const auto k = static_cast<Eigen::Index>(i);
        out.lives.push_back(Life{it->second, cohort.age[k], cohort.date[k]});
    }
    return out;
}

Grouping make_grouping(const Cohort& cohort, const std::vector<std::string>& columns) {
    Grouping g;
    g.columns = columns;
    const std::size_t n = cohort.size();
    g.group_of.assign(n, 0);
    if (columns.empty()) {
        g.labels = {"all"};
        g.members.resize(1);
        for (std::size_t i = 0; i < n; ++i) g.members[0].push_back(i);
        return g;
    }

    std::vector<const Column*> cols;
    for (const auto& c : columns) cols.push_back(&cohort.column(c));

    std::map<std::vector<int>, std::vector<std::size_t>> cells;
    std::vector<int> key(cols.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) key[c] = cols[c]->codes[i];
        cells[key].push_back(i);
    }
    for (auto& [codes, members] : cells) {
        std::string label;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) label += ",";
            label += cols[c]->name + "=" + cols[c]->levels[static_cast<std::size_t>(codes[c])];
        }
        const int id = static_cast<int>(g.labels.size());
        for (auto i : members) g.group_of[i] = id;
        g.labels.push_back(std::move(label));
        g.members.push_back(std::move(members));
    }
    return g;
}

} // namespace netsurv
