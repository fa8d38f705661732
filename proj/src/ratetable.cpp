#include "netsurv/ratetable.hpp"

#include <algorithm>

namespace netsurv {

std::string join_values(const std::vector<std::string>& values) {
    std::string out = "(";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += values[i];
    }
    out += ")";
    return out;
}

RateTable::RateTable(std::vector<std::string> axes,
                     std::vector<std::vector<std::string>> axis_values,
                     std::map<Key, BasicRateTable> tables)
    : axes_(std::move(axes)), axis_values_(std::move(axis_values)), tables_(std::move(tables)) {
    if (axes_.size() != axis_values_.size()) {
        throw Error(ErrorCode::Arity, "rate table declares " + std::to_string(axes_.size()) +
                                          " axes but " + std::to_string(axis_values_.size()) +
                                          " value lists");
    }
    if (tables_.empty()) {
        throw Error(ErrorCode::Domain, "rate table contains no basic tables");
    }
    const BasicRateTable& first = tables_.begin()->second;
    for (const auto& [key, table] : tables_) {
        if (key.size() != axes_.size()) {
            throw Error(ErrorCode::Arity, "rate table key " + join_values(key) + " has " +
                                              std::to_string(key.size()) + " values, expected " +
                                              std::to_string(axes_.size()));
        }
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            const auto& allowed = axis_values_[a];
            if (std::find(allowed.begin(), allowed.end(), key[a]) == allowed.end()) {
                throw Error(ErrorCode::UnknownValue, "rate table key value '" + key[a] +
                                                         "' is not declared for axis '" + axes_[a] +
                                                         "'");
            }
        }
        if (!table.same_bounds(first)) {
            throw Error(ErrorCode::Domain,
                        "all basic tables must share the same age and date bounds");
        }
    }
}

RateTable::RateTable(BasicRateTable table) {
    tables_.emplace(Key{}, std::move(table));
}

const std::vector<std::string>& RateTable::available_covariates(std::string_view axis) const {
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        if (axes_[a] == axis) return axis_values_[a];
    }
    throw Error(ErrorCode::UnmatchedAxis, "rate table has no axis '" + std::string(axis) +
                                              "'; axes are " + join_values(axes_));
}

const BasicRateTable& RateTable::at(const Key& values) const {
    if (values.size() != axes_.size()) {
        throw Error(ErrorCode::Arity, "rate table expects " + std::to_string(axes_.size()) +
                                          " covariate values " + join_values(axes_) + ", got " +
                                          std::to_string(values.size()));
    }
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        const auto& allowed = axis_values_[a];
        if (std::find(allowed.begin(), allowed.end(), values[a]) == allowed.end()) {
            throw Error(ErrorCode::UnknownValue, "unknown value '" + values[a] + "' for axis '" +
                                                     axes_[a] + "'; available values are " +
                                                     join_values(allowed));
        }
    }
    const auto it = tables_.find(values);
    if (it == tables_.end()) {
        throw Error(ErrorCode::UnknownValue,
                    "rate table has no entry for " + join_values(values));
    }
    return it->second;
}

} // namespace netsurv
