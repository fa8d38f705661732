#include "netsurv/export.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netsurv/csv.hpp"

namespace netsurv {

namespace {

using json = nlohmann::ordered_json;

std::string num(double x) { return csv::format_double(x); }

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// JSON has no NaN or infinity; write those as strings like the CSV does.
json value(double x) {
    if (std::isfinite(x)) return x;
    return csv::format_double(x);
}

json series(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(value(v[i]));
    return arr;
}

json days(int t_max) {
    json arr = json::array();
    for (int s = 1; s <= t_max; ++s) arr.push_back(s);
    return arr;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

template <typename Fit>
bool needs_group_column(std::span<const Fit> fits) {
    return fits.size() > 1 || (fits.size() == 1 && fits.front().group_label != "all");
}

} // namespace

json metadata_json(const RunMetadata& meta) {
    json m;
    m["command"] = meta.command;
    if (!meta.method.empty()) m["method"] = meta.method;
    m["formula"] = meta.formula;
    if (!meta.table.empty()) m["table"] = meta.table;
    m["grid"] = {{"t_max", meta.t_max}, {"unit", "day"}};
    m["level"] = meta.level;
    m["warnings"] = meta.warnings;
    return m;
}

void write_fit_csv(std::ostream& out, std::span<const NetSurvivalFit> fits, double level) {
    const bool grouped = needs_group_column(fits);
    if (grouped) out << "group,";
    out << "day,dLambda,sigma_cum,S,lower,upper\n";
    for (const auto& fit : fits) {
        const auto band = confint(fit, level);
        const std::string prefix = grouped ? csv::escape(fit.group_label) + "," : std::string{};
        for (Eigen::Index s = 0; s < fit.S.size(); ++s) {
            out << prefix << (s + 1) << ',' << num(fit.dLambda[s]) << ',' << num(std::sqrt(fit.var_cum[s])) << ','
                << num(fit.S[s]) << ',' << num(band.lower[s]) << ',' << num(band.upper[s]) << '\n';
        }
    }
}

json fit_json(std::span<const NetSurvivalFit> fits, const RunMetadata& meta) {
    json doc;
    doc["metadata"] = metadata_json(meta);
    json groups = json::array();
    for (const auto& fit : fits) {
        const auto band = confint(fit, meta.level);
        groups.push_back({{"group", fit.group_label},
                          {"day", days(fit.grid.t_max)},
                          {"dLambda", series(fit.dLambda)},
                          {"sigma_cum", series(fit.var_cum.array().sqrt().matrix())},
                          {"S", series(fit.S)},
                          {"lower", series(band.lower)},
                          {"upper", series(band.upper)}});
    }
    doc["groups"] = std::move(groups);
    return doc;
}

void write_crude_csv(std::ostream& out, std::span<const CrudeMortality> results) {
    const bool grouped = needs_group_column(results);
    if (grouped) out << "group,";
    out << "t,one_minus_S_O,M_E,M_P\n";
    for (const auto& r : results) {
        const std::string prefix = grouped ? csv::escape(r.group_label) + "," : std::string{};
        for (Eigen::Index s = 0; s < r.excess.size(); ++s) {
            out << prefix << (s + 1) << ',' << num(r.one_minus_S_O[s]) << ',' << num(r.excess[s]) << ','
                << num(r.population[s]) << '\n';
        }
    }
}

json crude_json(std::span<const CrudeMortality> results, const RunMetadata& meta) {
    json doc;
    doc["metadata"] = metadata_json(meta);
    json groups = json::array();
    for (const auto& r : results) {
        groups.push_back({{"group", r.group_label},
                          {"t", days(r.grid.t_max)},
                          {"one_minus_S_O", series(r.one_minus_S_O)},
                          {"M_E", series(r.excess)},
                          {"M_P", series(r.population)}});
    }
    doc["groups"] = std::move(groups);
    return doc;
}

void write_test_csv(std::ostream& out, const GraffeoResult& result, const FormulaSpec& formula) {
    out << "grouping,strata,statistic,dof,p_value\n";
    out << csv::escape(join(formula.group_cols, "+")) << ',' << csv::escape(join(formula.strata_cols, "+")) << ','
        << num(result.statistic) << ',' << result.dof << ',' << num(result.p_value) << '\n';
}

json test_json(const GraffeoResult& result, const FormulaSpec& formula, const RunMetadata& meta) {
    json doc;
    RunMetadata m = meta;
    m.warnings.insert(m.warnings.end(), result.warnings.begin(), result.warnings.end());
    doc["metadata"] = metadata_json(m);
    doc["grouping"] = join(formula.group_cols, "+");
    doc["strata"] = join(formula.strata_cols, "+");
    doc["statistic"] = value(result.statistic);
    doc["dof"] = result.dof;
    doc["p_value"] = value(result.p_value);
    doc["groups"] = result.groups;
    doc["per_group_Z"] = series(result.per_group_Z);
    json cov = json::array();
    for (Eigen::Index r = 0; r < result.covariance.rows(); ++r) cov.push_back(series(result.covariance.row(r).transpose()));
    doc["covariance"] = std::move(cov);
    return doc;
}

void write_elt_csv(std::ostream& out, const NessieResult& result) {
    out << "group,years\n";
    for (std::size_t g = 0; g < result.groups.size(); ++g) {
        out << csv::escape(result.groups[g]) << ',' << num(result.elt[static_cast<Eigen::Index>(g)]) << '\n';
    }
}

void write_ess_csv(std::ostream& out, const NessieResult& result) {
    out << "time";
    for (const auto& g : result.groups) out << ',' << csv::escape(g);
    out << '\n';
    for (Eigen::Index t = 0; t < result.ess.rows(); ++t) {
        out << num(result.time_points[t]);
        for (Eigen::Index g = 0; g < result.ess.cols(); ++g) out << ',' << num(result.ess(t, g));
        out << '\n';
    }
}

json nessie_json(const NessieResult& result, const RunMetadata& meta) {
    json doc;
    doc["metadata"] = metadata_json(meta);
    doc["groups"] = result.groups;
    doc["elt"] = series(result.elt);
    doc["time"] = series(result.time_points);
    json ess = json::object();
    for (std::size_t g = 0; g < result.groups.size(); ++g) {
        ess[result.groups[g]] = series(result.ess.col(static_cast<Eigen::Index>(g)));
    }
    doc["ess"] = std::move(ess);
    return doc;
}

void write_survival_svg(std::ostream& out, std::span<const NetSurvivalFit> fits, double level,
                        const std::string& title) {
    constexpr double width = 800, height = 500, left = 60, right = 20, top = 40, bottom = 50;
    constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    int t_max = 1;
    double y_max = 1.0;
    std::vector<ConfidenceBand> bands;
    for (const auto& fit : fits) {
        t_max = std::max(t_max, fit.grid.t_max);
        bands.push_back(confint(fit, level));
        for (Eigen::Index s = 0; s < fit.S.size(); ++s) {
            if (std::isfinite(bands.back().upper[s])) y_max = std::max(y_max, bands.back().upper[s]);
        }
    }
    y_max = std::min(y_max, 2.0);
    auto x_of = [&](double day) { return left + plot_w * day / t_max; };
    auto y_of = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, y_max) / y_max); };

    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = y_max * i / 5;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
        const double d = static_cast<double>(t_max) * i / 5;
        svg << "<text x=\"" << x_of(d) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
            << std::lround(d) << "</text>\n";
    }
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">days</text>\n";

    for (std::size_t f = 0; f < fits.size(); ++f) {
        const auto& fit = fits[f];
        const char* colour = palette[f % std::size(palette)];
        // At most ~1000 vertices per curve.
        const Eigen::Index n = fit.S.size();
        const Eigen::Index stride = std::max<Eigen::Index>(1, n / 1000);
        std::vector<Eigen::Index> idx;
        for (Eigen::Index s = 0; s < n; s += stride) idx.push_back(s);
        if (n > 0 && idx.back() != n - 1) idx.push_back(n - 1);

        svg << "<polygon fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (auto s : idx) svg << x_of(s + 1.0) << ',' << y_of(bands[f].upper[s]) << ' ';
        for (auto it = idx.rbegin(); it != idx.rend(); ++it) svg << x_of(*it + 1.0) << ',' << y_of(bands[f].lower[*it]) << ' ';
        svg << "\"/>\n";
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (auto s : idx) svg << x_of(s + 1.0) << ',' << y_of(fit.S[s]) << ' ';
        svg << "\"/>\n";
        svg << "<text x=\"" << left + plot_w - 10 << "\" y=\"" << top + 16 * (f + 1) << "\" text-anchor=\"end\" fill=\""
            << colour << "\">" << xml_escape(fit.group_label) << "</text>\n";
    }
    svg << "</svg>\n";
    out << svg.str();
}

} // namespace netsurv
