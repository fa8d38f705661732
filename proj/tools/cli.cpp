#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

#include "netsurv/crude.hpp"
#include "netsurv/csv.hpp"
#include "netsurv/error.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/export.hpp"
#include "netsurv/graffeo.hpp"
#include "netsurv/nessie.hpp"
#include "netsurv/ratetable_io.hpp"
#include "netsurv/summation.hpp"
#include "netsurv/synthetic.hpp"

namespace netsurv::cli {

namespace {

struct RunConfig {
    std::string cohort;
    std::string table_file;
    std::string table_name;
    std::vector<std::string> hmd;
    std::string formula = "Surv(time,status) ~ 1";
    std::string method = "pohar-perme";
    int grid = 0;
    double level = 0.05;
    std::string output;
    std::string elt_output;
    std::string format = "csv";
    std::string plot;
    unsigned threads = default_threads();
    std::string time_points;
    std::vector<std::string> binds;
    std::string age_col = "age";
    std::string date_col;
    std::string date_format = "days";
    std::size_t n = 6000;
    int days = 8149;
    int runs = 20;
};

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    while (!text.empty() && text.back() == ' ') text.pop_back();
    return text;
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* flag) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw Error(ErrorCode::InvalidArgument, std::string(flag) + " expects name=value, got '" + text + "'");
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

RateTable load_table(const RunConfig& cfg) {
    const int sources = !cfg.table_file.empty() + !cfg.table_name.empty() + !cfg.hmd.empty();
    if (sources > 1) {
        throw Error(ErrorCode::InvalidArgument, "pass only one of --table-file, --table, --hmd");
    }
    if (!cfg.table_file.empty()) return load_rate_table(cfg.table_file);
    if (!cfg.hmd.empty()) {
        std::vector<std::pair<std::string, std::filesystem::path>> files;
        for (const auto& spec : cfg.hmd) {
            auto [country, path] = split_assignment(spec, "--hmd");
            files.emplace_back(country, path);
        }
        return load_hmd_csv(files);
    }
    if (!cfg.table_name.empty()) return builtin_rate_table(cfg.table_name);
    throw Error(ErrorCode::InvalidArgument, "no rate table given; pass --table-file <path>, --hmd country=path or --table demo");
}

std::string table_description(const RunConfig& cfg) {
    if (!cfg.table_file.empty()) return cfg.table_file;
    if (!cfg.hmd.empty()) return "hmd";
    return cfg.table_name;
}

AxisBinding make_binding(const RunConfig& cfg) {
    AxisBinding binding;
    for (const auto& spec : cfg.binds) {
        auto [axis, column] = split_assignment(spec, "--bind");
        binding.columns[axis] = column;
    }
    return binding;
}

Cohort load_cohort(const RunConfig& cfg, const FormulaSpec& formula) {
    if (cfg.cohort.empty()) throw Error(ErrorCode::InvalidArgument, "--cohort <path> is required");
    CohortSchema schema;
    schema.time = formula.time_col;
    schema.status = formula.status_col;
    schema.age = cfg.age_col;
    schema.date = cfg.date_col;
    if (cfg.date_format == "days") {
        schema.date_format = DateFormat::Days;
    } else if (cfg.date_format == "iso") {
        schema.date_format = DateFormat::Iso;
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown date format '" + cfg.date_format + "'; expected one of {days, iso}");
    }
    Cohort cohort = parse_cohort_csv(cfg.cohort, schema);
    validate_formula(formula, cohort);
    return cohort;
}

DailyGrid make_grid(const RunConfig& cfg, const Cohort& cohort) {
    if (cfg.grid < 0) throw Error(ErrorCode::InvalidArgument, "--grid must be a positive number of days");
    return cfg.grid > 0 ? DailyGrid{cfg.grid} : DailyGrid::covering(cohort);
}

void check_level(double level) {
    if (!(level > 0 && level < 1)) {
        throw Error(ErrorCode::InvalidArgument, "--level must lie in (0, 1), got " + csv::format_double(level));
    }
}

bool json_output(const RunConfig& cfg) {
    if (cfg.format == "json") return true;
    if (cfg.format == "csv") return false;
    throw Error(ErrorCode::InvalidArgument, "unknown format '" + cfg.format + "'; expected one of {csv, json}");
}

// Writes to the file named by `path`, or to `fallback` when empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    std::ofstream file(path);
    if (!file) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write(file);
    if (!file) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

RunMetadata metadata(const char* command, const RunConfig& cfg, const FormulaSpec& formula, const DailyGrid& grid) {
    RunMetadata meta;
    meta.command = command;
    meta.formula = render(formula);
    meta.table = table_description(cfg);
    meta.t_max = grid.t_max;
    meta.level = cfg.level;
    return meta;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    const Method method = parse_method(cfg.method);
    check_level(cfg.level);
    const bool as_json = json_output(cfg);
    const FormulaSpec formula = parse_formula(cfg.formula);
    const RateTable table = load_table(cfg);
    const Cohort cohort = load_cohort(cfg, formula);
    const DailyGrid grid = make_grid(cfg, cohort);
    const auto fits = fit_net_survival(cohort, table, make_binding(cfg), method, formula, grid, {cfg.threads});

    emit(cfg.output, out, [&](std::ostream& os) {
        if (as_json) {
            RunMetadata meta = metadata("fit", cfg, formula, grid);
            meta.method = std::string(method_name(method));
            os << fit_json(fits, meta).dump(1) << '\n';
        } else {
            write_fit_csv(os, fits, cfg.level);
        }
    });
    if (!cfg.plot.empty()) {
        emit(cfg.plot, out, [&](std::ostream& os) {
            write_survival_svg(os, fits, cfg.level, std::string("Net survival (") + std::string(method_name(method)) + ")");
        });
    }
    return 0;
}

int cmd_test(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const bool as_json = json_output(cfg);
    const FormulaSpec formula = parse_formula(cfg.formula);
    const RateTable table = load_table(cfg);
    const Cohort cohort = load_cohort(cfg, formula);
    const DailyGrid grid = make_grid(cfg, cohort);
    GraffeoOptions options;
    options.threads = cfg.threads;
    const auto result = graffeo_test(cohort, table, make_binding(cfg), formula, grid, options);
    report_warnings(result.warnings, err);

    emit(cfg.output, out, [&](std::ostream& os) {
        if (as_json) {
            os << test_json(result, formula, metadata("test", cfg, formula, grid)).dump(1) << '\n';
        } else {
            write_test_csv(os, result, formula);
        }
    });
    return 0;
}

int cmd_crude(const RunConfig& cfg, std::ostream& out) {
    const Method method = parse_method(cfg.method);
    const bool as_json = json_output(cfg);
    const FormulaSpec formula = parse_formula(cfg.formula);
    const RateTable table = load_table(cfg);
    const Cohort cohort = load_cohort(cfg, formula);
    const DailyGrid grid = make_grid(cfg, cohort);
    const auto fits = fit_net_survival(cohort, table, make_binding(cfg), method, formula, grid, {cfg.threads});
    const auto km = kaplan_meier(cohort, formula, grid);
    std::vector<CrudeMortality> results;
    for (std::size_t g = 0; g < fits.size(); ++g) results.push_back(crude_mortality(fits[g], km[g]));

    emit(cfg.output, out, [&](std::ostream& os) {
        if (as_json) {
            RunMetadata meta = metadata("crude", cfg, formula, grid);
            meta.method = std::string(method_name(method));
            os << crude_json(results, meta).dump(1) << '\n';
        } else {
            write_crude_csv(os, results);
        }
    });
    return 0;
}

Eigen::VectorXd parse_time_points(const std::string& text) {
    std::vector<double> values;
    for (const auto& field : csv::split_record(text)) {
        const auto v = csv::parse_double(field);
        if (!v) throw Error(ErrorCode::InvalidArgument, "--time-points: '" + field + "' is not a number");
        values.push_back(*v);
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int cmd_nessie(const RunConfig& cfg, std::ostream& out) {
    const bool as_json = json_output(cfg);
    const FormulaSpec formula = parse_formula(cfg.formula);
    const RateTable table = load_table(cfg);
    const Cohort cohort = load_cohort(cfg, formula);
    const Eigen::VectorXd times = cfg.time_points.empty() ? default_time_points(cohort) : parse_time_points(cfg.time_points);
    const auto result = nessie(cohort, table, make_binding(cfg), formula, times, cfg.threads);

    if (as_json) {
        RunMetadata meta = metadata("nessie", cfg, formula, DailyGrid::covering(cohort));
        emit(cfg.output, out, [&](std::ostream& os) { os << nessie_json(result, meta).dump(1) << '\n'; });
        return 0;
    }
    if (cfg.output.empty() && cfg.elt_output.empty()) {
        write_elt_csv(out, result);
        out << '\n';
        write_ess_csv(out, result);
        return 0;
    }
    emit(cfg.output, out, [&](std::ostream& os) { write_ess_csv(os, result); });
    emit(cfg.elt_output, out, [&](std::ostream& os) { write_elt_csv(os, result); });
    return 0;
}

int cmd_ratetable_info(const RunConfig& cfg, std::ostream& out) {
    const RateTable table = load_table(cfg);
    out << "RateTable(";
    for (std::size_t a = 0; a < table.axes().size(); ++a) out << (a ? ", " : "") << table.axes()[a];
    out << ")\n";
    for (const auto& axis : table.axes()) out << axis << ": " << join_values(table.available_covariates(axis)) << '\n';
    const auto& basic = table.any();
    auto days = [](int years) { return csv::format_double(years * kDaysPerYear); };
    out << "ages, in years from " << basic.min_age() << " to " << basic.max_age() << " (in days from "
        << days(basic.min_age()) << " to " << days(basic.max_age()) << ")\n";
    out << "date, in years from " << basic.min_date() << " to " << basic.max_date() << " (in days from "
        << days(basic.min_date()) << " to " << days(basic.max_date()) << ")\n";
    return 0;
}

struct Timing {
    std::string task;
    double median = 0, min = 0, max = 0;
};

Timing time_task(const std::string& task, int runs, const std::function<void()>& fn) {
    std::vector<double> seconds;
    for (int r = 0; r < runs; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(seconds.begin(), seconds.end());
    const std::size_t m = seconds.size() / 2;
    const double median = seconds.size() % 2 ? seconds[m] : 0.5 * (seconds[m - 1] + seconds[m]);
    return {task, median, seconds.front(), seconds.back()};
}

int cmd_bench(RunConfig cfg, std::ostream& out) {
    if (cfg.runs < 20) throw Error(ErrorCode::InvalidArgument, "--runs must be at least 20");
    if (cfg.days < 1 || cfg.n < 2) throw Error(ErrorCode::InvalidArgument, "--n must be >= 2 and --days >= 1");
    const bool as_json = json_output(cfg);
    if (cfg.table_file.empty() && cfg.table_name.empty() && cfg.hmd.empty()) cfg.table_name = "demo";
    const RateTable table = load_table(cfg);

    FormulaSpec formula = parse_formula(cfg.formula);
    Cohort cohort;
    DailyGrid grid{cfg.days};
    if (cfg.cohort.empty()) {
        cohort = synthetic_cohort(cfg.n, cfg.days);
    } else {
        cohort = load_cohort(cfg, formula);
        if (cfg.grid > 0) grid = DailyGrid{cfg.grid};
        else grid = DailyGrid::covering(cohort);
    }
    const auto bound = bind_axes(cohort, table, make_binding(cfg));
    const std::span<const Life> lives(bound.lives);
    FormulaSpec by_sex = formula;
    if (by_sex.group_cols.empty() && cohort.has_column("sex")) by_sex.group_cols = {"sex"};
    const Method method = parse_method(cfg.method);

    std::vector<Timing> timings;
    timings.push_back(time_task(std::string("fit ") + std::string(method_name(method)), cfg.runs, [&] {
        (void)fit_net_survival(cohort, lives, method, formula, grid, {cfg.threads});
    }));
    if (!by_sex.group_cols.empty()) {
        GraffeoOptions options;
        options.threads = cfg.threads;
        timings.push_back(time_task("test " + render(by_sex), cfg.runs,
                                    [&] { (void)graffeo_test(cohort, lives, by_sex, grid, options); }));
    }
    timings.push_back(time_task("crude", cfg.runs, [&] {
        const auto fits = fit_net_survival(cohort, lives, method, formula, grid, {cfg.threads});
        const auto km = kaplan_meier(cohort, formula, grid);
        for (std::size_t g = 0; g < fits.size(); ++g) (void)crude_mortality(fits[g], km[g]);
    }));
    const Eigen::VectorXd times = default_time_points(cohort);
    timings.push_back(time_task("nessie", cfg.runs, [&] { (void)nessie(cohort, lives, formula, times, cfg.threads); }));

    emit(cfg.output, out, [&](std::ostream& os) {
        if (as_json) {
            nlohmann::ordered_json doc;
            doc["n"] = cohort.size();
            doc["days"] = grid.t_max;
            doc["runs"] = cfg.runs;
            doc["threads"] = cfg.threads;
            for (const auto& t : timings) {
                doc["timings"].push_back({{"task", t.task}, {"median_s", t.median}, {"min_s", t.min}, {"max_s", t.max}});
            }
            os << doc.dump(1) << '\n';
            return;
        }
        os << "n=" << cohort.size() << " days=" << grid.t_max << " runs=" << cfg.runs << " threads=" << cfg.threads
           << '\n';
        os << std::fixed << std::setprecision(4);
        for (const auto& t : timings) {
            os << t.task << ": median " << t.median << " s (min " << t.min << ", max " << t.max << ")\n";
        }
    });
    return 0;
}

void add_table_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--table-file", cfg.table_file, "Rate table file (netsurv-ratetable/1 format)");
    cmd->add_option("--table", cfg.table_name, "Built-in rate table name (demo)");
    cmd->add_option("--hmd", cfg.hmd, "HMD-style life table CSV as country=path (repeatable)");
}

void add_cohort_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--cohort", cfg.cohort, "Cohort CSV file");
    add_table_options(cmd, cfg);
    cmd->add_option("--formula", cfg.formula, "Formula, e.g. \"Surv(time,status) ~ sex + Strata(stage)\"");
    cmd->add_option("--bind", cfg.binds, "Bind a rate-table axis to a cohort column as axis=column (repeatable)");
    cmd->add_option("--age-col", cfg.age_col, "Age column (days)");
    cmd->add_option("--date-col", cfg.date_col, "Entry date column (default: year, then date)");
    cmd->add_option("--date-format", cfg.date_format, "Entry date encoding: days or iso");
    cmd->add_option("--output,-o", cfg.output, "Output file (default: standard output)");
    cmd->add_option("--format", cfg.format, "Output format: csv or json");
    cmd->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Net survival estimation against population mortality tables", "netsurv"};
    app.require_subcommand(1);

    auto* fit = app.add_subcommand("fit", "Estimate net survival per group");
    add_cohort_options(fit, cfg);
    fit->add_option("--method", cfg.method, "pohar-perme, ederer1 or ederer2");
    fit->add_option("--grid", cfg.grid, "Last day of the daily grid (default: longest follow-up)");
    fit->add_option("--level", cfg.level, "Confidence band level (0.05 gives 95% bands)");
    fit->add_option("--plot", cfg.plot, "Write an SVG plot of the curves to this file");

    auto* test = app.add_subcommand("test", "Log-rank-type test of net survival between groups");
    add_cohort_options(test, cfg);
    test->add_option("--grid", cfg.grid, "Last day of the daily grid (default: longest follow-up)");

    auto* crude = app.add_subcommand("crude", "Crude mortality from disease and other causes");
    add_cohort_options(crude, cfg);
    crude->add_option("--method", cfg.method, "pohar-perme, ederer1 or ederer2");
    crude->add_option("--grid", cfg.grid, "Last day of the daily grid (default: longest follow-up)");

    auto* ness = app.add_subcommand("nessie", "Expected net sample size and expected lifetime");
    add_cohort_options(ness, cfg);
    ness->add_option("--time-points", cfg.time_points, "Comma separated times in years (default: yearly)");
    ness->add_option("--elt-output", cfg.elt_output, "File for the expected lifetime table");

    auto* ratetable = app.add_subcommand("ratetable", "Rate table utilities");
    ratetable->require_subcommand(1);
    auto* info = ratetable->add_subcommand("info", "Print axes, values and bounds of a rate table");
    add_table_options(info, cfg);

    auto* bench = app.add_subcommand("bench", "Time fit, test, crude and nessie");
    bench->add_option("--n", cfg.n, "Synthetic cohort size");
    bench->add_option("--days", cfg.days, "Synthetic follow-up window in days");
    bench->add_option("--runs", cfg.runs, "Repetitions per task (at least 20)");
    bench->add_option("--cohort", cfg.cohort, "Cohort CSV instead of the synthetic cohort");
    add_table_options(bench, cfg);
    bench->add_option("--formula", cfg.formula, "Formula for the fit");
    bench->add_option("--method", cfg.method, "pohar-perme, ederer1 or ederer2");
    bench->add_option("--bind", cfg.binds, "Bind a rate-table axis to a cohort column as axis=column");
    bench->add_option("--grid", cfg.grid, "Last day of the daily grid for --cohort");
    bench->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    bench->add_option("--output,-o", cfg.output, "Output file (default: standard output)");
    bench->add_option("--format", cfg.format, "Output format: csv (plain text) or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error[usage]: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(cfg, out);
        if (test->parsed()) return cmd_test(cfg, out, err);
        if (crude->parsed()) return cmd_crude(cfg, out);
        if (ness->parsed()) return cmd_nessie(cfg, out);
        if (info->parsed()) return cmd_ratetable_info(cfg, out);
        if (bench->parsed()) return cmd_bench(cfg, out);
    } catch (const Error& e) {
        err << "error[" << to_string(e.code()) << "]: " << one_line(e.what()) << '\n';
        return is_validation(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        err << "error[internal]: " << one_line(e.what()) << '\n';
        return 3;
    }
    return 0;
}

} // namespace netsurv::cli
