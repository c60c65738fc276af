#include "rabi/cli.hpp"

#include "rabi/semiclassics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>
#include <variant>

#ifndef RABI_VERSION
#define RABI_VERSION "0.0.0"
#endif

namespace rabi::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T parse_number(const std::string& text, const char* what) {
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    if (first < last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
        throw UsageError(std::string("cannot parse ") + what + ": '" + text + "'");
    }
    return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

// A table cell: number, integer, flag or text.
using Cell = std::variant<double, std::int64_t, bool, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? "1" : "0";
    return std::get<std::string>(c);
}

nlohmann::json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? nlohmann::json(*d) : nlohmann::json();
    if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
    if (const auto* b = std::get_if<bool>(&c)) return *b;
    return std::get<std::string>(c);
}

void write_table(std::ostream& os, const Table& t, OutputFormat format, std::uint64_t seed) {
    if (format == OutputFormat::csv) {
        os << "# seed=" << seed << " version=" << version() << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
            os << '\n';
        }
        return;
    }
    os << nlohmann::json{{"seed", seed}, {"version", version()}}.dump() << '\n';
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        os << obj.dump() << '\n';
    }
}

void save_table(const Table& t, OutputFormat format, const std::string& path, std::uint64_t seed) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_table(f, t, format, seed);
    f.flush();
    if (!f) throw std::runtime_error("write to " + path + " failed");
}

std::vector<std::string> record_columns() {
    std::vector<std::string> c = {"ratio",       "lambda_rel", "n_qubits", "temperature", "entropy_S",
                                  "corr_C",      "squeeze_sp1", "alpha_cond", "e0"};
    for (int i = 1; i <= kGapCount; ++i) c.push_back("gap" + std::to_string(i));
    c.push_back("n_max_used");
    c.push_back("converged");
    return c;
}

std::vector<Cell> record_row(const ObservableRecord& r) {
    std::vector<Cell> row = {r.ratio,     r.lambda_rel,  std::int64_t(r.n_qubits), r.temperature, r.entropy_S,
                             r.corr_C,    r.squeeze_sp1, r.alpha_cond,             r.e0};
    for (double g : r.gaps) row.emplace_back(g);
    row.emplace_back(std::int64_t(r.n_max_used));
    row.emplace_back(r.converged);
    return row;
}

Table records_table(const std::vector<ObservableRecord>& records) {
    Table t;
    t.columns = record_columns();
    for (const auto& r : records) t.rows.push_back(record_row(r));
    return t;
}

std::function<void(std::size_t, std::size_t)> progress_printer(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.progress) return {};
    return [&log](std::size_t done, std::size_t total) { log << "progress " << done << "/" << total << std::endl; };
}

int status_of(const std::vector<ObservableRecord>& records) {
    for (const auto& r : records) {
        if (!r.converged) return 2;
    }
    return 0;
}

SweepOptions sweep_options(const RunConfig& cfg, std::ostream& log) {
    SweepOptions o;
    o.solve = cfg.solve;
    o.threads = cfg.threads;
    o.progress = progress_printer(cfg, log);
    return o;
}

int run_spectrum_command(const RunConfig& cfg, std::ostream& log) {
    const std::vector<LevelRecord> levels = run_spectrum(cfg.grid, cfg.trunc, cfg.levels, sweep_options(cfg, log));
    Table t;
    t.columns = {"ratio", "lambda_rel", "n_qubits"};
    for (int i = 0; i < cfg.levels; ++i) t.columns.push_back("E" + std::to_string(i));
    t.columns.push_back("n_max_used");
    t.columns.push_back("converged");
    int status = 0;
    for (const auto& r : levels) {
        std::vector<Cell> row = {r.ratio, r.lambda_rel, std::int64_t(r.n_qubits)};
        for (double e : r.levels) row.emplace_back(e);
        row.emplace_back(std::int64_t(r.n_max_used));
        row.emplace_back(r.converged);
        t.rows.push_back(std::move(row));
        if (!r.converged) status = 2;
    }
    save_table(t, cfg.format, cfg.out, cfg.seed);
    return status;
}

int run_slope_command(const RunConfig& cfg, std::ostream& log) {
    std::ifstream f(cfg.in);
    if (!f) throw std::runtime_error("cannot open " + cfg.in);
    const std::vector<ObservableRecord> records = read_records(f);

    // Series per (ratio, N, T), in order of first appearance.
    using Key = std::tuple<double, int, double>;
    std::map<Key, std::vector<std::size_t>> groups;
    std::vector<Key> order;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Key k{records[i].ratio, records[i].n_qubits, records[i].temperature};
        if (!groups.count(k)) order.push_back(k);
        groups[k].push_back(i);
    }
    std::vector<double> log_dist(records.size(), kNaN), slope(records.size(), kNaN);
    for (const Key& k : order) {
        std::vector<ObservableRecord> group;
        for (std::size_t i : groups[k]) group.push_back(records[i]);
        for (std::size_t i : groups[k]) {
            if (records[i].lambda_rel > 1.0) log_dist[i] = std::log10(records[i].lambda_rel - 1.0);
        }
        SlopeSeries series;
        try {
            series = entropy_slope_series(group);
        } catch (const std::invalid_argument&) {
            log << "ratio=" << format_double(std::get<0>(k)) << " n_qubits=" << std::get<1>(k)
                << ": fewer than 3 points above lambda_c with S > 0, no slopes\n";
            continue;
        }
        for (std::size_t j = 1; j + 1 < series.x.size(); ++j) {
            for (std::size_t i : groups[k]) {
                if (log_dist[i] == series.x[j]) slope[i] = series.slopes[j - 1];
            }
        }
        if (cfg.has_slope_at) {
            log << "ratio=" << format_double(std::get<0>(k)) << " n_qubits=" << std::get<1>(k)
                << " temperature=" << format_double(std::get<2>(k)) << " slope_at="
                << format_double(cfg.slope_at) << " slope=" << format_double(loglog_slope(series, cfg.slope_at))
                << '\n';
        }
    }
    Table t = records_table(records);
    t.columns.push_back("log_dist");
    t.columns.push_back("slope_log_S");
    for (std::size_t i = 0; i < records.size(); ++i) {
        t.rows[i].emplace_back(log_dist[i]);
        t.rows[i].emplace_back(slope[i]);
    }
    save_table(t, cfg.format, cfg.out, cfg.seed);
    return status_of(records);
}

int run_semiclassical_command(const RunConfig& cfg, std::ostream& log) {
    Table t;
    t.columns = {"ratio", "lambda_rel", "n_qubits", "lambda_c", "side", "gap_below", "gap_above", "alpha_full",
                 "alpha_near"};
    for (const SweepPoint& p : cfg.grid.points()) {
        const SemiclassicalPrediction s =
            predict(ModelSpec::from_ratios(p.ratio, p.lambda_rel, p.n_qubits, cfg.grid.epsilon));
        t.rows.push_back({p.ratio, p.lambda_rel, std::int64_t(p.n_qubits), s.lambda_c,
                          std::string(side_name(s.valid_side)), s.gap_below, s.gap_above, s.alpha_full,
                          s.alpha_near});
    }
    if (cfg.out.empty()) {
        write_table(std::cout, t, cfg.format, cfg.seed);
    } else {
        save_table(t, cfg.format, cfg.out, cfg.seed);
    }
    return 0;
}

}  // namespace

const char* version() { return RABI_VERSION; }

const char* command_name(Command c) {
    switch (c) {
        case Command::sweep: return "sweep";
        case Command::spectrum: return "spectrum";
        case Command::thermal: return "thermal";
        case Command::slope: return "slope";
        case Command::semiclassical: return "semiclassical";
    }
    return "?";
}

std::vector<double> parse_grid(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw UsageError("grid must be start:stop:count, got '" + text + "'");
        const double start = parse_number<double>(parts[0], "grid start");
        const double stop = parse_number<double>(parts[1], "grid stop");
        const int count = parse_number<int>(parts[2], "grid count");
        if (count < 1) throw UsageError("grid count must be >= 1 in '" + text + "'");
        try {
            return linear_grid(start, stop, count);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    std::vector<double> values;
    for (const auto& part : split(text, ',')) values.push_back(parse_number<double>(part, "grid value"));
    if (values.empty()) throw UsageError("empty grid");
    return values;
}

std::vector<double> parse_log_distance_grid(const std::string& text) {
    std::vector<double> v = parse_grid(text);
    for (double& x : v) x = 1.0 + std::pow(10.0, x);
    return v;
}

RunConfig parse_config(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"Exact diagonalisation of the Rabi and Dicke models near the superradiance transition", "rabi"};
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "Read `key = value` options from a file (flags take precedence)");
    app.allow_config_extras(false);
    app.set_version_flag("--version", std::string(version()));

    std::string ratio = "1e-2";
    std::string lambda_rel = "0:1.5:16";
    std::string lambda_log;
    std::string n_qubits = "1";
    std::string temperature = "0,1,5";
    std::string solver = "auto";
    std::string format = "csv";

    app.add_option("--ratio", ratio, "omega0/delta grid")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::Join)->capture_default_str();
    auto* o_lin = app.add_option("--lambda-rel", lambda_rel, "lambda/lambda_c grid, start:stop:count or a,b,...")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::Join)
                      ->capture_default_str();
    auto* o_log = app.add_option("--lambda-dist-log", lambda_log,
                                 "log10(lambda/lambda_c - 1) grid, start:stop:count or a,b,...")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    app.add_option("--n-qubits", n_qubits, "comma-separated qubit counts")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::Join)->capture_default_str();
    auto* o_temp = app.add_option("--temperature", temperature, "temperature grid in units of delta (thermal)")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::Join)
                       ->capture_default_str();
    app.add_option("--epsilon", cfg.grid.epsilon, "qubit bias")->capture_default_str();
    app.add_option("--n-max", cfg.trunc.n_max, "lower bound on the first Fock cutoff")->capture_default_str();
    app.add_option("--growth", cfg.trunc.growth_factor, "cutoff growth factor per round")->capture_default_str();
    app.add_option("--tol-energy", cfg.trunc.tol_energy, "relative E0 change for convergence")
        ->capture_default_str();
    app.add_option("--tol-observable", cfg.trunc.tol_observable, "absolute S, C, s_p+1 change for convergence")
        ->capture_default_str();
    app.add_option("--max-rounds", cfg.trunc.max_rounds, "cutoff rounds before giving up")->capture_default_str();
    app.add_option("--max-dimension", cfg.trunc.max_dimension, "largest spin x Fock dimension tried")
        ->capture_default_str();
    app.add_option("--solver", solver, "auto, dense, lanczos or banded")->capture_default_str();
    app.add_option("--dense-cap", cfg.solve.dense_cap, "largest dimension the dense solver accepts")
        ->capture_default_str();
    app.add_option("--levels", cfg.levels, "levels written by spectrum")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed for iterative start vectors")->capture_default_str();
    app.add_option("--threads", cfg.threads, "worker threads, 0 uses RABI_THREADS or all cores")
        ->capture_default_str();
    app.add_option("--out", cfg.out, "output file");
    app.add_option("--in", cfg.in, "sweep CSV read by slope");
    auto* o_at = app.add_option("--at", cfg.slope_at, "slope: print the slope nearest this log10 distance");
    app.add_option("--format", format, "csv or jsonl")->capture_default_str();
    app.add_flag("--progress", cfg.progress, "report progress on stderr");

    auto* c_sweep = app.add_subcommand("sweep", "ground-state records over the grid");
    auto* c_spectrum = app.add_subcommand("spectrum", "lowest levels over the grid");
    auto* c_thermal = app.add_subcommand("thermal", "Gibbs records over the grid and temperatures");
    auto* c_slope = app.add_subcommand("slope", "append log-log entropy slopes to a sweep CSV");
    auto* c_semi = app.add_subcommand("semiclassical", "closed-form predictions over the grid");
    for (auto* c : {c_sweep, c_spectrum, c_thermal, c_slope, c_semi}) c->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        std::ostringstream os;
        app.exit(e, os, os);
        throw InfoRequested{os.str()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (*c_sweep) cfg.command = Command::sweep;
    if (*c_spectrum) cfg.command = Command::spectrum;
    if (*c_thermal) cfg.command = Command::thermal;
    if (*c_slope) cfg.command = Command::slope;
    if (*c_semi) cfg.command = Command::semiclassical;

    if (o_lin->count() > 0 && o_log->count() > 0) {
        throw UsageError("--lambda-rel and --lambda-dist-log are mutually exclusive");
    }
    cfg.grid.ratios = parse_grid(ratio);
    cfg.grid.lambda_rel = o_log->count() > 0 ? parse_log_distance_grid(lambda_log) : parse_grid(lambda_rel);
    cfg.grid.n_qubits.clear();
    for (const auto& part : split(n_qubits, ',')) cfg.grid.n_qubits.push_back(parse_number<int>(part, "N"));
    if (cfg.command == Command::thermal) {
        cfg.grid.temperatures = parse_grid(temperature);
    } else if (o_temp->count() > 0) {
        throw UsageError("--temperature only applies to thermal");
    }
    cfg.has_slope_at = o_at->count() > 0;
    try {
        cfg.solve.solver = parse_solver_kind(solver);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    cfg.solve.seed = cfg.seed;
    if (format == "csv") {
        cfg.format = OutputFormat::csv;
    } else if (format == "jsonl" || format == "json-lines") {
        cfg.format = OutputFormat::jsonl;
    } else {
        throw UsageError("unknown format: " + format);
    }
    if (cfg.out.empty() && cfg.command != Command::semiclassical) throw UsageError("--out is required");
    if (cfg.command == Command::slope && cfg.in.empty()) throw UsageError("slope needs --in");
    if (cfg.levels < 1) throw UsageError("--levels must be >= 1");
    if (cfg.threads < 0) throw UsageError("--threads must be >= 0");
    try {
        cfg.grid.validate();
        cfg.trunc.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_header() {
    std::string h;
    for (const auto& c : record_columns()) h += (h.empty() ? "" : ",") + c;
    return h;
}

void write_records(std::ostream& os, const std::vector<ObservableRecord>& records, OutputFormat format,
                   std::uint64_t seed) {
    write_table(os, records_table(records), format, seed);
}

void emit_records(const std::vector<ObservableRecord>& records, OutputFormat format, const std::string& path,
                  std::uint64_t seed) {
    save_table(records_table(records), format, path, seed);
}

std::vector<ObservableRecord> read_records(std::istream& is) {
    std::string line;
    bool header = false;
    std::size_t width = 0;
    std::vector<ObservableRecord> out;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split(line, ',');
        if (!header) {
            const auto want = record_columns();
            if (fields.size() < want.size() || !std::equal(want.begin(), want.end(), fields.begin())) {
                throw std::runtime_error("not a sweep CSV: unexpected header");
            }
            header = true;
            width = fields.size();
            continue;
        }
        if (fields.size() != width) throw std::runtime_error("line " + std::to_string(line_no) + ": wrong field count");
        auto num = [&](std::size_t i) {
            const std::string& f = fields[i];
            if (f == "nan") return kNaN;
            if (f == "inf") return std::numeric_limits<double>::infinity();
            if (f == "-inf") return -std::numeric_limits<double>::infinity();
            try {
                return parse_number<double>(f, "field");
            } catch (const UsageError&) {
                throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" + f + "'");
            }
        };
        ObservableRecord r;
        r.ratio = num(0);
        r.lambda_rel = num(1);
        r.n_qubits = int(num(2));
        r.temperature = num(3);
        r.entropy_S = num(4);
        r.corr_C = num(5);
        r.squeeze_sp1 = num(6);
        r.alpha_cond = num(7);
        r.e0 = num(8);
        for (int g = 0; g < kGapCount; ++g) r.gaps[std::size_t(g)] = num(std::size_t(9 + g));
        r.n_max_used = std::int64_t(num(9 + kGapCount));
        r.converged = fields[10 + kGapCount] == "1" || fields[10 + kGapCount] == "true";
        out.push_back(r);
    }
    if (!header) throw std::runtime_error("not a sweep CSV: no header");
    return out;
}

int run(const RunConfig& cfg, std::ostream& log) {
    switch (cfg.command) {
        case Command::sweep:
        case Command::thermal: {
            const auto records = run_sweep(cfg.grid, cfg.trunc, sweep_options(cfg, log));
            emit_records(records, cfg.format, cfg.out, cfg.seed);
            return status_of(records);
        }
        case Command::spectrum: return run_spectrum_command(cfg, log);
        case Command::slope: return run_slope_command(cfg, log);
        case Command::semiclassical: return run_semiclassical_command(cfg, log);
    }
    return 1;
}

}  // namespace rabi::cli
