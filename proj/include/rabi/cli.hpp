// cli.hpp - command-line configuration, record output and the subcommands
// behind the `rabi` executable
#pragma once

#include "rabi/criticality.hpp"
#include "rabi/eigensolver.hpp"
#include "rabi/model.hpp"
#include "rabi/records.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rabi::cli {

const char* version();

enum class Command { sweep, spectrum, thermal, slope, semiclassical };
enum class OutputFormat { csv, jsonl };

const char* command_name(Command c);

struct RunConfig {
    Command command{Command::sweep};
    SweepGrid grid;
    TruncationConfig trunc;
    SolveOptions solve;
    int threads{0};
    int levels{kGapCount + 1};  // spectrum only
    std::string out;            // required except for semiclassical
    std::string in;             // slope only
    double slope_at{0.0};       // slope: report the slope nearest this log10 distance
    bool has_slope_at{false};
    OutputFormat format{OutputFormat::csv};
    std::uint64_t seed{kDefaultSeed};
    bool progress{false};
};

// Bad flags, unknown config keys, unparsable numbers, conflicting grids.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --help / --version; `text` is what to print.
struct InfoRequested {
    std::string text;
};

// argv[0] is the program name. Options may come from `--config FILE`
// (`key = value` lines, `#` comments); flags given on the command line win.
// Throws UsageError or InfoRequested.
RunConfig parse_config(int argc, const char* const* argv);

// "start:stop:count" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);
// Same syntax, values are log10(lambda/lambda_c - 1).
std::vector<double> parse_log_distance_grid(const std::string& text);

// Shortest decimal that reads back to the same double; "nan", "inf", "-inf"
// for non-finite values.
std::string format_double(double x);

// ratio,lambda_rel,...,gap10,n_max_used,converged
std::string csv_header();

void write_records(std::ostream& os, const std::vector<ObservableRecord>& records, OutputFormat format,
                   std::uint64_t seed);

// Writes to `path`; throws std::runtime_error on I/O failure.
void emit_records(const std::vector<ObservableRecord>& records, OutputFormat format, const std::string& path,
                  std::uint64_t seed);

// Reads a CSV written by write_records. Throws std::runtime_error on a
// malformed header or row.
std::vector<ObservableRecord> read_records(std::istream& is);

// Runs the configured command. Returns the process exit status: 0 when every
// point converged, 2 otherwise. Errors propagate as exceptions.
int run(const RunConfig& config, std::ostream& log);

}  // namespace rabi::cli
