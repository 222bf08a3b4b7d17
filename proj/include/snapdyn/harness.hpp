#pragma once
// Experiment harness and CLI back end: declarative experiment specs parsed
// from an INI-style config file plus dotted-key overrides, command
// implementations (critical / predict / simulate / compare / sweep), a
// worker pool for grid cells, and CSV/JSON emission with stable schemas and
// shortest-roundtrip numeric formatting.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace snapdyn::harness {

inline constexpr int kSchemaVersion = 1;

// Exit codes shared by the CLI and tests.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnexpected = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotBistable = 3;
inline constexpr int kExitIntegration = 4;

// A numeric grid: either an explicit comma list ("1,2,5") or a range spec
// "lo:hi:n:lin" / "lo:hi:n:log" (log spacing requires positive endpoints).
struct GridSpec {
    std::vector<double> values;
    bool empty() const { return values.empty(); }
    static GridSpec parse(const std::string& text);
};

// Fully resolved experiment description.  Populated from built-in defaults,
// then an optional config file, then --set overrides, in that order.
struct ExperimentSpec {
    // [arch] (nondimensional) or [geometry] (dimensional; converted on use)
    bool dimensional = false;
    double q = 6.0;
    std::vector<double> a{1.0};
    double c = 100.0;
    std::vector<int> modes;  // empty selects the default ladder 1, 5, 9, ...
    // [geometry]
    double span = 0.0, thickness = 0.0, width = 0.0, modulus = 0.0,
           density = 0.0, rise = 0.0, c_dim = 0.0;

    // [load]
    std::string load_kind = "static";  // "static" | "ramp"
    double eps = 1e-2;
    double nu = 0.0;
    bool f0_auto = true;  // static: F0 = F_c; ramp: F0 = 0
    double f0 = 0.0;

    // [sim]
    std::string form = "auto";  // "auto" | "full" | "overdamped"
    double rtol = 1e-12, atol = 1e-12;
    double tau_max = 0.0;  // <= 0: choose from the analytic prediction
    double lambda = 0.0;   // <= 0: default cutoff
    double sample_dt = -1.0;  // < 0: choose per experiment
    double path_points = 241; // static-path resolution for simulate

    // [compare]
    std::string vary = "eps";  // "eps" | "nu"
    GridSpec grid;

    // [sweep]
    std::string x = "ratio";  // secondary/primary weight ratio a2/a1
    GridSpec x_grid;
    std::string y = "nu";  // "nu" | "q"
    GridSpec y_grid;

    // output
    std::string out;  // empty = stdout
    int workers = 1;
    std::string format = "csv";  // "csv" | "json"

    static ExperimentSpec from_file(const std::string& path);
    // Applies "section.key=value" (same grammar as the config file).
    void apply_override(const std::string& assignment);
};

// ---------------------------------------------------------------------------
// Tabular output
// ---------------------------------------------------------------------------

struct Cell {
    enum class Kind { number, text, empty };
    Kind kind = Kind::empty;
    double num = 0.0;
    std::string text;

    static Cell n(double v);  // NaN collapses to empty
    static Cell t(std::string s);
    static Cell none() { return {}; }
};

struct Table {
    std::string command;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    void add(std::vector<Cell> row);
};

// Shortest-roundtrip decimal form of v.
std::string format_double(double v);
void write_csv(const Table& t, std::ostream& os);
void write_json(const Table& t, std::ostream& os);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandResult {
    Table table;
    int exit_code = kExitOk;
};

// One analytic-vs-numeric comparison cell.
struct ResultRow {
    double q = 0, c = 0, eps = 0, nu = 0;        // inputs echoed
    double K = 0, load_coefficient = 0, F_c = 0, delta_c = 0;
    double tau_c = 0;
    double delay_analytic = 0, tau_analytic = 0;
    double delay_numeric = 0, tau_numeric = 0;
    double F_switch_numeric = 0, F_switch_analytic = 0;
    double rel_err = 0;  // |tau_numeric - tau_analytic| / tau_numeric
    std::string status = "ok";
};

CommandResult cmd_critical(const ExperimentSpec& spec);
CommandResult cmd_predict(const ExperimentSpec& spec);
CommandResult cmd_simulate(const ExperimentSpec& spec);
CommandResult cmd_compare(const ExperimentSpec& spec);
CommandResult cmd_sweep(const ExperimentSpec& spec);

// Comparison cells behind cmd_compare (exposed for tests); per-cell failures
// are captured in ResultRow::status, never thrown.
std::vector<ResultRow> compare_rows(const ExperimentSpec& spec);

// Least-squares slope of log10(y) against log10(x); x, y must be positive
// and equally sized with at least two points.
double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y);

} // namespace snapdyn::harness
