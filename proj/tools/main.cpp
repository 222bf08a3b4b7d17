// Command-line front end: subcommand dispatch, flag handling, and exit-code
// mapping around the experiment harness.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "snapdyn/errors.hpp"
#include "snapdyn/harness.hpp"

namespace {

using snapdyn::harness::CommandResult;
using snapdyn::harness::ExperimentSpec;

// Per-subcommand flag storage.  Convenience flags are kept as strings and
// funneled through the same section.key=value path as --set, so precedence
// is uniform: built-in defaults, then --config, then --set in order, then
// explicit flags.
struct FlagSet {
    CLI::App* sub = nullptr;
    std::string config;
    std::string out, format;
    int workers = 1;
    std::vector<std::string> sets;
    CLI::Option* out_opt = nullptr;
    CLI::Option* format_opt = nullptr;
    CLI::Option* workers_opt = nullptr;

    struct Direct {
        const char* key;
        std::string value;
        CLI::Option* opt = nullptr;
    };
    std::vector<Direct> direct;
};

void add_common(CLI::App* sub, FlagSet& f) {
    f.sub = sub;
    sub->add_option("--config", f.config,
                    "experiment config file ([section] key = value)");
    f.out_opt = sub->add_option("--out", f.out,
                                "output file (default: stdout)");
    f.workers_opt = sub->add_option("--workers", f.workers,
                                    "parallel workers for grid cells");
    f.format_opt = sub->add_option("--format", f.format, "csv or json");
    sub->add_option("--set", f.sets,
                    "config override section.key=value (repeatable)");

    f.direct.reserve(24);
    auto direct = [&](const char* flag, const char* key, const char* help) {
        f.direct.push_back({key, "", nullptr});
        FlagSet::Direct& d = f.direct.back();
        d.opt = sub->add_option(flag, d.value, help);
    };
    direct("--q", "arch.q", "rise-to-thickness ratio Q");
    direct("--a", "arch.a", "as-fabricated mode weights, comma separated");
    direct("--c", "arch.c", "damping coefficient (0 = undamped)");
    direct("--modes", "arch.modes", "mode numbers, comma separated");
    direct("--kind", "load.kind", "load program: static or ramp");
    direct("--eps", "load.eps", "static load step beyond F0");
    direct("--nu", "load.nu", "ramp rate");
    direct("--f0", "load.f0", "initial load, or 'auto'");
    direct("--form", "sim.form", "integrator: auto, full, or overdamped");
    direct("--rtol", "sim.rtol", "relative tolerance");
    direct("--atol", "sim.atol", "absolute tolerance");
    direct("--tau-max", "sim.tau_max", "integration horizon, or 'auto'");
    direct("--lambda", "sim.lambda", "switching cutoff, or 'auto'");
    direct("--sample-dt", "sim.sample_dt", "sample spacing, or 'auto'");
    direct("--path-points", "sim.path_points", "static-path sample count");
    direct("--vary", "compare.vary", "compare axis: eps or nu");
    direct("--grid", "compare.grid", "compare grid: list or lo:hi:n:lin|log");
    direct("--x-grid", "sweep.x_grid", "sweep ratio grid");
    direct("--y", "sweep.y", "sweep second axis: nu or q");
    direct("--y-grid", "sweep.y_grid", "sweep second-axis grid");
}

ExperimentSpec build_spec(const FlagSet& f) {
    ExperimentSpec spec;
    if (!f.config.empty()) spec = ExperimentSpec::from_file(f.config);
    for (const auto& s : f.sets) spec.apply_override(s);
    for (const auto& d : f.direct)
        if (d.opt->count() > 0)
            spec.apply_override(std::string(d.key) + "=" + d.value);
    if (f.workers_opt->count() > 0) spec.workers = f.workers;
    if (f.out_opt->count() > 0) spec.out = f.out;
    if (f.format_opt->count() > 0) spec.format = f.format;
    return spec;
}

int emit(const CommandResult& res, const ExperimentSpec& spec) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!spec.out.empty()) {
        file.open(spec.out);
        if (!file)
            throw snapdyn::ValidationError("cannot open output file '" +
                                           spec.out + "'");
        os = &file;
    }
    if (spec.format == "csv")
        snapdyn::harness::write_csv(res.table, *os);
    else if (spec.format == "json")
        snapdyn::harness::write_json(res.table, *os);
    else
        throw snapdyn::ValidationError("output.format must be csv or json");
    os->flush();
    if (!*os)
        throw snapdyn::ValidationError("failed writing output");
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Shallow-arch switching toolkit: fold analysis, closed-form "
        "switching-time laws, and direct numerical validation"};
    app.require_subcommand(1);

    FlagSet critical, predict, simulate, compare, sweep;
    add_common(app.add_subcommand("critical",
                                  "locate the fold of the force-displacement "
                                  "curve and its normal form"),
               critical);
    add_common(app.add_subcommand("predict",
                                  "closed-form switching time for a load "
                                  "program"),
               predict);
    add_common(app.add_subcommand("simulate",
                                  "integrate one experiment and emit the time "
                                  "series plus the static path"),
               simulate);
    add_common(app.add_subcommand("compare",
                                  "analytic vs numeric switching times over a "
                                  "parameter grid"),
               compare);
    add_common(app.add_subcommand("sweep",
                                  "switching time and force over a "
                                  "two-parameter design grid"),
               sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return snapdyn::harness::kExitValidation;
    }

    try {
        const FlagSet* active = nullptr;
        CommandResult (*cmd)(const ExperimentSpec&) = nullptr;
        if (critical.sub->parsed()) {
            active = &critical;
            cmd = snapdyn::harness::cmd_critical;
        } else if (predict.sub->parsed()) {
            active = &predict;
            cmd = snapdyn::harness::cmd_predict;
        } else if (simulate.sub->parsed()) {
            active = &simulate;
            cmd = snapdyn::harness::cmd_simulate;
        } else if (compare.sub->parsed()) {
            active = &compare;
            cmd = snapdyn::harness::cmd_compare;
        } else {
            active = &sweep;
            cmd = snapdyn::harness::cmd_sweep;
        }
        ExperimentSpec spec = build_spec(*active);
        return emit(cmd(spec), spec);
    } catch (const snapdyn::NotBistable& e) {
        std::cerr << "error: " << e.what() << '\n';
        return snapdyn::harness::kExitNotBistable;
    } catch (const snapdyn::IntegrationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return snapdyn::harness::kExitIntegration;
    } catch (const snapdyn::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return snapdyn::harness::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return snapdyn::harness::kExitUnexpected;
    }
}
