#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kaplab/kaplab.hpp"
#include "kaplab/runner/runner.hpp"

namespace fs = std::filesystem;
using namespace kaplab;
using namespace kaplab::runner;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::size_t workers = 1;
    double tol_scale = 1.0;
    std::string dir;
    int n_min = 11;
    int n_max = 25;
    int samples = 200;
};

RunOptions run_options(const Options& o) {
    RunOptions r;
    r.tol_scale = o.tol_scale;
    if (!o.out.empty()) r.out_dir = fs::path(o.out);
    return r;
}

void print_verdicts(const std::string& scenario, const std::vector<ClauseVerdict>& verdicts) {
    for (const auto& v : verdicts) {
        std::cout << scenario << ' ' << v.clause << ' ' << (v.pass ? "pass" : v.hypothesis_violation ? "hypothesis-violation" : "fail");
        if (!v.note.empty()) std::cout << " (" << v.note << ')';
        std::cout << '\n';
    }
}

int cmd_steady(const Options& o, bool with_eig) {
    const Config c = load_config(o.config);
    const Pipeline p = build_pipeline(c);
    const fs::path dir = output_dir(c, run_options(o));
    fs::create_directories(dir);
    std::ostringstream steady;
    write_steady_csv(steady, p.steady);
    write_text(dir / "steady.csv", steady.str());
    std::cout << "steady " << p.steady.label << " residual " << p.steady.residual_norm << " leakage "
              << p.steady.boundary_leakage() << '\n';
    if (!with_eig) return exit_ok;
    const EigenPair e = principal_eigenpair(p.linearized);
    std::ostringstream eig;
    write_eigenpair_csv(eig, p.grid, e);
    write_text(dir / "eigenpair.csv", eig.str());
    write_text(dir / "eig.json", eig_json(p.grid, e, p.steady.residual_norm, p.steady.boundary_leakage()).dump(2) + "\n");
    std::cout << "lambda1 " << format_number(e.lambda1()) << " sigma_sq " << format_number(e.sigma_sq) << " residual "
              << e.residual << ' ' << (e.verdict == EigenVerdict::principal ? "principal" : "mixed_sign") << '\n';
    if (e.verdict != EigenVerdict::principal) {
        std::cerr << "hypothesis violation: principal eigenfunction changes sign\n";
        return exit_hypothesis;
    }
    return exit_ok;
}

int cmd_evolve(const Options& o) {
    const Config c = load_config(o.config);
    const auto out = run_config(c, run_options(o));
    if (!out.message.empty()) std::cerr << (out.exit_code == exit_hypothesis ? "hypothesis violation: " : "error: ") << out.message << '\n';
    if (!out.record.samples.empty()) {
        std::cout << c.name << " status " << to_string(out.record.status);
        if (out.record.status == RunStatus::blowup) std::cout << " t* " << format_number(out.record.blowup_time);
        std::cout << " steps " << out.record.stats.steps << '\n';
    }
    print_verdicts(c.name, out.verdicts);
    std::cout << "artifacts " << out.directory.string() << '\n';
    return out.exit_code;
}

int cmd_verify(const Options& o) {
    const auto out = verify_directory(o.dir, o.tol_scale);
    const Config c = load_config(fs::path(o.dir) / "config.yaml");
    std::cout << verdicts_json(c.name, out.verdicts).dump(2) << '\n';
    return out.exit_code;
}

int cmd_batch(const Options& o) {
    const Config c = load_config(o.config);
    const auto rows = run_batch(c, o.workers, run_options(o));
    for (const auto& r : rows) {
        std::cout << c.sweep->parameter << "=" << r.value << " exit " << r.exit_code << " status " << r.status
                  << " clauses " << r.clauses_passed << '/' << r.clauses;
        if (!r.message.empty()) std::cout << " (" << r.message << ')';
        std::cout << '\n';
    }
    return batch_exit_code(rows);
}

int cmd_dichotomy(const Options& o) {
    const auto rows = dichotomy_table(o.n_min, o.n_max, o.samples);
    std::size_t counterexamples = 0;
    for (const auto& r : rows) counterexamples += r.verdict == "counterexample";
    if (o.out.empty()) {
        write_dichotomy_csv(std::cout, rows);
    } else {
        fs::create_directories(o.out);
        std::ostringstream os;
        write_dichotomy_csv(os, rows);
        write_text(fs::path(o.out) / "dichotomy.csv", os.str());
        std::cout << rows.size() << " rows, " << counterexamples << " counterexamples\n";
    }
    return counterexamples == 0 ? exit_ok : exit_clause_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kaplab: instability certification for damped semilinear evolution equations"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", o.config, "scenario config (YAML)");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (overrides output.directory)");
        sub->add_option("--tol-scale", o.tol_scale, "multiplier on rel_slack and inequality_tol")->check(CLI::PositiveNumber);
    };

    auto* eig = app.add_subcommand("eig", "steady state and principal eigenpair of the linearization");
    add_common(eig, true);
    auto* steady = app.add_subcommand("steady", "steady state and its residual");
    add_common(steady, true);
    auto* evolve = app.add_subcommand("evolve", "full run: eigenpair, time integration, clause verdicts");
    add_common(evolve, true);
    auto* verify = app.add_subcommand("verify", "recompute verdicts from a run directory");
    verify->add_option("dir", o.dir, "run directory")->required()->check(CLI::ExistingDirectory);
    verify->add_option("--tol-scale", o.tol_scale, "multiplier on rel_slack and inequality_tol")->check(CLI::PositiveNumber);
    auto* batch = app.add_subcommand("batch", "run every value of the config's sweep block");
    add_common(batch, true);
    batch->add_option("--workers", o.workers, "concurrent runs")->check(CLI::PositiveNumber);
    auto* dichotomy = app.add_subcommand("dichotomy", "stability classification table of power steady states");
    dichotomy->add_option("--out", o.out, "output directory (stdout when omitted)");
    dichotomy->add_option("--n-min", o.n_min, "smallest dimension")->check(CLI::Range(3, 1000));
    dichotomy->add_option("--n-max", o.n_max, "largest dimension")->check(CLI::Range(3, 1000));
    dichotomy->add_option("--samples", o.samples, "p samples per dimension")->check(CLI::Range(2, 1000000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_operational;
    }

    try {
        if (*eig) return cmd_steady(o, true);
        if (*steady) return cmd_steady(o, false);
        if (*evolve) return cmd_evolve(o);
        if (*verify) return cmd_verify(o);
        if (*batch) return cmd_batch(o);
        if (*dichotomy) return cmd_dichotomy(o);
    } catch (const HypothesisViolation& e) {
        std::cerr << "hypothesis violation: " << e.what() << '\n';
        return exit_hypothesis;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_operational;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_operational;
    }
    return exit_operational;
}
