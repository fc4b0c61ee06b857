#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "posi/binreg.hpp"
#include "posi/constants.hpp"
#include "posi/hetlm.hpp"
#include "posi/io.hpp"
#include "posi/lm.hpp"
#include "posi/sim/harness.hpp"

namespace {

using posi::io::json;

struct ConstantArgs {
    std::string corr_path;
    double alpha = 0.1;
    long long draws = 200000;
    std::uint64_t seed = 1;
    long long q = 1;
    long long big_n = 1;
    double tol = 1e-4;
};

struct CiArgs {
    std::string design_path;
    std::string response_path;
    std::string candidates_path;
    std::string selected;
    double alpha = 0.1;
    long long draws = 200000;
    std::uint64_t seed = 1;
    bool individual = false;
    bool naive = false;
};

struct SimulateArgs {
    std::string config_path;
    std::string preset;
    std::string out_path;
    int threads = 1;
};

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int run_k_quantile(const ConstantArgs& a) {
    const Eigen::MatrixXd m = posi::io::read_square_csv(a.corr_path);
    const auto corr = posi::CorrelationMatrix::from_correlation(m);
    const auto c = posi::k_quantile(corr, a.alpha, a.draws, a.seed);
    print_json(posi::io::to_json(c));
    return 0;
}

int run_b_alpha(const ConstantArgs& a) {
    const auto c = posi::b_alpha(a.q, a.big_n, a.alpha, a.tol);
    print_json(posi::io::to_json(c));
    return 0;
}

int run_lm_ci(const CiArgs& a) {
    const auto x = posi::io::read_design_csv(a.design_path);
    const auto y = posi::io::read_vector_csv(a.response_path);
    const auto candidates = posi::io::read_candidates_json(a.candidates_path);
    const auto selected = posi::io::parse_model_arg(a.selected);
    if (a.individual) {
        const auto xi = posi::lm::xi_matrix(x, candidates);
        const auto c = posi::k_quantile(xi, a.alpha, a.draws, a.seed);
        print_json(posi::io::to_json(
            posi::lm::ci_individual(x, y, candidates, a.alpha, selected, c)));
    } else {
        const auto gb = posi::lm::gamma_blocks(x, candidates);
        const auto c = posi::k_quantile(gb.corr, a.alpha, a.draws, a.seed);
        print_json(posi::io::to_json(posi::lm::ci_lm(x, y, candidates, a.alpha, selected, c)));
    }
    return 0;
}

int run_hetlm_ci(const CiArgs& a) {
    const auto x = posi::io::read_design_csv(a.design_path);
    const auto y = posi::io::read_vector_csv(a.response_path);
    const auto candidates = posi::io::read_candidates_json(a.candidates_path);
    const auto selected = posi::io::parse_model_arg(a.selected);
    print_json(posi::io::to_json(posi::hetlm::ci_hlm(x, y, candidates, a.alpha, selected)));
    return 0;
}

int run_bin_ci(const CiArgs& a) {
    const auto x = posi::io::read_design_csv(a.design_path);
    const auto y = posi::io::read_vector_csv(a.response_path);
    const auto candidates = posi::io::read_candidates_json(a.candidates_path);
    posi::CandidateModel selected = posi::io::parse_model_arg(a.selected);
    if (selected.link == posi::Link::none) selected.link = posi::Link::logit;
    const auto cs = a.naive ? posi::bin::naive_ci_bin(x, y, candidates, a.alpha, selected)
                            : posi::bin::ci_bin(x, y, candidates, a.alpha, selected);
    print_json(posi::io::to_json(cs));
    return 0;
}

int run_simulate(const SimulateArgs& a) {
    posi::sim::ScenarioConfig config;
    if (!a.preset.empty()) {
        config = posi::sim::preset(a.preset);
    } else if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) throw posi::ConfigError("cannot open config: " + a.config_path);
        json j;
        in >> j;
        config = posi::sim::scenario_from_json(j);
    } else {
        throw posi::ConfigError("simulate requires --config or --preset");
    }
    const auto report = posi::sim::run_scenario(config, a.threads);
    const std::string csv = posi::sim::report_csv(report);
    if (a.out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(a.out_path);
        if (!out) throw posi::ConfigError("cannot write report: " + a.out_path);
        out << csv;
        std::ofstream side(a.out_path + ".config.json");
        side << report.config_echo.dump(2) << "\n";
    }
    std::cerr << "completed " << config.reps << " replications in " << report.wall_seconds
              << " s\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"post-selection confidence intervals"};
    app.require_subcommand(1);

    ConstantArgs cargs;
    CiArgs ciargs;
    SimulateArgs simargs;
    std::string preset_name;

    auto* constant = app.add_subcommand("constant", "critical-value computations");
    constant->require_subcommand(1);
    auto* kq = constant->add_subcommand("k-quantile", "simultaneous Gaussian quantile");
    kq->add_option("--corr", cargs.corr_path, "headerless k x k correlation CSV")->required();
    kq->add_option("--alpha", cargs.alpha, "level in (0,1)");
    kq->add_option("--draws", cargs.draws, "Monte-Carlo draws");
    kq->add_option("--seed", cargs.seed, "RNG seed");
    auto* ba = constant->add_subcommand("b-alpha", "universal bound constant");
    ba->add_option("--q", cargs.q, "rank argument")->required();
    ba->add_option("--big-n", cargs.big_n, "number of coordinates")->required();
    ba->add_option("--alpha", cargs.alpha, "level in (0,1)");
    ba->add_option("--tol", cargs.tol, "bisection tolerance in t");

    auto add_ci_options = [&](CLI::App* sub) {
        sub->add_option("--design", ciargs.design_path, "design CSV with header row")->required();
        sub->add_option("--response", ciargs.response_path, "response CSV")->required();
        sub->add_option("--candidates", ciargs.candidates_path, "candidate-set JSON")->required();
        sub->add_option("--alpha", ciargs.alpha, "level in (0,1)");
        sub->add_option("--selected", ciargs.selected, "selected model, e.g. \"1,3\"")->required();
    };

    auto* lmcmd = app.add_subcommand("lm", "homoskedastic linear models");
    auto* lmci = lmcmd->add_subcommand("ci", "post-selection intervals");
    add_ci_options(lmci);
    lmci->add_option("--draws", ciargs.draws, "Monte-Carlo draws for the constant");
    lmci->add_option("--seed", ciargs.seed, "RNG seed for the constant");
    lmci->add_flag("--individual", ciargs.individual, "coefficient-1 interval with the Xi constant");

    auto* hetcmd = app.add_subcommand("hetlm", "heteroskedastic linear models");
    auto* hetci = hetcmd->add_subcommand("ci", "post-selection intervals (Eicker + bound)");
    add_ci_options(hetci);

    auto* bincmd = app.add_subcommand("bin", "binary regression");
    auto* binci = bincmd->add_subcommand("ci", "post-selection intervals (sandwich + bound)");
    add_ci_options(binci);
    binci->add_flag("--naive", ciargs.naive, "naive interval instead of the POSI one");

    auto* simcmd = app.add_subcommand("simulate", "run a coverage scenario");
    simcmd->add_option("--config", simargs.config_path, "scenario JSON");
    simcmd->add_option("--preset", simargs.preset, "named preset (see `posi presets list`)");
    simcmd->add_option("--out", simargs.out_path, "report CSV path (stdout when omitted)");
    simcmd->add_option("--threads", simargs.threads, "worker count");

    auto* presets = app.add_subcommand("presets", "preset scenarios");
    auto* plist = presets->add_subcommand("list", "list available presets");
    auto* pshow = presets->add_subcommand("show", "print a preset config as JSON");
    pshow->add_option("name", preset_name, "preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (kq->parsed()) return run_k_quantile(cargs);
        if (ba->parsed()) return run_b_alpha(cargs);
        if (lmci->parsed()) return run_lm_ci(ciargs);
        if (hetci->parsed()) return run_hetlm_ci(ciargs);
        if (binci->parsed()) return run_bin_ci(ciargs);
        if (simcmd->parsed()) return run_simulate(simargs);
        if (plist->parsed()) {
            for (const auto& p : posi::sim::preset_list()) {
                std::cout << p.name << "\t" << p.description << "\n";
            }
            return 0;
        }
        if (pshow->parsed()) {
            print_json(posi::sim::scenario_to_json(posi::sim::preset(preset_name)));
            return 0;
        }
    } catch (const posi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const posi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
