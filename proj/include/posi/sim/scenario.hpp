#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "posi/errors.hpp"
#include "posi/io.hpp"
#include "posi/selectors.hpp"

// Scenario descriptions for the coverage studies, plus the desk-scale presets
// mirroring the published experiments.

namespace posi::sim {

enum class DesignKind { independent, correlated, gaussian_rows };
enum class ErrorDist { normal, laplace, uniform, skew_normal };

inline const char* design_kind_name(DesignKind k) {
    switch (k) {
        case DesignKind::independent: return "independent";
        case DesignKind::correlated: return "correlated";
        case DesignKind::gaussian_rows: return "gaussian_rows";
    }
    return "?";
}

inline const char* error_dist_name(ErrorDist d) {
    switch (d) {
        case ErrorDist::normal: return "normal";
        case ErrorDist::laplace: return "laplace";
        case ErrorDist::uniform: return "uniform";
        case ErrorDist::skew_normal: return "skew_normal";
    }
    return "?";
}

struct Misspec {
    int p_bar = 0;
    std::vector<double> beta_bar;
};

struct CandidateSpec {
    int min_size = 1;
    int max_size = 0; // 0 = p
    std::vector<int> forced;
};

struct ScenarioConfig {
    std::string id = "scenario";
    int n = 0;
    int p = 0;
    long long reps = 1;
    DesignKind design = DesignKind::independent;
    double rho = 0.0; // gaussian_rows only
    ErrorDist error_dist = ErrorDist::normal;
    double skew_shape = 5.0;
    std::vector<double> beta; // explicit vector; presets resolved at load
    std::string beta_preset;  // recorded for the config echo
    sel::Family family = sel::Family::lm;
    sel::SelectorSpec selector;
    double alpha = 0.1;
    std::uint64_t seed = 1;
    std::optional<Misspec> misspec;
    CandidateSpec candidates;
    long long draws = 200000; // Monte-Carlo draws for K constants
    double tau = 1e-9;        // variance floor handed to pseudo_target
    bool naive = true;        // binary scenarios also report the naive row
    bool individual = false;  // lm scenarios also report the posi-xi row

    void validate() const {
        if (n < 2 || p < 1) throw ConfigError("scenario: need n >= 2 and p >= 1");
        if (reps < 1) throw ConfigError("scenario: reps must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("scenario: alpha must lie in (0,1)");
        if (!beta.empty() && static_cast<int>(beta.size()) != p) {
            throw ConfigError("scenario: beta length must equal p");
        }
        if (misspec) {
            if (misspec->p_bar <= p) throw ConfigError("scenario: misspec p_bar must exceed p");
            if (static_cast<int>(misspec->beta_bar.size()) != misspec->p_bar) {
                throw ConfigError("scenario: beta_bar length must equal p_bar");
            }
        }
    }
};

// Named coefficient presets. "dense" is the misspecified binary setting and
// is resolved through the misspec block instead of beta.
inline std::vector<double> resolve_beta_preset(const std::string& name, int n, int p,
                                               sel::Family family) {
    std::vector<double> beta(static_cast<std::size_t>(p), 0.0);
    if (name == "zero") return beta;
    if (name == "sparse") {
        if (family == sel::Family::lm) {
            if (p < 2) throw ConfigError("sparse preset needs p >= 2");
            beta[0] = -4.0;
            beta[1] = 4.0;
        } else {
            beta[0] = 1.0;
        }
        return beta;
    }
    if (name == "scaled") {
        const double s = 1.0 / std::sqrt(static_cast<double>(n));
        for (int j = 0; j < p; ++j) beta[static_cast<std::size_t>(j)] = (j % 2 == 0 ? -s : s);
        return beta;
    }
    throw ConfigError("unknown beta preset: " + name);
}

inline std::vector<double> dense_beta_bar(int p_bar) {
    std::vector<double> b(static_cast<std::size_t>(p_bar), 0.0);
    const double pattern[3] = {-1.5, 1.5, 0.0};
    for (int j = 0; j < p_bar; ++j) b[static_cast<std::size_t>(j)] = pattern[j % 3];
    return b;
}

inline sel::SelectorSpec selector_from_json(const io::json& j) {
    sel::SelectorSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "forward_stepwise") {
        s.kind = sel::SelectorSpec::Kind::forward_stepwise;
        s.k = j.at("k").get<int>();
    } else if (kind == "lar_steps") {
        s.kind = sel::SelectorSpec::Kind::lar_steps;
        s.k = j.at("k").get<int>();
    } else if (kind == "lasso_logistic") {
        s.kind = sel::SelectorSpec::Kind::lasso_logistic;
        s.lambda = j.at("lambda").get<double>();
    } else if (kind == "significance_hunting") {
        s.kind = sel::SelectorSpec::Kind::significance_hunting;
        s.n_best = j.at("n_best").get<int>();
        s.lambda = j.at("lambda").get<double>();
        s.family = sel::family_from_name(j.at("family").get<std::string>());
    } else if (kind == "penalized_loglik") {
        s.kind = sel::SelectorSpec::Kind::penalized_loglik;
        s.lambda = j.at("lambda").get<double>();
        if (j.contains("family")) s.family = sel::family_from_name(j.at("family").get<std::string>());
    } else if (kind == "fixed") {
        s.kind = sel::SelectorSpec::Kind::fixed;
        s.fixed_model = io::model_from_json(j.at("model"));
    } else {
        throw ConfigError("unknown selector kind: " + kind);
    }
    return s;
}

inline io::json selector_to_json(const sel::SelectorSpec& s) {
    io::json j;
    j["kind"] = sel::SelectorSpec::kind_name(s.kind);
    switch (s.kind) {
        case sel::SelectorSpec::Kind::forward_stepwise:
        case sel::SelectorSpec::Kind::lar_steps:
            j["k"] = s.k;
            break;
        case sel::SelectorSpec::Kind::lasso_logistic:
            j["lambda"] = s.lambda;
            break;
        case sel::SelectorSpec::Kind::significance_hunting:
            j["n_best"] = s.n_best;
            j["lambda"] = s.lambda;
            j["family"] = sel::family_name(s.family);
            break;
        case sel::SelectorSpec::Kind::penalized_loglik:
            j["lambda"] = s.lambda;
            j["family"] = sel::family_name(s.family);
            break;
        case sel::SelectorSpec::Kind::fixed:
            j["model"] = io::to_json(s.fixed_model);
            break;
    }
    return j;
}

inline ScenarioConfig scenario_from_json(const io::json& j) {
    ScenarioConfig c;
    try {
        if (j.contains("id")) c.id = j.at("id").get<std::string>();
        c.n = j.at("n").get<int>();
        c.p = j.at("p").get<int>();
        c.reps = j.at("reps").get<long long>();

        const auto& dj = j.at("design");
        const std::string dk = dj.is_string() ? dj.get<std::string>()
                                              : dj.at("kind").get<std::string>();
        if (dk == "independent") c.design = DesignKind::independent;
        else if (dk == "correlated") c.design = DesignKind::correlated;
        else if (dk == "gaussian_rows") c.design = DesignKind::gaussian_rows;
        else throw ConfigError("unknown design kind: " + dk);
        if (!dj.is_string() && dj.contains("rho")) c.rho = dj.at("rho").get<double>();

        if (j.contains("error_dist")) {
            const std::string ed = j.at("error_dist").get<std::string>();
            if (ed == "normal") c.error_dist = ErrorDist::normal;
            else if (ed == "laplace") c.error_dist = ErrorDist::laplace;
            else if (ed == "uniform") c.error_dist = ErrorDist::uniform;
            else if (ed == "skew_normal") c.error_dist = ErrorDist::skew_normal;
            else throw ConfigError("unknown error distribution: " + ed);
        }
        if (j.contains("skew_shape")) c.skew_shape = j.at("skew_shape").get<double>();

        c.family = sel::family_from_name(j.at("family").get<std::string>());
        c.selector = selector_from_json(j.at("selector"));
        c.alpha = j.at("alpha").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();

        if (j.contains("misspec") && !j.at("misspec").is_null()) {
            Misspec ms;
            ms.p_bar = j.at("misspec").at("p_bar").get<int>();
            if (j.at("misspec").contains("beta_bar")) {
                ms.beta_bar = j.at("misspec").at("beta_bar").get<std::vector<double>>();
            } else {
                ms.beta_bar = dense_beta_bar(ms.p_bar);
            }
            c.misspec = std::move(ms);
        }

        const auto& bj = j.at("beta");
        if (bj.is_string()) {
            c.beta_preset = bj.get<std::string>();
            if (c.beta_preset == "dense") {
                if (!c.misspec) {
                    Misspec ms;
                    ms.p_bar = 21;
                    ms.beta_bar = dense_beta_bar(ms.p_bar);
                    c.misspec = std::move(ms);
                }
                c.beta.assign(static_cast<std::size_t>(c.p), 0.0);
            } else {
                c.beta = resolve_beta_preset(c.beta_preset, c.n, c.p, c.family);
            }
        } else {
            c.beta = bj.get<std::vector<double>>();
        }

        if (j.contains("candidates")) {
            const auto& cj = j.at("candidates");
            if (cj.contains("min_size")) c.candidates.min_size = cj.at("min_size").get<int>();
            if (cj.contains("max_size")) c.candidates.max_size = cj.at("max_size").get<int>();
            if (cj.contains("forced")) c.candidates.forced = cj.at("forced").get<std::vector<int>>();
        }
        if (j.contains("draws")) c.draws = j.at("draws").get<long long>();
        if (j.contains("tau")) c.tau = j.at("tau").get<double>();
        if (j.contains("naive")) c.naive = j.at("naive").get<bool>();
        if (j.contains("individual")) c.individual = j.at("individual").get<bool>();
    } catch (const io::json::exception& e) {
        throw ConfigError(std::string("invalid scenario config: ") + e.what());
    }
    c.validate();
    return c;
}

inline io::json scenario_to_json(const ScenarioConfig& c) {
    io::json j;
    j["id"] = c.id;
    j["n"] = c.n;
    j["p"] = c.p;
    j["reps"] = c.reps;
    io::json dj;
    dj["kind"] = design_kind_name(c.design);
    if (c.design == DesignKind::gaussian_rows) dj["rho"] = c.rho;
    j["design"] = std::move(dj);
    j["error_dist"] = error_dist_name(c.error_dist);
    if (c.error_dist == ErrorDist::skew_normal) j["skew_shape"] = c.skew_shape;
    j["family"] = sel::family_name(c.family);
    j["selector"] = selector_to_json(c.selector);
    j["alpha"] = c.alpha;
    j["seed"] = c.seed;
    if (!c.beta_preset.empty()) j["beta"] = c.beta_preset;
    else j["beta"] = c.beta;
    if (c.misspec) {
        io::json ms;
        ms["p_bar"] = c.misspec->p_bar;
        ms["beta_bar"] = c.misspec->beta_bar;
        j["misspec"] = std::move(ms);
    }
    io::json cj;
    cj["min_size"] = c.candidates.min_size;
    cj["max_size"] = c.candidates.max_size == 0 ? c.p : c.candidates.max_size;
    if (!c.candidates.forced.empty()) cj["forced"] = c.candidates.forced;
    j["candidates"] = std::move(cj);
    j["draws"] = c.draws;
    j["tau"] = c.tau;
    j["naive"] = c.naive;
    j["individual"] = c.individual;
    return j;
}

// ---------------------------------------------------------------------------
// Desk-scale presets for the published tables.
// ---------------------------------------------------------------------------

struct PresetInfo {
    std::string name;
    std::string description;
};

inline std::vector<PresetInfo> preset_list() {
    return {
        {"table1", "LM, LAR steps 1-3, independent design, normal errors (n=50, p=10)"},
        {"table1-correlated", "LM, LAR steps 1-3, correlated design, normal errors"},
        {"table1-stepwise", "LM, forward stepwise steps 1-3, independent design"},
        {"table2-zero-nb20", "LM significance hunting, beta=0, n_best=20 (n=100, p=5)"},
        {"table2-zero-nb5", "LM significance hunting, beta=0, n_best=5"},
        {"table2-nonzero-nb20", "LM significance hunting, beta=(2,-1,0,0,1), n_best=20"},
        {"table2-nonzero-nb5", "LM significance hunting, beta=(2,-1,0,0,1), n_best=5"},
        {"table3-zero-small", "Binary lasso selector, beta=0, lambda=0.012n (n=100, p=10)"},
        {"table3-sparse-small", "Binary lasso selector, beta=(1,0,...), lambda=0.012n"},
        {"table3-scaled-small", "Binary lasso selector, scaled beta, lambda=0.012n"},
        {"table3-scaled-large", "Binary lasso selector, scaled beta, lambda=0.05n"},
        {"table3-dense-small", "Binary lasso selector, misspecified dense truth, lambda=0.012n"},
        {"table3-dense-large", "Binary lasso selector, misspecified dense truth, lambda=0.05n"},
        {"table4-zero-nb20", "Binary significance hunting, beta=0, n_best=20 (n=100, p=5, rho=0.8)"},
        {"table4-zero-nb5", "Binary significance hunting, beta=0, n_best=5"},
        {"table4-nonzero-nb20", "Binary significance hunting, beta=(-1,1,0,0,0), n_best=20"},
        {"table4-nonzero-nb5", "Binary significance hunting, beta=(-1,1,0,0,0), n_best=5"},
    };
}

inline ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.id = name;
    c.alpha = 0.1;
    c.seed = 987654321u;

    auto lar_table1 = [&](DesignKind dk) {
        c.n = 50;
        c.p = 10;
        c.reps = 500;
        c.design = dk;
        c.error_dist = ErrorDist::normal;
        c.family = sel::Family::lm;
        c.beta_preset = "sparse"; // (-4, 4, 0, ..., 0)
        c.beta = resolve_beta_preset("sparse", c.n, c.p, c.family);
        c.selector.kind = sel::SelectorSpec::Kind::lar_steps;
        c.selector.k = 3;
        c.draws = 25000; // per-replication constant; SE(K) ~ 0.005
    };
    auto sig_table2 = [&](const std::string& betas, int nbest) {
        c.n = 100;
        c.p = 5;
        c.reps = 500;
        c.design = DesignKind::independent;
        c.error_dist = ErrorDist::normal;
        c.family = sel::Family::lm;
        if (betas == "zero") {
            c.beta_preset = "zero";
            c.beta.assign(5, 0.0);
        } else {
            c.beta = {2.0, -1.0, 0.0, 0.0, 1.0};
        }
        c.selector.kind = sel::SelectorSpec::Kind::significance_hunting;
        c.selector.n_best = nbest;
        c.selector.lambda = 2.0;
        c.selector.family = sel::Family::lm;
        c.draws = 200000;
    };
    auto lasso_table3 = [&](const std::string& betas, double lam_per_n) {
        c.n = 100;
        c.p = 10;
        c.reps = 500;
        c.design = DesignKind::gaussian_rows;
        c.rho = 0.2;
        c.family = sel::Family::bin;
        c.selector.kind = sel::SelectorSpec::Kind::lasso_logistic;
        c.selector.lambda = lam_per_n * c.n;
        if (betas == "dense") {
            c.beta_preset = "dense";
            c.beta.assign(10, 0.0);
            Misspec ms;
            ms.p_bar = 21;
            ms.beta_bar = dense_beta_bar(ms.p_bar);
            c.misspec = std::move(ms);
        } else {
            c.beta_preset = betas;
            c.beta = resolve_beta_preset(betas, c.n, c.p, c.family);
        }
    };
    auto sig_table4 = [&](const std::string& betas, int nbest) {
        c.n = 100;
        c.p = 5;
        c.reps = 500;
        c.design = DesignKind::gaussian_rows;
        c.rho = 0.8;
        c.family = sel::Family::bin;
        if (betas == "zero") {
            c.beta_preset = "zero";
            c.beta.assign(5, 0.0);
        } else {
            c.beta = {-1.0, 1.0, 0.0, 0.0, 0.0};
        }
        c.selector.kind = sel::SelectorSpec::Kind::significance_hunting;
        c.selector.n_best = nbest;
        c.selector.lambda = 2.0;
        c.selector.family = sel::Family::bin;
    };

    if (name == "table1") lar_table1(DesignKind::independent);
    else if (name == "table1-correlated") lar_table1(DesignKind::correlated);
    else if (name == "table1-stepwise") {
        lar_table1(DesignKind::independent);
        c.selector.kind = sel::SelectorSpec::Kind::forward_stepwise;
    } else if (name == "table2-zero-nb20") sig_table2("zero", 20);
    else if (name == "table2-zero-nb5") sig_table2("zero", 5);
    else if (name == "table2-nonzero-nb20") sig_table2("nonzero", 20);
    else if (name == "table2-nonzero-nb5") sig_table2("nonzero", 5);
    else if (name == "table3-zero-small") lasso_table3("zero", 0.012);
    else if (name == "table3-sparse-small") lasso_table3("sparse", 0.012);
    else if (name == "table3-scaled-small") lasso_table3("scaled", 0.012);
    else if (name == "table3-scaled-large") lasso_table3("scaled", 0.05);
    else if (name == "table3-dense-small") lasso_table3("dense", 0.012);
    else if (name == "table3-dense-large") lasso_table3("dense", 0.05);
    else if (name == "table4-zero-nb20") sig_table4("zero", 20);
    else if (name == "table4-zero-nb5") sig_table4("zero", 5);
    else if (name == "table4-nonzero-nb20") sig_table4("nonzero", 20);
    else if (name == "table4-nonzero-nb5") sig_table4("nonzero", 5);
    else throw ConfigError("unknown preset: " + name);

    c.validate();
    return c;
}

} // namespace posi::sim
