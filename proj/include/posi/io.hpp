#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "posi/confidence.hpp"
#include "posi/design.hpp"
#include "posi/errors.hpp"

namespace posi::io {

using json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim whitespace
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

inline bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace detail

// Design CSV: header row of column names, then numeric rows.
inline DesignMatrix read_design_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.size() < 2) throw ConfigError("design CSV needs a header row and data rows: " + path);
    const auto names = detail::split_csv_line(lines[0]);
    const std::size_t p = names.size();
    Eigen::MatrixXd values(static_cast<Eigen::Index>(lines.size() - 1),
                           static_cast<Eigen::Index>(p));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = detail::split_csv_line(lines[r]);
        if (cells.size() != p) throw ConfigError("design CSV row width mismatch: " + path);
        for (std::size_t c = 0; c < p; ++c) {
            double v;
            if (!detail::parse_double(cells[c], v)) {
                throw ConfigError("design CSV has a non-numeric cell: " + cells[c]);
            }
            values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return DesignMatrix(std::move(values), names);
}

// Response CSV: one value per line; a single leading non-numeric line is
// treated as a header and skipped.
inline Eigen::VectorXd read_vector_csv(const std::string& path) {
    auto lines = detail::read_lines(path);
    if (lines.empty()) throw ConfigError("empty response file: " + path);
    double v;
    std::size_t start = detail::parse_double(detail::split_csv_line(lines[0])[0], v) ? 0 : 1;
    Eigen::VectorXd y(static_cast<Eigen::Index>(lines.size() - start));
    for (std::size_t i = start; i < lines.size(); ++i) {
        if (!detail::parse_double(detail::split_csv_line(lines[i])[0], v)) {
            throw ConfigError("response CSV has a non-numeric entry: " + lines[i]);
        }
        y[static_cast<Eigen::Index>(i - start)] = v;
    }
    return y;
}

// Correlation CSV: headerless, k rows of k comma-separated floats.
inline Eigen::MatrixXd read_square_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    const std::size_t k = lines.size();
    if (k == 0) throw ConfigError("empty matrix file: " + path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < k; ++r) {
        const auto cells = detail::split_csv_line(lines[r]);
        if (cells.size() != k) throw ConfigError("matrix CSV is not square: " + path);
        for (std::size_t c = 0; c < k; ++c) {
            double v;
            if (!detail::parse_double(cells[c], v)) {
                throw ConfigError("matrix CSV has a non-numeric cell: " + cells[c]);
            }
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return m;
}

inline CandidateModel model_from_json(const json& j) {
    std::vector<int> idx = j.at("indices").get<std::vector<int>>();
    std::sort(idx.begin(), idx.end());
    Link link = Link::none;
    if (j.contains("link")) link = link_from_name(j.at("link").get<std::string>());
    return CandidateModel(std::move(idx), link);
}

inline CandidateSet candidates_from_json(const json& j) {
    std::vector<CandidateModel> models;
    for (const auto& m : j.at("models")) models.push_back(model_from_json(m));
    return CandidateSet(std::move(models));
}

inline CandidateSet read_candidates_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open candidate file: " + path);
    json j;
    in >> j;
    return candidates_from_json(j);
}

// "1,3" -> CandidateModel{1,3}; also accepts the JSON object form.
inline CandidateModel parse_model_arg(const std::string& arg) {
    const auto first = arg.find_first_not_of(" \t");
    if (first != std::string::npos && arg[first] == '{') {
        return model_from_json(json::parse(arg));
    }
    std::vector<int> idx;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        idx.push_back(std::stoi(tok));
    }
    std::sort(idx.begin(), idx.end());
    return CandidateModel(std::move(idx));
}

inline json to_json(const PosiConstant& c) {
    json j;
    j["value"] = c.value;
    j["alpha"] = c.alpha;
    j["method"] = PosiConstant::method_name(c.method);
    j["mc_std_error"] = c.mc_std_error;
    j["draws"] = c.draws;
    j["seed"] = c.seed;
    return j;
}

inline json to_json(const CandidateModel& m) {
    json j;
    j["indices"] = m.indices;
    if (m.link != Link::none) j["link"] = link_name(m.link);
    return j;
}

inline json to_json(const ConfidenceSet& cs) {
    json j;
    j["model"] = to_json(cs.model);
    j["level"] = cs.level;
    j["constant_kind"] = constant_kind_name(cs.constant_kind);
    j["constant"] = to_json(cs.constant);
    json rows = json::array();
    for (const auto& iv : cs.intervals) {
        json r;
        r["coef"] = iv.coef;
        r["name"] = iv.name;
        r["estimate"] = iv.estimate;
        r["lower"] = iv.lower;
        r["upper"] = iv.upper;
        r["stderr"] = iv.stderr_;
        r["constant"] = iv.constant;
        rows.push_back(std::move(r));
    }
    j["intervals"] = std::move(rows);
    return j;
}

} // namespace posi::io
