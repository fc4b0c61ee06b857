#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posi/errors.hpp"

namespace posi {

enum class Link { none, logit, probit, cloglog, loglog };

inline const char* link_name(Link l) {
    switch (l) {
        case Link::none: return "none";
        case Link::logit: return "logit";
        case Link::probit: return "probit";
        case Link::cloglog: return "cloglog";
        case Link::loglog: return "loglog";
    }
    return "?";
}

inline Link link_from_name(const std::string& s) {
    if (s == "logit") return Link::logit;
    if (s == "probit") return Link::probit;
    if (s == "cloglog") return Link::cloglog;
    if (s == "loglog") return Link::loglog;
    throw ConfigError("unknown link function: " + s);
}

// Fixed n x p regressor matrix with column identities.
struct DesignMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;

    DesignMatrix() = default;
    explicit DesignMatrix(Eigen::MatrixXd v, std::vector<std::string> names = {})
        : values(std::move(v)), column_names(std::move(names)) {
        if (values.rows() < 1 || values.cols() < 1) {
            throw DimensionMismatch("design matrix must have at least one row and column");
        }
        if (!values.allFinite()) throw DomainError("design matrix has non-finite entries");
        if (column_names.empty()) {
            column_names.reserve(static_cast<std::size_t>(values.cols()));
            for (Eigen::Index j = 0; j < values.cols(); ++j) {
                column_names.push_back("x" + std::to_string(j + 1));
            }
        }
        if (static_cast<Eigen::Index>(column_names.size()) != values.cols()) {
            throw DimensionMismatch("column name count does not match design width");
        }
    }

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }
};

// A regressor subset (1-based, strictly increasing), optionally paired with a
// link function for binary regression candidates.
struct CandidateModel {
    std::vector<int> indices;
    Link link = Link::none;

    CandidateModel() = default;
    explicit CandidateModel(std::vector<int> idx, Link l = Link::none)
        : indices(std::move(idx)), link(l) {
        if (indices.empty()) throw DomainError("candidate model must be nonempty");
        if (!std::is_sorted(indices.begin(), indices.end()) ||
            std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
            throw DomainError("candidate model indices must be strictly increasing");
        }
        if (indices.front() < 1) throw IndexOutOfRange("candidate model indices are 1-based");
    }

    int size() const { return static_cast<int>(indices.size()); }

    bool contains(int idx) const {
        return std::binary_search(indices.begin(), indices.end(), idx);
    }

    // position (0-based) of a 1-based column index within this model
    int position_of(int idx) const {
        auto it = std::lower_bound(indices.begin(), indices.end(), idx);
        if (it == indices.end() || *it != idx) throw IndexOutOfRange("index not in model");
        return static_cast<int>(it - indices.begin());
    }

    bool operator==(const CandidateModel& o) const {
        return indices == o.indices && link == o.link;
    }

    std::string label() const {
        std::string s;
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(indices[i]);
        }
        if (link != Link::none) s += std::string(":") + link_name(link);
        return s;
    }
};

// Ordered family of candidate models with the stacked-coordinate offsets
// rho(M). The ordering is fixed at construction; stacked coordinate
// rho(M) + j addresses coefficient j of model M.
class CandidateSet {
public:
    CandidateSet() = default;
    explicit CandidateSet(std::vector<CandidateModel> models) : models_(std::move(models)) {
        if (models_.empty()) throw DomainError("candidate set must be nonempty");
        offsets_.reserve(models_.size());
        int off = 0;
        for (const auto& m : models_) {
            offsets_.push_back(off);
            off += m.size();
        }
        k_ = off;
    }

    const std::vector<CandidateModel>& models() const { return models_; }
    const std::vector<int>& offsets() const { return offsets_; }
    int d() const { return static_cast<int>(models_.size()); }
    int k() const { return k_; }

    int find(const CandidateModel& m) const {
        for (std::size_t i = 0; i < models_.size(); ++i) {
            if (models_[i] == m) return static_cast<int>(i);
        }
        return -1;
    }

    int offset_of(const CandidateModel& m) const {
        const int i = find(m);
        if (i < 0) throw ModelNotInCandidateSet("model " + m.label() + " is not a candidate");
        return offsets_[static_cast<std::size_t>(i)];
    }

    int max_index() const {
        int mx = 0;
        for (const auto& m : models_) mx = std::max(mx, m.indices.back());
        return mx;
    }

    CandidateSet with_link(Link l) const {
        std::vector<CandidateModel> out;
        out.reserve(models_.size());
        for (const auto& m : models_) out.emplace_back(m.indices, l);
        return CandidateSet(std::move(out));
    }

    bool all_logit() const {
        return std::all_of(models_.begin(), models_.end(),
                           [](const CandidateModel& m) { return m.link == Link::logit; });
    }

private:
    std::vector<CandidateModel> models_;
    std::vector<int> offsets_;
    int k_ = 0;
};

inline void check_model_bounds(const DesignMatrix& x, const CandidateModel& m) {
    if (m.indices.back() > x.p()) {
        throw IndexOutOfRange("model index " + std::to_string(m.indices.back()) +
                              " exceeds design width " + std::to_string(x.p()));
    }
}

// X[M]: the columns of X selected by M, in index order.
inline Eigen::MatrixXd submatrix(const DesignMatrix& x, const CandidateModel& m) {
    check_model_bounds(x, m);
    Eigen::MatrixXd out(x.n(), m.size());
    for (int j = 0; j < m.size(); ++j) {
        out.col(j) = x.values.col(m.indices[static_cast<std::size_t>(j)] - 1);
    }
    return out;
}

namespace detail {

inline Eigen::MatrixXd thin_q_full_rank(const Eigen::MatrixXd& a, const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < a.cols()) throw RankDeficient(what);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    return q;
}

} // namespace detail

// max_i H_ii for the hat matrix of X[M], computed from a thin QR factor.
inline double leverage_max(const DesignMatrix& x, const CandidateModel& m) {
    const Eigen::MatrixXd xm = submatrix(x, m);
    if (xm.rows() < xm.cols()) throw RankDeficient("leverage_max: fewer rows than columns");
    const Eigen::MatrixXd q = detail::thin_q_full_rank(xm, "leverage_max: X[M] is rank deficient");
    return q.rowwise().squaredNorm().maxCoeff();
}

// Advisory diagnostics for the asymptotic design conditions: rank of X,
// n * max leverage over the candidate family, and the eigenvalue ratio of
// X'X. Rank deficiencies are reported, not thrown.
struct ConditionReport {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index rank = 0;
    double n_max_leverage = 0.0;
    double eigen_ratio = 0.0;
    int rank_deficient_models = 0;
};

inline ConditionReport condition_x2_report(const DesignMatrix& x, const CandidateSet& candidates) {
    ConditionReport rep;
    rep.n = x.n();
    rep.p = x.p();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.values);
    qr.setThreshold(1e-10);
    rep.rank = qr.rank();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.values.transpose() * x.values);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    rep.eigen_ratio = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    double maxlev = 0.0;
    for (const auto& m : candidates.models()) {
        try {
            maxlev = std::max(maxlev, leverage_max(x, m));
        } catch (const RankDeficient&) {
            ++rep.rank_deficient_models;
        }
    }
    rep.n_max_leverage = static_cast<double>(x.n()) * maxlev;
    return rep;
}

// All subsets of {1..p} with size in [min_size, max_size] containing
// `forced`, in increasing bitmask order.
inline CandidateSet enumerate_subsets(int p, int min_size, int max_size,
                                      const std::vector<int>& forced = {},
                                      std::uint64_t model_cap = (1ull << 20)) {
    if (p < 1 || p > 24) throw TooLarge("enumerate_subsets supports 1 <= p <= 24");
    if (min_size < 1 || min_size > max_size || max_size > p) {
        throw DomainError("enumerate_subsets: need 1 <= min_size <= max_size <= p");
    }
    if ((1ull << p) > model_cap) {
        throw TooLarge("enumerate_subsets: 2^p exceeds the model cap");
    }
    std::uint32_t forced_mask = 0;
    for (int f : forced) {
        if (f < 1 || f > p) throw IndexOutOfRange("forced index out of range");
        forced_mask |= (1u << (f - 1));
    }
    std::vector<CandidateModel> models;
    for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
        const int sz = __builtin_popcount(mask);
        if (sz < min_size || sz > max_size) continue;
        if ((mask & forced_mask) != forced_mask) continue;
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(sz));
        for (int j = 0; j < p; ++j) {
            if (mask & (1u << j)) idx.push_back(j + 1);
        }
        models.emplace_back(std::move(idx));
    }
    if (models.empty()) throw DomainError("enumerate_subsets: empty candidate family");
    return CandidateSet(std::move(models));
}

} // namespace posi
