#pragma once

#include <string>
#include <vector>

#include "posi/constants.hpp"
#include "posi/design.hpp"

namespace posi {

enum class ConstantKind { posi_gamma, posi_xi, bound, naive };

inline const char* constant_kind_name(ConstantKind k) {
    switch (k) {
        case ConstantKind::posi_gamma: return "posi-gamma";
        case ConstantKind::posi_xi: return "posi-xi";
        case ConstantKind::bound: return "bound";
        case ConstantKind::naive: return "naive";
    }
    return "?";
}

struct Interval {
    int coef = 0;            // 1-based coefficient position within the model
    std::string name;        // original design column name
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double stderr_ = 0.0;
    double constant = 0.0;

    double width() const { return upper - lower; }
    bool covers(double value) const { return lower <= value && value <= upper; }
};

struct ConfidenceSet {
    CandidateModel model;
    double level = 0.0; // 1 - alpha
    ConstantKind constant_kind = ConstantKind::posi_gamma;
    PosiConstant constant;
    std::vector<Interval> intervals;
};

} // namespace posi
