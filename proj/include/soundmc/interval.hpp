#pragma once

#include <optional>
#include <string_view>

namespace soundmc {

/// Statistical methods implemented by the tool. Tags travel with every
/// interval so output can never misreport how a number was produced.
enum class Method {
    wald,
    wilson_cc,
    clopper_pearson,
    okamoto,
    normal,
    student_t,
    hoeffding,
    dkw,
    dkw_e_lower,
    dkw_truncated,
    chow_robbins,
};

constexpr std::string_view method_name(Method m) {
    switch (m) {
        case Method::wald: return "wald";
        case Method::wilson_cc: return "wilson_cc";
        case Method::clopper_pearson: return "clopper_pearson";
        case Method::okamoto: return "okamoto";
        case Method::normal: return "normal";
        case Method::student_t: return "student_t";
        case Method::hoeffding: return "hoeffding";
        case Method::dkw: return "dkw";
        case Method::dkw_e_lower: return "dkw_e_lower";
        case Method::dkw_truncated: return "dkw_truncated";
        case Method::chow_robbins: return "chow_robbins";
    }
    return "unknown";
}

inline std::optional<Method> method_from_name(std::string_view name) {
    for (Method m : {Method::wald, Method::wilson_cc, Method::clopper_pearson, Method::okamoto,
                     Method::normal, Method::student_t, Method::hoeffding, Method::dkw,
                     Method::dkw_e_lower, Method::dkw_truncated, Method::chow_robbins}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

/// Whether the method's coverage probability is >= gamma for every true
/// parameter value (not merely on average).
constexpr bool method_is_sound(Method m) {
    switch (m) {
        case Method::clopper_pearson:
        case Method::okamoto:
        case Method::hoeffding:
        case Method::dkw:
        case Method::dkw_e_lower:
        case Method::dkw_truncated:
            return true;
        case Method::wald:
        case Method::wilson_cc:
        case Method::normal:
        case Method::student_t:
        case Method::chow_robbins:
            return false;
    }
    return false;
}

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double gamma = 0.0;
    Method method = Method::wald;
    bool sound = false;

    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(double x) const { return lower <= x && x <= upper; }
};

inline ConfidenceInterval make_interval(double lo, double hi, double gamma, Method m) {
    return ConfidenceInterval{lo, hi, gamma, m, method_is_sound(m)};
}

}  // namespace soundmc
