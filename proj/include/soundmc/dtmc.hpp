#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soundmc/error.hpp"

namespace soundmc {

/// Black-box structural bounds: an over-approximation of the state count
/// and maximum reward, and an under-approximation of the minimum
/// transition probability. `declared` distinguishes bounds read from the
/// model document from bounds computed exactly from the explicit chain.
struct StructuralBounds {
    std::int64_t state_bound = 1;
    double rmax_bound = 0.0;
    double pmin_bound = 1.0;
    bool declared = false;
};

enum class PropertyKind {
    p_reach,
    p_reach_bounded,
    e_cumulative,
    e_reach,
    e_reach_bounded,
    e_instant,
    e_reach_instant,
};

constexpr std::string_view property_kind_name(PropertyKind k) {
    switch (k) {
        case PropertyKind::p_reach: return "p_reach";
        case PropertyKind::p_reach_bounded: return "p_reach_bounded";
        case PropertyKind::e_cumulative: return "e_cumulative";
        case PropertyKind::e_reach: return "e_reach";
        case PropertyKind::e_reach_bounded: return "e_reach_bounded";
        case PropertyKind::e_instant: return "e_instant";
        case PropertyKind::e_reach_instant: return "e_reach_instant";
    }
    return "unknown";
}

constexpr bool property_needs_goal(PropertyKind k) {
    return k != PropertyKind::e_cumulative && k != PropertyKind::e_instant;
}

constexpr bool property_needs_bound(PropertyKind k) {
    return k == PropertyKind::p_reach_bounded || k == PropertyKind::e_cumulative ||
           k == PropertyKind::e_reach_bounded || k == PropertyKind::e_instant;
}

/// True for the two kinds whose samples are Bernoulli indicators.
constexpr bool property_is_probability(PropertyKind k) {
    return k == PropertyKind::p_reach || k == PropertyKind::p_reach_bounded;
}

inline PropertyKind parse_property_kind(std::string_view name) {
    for (PropertyKind k : {PropertyKind::p_reach, PropertyKind::p_reach_bounded,
                           PropertyKind::e_cumulative, PropertyKind::e_reach,
                           PropertyKind::e_reach_bounded, PropertyKind::e_instant,
                           PropertyKind::e_reach_instant}) {
        if (property_kind_name(k) == name) return k;
    }
    throw ParseError("unknown property kind '" + std::string(name) + "'");
}

struct PropertySpec {
    PropertyKind kind = PropertyKind::p_reach;
    std::string goal;                   // empty for e_cumulative / e_instant
    std::optional<std::int64_t> bound;  // step bound c, present iff bounded/instantaneous

    void validate() const {
        if (property_needs_bound(kind)) {
            if (!bound) throw ValidationError(std::string(property_kind_name(kind)) + " requires a step bound");
            if (*bound < 0) throw ValidationError("step bound must be >= 0");
        } else if (bound) {
            throw ValidationError(std::string(property_kind_name(kind)) + " takes no step bound");
        }
        if (property_needs_goal(kind) && goal.empty())
            throw ValidationError(std::string(property_kind_name(kind)) + " requires a goal label");
        if (!property_needs_goal(kind) && !goal.empty())
            throw ValidationError(std::string(property_kind_name(kind)) + " takes no goal label");
    }

    std::string name() const {
        std::string s{property_kind_name(kind)};
        s += "(";
        if (!goal.empty()) s += goal;
        if (bound) {
            if (!goal.empty()) s += ",";
            s += std::to_string(*bound);
        }
        s += ")";
        return s;
    }
};

/// Explicit finite discrete-time Markov chain with per-state rewards and
/// labeled state sets. Immutable after construction; safe to share across
/// worker threads.
class Dtmc {
public:
    struct Transition {
        std::int64_t src = 0;
        std::int64_t dst = 0;
        double prob = 0.0;
    };

    static constexpr double row_sum_tolerance = 1e-9;

    Dtmc(std::int64_t state_count, std::int64_t initial, std::vector<Transition> transitions,
         std::vector<double> rewards, std::map<std::string, std::vector<std::int64_t>> labels,
         std::optional<StructuralBounds> declared = std::nullopt)
        : state_count_(state_count),
          initial_(initial),
          transitions_(std::move(transitions)),
          rewards_(std::move(rewards)),
          labels_(std::move(labels)),
          declared_(declared) {
        validate();
        build_rows();
    }

    std::int64_t state_count() const { return state_count_; }
    std::int64_t initial() const { return initial_; }
    const std::vector<Transition>& transitions() const { return transitions_; }
    double reward(std::int64_t s) const { return rewards_[static_cast<std::size_t>(s)]; }
    const std::vector<double>& rewards() const { return rewards_; }
    const std::map<std::string, std::vector<std::int64_t>>& labels() const { return labels_; }
    const std::optional<StructuralBounds>& declared_bounds() const { return declared_; }

    bool has_label(const std::string& name) const { return labels_.count(name) != 0; }

    /// Membership mask over states for a goal label.
    std::vector<std::uint8_t> label_mask(const std::string& name) const {
        auto it = labels_.find(name);
        if (it == labels_.end()) throw ValidationError("goal label '" + name + "' not present in model");
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(state_count_), 0);
        for (std::int64_t s : it->second) mask[static_cast<std::size_t>(s)] = 1;
        return mask;
    }

    /// State whose only move is a probability-1 self-loop.
    bool absorbing(std::int64_t s) const { return absorbing_[static_cast<std::size_t>(s)] != 0; }

    /// Successor of `s` for a uniform draw u in [0, 1).
    std::int64_t step(std::int64_t s, double u) const {
        const auto begin = row_offset_[static_cast<std::size_t>(s)];
        const auto end = row_offset_[static_cast<std::size_t>(s) + 1];
        // prefix sums are normalized so the last entry is exactly 1
        for (std::size_t i = begin; i + 1 < end; ++i) {
            if (u < row_cum_[i]) return row_target_[i];
        }
        return row_target_[end - 1];
    }

    std::int64_t max_reward_state() const { return max_reward_state_; }

private:
    void validate() const {
        if (state_count_ < 1) throw ValidationError("state count must be positive");
        if (initial_ < 0 || initial_ >= state_count_)
            throw ValidationError("initial state " + std::to_string(initial_) + " out of range");
        if (std::ssize(rewards_) != state_count_)
            throw ValidationError("rewards array length " + std::to_string(rewards_.size()) +
                                  " does not match state count " + std::to_string(state_count_));
        for (std::int64_t s = 0; s < state_count_; ++s) {
            const double r = rewards_[static_cast<std::size_t>(s)];
            if (!(r >= 0.0) || !std::isfinite(r))
                throw ValidationError("reward of state " + std::to_string(s) + " is negative or not finite");
        }
        std::vector<double> row_sum(static_cast<std::size_t>(state_count_), 0.0);
        std::vector<std::vector<std::int64_t>> seen(static_cast<std::size_t>(state_count_));
        for (const Transition& t : transitions_) {
            if (t.src < 0 || t.src >= state_count_ || t.dst < 0 || t.dst >= state_count_)
                throw ValidationError("transition (" + std::to_string(t.src) + " -> " + std::to_string(t.dst) +
                                      ") references a state outside [0, " + std::to_string(state_count_) + ")");
            if (!(t.prob > 0.0) || t.prob > 1.0 || !std::isfinite(t.prob))
                throw ValidationError("transition (" + std::to_string(t.src) + " -> " + std::to_string(t.dst) +
                                      ") has probability outside (0, 1]");
            auto& row_seen = seen[static_cast<std::size_t>(t.src)];
            if (std::find(row_seen.begin(), row_seen.end(), t.dst) != row_seen.end())
                throw ValidationError("duplicate transition (" + std::to_string(t.src) + " -> " +
                                      std::to_string(t.dst) + ")");
            row_seen.push_back(t.dst);
            row_sum[static_cast<std::size_t>(t.src)] += t.prob;
        }
        for (std::int64_t s = 0; s < state_count_; ++s) {
            const double sum = row_sum[static_cast<std::size_t>(s)];
            if (std::fabs(sum - 1.0) > row_sum_tolerance) {
                std::ostringstream msg;
                msg << "row " << s << " sums to " << sum;
                throw ValidationError(msg.str());
            }
        }
        for (const auto& [name, states] : labels_) {
            for (std::int64_t s : states) {
                if (s < 0 || s >= state_count_)
                    throw ValidationError("label '" + name + "' references state " + std::to_string(s) +
                                          " outside [0, " + std::to_string(state_count_) + ")");
            }
        }
        if (declared_) {
            if (declared_->state_bound < state_count_)
                throw ValidationError("declared state bound below the actual state count");
            if (!(declared_->rmax_bound >= 0.0))
                throw ValidationError("declared rmax bound must be nonnegative");
            if (!(declared_->pmin_bound > 0.0) || declared_->pmin_bound > 1.0)
                throw ValidationError("declared pmin bound must lie in (0, 1]");
        }
    }

    void build_rows() {
        const auto n = static_cast<std::size_t>(state_count_);
        std::vector<std::vector<std::pair<std::int64_t, double>>> rows(n);
        for (const Transition& t : transitions_)
            rows[static_cast<std::size_t>(t.src)].emplace_back(t.dst, t.prob);
        row_offset_.assign(n + 1, 0);
        for (std::size_t s = 0; s < n; ++s) row_offset_[s + 1] = row_offset_[s] + rows[s].size();
        row_target_.resize(row_offset_[n]);
        row_cum_.resize(row_offset_[n]);
        absorbing_.assign(n, 0);
        for (std::size_t s = 0; s < n; ++s) {
            double total = 0.0;
            for (const auto& [dst, prob] : rows[s]) total += prob;
            double acc = 0.0;
            std::size_t at = row_offset_[s];
            for (const auto& [dst, prob] : rows[s]) {
                acc += prob;
                row_target_[at] = dst;
                row_cum_[at] = acc / total;
                ++at;
            }
            if (at > row_offset_[s]) row_cum_[at - 1] = 1.0;
            absorbing_[s] = rows[s].size() == 1 && rows[s][0].first == static_cast<std::int64_t>(s);
        }
        max_reward_state_ = static_cast<std::int64_t>(
            std::max_element(rewards_.begin(), rewards_.end()) - rewards_.begin());
    }

    std::int64_t state_count_;
    std::int64_t initial_;
    std::vector<Transition> transitions_;
    std::vector<double> rewards_;
    std::map<std::string, std::vector<std::int64_t>> labels_;
    std::optional<StructuralBounds> declared_;

    std::vector<std::size_t> row_offset_;
    std::vector<std::int64_t> row_target_;
    std::vector<double> row_cum_;
    std::vector<std::uint8_t> absorbing_;
    std::int64_t max_reward_state_ = 0;
};

/// Exact structural bounds from the explicit chain, unless the document
/// declared black-box bounds, which then take precedence (flagged).
inline StructuralBounds structural_bounds(const Dtmc& model) {
    if (model.declared_bounds()) {
        StructuralBounds b = *model.declared_bounds();
        b.declared = true;
        return b;
    }
    StructuralBounds b;
    b.state_bound = model.state_count();
    b.rmax_bound = 0.0;
    for (double r : model.rewards()) b.rmax_bound = std::max(b.rmax_bound, r);
    b.pmin_bound = 1.0;
    for (const auto& t : model.transitions()) b.pmin_bound = std::min(b.pmin_bound, t.prob);
    b.declared = false;
    return b;
}

namespace detail {

inline void parse_position(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& col) {
    line = 1;
    col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
}

}  // namespace detail

/// Parse and validate a model document (see README for the format).
inline Dtmc parse_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 0, col = 0;
        detail::parse_position(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
        throw ParseError("model document: line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what());
    }
    try {
        const std::int64_t states = doc.at("states").get<std::int64_t>();
        const std::int64_t initial = doc.at("initial").get<std::int64_t>();
        std::vector<Dtmc::Transition> trans;
        for (const auto& row : doc.at("transitions")) {
            if (!row.is_array() || row.size() != 3)
                throw ParseError("model document: each transition must be [src, dst, prob]");
            trans.push_back({row[0].get<std::int64_t>(), row[1].get<std::int64_t>(), row[2].get<double>()});
        }
        std::vector<double> rewards = doc.at("rewards").get<std::vector<double>>();
        std::map<std::string, std::vector<std::int64_t>> labels;
        if (doc.contains("labels"))
            labels = doc.at("labels").get<std::map<std::string, std::vector<std::int64_t>>>();
        std::optional<StructuralBounds> declared;
        if (doc.contains("declared_bounds")) {
            const auto& d = doc.at("declared_bounds");
            declared = StructuralBounds{d.at("states").get<std::int64_t>(), d.at("rmax").get<double>(),
                                        d.at("pmin").get<double>(), true};
        }
        return Dtmc(states, initial, std::move(trans), std::move(rewards), std::move(labels), declared);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model document: ") + e.what());
    }
}

/// Serialize back to the document format; parse(serialize(m)) == m field-wise.
inline std::string serialize_model(const Dtmc& model) {
    nlohmann::ordered_json doc;
    doc["states"] = model.state_count();
    doc["initial"] = model.initial();
    auto& trans = doc["transitions"] = nlohmann::ordered_json::array();
    for (const auto& t : model.transitions()) trans.push_back({t.src, t.dst, t.prob});
    doc["rewards"] = model.rewards();
    doc["labels"] = nlohmann::ordered_json::object();
    for (const auto& [name, states] : model.labels()) doc["labels"][name] = states;
    if (model.declared_bounds()) {
        doc["declared_bounds"] = {{"states", model.declared_bounds()->state_bound},
                                  {"rmax", model.declared_bounds()->rmax_bound},
                                  {"pmin", model.declared_bounds()->pmin_bound}};
    }
    return doc.dump(2);
}

inline PropertySpec parse_property(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 0, col = 0;
        detail::parse_position(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
        throw ParseError("property document: line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what());
    }
    try {
        PropertySpec p;
        p.kind = parse_property_kind(doc.at("kind").get<std::string>());
        if (doc.contains("goal")) p.goal = doc.at("goal").get<std::string>();
        if (doc.contains("bound")) p.bound = doc.at("bound").get<std::int64_t>();
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("property document: ") + e.what());
    }
}

/// Built-in model families used throughout the test and coverage tooling.
///
///  - fig2(n, c): three states; the initial state branches to a goal state
///    with reward c*n with probability 1/n and to a zero-reward goal state
///    otherwise. Label "goal" holds both absorbing states.
///  - fig3(): two states; the initial state (reward 1) loops with
///    probability 1/2 or moves to the absorbing goal.
///  - chain(L, p): L transient states of reward 1, each advancing with
///    probability p and self-looping otherwise, then an absorbing goal.
inline Dtmc generate_builtin(std::string_view family, std::span<const double> params) {
    auto expect_params = [&](std::size_t n) {
        if (params.size() != n)
            throw ValidationError("family '" + std::string(family) + "' expects " + std::to_string(n) +
                                  " parameter(s), got " + std::to_string(params.size()));
    };
    if (family == "fig2") {
        expect_params(2);
        const double n_real = params[0];
        const double c = params[1];
        const auto n = static_cast<std::int64_t>(n_real);
        if (static_cast<double>(n) != n_real || n < 2)
            throw ValidationError("fig2 requires integer n >= 2 (branch probabilities must stay in (0,1))");
        if (!(c > 0.0)) throw ValidationError("fig2 requires c > 0");
        const double p_hi = 1.0 / static_cast<double>(n);
        std::vector<Dtmc::Transition> trans{
            {0, 1, p_hi}, {0, 2, 1.0 - p_hi}, {1, 1, 1.0}, {2, 2, 1.0}};
        std::vector<double> rewards{0.0, c * static_cast<double>(n), 0.0};
        return Dtmc(3, 0, std::move(trans), std::move(rewards), {{"goal", {1, 2}}});
    }
    if (family == "fig3") {
        expect_params(0);
        std::vector<Dtmc::Transition> trans{{0, 0, 0.5}, {0, 1, 0.5}, {1, 1, 1.0}};
        return Dtmc(2, 0, std::move(trans), {1.0, 0.0}, {{"goal", {1}}});
    }
    if (family == "chain") {
        expect_params(2);
        const double len_real = params[0];
        const double p = params[1];
        const auto len = static_cast<std::int64_t>(len_real);
        if (static_cast<double>(len) != len_real || len < 1)
            throw ValidationError("chain requires integer L >= 1");
        if (!(p > 0.0 && p <= 1.0)) throw ValidationError("chain requires p in (0, 1]");
        std::vector<Dtmc::Transition> trans;
        std::vector<double> rewards;
        for (std::int64_t s = 0; s < len; ++s) {
            trans.push_back({s, s + 1, p});
            if (p < 1.0) trans.push_back({s, s, 1.0 - p});
            rewards.push_back(1.0);
        }
        trans.push_back({len, len, 1.0});
        rewards.push_back(0.0);
        return Dtmc(len + 1, 0, std::move(trans), std::move(rewards), {{"goal", {len}}});
    }
    throw ValidationError("unknown built-in family '" + std::string(family) + "'");
}

/// Parse either "family(arg,...)" for a built-in, or return nullopt so the
/// caller can treat the reference as a file path.
inline std::optional<Dtmc> try_parse_builtin_ref(const std::string& ref) {
    const auto open = ref.find('(');
    if (open == std::string::npos || ref.back() != ')') return std::nullopt;
    const std::string family = ref.substr(0, open);
    if (family != "fig2" && family != "fig3" && family != "chain") return std::nullopt;
    const std::string args = ref.substr(open + 1, ref.size() - open - 2);
    std::vector<double> params;
    std::string token;
    std::istringstream in(args);
    while (std::getline(in, token, ',')) {
        try {
            params.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ValidationError("invalid parameter '" + token + "' in model reference '" + ref + "'");
        }
    }
    return generate_builtin(family, params);
}

/// Parse "kind(goal?,bound?)" shorthand, e.g. "e_reach(goal)" or
/// "e_cumulative(100)"; returns nullopt for anything else.
inline std::optional<PropertySpec> try_parse_property_ref(const std::string& ref) {
    const auto open = ref.find('(');
    if (open == std::string::npos || ref.back() != ')') return std::nullopt;
    PropertySpec p;
    try {
        p.kind = parse_property_kind(ref.substr(0, open));
    } catch (const ParseError&) {
        return std::nullopt;
    }
    const std::string args = ref.substr(open + 1, ref.size() - open - 2);
    std::vector<std::string> tokens;
    std::string token;
    std::istringstream in(args);
    while (std::getline(in, token, ',')) tokens.push_back(token);
    std::size_t at = 0;
    if (property_needs_goal(p.kind) && at < tokens.size()) p.goal = tokens[at++];
    if (property_needs_bound(p.kind) && at < tokens.size()) {
        try {
            p.bound = std::stoll(tokens[at++]);
        } catch (const std::exception&) {
            throw ParseError("invalid step bound in property reference '" + ref + "'");
        }
    }
    if (at != tokens.size()) throw ParseError("too many arguments in property reference '" + ref + "'");
    p.validate();
    return p;
}

}  // namespace soundmc
