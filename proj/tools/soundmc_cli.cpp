// Command-line front end: model checking runs, sample-size planning,
// coverage-probability studies, and bounding-set horizon reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soundmc/soundmc.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_model = 3;
constexpr int exit_no_method = 4;
constexpr int exit_sim_cap = 5;
constexpr int exit_horizon = 6;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw soundmc::ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

soundmc::Dtmc load_model(const std::string& ref) {
    if (auto builtin = soundmc::try_parse_builtin_ref(ref)) return std::move(*builtin);
    return soundmc::parse_model(read_file(ref));
}

soundmc::PropertySpec load_property(const std::string& ref) {
    if (auto inline_prop = soundmc::try_parse_property_ref(ref)) return *inline_prop;
    return soundmc::parse_property(read_file(ref));
}

std::vector<soundmc::Method> parse_prefs(const std::string& list) {
    std::vector<soundmc::Method> prefs;
    std::istringstream in(list);
    std::string token;
    while (std::getline(in, token, ',')) {
        auto m = soundmc::method_from_name(token);
        if (!m) throw CLI::ValidationError("--method-prefs", "unknown method '" + token + "'");
        prefs.push_back(*m);
    }
    return prefs;
}

// Appends a row, writing the header only when the file starts empty.
template <typename WriteHeader, typename WriteRow>
void append_csv(const std::string& path, WriteHeader&& header, WriteRow&& row) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw soundmc::Error("cannot write CSV to '" + path + "'");
    if (fresh) header(out);
    row(out);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw soundmc::Error("cannot write to '" + path + "'");
    out << content;
}

int run(int argc, char** argv) {
    CLI::App app{"sound statistical model checking for DTMC probabilities and expected rewards"};
    app.require_subcommand(1);

    // ---- check -------------------------------------------------------
    auto* check = app.add_subcommand("check", "estimate one property of one model");
    std::string model_ref, prop_ref, prefs_str, mode_str = "fixed", csv_out;
    std::int64_t k = 1000, min_k = 10;
    double eps = 0.01, gamma = 0.95;
    std::uint64_t seed = 0, max_steps = 10'000'000;
    int workers = 1;
    std::optional<double> eps_prime;
    check->add_option("--model", model_ref, "model file, or builtin fig2(n,c) | fig3() | chain(L,p)")
        ->required();
    check->add_option("--prop", prop_ref, "property file, or inline kind(goal?,bound?)")->required();
    check->add_option("--method-prefs", prefs_str, "comma-separated method preference list");
    check->add_option("--mode", mode_str, "fixed | sequential")->check(CLI::IsMember({"fixed", "sequential"}));
    check->add_option("--k", k, "sample count (fixed mode)");
    check->add_option("--eps", eps, "half-width target (sequential mode)");
    check->add_option("--gamma", gamma, "confidence level");
    check->add_option("--seed", seed, "random seed");
    check->add_option("--workers", workers, "worker threads (does not change results)");
    check->add_option("--epsilon-prime", eps_prime, "tail budget for the truncated reach-reward interval");
    check->add_option("--csv-out", csv_out, "append a result row to this CSV file");
    check->add_option("--min-k", min_k, "Chow-Robbins minimum sample count before stopping");
    check->add_option("--max-steps", max_steps, "per-run step cap");

    // ---- plan --------------------------------------------------------
    auto* plan = app.add_subcommand("plan", "print the sample count needed for (eps, gamma)");
    std::string plan_method;
    double plan_eps = 0.0, plan_gamma = 0.0, plan_a = 0.0, plan_b = 1.0;
    plan->add_option("method", plan_method, "okamoto | clopper_pearson | hoeffding")->required();
    plan->add_option("eps", plan_eps, "half-width target")->required();
    plan->add_option("gamma", plan_gamma, "confidence level")->required();
    plan->add_option("a", plan_a, "support lower bound (hoeffding)");
    plan->add_option("b", plan_b, "support upper bound (hoeffding)");

    // ---- coverage ----------------------------------------------------
    auto* coverage = app.add_subcommand("coverage", "coverage-probability studies");
    coverage->require_subcommand(1);

    auto* cov_fixed = coverage->add_subcommand("fixed", "exact coverage of a fixed-k method over p");
    std::string cf_method = "clopper_pearson", cf_csv;
    std::int64_t cf_k = 50, cf_grid = 999;
    double cf_gamma = 0.9;
    bool cf_width = false;
    int cf_workers = 1;
    cov_fixed->add_option("--method", cf_method, "wald | wilson_cc | clopper_pearson | okamoto");
    cov_fixed->add_option("--k", cf_k, "sample count");
    cov_fixed->add_option("--gamma", cf_gamma, "confidence level");
    cov_fixed->add_option("--grid-points", cf_grid, "number of interior grid points");
    cov_fixed->add_flag("--expected-width", cf_width, "also emit the expected interval width");
    cov_fixed->add_option("--csv-out", cf_csv, "output CSV path");
    cov_fixed->add_option("--workers", cf_workers, "worker threads");

    auto* cov_seq = coverage->add_subcommand("sequential", "exact coverage of a sequential method over p");
    std::string cs_method = "clopper_pearson", cs_csv;
    std::int64_t cs_grid = 99, cs_kmax = 5000, cs_mink = 10;
    double cs_eps = 0.05, cs_gamma = 0.9;
    int cs_workers = 1;
    cov_seq->add_option("--method", cs_method, "chow_robbins | clopper_pearson");
    cov_seq->add_option("--eps", cs_eps, "half-width target");
    cov_seq->add_option("--gamma", cs_gamma, "confidence level");
    cov_seq->add_option("--grid-points", cs_grid, "number of interior grid points");
    cov_seq->add_option("--k-max", cs_kmax, "lattice truncation point");
    cov_seq->add_option("--min-k", cs_mink, "Chow-Robbins minimum sample count");
    cov_seq->add_option("--csv-out", cs_csv, "output CSV path");
    cov_seq->add_option("--workers", cs_workers, "worker threads");

    auto* cov_emp = coverage->add_subcommand("empirical", "empirical coverage of repeated SMC analyses");
    std::string ce_model, ce_prop, ce_method = "normal", ce_csv;
    std::int64_t ce_k = 1000, ce_m = 1000;
    double ce_gamma = 0.95, ce_reference = 0.0;
    std::uint64_t ce_seed = 0;
    int ce_workers = 1;
    cov_emp->add_option("--model", ce_model, "model file or builtin")->required();
    cov_emp->add_option("--prop", ce_prop, "property file or inline")->required();
    cov_emp->add_option("--method", ce_method, "fixed-k interval method");
    cov_emp->add_option("--k", ce_k, "samples per repetition");
    cov_emp->add_option("--m", ce_m, "number of repetitions");
    cov_emp->add_option("--gamma", ce_gamma, "confidence level");
    cov_emp->add_option("--reference", ce_reference, "reference value (analytic or high-k oracle)")
        ->required();
    cov_emp->add_option("--seed", ce_seed, "random seed");
    cov_emp->add_option("--workers", ce_workers, "worker threads");
    cov_emp->add_option("--csv-out", ce_csv, "append the result row to this CSV file");

    // ---- bound-horizon -------------------------------------------------
    auto* horizon = app.add_subcommand("bound-horizon", "bounding-set horizon from structural bounds");
    std::int64_t bh_states = 1;
    double bh_rmax = 0.0, bh_pmin = 0.5, bh_epsp = 0.0;
    std::int64_t bh_qmax = std::numeric_limits<std::int64_t>::max();
    horizon->add_option("--states", bh_states, "state count bound")->required();
    horizon->add_option("--rmax", bh_rmax, "maximum reward bound")->required();
    horizon->add_option("--pmin", bh_pmin, "minimum transition probability bound")->required();
    horizon->add_option("--epsilon-prime", bh_epsp, "tail weight budget")->required();
    horizon->add_option("--q-max", bh_qmax, "episode count cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (check->parsed()) {
        const soundmc::Dtmc model = load_model(model_ref);
        soundmc::CheckRequest req;
        req.prop = load_property(prop_ref);
        if (!prefs_str.empty()) req.prefs = parse_prefs(prefs_str);
        req.mode = mode_str == "sequential" ? soundmc::AnalysisMode::sequential
                                            : soundmc::AnalysisMode::fixed_k;
        req.k = k;
        req.eps = eps;
        req.gamma = gamma;
        req.cfg.seed = seed;
        req.cfg.workers = workers;
        req.cfg.max_steps = max_steps;
        req.eps_prime = eps_prime;
        req.min_k = min_k;
        const soundmc::CheckReport r = soundmc::run_check(model, req, model_ref);

        std::printf("model:     %s\n", r.model_name.c_str());
        std::printf("property:  %s\n", r.property_name.c_str());
        std::printf("method:    %s (%s)\n", std::string(soundmc::method_name(r.method)).c_str(),
                    r.sound ? "sound" : "UNSOUND");
        std::printf("estimate:  %.10g\n", r.estimate);
        if (r.lower_bound_only)
            std::printf("bound:     >= %.10g (limit-PAC lower bound)\n", r.lower);
        else
            std::printf("interval:  [%.10g, %.10g]  width %.10g\n", r.lower, r.upper, r.upper - r.lower);
        std::printf("samples:   %lld\n", static_cast<long long>(r.samples));
        std::printf("gamma:     %.10g\n", r.gamma);
        std::printf("seconds:   %.3f\n", r.seconds);
        if (!csv_out.empty())
            append_csv(csv_out, soundmc::csv::write_check_header,
                       [&](std::ostream& os) { soundmc::csv::write_check_row(os, r); });
        return exit_ok;
    }

    if (plan->parsed()) {
        std::int64_t result = 0;
        if (plan_method == "okamoto")
            result = soundmc::okamoto_sample_size(plan_eps, plan_gamma);
        else if (plan_method == "clopper_pearson")
            result = soundmc::cp_worst_case_sample_size(plan_eps, plan_gamma);
        else if (plan_method == "hoeffding")
            result = soundmc::hoeffding_sample_size(plan_eps, soundmc::SupportBounds(plan_a, plan_b),
                                                    plan_gamma);
        else
            throw CLI::ValidationError("method", "unknown planning method '" + plan_method + "'");
        std::printf("%lld\n", static_cast<long long>(result));
        return exit_ok;
    }

    if (cov_fixed->parsed()) {
        const auto method = soundmc::method_from_name(cf_method);
        if (!method) throw CLI::ValidationError("--method", "unknown method '" + cf_method + "'");
        const auto curve =
            soundmc::fixed_coverage_curve(*method, cf_k, cf_gamma, cf_grid, cf_width, cf_workers);
        std::printf("method %s  k=%lld  gamma=%.6g  grid=%lld\n", cf_method.c_str(),
                    static_cast<long long>(cf_k), cf_gamma, static_cast<long long>(cf_grid));
        std::printf("min coverage:  %.6f\n", curve.min_coverage());
        std::printf("mean coverage: %.6f\n", curve.mean_coverage());
        if (!cf_csv.empty()) {
            std::ostringstream buf;
            soundmc::csv::write_fixed_curve(buf, curve);
            write_file(cf_csv, buf.str());
        }
        return exit_ok;
    }

    if (cov_seq->parsed()) {
        soundmc::SequentialMethod method;
        if (cs_method == "chow_robbins")
            method = soundmc::SequentialMethod::chow_robbins;
        else if (cs_method == "clopper_pearson")
            method = soundmc::SequentialMethod::clopper_pearson_plan;
        else
            throw CLI::ValidationError("--method", "unknown sequential method '" + cs_method + "'");
        const auto curve = soundmc::sequential_coverage_curve(method, cs_eps, cs_gamma, cs_grid, cs_kmax,
                                                              cs_mink, cs_workers);
        double max_resid = 0.0, mean_samples = 0.0;
        for (double r : curve.residual) max_resid = std::max(max_resid, r);
        for (double s : curve.expected_samples) mean_samples += s;
        mean_samples /= static_cast<double>(curve.expected_samples.size());
        std::printf("method %s  eps=%.6g  gamma=%.6g  grid=%lld  k_max=%lld\n", cs_method.c_str(), cs_eps,
                    cs_gamma, static_cast<long long>(cs_grid), static_cast<long long>(cs_kmax));
        std::printf("min coverage:     %.6f\n", curve.min_coverage());
        std::printf("mean coverage:    %.6f\n", curve.mean_coverage());
        std::printf("mean exp samples: %.3f\n", mean_samples);
        std::printf("max residual:     %.3g\n", max_resid);
        if (!cs_csv.empty()) {
            std::ostringstream buf;
            soundmc::csv::write_sequential_curve(buf, curve);
            write_file(cs_csv, buf.str());
        }
        return exit_ok;
    }

    if (cov_emp->parsed()) {
        const soundmc::Dtmc model = load_model(ce_model);
        const soundmc::PropertySpec prop = load_property(ce_prop);
        const auto method = soundmc::method_from_name(ce_method);
        if (!method) throw CLI::ValidationError("--method", "unknown method '" + ce_method + "'");
        soundmc::RunConfig cfg;
        cfg.seed = ce_seed;
        cfg.workers = ce_workers;
        const auto producer = soundmc::make_interval_producer(model, prop, *method, ce_gamma);
        const auto result = soundmc::empirical_coverage(model, prop, producer, ce_gamma,
                                                        static_cast<std::size_t>(ce_k),
                                                        static_cast<std::size_t>(ce_m), ce_reference, cfg);
        std::printf("empirical coverage of %s on %s / %s (k=%lld, m=%lld, reference %.10g)\n",
                    ce_method.c_str(), ce_model.c_str(), prop.name().c_str(),
                    static_cast<long long>(ce_k), static_cast<long long>(ce_m), ce_reference);
        std::printf("estimate: %.6f  (misses %lld)\n", result.estimate,
                    static_cast<long long>(result.misses));
        std::printf("meta interval: [%.6f, %.6f]\n", result.meta.lower, result.meta.upper);
        if (!ce_csv.empty())
            append_csv(ce_csv, soundmc::csv::write_empirical_header, [&](std::ostream& os) {
                soundmc::csv::write_empirical_row(os, ce_model, prop.name(), ce_method,
                                                  static_cast<std::size_t>(ce_k), result);
            });
        return exit_ok;
    }

    if (horizon->parsed()) {
        soundmc::StructuralBounds bounds;
        bounds.state_bound = bh_states;
        bounds.rmax_bound = bh_rmax;
        bounds.pmin_bound = bh_pmin;
        const auto r = soundmc::bounding_set_horizon(bounds, bh_epsp, bh_qmax);
        std::printf("episodes q:      %lld\n", static_cast<long long>(r.episodes));
        std::printf("horizon steps:   %lld\n", static_cast<long long>(r.horizon_steps));
        std::printf("path reward cap: %.10g\n", r.path_reward_cap);
        std::printf("tail weight:     %.10g\n", r.tail_weight);
        return exit_ok;
    }

    return exit_usage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return exit_usage;
    } catch (const soundmc::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_model;
    } catch (const soundmc::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_model;
    } catch (const soundmc::NoApplicableMethod& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_no_method;
    } catch (const soundmc::SimulationCapError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_sim_cap;
    } catch (const soundmc::StreamExhausted& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_sim_cap;
    } catch (const soundmc::HorizonError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_horizon;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
