#pragma once

// Batch front end behind the nakano command-line tool. run() executes one
// subcommand and returns the process exit status:
//   0  success
//   1  a verifier reported a violation (the report carries witnesses)
//   2  bad input, contract violation or unusable parameters

#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nakano/approximation.hpp"
#include "nakano/embedding.hpp"
#include "nakano/errors.hpp"
#include "nakano/io.hpp"
#include "nakano/nakano_space.hpp"
#include "nakano/perturbation.hpp"
#include "nakano/random.hpp"

namespace nakano::cli {

using io::json;

struct RunConfig {
    std::string command;
    std::vector<std::string> inputs;
    std::optional<std::string> output;
    std::uint64_t seed = 1;
    std::vector<double> s;
    std::vector<std::size_t> n;
    int m = 2;
    std::optional<double> r;
    std::optional<double> eps;
    double grid_step = 1e-5;
    std::size_t trials = 1000;
    std::string suite = "all";
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"norm",  "modular", "constants-table", "perturb", "quantize",
                                                "embed-check", "fit", "converge", "verify"};
    return names;
}

inline const std::vector<std::string>& suites() {
    static const std::vector<std::string> names{"signed-power", "concavity",     "exponent-map",
                                                "delta",        "epsilon-perturbation", "single-chunk",
                                                "entropy-sum",  "chunk-error",   "dyadic-fit"};
    return names;
}

namespace detail {

struct Outcome {
    std::string text;
    bool violation = false;
};

inline void require_inputs(const RunConfig& cfg, std::size_t count, const char* what) {
    if (cfg.inputs.size() < count)
        throw io::InputError(cfg.command + ": expected " + what);
}

// The space file plus any extra function files.
inline io::SpaceFile load_space_and_functions(const RunConfig& cfg) {
    require_inputs(cfg, 1, "--input <space.json> [--input <function.json> ...]");
    io::SpaceFile sf = io::space_from_json(io::read_json_file(cfg.inputs[0]), cfg.inputs[0]);
    for (std::size_t i = 1; i < cfg.inputs.size(); ++i) {
        const json j = io::read_json_file(cfg.inputs[i]);
        std::string id = j.is_object() && j.contains("id") && j.at("id").is_string() ? j.at("id").get<std::string>()
                                                                                    : "f" + std::to_string(sf.functions.size());
        sf.functions.push_back({std::move(id), io::function_from_json(j, sf.space.space(), cfg.inputs[i])});
    }
    return sf;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json constants_json(const PerturbationConstants& c) {
    return {{"s", io::num(c.s)},
            {"A_lower", io::num(c.A_lower)},         {"A_upper", io::num(c.A_upper)},
            {"B_minus_lower", io::num(c.B_minus_lower)}, {"B_minus_upper", io::num(c.B_minus_upper)},
            {"B_plus_lower", io::num(c.B_plus_lower)},   {"B_plus_upper", io::num(c.B_plus_upper)},
            {"B_lower", io::num(c.B_lower)},         {"B_upper", io::num(c.B_upper)},
            {"C1_lower", io::num(c.C1_lower)},       {"C1_upper", io::num(c.C1_upper)},
            {"C2_lower", io::num(c.C2_lower)},       {"C2_upper", io::num(c.C2_upper)},
            {"C_lower", io::num(c.C_lower)},         {"C_upper", io::num(c.C_upper)},
            {"grid_step", io::num(c.grid_step)},     {"slack", io::num(c.slack)}};
}

inline const PerturbationConstants& constants_for(const RunConfig& cfg, double s) {
    if (cfg.r && s > *cfg.r)
        throw DomainError("s = " + io::fmt(s) + " exceeds r = " + io::fmt(*cfg.r));
    if (!(cfg.grid_step > 0.0))
        throw DomainError("--grid-step must be > 0");
    if (!(s >= 1.0))
        throw DomainError("s must be >= 1");
    return cached_constants(s, cfg.grid_step);
}

// ---------------------------------------------------------------------------
// Commands

inline Outcome cmd_norm(const RunConfig& cfg, bool with_norm) {
    const io::SpaceFile sf = load_space_and_functions(cfg);
    if (sf.functions.empty())
        throw io::InputError(cfg.command + ": no functions given (space \"functions\" or extra --input files)");
    std::ostringstream out;
    out << (with_norm ? "id,norm,modular\n" : "id,modular\n");
    for (const auto& [id, f] : sf.functions) {
        const double theta = modular(sf.space, f);
        out << id << ',';
        if (with_norm)
            out << io::fmt(luxemburg_norm(sf.space, f)) << ',';
        out << io::fmt(theta) << '\n';
    }
    return {out.str()};
}

inline std::vector<double> default_s_values() {
    std::vector<double> s{1.0};
    for (int k = 10; k >= 1; --k)
        s.push_back(1.0 + std::ldexp(1.0, -k));
    s.push_back(2.0);
    return s;
}

inline Outcome cmd_constants_table(const RunConfig& cfg) {
    const auto values = cfg.s.empty() ? default_s_values() : cfg.s;
    std::ostringstream out;
    out << "s,A_lower,A_upper,B_lower,B_upper,C_lower,C_upper,grid_step,slack\n";
    for (double s : values) {
        const auto& c = constants_for(cfg, s);
        out << io::fmt(c.s) << ',' << io::fmt(c.A_lower) << ',' << io::fmt(c.A_upper) << ',' << io::fmt(c.B_lower)
            << ',' << io::fmt(c.B_upper) << ',' << io::fmt(c.C_lower) << ',' << io::fmt(c.C_upper) << ','
            << io::fmt(c.grid_step) << ',' << io::fmt(c.slack) << '\n';
    }
    return {out.str()};
}

inline double single_s(const RunConfig& cfg) {
    if (cfg.s.empty())
        throw io::InputError(cfg.command + ": --s is required");
    return cfg.s.front();
}

inline Outcome cmd_quantize(const RunConfig& cfg) {
    const io::SpaceFile sf = load_space_and_functions(cfg);
    const NakanoSpace q = quantize_exponent(sf.space, single_s(cfg));
    json out = io::to_json(q);
    json range = json::array();
    for (double v : essential_range(q))
        range.push_back(io::num(v));
    out["essential_range"] = std::move(range);
    return {dump(out)};
}

inline Outcome cmd_perturb(const RunConfig& cfg) {
    const io::SpaceFile sf = load_space_and_functions(cfg);
    const NakanoSpace& N = sf.space;
    json out = json::object();
    double s = 0.0;
    if (!cfg.s.empty()) {
        s = cfg.s.front();
    } else if (cfg.eps) {
        const BudgetResult b = perturbation_budget(*cfg.eps, N.r(), cfg.grid_step);
        s = b.s;
        out["budget"] = {{"eps", io::num(*cfg.eps)}, {"s", io::num(b.s)}, {"k", b.k}, {"certified", b.certified}};
    } else {
        throw io::InputError("perturb: --s or --eps is required");
    }
    if (!(s > 1.0))
        throw DomainError("perturb: s must be > 1");
    const auto& c = constants_for(cfg, s);
    const NakanoSpace Q = quantize_exponent(N, s);
    out["s"] = io::num(s);
    out["constants"] = constants_json(c);
    out["quantized"] = io::to_json(Q);

    const ExponentMapReport rep = verify_exponent_map(N, Q, c, cfg.trials, cfg.seed);
    out["exponent_map"] = json::array({io::to_json(rep.forward), io::to_json(rep.backward), io::to_json(rep.algebra),
                                       io::to_json(rep.distance), io::to_json(rep.midpoint)});
    bool violation = !rep.ok();
    if (cfg.eps) {
        const auto probes = random_probes(N, cfg.trials, cfg.seed + 1);
        const auto res = is_epsilon_perturbation(
            N, Q, [&](const SimpleFunction& f) { return exponent_map(N, Q, f); }, probes, *cfg.eps);
        json conds = json::array();
        for (const auto& r : res.conditions)
            conds.push_back(io::to_json(r));
        out["epsilon_perturbation"] = {{"eps", io::num(*cfg.eps)}, {"passed", res.passed}, {"conditions", conds}};
        violation = violation || !res.passed;
    }
    if (!sf.functions.empty()) {
        json mapped = json::array();
        for (const auto& [id, f] : sf.functions) {
            json j = io::to_json(exponent_map(N, Q, f));
            j["id"] = id;
            mapped.push_back(std::move(j));
        }
        out["functions"] = std::move(mapped);
    }
    out["passed"] = !violation;
    return {dump(out), violation};
}

inline Outcome cmd_embed_check(const RunConfig& cfg) {
    require_inputs(cfg, 3, "--input <source.json> --input <target.json> --input <embedding.json>");
    const io::SpaceFile src = io::space_from_json(io::read_json_file(cfg.inputs[0]), cfg.inputs[0]);
    const io::SpaceFile dst = io::space_from_json(io::read_json_file(cfg.inputs[1]), cfg.inputs[1]);
    const RefinementEmbedding e = io::embedding_from_json(io::read_json_file(cfg.inputs[2]), src.space, dst.space,
                                                          cfg.inputs[2]);
    const RigidityReport rep = rigidity_check(e);
    json out = io::to_json(rep);
    if (!rep.isometry.passed) {
        const IsometryDefect d = isometry_defect(e);
        out["witness"] = {{"function", d.witness},
                          {"source_norm", io::num(d.source_norm)},
                          {"target_norm", io::num(d.target_norm)}};
    }
    const NormalizedEmbedding n = normalize_unchecked(e);
    out["zeta"] = io::to_json(n.zeta)["values"];
    out["lambda"] = io::to_json(n.embedding.target());
    json image = json::object();
    for (std::size_t a = 0; a < n.embedding.source().size(); ++a) {
        json terms = json::array();
        for (const auto& t : n.embedding.image(a))
            terms.push_back({{"atom", n.embedding.target().atoms()->id(t.atom)}, {"coeff", io::num(t.coeff)}});
        image[n.embedding.source().atoms()->id(a)] = std::move(terms);
    }
    out["normalized_image"] = std::move(image);
    return {dump(out), !rep.passed()};
}

inline Outcome cmd_fit(const RunConfig& cfg) {
    const double r = cfg.r.value_or(3.0);
    const double eps = cfg.eps.value_or(1e-3);
    const DyadicFit fit = fit_dyadic(cfg.m, r, eps);
    json coeffs = json::array();
    for (double a : fit.coefficients)
        coeffs.push_back(io::num(a));
    json out = {{"m", fit.m},     {"r", io::num(fit.r)},          {"eps", io::num(fit.eps)},
                {"n", fit.n()}, {"coefficients", std::move(coeffs)}, {"certified_error", io::num(fit.certified_error)}};
    return {dump(out)};
}

// A seeded space with 64 atoms and exponents in [1, 3].
inline NakanoSpace random_default_space(Rng& rng) { return random_nakano(rng, 64, 1.0, 3.0, 3.0); }

inline Outcome cmd_converge(const RunConfig& cfg) {
    Rng rng(cfg.seed);
    NakanoSpace N;
    SimpleFunction f;
    if (!cfg.inputs.empty()) {
        io::SpaceFile sf = load_space_and_functions(cfg);
        N = sf.space;
        f = sf.functions.empty() ? random_unit_ball(rng, N) : sf.functions.front().f;
    } else {
        N = random_default_space(rng);
        f = random_unit_ball(rng, N);
    }
    if (luxemburg_norm(N, f) > 1.0 + 1e-9)
        throw ContractError("converge: the function must lie in the unit ball");
    const std::vector<std::size_t> ns = cfg.n.empty() ? std::vector<std::size_t>{4, 16, 64, 256} : cfg.n;
    const double theta = modular(N, f);
    std::ostringstream out;
    out << "n,estimate,true_modular,abs_error,bound\n";
    for (std::size_t n : ns) {
        if (n < 1)
            throw DomainError("converge: n must be >= 1");
        const double est = chunked_estimate(chunk(N, f, n));
        out << n << ',' << io::fmt(est) << ',' << io::fmt(theta) << ',' << io::fmt(std::fabs(est - theta)) << ','
            << io::fmt(chunk_error_bound(n)) << '\n';
    }
    return {out.str()};
}

// ---------------------------------------------------------------------------
// Verification suites

inline std::vector<VerificationReport> suite_signed_power(const RunConfig& cfg) {
    std::vector<VerificationReport> out;
    for (double s : cfg.s.empty() ? std::vector<double>{1.1, 1.5, 2.0} : cfg.s) {
        auto rep = verify_signed_power_bound(constants_for(cfg, s), {100, cfg.trials, cfg.seed});
        rep.name += "(s=" + io::fmt(s) + ")";
        out.push_back(std::move(rep));
    }
    return out;
}

inline std::vector<VerificationReport> suite_concavity(const RunConfig& cfg) {
    return {verify_concavity_bound({1000, cfg.trials, cfg.seed})};
}

inline std::vector<VerificationReport> suite_exponent_map(const RunConfig& cfg) {
    std::vector<VerificationReport> out;
    Rng rng(cfg.seed);
    for (double s : cfg.s.empty() ? std::vector<double>{1.05, 1.2, 1.5} : cfg.s) {
        const NakanoSpace N = random_nakano(rng, 16, 1.0, 3.0, 3.0 * s);
        const NakanoSpace Q = quantize_exponent(N, s);
        const auto rep = verify_exponent_map(N, Q, constants_for(cfg, s), cfg.trials, rng.next());
        for (VerificationReport r : {rep.forward, rep.backward, rep.algebra, rep.distance, rep.midpoint}) {
            r.name += "(s=" + io::fmt(s) + ")";
            out.push_back(std::move(r));
        }
    }
    return out;
}

inline std::vector<VerificationReport> suite_delta(const RunConfig& cfg) {
    std::vector<VerificationReport> out;
    Rng rng(cfg.seed);
    const double r = 2.0;
    const NakanoSpace N = random_nakano(rng, 16, 1.0, r, r);
    const NakanoSpace Q = quantize_exponent(N, r);
    for (double eps : {0.1, 0.01}) {
        auto rep = verify_delta_modulus(N, Q, constants_for(cfg, r), eps, cfg.trials, rng.next());
        rep.name += "(eps=" + io::fmt(eps) + ")";
        out.push_back(std::move(rep));
    }
    return out;
}

inline std::vector<VerificationReport> suite_epsilon_perturbation(const RunConfig& cfg) {
    std::vector<VerificationReport> out;
    Rng rng(cfg.seed);
    for (double eps : cfg.eps ? std::vector<double>{*cfg.eps} : std::vector<double>{1.0, 0.1, 0.01}) {
        const NakanoSpace N = random_nakano(rng, 16, 1.0, 3.0, 3.0);
        const BudgetResult b = perturbation_budget(eps, N.r(), cfg.grid_step);
        VerificationReport budget("budget_certified(eps=" + io::fmt(eps) + ")", 0.0);
        budget.record(b.certified ? 0.0 : -1.0, [&] {
            return Witness{"no certified s", {{"eps", eps}, {"s", b.s}}};
        });
        out.push_back(std::move(budget));
        const NakanoSpace Q = quantize_exponent(N, b.s);
        const auto probes = random_probes(N, cfg.trials, rng.next());
        const auto res = is_epsilon_perturbation(
            N, Q, [&](const SimpleFunction& f) { return exponent_map(N, Q, f); }, probes, eps);
        for (VerificationReport r : res.conditions) {
            r.name += "(eps=" + io::fmt(eps) + ",s=" + io::fmt(b.s) + ")";
            out.push_back(std::move(r));
        }
    }
    return out;
}

inline std::vector<VerificationReport> suite_single_chunk(const RunConfig& cfg) {
    VerificationReport total("single_chunk_bound", 1e-10);
    Rng rng(cfg.seed);
    for (std::size_t k = 0; k < cfg.trials; ++k) {
        const double s = rng.uniform(1.0, 3.0);
        const double eps = rng.uniform(1e-3, 1.0);
        const std::size_t atoms = 1 + rng.index(0, 15);
        const NakanoSpace N = random_nakano(rng, atoms, s, s + eps, s + eps);
        const SimpleFunction f = random_unit_ball(rng, N);
        total.merge(verify_single_chunk_bound(N, f, s, eps));
    }
    return {total};
}

// Random point of {a >= 0, sum a <= 1}: normalized exponentials scaled by a
// uniform mass, with some entries zeroed.
inline std::vector<double> random_simplex(Rng& rng, std::size_t len) {
    std::vector<double> a(len);
    double total = 0.0;
    for (auto& v : a) {
        v = rng.uniform() < 0.1 ? 0.0 : -std::log1p(-rng.uniform());
        total += v;
    }
    const double mass = rng.uniform();
    for (auto& v : a)
        v = total > 0.0 ? v * mass / total : 0.0;
    return a;
}

inline std::vector<VerificationReport> suite_entropy_sum(const RunConfig& cfg) {
    std::vector<VerificationReport> out;
    Rng rng(cfg.seed);
    for (std::size_t n : {1, 4, 16, 64}) {
        VerificationReport total("entropy_sum_bound(n=" + std::to_string(n) + ")", 1e-12);
        for (std::size_t k = 0; k < cfg.trials; ++k) {
            const auto a = random_simplex(rng, 64);
            total.merge(verify_entropy_sum_bound(a, n));
        }
        out.push_back(std::move(total));
    }
    return out;
}

inline std::vector<VerificationReport> suite_chunk_error(const RunConfig& cfg) {
    std::vector<VerificationReport> out;
    Rng rng(cfg.seed);
    const NakanoSpace N = random_default_space(rng);
    std::vector<SimpleFunction> fs;
    for (std::size_t k = 0; k < cfg.trials; ++k)
        fs.push_back(random_unit_ball(rng, N));
    for (std::size_t n : {4, 16, 64, 256}) {
        VerificationReport total("chunk_error(n=" + std::to_string(n) + ")", 1e-10);
        for (const auto& f : fs)
            total.merge(verify_chunk_error(N, f, n));
        out.push_back(std::move(total));
    }
    return out;
}

inline std::vector<VerificationReport> suite_dyadic_fit(const RunConfig& cfg) {
    const double eps = cfg.eps.value_or(1e-3);
    const DyadicFit fit = fit_dyadic(cfg.m, cfg.r.value_or(3.0), eps);
    VerificationReport certified("dyadic_fit_certified", 0.0);
    certified.record(eps - fit.certified_error, [&] {
        return Witness{"fit", {{"n", static_cast<double>(fit.n())}, {"certified_error", fit.certified_error}}};
    });
    VerificationReport recheck("dyadic_fit_recertified", 1e-9);
    const double fine = nakano::detail::certify_fit(fit, 16 * 8192);
    recheck.record(fit.certified_error - fine, [&] { return Witness{"fine grid", {{"sup_error", fine}}}; });

    VerificationReport scaled("theta_scaled", 1e-12);
    Rng rng(cfg.seed);
    const NakanoSpace N = random_nakano(rng, 16, 1.0, fit.r, fit.r);
    for (std::size_t k = 0; k < cfg.trials; ++k) {
        const SimpleFunction f = random_unit_ball(rng, N);
        const double exact = modular(N, static_cast<double>(fit.m) * f);
        const double approx = theta_scaled(N, f, fit);
        scaled.record(fit.certified_error - std::fabs(exact - approx), [&] {
            return Witness{"f", {{"trial", static_cast<double>(k)}, {"exact", exact}, {"approx", approx}}};
        });
    }
    return {certified, recheck, scaled};
}

inline Outcome cmd_verify(const RunConfig& cfg) {
    using Suite = std::vector<VerificationReport> (*)(const RunConfig&);
    const std::vector<std::pair<std::string, Suite>> table{
        {"signed-power", suite_signed_power},   {"concavity", suite_concavity},
        {"exponent-map", suite_exponent_map},   {"delta", suite_delta},
        {"epsilon-perturbation", suite_epsilon_perturbation},
        {"single-chunk", suite_single_chunk},   {"entropy-sum", suite_entropy_sum},
        {"chunk-error", suite_chunk_error},     {"dyadic-fit", suite_dyadic_fit}};
    bool found = cfg.suite == "all";
    json reports = json::array();
    bool violation = false;
    for (const auto& [name, fn] : table) {
        if (cfg.suite != "all" && cfg.suite != name)
            continue;
        found = true;
        for (const auto& rep : fn(cfg)) {
            json j = io::to_json(rep);
            j["suite"] = name;
            violation = violation || !rep.ok();
            reports.push_back(std::move(j));
        }
    }
    if (!found)
        throw io::InputError("verify: unknown suite '" + cfg.suite + "'");
    json out = {{"suite", cfg.suite}, {"seed", cfg.seed}, {"trials", cfg.trials}, {"passed", !violation},
                {"reports", std::move(reports)}};
    return {dump(out), violation};
}

inline Outcome dispatch(const RunConfig& cfg) {
    const std::string& c = cfg.command;
    if (c == "norm")
        return cmd_norm(cfg, true);
    if (c == "modular")
        return cmd_norm(cfg, false);
    if (c == "constants-table")
        return cmd_constants_table(cfg);
    if (c == "perturb")
        return cmd_perturb(cfg);
    if (c == "quantize")
        return cmd_quantize(cfg);
    if (c == "embed-check")
        return cmd_embed_check(cfg);
    if (c == "fit")
        return cmd_fit(cfg);
    if (c == "converge")
        return cmd_converge(cfg);
    if (c == "verify")
        return cmd_verify(cfg);
    throw io::InputError("unknown command '" + c + "'");
}

} // namespace detail

/// Runs one command. Results go to `out`, or to cfg.output when set;
/// diagnostics go to `err`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    detail::Outcome result;
    try {
        result = detail::dispatch(cfg);
    } catch (const NotIsometric& e) {
        err << "error: " << e.what() << " (witness " << e.witness() << ")\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    if (cfg.output) {
        std::ofstream file(*cfg.output, std::ios::binary);
        if (!file) {
            err << "error: cannot write " << *cfg.output << '\n';
            return 2;
        }
        file << result.text;
    } else {
        out << result.text;
    }
    if (result.violation) {
        err << "verification failed; see the report for witnesses\n";
        return 1;
    }
    return 0;
}

} // namespace nakano::cli
