#pragma once

// JSON input/output.
//
//   space:     {"atoms":[{"id":"a1","weight":1.0,"p":1.5}, ...], "r": 2.0,
//               "functions":[{"id":"f","values":{"a1":0.5, ...}}]}
//   function:  {"id":"f", "values":{"a1":0.5, ...}}
//   embedding: {"image":{"a1":[{"atom":"b1","coeff":1.0}, ...], ...}}
//
// "p" defaults to 1, "r" to the largest exponent, and missing function values
// to 0.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nakano/embedding.hpp"
#include "nakano/errors.hpp"
#include "nakano/measure.hpp"
#include "nakano/nakano_space.hpp"
#include "nakano/report.hpp"

namespace nakano::io {

using json = nlohmann::ordered_json;

/// Malformed or invalid input; `what()` names the file and, for syntax
/// errors, the line and column.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NamedFunction {
    std::string id;
    SimpleFunction f;
};

struct SpaceFile {
    NakanoSpace space;
    std::vector<NamedFunction> functions;
};

/// Parses `text`; syntax errors report 1-based line and column.
inline json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                         ": malformed JSON: " + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path);
}

namespace detail {

inline double number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key))
        throw InputError(where + ": missing \"" + key + "\"");
    const json& v = j.at(key);
    if (!v.is_number())
        throw InputError(where + ": \"" + key + "\" must be a number");
    return v.get<double>();
}

inline std::string string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw InputError(where + ": \"" + key + "\" must be a string");
    return j.at(key).get<std::string>();
}

} // namespace detail

inline SimpleFunction function_from_json(const json& j, const AtomicMeasureSpace& space, const std::string& where) {
    if (!j.is_object() || !j.contains("values") || !j.at("values").is_object())
        throw InputError(where + ": function needs a \"values\" object");
    std::vector<double> v(space.size(), 0.0);
    for (const auto& [id, value] : j.at("values").items()) {
        if (!value.is_number())
            throw InputError(where + ": value of atom '" + id + "' must be a number");
        v[space.atoms()->index_of(id)] = value.get<double>();
    }
    return SimpleFunction(space, std::move(v));
}

inline SpaceFile space_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array())
        throw InputError(where + ": space needs an \"atoms\" array");
    std::vector<std::string> ids;
    std::vector<double> weights, p;
    for (const auto& a : j.at("atoms")) {
        if (!a.is_object())
            throw InputError(where + ": every atom must be an object");
        ids.push_back(detail::string(a, "id", where));
        weights.push_back(detail::number(a, "weight", where));
        p.push_back(a.contains("p") ? detail::number(a, "p", where) : 1.0);
    }
    std::optional<double> r;
    if (j.contains("r"))
        r = detail::number(j, "r", where);
    SpaceFile out{NakanoSpace(AtomicMeasureSpace(std::move(ids), std::move(weights)), std::move(p), r), {}};
    if (j.contains("functions")) {
        if (!j.at("functions").is_array())
            throw InputError(where + ": \"functions\" must be an array");
        std::size_t k = 0;
        for (const auto& f : j.at("functions")) {
            std::string id = f.contains("id") ? detail::string(f, "id", where) : "f" + std::to_string(k);
            out.functions.push_back({std::move(id), function_from_json(f, out.space.space(), where)});
            ++k;
        }
    }
    return out;
}

inline RefinementEmbedding embedding_from_json(const json& j, const NakanoSpace& source, const NakanoSpace& target,
                                               const std::string& where) {
    if (!j.is_object() || !j.contains("image") || !j.at("image").is_object())
        throw InputError(where + ": embedding needs an \"image\" object");
    std::map<std::string, std::vector<std::pair<std::string, double>>> map;
    for (const auto& [src, terms] : j.at("image").items()) {
        if (!terms.is_array())
            throw InputError(where + ": image of '" + src + "' must be an array");
        auto& list = map[src];
        for (const auto& t : terms)
            list.emplace_back(detail::string(t, "atom", where), detail::number(t, "coeff", where));
    }
    return RefinementEmbedding::from_ids(source, target, map);
}

// ---------------------------------------------------------------------------
// Output

/// The value printed with 12 significant digits and read back, so JSON dumps
/// show at most 12 digits.
inline double round12(double v) {
    if (!std::isfinite(v))
        return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

/// A JSON number rounded to 12 significant digits; non-finite values become
/// strings ("inf", "-inf", "nan").
inline json num(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return round12(v);
}

/// "%.12g" formatting for CSV cells.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline json to_json(const NakanoSpace& N) {
    json atoms = json::array();
    for (std::size_t i = 0; i < N.size(); ++i)
        atoms.push_back({{"id", N.atoms()->id(i)}, {"weight", num(N.weights()[i])}, {"p", num(N.exponent(i))}});
    return {{"atoms", std::move(atoms)}, {"r", num(N.r())}};
}

inline json to_json(const SimpleFunction& f) {
    json values = json::object();
    for (std::size_t i = 0; i < f.size(); ++i)
        values[f.atoms()->id(i)] = num(f[i]);
    return {{"values", std::move(values)}};
}

inline json to_json(const Witness& w) {
    json values = json::object();
    for (const auto& [k, v] : w.values)
        values[k] = num(v);
    return {{"description", w.description}, {"values", std::move(values)}};
}

inline json to_json(const VerificationReport& r) {
    json failures = json::array();
    for (const auto& w : r.failures)
        failures.push_back(to_json(w));
    json out = {{"name", r.name},
                {"passed", r.ok()},
                {"checked", r.checked},
                {"violations", r.violations},
                {"tolerance", num(r.tolerance)},
                {"worst_margin", num(r.worst_margin)},
                {"worst", to_json(r.worst)}};
    if (!failures.empty())
        out["failures"] = std::move(failures);
    return out;
}

inline json to_json(const CheckResult& c) {
    return {{"name", c.name}, {"passed", c.passed}, {"residual", num(c.residual)}, {"tolerance", num(c.tolerance)}};
}

inline json to_json(const RigidityReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back(to_json(c));
    return {{"passed", r.passed()}, {"isometry", to_json(r.isometry)}, {"checks", std::move(checks)}};
}

} // namespace nakano::io
