#ifndef RELAB_SERIALIZE_HPP
#define RELAB_SERIALIZE_HPP

#include <fstream>
#include <string>

#include "json.hpp"

#include "relab/common.hpp"
#include "relab/response.hpp"

namespace relab {

using Json = nlohmann::json;

/// Numbers may be plain JSON numbers or strings holding a decimal or
/// hex-float literal (e.g. "0x1.8p-1").
inline double as_number(const Json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0')
            throw ConfigError(where + ": cannot parse number from \"" + s + "\"");
        return v;
    }
    throw ConfigError(where + ": expected a number");
}

inline Vec as_vector(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    Vec v;
    v.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(as_number(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

// ----------------------------------------------------------------------------
// NetworkConfig
// ----------------------------------------------------------------------------

inline Json network_to_json(const NetworkConfig& cfg) {
    Json j;
    j["W1"] = Json::array();
    for (const Vec& row : cfg.W1) j["W1"].push_back(row);
    j["b1"] = cfg.b1;
    j["W2"] = cfg.W2;
    j["b2"] = cfg.b2;
    return j;
}

inline NetworkConfig network_from_json(const Json& j) {
    if (!j.contains("W1") || !j.contains("b1") || !j.contains("W2") || !j.contains("b2"))
        throw ConfigError("network: fields W1, b1, W2, b2 required");
    std::vector<Vec> w1;
    for (std::size_t r = 0; r < j["W1"].size(); ++r)
        w1.push_back(as_vector(j["W1"][r], "W1 row"));
    return NetworkConfig(std::move(w1), as_vector(j["b1"], "b1"), as_vector(j["W2"], "W2"),
                         as_number(j["b2"], "b2"));
}

// ----------------------------------------------------------------------------
// EffectiveTuple
// ----------------------------------------------------------------------------

inline Json tuple_to_json(const EffectiveTuple& t) {
    Json j;
    j["normals"] = Json::array();
    for (const UnitVector& n : t.normals) j["normals"].push_back(n.components());
    j["offsets"] = t.offsets;
    j["kinks"] = t.kinks;
    j["bias"] = t.bias;
    return j;
}

inline EffectiveTuple tuple_from_json(const Json& j) {
    if (!j.contains("normals") || !j.contains("offsets") || !j.contains("kinks") ||
        !j.contains("bias"))
        throw ConfigError("tuple: fields normals, offsets, kinks, bias required");
    std::vector<UnitVector> normals;
    for (std::size_t r = 0; r < j["normals"].size(); ++r)
        normals.push_back(UnitVector(as_vector(j["normals"][r], "normal")));
    return EffectiveTuple(std::move(normals), as_vector(j["offsets"], "offsets"),
                          as_vector(j["kinks"], "kinks"), as_number(j["bias"], "bias"));
}

// ----------------------------------------------------------------------------
// GeneralizedResponse
// ----------------------------------------------------------------------------

inline Json response_to_json(const GeneralizedResponse& r) {
    Json j;
    j["affine_linear"] = r.affine_linear;
    j["affine_const"] = r.affine_const;
    j["summands"] = Json::array();
    for (const auto& s : r.summands) {
        Json js;
        js["halfspace"] = {{"normal", s.halfspace.normal.components()},
                           {"offset", s.halfspace.offset}};
        js["delta"] = s.delta;
        js["jump"] = s.jump;
        js["multiplicity"] = s.multiplicity;
        j["summands"].push_back(std::move(js));
    }
    j["m0"] = r.m0;
    j["case_tag"] = to_string(r.case_tag);
    return j;
}

inline GeneralizedResponse response_from_json(const Json& j) {
    for (const char* key : {"affine_linear", "affine_const", "summands", "m0", "case_tag"})
        if (!j.contains(key))
            throw ConfigError(std::string("response: field ") + key + " required");
    GeneralizedResponse r;
    r.affine_linear = as_vector(j["affine_linear"], "affine_linear");
    r.affine_const = as_number(j["affine_const"], "affine_const");
    for (std::size_t k = 0; k < j["summands"].size(); ++k) {
        const Json& js = j["summands"][k];
        if (!js.contains("halfspace") || !js.contains("delta") || !js.contains("jump") ||
            !js.contains("multiplicity"))
            throw ConfigError("summand: fields halfspace, delta, jump, multiplicity required");
        HalfSpace hs(UnitVector(as_vector(js["halfspace"]["normal"], "normal")),
                     as_number(js["halfspace"]["offset"], "offset"));
        GeneralizedResponse::Summand s{std::move(hs), as_vector(js["delta"], "delta"),
                                       as_number(js["jump"], "jump"),
                                       js["multiplicity"].get<int>()};
        r.summands.push_back(std::move(s));
    }
    r.m0 = j["m0"].get<int>();
    const std::string tag = j["case_tag"].get<std::string>();
    if (tag == "a")
        r.case_tag = ResponseCase::a;
    else if (tag == "b")
        r.case_tag = ResponseCase::b;
    else if (tag == "c")
        r.case_tag = ResponseCase::c;
    else
        throw ConfigError("response: case_tag must be one of a, b, c");
    return r;
}

// ----------------------------------------------------------------------------
// Files
// ----------------------------------------------------------------------------

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw ConfigError("parse failure in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace relab

#endif // RELAB_SERIALIZE_HPP
