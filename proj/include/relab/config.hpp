#ifndef RELAB_CONFIG_HPP
#define RELAB_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>

#include "relab/landscape.hpp"
#include "relab/loss.hpp"
#include "relab/quadrature.hpp"
#include "relab/serialize.hpp"
#include "relab/targets.hpp"

namespace relab {

// ----------------------------------------------------------------------------
// Experiment configuration (schema-validated; unknown keys rejected)
// ----------------------------------------------------------------------------

struct ExperimentConfig {
    std::optional<Measure> measure;
    std::optional<Target> target;
    std::optional<double> loss_p;
    std::optional<TrainConfig> train;

    struct Oracle {
        std::size_t d = 1;
        std::size_t budget = 300000;
        std::uint64_t seed = 1;
    };
    std::optional<Oracle> oracle;

    struct Perturbation {
        GeneralizedResponse response;
        Vec kappa_grid;
        std::size_t surface_resolution = 256;
    };
    std::optional<Perturbation> perturbation;

    struct ClosureDemo {
        std::optional<HalfSpace> halfspace;
        double jump = 1.0;
        Vec t_grid;
    };
    std::optional<ClosureDemo> closure_demo;

    std::optional<GeneralizedResponse> response; // standalone object (validate)

    struct Eval {
        Json object; // network / tuple / response, detected by fields
        std::vector<Vec> points;
    };
    std::optional<Eval> eval;

    struct Output {
        std::string dir; // empty = resolved by the CLI
        std::string trajectory = "trajectory.csv";
        std::string tuple = "tuple.json";
        std::string report = "report.csv";
        std::string summary = "summary.json";
        std::string csv = "closure.csv";
    };
    Output output;

    LossSpec make_loss() const {
        if (!loss_p) throw ConfigError("config: loss section with exponent p required");
        if (!target) throw ConfigError("config: target section required");
        return lp_loss(*target, *loss_p);
    }
};

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

inline BoxDomain parse_box(const Json& j) {
    check_keys(j, {"lower", "upper"}, "measure.box");
    if (!j.contains("lower") || !j.contains("upper"))
        throw ConfigError("measure.box: lower and upper required");
    return BoxDomain(as_vector(j["lower"], "box.lower"), as_vector(j["upper"], "box.upper"));
}

inline Measure parse_measure(const Json& j) {
    check_keys(j, {"box", "density"}, "measure");
    if (!j.contains("box")) throw ConfigError("measure: box required");
    BoxDomain box = parse_box(j["box"]);
    if (!j.contains("density")) return uniform_measure(std::move(box));
    const Json& jd = j["density"];
    check_keys(jd, {"kind", "center", "sigma", "radius"}, "measure.density");
    const std::string kind = jd.value("kind", "uniform");
    if (kind == "uniform") return uniform_measure(std::move(box));
    if (kind == "truncated-gaussian") {
        if (!jd.contains("center") || !jd.contains("sigma"))
            throw ConfigError("truncated-gaussian density: center and sigma required");
        return truncated_gaussian_measure(std::move(box), as_vector(jd["center"], "center"),
                                          as_number(jd["sigma"], "sigma"));
    }
    if (kind == "bump") {
        if (!jd.contains("center") || !jd.contains("radius"))
            throw ConfigError("bump density: center and radius required");
        return bump_measure(std::move(box), as_vector(jd["center"], "center"),
                            as_number(jd["radius"], "radius"));
    }
    throw ConfigError("measure.density: unknown kind \"" + kind + "\"");
}

inline Target parse_target(const Json& j, std::size_t d_in) {
    check_keys(j, {"kind", "a", "knots", "value"}, "target");
    if (!j.contains("kind")) throw ConfigError("target: kind required");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "abs") return target_abs(d_in);
    if (kind == "ramp") {
        if (!j.contains("a")) throw ConfigError("ramp target: parameter a required");
        return target_ramp(d_in, as_number(j["a"], "target.a"));
    }
    if (kind == "quadratic") return target_quadratic(d_in);
    if (kind == "constant") {
        if (!j.contains("value")) throw ConfigError("constant target: value required");
        return target_constant(d_in, as_number(j["value"], "target.value"));
    }
    if (kind == "custom-piecewise-linear") {
        if (d_in != 1)
            throw ConfigError("custom-piecewise-linear target: input dimension must be 1");
        if (!j.contains("knots")) throw ConfigError("piecewise-linear target: knots required");
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j["knots"]) {
            if (!k.is_array() || k.size() != 2)
                throw ConfigError("piecewise-linear target: knots must be [x, y] pairs");
            knots.emplace_back(as_number(k[0], "knot.x"), as_number(k[1], "knot.y"));
        }
        return target_piecewise_linear(std::move(knots));
    }
    throw ConfigError("target: unknown kind \"" + kind + "\"");
}

inline VolumeRule parse_volume_rule(const Json& j) {
    check_keys(j, {"kind", "resolution", "seed"}, "quadrature");
    VolumeRule rule;
    const std::string kind = j.value("kind", "tensor-gauss");
    if (kind == "tensor-gauss")
        rule.kind = VolumeRule::Kind::tensor_gauss;
    else if (kind == "midpoint")
        rule.kind = VolumeRule::Kind::midpoint;
    else if (kind == "monte-carlo")
        rule.kind = VolumeRule::Kind::monte_carlo;
    else
        throw ConfigError("quadrature: unknown kind \"" + kind + "\"");
    if (j.contains("resolution"))
        rule.resolution = j["resolution"].get<std::size_t>();
    if (j.contains("seed")) rule.seed = j["seed"].get<std::uint64_t>();
    return rule;
}

inline TrainConfig parse_train(const Json& j) {
    check_keys(j, {"d", "step_size", "steps", "init", "gradient", "quadrature",
                   "snapshot_every"},
               "train");
    for (const char* key : {"d", "step_size", "steps"})
        if (!j.contains(key))
            throw ConfigError(std::string("train: key ") + key + " required");
    TrainConfig cfg;
    cfg.d = j["d"].get<std::size_t>();
    cfg.step_size = as_number(j["step_size"], "train.step_size");
    cfg.steps = j["steps"].get<std::size_t>();
    if (j.contains("init")) {
        check_keys(j["init"], {"seed", "scale"}, "train.init");
        if (j["init"].contains("seed")) cfg.init.seed = j["init"]["seed"].get<std::uint64_t>();
        if (j["init"].contains("scale"))
            cfg.init.scale = as_number(j["init"]["scale"], "train.init.scale");
    }
    if (j.contains("gradient")) {
        const std::string g = j["gradient"].get<std::string>();
        if (g == "analytic")
            cfg.gradient = TrainConfig::GradientMode::analytic;
        else if (g == "finite-difference")
            cfg.gradient = TrainConfig::GradientMode::finite_difference;
        else
            throw ConfigError("train.gradient: must be analytic or finite-difference");
    }
    if (j.contains("quadrature")) cfg.quadrature = parse_volume_rule(j["quadrature"]);
    if (j.contains("snapshot_every"))
        cfg.snapshot_every = j["snapshot_every"].get<std::size_t>();
    return cfg;
}

/// Inline object, or a string path resolved against the config directory.
inline Json resolve_object(const Json& j, const std::filesystem::path& base) {
    if (j.is_string()) {
        std::filesystem::path p = j.get<std::string>();
        if (p.is_relative()) p = base / p;
        return load_json_file(p.string());
    }
    return j;
}

} // namespace detail

inline ExperimentConfig parse_config_json(const Json& root,
                                          const std::filesystem::path& base_dir) {
    detail::check_keys(root,
                       {"measure", "target", "loss", "train", "oracle", "perturbation",
                        "closure_demo", "response", "eval", "output"},
                       "config");
    ExperimentConfig cfg;
    if (root.contains("measure")) cfg.measure = detail::parse_measure(root["measure"]);
    if (root.contains("target")) {
        if (!cfg.measure) throw ConfigError("config: target requires a measure (for d_in)");
        cfg.target = detail::parse_target(root["target"], cfg.measure->domain.dim());
    }
    if (root.contains("loss")) {
        detail::check_keys(root["loss"], {"p"}, "loss");
        if (!root["loss"].contains("p")) throw ConfigError("loss: exponent p required");
        cfg.loss_p = as_number(root["loss"]["p"], "loss.p");
    }
    if (root.contains("train")) cfg.train = detail::parse_train(root["train"]);
    if (root.contains("oracle")) {
        detail::check_keys(root["oracle"], {"d", "budget", "seed"}, "oracle");
        ExperimentConfig::Oracle o;
        if (!root["oracle"].contains("d")) throw ConfigError("oracle: d required");
        o.d = root["oracle"]["d"].get<std::size_t>();
        if (root["oracle"].contains("budget"))
            o.budget = root["oracle"]["budget"].get<std::size_t>();
        if (root["oracle"].contains("seed"))
            o.seed = root["oracle"]["seed"].get<std::uint64_t>();
        cfg.oracle = o;
    }
    if (root.contains("perturbation")) {
        detail::check_keys(root["perturbation"],
                           {"response", "kappa_grid", "surface_resolution"}, "perturbation");
        if (!root["perturbation"].contains("response") ||
            !root["perturbation"].contains("kappa_grid"))
            throw ConfigError("perturbation: response and kappa_grid required");
        ExperimentConfig::Perturbation p{
            response_from_json(
                detail::resolve_object(root["perturbation"]["response"], base_dir)),
            as_vector(root["perturbation"]["kappa_grid"], "kappa_grid"), 256};
        if (root["perturbation"].contains("surface_resolution"))
            p.surface_resolution =
                root["perturbation"]["surface_resolution"].get<std::size_t>();
        cfg.perturbation = std::move(p);
    }
    if (root.contains("closure_demo")) {
        detail::check_keys(root["closure_demo"], {"halfspace", "jump", "t_grid"},
                           "closure_demo");
        ExperimentConfig::ClosureDemo c;
        if (root["closure_demo"].contains("halfspace")) {
            const Json& jh = root["closure_demo"]["halfspace"];
            detail::check_keys(jh, {"normal", "offset"}, "closure_demo.halfspace");
            c.halfspace = HalfSpace(UnitVector(as_vector(jh["normal"], "normal")),
                                    as_number(jh["offset"], "offset"));
        }
        if (root["closure_demo"].contains("jump"))
            c.jump = as_number(root["closure_demo"]["jump"], "closure_demo.jump");
        if (!root["closure_demo"].contains("t_grid"))
            throw ConfigError("closure_demo: t_grid required");
        c.t_grid = as_vector(root["closure_demo"]["t_grid"], "t_grid");
        cfg.closure_demo = std::move(c);
    }
    if (root.contains("response"))
        cfg.response =
            response_from_json(detail::resolve_object(root["response"], base_dir));
    if (root.contains("eval")) {
        detail::check_keys(root["eval"], {"object", "points"}, "eval");
        if (!root["eval"].contains("object") || !root["eval"].contains("points"))
            throw ConfigError("eval: object and points required");
        ExperimentConfig::Eval e;
        e.object = detail::resolve_object(root["eval"]["object"], base_dir);
        for (const auto& p : root["eval"]["points"]) e.points.push_back(as_vector(p, "point"));
        cfg.eval = std::move(e);
    }
    if (root.contains("output")) {
        detail::check_keys(root["output"],
                           {"dir", "trajectory", "tuple", "report", "summary", "csv"},
                           "output");
        const Json& jo = root["output"];
        if (jo.contains("dir")) cfg.output.dir = jo["dir"].get<std::string>();
        if (jo.contains("trajectory"))
            cfg.output.trajectory = jo["trajectory"].get<std::string>();
        if (jo.contains("tuple")) cfg.output.tuple = jo["tuple"].get<std::string>();
        if (jo.contains("report")) cfg.output.report = jo["report"].get<std::string>();
        if (jo.contains("summary")) cfg.output.summary = jo["summary"].get<std::string>();
        if (jo.contains("csv")) cfg.output.csv = jo["csv"].get<std::string>();
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    const Json root = load_json_file(path);
    return parse_config_json(root, std::filesystem::path(path).parent_path());
}

} // namespace relab

#endif // RELAB_CONFIG_HPP
