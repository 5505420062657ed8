// Command-line front end: experiment configs in, CSV/JSON artifacts out.
// Exit codes: 0 success, 1 domain violation, 2 usage/parse error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "relab/closure.hpp"
#include "relab/config.hpp"
#include "relab/csv.hpp"
#include "relab/landscape.hpp"
#include "relab/serialize.hpp"

namespace {

using namespace relab;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

std::filesystem::path resolve_out_dir(const CommonArgs& args, const ExperimentConfig& cfg) {
    std::string dir;
    if (!args.out_dir.empty())
        dir = args.out_dir;
    else if (!cfg.output.dir.empty())
        dir = cfg.output.dir;
    else if (const char* env = std::getenv("RELAB_OUT_DIR"))
        dir = env;
    else
        dir = ".";
    std::filesystem::create_directories(dir);
    return dir;
}

Measure require_measure(const ExperimentConfig& cfg) {
    if (!cfg.measure) throw ConfigError("config: measure section required");
    return *cfg.measure;
}

int cmd_validate(const CommonArgs& args) {
    const ExperimentConfig cfg = parse_config_file(args.config_path);
    std::size_t total = 0;
    if (cfg.response) {
        const auto violations = validate(*cfg.response);
        for (const auto& v : violations) std::cout << "response violation: " << v << "\n";
        total += violations.size();
    }
    if (cfg.loss_p && cfg.target && cfg.measure) {
        const LossSpec loss = cfg.make_loss();
        const auto audit = loss_audit(loss, *cfg.measure, 32);
        for (const auto& v : audit.violations)
            std::cout << "loss violation (" << v.check << "): " << v.detail << "\n";
        total += audit.violations.size();
    }
    if (total == 0) {
        std::cout << "ok\n";
        return 0;
    }
    std::cout << total << " violation(s)\n";
    return 1;
}

int cmd_train(const CommonArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (!cfg.train) throw ConfigError("config: train section required");
    const Measure m = require_measure(cfg);
    const LossSpec loss = cfg.make_loss();
    TrainConfig tc = *cfg.train;
    if (args.seed) tc.init.seed = *args.seed;

    const auto audit = loss_audit(loss, m, 32);
    if (!audit.strict_convexity_clean()) {
        for (const auto& v : audit.violations)
            std::cout << "loss violation (" << v.check << "): " << v.detail << "\n";
        return 1;
    }

    const TrainResult result = train(tc, loss, m);
    const auto out_dir = resolve_out_dir(args, cfg);

    CsvWriter csv({"step", "err", "param_norm"});
    for (const auto& rec : result.trajectory.records)
        csv.row({static_cast<double>(rec.step), rec.err, rec.param_norm});
    csv.write_file((out_dir / cfg.output.trajectory).string());
    save_json_file((out_dir / cfg.output.tuple).string(), tuple_to_json(result.best));

    std::cout << "best err = " << format_double(result.best_err) << "\n";
    if (tc.d == 0) {
        const auto [c, cerr] = best_constant(loss, m);
        std::cout << "closed-form best constant = " << format_double(c)
                  << ", err = " << format_double(cerr)
                  << ", optimizer gap = " << format_double(result.best_err - cerr) << "\n";
    }
    if (result.status == TrainStatus::non_finite_loss) {
        std::cout << "status: non-finite loss encountered, aborted\n";
        return 1;
    }
    std::cout << "divergence verdict: " << to_string(divergence_report(result.trajectory))
              << "\n";
    return 0;
}

int cmd_oracle(const CommonArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (!cfg.oracle) throw ConfigError("config: oracle section required");
    const Measure m = require_measure(cfg);
    const LossSpec loss = cfg.make_loss();
    auto oc = *cfg.oracle;
    if (args.seed) oc.seed = *args.seed;

    const OracleResult result = oracle_min(oc.d, loss, m, oc.budget, oc.seed);
    const auto out_dir = resolve_out_dir(args, cfg);
    Json j;
    j["err"] = result.err;
    j["tuple"] = tuple_to_json(result.tuple);
    save_json_file((out_dir / cfg.output.summary).string(), j);
    std::cout << "oracle err (d = " << oc.d << ") = " << format_double(result.err) << "\n";
    return 0;
}

int cmd_perturb(const CommonArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (!cfg.perturbation) throw ConfigError("config: perturbation section required");
    const Measure m = require_measure(cfg);
    const LossSpec loss = cfg.make_loss();

    PerturbationReport report;
    try {
        report = verify_improvement(cfg.perturbation->response, loss, m,
                                    cfg.perturbation->kappa_grid,
                                    SurfaceRule{cfg.perturbation->surface_resolution});
    } catch (const AuditFailed& e) {
        std::cout << e.what() << "\n";
        const auto audit = loss_audit(loss, m, 32);
        for (const auto& v : audit.violations)
            std::cout << "loss violation (" << v.check << "): " << v.detail << "\n";
        return 1;
    }

    const auto out_dir = resolve_out_dir(args, cfg);
    CsvWriter csv({"kappa", "err_R", "err_plus", "err_minus", "scaled_sum"});
    for (std::size_t i = 0; i < report.kappa_grid.size(); ++i)
        csv.row({report.kappa_grid[i], report.err_r, report.err_plus[i], report.err_minus[i],
                 report.scaled_sum[i]});
    csv.write_file((out_dir / cfg.output.report).string());

    Json j;
    j["decrement"] = report.decrement;
    j["err_R"] = report.err_r;
    if (report.improving_kappa)
        j["improving_kappa"] = *report.improving_kappa;
    else
        j["improving_kappa"] = nullptr;
    save_json_file((out_dir / cfg.output.summary).string(), j);

    std::cout << "decrement = " << format_double(report.decrement) << "\n";
    if (report.improving_kappa)
        std::cout << "improving kappa = " << format_double(*report.improving_kappa) << "\n";
    else
        std::cout << "no improving kappa in the grid\n";
    return report.decrement < 0.0 && !report.improving_kappa ? 1 : 0;
}

int cmd_closure_demo(const CommonArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (!cfg.closure_demo) throw ConfigError("config: closure_demo section required");
    const Measure m = require_measure(cfg);
    if (!cfg.loss_p) throw ConfigError("config: loss section required");
    const double p = *cfg.loss_p;

    const HalfSpace plane = cfg.closure_demo->halfspace
                                ? *cfg.closure_demo->halfspace
                                : HalfSpace(UnitVector::axis(m.domain.dim(), 0), 0.0);
    const double jump = cfg.closure_demo->jump;

    // Target is the discontinuous limit itself: the jump across the plane.
    auto step_fn = [plane, jump](PointView x) {
        return side(plane, x) == Side::inside ? jump : 0.0;
    };
    LossSpec loss = lp_loss(ScalarField(step_fn), p);
    loss.target_kinks.push_back(plane);

    const auto out_dir = resolve_out_dir(args, cfg);
    CsvWriter csv({"t", "err", "param_norm"});
    for (double t : cfg.closure_demo->t_grid) {
        const EffectiveTuple tuple = discontinuity_approximant(plane, jump, t);
        std::vector<HalfSpace> lines = loss.target_kinks;
        for (std::size_t j = 0; j < tuple.neuron_count(); ++j)
            lines.push_back(tuple.activity(j));
        const double err = error_functional_piecewise(
            [&](PointView x) { return eval_tuple(tuple, x); }, loss.pointwise, m, lines, 24);
        const double param_norm = norm_inf(flatten(from_effective(tuple)));
        csv.row({t, err, param_norm});
    }
    csv.write_file((out_dir / cfg.output.csv).string());
    std::cout << "wrote " << (out_dir / cfg.output.csv).string() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (!cfg.eval) throw ConfigError("config: eval section required");
    const Json& obj = cfg.eval->object;

    std::function<double(PointView)> fn;
    if (obj.contains("W1")) {
        const NetworkConfig net = network_from_json(obj);
        fn = [net](PointView x) { return eval_network(net, x); };
    } else if (obj.contains("normals")) {
        const EffectiveTuple t = tuple_from_json(obj);
        fn = [t](PointView x) { return eval_tuple(t, x); };
    } else if (obj.contains("summands")) {
        const GeneralizedResponse r = response_from_json(obj);
        ensure_valid(r);
        fn = [r](PointView x) { return eval_generalized(r, x); };
    } else {
        throw ConfigError("eval.object: expected a network, tuple or response");
    }

    for (const Vec& x : cfg.eval->points) {
        for (double c : x) std::cout << format_double(c) << ",";
        std::cout << format_double(fn(x)) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"shallow ReLU response laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    const char* names[] = {"validate", "train", "oracle", "perturb", "closure-demo", "eval"};
    const char* descs[] = {"check a response and loss against their structural contracts",
                           "gradient-descent training over network parameters",
                           "brute-force reference search over effective tuples",
                           "finite-kappa perturbation study of a generalized response",
                           "diverging family approaching a jump response",
                           "evaluate a serialized object at points"};
    for (std::size_t i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        sub->add_option("--config", args.config_path, "experiment config (JSON)")
            ->required();
        sub->add_option("--seed", args.seed, "override the config seed");
        sub->add_option("--out-dir", args.out_dir, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "validate") return cmd_validate(args);
        if (sub == "train") return cmd_train(args);
        if (sub == "oracle") return cmd_oracle(args);
        if (sub == "perturb") return cmd_perturb(args);
        if (sub == "closure-demo") return cmd_closure_demo(args);
        if (sub == "eval") return cmd_eval(args);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
