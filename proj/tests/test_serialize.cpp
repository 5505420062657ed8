#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "relab/config.hpp"
#include "relab/csv.hpp"
#include "relab/serialize.hpp"

using namespace relab;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("relab_serialize_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("network serialization round trip is lossless") {
    NetworkConfig cfg;
    cfg.W1 = {{1.0 / 3.0, -2.7182818284590452}, {1e-17, 5.0}};
    cfg.b1 = {0.1, -0.2};
    cfg.W2 = {1e300, -3.0};
    cfg.b2 = 0.75;
    const Json j = network_to_json(cfg);
    const NetworkConfig back = network_from_json(Json::parse(j.dump()));
    CHECK(back.W1 == cfg.W1);
    CHECK(back.b1 == cfg.b1);
    CHECK(back.W2 == cfg.W2);
    CHECK(back.b2 == cfg.b2);
}

TEST_CASE("tuple serialization round trip is lossless") {
    const EffectiveTuple t(
        {UnitVector::normalized(Vec{3.0, 4.0}), UnitVector::normalized(Vec{-1.0, 1.0})},
        {0.1234567890123456789, -7.0}, {1.0 / 7.0, 2.0}, -0.3);
    const EffectiveTuple back = tuple_from_json(Json::parse(tuple_to_json(t).dump()));
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(back.normals[j].components() == t.normals[j].components());
        CHECK(back.offsets[j] == t.offsets[j]);
        CHECK(back.kinks[j] == t.kinks[j]);
    }
    CHECK(back.bias == t.bias);
}

TEST_CASE("response serialization preserves structure and values") {
    GeneralizedResponse r;
    r.affine_linear = {0.25, -1.0 / 3.0};
    r.affine_const = 2.0;
    r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{1, 0}), -0.3),
                          Vec{0.5, 0.5}, 1.0, 2});
    r.m0 = 1;
    r.case_tag = ResponseCase::a;
    const GeneralizedResponse back =
        response_from_json(Json::parse(response_to_json(r).dump()));
    CHECK(back.affine_linear == r.affine_linear);
    CHECK(back.affine_const == r.affine_const);
    CHECK(back.summands.size() == 1);
    CHECK(back.summands[0].delta == r.summands[0].delta);
    CHECK(back.summands[0].jump == r.summands[0].jump);
    CHECK(back.summands[0].multiplicity == 2);
    CHECK(back.m0 == 1);
    CHECK(back.case_tag == ResponseCase::a);
}

TEST_CASE("numbers parse from decimal and hex-float strings") {
    CHECK(as_number(Json("0x1.8p-1"), "t") == 0.75);
    CHECK(as_number(Json("1e3"), "t") == 1000.0);
    CHECK(as_number(Json(2.5), "t") == 2.5);
    CHECK_THROWS_AS(as_number(Json("zebra"), "t"), ConfigError);
    CHECK_THROWS_AS(as_number(Json(true), "t"), ConfigError);
}

TEST_CASE("config parsing: full experiment file") {
    TempDir tmp;
    const std::string cfg_path = (tmp.path / "exp.json").string();
    {
        std::ofstream out(cfg_path);
        out << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}, "density": {"kind": "uniform"}},
  "target": {"kind": "abs"},
  "loss": {"p": 2},
  "train": {"d": 2, "step_size": "0x1.999999999999ap-5", "steps": 100,
            "init": {"seed": 7, "scale": 1.0}, "gradient": "analytic",
            "quadrature": {"kind": "tensor-gauss", "resolution": 24}},
  "output": {"dir": ".", "trajectory": "traj.csv"}
})";
    }
    const ExperimentConfig cfg = parse_config_file(cfg_path);
    REQUIRE(cfg.measure.has_value());
    CHECK(cfg.measure->domain.dim() == 1);
    REQUIRE(cfg.train.has_value());
    CHECK(cfg.train->d == 2);
    CHECK(cfg.train->step_size == Catch::Approx(0.05));
    CHECK(cfg.train->init.seed == 7);
    REQUIRE(cfg.loss_p.has_value());
    const LossSpec loss = cfg.make_loss();
    CHECK(loss(Vec{0.5}, 1.0) == Catch::Approx(0.25));
}

TEST_CASE("config parsing rejects unknown keys") {
    TempDir tmp;
    const std::string cfg_path = (tmp.path / "bad.json").string();
    {
        std::ofstream out(cfg_path);
        out << R"({"measure": {"box": {"lower": [-1], "upper": [1]}}, "turbo": true})";
    }
    CHECK_THROWS_AS(parse_config_file(cfg_path), ConfigError);
}

TEST_CASE("config parsing resolves relative response paths") {
    TempDir tmp;
    {
        std::ofstream out((tmp.path / "resp.json").string());
        GeneralizedResponse r;
        r.affine_linear = {0.0, 0.0};
        r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{1, 0}), -0.3),
                              Vec{0.0, 0.0}, 1.0, 2});
        r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{-1, 0}), -0.3),
                              Vec{0.0, 0.0}, 0.5, 2});
        r.m0 = 0;
        r.case_tag = ResponseCase::b;
        out << response_to_json(r).dump(2);
    }
    const std::string cfg_path = (tmp.path / "exp.json").string();
    {
        std::ofstream out(cfg_path);
        out << R"({"response": "resp.json"})";
    }
    const ExperimentConfig cfg = parse_config_file(cfg_path);
    REQUIRE(cfg.response.has_value());
    CHECK(cfg.response->summands.size() == 2);
    CHECK(validate(*cfg.response).empty());
}

TEST_CASE("csv writer formats floats at full precision") {
    CsvWriter csv({"a", "b"});
    csv.row({1.0 / 3.0, 1e-17});
    CHECK(csv.str() == "a,b\n0.33333333333333331,1.0000000000000001e-17\n");
    CHECK_THROWS_AS(csv.row({1.0}), InvalidArgument);
}
