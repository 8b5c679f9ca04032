#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "jostscat/io.hpp"

using namespace jostscat;

TEST(ModelJson, RoundTrip) {
    auto const m = noro_taylor();
    auto const back = model_from_json(json::parse(model_to_json(m).dump()));
    EXPECT_EQ(back.n_channels(), 2);
    EXPECT_EQ(back.thresholds(), m.thresholds());
    EXPECT_EQ(back.reduced_masses(), m.reduced_masses());
    ASSERT_EQ(back.terms().size(), 1u);
    EXPECT_EQ(back.terms()[0].coefficient, m.terms()[0].coefficient);
    EXPECT_EQ(back.terms()[0].power, 2);
}

TEST(ModelJson, FlatCoefficientList) {
    auto const j = json::parse(R"({"n_channels": 2, "masses": [1, 1], "thresholds": [0, 0.1],
        "terms": [{"coeff": [-1, -7.5, -7.5, 7.5], "power": 2, "decay": 1}]})");
    auto const m = model_from_json(j);
    EXPECT_EQ(m.terms()[0].coefficient, noro_taylor().terms()[0].coefficient);
    EXPECT_EQ(m.hbar(), 1.0);
    EXPECT_EQ(m.ell().value(), 0);
}

TEST(ModelJson, Errors) {
    EXPECT_THROW(model_from_json(json::parse(R"({"masses": [1]})")), validation_error);
    EXPECT_THROW(model_from_json(json::parse(R"({"n_channels": 2, "masses": [1], "thresholds": [0, 1]})")),
                 validation_error);
    EXPECT_THROW(model_from_json(json::parse(R"({"n_channels": 1, "masses": [1], "thresholds": [0], "ell": -1})")),
                 validation_error);
    EXPECT_THROW(model_from_json(json::parse(R"({"n_channels": 2, "masses": [1, 1], "thresholds": [0, 0.1],
        "terms": [{"coeff": [1, 2, 3], "power": 0, "decay": 1}]})")),
                 validation_error);
    EXPECT_THROW(model_from_json(json::parse(R"({"n_channels": 2, "masses": [1, 1], "thresholds": [0, 0.1],
        "terms": [{"coeff": [[1, 2], [3, 1]], "power": 0, "decay": 1}]})")),
                 validation_error);
}

TEST(Files, MissingAndMalformed) {
    auto const dir = std::filesystem::temp_directory_path();
    EXPECT_THROW(read_json_file((dir / "jostscat-no-such-file.json").string()), io_error);
    auto const bad = (dir / "jostscat-bad.json").string();
    write_text_file(bad, "{ not json");
    EXPECT_THROW(load_model(bad), validation_error);
    auto const good = (dir / "jostscat-good.json").string();
    write_text_file(good, model_to_json(free_model(3)).dump(2));
    EXPECT_EQ(load_model(good).n_channels(), 3);
    std::remove(bad.c_str());
    std::remove(good.c_str());
    EXPECT_THROW(write_text_file((dir / "no-such-dir" / "x.json").string(), "{}"), io_error);
}
