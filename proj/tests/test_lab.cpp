#include "ssl/lab.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

using namespace ssl::lab;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ssl_lab_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

ExperimentConfig small_ground_state(const std::filesystem::path& out) {
    ExperimentConfig c = default_config("ground-state");
    c.n = 256;
    c.r_max = 20.0;
    c.output_dir = out.string();
    return c;
}

}  // namespace

TEST(Config, EveryExperimentHasDefaultsThatRoundTrip) {
    ASSERT_EQ(experiment_names().size(), 12u);
    for (const auto& name : experiment_names()) {
        const ExperimentConfig c = default_config(name);
        EXPECT_EQ(c.experiment, name);
        const ExperimentConfig back = parse_config(c.to_json());
        EXPECT_EQ(back.to_json(), c.to_json()) << name;
    }
}

TEST(Config, CommittedFilesMatchDefaults) {
    for (const auto& name : experiment_names()) {
        const ExperimentConfig c = load_config(std::filesystem::path(SSL_CONFIG_DIR) / (name + ".json"));
        EXPECT_EQ(c.to_json(), default_config(name).to_json()) << name;
    }
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
    json doc = default_config("spectrum").to_json();
    for (auto mutate : {+[](json& d) { d["colour"] = 1; }, +[](json& d) { d["grid"]["dx"] = 0.1; },
                        +[](json& d) { d["tolerances"]["made_up"] = 1e-3; },
                        +[](json& d) { d["options"]["made_up"] = 1; }}) {
        json d = doc;
        mutate(d);
        EXPECT_THROW(parse_config(d), ConfigError) << d.dump();
    }
}

TEST(Config, RejectsBadValues) {
    json doc = default_config("ground-state").to_json();
    auto bad = [&](auto&& edit) {
        json d = doc;
        edit(d);
        EXPECT_THROW(parse_config(d), ConfigError) << d.dump();
    };
    bad([](json& d) { d["alpha"] = 5.0; });
    bad([](json& d) { d["alpha"] = "one"; });
    bad([](json& d) { d["grid"]["n"] = 8; });
    bad([](json& d) { d["tolerances"]["residual"] = -1.0; });
    bad([](json& d) { d["options"]["scale_alpha"] = "two"; });
    bad([](json& d) { d["experiment"] = "nope"; });
    EXPECT_THROW(parse_config(doc, "spectrum"), ConfigError);
    EXPECT_THROW(parse_config(json::array()), ConfigError);
}

TEST(Config, PartialDocumentKeepsDefaults) {
    const ExperimentConfig c = parse_config(json{{"experiment", "evolve"}, {"alpha", 0.5}});
    EXPECT_EQ(c.alpha, 0.5);
    EXPECT_EQ(c.n, default_config("evolve").n);
    EXPECT_EQ(c.tolerances, default_config("evolve").tolerances);
}

TEST(Lab, Sha256KnownVector) {
    const auto dir = scratch("sha");
    std::ofstream(dir / "abc", std::ios::binary) << "abc";
    EXPECT_EQ(file_sha256(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Lab, ThreadResolution) {
    ::unsetenv("SSL_THREADS");
    EXPECT_EQ(resolve_threads(0), 1);
    EXPECT_EQ(resolve_threads(3), 3);
    ::setenv("SSL_THREADS", "2", 1);
    EXPECT_EQ(resolve_threads(0), 2);
    EXPECT_EQ(resolve_threads(5), 5);
    ::setenv("SSL_THREADS", "zero", 1);
    EXPECT_THROW(resolve_threads(0), ConfigError);
    ::unsetenv("SSL_THREADS");
}

TEST(Lab, PlotdataFromEmptyManifest) {
    const auto dir = scratch("plot");
    RunManifest m;
    m.config = default_config("ground-state");
    const auto missing = emit_plotdata(m, dir);
    EXPECT_EQ(missing.size(), 6u);
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
        std::ifstream in(f.path());
        std::string header, extra;
        std::getline(in, header);
        EXPECT_FALSE(header.empty()) << f.path();
        EXPECT_FALSE(std::getline(in, extra)) << f.path();
    }
}

TEST(Lab, RunIsDeterministic) {
    const auto dir = scratch("det");
    auto c = small_ground_state(dir / "a");
    const RunManifest a = run(c);
    c.output_dir = (dir / "b").string();
    const RunManifest b = run(c);
    ASSERT_TRUE(a.failed_stage.empty()) << a.error;
    ASSERT_FALSE(a.artifacts.empty());
    ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
    for (size_t i = 0; i < a.artifacts.size(); ++i) {
        EXPECT_EQ(a.artifacts[i].file, b.artifacts[i].file);
        EXPECT_EQ(a.artifacts[i].sha256, b.artifacts[i].sha256) << a.artifacts[i].file;
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / "ground-state" / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / "ground-state" / "plotdata"));
}

TEST(Lab, RunsLogAppends) {
    const auto dir = scratch("log");
    const auto c = small_ground_state(dir);
    run(c);
    run(c);
    std::ifstream in(dir / "ground-state" / "runs.jsonl");
    int lines = 0;
    for (std::string line; std::getline(in, line);) {
        EXPECT_TRUE(json::accept(line));
        ++lines;
    }
    EXPECT_EQ(lines, 2);
}

TEST(Lab, ManifestVerdicts) {
    RunManifest m;
    EXPECT_FALSE(m.criterion_ok(1));  // nothing asserted
    m.checks.push_back({"a", 1, 0.5, 1.0, 0.0, "<", true, true, ""});
    m.checks.push_back({"report", 1, 2.0, 1.0, 0.0, "<", false, false, ""});
    EXPECT_TRUE(m.ok());
    EXPECT_TRUE(m.criterion_ok(1));
    m.failed_stage = "solve";
    EXPECT_FALSE(m.ok());
    EXPECT_FALSE(m.criterion_ok(1));
}

TEST(Lab, VersionString) { EXPECT_EQ(version_string().rfind("ssl ", 0), 0u); }
