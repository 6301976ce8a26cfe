#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "lorehm/cli.hpp"
#include "lorehm/io.hpp"
#include "lorehm/pipeline.hpp"
#include "test_support.hpp"

using namespace lorehm;
using testing_support::TempDir;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

io::Json last_json_line(const std::string& text) {
    auto trimmed = text.substr(0, text.find_last_not_of('\n') + 1);
    return io::Json::parse(trimmed.substr(trimmed.rfind('\n') + 1));
}

} // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
    const auto r = run({"frobnicate"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(last_json_line(r.err)["error"]["kind"], "usage");
}

TEST(Cli, MissingSubcommandIsUsageError) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"vote"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("gen-synthetic"), std::string::npos);
}

TEST(Cli, MissingConfigIsConfigError) {
    const auto r = run({"gather"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(last_json_line(r.err)["error"]["kind"], "config");
}

TEST(Cli, EvenKRejectedWithField) {
    TempDir dir;
    ASSERT_EQ(run({"gen-synthetic", "--out", dir.path().string()}).code, 0);
    auto text = io::read_file(dir / "config.toml");
    text.replace(text.find("k = 5"), 5, "k = 4");
    io::write_file_atomic(dir / "config.toml", text);
    const auto r = run({"--config", (dir / "config.toml").string(), "run"});
    EXPECT_EQ(r.code, 1);
    const auto e = last_json_line(r.err)["error"];
    EXPECT_EQ(e["kind"], "config");
    EXPECT_EQ(e["field"], "rsa.k");
    EXPECT_NE(e["message"].get<std::string>().find("odd"), std::string::npos);
}

TEST(Cli, GenSyntheticThenIngest) {
    TempDir dir;
    const auto gen = run({"gen-synthetic", "--out", dir.path().string(), "--test-per-class", "5"});
    ASSERT_EQ(gen.code, 0) << gen.err;
    EXPECT_EQ(last_json_line(gen.out)["test"], 10);
    const auto ingest = run({"--config", (dir / "config.toml").string(), "ingest"});
    ASSERT_EQ(ingest.code, 0) << ingest.err;
    const auto j = last_json_line(ingest.out);
    EXPECT_EQ(j["train"]["labels"]["harmful"], 100);
    EXPECT_EQ(j["missing_embeddings"].size(), 0u);
    const auto single = run({"ingest", "--manifest", (dir / "test.jsonl").string()});
    EXPECT_EQ(last_json_line(single.out)["labels"]["harmless"], 5);
}

TEST(Cli, VoteMatchesLibrary) {
    TempDir dir;
    ASSERT_EQ(run({"gen-synthetic", "--out", dir.path().string()}).code, 0);
    const auto config_path = (dir / "config.toml").string();
    const auto r = run({"--config", config_path, "--seed", "2", "vote", "t005"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = last_json_line(r.out);

    auto config = load_config(config_path);
    Pipeline pipeline(config);
    const auto p = pipeline.preliminary(2, "t005");
    EXPECT_EQ(j["target_id"], "t005");
    EXPECT_EQ(j["value"], std::string(to_string(p.value)));
    EXPECT_EQ(j["harmful_votes"], p.harmful_votes);
    EXPECT_EQ(j["k"], 5);

    const auto retrieved = last_json_line(run({"--config", config_path, "--seed", "2", "retrieve", "t005"}).out);
    const auto lib = pipeline.retrieve(2, "t005");
    ASSERT_EQ(retrieved["neighbors"].size(), lib.neighbors.size());
    for (std::size_t i = 0; i < lib.neighbors.size(); ++i) {
        EXPECT_EQ(retrieved["neighbors"][i]["id"], lib.neighbors[i].id);
        EXPECT_EQ(retrieved["neighbors"][i]["score"].get<double>(), lib.neighbors[i].score);
    }
}

TEST(Cli, StagesThenRun) {
    TempDir dir;
    ASSERT_EQ(run({"gen-synthetic", "--out", dir.path().string(), "--test-per-class", "6"}).code, 0);
    const auto config_path = (dir / "config.toml").string();
    const auto gather = run({"--config", config_path, "--seed", "1", "gather"});
    ASSERT_EQ(gather.code, 0) << gather.err;
    EXPECT_EQ(last_json_line(gather.out)["trajectories"], 50);
    const auto reflect = run({"--config", config_path, "--seed", "1", "reflect"});
    ASSERT_EQ(reflect.code, 0) << reflect.err;
    EXPECT_LE(last_json_line(reflect.out)["insights"].size(), 10u);
    const auto infer = run({"--config", config_path, "--seed", "1", "infer", "t000"});
    ASSERT_EQ(infer.code, 0) << infer.err;
    EXPECT_EQ(last_json_line(infer.out)["meme_id"], "t000");
    const auto all = run({"--config", config_path, "run"});
    ASSERT_EQ(all.code, 0) << all.err;
    const auto summary = last_json_line(all.out);
    EXPECT_EQ(summary["seeds"].size(), 5u);
    EXPECT_TRUE(summary["mean_accuracy"].is_number());
    const auto eval = run({"--config", config_path, "--seed", "3", "eval"});
    ASSERT_EQ(eval.code, 0) << eval.err;
    EXPECT_EQ(last_json_line(eval.out)["seed"], 3);
}

TEST(Cli, UnknownMemeIsRuntimeError) {
    TempDir dir;
    ASSERT_EQ(run({"gen-synthetic", "--out", dir.path().string()}).code, 0);
    const auto r = run({"--config", (dir / "config.toml").string(), "vote", "nope"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(last_json_line(r.err)["error"]["kind"], "runtime");
}

TEST(Cli, OverridesApply) {
    TempDir dir;
    ASSERT_EQ(run({"gen-synthetic", "--out", dir.path().string(), "--test-per-class", "4"}).code, 0);
    const auto r = run({"--config", (dir / "config.toml").string(), "--persona", "cheerful", "run"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(last_json_line(r.err)["error"]["field"], "backend.persona");
    const auto alt = run({"--config", (dir / "config.toml").string(), "--run-dir", (dir / "alt").string(),
                          "--no-cache", "--seed", "4", "gather"});
    ASSERT_EQ(alt.code, 0) << alt.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "alt"));
    EXPECT_FALSE(std::filesystem::exists(dir / "runs"));
}
