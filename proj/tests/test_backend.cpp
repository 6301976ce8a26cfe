#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lorehm/backend.hpp"
#include "lorehm/error.hpp"
#include "lorehm/prompts.hpp"
#include "test_support.hpp"

using namespace lorehm;
using nlohmann::json;

namespace {

LmmRequest cot_request(const std::string& text, std::optional<std::string> image = std::nullopt) {
    return {std::string(prompts::kCotTemplateId), prompts::render_cot_prompt({"m", "", text, std::nullopt}),
            std::move(image), {0.0, "test-model"}};
}

LmmRequest final_request(const std::string& text, HarmLabel prior) {
    return {std::string(prompts::kFinalTemplateId),
            prompts::render_final_prompt({"m", "", text, std::nullopt}, {"m", prior, 0, 5}, {}),
            std::nullopt,
            {0.0, "test-model"}};
}

HarmLabel answer_of(LmmBackend& b, const LmmRequest& r) { return parse_verdict(b.complete(r).text)->answer; }

class CountingBackend final : public LmmBackend {
public:
    LmmResponse complete(const LmmRequest& r) override {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        ++calls;
        return {"echo " + r.prompt, 0, "counting"};
    }
    std::string id() const override { return "counting"; }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
    std::atomic<int> calls{0};
};

// Local chat-completions server on an ephemeral port.
class FakeServer {
public:
    FakeServer() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeServer() {
        server.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }
    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

std::string completion(const std::string& content) {
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

RemoteOptions fast_options(std::string endpoint) {
    RemoteOptions o;
    o.endpoint = std::move(endpoint);
    o.api_key = "sk-test";
    o.max_retries = 2;
    o.initial_backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::seconds(5);
    return o;
}

} // namespace

TEST(Fingerprint, StableAndSensitive) {
    const auto base = cot_request("hello");
    const auto fp = fingerprint(base);
    EXPECT_EQ(fp.size(), 16u);
    EXPECT_EQ(fp, fingerprint(base));
    auto other = base;
    other.params.model = "other";
    EXPECT_NE(fingerprint(other), fp);
    other = base;
    other.template_id = "final.v1";
    EXPECT_NE(fingerprint(other), fp);
    other = base;
    other.image_ref = "/x/m.png";
    EXPECT_NE(fingerprint(other), fp);
    // only the file name of the image participates
    auto moved = other;
    moved.image_ref = "/elsewhere/m.png";
    EXPECT_EQ(fingerprint(moved), fingerprint(other));
}

TEST(Fingerprint, FieldBoundariesMatter) {
    LmmRequest a{"ab", "c", std::nullopt, {0.0, "m"}};
    LmmRequest b{"a", "bc", std::nullopt, {0.0, "m"}};
    EXPECT_NE(fingerprint(a), fingerprint(b));
}

TEST(MockBackend, FixtureWins) {
    const auto req = cot_request("##H## obviously");
    MockBackend mock({{{fingerprint(req), "Thought: scripted Answer: harmless"}}, MockPersona::oracle, {"##H##"}});
    EXPECT_EQ(mock.complete(req).text, "Thought: scripted Answer: harmless");
}

TEST(MockBackend, NonePersonaRequiresFixture) {
    MockBackend mock({{}, MockPersona::none, {}});
    EXPECT_THROW(mock.complete(cot_request("x")), BackendError);
}

TEST(MockBackend, OracleFollowsMarker) {
    MockBackend mock({{}, MockPersona::oracle, {"##H##"}});
    EXPECT_EQ(answer_of(mock, cot_request("they ##H## are vermin")), HarmLabel::harmful);
    EXPECT_EQ(answer_of(mock, cot_request("cute dog")), HarmLabel::harmless);
    EXPECT_EQ(answer_of(mock, final_request("cute dog", HarmLabel::harmful)), HarmLabel::harmful);
    EXPECT_EQ(answer_of(mock, final_request("##H##", HarmLabel::harmless)), HarmLabel::harmful);
}

TEST(MockBackend, MarkerOutsideMemeTextIgnored) {
    MockBackend mock({{}, MockPersona::oracle, {"harmful"}});
    // The template itself mentions "harmful"; only the meme text counts.
    EXPECT_EQ(answer_of(mock, cot_request("cute dog")), HarmLabel::harmless);
}

TEST(MockBackend, SycophanticAndContrarian) {
    MockBackend syc({{}, MockPersona::sycophantic, {"##H##"}});
    MockBackend con({{}, MockPersona::contrarian, {"##H##"}});
    for (auto prior : {HarmLabel::harmful, HarmLabel::harmless}) {
        for (const std::string text : {"##H##", "plain"}) {
            EXPECT_EQ(answer_of(syc, final_request(text, prior)), prior);
            EXPECT_EQ(answer_of(con, final_request(text, prior)), opposite(prior));
        }
    }
}

TEST(MockBackend, FixedAndGarbagePersonas) {
    MockBackend h({{}, MockPersona::harmful, {}});
    MockBackend n({{}, MockPersona::harmless, {}});
    MockBackend g({{}, MockPersona::garbage, {}});
    EXPECT_EQ(answer_of(h, cot_request("x")), HarmLabel::harmful);
    EXPECT_EQ(answer_of(n, final_request("##H##", HarmLabel::harmful)), HarmLabel::harmless);
    EXPECT_FALSE(parse_verdict(g.complete(cot_request("x")).text));
}

TEST(MockBackend, ReflectionProposals) {
    MockBackend mock({{}, MockPersona::oracle, {"##H##"}});
    const Trajectory t{"m9", "x", HarmLabel::harmless, HarmLabel::harmful, false, false};
    InsightSet empty;
    const LmmRequest open{std::string(prompts::kReflectTemplateId), prompts::render_reflect_prompt(t, empty),
                          std::nullopt, {}};
    const auto ops = parse_operations(mock.complete(open).text);
    ASSERT_EQ(ops.operations.size(), 1u);
    EXPECT_EQ(ops.operations[0].kind, OperationKind::add);
    EXPECT_NE(ops.operations[0].text->find("m9"), std::string::npos);

    InsightSet full;
    full.capacity = 1;
    full.insights = {{1, "a", 2}};
    const LmmRequest closed{std::string(prompts::kReflectTemplateId), prompts::render_reflect_prompt(t, full),
                            std::nullopt, {}};
    EXPECT_EQ(parse_operations(mock.complete(closed).text).operations, std::vector{Operation::upvote(1)});
}

TEST(MockBackend, EmptyPromptRejected) {
    MockBackend mock({});
    EXPECT_THROW(mock.complete({"cot.v1", "", std::nullopt, {}}), BackendError);
}

TEST(RequestVerdict, RetriesOnceThenFlags) {
    const auto req = cot_request("x");
    const auto retry = LmmRequest{req.template_id, prompts::with_format_reminder(req.prompt), std::nullopt,
                                  req.params};
    MockBackend fixed_on_retry(
        {{{fingerprint(req), "no idea"}, {fingerprint(retry), "Thought: ok Answer: harmful"}}, MockPersona::none, {}});
    const auto second = request_verdict(fixed_on_retry, req);
    EXPECT_FALSE(second.flagged);
    EXPECT_EQ(second.verdict.answer, HarmLabel::harmful);
    EXPECT_EQ(second.verdict.parse_attempts, 2);

    MockBackend garbage({{}, MockPersona::garbage, {}});
    const auto failed = request_verdict(garbage, req);
    EXPECT_TRUE(failed.flagged);
    EXPECT_EQ(failed.verdict.answer, HarmLabel::harmless);
    EXPECT_EQ(failed.verdict.parse_attempts, 2);

    MockBackend good({{}, MockPersona::harmful, {}});
    const auto first = request_verdict(good, req);
    EXPECT_FALSE(first.flagged);
    EXPECT_EQ(first.verdict.parse_attempts, 1);
}

TEST(CachingBackend, HitsAfterFirstCallAndPersists) {
    testing_support::TempDir dir;
    auto inner = std::make_shared<CountingBackend>();
    {
        CachingBackend cache(inner, dir / "cache.jsonl");
        EXPECT_EQ(cache.complete(cot_request("a")).text, cache.complete(cot_request("a")).text);
        cache.complete(cot_request("b"));
        EXPECT_EQ(cache.hits(), 1u);
        EXPECT_EQ(cache.misses(), 2u);
        EXPECT_EQ(inner->calls.load(), 2);
    }
    CachingBackend reopened(inner, dir / "cache.jsonl");
    reopened.complete(cot_request("a"));
    reopened.complete(cot_request("b"));
    EXPECT_EQ(reopened.hits(), 2u);
    EXPECT_EQ(inner->calls.load(), 2);
    const auto table = load_response_table(dir / "cache.jsonl");
    EXPECT_EQ(table.size(), 2u);
    EXPECT_EQ(table.at(fingerprint(cot_request("a"))), "echo " + cot_request("a").prompt);
}

TEST(CachingBackend, FlushSortsByFingerprint) {
    testing_support::TempDir dir;
    CachingBackend cache(std::make_shared<CountingBackend>(), dir / "cache.jsonl");
    for (const std::string t : {"z", "y", "x", "w"}) {
        cache.complete(cot_request(t));
    }
    cache.flush();
    std::ifstream in(dir / "cache.jsonl");
    std::string line, prev;
    int n = 0;
    while (std::getline(in, line)) {
        const auto fp = json::parse(line)["fingerprint"].get<std::string>();
        EXPECT_LT(prev, fp);
        prev = fp;
        ++n;
    }
    EXPECT_EQ(n, 4);
}

TEST(LimitedBackend, BoundsInFlightRequests) {
    auto inner = std::make_shared<CountingBackend>();
    LimitedBackend limited(inner, 2);
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&limited, i] { limited.complete(cot_request(std::to_string(i))); });
    }
    threads.clear();
    EXPECT_EQ(inner->calls.load(), 8);
    EXPECT_LE(inner->peak.load(), 2);
    EXPECT_THROW(LimitedBackend(inner, 0), Error);
}

TEST(RemoteBackend, BodyShape) {
    testing_support::TempDir dir;
    {
        std::ofstream(dir / "m.jpg", std::ios::binary) << "abc";
    }
    const auto body = json::parse(RemoteBackend::build_body(cot_request("t", (dir / "m.jpg").string())));
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["temperature"], 0.0);
    const auto& content = body["messages"][0]["content"];
    EXPECT_EQ(body["messages"][0]["role"], "user");
    EXPECT_EQ(content[0]["type"], "text");
    EXPECT_EQ(content[1]["image_url"]["url"], "data:image/jpeg;base64,YWJj");
    const auto text_only = json::parse(RemoteBackend::build_body(cot_request("t")));
    EXPECT_EQ(text_only["messages"][0]["content"].size(), 1u);
}

TEST(RemoteBackend, SuccessSendsAuthAndParsesReply) {
    FakeServer fake;
    std::string auth, model;
    fake.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        model = json::parse(req.body)["model"];
        res.set_content(completion("Thought: fine Answer: harmless"), "application/json");
    });
    RemoteBackend remote(fast_options(fake.url("/v1/chat/completions")));
    const auto r = remote.complete(cot_request("x"));
    EXPECT_EQ(r.text, "Thought: fine Answer: harmless");
    EXPECT_EQ(auth, "Bearer sk-test");
    EXPECT_EQ(model, "test-model");
}

TEST(RemoteBackend, RetriesServerErrors) {
    FakeServer fake;
    std::atomic<int> calls{0};
    fake.server.Post("/c", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = calls == 1 ? 500 : 429;
            res.set_content("busy", "text/plain");
            return;
        }
        res.set_content(completion("ok"), "application/json");
    });
    RemoteBackend remote(fast_options(fake.url("/c")));
    EXPECT_EQ(remote.complete(cot_request("x")).text, "ok");
    EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, GivesUpAfterMaxRetries) {
    FakeServer fake;
    std::atomic<int> calls{0};
    fake.server.Post("/c", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 503;
    });
    RemoteBackend remote(fast_options(fake.url("/c")));
    try {
        remote.complete(cot_request("x"));
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.status(), 503);
    }
    EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, ClientErrorFailsImmediatelyWithExcerpt) {
    FakeServer fake;
    std::atomic<int> calls{0};
    fake.server.Post("/c", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 400;
        res.set_content(std::string(500, 'e'), "text/plain");
    });
    RemoteBackend remote(fast_options(fake.url("/c")));
    try {
        remote.complete(cot_request("x"));
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.status(), 400);
        const std::string msg = e.what();
        EXPECT_NE(msg.find(std::string(200, 'e') + "..."), std::string::npos);
        EXPECT_EQ(msg.find(std::string(201, 'e')), std::string::npos);
    }
    EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteBackend, MalformedReplyRejected) {
    FakeServer fake;
    fake.server.Post("/c", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\":[]}", "application/json");
    });
    RemoteBackend remote(fast_options(fake.url("/c")));
    EXPECT_THROW(remote.complete(cot_request("x")), BackendError);
}

TEST(RemoteBackend, UnreachableEndpoint) {
    // nothing listens on the reserved tcpmux port
    auto options = fast_options("http://127.0.0.1:1/c");
    options.timeout = std::chrono::seconds(1);
    RemoteBackend remote(options);
    try {
        remote.complete(cot_request("x"));
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.status(), 0);
        EXPECT_NE(std::string(e.what()).find("transport"), std::string::npos);
    }
}

TEST(RemoteBackend, RejectsRelativeEndpoint) {
    EXPECT_THROW(RemoteBackend(fast_options("localhost/c")), Error);
}
