#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "steer/harness/fixtures.hpp"
#include "steer/remote/adapters.hpp"
#include "steer/remote/client.hpp"
#include "steer/search/adapters.hpp"
#include "steer/search/search.hpp"
#include "support/mock_server.hpp"

using namespace steer;
using mock::CompletionServer;
using remote::EndpointConfig;
using remote::HttpCompletionClient;
using remote::RetryPolicy;

namespace {

EndpointConfig endpoint_for(const CompletionServer& server,
                            const std::string& model, bool scoring) {
  EndpointConfig config;
  config.base_url = server.url();
  config.model_name = model;
  config.timeout_s = 5.0;
  config.max_in_flight = 4;
  config.supports_scoring = scoring;
  return config;
}

RetryPolicy fast_retry() { return {4, 1}; }

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("steer-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("wire: request bodies are bit-exact to the documented protocol") {
  CompletionServer server;
  server.set_handler(mock::scored_echo);
  HttpCompletionClient client(endpoint_for(server, "scorer", true),
                              fast_retry());
  remote::score_remote(client, "Hello ", "Hello world");
  REQUIRE(server.bodies().size() == 1);
  CHECK(server.bodies()[0] ==
        "{\"echo\":true,\"logprobs\":1,\"max_tokens\":0,\"model\":\"scorer\","
        "\"n\":1,\"prompt\":\"Hello world\",\"temperature\":1.0,"
        "\"top_p\":1.0}");

  CompletionServer sampler_server;
  HttpCompletionClient sampler(endpoint_for(sampler_server, "sampler", false),
                               fast_retry());
  SamplingParams params;
  params.temperature = 0.7;
  params.top_p = 1.0;
  params.seed = 42;
  remote::sample_chunk_remote(sampler, "abc", 5, params, 3);
  REQUIRE(sampler_server.bodies().size() == 1);
  CHECK(sampler_server.bodies()[0] ==
        "{\"max_tokens\":5,\"model\":\"sampler\",\"n\":3,\"prompt\":\"abc\","
        "\"seed\":42,\"temperature\":0.7,\"top_p\":1.0}");
}

TEST_CASE("wire: the credential travels as a bearer header") {
  CompletionServer server;
  ::setenv("STEER_TEST_KEY", "sk-fixture", 1);
  EndpointConfig config = endpoint_for(server, "m", false);
  config.api_key_env = "STEER_TEST_KEY";
  HttpCompletionClient client(config, fast_retry());
  SamplingParams params;
  remote::sample_chunk_remote(client, "x", 1, params, 1);
  REQUIRE(server.auth_headers().size() == 1);
  CHECK(server.auth_headers()[0] == "Bearer sk-fixture");
  ::unsetenv("STEER_TEST_KEY");
}

TEST_CASE("sample_chunk_remote: echo server returns n identical chunks") {
  CompletionServer server;
  server.set_handler([](const nlohmann::json& body) {
    return std::make_pair(200, CompletionServer::completion(
                                   "xyz", body.value("n", 1)));
  });
  HttpCompletionClient client(endpoint_for(server, "m", false), fast_retry());
  SamplingParams params;
  params.seed = 1;
  const auto chunks = remote::sample_chunk_remote(client, "p", 5, params, 4);
  REQUIRE(chunks.size() == 4);
  for (const auto& chunk : chunks) {
    CHECK(chunk.text == "xyz");
    CHECK(chunk.finish_reason == "stop");
  }
  CHECK(server.calls() == 1);  // one request carries the whole fan-out
}

TEST_CASE("retry: two 429s then success, with byte-identical bodies") {
  CompletionServer server;
  server.push_scripted(429, {{"error", "slow down"}});
  server.push_scripted(429, {{"error", "slow down"}});
  HttpCompletionClient client(endpoint_for(server, "m", false), fast_retry());
  SamplingParams params;
  params.seed = 9;
  const auto chunks = remote::sample_chunk_remote(client, "p", 2, params, 1);
  CHECK(chunks.size() == 1);
  CHECK(client.last_attempts() == 3);
  const auto bodies = server.bodies();
  REQUIRE(bodies.size() == 3);
  CHECK(bodies[0] == bodies[1]);
  CHECK(bodies[1] == bodies[2]);
}

TEST_CASE("retry: exhausted 429s surface as RateLimited") {
  CompletionServer server;
  for (int i = 0; i < 4; ++i) server.push_scripted(429, {{"error", "no"}});
  HttpCompletionClient client(endpoint_for(server, "m", false), fast_retry());
  SamplingParams params;
  CHECK_THROWS_AS(remote::sample_chunk_remote(client, "p", 1, params, 1),
                  RateLimited);
  CHECK(server.calls() == 4);
}

TEST_CASE("retry: non-retryable statuses surface immediately") {
  CompletionServer server;
  server.push_scripted(404, {{"error", "no such model"}});
  HttpCompletionClient client(endpoint_for(server, "m", false), fast_retry());
  SamplingParams params;
  CHECK_THROWS_AS(remote::sample_chunk_remote(client, "p", 1, params, 1),
                  HttpStatus);
  CHECK(server.calls() == 1);
}

TEST_CASE("retry: read timeouts become Timeout after the attempt cap") {
  CompletionServer server;
  server.set_hold_ms(400);
  EndpointConfig config = endpoint_for(server, "m", false);
  config.timeout_s = 0.05;
  HttpCompletionClient client(config, RetryPolicy{2, 1});
  SamplingParams params;
  CHECK_THROWS_AS(remote::sample_chunk_remote(client, "p", 1, params, 1),
                  Timeout);
}

TEST_CASE("score_remote: sums continuation logprobs by character offset") {
  CompletionServer server;
  server.set_handler([](const nlohmann::json& body) {
    // Prompt region [0, 5); two continuation tokens at offsets 5 and 8.
    nlohmann::json choice = {
        {"text", body.at("prompt")},
        {"finish_reason", "stop"},
        {"logprobs",
         {{"token_logprobs", {nullptr, -0.3, -0.5, -1.0}},
          {"text_offset", {0, 2, 5, 8}}}}};
    return std::make_pair(
        200, nlohmann::json{{"choices", nlohmann::json::array({choice})}});
  });
  HttpCompletionClient client(endpoint_for(server, "m", true), fast_retry());
  CHECK(remote::score_remote(client, "Hello", "Hello world") ==
        doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("score_remote: empty continuation scores zero without a request") {
  CompletionServer server;
  HttpCompletionClient client(endpoint_for(server, "m", true), fast_retry());
  CHECK(remote::score_remote(client, "same", "same") == 0.0);
  CHECK(server.calls() == 0);
}

TEST_CASE("score_remote: sampling-only endpoints are rejected") {
  CompletionServer server;
  auto client = std::make_shared<HttpCompletionClient>(
      endpoint_for(server, "blackbox", false), fast_retry());
  CHECK_THROWS_AS(remote::score_remote(*client, "a", "ab"),
                  ScoringUnsupported);

  // The capability gate is structural: a guidance pair cannot even be
  // constructed around a sampling-only endpoint.
  auto scorer = std::make_shared<HttpCompletionClient>(
      endpoint_for(server, "scorer", true), fast_retry());
  CHECK_THROWS_AS(remote::RemoteGuidancePair(client, scorer),
                  ScoringUnsupported);
  CHECK_THROWS_AS(remote::RemoteGuidancePair(scorer, client),
                  ScoringUnsupported);
  CHECK_NOTHROW(remote::RemoteGuidancePair(scorer, scorer));
}

TEST_CASE("score_remote: telescoping survives the wire") {
  CompletionServer server;
  server.set_handler(mock::scored_echo);
  HttpCompletionClient client(endpoint_for(server, "m", true), fast_retry());
  const std::string prompt = "steer";
  const std::string a = " the";
  const std::string b = " beam";
  const double whole = remote::score_remote(client, prompt, prompt + a + b);
  const double first = remote::score_remote(client, prompt, prompt + a);
  const double second =
      remote::score_remote(client, prompt + a, prompt + a + b);
  CHECK(whole == doctest::Approx(first + second).epsilon(1e-9));
}

TEST_CASE("cache: identical scoring requests hit the disk, not the network") {
  CompletionServer server;
  server.set_handler(mock::scored_echo);
  TempDir dir;
  auto backend = remote::cached(
      std::make_shared<HttpCompletionClient>(endpoint_for(server, "m", true),
                                             fast_retry()),
      dir.path.string());
  const double first = remote::score_remote(*backend, "ab", "abcd");
  CHECK(server.calls() == 1);
  const double second = remote::score_remote(*backend, "ab", "abcd");
  CHECK(server.calls() == 1);  // served from the cache
  CHECK(first == second);
}

TEST_CASE("cache: seedless sampling requests are never cached") {
  CompletionServer server;
  TempDir dir;
  auto backend = remote::cached(
      std::make_shared<HttpCompletionClient>(endpoint_for(server, "m", false),
                                             fast_retry()),
      dir.path.string());
  remote::CompletionRequest request;
  request.prompt = "p";
  request.max_tokens = 3;  // sampling, no seed
  backend->complete(request);
  backend->complete(request);
  CHECK(server.calls() == 2);

  request.seed = 5;  // seeded sampling is replayable, so it caches
  backend->complete(request);
  backend->complete(request);
  CHECK(server.calls() == 3);
}

TEST_CASE("cache: corrupted entries fall through and are re-stored") {
  CompletionServer server;
  server.set_handler(mock::scored_echo);
  TempDir dir;
  auto backend = remote::cached(
      std::make_shared<HttpCompletionClient>(endpoint_for(server, "m", true),
                                             fast_retry()),
      dir.path.string());
  remote::score_remote(*backend, "ab", "abcd");
  CHECK(server.calls() == 1);

  // Clobber every cache entry.
  for (const auto& entry : std::filesystem::directory_iterator(dir.path)) {
    std::ofstream out(entry.path());
    out << "not json";
  }
  remote::score_remote(*backend, "ab", "abcd");
  CHECK(server.calls() == 2);  // pass-through
  remote::score_remote(*backend, "ab", "abcd");
  CHECK(server.calls() == 2);  // re-stored entry serves the third call
}

TEST_CASE("client: at most max_in_flight requests are outstanding") {
  CompletionServer server;
  server.set_hold_ms(30);
  EndpointConfig config = endpoint_for(server, "m", false);
  config.max_in_flight = 2;
  HttpCompletionClient client(config, fast_retry());
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&client, i] {
      remote::CompletionRequest request;
      request.prompt = "p" + std::to_string(i);
      request.max_tokens = 1;
      client.complete(request);
    });
  }
  for (auto& t : threads) t.join();
  CHECK(server.calls() == 8);
  CHECK(server.peak_in_flight() <= 2);
}

TEST_CASE("remote base: chunk search over the wire with local guidance") {
  // The server grows responses one character at a time over {a, b}, and
  // reports "stop" once the text reaches three characters (inside the
  // guidance models' horizon).
  CompletionServer server;
  server.set_handler([](const nlohmann::json& body) {
    const std::string prefix = body.at("prompt").get<std::string>();
    const int max_new = body.at("max_tokens").get<int>();
    const int n = body.value("n", 1);
    const std::uint64_t seed = body.value("seed", 0ULL);
    nlohmann::json choices = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
      std::string text;
      bool stopped = false;
      for (int t = 0; t < max_new; ++t) {
        const std::size_t pos = prefix.size() + text.size();
        if (pos >= 3) {
          stopped = true;
          break;
        }
        text += ((seed + pos + i) % 2 == 0) ? 'a' : 'b';
      }
      choices.push_back({{"text", text},
                         {"finish_reason", stopped ? "stop" : "length"}});
    }
    return std::make_pair(200, nlohmann::json{{"choices", choices}});
  });

  auto backend = std::make_shared<HttpCompletionClient>(
      endpoint_for(server, "bigmodel", false), fast_retry());
  const remote::RemoteBaseModel base(backend);
  const auto inst = harness::make_w2s_instance();
  const search::TextPairScorer scorer(inst.pair());

  search::SearchConfig config;
  config.beam_width = 2;
  config.successors = 2;
  config.chunk_len = 2;
  config.max_tokens = 6;
  config.sampling.seed = 3;
  const search::SearchResult result =
      search::cbs(base, scorer, search::Prompt{}, config);
  CHECK(result.best.complete());
  CHECK(!result.best.text.empty());
  CHECK(result.best.tokens.empty());  // the wire exposes no token ids
}
