#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "augimodels/embed.hpp"
#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"
#include "helpers.hpp"
#include "mock_server.hpp"

using namespace aug;
using namespace aug::embed;

TEST_SUITE("embed") {
  TEST_CASE("stub is deterministic and unit norm") {
    StubProvider stub(16, 5);
    const auto a = stub.embed("good");
    const auto b = stub.embed("good");
    CHECK(a == b);
    double norm = 0;
    for (double x : a) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-9);
    CHECK(StubProvider(16, 6).embed("good") != a);
    CHECK(stub.embed("bad") != a);
    CHECK_THROWS_AS(StubProvider(0), InvalidArgument);
  }

  TEST_CASE("sum_embeddings") {
    StubProvider stub(8, 1);
    const std::vector<std::string> none;
    CHECK(sum_embeddings(none, stub) == EmbeddingVector(8, 0.0));

    const std::vector<std::string> gg = {"g", "g"};
    const auto g = stub.embed("g");
    const auto s = sum_embeddings(gg, stub);
    for (int i = 0; i < 8; ++i) CHECK(s[i] == 2 * g[i]);

    // accumulation order is canonical, so any permutation is bit-identical
    Rng rng(9);
    std::vector<std::string> grams;
    for (int i = 0; i < 100; ++i) grams.push_back("w" + std::to_string(rng.below(1000)));
    const auto ref = sum_embeddings(grams, stub);
    for (int t = 0; t < 5; ++t) {
      rng.shuffle(std::span<std::string>(grams));
      CHECK(sum_embeddings(grams, stub) == ref);
    }
  }

  TEST_CASE("cache file round-trip and size") {
    testutil::TempDir dir;
    write_cache({}, dir / "empty.bin", 4);
    std::size_t dim = 0;
    CHECK(read_cache(dir / "empty.bin", &dim).empty());
    CHECK(dim == 4);
    CHECK(std::filesystem::file_size(dir / "empty.bin") == 12);

    CacheEntries three = {{"a", {1.f, -2.5f}}, {"b c", {0.1f, 3e-8f}}, {"\xC3\xA9", {-0.f, 7.f}}};
    write_cache(three, dir / "three.bin");
    const auto back = read_cache(dir / "three.bin");
    REQUIRE(back.size() == 3);
    for (const auto& [k, v] : three)
      CHECK(std::memcmp(back.at(k).data(), v.data(), v.size() * sizeof(float)) == 0);

    CacheProvider cache(dir / "three.bin");
    CHECK(cache.embed("a") == EmbeddingVector{1.0, -2.5});
    CHECK_THROWS_AS(cache.embed("zzz"), CacheMiss);

    Rng rng(4);
    CacheEntries many;
    const std::size_t d = 7;
    while (many.size() < 10000) {
      std::string key = "k" + std::to_string(rng.next() % 100000000);
      std::vector<float> v(d);
      for (auto& x : v) x = static_cast<float>(rng.uniform());
      many.emplace(std::move(key), std::move(v));
    }
    write_cache(many, dir / "many.bin");
    std::size_t expected = 4 + 4 + 4;  // magic, dim, count
    for (const auto& [k, v] : many) expected += 4 + k.size() + 4 * d;
    CHECK(std::filesystem::file_size(dir / "many.bin") == expected);

    const auto bytes = testutil::slurp(dir / "many.bin");
    write_cache(read_cache(dir / "many.bin"), dir / "again.bin");
    CHECK(testutil::slurp(dir / "again.bin") == bytes);

    testutil::spit(dir / "junk.bin", "nope");
    CHECK_THROWS_AS(read_cache(dir / "junk.bin"), FormatError);
  }

  TEST_CASE("remote provider against the mock server") {
    testutil::MockServer server({1, 2, 3}, [](const std::string&) { return ""; });
    testutil::TempDir dir;
    RemoteProvider remote(server.endpoint(), 3, nullptr, {}, dir / "cache.bin");
    CHECK(remote.embed("anything") == EmbeddingVector{1, 2, 3});
    const std::vector<std::string> batch = {"a", "b", "anything"};
    const auto rows = remote.embed_batch(batch);
    CHECK(rows[1] == EmbeddingVector{1, 2, 3});
    CHECK(server.embed_calls == 2);
    CHECK(remote.embed("a") == EmbeddingVector{1, 2, 3});
    CHECK(server.embed_calls == 2);  // memoized
    CHECK(remote.save_cache() == 3);

    // a second provider starts from the saved cache and never calls out
    RemoteProvider warm(server.endpoint(), 3, nullptr, {}, dir / "cache.bin");
    CHECK(warm.embed("b") == EmbeddingVector{1, 2, 3});
    CHECK(warm.requests_sent() == 0);

    RemoteProvider wrong_dim(server.endpoint(), 4, nullptr, {1, std::chrono::milliseconds(1)});
    CHECK_THROWS_AS(wrong_dim.embed("x"), DimensionMismatch);
  }

  TEST_CASE("remote provider surfaces unavailability after retries") {
    auto transport = std::make_shared<testutil::ScriptedTransport>(
        [](const std::string&, const std::string&) { return aug::net::HttpResponse{503, ""}; });
    RemoteProvider remote("http://unused", 3, transport, {3, std::chrono::milliseconds(1)});
    CHECK_THROWS_AS(remote.embed("x"), ProviderUnavailable);
    CHECK(transport->calls == 3);
  }

  TEST_CASE("overlay and factory") {
    auto base = std::make_shared<StubProvider>(4, 0);
    OverlayProvider overlay(base, {{"good", {1, 0, 0, 0}}});
    CHECK(overlay.embed("good") == EmbeddingVector{1, 0, 0, 0});
    CHECK(overlay.embed("bad") == base->embed("bad"));
    CHECK(overlay.fingerprint() != base->fingerprint());

    EmbeddingProviderSpec spec;
    spec.kind = ProviderKind::Stub;
    spec.dim = 4;
    CHECK(make_provider(spec)->embed("bad") == base->embed("bad"));
    spec.kind = ProviderKind::Remote;
    CHECK_THROWS_AS(make_provider(spec), InvalidArgument);
  }
}
