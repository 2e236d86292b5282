#include <doctest.h>

#include <cmath>

#include "spikemark/errors.hpp"
#include "spikemark/fingerprint.hpp"
#include "spikemark/forward.hpp"
#include "spikemark/verification.hpp"
#include "test_helpers.hpp"

using namespace spikemark;
using namespace spikemark::testing;

TEST_CASE("fingerprint key generation fills both quotas with valid keys") {
  Dataset pool = blob_dataset(1500, 40);
  Model model = quick_trained(ModelKind::Ann, pool, 7);

  const double eps = 0.25;
  WatermarkKeySet keys = generate_fingerprint_keys(model, pool, 6, 6, eps, 99);
  CHECK(keys.size() == 12);
  CHECK(keys.scheme == WatermarkScheme::Fingerprint);
  CHECK(keys.seed == 99);
  CHECK(keys.created_from == model_fingerprint(model));

  size_t n_true = 0, n_false = 0;
  for (const WatermarkKey& k : keys.keys) {
    CHECK(k.epsilon_used == eps);
    if (k.kind == KeyKind::TrueAdversary) ++n_true;
    if (k.kind == KeyKind::FalseAdversary) ++n_false;
    for (double v : k.image) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(n_true == 6);
  CHECK(n_false == 6);

  // every key stays inside the epsilon ball of some pool image
  for (const WatermarkKey& k : keys.keys) {
    bool near = false;
    for (size_t i = 0; i < pool.size() && !near; ++i) {
      double linf = 0.0;
      for (size_t j = 0; j < kInputDim; ++j)
        linf = std::max(linf, std::fabs(k.image[j] - pool.images.at(i, j)));
      near = linf <= eps + 1e-12;
    }
    CHECK(near);
  }
}

TEST_CASE("stored kinds survive reclassification against the source model") {
  Dataset pool = blob_dataset(1500, 41);
  for (ModelKind kind : {ModelKind::Ann, ModelKind::Snn}) {
    Model model = quick_trained(kind, pool, 8);
    WatermarkKeySet keys =
        generate_fingerprint_keys(model, pool, 4, 4, 0.25, 123);
    std::vector<KeyKind> again = reclassify_kinds(model, keys);
    REQUIRE(again.size() == keys.size());
    for (size_t i = 0; i < keys.size(); ++i) CHECK(again[i] == keys.keys[i].kind);
  }
}

TEST_CASE("true adversaries miss and false adversaries hit by definition") {
  Dataset pool = blob_dataset(1500, 42);
  Model model = quick_trained(ModelKind::Ann, pool, 9);
  WatermarkKeySet keys = generate_fingerprint_keys(model, pool, 5, 5, 0.25, 7);
  std::vector<KeyKind> kinds = reclassify_kinds(model, keys);
  for (size_t i = 0; i < keys.size(); ++i) {
    if (keys.keys[i].kind == KeyKind::TrueAdversary)
      CHECK(kinds[i] == KeyKind::TrueAdversary);
    else
      CHECK(kinds[i] == KeyKind::FalseAdversary);
  }
}

TEST_CASE("an exhausted pool reports the counts it found") {
  Dataset pool = blob_dataset(60, 43);
  Model model = quick_trained(ModelKind::Ann, pool, 10);
  bool threw = false;
  try {
    generate_fingerprint_keys(model, pool, 5000, 5, 0.25, 3);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.kind() == ErrorKind::InsufficientCandidates);
    CHECK(std::string(e.what()).find("/5000") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("embedding drives the tally to zero and verification passes") {
  Dataset pool = blob_dataset(1200, 44);
  for (ModelKind kind : {ModelKind::Ann, ModelKind::Snn}) {
    CAPTURE(int(kind));
    Model model = quick_trained(kind, pool, 11);
    WatermarkKeySet keys =
        generate_fingerprint_keys(model, pool, 5, 5, 0.25, 55);

    TrainConfig cfg;
    cfg.epochs = 60;  // pass cap
    cfg.learning_rate = 1e-3;
    cfg.seed = 5;
    EmbedResult r = embed_fingerprint(model, keys, cfg, &pool, 0.05);
    CHECK(r.tally == 0);
    CHECK(r.passes <= 60);

    VerificationReport report = verify(r.model, keys, 0.05, 777);
    CHECK(report.watermarked);
  }
}

TEST_CASE("embedding refuses a backdoor key set") {
  Dataset pool = blob_dataset(200, 45);
  Model model = quick_trained(ModelKind::Ann, pool, 12, 1);
  WatermarkKeySet keys;
  keys.scheme = WatermarkScheme::Backdoor;
  TrainConfig cfg;
  CHECK_THROWS_AS(embed_fingerprint(model, keys, cfg), Error);
}
