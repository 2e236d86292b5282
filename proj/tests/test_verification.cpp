#include <doctest.h>

#include <cstdint>
#include <vector>

#include "spikemark/errors.hpp"
#include "spikemark/verification.hpp"
#include "threshold_oracle.hpp"

using namespace spikemark;
using spikemark::testing::oracle_threshold;

namespace {

Model echo_model(bool shift_labels) {
  // single-layer ANN whose logits copy the first ten pixels, optionally
  // rotated so every prediction misses the expected label
  Model m;
  m.kind = ModelKind::Ann;
  Layer l;
  l.weights = Matrix(kInputDim, kNumClasses);
  l.bias.assign(kNumClasses, 0.0);
  for (size_t c = 0; c < kNumClasses; ++c)
    l.weights.at(c, (c + (shift_labels ? 1 : 0)) % kNumClasses) = 1.0;
  m.layers.push_back(std::move(l));
  return m;
}

WatermarkKeySet onehot_keys(size_t count) {
  WatermarkKeySet ks;
  ks.scheme = WatermarkScheme::Backdoor;
  ks.seed = 7;
  for (size_t i = 0; i < count; ++i) {
    WatermarkKey k;
    k.image.assign(kInputDim, 0.0);
    k.expected_label = uint8_t(i % kNumClasses);
    k.image[k.expected_label] = 1.0;
    k.kind = KeyKind::BackdoorTrigger;
    ks.keys.push_back(std::move(k));
  }
  return ks;
}

}  // namespace

TEST_CASE("threshold matches the reported operating points") {
  CHECK(compute_threshold(20, 0.05) == 6);
  CHECK(compute_threshold(50, 0.05) == 19);
}

TEST_CASE("threshold on a tiny enumerable case") {
  // K=4: head(1) = 5/16 = 0.3125 <= 0.5 < head(2) = 11/16
  CHECK(compute_threshold(4, 0.5) == 2);
}

TEST_CASE("threshold agrees with the arbitrary-precision enumeration") {
  for (uint32_t k = 1; k <= 30; ++k)
    for (double p : {0.01, 0.05, 0.1}) {
      CAPTURE(k);
      CAPTURE(p);
      CHECK(compute_threshold(k, p) == oracle_threshold(k, p));
    }
}

TEST_CASE("threshold agrees with the oracle at the 64-key cap") {
  for (double p : {0.01, 0.05, 0.5, 0.999})
    CHECK(compute_threshold(64, p) == oracle_threshold(64, p));
}

TEST_CASE("threshold rejects out-of-domain arguments") {
  CHECK_THROWS_AS(compute_threshold(0, 0.05), Error);
  CHECK_THROWS_AS(compute_threshold(65, 0.05), Error);
  CHECK_THROWS_AS(compute_threshold(20, 0.0), Error);
  CHECK_THROWS_AS(compute_threshold(20, 1.0), Error);
  try {
    compute_threshold(65, 0.05);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfRange);
  }
}

TEST_CASE("pass region is monotone in the tally") {
  for (uint32_t k : {5u, 20u, 50u})
    for (double p : {0.01, 0.05, 0.25}) {
      const uint32_t theta = compute_threshold(k, p);
      bool passed_before = true;
      for (uint32_t z = 0; z <= k; ++z) {
        const bool pass = z < theta;
        if (!passed_before) CHECK_FALSE(pass);
        passed_before = pass;
      }
    }
}

TEST_CASE("strict-below rule reproduces every reported verdict") {
  struct Row {
    uint32_t keys, tally;
    bool verdict;
  };
  // fingerprint columns (20 keys), then backdoor columns (50 keys)
  const Row rows[] = {
      {20, 10, false}, {20, 0, true},   {20, 7, false},  {20, 2, true},
      {20, 3, true},   {20, 3, true},   {20, 10, false}, {20, 1, true},
      {20, 11, false}, {20, 1, true},   {20, 8, false},  {20, 6, false},
      {50, 45, false}, {50, 0, true},   {50, 48, false}, {50, 16, true},
      {50, 23, false}, {50, 0, true},   {50, 45, false}, {50, 0, true},
      {50, 44, false}, {50, 36, false}, {50, 46, false}, {50, 0, true},
  };
  for (const Row& r : rows) {
    CAPTURE(r.keys);
    CAPTURE(r.tally);
    CHECK((r.tally < compute_threshold(r.keys, 0.05)) == r.verdict);
  }
}

TEST_CASE("tally is zero for a model that echoes expected labels") {
  Model m = echo_model(false);
  WatermarkKeySet keys = onehot_keys(20);
  Rng rng(1);
  CHECK(tally_mismatches(m, keys, 1, rng).mismatches == 0);
}

TEST_CASE("tally is |K| when every key is relabeled wrongly") {
  Model m = echo_model(true);
  WatermarkKeySet keys = onehot_keys(20);
  Rng rng(1);
  CHECK(tally_mismatches(m, keys, 1, rng).mismatches == 20);
}

TEST_CASE("tally rejects an empty key set") {
  Model m = echo_model(false);
  WatermarkKeySet empty;
  Rng rng(1);
  CHECK_THROWS_AS(tally_mismatches(m, empty, 1, rng), Error);
}

TEST_CASE("verify report fields are consistent") {
  Model m = echo_model(false);
  WatermarkKeySet keys = onehot_keys(20);
  VerificationReport r = verify(m, keys, 0.05, 1, 99);
  CHECK(r.key_count == 20);
  CHECK(r.tally == 0);
  CHECK(r.threshold == 6);
  CHECK(r.watermarked);
  CHECK(r.per_key.size() == 20);
  CHECK(r.seed == 99);
  for (const KeyCheck& k : r.per_key) CHECK(k.match);

  const std::string text = report_to_text(r);
  CHECK(text.find("verdict=Watermarked") != std::string::npos);
  CHECK(text.find("tally=0") != std::string::npos);

  Model wrong = echo_model(true);
  VerificationReport r2 = verify(wrong, keys, 0.05, 1, 99);
  CHECK(r2.tally == 20);
  CHECK_FALSE(r2.watermarked);
}
