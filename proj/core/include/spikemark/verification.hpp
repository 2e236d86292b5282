#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikemark/model.hpp"
#include "spikemark/watermark.hpp"

namespace spikemark {

// Smallest integer theta such that the scaled binomial head
//   2^-K * sum_{z=0}^{theta} C(K, z)
// strictly exceeds p; equivalently, the pass region {z : z < theta} has
// null-hypothesis probability <= p. A suspect model passes verification when
// its mismatch tally falls strictly below theta.
//
// Computed with exact integer binomial coefficients; the comparison against
// p is exact as well (p is decomposed into its binary mantissa/exponent), so
// no floating-point accumulation can shift the threshold. key_count is capped
// at 64, where the coefficients still fit 128-bit integers.
uint32_t compute_threshold(uint32_t key_count, double p);

struct KeyCheck {
  uint8_t expected = 0;
  uint8_t predicted = 0;
  bool match = false;
};

struct TallyResult {
  uint32_t mismatches = 0;
  std::vector<KeyCheck> per_key;
};

// #{k : predict(model, k.image) != k.expected_label}. One encoding
// sub-stream per key is drawn from `rng`, in key order.
TallyResult tally_mismatches(const Model& model, const WatermarkKeySet& keys,
                             uint32_t steps, Rng& rng);

struct VerificationReport {
  uint32_t key_count = 0;
  uint32_t tally = 0;      // mismatches z
  uint32_t threshold = 0;  // theta
  double p_value = 0.0;    // requested significance level
  bool watermarked = false;
  uint64_t seed = 0;       // encoding seed used for SNN queries
  std::vector<KeyCheck> per_key;
};

// Queries the model with every key and renders the verdict
// (watermarked iff tally < compute_threshold(|keys|, p)).
VerificationReport verify(const Model& model, const WatermarkKeySet& keys,
                          double p, uint32_t steps, uint64_t seed);
VerificationReport verify(const Model& model, const WatermarkKeySet& keys,
                          double p, uint64_t seed);

// Line-oriented text record: one header line, one line per key.
std::string report_to_text(const VerificationReport& r);

}  // namespace spikemark
