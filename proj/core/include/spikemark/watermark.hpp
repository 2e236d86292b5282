#pragma once

#include <cstdint>
#include <vector>

#include "spikemark/errors.hpp"
#include "spikemark/model.hpp"

namespace spikemark {

enum class WatermarkScheme : uint8_t { Fingerprint = 0, Backdoor = 1 };

enum class KeyKind : uint8_t {
  TrueAdversary = 0,   // misclassified by the source model at creation
  FalseAdversary = 1,  // still classified correctly, near the boundary
  BackdoorTrigger = 2,
};

struct WatermarkKey {
  std::vector<double> image;  // 784 values in [0, 1]
  uint8_t expected_label = 0;
  KeyKind kind = KeyKind::BackdoorTrigger;
  double epsilon_used = 0.0;  // 0 for triggers
};

inline bool operator==(const WatermarkKey& a, const WatermarkKey& b) {
  return a.image == b.image && a.expected_label == b.expected_label &&
         a.kind == b.kind && a.epsilon_used == b.epsilon_used;
}

// A set of query/expected-label pairs proving ownership. Fingerprint sets
// hold only true/false adversaries, backdoor sets only triggers.
struct WatermarkKeySet {
  WatermarkScheme scheme = WatermarkScheme::Fingerprint;
  std::vector<WatermarkKey> keys;
  uint64_t seed = 0;
  uint64_t created_from = 0;  // fingerprint hash of the generating model;
                              // derived metadata, not persisted

  size_t size() const { return keys.size(); }

  // scheme/kind pairing invariant; throws on violation
  void validate() const {
    for (const WatermarkKey& k : keys) {
      const bool ok = scheme == WatermarkScheme::Fingerprint
                          ? (k.kind == KeyKind::TrueAdversary ||
                             k.kind == KeyKind::FalseAdversary)
                          : k.kind == KeyKind::BackdoorTrigger;
      require(ok, ErrorKind::InvariantViolation,
              "WatermarkKeySet: key kind incompatible with scheme");
      require(k.expected_label < kNumClasses, ErrorKind::InvariantViolation,
              "WatermarkKeySet: label out of range");
    }
  }
};

inline bool operator==(const WatermarkKeySet& a, const WatermarkKeySet& b) {
  return a.scheme == b.scheme && a.seed == b.seed && a.keys == b.keys;
}

}  // namespace spikemark
