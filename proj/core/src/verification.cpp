#include "spikemark/verification.hpp"

#include <cmath>
#include <sstream>

#include "spikemark/errors.hpp"
#include "spikemark/forward.hpp"

namespace spikemark {

namespace {

using u128 = unsigned __int128;

// Exact test of  head * 2^-K > p  for integer head <= 2^64 and double
// p in (0, 1). p is m * 2^(e-53) with a 53-bit integer mantissa, so the
// inequality rearranges to integer comparisons that fit 128 bits.
bool head_exceeds(u128 head, uint32_t k, double p) {
  int e = 0;
  const double frac = std::frexp(p, &e);  // p = frac * 2^e, frac in [0.5, 1)
  const auto mant = static_cast<u128>(std::ldexp(frac, 53));
  // head * 2^(53-e) > mant * 2^K  <=>  head * 2^(53-e-K) > mant
  const int shift = 53 - e - static_cast<int>(k);
  if (shift >= 0) {
    if (shift >= 54) return head > 0;  // lhs >= 2^54 > mant
    return (head << shift) > mant;
  }
  return head > (mant << -shift);  // -shift <= 11 for K <= 64
}

}  // namespace

uint32_t compute_threshold(uint32_t key_count, double p) {
  require(key_count >= 1, ErrorKind::InputDomain,
          "compute_threshold: key_count must be >= 1");
  require(key_count <= 64, ErrorKind::OutOfRange,
          "compute_threshold: key_count > 64 not supported");
  require(p > 0.0 && p < 1.0, ErrorKind::InputDomain,
          "compute_threshold: p must lie in (0, 1)");

  // C(K, z) by the multiplicative recurrence, exact in 128-bit integers.
  u128 coeff = 1;  // C(K, 0)
  u128 head = 0;
  for (uint32_t z = 0; z <= key_count; ++z) {
    head += coeff;
    if (head_exceeds(head, key_count, p)) return z;
    coeff = coeff * (key_count - z) / (z + 1);
  }
  return key_count;  // unreachable for p < 1
}

TallyResult tally_mismatches(const Model& model, const WatermarkKeySet& keys,
                             uint32_t steps, Rng& rng) {
  require(!keys.keys.empty(), ErrorKind::Precondition,
          "tally_mismatches: empty key set");
  TallyResult result;
  result.per_key.reserve(keys.size());
  for (const WatermarkKey& key : keys.keys) {
    require(key.image.size() == model.in_dim(), ErrorKind::Shape,
            "tally_mismatches: key dimension != model input");
    Rng key_rng(rng.next());
    KeyCheck check;
    check.expected = key.expected_label;
    check.predicted =
        static_cast<uint8_t>(predict(model, key.image, steps, key_rng));
    check.match = check.predicted == check.expected;
    if (!check.match) ++result.mismatches;
    result.per_key.push_back(check);
  }
  return result;
}

VerificationReport verify(const Model& model, const WatermarkKeySet& keys,
                          double p, uint32_t steps, uint64_t seed) {
  keys.validate();
  Rng rng(derive_seed(seed, "verify"));
  TallyResult tally = tally_mismatches(model, keys, steps, rng);

  VerificationReport report;
  report.key_count = static_cast<uint32_t>(keys.size());
  report.tally = tally.mismatches;
  report.threshold = compute_threshold(report.key_count, p);
  report.p_value = p;
  report.watermarked = report.tally < report.threshold;
  report.seed = seed;
  report.per_key = std::move(tally.per_key);
  return report;
}

VerificationReport verify(const Model& model, const WatermarkKeySet& keys,
                          double p, uint64_t seed) {
  return verify(model, keys, p, model.lif.num_steps, seed);
}

std::string report_to_text(const VerificationReport& r) {
  std::ostringstream os;
  os << "keys=" << r.key_count << " tally=" << r.tally
     << " threshold=" << r.threshold << " p=" << r.p_value
     << " verdict=" << (r.watermarked ? "Watermarked" : "NotWatermarked")
     << " seed=" << r.seed << "\n";
  for (size_t i = 0; i < r.per_key.size(); ++i) {
    const KeyCheck& k = r.per_key[i];
    os << "key " << i << " expected=" << int(k.expected)
       << " predicted=" << int(k.predicted)
       << (k.match ? " match" : " MISMATCH") << "\n";
  }
  return os.str();
}

}  // namespace spikemark
