#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spikemark/matrix.hpp"
#include "spikemark/model.hpp"
#include "spikemark/verification.hpp"
#include "spikemark/watermark.hpp"

namespace spikemark {

struct Dataset {
  Matrix images;                // N x 784, values in [0, 1]
  std::vector<uint8_t> labels;  // N classes 0-9
  std::string split_tag;

  size_t size() const { return images.rows; }
  std::span<const double> image(size_t i) const {
    return {images.row(i), images.cols};
  }
};

// Parses the classic MNIST idx pair (big-endian headers, unsigned pixel
// bytes); pixels are scaled by 1/255.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path);

// Writes a dataset back out in idx form (test fixtures, synthetic corpora).
void save_mnist_idx(const Dataset& d, const std::string& images_path,
                    const std::string& labels_path);

// Seeded partition of the 10,000-image test set into the 1000-image
// fine-tuning split and the 9000-image evaluation split.
std::pair<Dataset, Dataset> split_for_attack(const Dataset& test_set,
                                             uint64_t seed);

Dataset take(const Dataset& d, std::span<const size_t> indices,
             std::string tag);

// Model files: magic "SMWM", u32 version=1, u8 kind, u32 layer count, then
// per layer u32 in-dim, u32 out-dim, weights (in x out, row-major) and
// biases as little-endian binary64; SNN files append alpha, eta (binary64),
// num_steps (u32), surrogate slope (binary64). Round trips are bit-exact.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

// Key-set files: magic "SMWK", u32 version=1, u8 scheme, u32 count, per key
// 784 little-endian binary64 pixels, u8 label, u8 kind, binary64 epsilon,
// then the u64 generation seed.
void save_keyset(const std::string& path, const WatermarkKeySet& keys);
WatermarkKeySet load_keyset(const std::string& path);

// Structured (JSON) form of a verification report.
void save_report(const std::string& path, const VerificationReport& report);
VerificationReport load_report(const std::string& path);

}  // namespace spikemark
