#include "spikemark/data_io.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "spikemark/errors.hpp"

namespace spikemark {

namespace {

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kModelMagic[4] = {'S', 'M', 'W', 'M'};
constexpr char kKeysetMagic[4] = {'S', 'M', 'W', 'K'};
constexpr uint32_t kFileVersion = 1;

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

class Reader {
 public:
  Reader(std::span<const uint8_t> bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  uint32_t u32_be() {
    need(4);
    uint32_t v = (uint32_t(bytes_[pos_]) << 24) | (uint32_t(bytes_[pos_ + 1]) << 16) |
                 (uint32_t(bytes_[pos_ + 2]) << 8) | uint32_t(bytes_[pos_ + 3]);
    pos_ += 4;
    return v;
  }
  uint32_t u32_le() {
    need(4);
    uint32_t v = uint32_t(bytes_[pos_]) | (uint32_t(bytes_[pos_ + 1]) << 8) |
                 (uint32_t(bytes_[pos_ + 2]) << 16) | (uint32_t(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }
  uint64_t u64_le() {
    need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 8;
    return v;
  }
  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  double f64_le() { return std::bit_cast<double>(u64_le()); }
  void f64_many(std::span<double> out) {
    for (double& v : out) v = f64_le();
  }
  void bytes_raw(std::span<uint8_t> out) {
    need(out.size());
    std::copy_n(bytes_.begin() + pos_, out.size(), out.begin());
    pos_ += out.size();
  }
  void expect_eof() {
    require(pos_ == bytes_.size(), ErrorKind::Length,
            name_ + ": trailing bytes after expected end of file");
  }

 private:
  void need(size_t n) {
    require(pos_ + n <= bytes_.size(), ErrorKind::Length,
            name_ + ": truncated file");
  }
  std::span<const uint8_t> bytes_;
  std::string name_;
  size_t pos_ = 0;
};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    require(out_.good(), ErrorKind::Io, "cannot write " + path);
  }
  void u32_le(uint32_t v) {
    uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    out_.write(reinterpret_cast<char*>(b), 4);
  }
  void u64_le(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = uint8_t(v >> (8 * i));
    out_.write(reinterpret_cast<char*>(b), 8);
  }
  void u32_be(uint32_t v) {
    uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    out_.write(reinterpret_cast<char*>(b), 4);
  }
  void u8(uint8_t v) { out_.write(reinterpret_cast<char*>(&v), 1); }
  void f64_le(double v) { u64_le(std::bit_cast<uint64_t>(v)); }
  void f64_many(std::span<const double> v) {
    for (double x : v) f64_le(x);
  }
  void bytes_raw(std::span<const uint8_t> v) {
    out_.write(reinterpret_cast<const char*>(v.data()), v.size());
  }
  void close() {
    out_.close();
    require(out_.good(), ErrorKind::Io, "write failed");
  }

 private:
  std::ofstream out_;
};

}  // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path) {
  std::vector<uint8_t> ib = read_file(images_path);
  std::vector<uint8_t> lb = read_file(labels_path);
  Reader ir(ib, images_path);
  Reader lr(lb, labels_path);

  require(ir.u32_be() == kIdxImagesMagic, ErrorKind::Format,
          images_path + ": bad idx image magic");
  const uint32_t n_images = ir.u32_be();
  const uint32_t rows = ir.u32_be();
  const uint32_t cols = ir.u32_be();
  require(rows == 28 && cols == 28, ErrorKind::Format,
          images_path + ": expected 28x28 images");

  require(lr.u32_be() == kIdxLabelsMagic, ErrorKind::Format,
          labels_path + ": bad idx label magic");
  const uint32_t n_labels = lr.u32_be();
  require(n_images == n_labels, ErrorKind::Consistency,
          "image/label counts disagree between " + images_path + " and " +
              labels_path);

  Dataset d;
  d.images = Matrix(n_images, size_t(rows) * cols);
  std::vector<uint8_t> pixel_row(size_t(rows) * cols);
  for (uint32_t i = 0; i < n_images; ++i) {
    ir.bytes_raw(pixel_row);
    double* out = d.images.row(i);
    for (size_t j = 0; j < pixel_row.size(); ++j)
      out[j] = pixel_row[j] / 255.0;
  }
  d.labels.resize(n_labels);
  lr.bytes_raw(d.labels);
  for (uint8_t l : d.labels)
    require(l < kNumClasses, ErrorKind::Format,
            labels_path + ": label outside 0-9");
  ir.expect_eof();
  lr.expect_eof();
  d.split_tag = "train";
  return d;
}

void save_mnist_idx(const Dataset& d, const std::string& images_path,
                    const std::string& labels_path) {
  require(d.images.cols == kInputDim, ErrorKind::Shape,
          "save_mnist_idx: images must be Nx784");
  Writer iw(images_path);
  iw.u32_be(kIdxImagesMagic);
  iw.u32_be(static_cast<uint32_t>(d.size()));
  iw.u32_be(28);
  iw.u32_be(28);
  for (size_t i = 0; i < d.size(); ++i)
    for (size_t j = 0; j < d.images.cols; ++j) {
      double v = d.images.at(i, j);
      iw.u8(static_cast<uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
    }
  iw.close();
  Writer lw(labels_path);
  lw.u32_be(kIdxLabelsMagic);
  lw.u32_be(static_cast<uint32_t>(d.labels.size()));
  lw.bytes_raw(d.labels);
  lw.close();
}

Dataset take(const Dataset& d, std::span<const size_t> indices,
             std::string tag) {
  Dataset out;
  out.images = Matrix(indices.size(), d.images.cols);
  out.labels.reserve(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(d.images.row(indices[i]), d.images.cols, out.images.row(i));
    out.labels.push_back(d.labels[indices[i]]);
  }
  out.split_tag = std::move(tag);
  return out;
}

std::pair<Dataset, Dataset> split_for_attack(const Dataset& test_set,
                                             uint64_t seed) {
  require(test_set.size() == 10000, ErrorKind::Precondition,
          "split_for_attack: expected the 10,000-image test set");
  std::vector<size_t> idx(test_set.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(derive_seed(seed, "attack-split"));
  rng.shuffle(idx);
  std::vector<size_t> ft(idx.begin(), idx.begin() + 1000);
  std::vector<size_t> ev(idx.begin() + 1000, idx.end());
  std::sort(ft.begin(), ft.end());
  std::sort(ev.begin(), ev.end());
  return {take(test_set, ft, "finetune-1000"), take(test_set, ev, "eval-9000")};
}

void save_model(const std::string& path, const Model& model) {
  model.validate();
  Writer w(path);
  w.bytes_raw({reinterpret_cast<const uint8_t*>(kModelMagic), 4});
  w.u32_le(kFileVersion);
  w.u8(static_cast<uint8_t>(model.kind));
  w.u32_le(static_cast<uint32_t>(model.num_layers()));
  for (const Layer& l : model.layers) {
    w.u32_le(static_cast<uint32_t>(l.in_dim()));
    w.u32_le(static_cast<uint32_t>(l.out_dim()));
    w.f64_many(l.weights.data);
    w.f64_many(l.bias);
  }
  if (model.kind == ModelKind::Snn) {
    w.f64_le(model.lif.alpha);
    w.f64_le(model.lif.eta);
    w.u32_le(model.lif.num_steps);
    w.f64_le(model.lif.surrogate_slope);
  }
  w.close();
}

Model load_model(const std::string& path) {
  std::vector<uint8_t> bytes = read_file(path);
  Reader r(bytes, path);
  uint8_t magic[4];
  r.bytes_raw(magic);
  require(std::equal(magic, magic + 4, kModelMagic), ErrorKind::Format,
          path + ": not a model file (bad magic)");
  require(r.u32_le() == kFileVersion, ErrorKind::Format,
          path + ": unsupported model file version");
  Model m;
  const uint8_t kind = r.u8();
  require(kind <= 1, ErrorKind::Format, path + ": unknown model kind");
  m.kind = static_cast<ModelKind>(kind);
  const uint32_t n_layers = r.u32_le();
  for (uint32_t i = 0; i < n_layers; ++i) {
    Layer l;
    const uint32_t in = r.u32_le();
    const uint32_t out = r.u32_le();
    l.weights = Matrix(in, out);
    r.f64_many(l.weights.data);
    l.bias.resize(out);
    r.f64_many(l.bias);
    m.layers.push_back(std::move(l));
  }
  if (m.kind == ModelKind::Snn) {
    m.lif.alpha = r.f64_le();
    m.lif.eta = r.f64_le();
    m.lif.num_steps = r.u32_le();
    m.lif.surrogate_slope = r.f64_le();
  }
  r.expect_eof();
  m.validate();
  return m;
}

void save_keyset(const std::string& path, const WatermarkKeySet& keys) {
  keys.validate();
  for (const WatermarkKey& k : keys.keys)
    require(k.image.size() == kInputDim, ErrorKind::Shape,
            "save_keyset: key image must have 784 pixels");
  Writer w(path);
  w.bytes_raw({reinterpret_cast<const uint8_t*>(kKeysetMagic), 4});
  w.u32_le(kFileVersion);
  w.u8(static_cast<uint8_t>(keys.scheme));
  w.u32_le(static_cast<uint32_t>(keys.size()));
  for (const WatermarkKey& k : keys.keys) {
    w.f64_many(k.image);
    w.u8(k.expected_label);
    w.u8(static_cast<uint8_t>(k.kind));
    w.f64_le(k.epsilon_used);
  }
  w.u64_le(keys.seed);
  w.close();
}

WatermarkKeySet load_keyset(const std::string& path) {
  std::vector<uint8_t> bytes = read_file(path);
  Reader r(bytes, path);
  uint8_t magic[4];
  r.bytes_raw(magic);
  require(std::equal(magic, magic + 4, kKeysetMagic), ErrorKind::Format,
          path + ": not a key-set file (bad magic)");
  require(r.u32_le() == kFileVersion, ErrorKind::Format,
          path + ": unsupported key-set file version");
  WatermarkKeySet ks;
  const uint8_t scheme = r.u8();
  require(scheme <= 1, ErrorKind::Format, path + ": unknown scheme");
  ks.scheme = static_cast<WatermarkScheme>(scheme);
  const uint32_t count = r.u32_le();
  for (uint32_t i = 0; i < count; ++i) {
    WatermarkKey k;
    k.image.resize(kInputDim);
    r.f64_many(k.image);
    k.expected_label = r.u8();
    const uint8_t kind = r.u8();
    require(kind <= 2, ErrorKind::Format, path + ": unknown key kind");
    k.kind = static_cast<KeyKind>(kind);
    k.epsilon_used = r.f64_le();
    ks.keys.push_back(std::move(k));
  }
  ks.seed = r.u64_le();
  r.expect_eof();
  ks.validate();
  return ks;
}

void save_report(const std::string& path, const VerificationReport& r) {
  nlohmann::json j;
  j["key_count"] = r.key_count;
  j["tally"] = r.tally;
  j["threshold"] = r.threshold;
  j["p_value"] = r.p_value;
  j["verdict"] = r.watermarked ? "Watermarked" : "NotWatermarked";
  j["seed"] = r.seed;
  nlohmann::json per_key = nlohmann::json::array();
  for (const KeyCheck& k : r.per_key)
    per_key.push_back({{"expected", k.expected},
                       {"predicted", k.predicted},
                       {"match", k.match}});
  j["per_key"] = per_key;
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << "\n";
}

VerificationReport load_report(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, path + ": " + e.what());
  }
  VerificationReport r;
  r.key_count = j.at("key_count").get<uint32_t>();
  r.tally = j.at("tally").get<uint32_t>();
  r.threshold = j.at("threshold").get<uint32_t>();
  r.p_value = j.at("p_value").get<double>();
  r.watermarked = j.at("verdict").get<std::string>() == "Watermarked";
  r.seed = j.at("seed").get<uint64_t>();
  for (const auto& k : j.at("per_key")) {
    KeyCheck c;
    c.expected = k.at("expected").get<uint8_t>();
    c.predicted = k.at("predicted").get<uint8_t>();
    c.match = k.at("match").get<bool>();
    r.per_key.push_back(c);
  }
  return r;
}

}  // namespace spikemark
