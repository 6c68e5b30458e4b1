// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mdcpe/error.hpp"
#include "mdcpe/learner.hpp"

namespace mdcpe {
namespace {

using Kind = FormatError::Kind;

class ByteWriter {
 public:
  void raw(std::string_view s) { out_.append(s); }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const std::string& what) const {
    if (remaining() < n)
      throw FormatError(Kind::Truncated, pos_,
                        what + ": expected " + std::to_string(n) + " bytes, found " +
                            std::to_string(remaining()));
  }
  std::string raw(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T le(const std::string& what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  float f32(const std::string& what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }
  double f64(const std::string& what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void expect_magic(ByteReader& r, std::string_view magic, const std::string& kind) {
  const std::size_t at = r.offset();
  if (r.remaining() < magic.size())
    throw FormatError(Kind::Truncated, at, kind + " header: file shorter than the magic");
  const std::string got = r.raw(magic.size(), "magic");
  if (got != magic)
    throw FormatError(Kind::BadMagic, at, kind + ": bad magic, expected '" +
                                              std::string(magic) + "'");
  const std::size_t vat = r.offset();
  const auto version = r.le<std::uint16_t>(kind + " version");
  if (version != 1)
    throw FormatError(Kind::BadVersion, vat,
                      kind + ": unsupported version " + std::to_string(version));
}

void expect_end(const ByteReader& r, const std::string& kind) {
  if (r.remaining() != 0)
    throw FormatError(Kind::Corrupt, r.offset(),
                      kind + ": " + std::to_string(r.remaining()) + " trailing bytes");
}

std::string join_kernel(const std::array<std::size_t, 3>& k) {
  return std::to_string(k[0]) + "x" + std::to_string(k[1]) + "x" + std::to_string(k[2]);
}

std::array<std::size_t, 3> parse_kernel(const std::string& text) {
  std::array<std::size_t, 3> k{};
  char x1 = 0, x2 = 0;
  std::istringstream is(text);
  if (!(is >> k[0] >> x1 >> k[1] >> x2 >> k[2]) || x1 != 'x' || x2 != 'x')
    throw FormatError(Kind::Corrupt, 0, "bad kernel extent '" + text + "'");
  return k;
}

std::size_t to_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError(Kind::Corrupt, 0, "checkpoint lacks '" + key + "'");
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw FormatError(Kind::Corrupt, 0, "checkpoint key '" + key + "' is not a count");
  }
}

void write_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
  w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
  w.raw(name);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
  w.le<std::uint64_t>(t.size());
  for (double v : t.values()) w.f64(v);
}

}  // namespace

std::string encode_cube(const HyperCube& cube) {
  ByteWriter w;
  w.raw("HSIC");
  w.le<std::uint16_t>(1);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cube.height()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cube.width()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cube.bands()));
  for (double v : cube.values()) w.f32(static_cast<float>(v));
  return w.take();
}

HyperCube decode_cube(const std::string& bytes) {
  ByteReader r(bytes);
  expect_magic(r, "HSIC", "cube");
  const auto h = r.le<std::uint32_t>("cube height");
  const auto w = r.le<std::uint32_t>("cube width");
  const auto b = r.le<std::uint32_t>("cube bands");
  const std::uint64_t count = std::uint64_t{h} * w * b;
  r.need(count * 4, "cube payload");
  std::vector<double> values(count);
  for (auto& v : values) v = r.f32("cube payload");
  expect_end(r, "cube");
  return HyperCube(h, w, b, std::move(values));
}

std::string encode_labels(const LabelField& labels) {
  ByteWriter w;
  w.raw("HSIL");
  w.le<std::uint16_t>(1);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(labels.height()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(labels.width()));
  for (auto l : labels.labels()) w.le<std::uint16_t>(l);
  return w.take();
}

LabelField decode_labels(const std::string& bytes) {
  ByteReader r(bytes);
  expect_magic(r, "HSIL", "labels");
  const auto h = r.le<std::uint32_t>("label height");
  const auto w = r.le<std::uint32_t>("label width");
  const std::uint64_t count = std::uint64_t{h} * w;
  r.need(count * 2, "label payload");
  std::vector<std::uint16_t> labels(count);
  for (auto& l : labels) l = r.le<std::uint16_t>("label payload");
  expect_end(r, "labels");
  return LabelField(h, w, std::move(labels));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("write to '" + path.string() + "' failed");
}

void save_cube(const HyperCube& cube, const std::filesystem::path& path) {
  write_file(path, encode_cube(cube));
}
HyperCube load_cube(const std::filesystem::path& path) { return decode_cube(read_file(path)); }
void save_labels(const LabelField& labels, const std::filesystem::path& path) {
  write_file(path, encode_labels(labels));
}
LabelField load_labels(const std::filesystem::path& path) {
  return decode_labels(read_file(path));
}

std::string encode_checkpoint(const Checkpoint& ck) {
  std::ostringstream text;
  text << "rnn.bands=" << ck.rnn.bands << "\nrnn.group=" << ck.rnn.group
       << "\nrnn.hidden=" << ck.rnn.hidden << "\nrnn.fc1=" << ck.rnn.fc1
       << "\nrnn.classes=" << ck.rnn.classes << "\ncnn.patch=" << ck.cnn.patch
       << "\ncnn.channels=" << ck.cnn.channels << "\ncnn.c1_maps=" << ck.cnn.c1_maps
       << "\ncnn.c2_maps=" << ck.cnn.c2_maps << "\ncnn.c1_kernel=" << join_kernel(ck.cnn.c1_kernel)
       << "\ncnn.c2_kernel=" << join_kernel(ck.cnn.c2_kernel) << "\ncnn.fc1=" << ck.cnn.fc1
       << "\ncnn.classes=" << ck.cnn.classes << "\n";
  for (const auto& [k, v] : ck.scalars) text << "state." << k << "=" << v << "\n";

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (const auto& [name, p] : ck.spectral) tensors.emplace_back("rnn/" + name, &p.value);
  for (const auto& [name, p] : ck.spatial) tensors.emplace_back("cnn/" + name, &p.value);
  Tensor pca_mean, pca_explained, pca_total;
  if (!ck.pca.mean.empty()) {
    pca_mean = Tensor::vector(ck.pca.mean);
    pca_explained = Tensor::vector(ck.pca.explained_variance);
    pca_total = Tensor::vector({ck.pca.total_variance});
    tensors.emplace_back("pca/mean", &pca_mean);
    tensors.emplace_back("pca/components", &ck.pca.components);
    tensors.emplace_back("pca/explained", &pca_explained);
    tensors.emplace_back("pca/total", &pca_total);
  }

  ByteWriter w;
  w.raw("HSCK");
  w.le<std::uint16_t>(1);
  const std::string t = text.str();
  w.le<std::uint32_t>(static_cast<std::uint32_t>(t.size()));
  w.raw(t);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) write_tensor(w, name, *tensor);
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  ByteReader r(bytes);
  expect_magic(r, "HSCK", "checkpoint");
  const auto text_len = r.le<std::uint32_t>("checkpoint config length");
  const std::string text = r.raw(text_len, "checkpoint config block");

  std::map<std::string, std::string> kv;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(Kind::Corrupt, 6, "checkpoint config line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  Checkpoint ck;
  ck.rnn = {to_size(kv, "rnn.bands"), to_size(kv, "rnn.group"), to_size(kv, "rnn.hidden"),
            to_size(kv, "rnn.fc1"), to_size(kv, "rnn.classes")};
  ck.cnn.patch = to_size(kv, "cnn.patch");
  ck.cnn.channels = to_size(kv, "cnn.channels");
  ck.cnn.c1_maps = to_size(kv, "cnn.c1_maps");
  ck.cnn.c2_maps = to_size(kv, "cnn.c2_maps");
  ck.cnn.c1_kernel = parse_kernel(kv.at("cnn.c1_kernel"));
  ck.cnn.c2_kernel = parse_kernel(kv.at("cnn.c2_kernel"));
  ck.cnn.fc1 = to_size(kv, "cnn.fc1");
  ck.cnn.classes = to_size(kv, "cnn.classes");
  for (const auto& [k, v] : kv)
    if (k.rfind("state.", 0) == 0) ck.scalars[k.substr(6)] = v;

  const auto count = r.le<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint16_t>("tensor name length");
    const std::string name = r.raw(name_len, "tensor name");
    const std::string where = "tensor '" + name + "'";
    const auto rank = r.le<std::uint8_t>(where + " rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.le<std::uint32_t>(where + " dims");
    const std::size_t count_at = r.offset();
    const auto values = r.le<std::uint64_t>(where + " value count");
    if (values != shape_size(shape))
      throw FormatError(Kind::Corrupt, count_at,
                        where + ": value count " + std::to_string(values) +
                            " does not match shape " + shape_string(shape));
    r.need(values * 8, where + " values");
    std::vector<double> data(values);
    for (auto& v : data) v = r.f64(where + " values");
    Tensor t(shape, std::move(data));

    if (name.rfind("rnn/", 0) == 0) {
      ck.spectral.add(name.substr(4), std::move(t));
    } else if (name.rfind("cnn/", 0) == 0) {
      ck.spatial.add(name.substr(4), std::move(t));
    } else if (name == "pca/mean") {
      ck.pca.mean = t.storage();
    } else if (name == "pca/components") {
      ck.pca.components = std::move(t);
    } else if (name == "pca/explained") {
      ck.pca.explained_variance = t.storage();
    } else if (name == "pca/total") {
      ck.pca.total_variance = t.size() ? t[0] : 0.0;
    } else {
      throw FormatError(Kind::Corrupt, count_at, "unknown " + where);
    }
  }
  expect_end(r, "checkpoint");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

RnnModel restore_rnn(const Checkpoint& ck) {
  RnnModel model(ck.rnn);
  try {
    copy_param_values(ck.spectral, model.params());
  } catch (const InvalidInput& e) {
    throw FormatError(Kind::Corrupt, 0, std::string("spectral learner: ") + e.what());
  }
  return model;
}

CnnModel restore_cnn(const Checkpoint& ck) {
  CnnModel model(ck.cnn);
  try {
    copy_param_values(ck.spatial, model.params());
  } catch (const InvalidInput& e) {
    throw FormatError(Kind::Corrupt, 0, std::string("spatial learner: ") + e.what());
  }
  return model;
}

std::string inspect_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string magic = bytes.substr(0, 4);
  std::ostringstream os;
  if (magic == "HSIC") {
    const HyperCube cube = decode_cube(bytes);
    os << "cube " << cube.height() << "x" << cube.width() << "x" << cube.bands() << " ("
       << bytes.size() << " bytes)";
    if (!cube.values().empty()) {
      const auto [lo, hi] = std::minmax_element(cube.values().begin(), cube.values().end());
      os << " range [" << *lo << ", " << *hi << "]";
    }
  } else if (magic == "HSIL") {
    const LabelField labels = decode_labels(bytes);
    os << "labels " << labels.height() << "x" << labels.width() << ", classes "
       << labels.max_label();
    const auto counts = labels.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
      os << (c == 0 ? " | background " : " | class " + std::to_string(c) + " ") << counts[c];
  } else if (magic == "HSCK") {
    const Checkpoint ck = decode_checkpoint(bytes);
    os << "checkpoint: rnn bands=" << ck.rnn.bands << " group=" << ck.rnn.group
       << " hidden=" << ck.rnn.hidden << " classes=" << ck.rnn.classes
       << "; cnn patch=" << ck.cnn.patch << " channels=" << ck.cnn.channels
       << "; parameters " << ck.spectral.parameter_count() << " + "
       << ck.spatial.parameter_count();
    for (const auto& [k, v] : ck.scalars) os << "; " << k << "=" << v;
  } else {
    throw FormatError(Kind::BadMagic, 0, "unrecognized file '" + path.string() + "'");
  }
  return os.str();
}

}  // namespace mdcpe
