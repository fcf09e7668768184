#include "embalign/io.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "embalign/error.hpp"

namespace embalign {

namespace {

constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
constexpr char kModelMagic[4] = {'E', 'M', 'B', 'M'};

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <class T>
  void uint(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void i64(Index v) { uint(static_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw Error(ErrorCode::kTruncatedPayload, std::string("file ends inside ") + what);
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T uint(const char* what) {
    need(sizeof(T), what);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{in_[pos_ + i]} << (8 * i));
    pos_ += sizeof(T);
    return value;
  }
  double f64(const char* what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }
  float f32(const char* what) { return std::bit_cast<float>(uint<std::uint32_t>(what)); }
  Index i64(const char* what) { return static_cast<Index>(uint<std::uint64_t>(what)); }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

bool is_csv(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".csv";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& x, Dtype dtype) {
  if (x.label().size() > 0xFFFF) throw Error(ErrorCode::kIo, "label longer than 65535 bytes");
  ByteWriter w;
  w.bytes(kEmbeddingMagic, 4);
  w.uint(static_cast<std::uint8_t>(dtype));
  w.uint(static_cast<std::uint64_t>(x.rows()));
  w.uint(static_cast<std::uint32_t>(x.dim()));
  w.uint(static_cast<std::uint16_t>(x.label().size()));
  w.bytes(x.label().data(), x.label().size());
  const Matrix& m = x.data();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      if (dtype == Dtype::kFloat64) {
        w.f64(m(i, j));
      } else {
        w.f32(static_cast<float>(m(i, j)));
      }
    }
  return std::move(w.data());
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0)
    throw Error(ErrorCode::kBadMagic, "not an EMB1 embedding file");
  r.bytes(4, "magic");
  const auto dtype = r.uint<std::uint8_t>("header");
  if (dtype > 1) throw Error(ErrorCode::kBadMagic, "unknown dtype code " + std::to_string(dtype));
  const auto n = r.uint<std::uint64_t>("header");
  const auto d = r.uint<std::uint32_t>("header");
  const auto label_len = r.uint<std::uint16_t>("header");
  const auto label_bytes = r.bytes(label_len, "label");
  std::string label(label_bytes.begin(), label_bytes.end());

  const std::size_t width = dtype == 1 ? 8 : 4;
  if (d != 0 && n > r.remaining() / width / d)
    throw Error(ErrorCode::kTruncatedPayload, "payload shorter than n*d values");
  if (r.remaining() != n * d * width)
    throw Error(ErrorCode::kTruncatedPayload, "payload length does not match n*d values");

  Matrix m(static_cast<Index>(n), static_cast<Index>(d));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = dtype == 1 ? r.f64("payload") : static_cast<double>(r.f32("payload"));
      if (!std::isfinite(v))
        throw Error(ErrorCode::kNonFiniteValue,
                    "non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
      m(i, j) = v;
    }
  return EmbeddingMatrix(std::move(m), std::move(label));
}

EmbeddingMatrix parse_csv(std::string_view text, std::string label) {
  std::vector<double> values;
  Index width = -1;
  Index rows = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty()) continue;

    Index fields = 0;
    for (;;) {
      const auto comma = line.find(',');
      const std::string_view field = trim(line.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw Error(ErrorCode::kNonRectangularCsv,
                    "line " + std::to_string(line_no) + ": malformed field '" + std::string(field) + "'");
      if (!std::isfinite(v))
        throw Error(ErrorCode::kNonFiniteValue, "line " + std::to_string(line_no) + ": non-finite value");
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (width < 0) width = fields;
    if (fields != width)
      throw Error(ErrorCode::kNonRectangularCsv, "line " + std::to_string(line_no) + " has " +
                                                     std::to_string(fields) + " fields, expected " +
                                                     std::to_string(width));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::kEmptyInput, "CSV has no rows");
  Matrix m = Eigen::Map<const Matrix>(values.data(), rows, width);
  return EmbeddingMatrix(std::move(m), std::move(label));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (is_csv(path)) {
    return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                     path.stem().string());
  }
  return decode_embeddings(bytes);
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& x, Dtype dtype) {
  if (!is_csv(path)) {
    write_file(path, encode_embeddings(x, dtype));
    return;
  }
  std::string text;
  char buf[32];
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.dim(); ++j) {
      if (j) text.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof(buf), x.data()(i, j));
      text.append(buf, res.ptr);
    }
    text.push_back('\n');
  }
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> encode_model(const AlignmentModel& model) {
  const Index d = model.dim();
  if (model.w.cols() != d || model.stats_a.mean.size() != d || model.stats_b.mean.size() != d)
    throw Error(ErrorCode::kDimensionMismatch, "model arrays disagree on dimension");

  ByteWriter w;
  w.bytes(kModelMagic, 4);
  w.uint(kModelFormatVersion);
  w.uint(static_cast<std::uint32_t>(d));
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) w.f64(model.w(i, j));
  for (const NormalizationStats* stats : {&model.stats_a, &model.stats_b}) {
    for (Index j = 0; j < d; ++j) w.f64(stats->mean(j));
    w.f64(stats->mean_norm_share);
  }
  const PipelineConfig& c = model.config;
  for (Index v : {c.c, c.k, c.s, c.iterations, c.k_prime, c.c_prime, c.n_sample, c.refine2_iterations,
                  c.qap_restarts})
    w.i64(v);
  w.f64(c.alpha);
  w.uint(static_cast<std::uint64_t>(c.seed));

  const StageDiagnostics& diag = model.diagnostics;
  w.f64(diag.initial);
  w.f64(diag.refine1);
  w.f64(diag.refine2);
  w.uint(static_cast<std::uint32_t>(diag.refine1_trace.size()));
  for (double v : diag.refine1_trace) w.f64(v);

  w.uint(crc32_of(w.data()));
  return std::move(w.data());
}

AlignmentModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw Error(ErrorCode::kBadMagic, "not a model file");
  if (bytes.size() < 5) throw Error(ErrorCode::kTruncatedPayload, "file ends inside header");
  if (bytes[4] != kModelFormatVersion)
    throw Error(ErrorCode::kVersionUnsupported,
                "model format version " + std::to_string(bytes[4]) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  if (bytes.size() < 9) throw Error(ErrorCode::kTruncatedPayload, "file ends inside header");

  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (tail.uint<std::uint32_t>("checksum") != crc32_of(body))
    throw Error(ErrorCode::kChecksumMismatch, "model file checksum does not match its contents");

  ByteReader r(body);
  r.bytes(5, "header");
  const Index d = r.uint<std::uint32_t>("header");
  if (d < 2) throw Error(ErrorCode::kDimensionMismatch, "model dimension below 2");
  r.need(static_cast<std::size_t>(d) * static_cast<std::size_t>(d) * 8, "map");

  AlignmentModel model;
  model.w.resize(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) model.w(i, j) = r.f64("map");
  for (NormalizationStats* stats : {&model.stats_a, &model.stats_b}) {
    stats->mean.resize(d);
    for (Index j = 0; j < d; ++j) stats->mean(j) = r.f64("statistics");
    stats->mean_norm_share = r.f64("statistics");
  }
  PipelineConfig& c = model.config;
  for (Index* v : {&c.c, &c.k, &c.s, &c.iterations, &c.k_prime, &c.c_prime, &c.n_sample,
                   &c.refine2_iterations, &c.qap_restarts})
    *v = r.i64("config");
  c.alpha = r.f64("config");
  c.seed = r.uint<std::uint64_t>("config");

  StageDiagnostics& diag = model.diagnostics;
  diag.initial = r.f64("diagnostics");
  diag.refine1 = r.f64("diagnostics");
  diag.refine2 = r.f64("diagnostics");
  const auto trace_len = r.uint<std::uint32_t>("diagnostics");
  r.need(static_cast<std::size_t>(trace_len) * 8, "diagnostics");
  diag.refine1_trace.resize(trace_len);
  for (auto& v : diag.refine1_trace) v = r.f64("diagnostics");
  if (r.remaining() != 0) throw Error(ErrorCode::kTruncatedPayload, "unexpected bytes after model data");
  return model;
}

void save_model(const std::filesystem::path& path, const AlignmentModel& model) {
  write_file(path, encode_model(model));
}

AlignmentModel load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace embalign
