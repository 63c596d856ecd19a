#include "mrloc/feature_archive.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mrloc/error.hpp"
#include "mrloc/hashing.hpp"

namespace mrloc {
namespace {

constexpr std::uint32_t kArchiveVersion = 1;

class ByteSink {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteSource {
 public:
  ByteSource(const std::string& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  template <typename T>
  T pod() {
    T v{};
    raw(&v, sizeof(T));
    return v;
  }
  void raw(void* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError(origin_ + ": truncated archive");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* role_name(SampleRole role) {
  switch (role) {
    case SampleRole::Labelled:
      return "labelled";
    case SampleRole::Unlabelled:
      return "unlabelled";
    case SampleRole::Test:
      return "test";
  }
  return "?";
}

RtfVector FeatureArchive::rtf(std::size_t row) const {
  RtfVector h;
  h.band = band;
  h.values = rows.at(row).values;
  return h;
}

std::vector<std::size_t> FeatureArchive::rows_with(SampleRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].role == role) out.push_back(i);
  return out;
}

TrainingSet FeatureArchive::training_set(std::vector<std::uint32_t>* source_rows) const {
  TrainingSet t;
  if (source_rows) source_rows->clear();
  for (SampleRole role : {SampleRole::Labelled, SampleRole::Unlabelled}) {
    for (std::size_t i : rows_with(role)) {
      t.samples.push_back(rtf(i));
      if (role == SampleRole::Labelled) t.labels.push_back(rows[i].label);
      if (source_rows) source_rows->push_back(static_cast<std::uint32_t>(i));
    }
  }
  return t;
}

std::string serialize_archive(const FeatureArchive& a) {
  if (!a.band) throw IoError("archive has no band");
  ByteSink s;
  s.raw("MRLD", 4);
  s.pod(kArchiveVersion);
  s.pod(static_cast<std::uint32_t>(a.metadata_json.size()));
  s.raw(a.metadata_json.data(), a.metadata_json.size());
  s.pod(static_cast<std::uint32_t>(a.band->fft_size));
  s.pod(static_cast<std::uint64_t>(a.band->bins.size()));
  for (int b : a.band->bins) s.pod(static_cast<std::int32_t>(b));
  s.pod(static_cast<std::uint64_t>(a.rows.size()));
  for (const auto& r : a.rows) {
    if (r.values.size() != a.band->bins.size()) throw BandMismatchError("archive row does not match the band");
    s.pod(static_cast<std::uint8_t>(r.role));
    s.pod(r.azimuth);
    s.pod(r.label);
    s.pod(r.gcc_tdoa);
    s.pod(r.gcc_peak_ratio);
    s.raw(r.values.data(), r.values.size() * sizeof(Complex));
  }
  return s.take();
}

FeatureArchive deserialize_archive(const std::string& bytes, const std::string& origin) {
  ByteSource in(bytes, origin);
  char magic[4];
  in.raw(magic, 4);
  if (std::memcmp(magic, "MRLD", 4) != 0) throw IoError(origin + " is not a feature archive");
  const auto version = in.pod<std::uint32_t>();
  if (version != kArchiveVersion) throw IoError(origin + ": unsupported archive version " + std::to_string(version));

  FeatureArchive a;
  const auto meta_len = in.pod<std::uint32_t>();
  if (meta_len > in.remaining()) throw IoError(origin + ": truncated archive");
  a.metadata_json.resize(meta_len);
  in.raw(a.metadata_json.data(), meta_len);

  auto band = std::make_shared<Band>();
  band->fft_size = static_cast<int>(in.pod<std::uint32_t>());
  const auto nbins = in.pod<std::uint64_t>();
  if (nbins * 4 > in.remaining()) throw IoError(origin + ": corrupt band header");
  for (std::uint64_t i = 0; i < nbins; ++i) {
    const int b = in.pod<std::int32_t>();
    if (b < 0 || b > band->fft_size / 2 || (!band->bins.empty() && b <= band->bins.back()))
      throw IoError(origin + ": band indices must be increasing within [0, D/2]");
    band->bins.push_back(b);
  }
  a.band = band;

  const auto nrows = in.pod<std::uint64_t>();
  const std::size_t row_bytes = 1 + 4 * sizeof(double) + nbins * sizeof(Complex);
  if (nrows * row_bytes > in.remaining()) throw IoError(origin + ": truncated archive");
  a.rows.resize(nrows);
  for (auto& r : a.rows) {
    const auto role = in.pod<std::uint8_t>();
    if (role > 2) throw IoError(origin + ": unknown sample role " + std::to_string(role));
    r.role = static_cast<SampleRole>(role);
    r.azimuth = in.pod<double>();
    r.label = in.pod<double>();
    r.gcc_tdoa = in.pod<double>();
    r.gcc_peak_ratio = in.pod<double>();
    r.values.resize(nbins);
    in.raw(r.values.data(), nbins * sizeof(Complex));
  }
  if (in.remaining() != 0) throw IoError(origin + ": trailing bytes after archive");
  return a;
}

void write_archive(const std::string& path, const FeatureArchive& archive) {
  const auto bytes = serialize_archive(archive);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

FeatureArchive read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_archive(bytes, path);
}

std::string archive_hash(const FeatureArchive& archive) { return sha256_hex(serialize_archive(archive)); }

void write_archive_csv(const std::string& path, const FeatureArchive& a) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  out << "row,role,azimuth,label,bin,real,imag\n";
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& r = a.rows[i];
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      out << i << ',' << role_name(r.role) << ',' << r.azimuth << ',';
      if (!std::isnan(r.label)) out << r.label;
      out << ',' << a.band->bins[k] << ',' << r.values[k].real() << ',' << r.values[k].imag() << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace mrloc
