#pragma once

// File formats.
//
// CSK1 signal:  "CSK1", u32 N, u8 kind (0 = real f64, 1 = complex f64 pairs), data
// CSKM matrix:  "CSKM", u32 m, u32 N, m*N row-major complex f64 pairs
// All integers and floats are little-endian. Small fixtures may also be JSON
// arrays: [1.0, -2.0] for real data or [[re, im], ...] for complex data.

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "cosamp/error.hpp"
#include "cosamp/linalg.hpp"
#include "cosamp/operators.hpp"

namespace cosamp {

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline void put_f64(std::vector<unsigned char>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError(what_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::string magic() {
    need(4);
    std::string m(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4));
    pos_ += 4;
    return m;
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return std::bit_cast<double>(v);
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::uint32_t checked_u32(std::size_t n, const char* what) {
  if (n > 0xFFFFFFFFu) throw FormatError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(n);
}

}  // namespace detail

/// Real signals are written with kind 0 unless `force_complex`.
inline std::vector<unsigned char> encode_signal(const SignalVector& x, bool force_complex = false) {
  std::vector<unsigned char> out{'C', 'S', 'K', '1'};
  detail::put_u32(out, detail::checked_u32(x.size(), "signal length"));
  const bool complex = force_complex || !x.is_real();
  out.push_back(complex ? 1 : 0);
  for (const Scalar& z : x.entries()) {
    detail::put_f64(out, z.real());
    if (complex) detail::put_f64(out, z.imag());
  }
  return out;
}

inline SignalVector decode_signal(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r(bytes, "CSK1 signal");
  if (r.magic() != "CSK1") throw FormatError("CSK1 signal: bad magic");
  const std::uint32_t n = r.u32();
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("CSK1 signal: unknown scalar kind " + std::to_string(kind));
  std::vector<Scalar> data(n);
  for (auto& z : data) {
    const double re = r.f64();
    const double im = kind == 1 ? r.f64() : 0.0;
    z = {re, im};
  }
  if (!r.at_end()) throw FormatError("CSK1 signal: trailing bytes");
  try {
    return SignalVector(std::move(data));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("CSK1 signal: ") + e.what());
  }
}

inline void write_signal(const std::string& path, const SignalVector& x) { detail::write_file(path, encode_signal(x)); }
inline SignalVector read_signal(const std::string& path) { return decode_signal(detail::read_file(path)); }

inline std::vector<unsigned char> encode_matrix(const DenseMatrix& a) {
  std::vector<unsigned char> out{'C', 'S', 'K', 'M'};
  detail::put_u32(out, detail::checked_u32(a.rows(), "matrix rows"));
  detail::put_u32(out, detail::checked_u32(a.cols(), "matrix columns"));
  for (const Scalar& z : a.data()) {
    detail::put_f64(out, z.real());
    detail::put_f64(out, z.imag());
  }
  return out;
}

inline DenseMatrix decode_matrix(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r(bytes, "CSKM matrix");
  if (r.magic() != "CSKM") throw FormatError("CSKM matrix: bad magic");
  const std::uint32_t m = r.u32();
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(m) * n * 16);
  std::vector<Scalar> data(static_cast<std::size_t>(m) * n);
  for (auto& z : data) {
    const double re = r.f64();
    const double im = r.f64();
    if (!std::isfinite(re) || !std::isfinite(im)) throw FormatError("CSKM matrix: non-finite entry");
    z = {re, im};
  }
  if (!r.at_end()) throw FormatError("CSKM matrix: trailing bytes");
  return DenseMatrix(m, n, std::move(data));
}

inline void write_matrix(const std::string& path, const DenseMatrix& a) { detail::write_file(path, encode_matrix(a)); }
inline DenseMatrix read_matrix(const std::string& path) { return decode_matrix(detail::read_file(path)); }

/// Like make_operator, but also loads ExplicitDense matrices from their path.
inline std::unique_ptr<SamplingOperator> load_operator(const OperatorDescriptor& d) {
  if (d.kind != OperatorKind::ExplicitDense) return make_operator(d);
  if (!d.path) throw InvalidArgument("dense operator descriptor needs a matrix path");
  DenseMatrix a = read_matrix(*d.path);
  if ((d.m && a.rows() != d.m) || (d.n && a.cols() != d.n))
    throw DimensionError("matrix file " + *d.path + " is " + std::to_string(a.rows()) + " x " +
                         std::to_string(a.cols()) + ", descriptor says " + std::to_string(d.m) + " x " +
                         std::to_string(d.n));
  return std::make_unique<DenseOperator>(std::move(a));
}

// ---- JSON ----

inline nlohmann::json signal_to_json(const SignalVector& x) {
  auto arr = nlohmann::json::array();
  if (x.is_real()) {
    for (const Scalar& z : x.entries()) arr.push_back(z.real());
  } else {
    for (const Scalar& z : x.entries()) arr.push_back({z.real(), z.imag()});
  }
  return arr;
}

inline SignalVector signal_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("signal JSON must be an array");
  std::vector<Scalar> data;
  data.reserve(j.size());
  for (const auto& e : j) {
    if (e.is_number()) {
      data.emplace_back(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      data.emplace_back(e[0].get<double>(), e[1].get<double>());
    } else {
      throw FormatError("signal JSON entries must be numbers or [re, im] pairs");
    }
  }
  return SignalVector(std::move(data));
}

inline OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "identity") return OperatorKind::Identity;
  if (s == "dense") return OperatorKind::ExplicitDense;
  if (s == "gaussian") return OperatorKind::Gaussian;
  if (s == "partial_fourier") return OperatorKind::PartialFourier;
  throw InvalidArgument("unknown operator kind '" + s + "'");
}

inline nlohmann::json descriptor_to_json(const OperatorDescriptor& d) {
  nlohmann::json j{{"kind", to_string(d.kind)}, {"m", d.m}, {"n", d.n}};
  if (d.seed) j["seed"] = *d.seed;
  if (d.rows) j["rows"] = *d.rows;
  if (d.path) j["path"] = *d.path;
  return j;
}

inline OperatorDescriptor descriptor_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("operator descriptor must be an object");
  OperatorDescriptor d;
  d.kind = operator_kind_from_string(j.at("kind").get<std::string>());
  d.n = j.at("n").get<std::size_t>();
  d.m = j.contains("m") ? j.at("m").get<std::size_t>() : d.n;
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("rows")) d.rows = j.at("rows").get<std::vector<std::size_t>>();
  if (j.contains("path")) d.path = j.at("path").get<std::string>();
  return d;
}

}  // namespace cosamp
