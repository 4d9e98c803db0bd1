/*
 * Copyright 2026 The mlood Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// On-disk formats.
//
// Matrix files come in two flavours:
//   CSV     header "c0,c1,...,c{cols-1}", one row per line, values printed
//           with shortest round-trip formatting.
//   binary  24-byte header then a row-major little-endian payload:
//             bytes 0-3   magic "OODM" (0x4F 0x4F 0x44 0x4D)
//             byte  4     version = 1
//             byte  5     dtype: 0 = float32, 1 = float64
//             bytes 6-7   reserved, zero
//             bytes 8-15  rows, uint64 little-endian
//             bytes 16-23 cols, uint64 little-endian
//           float32 payloads are widened to double on read.
// Every file is written to a temporary sibling and renamed into place, so a
// failed command never leaves a partial file behind.

#ifndef MLOOD_IO_HPP_
#define MLOOD_IO_HPP_

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/harness.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/mahalanobis.hpp"
#include "mlood/metrics.hpp"
#include "mlood/tuning.hpp"

namespace mlood {

enum class MatrixFormat { kCsv, kBinaryF64, kBinaryF32 };

inline constexpr std::array<unsigned char, 4> kMatrixMagic = {0x4F, 0x4F, 0x44,
                                                              0x4D};
inline constexpr unsigned char kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderSize = 24;

// Shortest decimal string that parses back to the same double.
inline std::string FormatDouble(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Fail(ErrorCode::kMissingArtifact, "cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void AtomicWriteFile(const std::filesystem::path& path,
                            std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      Fail(ErrorCode::kIoError, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    Fail(ErrorCode::kIoError, "cannot rename into " + path.string());
  }
}

namespace internal {

inline void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t GetU64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i]))
         << (8 * i);
  }
  return v;
}

inline std::string EncodeBinary(const Matrix& m, bool single) {
  std::string out;
  out.reserve(kMatrixHeaderSize + m.size() * (single ? 4 : 8));
  for (unsigned char c : kMatrixMagic) out.push_back(static_cast<char>(c));
  out.push_back(static_cast<char>(kMatrixVersion));
  out.push_back(static_cast<char>(single ? 0 : 1));
  out.push_back('\0');
  out.push_back('\0');
  PutU64(out, m.rows());
  PutU64(out, m.cols());
  for (double v : m.data()) {
    if (single) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    } else {
      PutU64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

inline Matrix DecodeBinary(std::string_view bytes) {
  if (bytes.size() < 4 ||
      std::memcmp(bytes.data(), kMatrixMagic.data(), kMatrixMagic.size()) != 0) {
    Fail(ErrorCode::kBadMagic, "not an OODM matrix file");
  }
  if (bytes.size() < kMatrixHeaderSize) {
    Fail(ErrorCode::kTruncatedPayload, "header shorter than 24 bytes");
  }
  if (static_cast<unsigned char>(bytes[4]) != kMatrixVersion) {
    Fail(ErrorCode::kUnsupportedVersion,
         "version " + std::to_string(static_cast<unsigned char>(bytes[4])));
  }
  const auto dtype = static_cast<unsigned char>(bytes[5]);
  if (dtype > 1) {
    Fail(ErrorCode::kUnsupportedVersion, "dtype " + std::to_string(dtype));
  }
  if (bytes[6] != '\0' || bytes[7] != '\0') {
    Fail(ErrorCode::kUnsupportedVersion, "reserved header bytes are not zero");
  }
  const std::uint64_t rows = GetU64(bytes, 8);
  const std::uint64_t cols = GetU64(bytes, 16);
  const std::size_t width = dtype == 0 ? 4 : 8;
  const std::size_t payload = bytes.size() - kMatrixHeaderSize;
  if (cols != 0 && rows > payload / width / cols) {
    Fail(ErrorCode::kTruncatedPayload, "payload shorter than rows x cols");
  }
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  if (payload != count * width) {
    // Short and over-long payloads are both a size mismatch with the header.
    Fail(ErrorCode::kTruncatedPayload, payload < count * width
                                           ? "payload shorter than rows x cols"
                                           : "trailing bytes after payload");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kMatrixHeaderSize + i * width;
    if (dtype == 0) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + b]))
                << (8 * b);
      }
      data[i] = static_cast<double>(std::bit_cast<float>(bits));
    } else {
      data[i] = std::bit_cast<double>(GetU64(bytes, at));
    }
  }
  return Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                std::move(data));
}

inline std::string EncodeCsv(const Matrix& m) {
  std::string out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (j) out += ',';
    out += 'c' + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += FormatDouble(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline Matrix DecodeCsv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) Fail(ErrorCode::kMalformedCsv, "missing header row");

  const auto header = SplitFields(lines.front());
  const std::size_t cols = lines.front().empty() ? 0 : header.size();
  for (std::size_t j = 0; j < cols; ++j) {
    if (header[j] != "c" + std::to_string(j)) {
      Fail(ErrorCode::kMalformedCsv,
           "header column " + std::to_string(j) + " must be c" + std::to_string(j));
    }
  }
  std::vector<double> data;
  data.reserve((lines.size() - 1) * cols);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = SplitFields(lines[i]);
    if (fields.size() != cols) {
      Fail(ErrorCode::kMalformedCsv,
           "line " + std::to_string(i + 1) + " has " +
               std::to_string(fields.size()) + " fields, header has " +
               std::to_string(cols));
    }
    for (auto f : fields) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        Fail(ErrorCode::kMalformedCsv, "line " + std::to_string(i + 1) +
                                           ": bad number '" + std::string(f) + "'");
      }
      data.push_back(v);
    }
  }
  return Matrix(lines.size() - 1, cols, std::move(data));
}

}  // namespace internal

inline std::string EncodeMatrix(const Matrix& m, MatrixFormat format) {
  switch (format) {
    case MatrixFormat::kCsv: return internal::EncodeCsv(m);
    case MatrixFormat::kBinaryF64: return internal::EncodeBinary(m, false);
    case MatrixFormat::kBinaryF32: return internal::EncodeBinary(m, true);
  }
  return {};
}

// CSV when the bytes start with the "c0" header or the caller knows the file is
// CSV; otherwise binary, failing with BadMagic if the magic is missing.
inline Matrix DecodeMatrix(std::string_view bytes, bool csv_hint = false) {
  if (bytes.starts_with("c0") || (csv_hint && !bytes.starts_with("OODM"))) {
    return internal::DecodeCsv(bytes);
  }
  return internal::DecodeBinary(bytes);
}

inline Matrix ReadMatrix(const std::filesystem::path& path) {
  return DecodeMatrix(ReadFileBytes(path), path.extension() == ".csv");
}

inline void WriteMatrix(const std::filesystem::path& path, const Matrix& m,
                        MatrixFormat format = MatrixFormat::kBinaryF64) {
  AtomicWriteFile(path, EncodeMatrix(m, format));
}

inline MatrixFormat FormatForPath(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::kCsv : MatrixFormat::kBinaryF64;
}

// N x 1 column matrix of scores.
inline void WriteScores(const std::filesystem::path& path,
                        const ScoreVector& scores) {
  WriteMatrix(path,
              Matrix(scores.size(), 1,
                     std::vector<double>(scores.begin(), scores.end())),
              FormatForPath(path));
}

inline ScoreVector ReadScores(const std::filesystem::path& path) {
  const Matrix m = ReadMatrix(path);
  if (m.cols() != 1) {
    Fail(ErrorCode::kDimensionMismatch,
         path.string() + " must have exactly one column of scores");
  }
  return ScoreVector(std::vector<double>(m.data().begin(), m.data().end()));
}

// LinearModel as a K x (d + 1) matrix: weights with the bias appended.
inline Matrix ModelToMatrix(const LinearModel& model) {
  const std::size_t k = model.num_labels();
  const std::size_t d = model.input_dim();
  std::vector<double> data;
  data.reserve(k * (d + 1));
  for (std::size_t i = 0; i < k; ++i) {
    const auto w = model.weights().Row(i);
    data.insert(data.end(), w.begin(), w.end());
    data.push_back(model.bias()[i]);
  }
  return Matrix(k, d + 1, std::move(data));
}

inline LinearModel ModelFromMatrix(const Matrix& m) {
  if (m.cols() < 2) {
    Fail(ErrorCode::kDimensionMismatch, "model matrix needs at least 2 columns");
  }
  const std::size_t d = m.cols() - 1;
  std::vector<double> w;
  std::vector<double> b;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.Row(i);
    w.insert(w.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(d));
    b.push_back(r[d]);
  }
  return LinearModel(Matrix(m.rows(), d, std::move(w)), std::move(b));
}

// Mahalanobis statistics as <prefix>.means.bin, <prefix>.precision.bin and a
// 1 x 1 <prefix>.reg.bin.
inline void WriteMahalanobis(const std::filesystem::path& prefix,
                             const MahalanobisModel& model) {
  auto with = [&](const char* suffix) {
    auto p = prefix;
    p += suffix;
    return p;
  };
  WriteMatrix(with(".means.bin"), model.means());
  WriteMatrix(with(".precision.bin"), model.precision());
  WriteMatrix(with(".reg.bin"), Matrix(1, 1, {model.reg()}));
}

inline MahalanobisModel ReadMahalanobis(const std::filesystem::path& prefix) {
  auto with = [&](const char* suffix) {
    auto p = prefix;
    p += suffix;
    return p;
  };
  const Matrix reg = ReadMatrix(with(".reg.bin"));
  if (reg.size() != 1) Fail(ErrorCode::kDimensionMismatch, "reg must be 1 x 1");
  return MahalanobisModel(ReadMatrix(with(".means.bin")),
                          ReadMatrix(with(".precision.bin")), reg.data()[0]);
}

using Json = nlohmann::ordered_json;

inline Json ToJson(const EvalReport& r) {
  return Json{{"fpr_at_tpr", r.fpr_at_tpr}, {"auroc", r.auroc},
              {"aupr", r.aupr},             {"threshold", r.threshold},
              {"tpr_target", r.tpr_target}, {"n_in", r.n_in},
              {"n_ood", r.n_ood}};
}

inline EvalReport EvalReportFromJson(const Json& j) try {
  EvalReport r;
  r.fpr_at_tpr = j.at("fpr_at_tpr").get<double>();
  r.auroc = j.at("auroc").get<double>();
  r.aupr = j.at("aupr").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.tpr_target = j.at("tpr_target").get<double>();
  r.n_in = j.at("n_in").get<std::size_t>();
  r.n_ood = j.at("n_ood").get<std::size_t>();
  return r;
} catch (const nlohmann::json::exception& e) {
  Fail(ErrorCode::kInvalidConfig, std::string("eval report: ") + e.what());
}

inline constexpr std::string_view kEvalCsvHeader =
    "method,aggregation,fpr95,auroc,aupr,tau,n_in,n_ood";

inline std::string EvalCsvRow(std::string_view method,
                              std::string_view aggregation,
                              const EvalReport& r) {
  std::string row;
  row += method;
  row += ',';
  row += aggregation;
  for (double v : {r.fpr_at_tpr, r.auroc, r.aupr, r.threshold}) {
    row += ',';
    row += FormatDouble(v);
  }
  row += ',' + std::to_string(r.n_in) + ',' + std::to_string(r.n_ood);
  return row;
}

inline Json ToJson(const ParamMap& params) {
  Json j = Json::object();
  for (const auto& [k, v] : params) j[k] = v;
  return j;
}

inline Json ToJson(const TuneResult& r) {
  Json trace = Json::array();
  for (const auto& point : r.grid_trace) {
    trace.push_back(Json{{"params", ToJson(point.params)},
                         {"objective", point.objective}});
  }
  return Json{{"best_params", ToJson(r.best_params)},
              {"objective", r.objective},
              {"grid_trace", std::move(trace)}};
}

inline Json ToJson(const ToyConfig& c) {
  return Json{{"dim", c.dim},
              {"num_labels", c.num_labels},
              {"num_ood_prototypes", c.num_ood_prototypes},
              {"proto_scale", c.proto_scale},
              {"noise_sigma", c.noise_sigma},
              {"max_positive", c.max_positive},
              {"n_train", c.n_train},
              {"n_test_in", c.n_test_in},
              {"n_test_ood", c.n_test_ood},
              {"seed", c.seed}};
}

inline ToyConfig ToyConfigFromJson(const Json& j) try {
  ToyConfig c;
  c.dim = j.at("dim").get<std::size_t>();
  c.num_labels = j.at("num_labels").get<std::size_t>();
  c.num_ood_prototypes = j.at("num_ood_prototypes").get<std::size_t>();
  c.proto_scale = j.at("proto_scale").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.max_positive = j.at("max_positive").get<std::size_t>();
  c.n_train = j.at("n_train").get<std::size_t>();
  c.n_test_in = j.at("n_test_in").get<std::size_t>();
  c.n_test_ood = j.at("n_test_ood").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
} catch (const nlohmann::json::exception& e) {
  Fail(ErrorCode::kInvalidConfig, std::string("toy config: ") + e.what());
}

inline void WriteJson(const std::filesystem::path& path, const Json& j) {
  AtomicWriteFile(path, j.dump(2) + "\n");
}

inline Json ReadJson(const std::filesystem::path& path) {
  try {
    return Json::parse(ReadFileBytes(path));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
}

// Task directory layout (all matrices binary f64):
//   train_inputs.bin  train_labels.bin  test_in_inputs.bin  test_in_labels.bin
//   test_ood_inputs.bin  prototypes_in.bin  prototypes_ood.bin  config.json
inline void WriteTask(const std::filesystem::path& dir, const ToyTask& task) {
  WriteMatrix(dir / "train_inputs.bin", task.train.inputs());
  WriteMatrix(dir / "train_labels.bin", task.train.labels());
  WriteMatrix(dir / "test_in_inputs.bin", task.test_in.inputs());
  WriteMatrix(dir / "test_in_labels.bin", task.test_in.labels());
  WriteMatrix(dir / "test_ood_inputs.bin", task.test_ood_inputs);
  WriteMatrix(dir / "prototypes_in.bin", task.prototypes_in);
  WriteMatrix(dir / "prototypes_ood.bin", task.prototypes_ood);
  Json meta = ToJson(task.config);
  meta["min_prototype_angle"] = task.min_prototype_angle;
  WriteJson(dir / "config.json", meta);
}

inline ToyTask ReadTask(const std::filesystem::path& dir) {
  ToyTask task;
  const Json meta = ReadJson(dir / "config.json");
  task.config = ToyConfigFromJson(meta);
  task.min_prototype_angle = meta.value("min_prototype_angle", 0.0);
  task.train = LabeledDataset(ReadMatrix(dir / "train_inputs.bin"),
                              ReadMatrix(dir / "train_labels.bin"));
  task.test_in = LabeledDataset(ReadMatrix(dir / "test_in_inputs.bin"),
                                ReadMatrix(dir / "test_in_labels.bin"));
  task.test_ood_inputs = ReadMatrix(dir / "test_ood_inputs.bin");
  task.prototypes_in = ReadMatrix(dir / "prototypes_in.bin");
  task.prototypes_ood = ReadMatrix(dir / "prototypes_ood.bin");
  return task;
}

}  // namespace mlood

#endif  // MLOOD_IO_HPP_
