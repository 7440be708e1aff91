#include "blight/featstore.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "blight/error.hpp"
#include "blight/rng.hpp"

namespace blight::features {

namespace fs = std::filesystem;

namespace {

std::vector<ProvenanceSpan> single_span(std::string tag, std::size_t cols) {
  return {ProvenanceSpan{std::move(tag), 0, cols}};
}

std::string render_tag(const std::vector<ProvenanceSpan>& spans) {
  if (spans.size() == 1) return spans.front().tag;
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) out += ';';
    out += spans[i].tag + ':' + std::to_string(spans[i].width());
  }
  return out;
}

// Recovers multi-span provenance from a concatenated tag. Falls back to one
// span carrying the raw tag so that decode/encode stays byte-identical.
std::vector<ProvenanceSpan> parse_tag(const std::string& raw, std::size_t cols) {
  if (raw.find(';') == std::string::npos) return single_span(raw, cols);
  std::vector<ProvenanceSpan> spans;
  std::size_t begin = 0;
  std::istringstream in(raw);
  std::string piece;
  while (std::getline(in, piece, ';')) {
    const auto colon = piece.rfind(':');
    if (colon == std::string::npos || colon == 0) return single_span(raw, cols);
    std::size_t width = 0;
    const char* first = piece.data() + colon + 1;
    const char* last = piece.data() + piece.size();
    auto [ptr, ec] = std::from_chars(first, last, width);
    if (ec != std::errc() || ptr != last || width == 0) return single_span(raw, cols);
    spans.push_back({piece.substr(0, colon), begin, begin + width});
    begin += width;
  }
  if (begin != cols || spans.size() < 2 || render_tag(spans) != raw) return single_span(raw, cols);
  return spans;
}

void check_finite(std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNumerical, "feature value " + std::to_string(i) + " is not finite");
    }
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Write to a sibling temp file first so readers never observe a partial matrix.
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values,
                             std::string tag)
    : FeatureMatrix(rows, cols, std::move(values), single_span(std::move(tag), cols)) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values,
                             std::vector<ProvenanceSpan> provenance)
    : rows_(rows), cols_(cols), values_(std::move(values)), provenance_(std::move(provenance)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimension, "matrix holds " + std::to_string(values_.size()) +
                                           " values, expected " + std::to_string(rows_ * cols_));
  }
  check_finite(values_);
  std::size_t expected_begin = 0;
  for (const auto& span : provenance_) {
    if (span.begin != expected_begin || span.end < span.begin) {
      throw Error(ErrorCode::kArgument, "provenance spans must be ordered and contiguous");
    }
    expected_begin = span.end;
  }
  if (expected_begin != cols_) {
    throw Error(ErrorCode::kArgument, "provenance spans must cover every column");
  }
}

std::string FeatureMatrix::source_tag() const { return render_tag(provenance_); }

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<float> out;
  out.reserve(rows.size() * cols_);
  for (std::size_t r : rows) {
    if (r >= rows_) throw Error(ErrorCode::kDimension, "row index out of range");
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return FeatureMatrix(rows.size(), cols_, std::move(out), provenance_);
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  for (std::size_t c : cols) {
    if (c >= cols_) throw Error(ErrorCode::kDimension, "column index out of range");
  }
  std::vector<float> out(rows_ * cols.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    const float* src = values_.data() + r * cols_;
    float* dst = out.data() + r * cols.size();
    for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
  }
  return FeatureMatrix(rows_, cols.size(), std::move(out), "selected");
}

std::vector<std::uint8_t> encode_featmat(const FeatureMatrix& m) {
  const std::string tag = m.source_tag();
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX || tag.size() > UINT32_MAX) {
    throw Error(ErrorCode::kDimension, "matrix too large for FEATMAT1");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFeatmatFixedHeader + tag.size() + m.values().size() * 4);
  out.resize(sizeof(kFeatmatMagic));
  std::memcpy(out.data(), kFeatmatMagic, sizeof(kFeatmatMagic));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  put_u32(out, static_cast<std::uint32_t>(tag.size()));
  out.insert(out.end(), tag.begin(), tag.end());
  for (float v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureMatrix decode_featmat(std::span<const std::uint8_t> bytes) {
  const std::size_t size = bytes.size();
  for (std::size_t i = 0; i < sizeof(kFeatmatMagic); ++i) {
    if (i >= size) throw FormatError("truncated magic", size);
    if (bytes[i] != static_cast<std::uint8_t>(kFeatmatMagic[i])) {
      throw FormatError("bad magic, expected FEATMAT1", i);
    }
  }
  if (size < kFeatmatFixedHeader) throw FormatError("truncated header", size);
  const std::uint64_t rows = get_u32(bytes.data() + 8);
  const std::uint64_t cols = get_u32(bytes.data() + 12);
  const std::uint64_t tag_len = get_u32(bytes.data() + 16);
  const std::uint64_t header = kFeatmatFixedHeader + tag_len;
  if (size < header) throw FormatError("truncated source tag", size);
  std::string tag(reinterpret_cast<const char*>(bytes.data() + kFeatmatFixedHeader), tag_len);

  const std::uint64_t count = rows * cols;
  const std::uint64_t available = (size - header) / 4;
  if (available < count) {
    throw FormatError("truncated payload: " + std::to_string(count) + " values declared, " +
                          std::to_string(available) + " present",
                      header + available * 4);
  }
  if (size - header != count * 4) {
    throw FormatError("trailing bytes after payload", header + count * 4);
  }
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t offset = header + i * 4;
    const float v = std::bit_cast<float>(get_u32(bytes.data() + offset));
    if (!std::isfinite(v)) throw FormatError("non-finite value", offset);
    values[i] = v;
  }
  return FeatureMatrix(rows, cols, std::move(values), parse_tag(tag, cols));
}

FeatureMatrix load_featmat(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_featmat(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_featmat(const fs::path& path, const FeatureMatrix& m) {
  write_file(path, encode_featmat(m));
}

FeatureMatrix concat(std::span<const FeatureMatrix* const> parts) {
  if (parts.empty()) throw Error(ErrorCode::kArgument, "concat needs at least one part");
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (parts[p]->rows() != rows) {
      throw Error(ErrorCode::kAlignment, "part " + std::to_string(p) + " (" +
                                             parts[p]->source_tag() + ") has " +
                                             std::to_string(parts[p]->rows()) + " rows, expected " +
                                             std::to_string(rows));
    }
    cols += parts[p]->cols();
  }
  if (parts.size() == 1) return *parts.front();

  std::vector<float> values(rows * cols);
  std::vector<ProvenanceSpan> provenance;
  std::size_t offset = 0;
  for (const FeatureMatrix* part : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      auto src = part->row(r);
      std::copy(src.begin(), src.end(), values.begin() + r * cols + offset);
    }
    for (const auto& span : part->provenance()) {
      provenance.push_back({span.tag, span.begin + offset, span.end + offset});
    }
    offset += part->cols();
  }
  return FeatureMatrix(rows, cols, std::move(values), std::move(provenance));
}

FeatureMatrix concat(std::span<const FeatureMatrix> parts) {
  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat(std::span<const FeatureMatrix* const>(ptrs));
}

ColumnStats standardize_fit(const FeatureMatrix& train) {
  if (train.rows() < 2) {
    throw Error(ErrorCode::kDimension, "standardization needs at least 2 rows");
  }
  const std::size_t cols = train.cols();
  ColumnStats stats;
  stats.mean.assign(cols, 0.0);
  stats.stddev.assign(cols, 0.0);
  stats.constant.assign(cols, 0);
  for (std::size_t r = 0; r < train.rows(); ++r) {
    auto row = train.row(r);
    for (std::size_t c = 0; c < cols; ++c) stats.mean[c] += row[c];
  }
  const double n = static_cast<double>(train.rows());
  for (double& m : stats.mean) m /= n;
  // Second pass on centered values; the one-pass formula loses digits.
  for (std::size_t r = 0; r < train.rows(); ++r) {
    auto row = train.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = row[c] - stats.mean[c];
      stats.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    stats.stddev[c] = std::sqrt(stats.stddev[c] / n);
    stats.constant[c] = stats.stddev[c] < kConstantColumnThreshold ? 1 : 0;
  }
  return stats;
}

FeatureMatrix standardize_apply(const FeatureMatrix& m, const ColumnStats& stats) {
  if (stats.cols() != m.cols()) {
    throw Error(ErrorCode::kAlignment, "statistics cover " + std::to_string(stats.cols()) +
                                           " columns, matrix has " + std::to_string(m.cols()));
  }
  std::vector<float> out(m.values().size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out[r * m.cols() + c] = static_cast<float>(stats.apply(c, row[c]));
    }
  }
  return FeatureMatrix(m.rows(), m.cols(), std::move(out), m.provenance());
}

FeatureMatrix standardize_invert(const FeatureMatrix& m, const ColumnStats& stats) {
  if (stats.cols() != m.cols()) throw Error(ErrorCode::kAlignment, "statistics/matrix mismatch");
  std::vector<float> out(m.values().size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double scale = stats.constant[c] ? 0.0 : stats.stddev[c];
      out[r * m.cols() + c] = static_cast<float>(row[c] * scale + stats.mean[c]);
    }
  }
  return FeatureMatrix(m.rows(), m.cols(), std::move(out), m.provenance());
}

const char* label_name(Label l) noexcept {
  return l == Label::kLateBlight ? "late_blight" : "healthy";
}

Label parse_label(const std::string& text) {
  if (text == "late_blight") return Label::kLateBlight;
  if (text == "healthy") return Label::kHealthy;
  throw Error(ErrorCode::kFormat, "unknown label '" + text + "' (expected late_blight or healthy)");
}

std::size_t LabeledDataset::count(Label l) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

void LabeledDataset::validate() const {
  if (labels.size() != features.rows()) {
    throw Error(ErrorCode::kAlignment, std::to_string(labels.size()) + " labels for " +
                                           std::to_string(features.rows()) + " feature rows");
  }
  if (!sample_ids.empty() && sample_ids.size() != labels.size()) {
    throw Error(ErrorCode::kAlignment, "sample id count does not match label count");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels[r]);
  if (!sample_ids.empty()) {
    for (std::size_t r : rows) out.sample_ids.push_back(sample_ids[r]);
  }
  return out;
}

LabeledDataset LabeledDataset::with_columns(std::span<const std::size_t> cols) const {
  return {features.select_columns(cols), labels, sample_ids};
}

LabelTable read_labels_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "sample_id,label") {
    throw Error(ErrorCode::kFormat, path.string() + ": expected header 'sample_id,label'");
  }
  LabelTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(line_no) + ": missing label column");
    }
    table.sample_ids.push_back(line.substr(0, comma));
    try {
      table.labels.push_back(parse_label(trim(line.substr(comma + 1))));
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

void write_labels_csv(const fs::path& path, const LabelTable& table) {
  std::ostringstream out;
  out << "sample_id,label\n";
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    out << table.sample_ids[i] << ',' << label_name(table.labels[i]) << '\n';
  }
  const std::string text = out.str();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

LabeledDataset load_dataset(const fs::path& featmat, const fs::path& labels_csv) {
  LabelTable table = read_labels_csv(labels_csv);
  LabeledDataset ds{load_featmat(featmat), std::move(table.labels), std::move(table.sample_ids)};
  ds.validate();
  return ds;
}

std::vector<std::size_t> FoldAssignment::train_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) rows.push_back(i);
  }
  return rows;
}

FoldAssignment make_folds(std::span<const Label> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kConfiguration, "fold count must be at least 2");
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of.assign(labels.size(), -1);
  std::size_t deal_offset = 0;
  const Label classes[] = {Label::kLateBlight, Label::kHealthy};
  for (std::size_t ci = 0; ci < 2; ++ci) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == classes[ci]) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::kStratification,
                  std::string("class ") + label_name(classes[ci]) + " has " +
                      std::to_string(members.size()) + " samples, fewer than " +
                      std::to_string(k) + " folds");
    }
    CounterRng rng(seed, ci + 1);
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
    // Continue dealing where the previous class stopped so fold sizes stay level.
    for (std::size_t j = 0; j < members.size(); ++j) {
      folds.fold_of[members[j]] = static_cast<int>((deal_offset + j) % k);
    }
    deal_offset = (deal_offset + members.size()) % k;
  }
  return folds;
}

}  // namespace blight::features
