#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "blight/error.hpp"
#include "blight/featstore.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace blight::features;
using blight::Error;
using blight::ErrorCode;
using blight::FormatError;

namespace {

// FEATMAT1 bytes assembled by hand from the layout table.
std::vector<std::uint8_t> hand_encode(std::uint32_t rows, std::uint32_t cols, const std::string& tag,
                                      const std::vector<float>& values) {
  std::vector<std::uint8_t> b = {'F', 'E', 'A', 'T', 'M', 'A', 'T', '1'};
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  u32(rows);
  u32(cols);
  u32(static_cast<std::uint32_t>(tag.size()));
  b.insert(b.end(), tag.begin(), tag.end());
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  return b;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, const std::string& tag) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = normal(gen);
  return FeatureMatrix(rows, cols, std::move(v), tag);
}

std::size_t format_offset(std::span<const std::uint8_t> bytes) {
  try {
    (void)decode_featmat(bytes);
  } catch (const FormatError& e) {
    CHECK(e.code() == ErrorCode::kFormat);
    return e.offset();
  }
  FAIL("expected a format error");
  return 0;
}

}  // namespace

TEST_CASE("matrix invariants") {
  CHECK_THROWS_AS(FeatureMatrix(2, 3, std::vector<float>(5)), Error);
  CHECK_THROWS_AS(FeatureMatrix(1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}), Error);
  CHECK_THROWS_AS(FeatureMatrix(1, 2, {1.0f, 2.0f}, std::vector<ProvenanceSpan>{{"a", 0, 1}}), Error);
  CHECK_THROWS_AS(FeatureMatrix(1, 2, {1.0f, 2.0f}, std::vector<ProvenanceSpan>{{"a", 0, 1}, {"b", 0, 2}}), Error);
  const FeatureMatrix m(2, 3, {1, 2, 3, 4, 5, 6}, "x");
  CHECK(m.at(1, 2) == 6);
  CHECK(m.row(1)[0] == 4);
  CHECK(m.source_tag() == "x");
}

TEST_CASE("FEATMAT1 decoding") {
  SUBCASE("hand-built 2x3 file") {
    const auto bytes = hand_encode(2, 3, "darknet53-gap", {1, 2, 3, 4, 5, 6.5f});
    const auto m = decode_featmat(bytes);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.at(1, 2) == 6.5f);
    CHECK(m.source_tag() == "darknet53-gap");
    CHECK(encode_featmat(m) == bytes);
  }
  SUBCASE("truncated payload offset") {
    // 5 of 6 values present: header 20 + T, then 5 * 4 bytes.
    const std::string tag = "abc";
    const auto bytes = hand_encode(2, 3, tag, {1, 2, 3, 4, 5});
    CHECK(format_offset(bytes) == 20 + tag.size() + 5 * 4);
    auto ragged = bytes;
    ragged.push_back(0);
    ragged.push_back(0);
    CHECK(format_offset(ragged) == 20 + tag.size() + 5 * 4);
  }
  SUBCASE("bad magic, short header, short tag") {
    auto bytes = hand_encode(1, 1, "t", {1});
    bytes[3] = 'X';
    CHECK(format_offset(bytes) == 3);
    CHECK(format_offset(std::vector<std::uint8_t>{'F', 'E', 'A'}) == 3);
    const auto full = hand_encode(1, 1, "long-tag", {1});
    CHECK(format_offset(std::span(full).first(24)) == 24);
  }
  SUBCASE("non-finite value offset") {
    const std::string tag = "t";
    const auto bytes = hand_encode(2, 2, tag, {1, 2, std::numeric_limits<float>::infinity(), 4});
    CHECK(format_offset(bytes) == 20 + tag.size() + 2 * 4);
  }
  SUBCASE("trailing bytes") {
    auto bytes = hand_encode(1, 2, "t", {1, 2});
    bytes.insert(bytes.end(), {0, 0, 0, 0});
    CHECK(format_offset(bytes) == 20 + 1 + 2 * 4);
  }
}

TEST_CASE("FEATMAT1 file round trip is byte-identical") {
  fixtures::TempDir dir("featstore");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = random_matrix(3 + seed, 2 * seed, seed, "tag-" + std::to_string(seed));
    write_featmat(dir / "m.featmat", m);
    const auto loaded = load_featmat(dir / "m.featmat");
    CHECK(loaded == m);
    write_featmat(dir / "copy.featmat", loaded);
    std::ifstream a(dir / "m.featmat", std::ios::binary), b(dir / "copy.featmat", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(sa.size() == 20 + m.source_tag().size() + 4 * m.rows() * m.cols());
  }
  CHECK_THROWS_AS((void)load_featmat(dir / "missing.featmat"), Error);
}

TEST_CASE("concat") {
  SUBCASE("hand example") {
    const FeatureMatrix a(2, 1, {1, 2}, "a");
    const FeatureMatrix b(2, 1, {3, 4}, "b");
    const auto c = concat(std::vector<FeatureMatrix>{a, b});
    CHECK(c == FeatureMatrix(2, 2, {1, 3, 2, 4}, std::vector<ProvenanceSpan>{{"a", 0, 1}, {"b", 1, 2}}));
    CHECK(c.source_tag() == "a:1;b:1");
    CHECK(decode_featmat(encode_featmat(c)) == c);
  }
  SUBCASE("backbone widths") {
    const std::vector<FeatureMatrix> parts = {random_matrix(4, 1024, 1, "darknet53-gap"),
                                              random_matrix(4, 4096, 2, "alexnet-fc7"),
                                              random_matrix(4, 4096, 3, "vgg19-fc7")};
    const auto c = concat(parts);
    CHECK(c.cols() == 9216);
    CHECK(c.provenance().size() == 3);
    CHECK(c.provenance()[2].begin == 5120);
    CHECK(c.at(3, 1024) == parts[1].at(3, 0));
    const auto bytes = encode_featmat(c);
    CHECK(encode_featmat(decode_featmat(bytes)) == bytes);
  }
  SUBCASE("single part passes through") {
    const auto a = random_matrix(3, 4, 9, "solo");
    CHECK(concat(std::vector<FeatureMatrix>{a}) == a);
  }
  SUBCASE("associativity") {
    const auto a = random_matrix(5, 2, 1, "a");
    const auto b = random_matrix(5, 3, 2, "b");
    const auto c = random_matrix(5, 1, 3, "c");
    const auto left = concat(std::vector<FeatureMatrix>{concat(std::vector<FeatureMatrix>{a, b}), c});
    const auto flat = concat(std::vector<FeatureMatrix>{a, b, c});
    CHECK(std::equal(left.values().begin(), left.values().end(), flat.values().begin(), flat.values().end()));
  }
  SUBCASE("row mismatch names the part") {
    try {
      (void)concat(std::vector<FeatureMatrix>{random_matrix(3, 1, 1, "a"), random_matrix(3, 1, 2, "b"),
                                              random_matrix(4, 1, 3, "vgg")});
      FAIL("expected alignment error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kAlignment);
      CHECK(std::string(e.what()).find("part 2") != std::string::npos);
      CHECK(std::string(e.what()).find("vgg") != std::string::npos);
    }
  }
}

TEST_CASE("standardization") {
  SUBCASE("hand arithmetic") {
    const FeatureMatrix m(3, 2, {1, 5, 3, 5, 2, 5});
    const auto s = standardize_fit(m);
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(s.constant[1] == 1);
    CHECK(s.mean[1] == 5.0);

    const FeatureMatrix col(2, 1, {1, 3});
    const auto cs = standardize_fit(col);
    CHECK(cs.mean[0] == 2.0);
    CHECK(cs.stddev[0] == 1.0);
    const auto z = standardize_apply(col, cs);
    CHECK(z.at(0, 0) == -1.0f);
    CHECK(z.at(1, 0) == 1.0f);
  }
  SUBCASE("identity statistics") {
    const auto m = random_matrix(4, 3, 2, "x");
    const ColumnStats unit{{0, 0, 0}, {1, 1, 1}, {0, 0, 0}};
    CHECK(standardize_apply(m, unit).values().size() == 12);
    CHECK(std::equal(m.values().begin(), m.values().end(), standardize_apply(m, unit).values().begin()));
  }
  SUBCASE("self application, fixed point, inverse") {
    const auto m = random_matrix(50, 6, 4, "x");
    const auto stats = standardize_fit(m);
    const auto z = standardize_apply(m, stats);
    const auto again = standardize_fit(z);
    for (std::size_t c = 0; c < 6; ++c) {
      CHECK(std::abs(again.mean[c]) < 1e-6);
      CHECK(again.stddev[c] == doctest::Approx(1.0).epsilon(1e-6));
    }
    const auto back = standardize_invert(z, stats);
    double worst = 0;
    for (std::size_t i = 0; i < m.values().size(); ++i) {
      worst = std::max<double>(worst, std::abs(back.values()[i] - m.values()[i]) / std::max(1.0f, std::abs(m.values()[i])));
    }
    CHECK(worst < 1e-5);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS((void)standardize_fit(FeatureMatrix(1, 2, {1, 2})), Error);
    const auto stats = standardize_fit(random_matrix(4, 3, 1, "x"));
    try {
      (void)standardize_apply(random_matrix(4, 2, 1, "x"), stats);
      FAIL("expected alignment error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kAlignment);
    }
  }
}

TEST_CASE("labels") {
  CHECK(parse_label("late_blight") == Label::kLateBlight);
  CHECK(parse_label("healthy") == Label::kHealthy);
  CHECK_THROWS_AS((void)parse_label("early_blight"), Error);

  fixtures::TempDir dir("labels");
  const LabelTable table{{"late_blight/a.png", "healthy/b.png", "late_blight/c.png"},
                         {Label::kLateBlight, Label::kHealthy, Label::kLateBlight}};
  write_labels_csv(dir / "labels.csv", table);
  {
    std::ifstream in(dir / "labels.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "sample_id,label");
  }
  const auto back = read_labels_csv(dir / "labels.csv");
  CHECK(back.sample_ids == table.sample_ids);
  CHECK(back.labels == table.labels);

  write_featmat(dir / "f.featmat", random_matrix(3, 2, 1, "x"));
  const auto ds = load_dataset(dir / "f.featmat", dir / "labels.csv");
  CHECK(ds.size() == 3);
  CHECK(ds.count(Label::kLateBlight) == 2);

  write_featmat(dir / "g.featmat", random_matrix(4, 2, 1, "x"));
  CHECK_THROWS_AS((void)load_dataset(dir / "g.featmat", dir / "labels.csv"), Error);

  std::ofstream(dir / "bad.csv") << "id,label\nx,healthy\n";
  CHECK_THROWS_AS((void)read_labels_csv(dir / "bad.csv"), Error);
  std::ofstream(dir / "bad2.csv") << "sample_id,label\nx,sick\n";
  CHECK_THROWS_AS((void)read_labels_csv(dir / "bad2.csv"), Error);
}

TEST_CASE("stratified folds") {
  auto labels_of = [](std::size_t pos, std::size_t neg) {
    std::vector<Label> l(pos, Label::kLateBlight);
    l.insert(l.end(), neg, Label::kHealthy);
    return l;
  };
  auto per_fold = [](const std::vector<Label>& labels, const FoldAssignment& f, Label cls) {
    std::vector<std::size_t> n(f.k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) ++n[f.fold_of[i]];
    }
    return n;
  };

  SUBCASE("exact divisibility") {
    const auto labels = labels_of(10, 10);
    const auto f = make_folds(labels, 5, 3);
    CHECK(per_fold(labels, f, Label::kLateBlight) == std::vector<std::size_t>(5, 2));
    CHECK(per_fold(labels, f, Label::kHealthy) == std::vector<std::size_t>(5, 2));
    CHECK(make_folds(labels, 5, 3).fold_of == f.fold_of);
  }
  SUBCASE("reproduction class sizes") {
    const auto labels = labels_of(1000, 760);
    const auto f = make_folds(labels, 5, 1);
    CHECK(per_fold(labels, f, Label::kLateBlight) == std::vector<std::size_t>(5, 200));
    CHECK(per_fold(labels, f, Label::kHealthy) == std::vector<std::size_t>(5, 152));
  }
  SUBCASE("partition and balance on awkward sizes") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 30; ++trial) {
      const int k = 2 + static_cast<int>(gen() % 6);
      const std::size_t pos = k + gen() % 40;
      const std::size_t neg = k + gen() % 40;
      auto labels = labels_of(pos, neg);
      std::shuffle(labels.begin(), labels.end(), gen);
      const auto f = make_folds(labels, k, gen());
      std::size_t covered = 0;
      for (int fold = 0; fold < k; ++fold) {
        const auto test = f.test_rows(fold);
        CHECK(!test.empty());
        CHECK(test.size() + f.train_rows(fold).size() == labels.size());
        covered += test.size();
      }
      CHECK(covered == labels.size());
      for (Label cls : {Label::kLateBlight, Label::kHealthy}) {
        const double expected = static_cast<double>(cls == Label::kLateBlight ? pos : neg) / k;
        for (std::size_t n : per_fold(labels, f, cls)) CHECK(std::abs(n - expected) < 1.0);
      }
    }
  }
  SUBCASE("seed changes the split") {
    const auto labels = labels_of(30, 30);
    CHECK(make_folds(labels, 5, 1).fold_of != make_folds(labels, 5, 2).fold_of);
  }
  SUBCASE("errors") {
    try {
      (void)make_folds(labels_of(10, 4), 5, 1);
      FAIL("expected stratification error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kStratification);
    }
    CHECK_THROWS_AS((void)make_folds(labels_of(10, 10), 1, 1), Error);
  }
}

TEST_CASE("dataset views") {
  auto ds = fixtures::planted_shift(6, 4, 5, 1, 2.0f, 1);
  ds.validate();
  const std::vector<std::size_t> rows = {0, 9};
  const auto sub = ds.subset(rows);
  CHECK(sub.size() == 2);
  CHECK(sub.labels[1] == Label::kHealthy);
  CHECK(sub.sample_ids[1] == "s9");
  const std::vector<std::size_t> cols = {4, 1};
  const auto narrow = ds.with_columns(cols);
  CHECK(narrow.features.cols() == 2);
  CHECK(narrow.features.at(3, 0) == ds.features.at(3, 4));
  ds.labels.pop_back();
  CHECK_THROWS_AS(ds.validate(), Error);
}
