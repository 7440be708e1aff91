#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>

#include "blight/error.hpp"
#include "blight/svm.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "qp_oracle.hpp"

using namespace blight::svm;
using blight::ConvergenceError;
using blight::Error;
using blight::ErrorCode;
using blight::features::FeatureMatrix;
using blight::features::Label;
using namespace oracle;

namespace {

TrainOptions raw(double tol = 1e-3) {
  TrainOptions o;
  o.tol = tol;
  o.standardize = false;
  return o;
}

double model_decision(const SvmModel& m, const std::vector<double>& x) {
  std::vector<float> f(x.begin(), x.end());
  return m.decision_value(f);
}

}  // namespace

TEST_CASE("kernel definitions") {
  const std::vector<double> a{1, 2}, b{3, 4}, e{1, 0};
  CHECK(kernel_eval(KernelSpec::linear(), std::span(a), std::span(b)) == 11.0);
  CHECK(kernel_eval(KernelSpec::linear(2.0), std::span(a), std::span(b)) == doctest::Approx(11.0 / 4));
  CHECK(kernel_eval(KernelSpec::polynomial(2), std::span(e), std::span(e)) == 4.0);
  CHECK(kernel_eval(KernelSpec::polynomial(3), std::span(e), std::span(e)) == 8.0);
  CHECK(kernel_eval(KernelSpec::gaussian(0.3), std::span(a), std::span(a)) == 1.0);
  CHECK(kernel_eval(KernelSpec::gaussian(2.0), std::span(a), std::span(b)) == doctest::Approx(std::exp(-8.0 / 4)));
  const std::vector<float> fa{1, 2}, fb{3, 4};
  CHECK(kernel_eval(KernelSpec::linear(), std::span(fa), std::span(fb)) == 11.0);
  const std::vector<double> three{1, 2, 3};
  try {
    (void)kernel_eval(KernelSpec::linear(), std::span(a), std::span(three));
    FAIL("expected dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimension);
  }
}

TEST_CASE("kernel spec validation and scale presets") {
  CHECK_THROWS_AS(KernelSpec::polynomial(4).validate(), Error);
  CHECK_THROWS_AS(KernelSpec::gaussian(0).validate(), Error);
  CHECK_THROWS_AS(KernelSpec::linear(1, -1).validate(), Error);
  CHECK_NOTHROW(KernelSpec::polynomial(3).validate());
  CHECK(kernel_scale_for(ScaleVariant::kMedium, 16) == 4.0);
  CHECK(kernel_scale_for(ScaleVariant::kFine, 16) == 1.0);
  CHECK(kernel_scale_for(ScaleVariant::kCoarse, 16) == 16.0);
  CHECK(kernel_scale_for(ScaleVariant::kUnit, 1) == 1.0);
  CHECK(kernel_scale_for(ScaleVariant::kMedium, 550) == doctest::Approx(std::sqrt(550.0)));
}

TEST_CASE("kernel symmetry and Gaussian Gram PSD") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal(0, 2);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> pts(20, std::vector<double>(5));
    for (auto& p : pts) {
      for (auto& v : p) v = normal(gen);
    }
    for (const auto& spec : desk_kernels(1.0)) {
      Eigen::MatrixXd g(20, 20);
      bool exact = true;
      double gauss_asym = 0;
      for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
          g(i, j) = kernel_eval(spec, std::span(pts[i]), std::span(pts[j]));
          const double back = kernel_eval(spec, std::span(pts[j]), std::span(pts[i]));
          if (spec.kind == KernelKind::kGaussian) {
            gauss_asym = std::max(gauss_asym, std::abs(back - g(i, j)));
          } else if (back != g(i, j)) {
            exact = false;
          }
          CHECK(g(i, j) == doctest::Approx(ref_kernel(spec, pts[i], pts[j])).epsilon(1e-12));
        }
      }
      CHECK(exact);
      CHECK(gauss_asym <= 1e-12);
      if (spec.kind == KernelKind::kGaussian) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
      }
    }
  }
}

TEST_CASE("hand-solved two-point model") {
  const FeatureMatrix x(2, 2, {-1, 0, 1, 0});
  const std::vector<Label> y{Label::kHealthy, Label::kLateBlight};
  for (bool standardize : {false, true}) {
    TrainOptions o;
    o.standardize = standardize;
    TrainDiagnostics d;
    const auto model = train(x, y, KernelSpec::linear(1, 10), o, &d);
    CHECK(d.alphas[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(d.alphas[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(model.bias()) < 1e-6);
    CHECK(model.support_count() == 2);
    const std::vector<float> p{5, 0}, tie{0, 7};
    CHECK(model.predict(p).decision_value == doctest::Approx(5.0));
    CHECK(model.predict(p).label == Label::kLateBlight);
    CHECK(model.predict(tie).decision_value == 0.0);
    CHECK(model.predict(tie).label == Label::kLateBlight);
    CHECK(d.dual_objective == doctest::Approx(-0.5));
  }
}

TEST_CASE("SMO matches the exact QP on desk instances") {
  std::mt19937_64 gen(2024);
  int checked = 0;
  for (int n = 2; n <= 6; ++n) {
    for (double c : {0.1, 1.0, 10.0}) {
      for (const auto& spec : desk_kernels(c)) {
        const auto inst = random_instance(gen, n, spec);
        TrainDiagnostics d;
        (void)train(inst.matrix(), inst.labels(), spec, raw(), &d);
        const auto q = inst.q();
        const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(d.alphas.data(), n);
        const double smo = dual_objective(q, a);
        CHECK(smo == doctest::Approx(d.dual_objective).epsilon(1e-9));
        CHECK(std::abs(smo - active_set_oracle(q, inst.y, c)) <= 1e-3);
        CHECK(d.kkt_gap <= 2 * 1e-3);
        ++checked;
      }
    }
  }
  CHECK(checked == 90);
}

TEST_CASE("SMO matches a literal 1e-3 grid on up to three points") {
  std::mt19937_64 gen(77);
  for (int n = 2; n <= 3; ++n) {
    for (const auto& spec : desk_kernels(1.0)) {
      const auto inst = random_instance(gen, n, spec);
      TrainDiagnostics d;
      (void)train(inst.matrix(), inst.labels(), spec, raw(), &d);
      CHECK(std::abs(d.dual_objective - grid_oracle(inst.q(), inst.y, 1.0, 1e-3)) <= 1e-3);
    }
  }
}

TEST_CASE("XOR with a Gaussian kernel") {
  Instance inst;
  inst.x = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  inst.y = {-1, -1, 1, 1};
  inst.spec = KernelSpec::gaussian(1, 100);
  TrainDiagnostics d;
  const auto model = train(inst.matrix(), inst.labels(), inst.spec, raw(1e-6), &d);
  CHECK(d.dual_objective == doctest::Approx(active_set_oracle(inst.q(), inst.y, 100)).epsilon(1e-6));
  for (std::size_t i = 0; i < 4; ++i) CHECK(model_decision(model, inst.x[i]) * inst.y[i] > 0);
}

TEST_CASE("dual feasibility and margin conditions") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 6; ++trial) {
    auto ds = fixtures::planted_shift(40, 30, 4, 2, trial < 3 ? 0.6f : 3.0f, 100 + trial);
    const double c = trial % 2 ? 1.0 : 50.0;
    const auto spec = trial % 3 == 0 ? KernelSpec::linear(1, c) : KernelSpec::gaussian(2, c);
    TrainDiagnostics d;
    TrainOptions o;
    o.tol = 1e-4;
    const auto model = train(ds, spec, o, &d);
    double eq = 0;
    bool boxed = true;
    for (std::size_t i = 0; i < d.alphas.size(); ++i) {
      boxed = boxed && d.alphas[i] >= 0 && d.alphas[i] <= c;
      eq += d.alphas[i] * sign_of(ds.labels[i]);
    }
    CHECK(boxed);
    CHECK(std::abs(eq) <= 1e-6 * c * d.alphas.size());
    CHECK(d.kkt_gap <= 2 * o.tol);
    for (double coef : model.dual_coefs()) CHECK(std::abs(coef) <= c);
    double worst = 0;
    for (std::size_t i = 0; i < d.alphas.size(); ++i) {
      if (d.alphas[i] > 1e-6 && d.alphas[i] < c - 1e-6) {
        const double yf = sign_of(ds.labels[i]) * model.decision_value(ds.features.row(i));
        worst = std::max(worst, std::abs(yf - 1.0));
      }
    }
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("hard margin support vectors sit on the margin") {
  auto ds = fixtures::planted_shift(25, 25, 3, 3, 4.0f, 9);
  TrainOptions o;
  o.tol = 1e-6;
  TrainDiagnostics d;
  const auto model = train(ds, KernelSpec::linear(1, 1e4), o, &d);
  std::size_t correct = 0;
  double worst = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto p = model.predict(ds.features.row(i));
    correct += p.label == ds.labels[i];
    if (d.alphas[i] > 1e-8 && d.alphas[i] < 1e4 - 1e-6) worst = std::max(worst, std::abs(std::abs(p.decision_value) - 1));
  }
  CHECK(correct == ds.size());
  CHECK(worst <= 1e-4);
}

TEST_CASE("degenerate fine Gaussian predicts the majority class") {
  auto ds = fixtures::planted_shift(30, 20, 10, 10, 2.0f, 3);
  TrainDiagnostics d;
  TrainOptions o;
  o.tol = 1e-8;
  const auto model = train(ds, KernelSpec::gaussian(1e-2, 1.0), o, &d);
  // Near-identity Gram: minority multipliers hit C, majority share the balance.
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double expected = ds.labels[i] == Label::kHealthy ? 1.0 : 20.0 / 30.0;
    CHECK(d.alphas[i] == doctest::Approx(expected).epsilon(1e-6));
  }
  CHECK(model.bias() == doctest::Approx(1.0 - 20.0 / 30.0).epsilon(1e-6));
  const auto fresh = fixtures::planted_shift(15, 15, 10, 10, 2.0f, 99);
  for (std::size_t i = 0; i < fresh.size(); ++i) CHECK(model.predict(fresh.features.row(i)).label == Label::kLateBlight);
}

TEST_CASE("training errors") {
  const FeatureMatrix x(3, 1, {1, 2, 3});
  const std::vector<Label> same(3, Label::kLateBlight);
  try {
    (void)train(x, same, KernelSpec::linear());
    FAIL("expected training error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTraining);
  }
  auto ds = fixtures::noise(60, 60, 5, 1);
  TrainOptions o;
  o.max_passes = 1;
  o.tol = 1e-9;
  try {
    (void)train(ds, KernelSpec::gaussian(0.5, 1000), o);
    FAIL("expected convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.code() == ErrorCode::kConvergence);
    CHECK(e.kkt_gap() > 2e-9);
  }
  const auto model = train(fixtures::planted_shift(5, 5, 3, 1, 2, 1), KernelSpec::linear());
  const std::vector<float> short_row{1, 2};
  CHECK_THROWS_AS((void)model.predict(short_row), Error);
}

TEST_CASE("cache size and repetition do not change the model") {
  auto ds = fixtures::planted_shift(40, 35, 6, 2, 1.0f, 12);
  TrainOptions small;
  small.cache_rows = 2;
  const auto a = train(ds, KernelSpec::polynomial(2, 2.0));
  const auto b = train(ds, KernelSpec::polynomial(2, 2.0), small);
  const auto c = train(ds, KernelSpec::polynomial(2, 2.0));
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("model serialization is bit-exact") {
  fixtures::TempDir dir("svm");
  auto ds = fixtures::planted_shift(20, 20, 4, 2, 1.0f, 5);
  for (const auto& spec : desk_kernels(1.0)) {
    for (bool standardize : {true, false}) {
      TrainOptions o;
      o.standardize = standardize;
      const auto model = train(ds, spec, o);
      const auto bytes = encode_model(model);
      const auto back = decode_model(bytes);
      CHECK(back == model);
      CHECK(encode_model(back) == bytes);
      save_model(dir / "m.bin", model);
      CHECK(load_model(dir / "m.bin") == model);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.decision_value(ds.features.row(i)) == model.decision_value(ds.features.row(i)));
      }
      CHECK_THROWS_AS((void)decode_model(std::span(bytes).first(bytes.size() - 3)), blight::FormatError);
      auto bad = bytes;
      bad[0] = 'X';
      CHECK_THROWS_AS((void)decode_model(bad), blight::FormatError);
    }
  }
}
