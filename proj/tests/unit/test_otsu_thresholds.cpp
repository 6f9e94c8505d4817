#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "oracles.hpp"
#include "rxsentinel/errors.hpp"
#include "rxsentinel/eval/otsu.hpp"
#include "rxsentinel/eval/thresholds.hpp"

using namespace rxsentinel;
using namespace rxsentinel::eval;
using orders::Department;
using orders::Label;

TEST_CASE("otsu: matches the exhaustive maximizer on random samples") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> v = oracle::random_otsu_sample(rng);
    INFO("trial " << trial << " n " << v.size());
    for (std::size_t bins : {256u, 16u}) {
      CHECK(otsu_threshold(v, bins) == oracle::brute_force_otsu(v, bins));
    }
  }
}

TEST_CASE("otsu: two clusters split strictly between them") {
  std::vector<double> v(50, 0.1);
  v.insert(v.end(), 50, 0.9);
  const double t = otsu_threshold(v);
  CHECK(t > 0.1);
  CHECK(t < 0.9);
  CHECK(t == oracle::brute_force_otsu(v, 256));
}

TEST_CASE("otsu: two distinct values give a threshold in (a, b]") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-10, 10);
    const double b = a + rng.uniform(1e-3, 10);
    std::vector<double> v(1 + rng.below(20), a);
    v.insert(v.end(), 1 + rng.below(20), b);
    const double t = otsu_threshold(v);
    CHECK(t > a);
    CHECK(t <= b);
  }
}

TEST_CASE("otsu: result does not depend on input order") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v = oracle::random_otsu_sample(rng);
    const double t = otsu_threshold(v);
    rng.shuffle(std::span(v));
    CHECK(otsu_threshold(v) == t);
    std::reverse(v.begin(), v.end());
    CHECK(otsu_threshold(v) == t);
  }
}

TEST_CASE("otsu: degenerate and invalid inputs") {
  const std::vector<double> same(10, 3.0);
  CHECK_THROWS_AS(otsu_threshold(same), DegenerateError);
  CHECK_THROWS_AS(otsu_threshold(std::vector<double>{}), DegenerateError);
  CHECK_THROWS_AS(otsu_threshold(std::vector<double>{1.0, 2.0}, 1), ConfigError);
  CHECK_THROWS_AS(otsu_threshold(std::vector<double>{1.0, std::nan("")}), ConfigError);
  CHECK_THROWS_AS(otsu_threshold(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}),
                  ConfigError);
}

TEST_CASE("otsu: bins cover [lo, hi] with the maximum in the last bin") {
  CHECK(otsu_bin(0.0, 0.0, 1.0, 4) == 0);
  CHECK(otsu_bin(0.25, 0.0, 1.0, 4) == 1);
  CHECK(otsu_bin(0.999, 0.0, 1.0, 4) == 3);
  CHECK(otsu_bin(1.0, 0.0, 1.0, 4) == 3);
}

TEST_CASE("thresholds: nearest-rank quantile and trimming") {
  std::vector<double> v = {7, 1, 10, 3, 5, 2, 9, 4, 8, 6};
  CHECK(nearest_rank(v, 0.9) == 9.0);
  CHECK(nearest_rank(v, 0.5) == 5.0);
  CHECK(nearest_rank(v, 1.0) == 10.0);
  CHECK(nearest_rank(v, 0.01) == 1.0);
  const auto kept = trim_above_quantile(v, 0.9);
  CHECK(kept.size() == 9);
  CHECK(*std::max_element(kept.begin(), kept.end()) == 9.0);

  // Ties at the cut are kept.
  const std::vector<double> ties = {1, 2, 2, 2, 2};
  CHECK(trim_above_quantile(ties, 0.5).size() == 5);
}

TEST_CASE("thresholds: an extreme outlier is trimmed before Otsu") {
  Rng rng(7);
  std::vector<DepartmentScore> scores;
  std::vector<double> raw;
  for (int i = 0; i < 99; ++i) {
    const double s = rng.bernoulli(0.7) ? rng.uniform(0.05, 0.15) : rng.uniform(0.3, 0.45);
    scores.emplace_back(Department::surgery, s);
    raw.push_back(s);
  }
  std::vector<double> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  const double outlier = 100.0 * sorted[sorted.size() / 2];
  scores.emplace_back(Department::surgery, outlier);
  raw.push_back(outlier);

  const ThresholdSet t = calibrate_thresholds(scores);
  const auto* d = t.find(Department::surgery);
  REQUIRE(d != nullptr);
  CHECK(d->samples == 100);
  CHECK(d->kept == 90);
  CHECK(d->threshold == otsu_threshold(trim_above_quantile(raw, 0.9)));
  CHECK(otsu_threshold(raw) > d->threshold);
}

TEST_CASE("thresholds: departments calibrate independently") {
  Rng rng(8);
  std::vector<DepartmentScore> scores;
  for (int i = 0; i < 60; ++i) {
    scores.emplace_back(Department::nicu, rng.uniform(0.0, 1.0));
    scores.emplace_back(Department::oncology, rng.uniform(5.0, 6.0));
  }
  const ThresholdSet t = calibrate_thresholds(scores);
  CHECK(t.departments.size() == 2);
  CHECK(t.find(Department::nicu)->threshold < 1.0);
  CHECK(t.find(Department::oncology)->threshold > 5.0);
  REQUIRE(t.pooled.has_value());
  CHECK(std::isfinite(*t.pooled));

  // The same score lands in different classes across departments.
  CHECK(classify_profile(2.0, Department::nicu, t) == Label::atypical);
  CHECK(classify_profile(2.0, Department::oncology, t) == Label::typical);

  std::vector<DepartmentScore> single;
  for (int i = 0; i < 30; ++i) single.emplace_back(Department::picu, rng.uniform());
  const ThresholdSet s = calibrate_thresholds(single);
  CHECK(s.departments.size() == 1);
  CHECK(s.find(Department::picu) != nullptr);
  CHECK(s.warnings.empty());
}

TEST_CASE("thresholds: small departments are left out with a warning") {
  Rng rng(9);
  std::vector<DepartmentScore> scores;
  for (int i = 0; i < 19; ++i) scores.emplace_back(Department::nursery, rng.uniform());
  for (int i = 0; i < 20; ++i) scores.emplace_back(Department::obgyn, rng.uniform());
  for (int i = 0; i < 25; ++i) scores.emplace_back(Department::surgery, 0.5);
  const ThresholdSet t = calibrate_thresholds(scores);
  CHECK(t.find(Department::nursery) == nullptr);
  CHECK(t.find(Department::obgyn) != nullptr);
  CHECK(t.find(Department::surgery) == nullptr);
  REQUIRE(t.warnings.size() == 2);
  bool saw_nursery = false;
  for (const auto& w : t.warnings) {
    if (w.department == Department::nursery) {
      saw_nursery = true;
      CHECK(w.samples == 19);
    }
  }
  CHECK(saw_nursery);
}

TEST_CASE("thresholds: strict classification and fallback") {
  ThresholdSet t;
  t.departments[Department::surgery] = {0.4, 50, 45};
  CHECK(classify_profile(0.4, Department::surgery, t) == Label::typical);
  CHECK(classify_profile(std::nextafter(0.4, 1.0), Department::surgery, t) == Label::atypical);
  CHECK(classify_profile(0.1, Department::surgery, t) == Label::typical);
  CHECK_THROWS_AS(classify_profile(0.9, Department::nicu, t), ClassificationError);
  CHECK_THROWS_AS(classify_with_fallback(0.9, Department::nicu, t), ClassificationError);
  t.pooled = 0.8;
  CHECK(classify_with_fallback(0.9, Department::nicu, t) == Label::atypical);
  CHECK(classify_with_fallback(0.8, Department::nicu, t) == Label::typical);
  CHECK(classify_with_fallback(0.5, Department::surgery, t) == Label::atypical);
}

TEST_CASE("thresholds: JSON and file round trip") {
  Rng rng(10);
  std::vector<DepartmentScore> scores;
  for (int i = 0; i < 40; ++i) {
    scores.emplace_back(Department::general_ped, rng.uniform(0, 2));
    scores.emplace_back(Department::specialized_ped, rng.uniform(1, 3));
  }
  scores.emplace_back(Department::picu, 1.0);
  ThresholdSet t = calibrate_thresholds(scores);
  t.artifact_digest = "abc123";
  const ThresholdSet back = thresholds_from_json(thresholds_to_json(t));
  CHECK(back.departments.size() == t.departments.size());
  for (const auto& [dept, d] : t.departments) {
    REQUIRE(back.find(dept) != nullptr);
    CHECK(back.find(dept)->threshold == d.threshold);
    CHECK(back.find(dept)->samples == d.samples);
    CHECK(back.find(dept)->kept == d.kept);
  }
  CHECK(back.pooled == t.pooled);
  CHECK(back.warnings.size() == t.warnings.size());
  CHECK(back.trim_quantile == t.trim_quantile);
  CHECK(back.bins == t.bins);
  CHECK(back.artifact_digest == "abc123");

  const std::string dir = oracle::temp_dir("thresholds");
  const std::string path = dir + "/thresholds.json";
  write_thresholds_file(path, t);
  const ThresholdSet from_file = read_thresholds_file(path);
  CHECK(from_file.find(Department::general_ped)->threshold ==
        t.find(Department::general_ped)->threshold);
  std::filesystem::remove_all(dir);
}
