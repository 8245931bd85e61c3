#include "doctest.h"
#include "kpstorm/error.hpp"
#include "kpstorm/fusion.hpp"
#include "unit/support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

using namespace kpstorm;

namespace {

const Timestamp kStart = Timestamp::from_civil(2021, 1, 1);

// Every value encodes its quantity and time so feature placement can be
// checked exactly: solar q at step i is 1000*q + i, dst at hour h is -h,
// kp at slot s is (s % 10) * 0.9.
SourceSeries encoded_sources(int hours) {
  SourceSeries s;
  const int steps = hours * 12;
  for (std::size_t q = 0; q < 7; ++q) {
    std::vector<Reading> v;
    for (int i = 0; i < steps; ++i) v.push_back(1000.0 * static_cast<double>(q) + i);
    s.solar[q] = MeasurementSeries(std::string(kSolarFields[q]), 5, kStart, v);
  }
  std::vector<Reading> dst, kp;
  for (int h = 0; h < hours; ++h) dst.push_back(-static_cast<double>(h));
  for (int k = 0; k < hours / 3; ++k) kp.push_back((k % 10) * 0.9);
  s.dst = MeasurementSeries("dst", 60, kStart, dst);
  s.kp = MeasurementSeries("kp", 180, kStart, kp);
  return s;
}

const LagSpec kToySpec{10, 5, 1, 3, 3};

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("feature counts follow the lag arithmetic") {
  CHECK(kToySpec.feature_count() == 16);
  CHECK(kToySpec.feature_names().size() == 16);
  const LagSpec def;
  CHECK(def.feature_count() == 767);
  const auto names = def.feature_names();
  REQUIRE(names.size() == 767);
  CHECK(names.front() == "fma_m0");
  CHECK(names[3] == "fma_m15");
  CHECK(names[107] == "fma_m535");
  CHECK(names[108] == "bx_m0");
  CHECK(names[756] == "dst_m0");
  CHECK(names[757] == "dst_m60");
  CHECK(names[759] == "kp_m0");
  CHECK(names[760] == "kp_m180");
  CHECK(names.back() == "kp_m1260");
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
}

TEST_CASE("LagSpec validation") {
  CHECK_THROWS_AS((LagSpec{540, 7, 3, 24, 3}.validate()), Error);
  CHECK_THROWS_AS((LagSpec{542, 5, 3, 24, 3}.validate()), Error);
  CHECK_THROWS_AS((LagSpec{540, 5, 0, 24, 3}.validate()), Error);
  CHECK_THROWS_AS((LagSpec{540, 5, 3, 20, 3}.validate()), Error);
  CHECK_THROWS_AS((LagSpec{540, 5, 3, 24, 4}.validate()), Error);
  CHECK_NOTHROW(LagSpec{}.validate());
}

TEST_CASE("fuse places every lag at its documented column") {
  const auto sources = encoded_sources(48);
  const auto data = fuse(sources, kToySpec);
  REQUIRE(data.n_features() == 16);
  // Grid instants with a target 3 h later: slots 0..14 of 16. The toy spec
  // needs 5 min of solar history, so slot 0 is dropped.
  CHECK(data.n_rows() == 14);
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const Timestamp t = data.row_times()[r];
    CHECK(t.aligned_to(180));
    const auto step = static_cast<double>((t - kStart) / 5);
    for (std::size_t q = 0; q < 7; ++q) {
      CHECK(data.at(r, 2 * q) == 1000.0 * static_cast<double>(q) + step);
      CHECK(data.at(r, 2 * q + 1) == 1000.0 * static_cast<double>(q) + step - 1);
    }
    CHECK(data.at(r, 14) == -static_cast<double>((t - kStart) / 60));
    const auto slot = (t - kStart) / 180;
    CHECK(data.at(r, 15) == (slot % 10) * 0.9);
    CHECK(data.targets()[r] == ((slot + 1) % 10) * 0.9);
  }
  CHECK(data.feature_names()[1] == "fma_m5");
  CHECK(data.feature_names()[14] == "dst_m0");
  CHECK(data.feature_names()[15] == "kp_m0");
}

TEST_CASE("default spec yields 767 features") {
  const auto data = fuse(encoded_sources(24 * 5), LagSpec{});
  CHECK(data.n_features() == 767);
  for (std::size_t r = 0; r < data.n_rows(); ++r) CHECK(data.row(r).size() == 767);
}

TEST_CASE("a gap inside the window suppresses the row") {
  auto sources = encoded_sources(48);
  const Timestamp t = kStart + 12 * 60;
  auto values = sources.solar[4].values();
  values[static_cast<std::size_t>((t - 5 - kStart) / 5)] = std::nullopt;
  sources.solar[4] = MeasurementSeries("speed", 5, kStart, values);
  const auto data = fuse(sources, kToySpec);
  CHECK(data.n_rows() == 13);
  for (auto rt : data.row_times()) CHECK(rt != t);

  // A gap just outside the window does not.
  auto far = encoded_sources(48);
  auto v2 = far.solar[4].values();
  v2[static_cast<std::size_t>((t - 10 - kStart) / 5)] = std::nullopt;
  far.solar[4] = MeasurementSeries("speed", 5, kStart, v2);
  CHECK(fuse(far, kToySpec).n_rows() == 14);
}

TEST_CASE("a missing target suppresses the row") {
  auto sources = encoded_sources(48);
  auto kp = sources.kp.values();
  kp[5] = std::nullopt;
  sources.kp = MeasurementSeries("kp", 180, kStart, kp);
  // Slot 5 loses its own row (its kp_m0 lag) and slot 4's target.
  CHECK(fuse(sources, kToySpec).n_rows() == 12);
}

TEST_CASE("fuse errors") {
  auto sources = encoded_sources(48);
  sources.dst = MeasurementSeries("dst", 30, kStart, {Reading{1.0}});
  CHECK(kind_of([&] { fuse(sources, kToySpec); }) == ErrorKind::kCadenceMismatch);
  CHECK(kind_of([&] { fuse(encoded_sources(3), kToySpec); }) == ErrorKind::kEmptyIntersection);
}

TEST_CASE("fuse is deterministic") {
  const auto a = fuse(encoded_sources(72), LagSpec{60, 10, 2, 6, 6});
  const auto b = fuse(encoded_sources(72), LagSpec{60, 10, 2, 6, 6});
  CHECK(a == b);
  CHECK(a.n_features() == LagSpec({60, 10, 2, 6, 6}).feature_count());
}

TEST_CASE("downsample_low_kp") {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 12; ++i) {
    x.push_back({static_cast<double>(i)});
    y.push_back(i == 3 || i == 8 ? 6.0 : 1.0);
  }
  const auto data = testing::make_dataset(x, y);
  SUBCASE("ceil(low / L) low rows survive, all high rows survive") {
    const auto out = downsample_low_kp(data, 2, 4.0, 99);
    CHECK(out.n_rows() == 7);
    CHECK(std::count(out.targets().begin(), out.targets().end(), 6.0) == 2);
    CHECK(std::is_sorted(out.row_times().begin(), out.row_times().end()));
  }
  SUBCASE("L = 1 is the identity") { CHECK(downsample_low_kp(data, 1, 4.0, 99) == data); }
  SUBCASE("deterministic per seed") {
    CHECK(downsample_low_kp(data, 3, 4.0, 5) == downsample_low_kp(data, 3, 4.0, 5));
  }
  SUBCASE("odd counts round up") { CHECK(downsample_low_kp(data, 3, 4.0, 1).n_rows() == 4 + 2); }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(downsample_low_kp(data, 0, 4.0, 1), Error);
    CHECK_THROWS_AS(downsample_low_kp(data, 2, 9.5, 1), Error);
  }
}

TEST_CASE("downsampling never drops a high row (property)") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back({rng.uniform()});
      y.push_back(9.0 * rng.uniform());
    }
    const auto data = testing::make_dataset(x, y);
    const int factor = 1 + static_cast<int>(rng.below(5));
    const double threshold = 9.0 * rng.uniform();
    const auto out = downsample_low_kp(data, factor, threshold, rng.next());
    std::set<Timestamp> kept(out.row_times().begin(), out.row_times().end());
    std::size_t low = 0, low_kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] > threshold) CHECK(kept.count(data.row_times()[i]) == 1);
      else {
        ++low;
        low_kept += kept.count(data.row_times()[i]);
      }
    }
    CHECK(low_kept == (low + static_cast<std::size_t>(factor) - 1) / static_cast<std::size_t>(factor));
  }
}

TEST_CASE("select_features") {
  const auto data = testing::make_dataset({{1, 2, 3}, {4, 5, 6}}, {1, 2});
  CHECK(select_features(data, FeatureSubset{{0, 1, 2}, {"x0", "x1", "x2"}}) == data);
  const auto two = select_features(data, FeatureSubset{{2, 0}, {"x2", "x0"}});
  CHECK(two.feature_names() == std::vector<std::string>{"x2", "x0"});
  CHECK(two.values() == std::vector<double>{3, 1, 6, 4});
  CHECK(two.targets() == data.targets());
  CHECK(two.row_times() == data.row_times());
  CHECK_THROWS_AS(select_features(data, FeatureSubset{{99}, {"?"}}), Error);
  const std::vector<std::string> by_name{"x1"};
  CHECK(select_features(data, by_name).values() == std::vector<double>{2, 5});
}

TEST_CASE("split_by_time") {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<Timestamp> times;
  std::vector<double> values;
  for (int day = 0; day < 365; day += 5) {
    values.push_back(day);
    y.push_back(1.0);
    times.push_back(Timestamp::from_civil(2021, 1, 1) + 1440 * day);
  }
  const FusedDataset data({"d"}, values, y, times);
  const auto cutoff = Timestamp::from_civil(2021, 10, 1);
  auto [train, test] = split_by_time(data, cutoff);
  CHECK(train.n_rows() + test.n_rows() == data.n_rows());
  for (auto t : train.row_times()) CHECK(t < cutoff);
  for (auto t : test.row_times()) CHECK(t >= cutoff);
  CHECK(train.row_times().back().to_string().substr(0, 7) == "2021-09");
  CHECK(test.row_times().front().to_string().substr(0, 7) == "2021-10");

  auto [none, all] = split_by_time(data, Timestamp::from_civil(2020, 1, 1));
  CHECK(none.empty());
  CHECK(all == data);
  auto [all2, none2] = split_by_time(data, Timestamp::from_civil(2022, 1, 1));
  CHECK(all2 == data);
  CHECK(none2.empty());
}

TEST_CASE("dataset CSV round trip is bit-exact") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = testing::random_matrix(rng, 25, 6, -1e6, 1e6);
    for (auto& row : x) row[0] = rng.gaussian() * 1e-300;
    std::vector<double> y;
    for (int i = 0; i < 25; ++i) y.push_back(9.0 * rng.uniform());
    const auto data = testing::make_dataset(x, y);
    const auto back = parse_dataset(format_dataset(data));
    REQUIRE(back.n_rows() == data.n_rows());
    CHECK(std::memcmp(back.values().data(), data.values().data(),
                      data.values().size() * sizeof(double)) == 0);
    CHECK(back == data);
  }
  CHECK_THROWS_AS(parse_dataset("a,b\n1,2\n"), Error);
  CHECK_THROWS_AS(parse_dataset("a,target,row_time\n1,2\n"), Error);
}

TEST_CASE("dataset invariants are enforced") {
  CHECK_THROWS_AS(testing::make_dataset({{1.0}}, {9.5}), Error);
  CHECK_THROWS_AS(FusedDataset({"a", "b"}, {1.0}, {1.0}, {kStart}), Error);
  CHECK_THROWS_AS(testing::make_dataset({{std::nan("")}}, {1.0}), Error);
}
