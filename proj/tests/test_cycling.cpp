#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "robustopt/runner.hpp"
#include "robustopt/streams.hpp"
#include "robustopt/task_oracles.hpp"

using namespace robustopt;

namespace {

StreamSpec mean_spec(std::size_t d, double eta, std::uint64_t seed, bool quiet = false) {
  StreamSpec spec;
  spec.task = Task::mean;
  spec.dimension = d;
  spec.eta = eta;
  spec.seed = seed;
  spec.disable_noise = quiet;
  return spec;
}

ClipConfig small_clip() {
  ClipConfig config;
  config.step_size = 0.05;
  config.quantile_index = 0.2;
  config.buffer_capacity = 20;
  config.init_threshold = 10.0;
  return config;
}

}  // namespace

TEST_CASE("the selected point minimizes the middle sorted distance", "[cycling]") {
  const std::vector<Vec> iterates{{0.0}, {0.1}, {0.2}, {100.0}};
  // Scores (entry N/2 = 2 of each sorted distance row, self included):
  // 0 -> 0.2, 0.1 -> 0.1, 0.2 -> 0.2 (rows {0, .1, .2, 100} etc.), 100 -> 99.9.
  CHECK(select_min_median_distance(iterates) == 1);

  const std::vector<Vec> tied{{1.0, 0.0}, {1.0, 0.0}, {5.0, 5.0}, {1.0, 0.0}};
  CHECK(select_min_median_distance(tied) == 0);

  CHECK(select_min_median_distance({{3.0}}) == 0);
  CHECK_THROWS_AS(select_min_median_distance({}), std::invalid_argument);
}

TEST_CASE("layout parameters are validated", "[cycling]") {
  CHECK_NOTHROW(AggregationConfig{4, 100}.validate());
  CHECK_THROWS_AS((AggregationConfig{3, 99}.validate()), std::invalid_argument);   // odd
  CHECK_THROWS_AS((AggregationConfig{0, 100}.validate()), std::invalid_argument);  // too few
  CHECK_THROWS_AS((AggregationConfig{4, 2}.validate()), std::invalid_argument);    // N > T
  CHECK_THROWS_AS((AggregationConfig{4, 102}.validate()), std::invalid_argument);  // T % N != 0
}

TEST_CASE("iterates share the horizon round-robin", "[cycling]") {
  // Noise-free pull toward the mean: every iterate follows the same
  // contraction, so after T steps each has taken exactly T / N of them.
  const auto stream = std::make_shared<MeanStream>(mean_spec(4, 0.0, 31, true));
  const MeanEstimationOracle oracle(stream);
  ClipConfig config = small_clip();
  config.step_size = 0.1;

  Rng rng(5);
  const CyclingResult result =
      cycling_aggregate_detailed(oracle, config, AggregationConfig{4, 40}, zeros(4), rng);

  REQUIRE(result.final_iterates.size() == 4);
  const double gap = 2.0 * std::pow(0.9, 10.0);  // start gap sqrt(4), 10 updates each
  for (const Vec& theta : result.final_iterates) {
    CHECK(distance(theta, stream->mean()) == Catch::Approx(gap).epsilon(1e-12));
  }
  CHECK(result.chosen_index == 0);  // all equal, ties break low
  CHECK(result.aggregate == result.final_iterates[0]);
  CHECK(result.record.final_theta == result.aggregate);
  CHECK(result.record.steps == 40);
  CHECK(result.record.updates == 40);

  // Recorded error is the median across iterates, here common to all.
  for (const RecordedPoint& p : result.record.points) {
    const auto updates_done = [&](std::size_t iterate) {
      return p.t / 4 + (p.t % 4 >= iterate ? 1 : 0);
    };
    double errors[4];
    for (std::size_t i = 0; i < 4; ++i) {
      errors[i] = 2.0 * std::pow(0.9, static_cast<double>(updates_done(i)));
    }
    std::sort(errors, errors + 4);
    CHECK(p.error == Catch::Approx(0.5 * (errors[1] + errors[2])).epsilon(1e-12));
  }
}

TEST_CASE("aggregation is deterministic and clips within bounds", "[cycling]") {
  const auto stream = std::make_shared<MeanStream>(mean_spec(5, 0.08, 32));
  const MeanEstimationOracle oracle(stream);
  Rng a(6), b(6);
  const CyclingResult ra =
      cycling_aggregate_detailed(oracle, small_clip(), AggregationConfig{4, 2000}, zeros(5), a);
  const CyclingResult rb =
      cycling_aggregate_detailed(oracle, small_clip(), AggregationConfig{4, 2000}, zeros(5), b);
  CHECK(ra.aggregate == rb.aggregate);
  CHECK(ra.chosen_index == rb.chosen_index);
  CHECK(ra.record.clip_norm_violations == 0);
  CHECK(ra.record.displacement_violations == 0);
  CHECK(ra.record.corrupt_samples == rb.record.corrupt_samples);

  Rng c(6);
  const Vec direct =
      cycling_aggregate(oracle, small_clip(), AggregationConfig{4, 2000}, zeros(5), c);
  CHECK(direct == ra.aggregate);
}

TEST_CASE("cycling layout mismatches are rejected", "[cycling]") {
  const auto stream = std::make_shared<MeanStream>(mean_spec(3, 0.0, 33));
  const MeanEstimationOracle oracle(stream);
  Rng rng(1);
  CHECK_THROWS_AS(cycling_aggregate_detailed(oracle, small_clip(), AggregationConfig{6, 100},
                                             zeros(3), rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(cycling_aggregate_detailed(oracle, small_clip(), AggregationConfig{4, 100},
                                             zeros(2), rng),
                  std::invalid_argument);
}
