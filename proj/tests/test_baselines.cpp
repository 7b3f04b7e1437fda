#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "robustopt/baselines.hpp"
#include "robustopt/task_oracles.hpp"

using namespace robustopt;

namespace {

StreamSpec mean_spec(std::size_t d, double eta, std::uint64_t seed) {
  StreamSpec spec;
  spec.task = Task::mean;
  spec.dimension = d;
  spec.eta = eta;
  spec.seed = seed;
  return spec;
}

StreamSpec regression_spec(Task task, std::size_t d, double eta, std::uint64_t seed) {
  StreamSpec spec;
  spec.task = task;
  spec.dimension = d;
  spec.eta = eta;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("block buffer emits the mean of every full block", "[baselines]") {
  BlockBuffer buffer(3);
  CHECK_FALSE(buffer.feed(Vec{1.0, 0.0}).has_value());
  CHECK(buffer.pending() == 1);
  CHECK_FALSE(buffer.feed(Vec{2.0, 3.0}).has_value());
  const auto first = buffer.feed(Vec{3.0, 3.0});
  REQUIRE(first.has_value());
  CHECK(*first == Vec{2.0, 2.0});
  CHECK(buffer.pending() == 0);

  CHECK_FALSE(buffer.feed(Vec{4.0, 0.0}).has_value());
  CHECK_FALSE(buffer.feed(Vec{5.0, 0.0}).has_value());
  const auto second = buffer.feed(Vec{6.0, 0.0});
  REQUIRE(second.has_value());
  CHECK(*second == Vec{5.0, 0.0});

  CHECK_THROWS_AS(BlockBuffer(0), std::invalid_argument);
}

TEST_CASE("geometric step moves along the unit direction to the block mean", "[baselines]") {
  const Vec theta{0.0, 0.0};
  const Vec block_mean{3.0, 4.0};
  const double beta = 0.1;
  const std::size_t block = 10;
  const Vec next = gmom_step(theta, block_mean, beta, block);
  // Step length beta * block * sqrt(d) toward the mean: unit is (0.6, 0.8).
  const double len = beta * 10.0 * std::sqrt(2.0);
  CHECK(next[0] == Catch::Approx(0.6 * len).epsilon(1e-15));
  CHECK(next[1] == Catch::Approx(0.8 * len).epsilon(1e-15));
  CHECK(norm2(sub(next, theta)) == Catch::Approx(len).epsilon(1e-15));

  // Already at the mean: no movement.
  CHECK(gmom_step(block_mean, block_mean, beta, block) == block_mean);
}

TEST_CASE("coordinatewise step moves by the sign pattern", "[baselines]") {
  const Vec theta{1.0, -2.0, 0.0};
  const Vec block_mean{0.0, 0.0, 0.0};
  const Vec next = cmom_step(theta, block_mean, 0.1, 10);
  // theta - mean = (1, -2, 0): signs (1, -1, 0), scaled by beta * block = 1.
  CHECK(next == Vec{0.0, -1.0, 0.0});
}

TEST_CASE("median-of-means descent approaches the stream mean", "[baselines]") {
  const MeanStream stream(mean_spec(4, 0.04, 51));
  for (MomVariant variant : {MomVariant::geometric, MomVariant::coordinatewise}) {
    Rng rng(52);
    RunOptions opts;
    opts.record_stride = 100;
    const double beta = variant == MomVariant::geometric ? 2e-4 : 2e-4;
    const RunRecord rec = run_mom(stream, variant, beta, 10, zeros(4), 20000, rng, opts);
    CHECK(rec.steps == 20000);
    CHECK(rec.updates == 2000);
    CHECK(rec.points.back().t == 19999);
    // Normalized steps settle in a noise-dominated ball around the mean, well
    // inside the starting distance of 2.
    CHECK(rec.final_error() < 1.5);
  }
}

TEST_CASE("without noise the descent reaches the mean up to one step", "[baselines]") {
  StreamSpec spec = mean_spec(4, 0.0, 55);
  spec.disable_noise = true;
  const MeanStream stream(spec);
  for (MomVariant variant : {MomVariant::geometric, MomVariant::coordinatewise}) {
    Rng rng(56);
    const double beta = 1e-3;
    const RunRecord rec = run_mom(stream, variant, beta, 10, zeros(4), 20000, rng);
    CHECK(rec.final_error() <= beta * 10.0 * 2.0 + 1e-12);
  }
}

TEST_CASE("with unit blocks the geometric variant is normalized descent", "[baselines]") {
  const MeanStream stream(mean_spec(3, 0.0, 53));
  Rng rng(54);
  const double beta = 0.01;
  const RunRecord rec = run_mom(stream, MomVariant::geometric, beta, 1, zeros(3), 200, rng);

  Rng hand(54);
  Vec theta = zeros(3);
  for (int t = 0; t < 200; ++t) {
    const Vec x = stream.draw(hand).x;
    const Vec diff = sub(theta, x);
    const double len = norm2(diff);
    if (len > 0.0) axpy(theta, -beta * std::sqrt(3.0) / len, diff);
  }
  // Same draws, same geometry: each update moves beta * sqrt(d) along the
  // unit direction from the current point to the newest sample.
  CHECK(distance(rec.final_theta, theta) < 1e-12);
}

TEST_CASE("run_mom is deterministic and rejects bad layouts", "[baselines]") {
  const MeanStream stream(mean_spec(3, 0.1, 55));
  Rng a(1), b(1);
  const RunRecord ra = run_mom(stream, MomVariant::coordinatewise, 1e-3, 10, zeros(3), 1000, a);
  const RunRecord rb = run_mom(stream, MomVariant::coordinatewise, 1e-3, 10, zeros(3), 1000, b);
  CHECK(ra.final_theta == rb.final_theta);
  CHECK(ra.corrupt_samples == rb.corrupt_samples);

  Rng c(1);
  CHECK_THROWS_AS(run_mom(stream, MomVariant::geometric, 1e-3, 10, zeros(2), 100, c),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_mom(stream, MomVariant::geometric, 1e-3, 10, zeros(3), 0, c),
                  std::invalid_argument);
}

TEST_CASE("constant clip threshold follows the scale rule", "[baselines]") {
  ConstantClipConfig config;
  CHECK(config.threshold(5.0, 128) == Catch::Approx(56.568542494923804).epsilon(1e-15));
  config.lambda = 0.8;
  CHECK(config.threshold(5.0, 128) == Catch::Approx(0.8 * 56.568542494923804).epsilon(1e-15));
  config.lambda = 1.2;
  CHECK(config.threshold(2.0, 16) == Catch::Approx(1.2 * 2.0 * 4.0).epsilon(1e-15));
  config.lambda = 0.0;
  CHECK_THROWS_AS(config.threshold(5.0, 128), std::invalid_argument);
}

TEST_CASE("the candidate grid spans half-decades", "[baselines]") {
  const auto grid = HuberTuneConfig::default_candidates();
  REQUIRE(grid.size() == 10);
  CHECK(grid.front() == Catch::Approx(1e-5).epsilon(1e-12));
  CHECK(grid[2] == Catch::Approx(1e-4).epsilon(1e-12));
  CHECK(grid.back() == Catch::Approx(std::pow(10.0, -0.5)).epsilon(1e-12));
  for (std::size_t j = 1; j < grid.size(); ++j) {
    CHECK(grid[j] / grid[j - 1] == Catch::Approx(std::sqrt(10.0)).epsilon(1e-12));
  }
}

TEST_CASE("the tuner picks the argmin of the average final error", "[baselines]") {
  HuberTuneConfig tune;
  tune.candidates = {1e-4, 1e-2, 1.0};
  tune.estimators_per_candidate = 6;
  tune.samples_per_estimator = 150;
  const StreamSpec spec = regression_spec(Task::linreg, 4, 0.05, 60);
  const HuberTuneResult result = tune_huber_delta_detailed(spec, tune, 1e-2, 61);
  REQUIRE(result.average_errors.size() == 3);
  std::size_t argmin = 0;
  for (std::size_t j = 1; j < 3; ++j) {
    if (result.average_errors[j] < result.average_errors[argmin]) argmin = j;
  }
  CHECK(result.selected_index == argmin);
  CHECK(result.selected_delta == tune.candidates[argmin]);
  for (double e : result.average_errors) CHECK(std::isfinite(e));

  // Same protocol, same seed: identical table.
  const HuberTuneResult again = tune_huber_delta_detailed(spec, tune, 1e-2, 61);
  CHECK(again.average_errors == result.average_errors);
  CHECK(tune_huber_delta(spec, tune, 1e-2, 61) == result.selected_delta);
}

TEST_CASE("the tuner works on the classification task too", "[baselines]") {
  HuberTuneConfig tune;
  tune.candidates = {0.5, 1.0, 2.0};
  tune.estimators_per_candidate = 4;
  tune.samples_per_estimator = 120;
  const StreamSpec spec = regression_spec(Task::logreg, 3, 0.05, 62);
  const HuberTuneResult result = tune_huber_delta_detailed(spec, tune, 6e-3, 63);
  REQUIRE(result.average_errors.size() == 3);
  for (double e : result.average_errors) CHECK(std::isfinite(e));
  CHECK(result.selected_delta == tune.candidates[result.selected_index]);

  const StreamSpec bad = mean_spec(3, 0.05, 62);
  CHECK_THROWS_AS(tune_huber_delta_detailed(bad, tune, 6e-3, 63), std::invalid_argument);
}
