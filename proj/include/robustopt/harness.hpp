#pragma once

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "robustopt/baselines.hpp"
#include "robustopt/diagnostics.hpp"
#include "robustopt/record.hpp"
#include "robustopt/runner.hpp"
#include "robustopt/task_oracles.hpp"

namespace robustopt {

enum class Method {
  rqc_sgd,
  gmom,
  cmom,
  constant_clip,
  huber,
  modified_huber,
  cycling_aggregate,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::rqc_sgd: return "rqc_sgd";
    case Method::gmom: return "gmom";
    case Method::cmom: return "cmom";
    case Method::constant_clip: return "constant_clip";
    case Method::huber: return "huber";
    case Method::modified_huber: return "modified_huber";
    case Method::cycling_aggregate: return "cycling_aggregate";
  }
  throw std::invalid_argument("unknown method");
}

inline Method method_from_name(const std::string& name) {
  if (name == "rqc_sgd") return Method::rqc_sgd;
  if (name == "gmom") return Method::gmom;
  if (name == "cmom") return Method::cmom;
  if (name == "constant_clip") return Method::constant_clip;
  if (name == "huber") return Method::huber;
  if (name == "modified_huber") return Method::modified_huber;
  if (name == "cycling_aggregate") return Method::cycling_aggregate;
  throw std::invalid_argument("unknown method: " + name);
}

//! Default step size per task.
inline double preset_step_size(Task task) {
  switch (task) {
    case Task::mean: return 1e-3;
    case Task::linreg: return 1e-3;
    case Task::logreg: return 6e-3;
  }
  throw std::invalid_argument("unknown task");
}

//! Default clip quantile per task and corruption level.
inline double preset_quantile(Task task, double eta) {
  switch (task) {
    case Task::mean: return 0.2;
    case Task::linreg: return eta >= 0.08 ? 0.05 : 0.1;
    case Task::logreg: return std::abs(eta - 0.02) < 1e-9 ? 1.0 - eta - 0.1 : 1.0 - eta - 0.05;
  }
  throw std::invalid_argument("unknown task");
}

inline ClipConfig preset_clip(Task task, double eta) {
  return ClipConfig{preset_step_size(task), preset_quantile(task, eta), 100, 10.0};
}

//! Full description of one benchmark experiment: a method on a stream.
struct ExperimentConfig {
  std::string name = "run";
  Task task = Task::mean;
  Method method = Method::rqc_sgd;
  StreamSpec stream;
  bool stream_seed_explicit = false;
  ClipConfig clip;
  double clip_lambda = 1.0;       // constant_clip
  double huber_delta = 1.0;       // huber / modified_huber loss scale
  std::size_t block_size = 10;    // gmom / cmom
  std::size_t num_iterates = 16;  // cycling_aggregate
  HuberTuneConfig tune;           // tune-huber protocol parameters
  std::size_t horizon = 10000;
  std::size_t num_runs = 1;
  std::size_t record_stride = 1;
  std::string output_path = "results.csv";
  std::uint64_t master_seed = 0;

  void validate() const {
    stream.validate();
    if (horizon == 0) throw std::invalid_argument("horizon must be positive");
    if (num_runs == 0) throw std::invalid_argument("num_runs must be positive");
    if (record_stride == 0) throw std::invalid_argument("record_stride must be positive");
    switch (method) {
      case Method::rqc_sgd:
      case Method::constant_clip: clip.validate(); break;
      case Method::cycling_aggregate:
        clip.validate();
        AggregationConfig{num_iterates, horizon}.validate();
        break;
      case Method::gmom:
      case Method::cmom:
        if (task != Task::mean) {
          throw std::invalid_argument("median-of-means baselines require the mean task");
        }
        if (block_size == 0) throw std::invalid_argument("block_size must be positive");
        break;
      case Method::huber:
        if (task != Task::linreg) throw std::invalid_argument("huber requires the linreg task");
        if (!(huber_delta > 0.0)) throw std::invalid_argument("huber_delta must be positive");
        break;
      case Method::modified_huber:
        if (task != Task::logreg) {
          throw std::invalid_argument("modified_huber requires the logreg task");
        }
        if (!(huber_delta > 0.0)) throw std::invalid_argument("huber_delta must be positive");
        break;
    }
    if (!(clip.step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  }

  std::uint64_t effective_stream_seed() const {
    return stream_seed_explicit ? stream.seed : Rng::split(master_seed, 0x5EED);
  }

  std::string summary() const {
    std::ostringstream os;
    os << "experiment=" << name << ";task=" << task_name(task) << ";method=" << method_name(method)
       << ";dimension=" << stream.dimension << ";eta=" << stream.eta << ";horizon=" << horizon
       << ";num_runs=" << num_runs << ";record_stride=" << record_stride
       << ";master_seed=" << master_seed << ";step_size=" << clip.step_size;
    switch (method) {
      case Method::rqc_sgd:
      case Method::cycling_aggregate:
        os << ";quantile_index=" << clip.quantile_index
           << ";buffer_capacity=" << clip.buffer_capacity
           << ";init_threshold=" << clip.init_threshold;
        if (method == Method::cycling_aggregate) os << ";num_iterates=" << num_iterates;
        break;
      case Method::constant_clip: os << ";clip_lambda=" << clip_lambda; break;
      case Method::gmom:
      case Method::cmom: os << ";block_size=" << block_size; break;
      case Method::huber:
      case Method::modified_huber: os << ";huber_delta=" << huber_delta; break;
    }
    return os.str();
  }
};

namespace detail {

inline std::size_t env_thread_cap() {
  const char* env = std::getenv("ROBUST_OPT_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (end == nullptr || *end != '\0' || v == 0) {
    throw std::invalid_argument("ROBUST_OPT_THREADS must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

inline std::size_t worker_count(std::size_t jobs, std::size_t max_threads) {
  std::size_t cap = max_threads;
  if (cap == 0) cap = env_thread_cap();
  if (cap == 0) cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::min(cap, jobs);
}

//! Run fn(0..n-1) on a small pool; results must be written to index-addressed slots.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (n == 0) return;
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/*!
 * Execute `config.num_runs` independent runs of the configured method. Run i
 * draws its randomness from a seed derived as split(master_seed, i), so the
 * result is a pure function of the config: the worker pool size (capped by
 * ROBUST_OPT_THREADS when `max_threads` is 0) never changes the records.
 */
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                             std::size_t max_threads = 0) {
  config.validate();
  StreamSpec spec = config.stream;
  spec.seed = config.effective_stream_seed();
  const std::string summary = config.summary();
  const Vec theta0 = zeros(spec.dimension);
  const ProjectionDomain domain = ProjectionDomain::unbounded();

  std::shared_ptr<const GradientOracle> oracle;
  std::shared_ptr<const MeanStream> mean_stream;
  switch (config.method) {
    case Method::gmom:
    case Method::cmom: mean_stream = std::make_shared<MeanStream>(spec); break;
    case Method::huber:
      oracle = std::make_shared<RegressionOracle>(std::make_shared<RegressionStream>(spec),
                                                  RegressionLoss::huber, config.huber_delta);
      break;
    case Method::modified_huber:
      oracle = std::make_shared<RegressionOracle>(std::make_shared<RegressionStream>(spec),
                                                  RegressionLoss::modified_huber,
                                                  config.huber_delta);
      break;
    default: oracle = make_task_oracle(spec); break;
  }

  std::vector<RunRecord> records(config.num_runs);
  const std::size_t threads = detail::worker_count(config.num_runs, max_threads);
  detail::parallel_for(config.num_runs, threads, [&](std::size_t i) {
    const std::uint64_t run_seed = Rng::split(config.master_seed, i);
    Rng rng(run_seed);
    RunOptions opts{config.record_stride, summary};
    RunRecord rec;
    switch (config.method) {
      case Method::rqc_sgd:
        rec = run_rqc_sgd(*oracle, config.clip, domain, theta0, config.horizon, rng, opts);
        break;
      case Method::gmom:
      case Method::cmom:
        rec = run_mom(*mean_stream,
                      config.method == Method::gmom ? MomVariant::geometric
                                                    : MomVariant::coordinatewise,
                      config.clip.step_size, config.block_size, theta0, config.horizon, rng, opts);
        break;
      case Method::constant_clip: {
        const double tau =
            ConstantClipConfig{config.clip_lambda}.threshold(spec.sigma_max, spec.dimension);
        rec = run_clipped_sgd(*oracle, tau, config.clip.step_size, domain, theta0, config.horizon,
                              rng, opts);
        break;
      }
      case Method::huber:
      case Method::modified_huber:
        rec = run_clipped_sgd(*oracle, std::numeric_limits<double>::infinity(),
                              config.clip.step_size, domain, theta0, config.horizon, rng, opts);
        break;
      case Method::cycling_aggregate:
        rec = cycling_aggregate_detailed(*oracle, config.clip,
                                         AggregationConfig{config.num_iterates, config.horizon},
                                         theta0, rng, opts)
                  .record;
        break;
    }
    rec.seed = run_seed;
    records[i] = std::move(rec);
  });
  return records;
}

struct SummaryRow {
  std::uint64_t t = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
};

/*!
 * Pointwise mean and sample standard deviation (n - 1 denominator; zero for a
 * single run) of the recorded error trajectories. All records must share one
 * recording grid.
 */
inline std::vector<SummaryRow> aggregate_runs(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no runs to aggregate");
  const std::size_t npoints = records[0].points.size();
  for (const RunRecord& r : records) {
    if (r.points.size() != npoints) throw std::invalid_argument("runs disagree on the recording grid");
    for (std::size_t k = 0; k < npoints; ++k) {
      if (r.points[k].t != records[0].points[k].t) {
        throw std::invalid_argument("runs disagree on the recording grid");
      }
    }
  }
  const auto n = static_cast<double>(records.size());
  std::vector<SummaryRow> rows(npoints);
  for (std::size_t k = 0; k < npoints; ++k) {
    double sum = 0.0;
    for (const RunRecord& r : records) sum += r.points[k].error;
    const double mean = sum / n;
    double ss = 0.0;
    for (const RunRecord& r : records) {
      const double d = r.points[k].error - mean;
      ss += d * d;
    }
    rows[k] = {records[0].points[k].t, mean, records.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
  }
  return rows;
}

//! One row of the benchmark CSV schema.
struct CsvRow {
  std::string experiment;
  std::string method;
  std::string task;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t t = 0;
  std::string metric;
  double value = 0.0;
  std::string diagnostic;  // written only when the file carries the extra column
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kCsvHeader = "experiment,method,task,eta,seed,t,metric,value";

/*!
 * Write rows in the fixed schema, LF line endings, doubles with 17
 * significant digits so that parsing them back is value-exact. With
 * `diagnostic_column`, a trailing `diagnostic` column is added.
 */
inline void emit_csv(const std::vector<CsvRow>& rows, const std::string& path,
                     bool diagnostic_column = false) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kCsvHeader;
  if (diagnostic_column) out << ",diagnostic";
  out << '\n';
  for (const CsvRow& r : rows) {
    out << r.experiment << ',' << r.method << ',' << r.task << ',' << detail::format_double(r.eta)
        << ',' << r.seed << ',' << r.t << ',' << r.metric << ','
        << detail::format_double(r.value);
    if (diagnostic_column) out << ',' << r.diagnostic;
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<CsvRow> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv: " + path);
  bool diagnostic_column = false;
  if (line == std::string(kCsvHeader) + ",diagnostic") {
    diagnostic_column = true;
  } else if (line != kCsvHeader) {
    throw std::invalid_argument("unexpected csv header in " + path);
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != (diagnostic_column ? 9u : 8u)) {
      throw std::invalid_argument("malformed csv row in " + path);
    }
    CsvRow r;
    r.experiment = fields[0];
    r.method = fields[1];
    r.task = fields[2];
    r.eta = std::strtod(fields[3].c_str(), nullptr);
    r.seed = std::strtoull(fields[4].c_str(), nullptr, 10);
    r.t = std::strtoull(fields[5].c_str(), nullptr, 10);
    r.metric = fields[6];
    r.value = std::strtod(fields[7].c_str(), nullptr);
    if (diagnostic_column) r.diagnostic = fields[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

enum class RowMetrics { error_only, full };

//! Expand run records into CSV rows: per recorded point, one row per metric.
inline std::vector<CsvRow> records_to_rows(const ExperimentConfig& config,
                                           const std::vector<RunRecord>& records,
                                           RowMetrics metrics = RowMetrics::full) {
  std::vector<CsvRow> rows;
  const std::string method = method_name(config.method);
  const std::string task = task_name(config.task);
  for (const RunRecord& rec : records) {
    for (const RecordedPoint& p : rec.points) {
      rows.push_back({config.name, method, task, config.stream.eta, rec.seed, p.t, "error",
                      p.error, {}});
      if (metrics == RowMetrics::full) {
        rows.push_back({config.name, method, task, config.stream.eta, rec.seed, p.t, "threshold",
                        p.threshold, {}});
        rows.push_back({config.name, method, task, config.stream.eta, rec.seed, p.t, "clipped",
                        p.clipped ? 1.0 : 0.0, {}});
      }
    }
  }
  return rows;
}

inline std::vector<CsvRow> summary_to_rows(const ExperimentConfig& config,
                                           const std::vector<SummaryRow>& summary) {
  std::vector<CsvRow> rows;
  const std::string method = method_name(config.method);
  const std::string task = task_name(config.task);
  for (const SummaryRow& s : summary) {
    rows.push_back({config.name, method, task, config.stream.eta, config.master_seed, s.t,
                    "mean_error", s.mean_error, {}});
    rows.push_back({config.name, method, task, config.stream.eta, config.master_seed, s.t,
                    "std_error", s.std_error, {}});
  }
  return rows;
}

//! Flat `key = value` configuration text: comments with '#', unknown keys rejected.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str(), path);
  }

  static KeyValueConfig from_text(const std::string& text, const std::string& origin = "<text>") {
    KeyValueConfig kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": expected `key = value`");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
      }
      if (kv.values_.count(key) != 0) {
        throw std::invalid_argument(origin + ": duplicate key: " + key);
      }
      kv.values_[key] = value;
    }
    return kv;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(it->first);
    return it->second;
  }

  std::string require_string(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument(origin_ + ": missing key: " + key);
    consumed_.insert(it->first);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) {
    return has(key) ? parse_double(key, require_string(key)) : fallback;
  }

  double require_double(const std::string& key) { return parse_double(key, require_string(key)); }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    return has(key) ? parse_u64(key, require_string(key)) : fallback;
  }

  std::uint64_t require_u64(const std::string& key) { return parse_u64(key, require_string(key)); }

  std::vector<double> get_double_list(const std::string& key) {
    std::vector<double> out;
    std::string v = require_string(key);
    std::size_t start = 0;
    while (start <= v.size()) {
      std::size_t comma = v.find(',', start);
      if (comma == std::string::npos) comma = v.size();
      const std::string item = trim(v.substr(start, comma - start));
      if (!item.empty()) out.push_back(parse_double(key, item));
      start = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument(origin_ + ": empty list for key: " + key);
    return out;
  }

  //! Throws if any key was never consumed by a getter.
  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (consumed_.count(key) == 0) {
        throw std::invalid_argument(origin_ + ": unknown key: " + key);
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  double parse_double(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
      throw std::invalid_argument(origin_ + ": key " + key + ": not a number: " + v);
    }
    return x;
  }

  std::uint64_t parse_u64(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos) {
      throw std::invalid_argument(origin_ + ": key " + key + ": not a nonnegative integer: " + v);
    }
    return x;
  }

  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

//! Build an ExperimentConfig from flat key-value text.
inline ExperimentConfig parse_experiment_config(KeyValueConfig& kv) {
  ExperimentConfig c;
  c.task = task_from_name(kv.require_string("task"));
  c.method = method_from_name(kv.require_string("method"));
  c.name = kv.get_string("experiment", "run");
  c.stream.task = c.task;
  c.stream.dimension = static_cast<std::size_t>(kv.require_u64("dimension"));
  c.stream.eta = kv.require_double("eta");
  c.stream.sigma_min = kv.get_double("sigma_min", 1.0);
  c.stream.sigma_max = kv.get_double("sigma_max", 5.0);
  if (kv.has("stream_seed")) {
    c.stream.seed = kv.require_u64("stream_seed");
    c.stream_seed_explicit = true;
  }
  c.horizon = static_cast<std::size_t>(kv.get_u64("horizon", c.horizon));
  c.num_runs = static_cast<std::size_t>(kv.get_u64("num_runs", 1));
  c.record_stride = static_cast<std::size_t>(kv.get_u64("record_stride", 1));
  c.output_path = kv.get_string("output", "results.csv");
  c.master_seed = kv.get_u64("master_seed", 0);
  c.clip.step_size = kv.get_double("step_size", preset_step_size(c.task));
  c.clip.quantile_index = kv.get_double("quantile_index", preset_quantile(c.task, c.stream.eta));
  c.clip.buffer_capacity = static_cast<std::size_t>(kv.get_u64("buffer_capacity", 100));
  c.clip.init_threshold = kv.get_double("init_threshold", 10.0);
  c.clip_lambda = kv.get_double("clip_lambda", 1.0);
  c.huber_delta = kv.get_double("huber_delta", 1.0);
  c.block_size = static_cast<std::size_t>(kv.get_u64("block_size", 10));
  c.num_iterates = static_cast<std::size_t>(kv.get_u64("num_iterates", 16));
  c.tune.estimators_per_candidate =
      static_cast<std::size_t>(kv.get_u64("tune_estimators", c.tune.estimators_per_candidate));
  c.tune.samples_per_estimator =
      static_cast<std::size_t>(kv.get_u64("tune_samples", c.tune.samples_per_estimator));
  return c;
}

inline ExperimentConfig parse_experiment_config_file(const std::string& path) {
  KeyValueConfig kv = KeyValueConfig::from_file(path);
  ExperimentConfig c = parse_experiment_config(kv);
  kv.reject_unknown();
  c.validate();
  return c;
}

}  // namespace robustopt
