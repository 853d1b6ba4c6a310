#ifndef CPL_CLI_RUNNER_HPP
#define CPL_CLI_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cpl/centralized.hpp"
#include "cpl/cli/results.hpp"
#include "cpl/cli/scenario.hpp"
#include "cpl/personalized.hpp"
#include "cpl/rng.hpp"

namespace cpl::cli {

inline std::string run_id(const RunPoint& pt, SweepAxis axis, std::size_t trial) {
  std::string id = to_string(pt.algorithm);
  switch (axis) {
    case SweepAxis::K: id += "/k=" + std::to_string(pt.k); break;
    case SweepAxis::Epsilon: id += "/epsilon=" + format_double(pt.epsilon); break;
    case SweepAxis::Eta: id += "/eta=" + format_double(pt.eta.front()); break;
    case SweepAxis::None: break;
  }
  return id + "/trial=" + std::to_string(trial);
}

/// Executes one protocol run. Deterministic in (cfg, pt, seed) apart from wall_time_ms.
inline ResultRow run_point(const ScenarioConfig& cfg, const RunPoint& pt, std::uint64_t seed, std::string id) {
  const Constants c = resolve_constants(cfg);
  const Problem problem = build_problem(cfg, pt);
  const auto start = std::chrono::steady_clock::now();
  ResultRow row;
  row.run_id = std::move(id);
  row.algorithm = to_string(pt.algorithm);
  row.k = problem.k();
  row.d = problem.d();
  row.epsilon = pt.epsilon;
  row.delta = cfg.delta;
  row.eta_max = problem.eta_max();
  row.seed = seed;
  row.constants = c.provenance;
  if (is_centralized(pt.algorithm)) {
    const auto out = run_centralized(problem, centralized_config(c, pt.algorithm, pt.epsilon, cfg.delta), seed);
    row.samples_consumed = out.samples_consumed;
    row.samples_communicated = out.ledger.samples_sent;
    row.bits_communicated = out.ledger.bits_sent;
    row.rounds = out.rounds;
    row.success = true;  // the centralized loop always runs its t rounds
    row.max_player_clean_error = out.max_clean_error();
  } else {
    const auto out = run_personalized(problem, personalized_config(c, pt.algorithm, pt.epsilon, cfg.delta), seed);
    row.samples_consumed = out.samples_consumed;
    row.samples_communicated = out.ledger.samples_sent;
    row.bits_communicated = out.ledger.bits_sent;
    row.rounds = out.rounds;
    row.success = out.success;
    row.max_player_clean_error = out.max_clean_error();
  }
  row.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Runs `count` independent jobs on a small thread pool. The first exception
/// thrown by any job is rethrown after all threads join.
template <typename Job>
void parallel_for(std::size_t count, Job&& job, std::size_t threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Every sweep point times every trial. Trial i uses trial_seed(master, i)
/// at every sweep point, so points are compared on common randomness.
/// Rows come back in (point, trial) order regardless of scheduling.
inline std::vector<ResultRow> run_all(const ScenarioConfig& cfg, std::uint64_t master_seed, std::size_t threads = 0) {
  validate(cfg);
  const auto points = run_points(cfg);
  std::vector<ResultRow> rows(points.size() * cfg.trials);
  parallel_for(
      rows.size(),
      [&](std::size_t i) {
        const std::size_t p = i / cfg.trials, trial = i % cfg.trials;
        rows[i] = run_point(cfg, points[p], trial_seed(master_seed, trial), run_id(points[p], cfg.sweep_axis, trial));
      },
      threads);
  return rows;
}

}  // namespace cpl::cli

#endif
