#include "peak/live.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>

namespace peak {

RawDataset run_live(const MonitorConfig& config, TelemetryBackend& backend, PodSource& pods,
                    const LiveRunOptions& options) {
  Monitor monitor(config, backend, pods);
  monitor.start();

  std::mutex state;
  std::mutex wake;
  std::condition_variable cv;
  bool done = false;
  std::exception_ptr failure;

  auto loop = [&](std::chrono::milliseconds period, auto&& step) {
    auto next = std::chrono::steady_clock::now() + period;
    std::unique_lock lock(wake);
    while (!cv.wait_until(lock, next, [&] { return done; })) {
      lock.unlock();
      try {
        std::lock_guard guard(state);
        step(backend.now());
      } catch (...) {
        std::lock_guard guard(state);
        if (!failure) failure = std::current_exception();
      }
      lock.lock();
      next += period;
    }
  };

  monitor.poll_pods(backend.now());
  std::thread sampler([&] {
    loop(config.rapl_interval, [&](Timestamp now) { monitor.tick(now); });
  });
  std::thread poller([&] {
    loop(config.poll_interval, [&](Timestamp now) { monitor.poll_pods(now); });
  });

  const auto began = std::chrono::steady_clock::now();
  while (true) {
    if (options.stop && options.stop->load()) break;
    {
      std::lock_guard guard(state);
      if (failure) break;
    }
    if (options.duration && std::chrono::steady_clock::now() - began >= *options.duration) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  {
    std::lock_guard lock(wake);
    done = true;
  }
  cv.notify_all();
  sampler.join();
  poller.join();

  std::lock_guard guard(state);
  if (failure) std::rethrow_exception(failure);
  return monitor.stop_and_collect(backend.now());
}

}  // namespace peak
