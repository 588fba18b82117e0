#pragma once

#include <cstdint>

namespace oreyolo {

/// Accumulates multiply-accumulate counts for every convolution and
/// attention matrix product executed on the current thread while the
/// counter is alive. Activations and normalisation are not counted.
class FlopCounter {
 public:
  FlopCounter();
  ~FlopCounter();
  FlopCounter(const FlopCounter&) = delete;
  FlopCounter& operator=(const FlopCounter&) = delete;

  std::int64_t macs() const { return macs_; }
  /// 1 MAC = 2 FLOPs.
  double gflops() const { return 2.0 * static_cast<double>(macs_) / 1e9; }

  /// Adds to the innermost active counter; no-op when none is active.
  static void add(std::int64_t macs);

 private:
  std::int64_t macs_ = 0;
  FlopCounter* previous_ = nullptr;
};

}  // namespace oreyolo
