#include "oreyolo/flops.hpp"

namespace oreyolo {

namespace {
thread_local FlopCounter* active_counter = nullptr;
}

FlopCounter::FlopCounter() : previous_(active_counter) { active_counter = this; }

FlopCounter::~FlopCounter() { active_counter = previous_; }

void FlopCounter::add(std::int64_t macs) {
  if (active_counter != nullptr) {
    active_counter->macs_ += macs;
  }
}

}  // namespace oreyolo
