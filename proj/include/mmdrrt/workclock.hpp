#pragma once

// Deterministic planning clock.
//
// Anytime planners here are budgeted in *virtual* seconds derived from a work
// counter rather than from wall time, so a run is a pure function of its seed
// and benchmark records are byte-identical across machines and repetitions.
// One work unit corresponds to one composite-configuration collision
// evaluation, the dominant primitive of every planner in this library; the
// units-per-second constant was calibrated once against wall time on a
// commodity core and is pinned to keep recorded budgets meaningful.

#include <cstdint>

namespace mmdrrt {

inline constexpr double kWorkUnitsPerSecond = 10000.0;

class WorkClock {
  public:
    WorkClock() = default;

    void tick(std::uint64_t units = 1) { units_ += units; }

    std::uint64_t units() const { return units_; }

    double seconds() const { return static_cast<double>(units_) / kWorkUnitsPerSecond; }

    bool expired(double limit_seconds) const { return seconds() >= limit_seconds; }

  private:
    std::uint64_t units_ = 0;
};

}  // namespace mmdrrt
