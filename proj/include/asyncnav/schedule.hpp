#pragma once

// Deterministic event-driven clock decoupling a low-frequency perception
// pipeline from a high-frequency control loop. Time is kept in integer
// nanoseconds so event ordering and recorded ages are exact; seconds are
// derived views.
//
// Tie order at equal timestamps: feature_ready < control_tick <
// measurement_due, so a frame completing exactly at a tick is usable by
// that tick. Each measurement's feature_ready is scheduled eagerly (its
// processing latency is sampled when the measurement is scheduled), which
// keeps the zero-latency synchronous case exact: the frame published at t
// is seen by the tick at t with age 0.

#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <vector>

#include "asyncnav/core.hpp"

namespace asyncnav {

inline constexpr double kNsPerSec = 1e9;

inline int64_t seconds_to_ns(double s) {
  return static_cast<int64_t>(std::llround(s * kNsPerSec));
}
inline double ns_to_seconds(int64_t ns) { return static_cast<double>(ns) * 1e-9; }

struct LatencyModel {
  // constant when lo == hi; uniform over [lo, hi] otherwise.
  double lo = 0.0;
  double hi = 0.0;

  static LatencyModel constant(double s) { return {s, s}; }
  static LatencyModel uniform(double lo_s, double hi_s) { return {lo_s, hi_s}; }

  bool valid() const { return lo >= 0.0 && hi >= lo; }

  int64_t sample_ns(Rng& rng) const {
    const int64_t lo_ns = seconds_to_ns(lo);
    const int64_t hi_ns = seconds_to_ns(hi);
    if (hi_ns <= lo_ns) return lo_ns;
    const double u = rng.uniform();
    return lo_ns + static_cast<int64_t>(u * static_cast<double>(hi_ns - lo_ns + 1));
  }
};

struct ScheduleConfig {
  double f_ctrl = 100.0;  // Hz
  double f_perc = 10.0;   // Hz
  LatencyModel proc_latency = LatencyModel::constant(0.05);
  uint64_t jitter_seed = 0;

  bool valid() const {
    return f_perc > 0.0 && f_ctrl >= f_perc && proc_latency.valid();
  }
  int64_t ctrl_period_ns() const { return seconds_to_ns(1.0 / f_ctrl); }
  int64_t perc_period_ns() const { return seconds_to_ns(1.0 / f_perc); }
};

inline double compute_aoi(double t_ctrl, double t_meas) {
  if (t_ctrl < t_meas) throw std::invalid_argument("compute_aoi: decision precedes measurement");
  return t_ctrl - t_meas;
}

// Latest-wins slot for perception payloads stamped with measurement time.
template <typename Payload>
class PerceptionChannel {
 public:
  // Overwrites older content; publishes staler than the current item are
  // discarded (out-of-order arrivals under jittery latency).
  bool publish(Payload feature, int64_t t_meas_ns) {
    if (valid_ && t_meas_ns < t_meas_ns_) return false;
    feature_ = std::move(feature);
    t_meas_ns_ = t_meas_ns;
    valid_ = true;
    return true;
  }

  bool valid() const { return valid_; }
  const Payload& feature() const { return feature_; }
  int64_t t_meas_ns() const { return t_meas_ns_; }
  double t_meas() const { return ns_to_seconds(t_meas_ns_); }

  void reset() {
    valid_ = false;
    t_meas_ns_ = 0;
  }

 private:
  Payload feature_{};
  int64_t t_meas_ns_ = 0;
  bool valid_ = false;
};

struct AoISample {
  int64_t t_ctrl_ns = 0;
  int64_t delta_ns = 0;

  double t_ctrl() const { return ns_to_seconds(t_ctrl_ns); }
  double delta_t() const { return ns_to_seconds(delta_ns); }
};

enum class EventType : int { feature_ready = 0, control_tick = 1, measurement_due = 2 };

struct Event {
  int64_t t_ns = 0;
  EventType type = EventType::control_tick;
  int64_t index = 0;  // tick or measurement ordinal

  double time() const { return ns_to_seconds(t_ns); }
};

// Time-ordered dispatch with the fixed tie order above; FIFO among equal
// (time, type) keys.
class EventClock {
 public:
  void push(const Event& e) {
    if (e.t_ns < now_ns_) throw std::logic_error("EventClock: event scheduled in the past");
    queue_.push(Entry{e, seq_++});
  }

  bool empty() const { return queue_.empty(); }

  const Event& peek() const { return queue_.top().event; }

  Event pop() {
    Event e = queue_.top().event;
    queue_.pop();
    now_ns_ = e.t_ns;
    return e;
  }

  int64_t now_ns() const { return now_ns_; }

  void reset() {
    queue_ = {};
    now_ns_ = 0;
    seq_ = 0;
  }

 private:
  struct Entry {
    Event event;
    uint64_t seq;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.event.t_ns != b.event.t_ns) return a.event.t_ns > b.event.t_ns;
      if (a.event.type != b.event.type) return a.event.type > b.event.type;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  int64_t now_ns_ = 0;
  uint64_t seq_ = 0;
};

struct TimelineResult {
  std::vector<Event> events;
  std::vector<AoISample> aoi;
};

// Pure schedule simulation over [0, horizon]: measurement k at k/f_perc
// publishes at k/f_perc + latency_k; the channel age is recorded at every
// control tick. Ticks before the first publish see the all-r_max bootstrap
// frame stamped t_meas = 0.
inline TimelineResult run_timeline(const ScheduleConfig& cfg, double horizon) {
  if (!cfg.valid()) throw std::invalid_argument("run_timeline: invalid schedule config");
  if (!(horizon > 0.0)) throw std::invalid_argument("run_timeline: horizon must be > 0");

  const int64_t horizon_ns = seconds_to_ns(horizon);
  Rng jitter(cfg.jitter_seed);
  EventClock clock;
  PerceptionChannel<int64_t> channel;  // payload = measurement ordinal
  channel.publish(-1, 0);              // bootstrap frame

  const auto schedule_measurement = [&](int64_t k) {
    const int64_t t_meas = k * cfg.perc_period_ns();
    if (t_meas > horizon_ns) return;
    clock.push({t_meas, EventType::measurement_due, k});
    const int64_t ready = t_meas + cfg.proc_latency.sample_ns(jitter);
    if (ready <= horizon_ns) clock.push({ready, EventType::feature_ready, k});
  };

  schedule_measurement(0);
  clock.push({0, EventType::control_tick, 0});

  TimelineResult result;
  while (!clock.empty()) {
    const Event e = clock.pop();
    result.events.push_back(e);
    switch (e.type) {
      case EventType::feature_ready:
        channel.publish(e.index, e.index * cfg.perc_period_ns());
        break;
      case EventType::control_tick: {
        result.aoi.push_back({e.t_ns, e.t_ns - channel.t_meas_ns()});
        const int64_t next = (e.index + 1) * cfg.ctrl_period_ns();
        if (next <= horizon_ns) clock.push({next, EventType::control_tick, e.index + 1});
        break;
      }
      case EventType::measurement_due:
        schedule_measurement(e.index + 1);
        break;
    }
  }
  return result;
}

// Line-delimited "t_ctrl delta_t" records for plotting the sawtooth.
inline void write_aoi_trace(std::ostream& out, const std::vector<AoISample>& samples) {
  for (const auto& s : samples)
    out << strformat("%.9f %.9f\n", s.t_ctrl(), s.delta_t());
}

}  // namespace asyncnav
