#pragma once

#include <stdexcept>
#include <string>

namespace asyncnav {

// Experiment modes:
//   proposed      - asynchronous schedule, TEM on
//   ideal         - synchronous perception at the control rate, zero latency
//   no_tem        - asynchronous schedule, TEM slots zero-filled
//   sync_baseline - decisions gated to perception arrivals (zero-order hold)
enum class Mode { proposed, ideal, no_tem, sync_baseline };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::proposed: return "proposed";
    case Mode::ideal: return "ideal";
    case Mode::no_tem: return "no_tem";
    case Mode::sync_baseline: return "sync_baseline";
  }
  return "unknown";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "proposed") return Mode::proposed;
  if (s == "ideal") return Mode::ideal;
  if (s == "no_tem") return Mode::no_tem;
  if (s == "sync_baseline") return Mode::sync_baseline;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

}  // namespace asyncnav
