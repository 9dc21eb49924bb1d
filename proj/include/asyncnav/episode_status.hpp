#pragma once

namespace asyncnav {

// Fixed priority when several conditions hold at once:
// collided > out_of_bounds > reached_goal > timed_out > running.
enum class EpisodeStatus { running, reached_goal, collided, out_of_bounds, timed_out };

inline const char* to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::running: return "running";
    case EpisodeStatus::reached_goal: return "reached_goal";
    case EpisodeStatus::collided: return "collided";
    case EpisodeStatus::out_of_bounds: return "out_of_bounds";
    case EpisodeStatus::timed_out: return "timed_out";
  }
  return "unknown";
}

}  // namespace asyncnav
