// Copyright 2026 The coop_mcts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COOP__ACTION_HPP_
#define COOP__ACTION_HPP_

#include <cstdint>
#include <string_view>

namespace coop
{

/// Longitudinal maneuver. Values follow the sign of the commanded acceleration.
enum class Lon : std::int8_t { kDecelerate = -1, kKeep = 0, kAccelerate = 1 };

/// Lateral maneuver. kLeft moves toward higher lane indices (lane 0 is rightmost).
enum class Lat : std::int8_t { kLeft = -1, kKeep = 0, kRight = 1 };

struct AgentAction
{
  Lon lon{Lon::kKeep};
  Lat lat{Lat::kKeep};

  friend constexpr bool operator==(const AgentAction &, const AgentAction &) = default;
};

constexpr int to_int(Lon lon) noexcept { return static_cast<int>(lon); }
constexpr int to_int(Lat lat) noexcept { return static_cast<int>(lat); }

/// Lane index change produced by a lateral maneuver.
constexpr int lane_delta(Lat lat) noexcept
{
  switch (lat) {
    case Lat::kLeft:
      return 1;
    case Lat::kRight:
      return -1;
    case Lat::kKeep:
      break;
  }
  return 0;
}

constexpr std::string_view to_string(Lon lon) noexcept
{
  switch (lon) {
    case Lon::kDecelerate:
      return "DC";
    case Lon::kAccelerate:
      return "AC";
    case Lon::kKeep:
      break;
  }
  return "SK";
}

constexpr std::string_view to_string(Lat lat) noexcept
{
  switch (lat) {
    case Lat::kLeft:
      return "LC";
    case Lat::kRight:
      return "RC";
    case Lat::kKeep:
      break;
  }
  return "LK";
}

}  // namespace coop

#endif  // COOP__ACTION_HPP_
