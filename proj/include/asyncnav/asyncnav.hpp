#pragma once

#include "asyncnav/config.hpp"
#include "asyncnav/core.hpp"
#include "asyncnav/env.hpp"
#include "asyncnav/env_mode.hpp"
#include "asyncnav/episode_status.hpp"
#include "asyncnav/harness.hpp"
#include "asyncnav/infotheory.hpp"
#include "asyncnav/learn.hpp"
#include "asyncnav/nn.hpp"
#include "asyncnav/pointcloud.hpp"
#include "asyncnav/policy.hpp"
#include "asyncnav/reward.hpp"
#include "asyncnav/schedule.hpp"
#include "asyncnav/settings.hpp"
#include "asyncnav/stats.hpp"
#include "asyncnav/temporal.hpp"
#include "asyncnav/world.hpp"
