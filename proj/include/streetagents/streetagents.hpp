#pragma once

// Umbrella header. HTTP pieces (http_backend.hpp, http_scene_provider.hpp)
// are intentionally excluded so library users don't pay for httplib unless
// they need a remote endpoint.

#include "streetagents/agent.hpp"
#include "streetagents/clock.hpp"
#include "streetagents/direction.hpp"
#include "streetagents/environment.hpp"
#include "streetagents/errors.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/memory.hpp"
#include "streetagents/mock_backend.hpp"
#include "streetagents/prompts.hpp"
#include "streetagents/rating.hpp"
#include "streetagents/replay_backend.hpp"
#include "streetagents/simulation.hpp"
#include "streetagents/vision.hpp"
