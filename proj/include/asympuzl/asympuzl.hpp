#pragma once

// Umbrella header for the AsymPuzl two-agent asymmetric puzzle harness.

#include "asympuzl/agent.hpp"
#include "asympuzl/engine.hpp"
#include "asympuzl/errors.hpp"
#include "asympuzl/feedback.hpp"
#include "asympuzl/llm_agent.hpp"
#include "asympuzl/llm_client.hpp"
#include "asympuzl/metrics.hpp"
#include "asympuzl/puzzle.hpp"
#include "asympuzl/rng.hpp"
#include "asympuzl/run_config.hpp"
#include "asympuzl/runner.hpp"
#include "asympuzl/strings.hpp"
#include "asympuzl/transcript_io.hpp"
