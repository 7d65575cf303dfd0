#pragma once

#include "edge_multiai/core.hpp"
#include "edge_multiai/rng.hpp"
#include "edge_multiai/workload.hpp"
#include "edge_multiai/policies.hpp"
#include "edge_multiai/engine.hpp"
#include "edge_multiai/metrics.hpp"
#include "edge_multiai/scenarios.hpp"
#include "edge_multiai/io.hpp"
#include "edge_multiai/cli.hpp"
