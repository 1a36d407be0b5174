#pragma once

#include "zohfl/baselines.hpp"
#include "zohfl/config.hpp"
#include "zohfl/data.hpp"
#include "zohfl/errors.hpp"
#include "zohfl/harness.hpp"
#include "zohfl/local_solver.hpp"
#include "zohfl/metrics.hpp"
#include "zohfl/numkit.hpp"
#include "zohfl/objectives.hpp"
#include "zohfl/oracles.hpp"
#include "zohfl/orchestrator.hpp"
#include "zohfl/smoothing.hpp"
