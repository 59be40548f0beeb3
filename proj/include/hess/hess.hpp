#pragma once

#include "hess/baselines/baselines.hpp"
#include "hess/core/csv.hpp"
#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"
#include "hess/devices/battery.hpp"
#include "hess/devices/curves.hpp"
#include "hess/devices/ess.hpp"
#include "hess/devices/flywheel.hpp"
#include "hess/devices/hydrogen.hpp"
#include "hess/devices/methanol.hpp"
#include "hess/devices/rainflow.hpp"
#include "hess/engine/config.hpp"
#include "hess/engine/engine.hpp"
#include "hess/engine/report.hpp"
#include "hess/metrics/metrics.hpp"
#include "hess/mpc/layers.hpp"
#include "hess/mtip/mtip.hpp"
#include "hess/qp/dense_solver.hpp"
#include "hess/qp/problem.hpp"
#include "hess/qp/staged.hpp"
#include "hess/scenario/scenario.hpp"
#include "hess/vic/vic.hpp"
