#pragma once

#include "analysis.hpp"
#include "batch.hpp"
#include "control.hpp"
#include "io.hpp"
#include "kinematics.hpp"
#include "metrics.hpp"
#include "plant.hpp"
#include "protocol.hpp"
#include "random.hpp"
#include "scenario.hpp"
#include "simengine.hpp"
