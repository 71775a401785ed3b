#pragma once

#include "stepfdr/numeric.hpp"
#include "stepfdr/core.hpp"
#include "stepfdr/shape.hpp"
#include "stepfdr/procedures.hpp"
#include "stepfdr/spec.hpp"
#include "stepfdr/simulation.hpp"
#include "stepfdr/conditions.hpp"
#include "stepfdr/experiment.hpp"
#include "stepfdr/io.hpp"
