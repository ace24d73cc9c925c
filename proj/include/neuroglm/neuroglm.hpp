#pragma once

#include "neuroglm/design.hpp"
#include "neuroglm/errors.hpp"
#include "neuroglm/eval.hpp"
#include "neuroglm/glm.hpp"
#include "neuroglm/group.hpp"
#include "neuroglm/log.hpp"
#include "neuroglm/ml.hpp"
#include "neuroglm/nifti.hpp"
#include "neuroglm/report.hpp"
#include "neuroglm/rng.hpp"
#include "neuroglm/stats.hpp"
#include "neuroglm/synth.hpp"
#include "neuroglm/tables.hpp"
#include "neuroglm/threading.hpp"
#include "neuroglm/volume.hpp"
