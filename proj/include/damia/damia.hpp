#pragma once

// Umbrella header: the whole toolkit.

#include "damia/attack.hpp"
#include "damia/config.hpp"
#include "damia/csv.hpp"
#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/experiment.hpp"
#include "damia/idx.hpp"
#include "damia/mat.hpp"
#include "damia/metrics.hpp"
#include "damia/mlp.hpp"
#include "damia/mmd.hpp"
#include "damia/model_io.hpp"
#include "damia/perturb.hpp"
#include "damia/phash.hpp"
#include "damia/rng.hpp"
#include "damia/synth.hpp"
#include "damia/trainers.hpp"
