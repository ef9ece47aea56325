#pragma once

// Hybrid solid-combustion simulator: sparse-grid MPM solid mechanics coupled
// one-way to an incompressible flow solver, with implicit thermal diffusion
// and a directable particle ignition front.

#include "ember/cg.hpp"
#include "ember/constitutive.hpp"
#include "ember/errors.hpp"
#include "ember/fluid.hpp"
#include "ember/frame_io.hpp"
#include "ember/grid.hpp"
#include "ember/ignition.hpp"
#include "ember/interp.hpp"
#include "ember/log.hpp"
#include "ember/mpm.hpp"
#include "ember/parallel.hpp"
#include "ember/particles.hpp"
#include "ember/rng.hpp"
#include "ember/scene.hpp"
#include "ember/sim.hpp"
#include "ember/spatial_hash.hpp"
#include "ember/thermal.hpp"
#include "ember/types.hpp"
