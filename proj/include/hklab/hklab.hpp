#pragma once

#include "hklab/error.hpp"
#include "hklab/jet.hpp"
#include "hklab/flat_geometry.hpp"
#include "hklab/potentials.hpp"
#include "hklab/gibbons_hawking.hpp"
#include "hklab/model_ode.hpp"
#include "hklab/calabi_separation.hpp"
#include "hklab/neck_planner.hpp"
#include "hklab/io.hpp"
#include "hklab/experiments.hpp"
