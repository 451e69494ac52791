#pragma once

#include "fraclab/core.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/potential.hpp"
#include "fraclab/fraclap.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/representation.hpp"
#include "fraclab/moving_plane.hpp"
#include "fraclab/sharmonic.hpp"
#include "fraclab/obstruction.hpp"
#include "fraclab/io.hpp"
