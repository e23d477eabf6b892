#pragma once

#include "psl/banded.hpp"
#include "psl/combinatorics.hpp"
#include "psl/experiments.hpp"
#include "psl/common.hpp"
#include "psl/grid.hpp"
#include "psl/heat1d.hpp"
#include "psl/norms.hpp"
#include "psl/shercliff.hpp"
#include "psl/solver2d.hpp"
#include "psl/solver3d.hpp"
#include "psl/spectral_field.hpp"
