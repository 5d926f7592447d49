#pragma once

#include "lsabr/banded.hpp"
#include "lsabr/coeffs.hpp"
#include "lsabr/fdsolver.hpp"
#include "lsabr/io.hpp"
#include "lsabr/model.hpp"
#include "lsabr/quadrature.hpp"
#include "lsabr/semigroups.hpp"
#include "lsabr/verify.hpp"
