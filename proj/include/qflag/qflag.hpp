#pragma once

#include "qflag/error.hpp"
#include "qflag/quat.hpp"
#include "qflag/spn.hpp"
#include "qflag/rng.hpp"
#include "qflag/sde.hpp"
#include "qflag/flag.hpp"
#include "qflag/polynomial.hpp"
#include "qflag/quadrature.hpp"
#include "qflag/real_matrix.hpp"
#include "qflag/spectral.hpp"
#include "qflag/parallel.hpp"
#include "qflag/stats.hpp"
#include "qflag/winding.hpp"
