#pragma once

#include "rlab/error.hpp"
#include "rlab/io.hpp"
#include "rlab/joining.hpp"
#include "rlab/montecarlo.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rational.hpp"
#include "rlab/recurrence.hpp"
#include "rlab/spectral.hpp"
#include "rlab/symbolic.hpp"
#include "rlab/torus.hpp"
