#pragma once

#include "jostscat/error.hpp"
#include "jostscat/io.hpp"
#include "jostscat/jost.hpp"
#include "jostscat/mittag.hpp"
#include "jostscat/model.hpp"
#include "jostscat/odeint.hpp"
#include "jostscat/parallel.hpp"
#include "jostscat/quadrature.hpp"
#include "jostscat/specfun.hpp"
#include "jostscat/spectral.hpp"
