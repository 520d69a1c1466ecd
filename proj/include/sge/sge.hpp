#pragma once

#include "grid.hpp"
#include "fft.hpp"
#include "spectral_field.hpp"
#include "model.hpp"
#include "integrator.hpp"
#include "oscillatory.hpp"
#include "experiments.hpp"
