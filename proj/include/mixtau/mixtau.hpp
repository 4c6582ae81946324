#pragma once

#include "mixtau/assoc.hpp"
#include "mixtau/dataset.hpp"
#include "mixtau/dist.hpp"
#include "mixtau/errors.hpp"
#include "mixtau/inference.hpp"
#include "mixtau/io.hpp"
#include "mixtau/lowess.hpp"
#include "mixtau/models.hpp"
#include "mixtau/rng.hpp"
#include "mixtau/simgen.hpp"
#include "mixtau/surrogate.hpp"
