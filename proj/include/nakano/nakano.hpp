#pragma once

#include "nakano/errors.hpp"
#include "nakano/measure.hpp"
#include "nakano/nakano_space.hpp"
#include "nakano/random.hpp"
#include "nakano/report.hpp"
#include "nakano/embedding.hpp"
#include "nakano/perturbation.hpp"
#include "nakano/approximation.hpp"
