#pragma once

#include "cell_model.hpp"
#include "discretizers.hpp"
#include "matrix_exp.hpp"
#include "steppers.hpp"
#include "simulator.hpp"
#include "analysis.hpp"
#include "bench.hpp"
#include "identify.hpp"
#include "io.hpp"
#include "parallel.hpp"
