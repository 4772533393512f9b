#pragma once

#include "bvpcert/boundary.hpp"
#include "bvpcert/certify.hpp"
#include "bvpcert/cli.hpp"
#include "bvpcert/errors.hpp"
#include "bvpcert/expr.hpp"
#include "bvpcert/grid.hpp"
#include "bvpcert/linode.hpp"
#include "bvpcert/measure.hpp"
#include "bvpcert/problem_file.hpp"
#include "bvpcert/rng.hpp"
#include "bvpcert/sampling.hpp"
#include "bvpcert/solver.hpp"
#include "bvpcert/version.hpp"
