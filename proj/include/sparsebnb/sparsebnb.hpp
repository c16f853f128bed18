#ifndef SPARSEBNB_SPARSEBNB_HPP_
#define SPARSEBNB_SPARSEBNB_HPP_

#include "sparsebnb/types.hpp"
#include "sparsebnb/parallel.hpp"
#include "sparsebnb/problem.hpp"
#include "sparsebnb/precompute.hpp"
#include "sparsebnb/admm.hpp"
#include "sparsebnb/upper_bound.hpp"
#include "sparsebnb/matching_pursuit.hpp"
#include "sparsebnb/bnb.hpp"

#endif  // SPARSEBNB_SPARSEBNB_HPP_
