#ifndef CAPAX_CAPAX_HPP
#define CAPAX_CAPAX_HPP

#include "capax/activation.hpp"
#include "capax/bounds.hpp"
#include "capax/error.hpp"
#include "capax/exact.hpp"
#include "capax/io.hpp"
#include "capax/jacobian.hpp"
#include "capax/network.hpp"
#include "capax/numeric.hpp"
#include "capax/numerical_rank.hpp"
#include "capax/parallel.hpp"
#include "capax/products.hpp"
#include "capax/random.hpp"
#include "capax/rank_lab.hpp"
#include "capax/solver.hpp"

#endif  // CAPAX_CAPAX_HPP
