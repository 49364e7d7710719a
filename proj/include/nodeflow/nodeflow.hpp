#ifndef NODEFLOW_NODEFLOW_HPP
#define NODEFLOW_NODEFLOW_HPP

#include "nodeflow/interval_set.hpp"
#include "nodeflow/node_problem.hpp"
#include "nodeflow/solver.hpp"
#include "nodeflow/verifier.hpp"
#include "nodeflow/network.hpp"
#include "nodeflow/io.hpp"

#endif
