#ifndef SSLSPEC_SSLSPEC_HPP
#define SSLSPEC_SSLSPEC_HPP

#include "closed_form.hpp"
#include "downstream.hpp"
#include "eigensolver.hpp"
#include "experiments.hpp"
#include "graph.hpp"
#include "graph_estimation.hpp"
#include "io.hpp"
#include "losses.hpp"
#include "optim.hpp"

#endif  // SSLSPEC_SSLSPEC_HPP
