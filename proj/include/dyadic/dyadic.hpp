#pragma once

#include "dyadic/analysis.hpp"
#include "dyadic/dynamics.hpp"
#include "dyadic/girsanov.hpp"
#include "dyadic/integrate.hpp"
#include "dyadic/io.hpp"
#include "dyadic/markov.hpp"
#include "dyadic/selfsimilar.hpp"
#include "dyadic/tree.hpp"
#include "dyadic/version.hpp"
