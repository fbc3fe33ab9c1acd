#ifndef MSAMPLE_MSAMPLE_HPP
#define MSAMPLE_MSAMPLE_HPP

#include <msample/types.hpp>
#include <msample/rng.hpp>
#include <msample/core.hpp>
#include <msample/dataset_io.hpp>
#include <msample/optimize.hpp>
#include <msample/lmmaes.hpp>
#include <msample/random_search.hpp>
#include <msample/differential_evolution.hpp>
#include <msample/cmaes.hpp>
#include <msample/memory.hpp>
#include <msample/classifier.hpp>
#include <msample/success_predictor.hpp>
#include <msample/problems.hpp>
#include <msample/coverage.hpp>

#endif  // MSAMPLE_MSAMPLE_HPP
