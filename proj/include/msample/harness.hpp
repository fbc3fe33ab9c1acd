#ifndef MSAMPLE_HARNESS_HPP
#define MSAMPLE_HARNESS_HPP

#include <msample/harness/config.hpp>
#include <msample/harness/experiment.hpp>
#include <msample/harness/output.hpp>

#endif  // MSAMPLE_HARNESS_HPP
