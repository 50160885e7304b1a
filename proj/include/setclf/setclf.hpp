// setclf.hpp - umbrella include.

#ifndef SETCLF_SETCLF_HPP
#define SETCLF_SETCLF_HPP

#include "setclf/errors.hpp"
#include "setclf/estimators.hpp"
#include "setclf/io.hpp"
#include "setclf/linalg.hpp"
#include "setclf/lp.hpp"
#include "setclf/model.hpp"
#include "setclf/random.hpp"
#include "setclf/simulate.hpp"

#endif  // SETCLF_SETCLF_HPP
