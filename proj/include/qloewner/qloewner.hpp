#pragma once

// Umbrella header.

#include "qloewner/algebra.hpp"
#include "qloewner/bivariate.hpp"
#include "qloewner/calculus.hpp"
#include "qloewner/convolution.hpp"
#include "qloewner/errors.hpp"
#include "qloewner/expectation.hpp"
#include "qloewner/flow.hpp"
#include "qloewner/herglotz.hpp"
#include "qloewner/integrator.hpp"
#include "qloewner/random.hpp"
#include "qloewner/series.hpp"
#include "qloewner/transform.hpp"
#include "qloewner/verify.hpp"
