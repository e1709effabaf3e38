#pragma once

#include "lad/detector.hpp"
#include "lad/error.hpp"
#include "lad/eval.hpp"
#include "lad/graph.hpp"
#include "lad/lanczos.hpp"
#include "lad/spectral.hpp"
#include "lad/synthgen.hpp"
