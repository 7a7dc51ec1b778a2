#pragma once

#include "gazemap/error.hpp"
#include "gazemap/geometry.hpp"
#include "gazemap/dataset.hpp"
#include "gazemap/synth.hpp"
#include "gazemap/nnet.hpp"
#include "gazemap/optim.hpp"
#include "gazemap/gpr.hpp"
#include "gazemap/baselines.hpp"
#include "gazemap/evaluate.hpp"
#include "gazemap/models.hpp"
#include "gazemap/experiment.hpp"
#include "gazemap/project.hpp"
#include "gazemap/report.hpp"
