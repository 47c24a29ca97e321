#pragma once

#include "psodr/classifiers.hpp"
#include "psodr/config.hpp"
#include "psodr/core_data.hpp"
#include "psodr/errors.hpp"
#include "psodr/evaluation.hpp"
#include "psodr/experiments.hpp"
#include "psodr/mask_distill.hpp"
#include "psodr/preprocess.hpp"
#include "psodr/pso.hpp"
#include "psodr/record_io.hpp"
#include "psodr/synth.hpp"
#include "psodr/transfer.hpp"
