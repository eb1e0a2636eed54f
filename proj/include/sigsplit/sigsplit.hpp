// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_SIGSPLIT_HPP_
#define SIGSPLIT_SIGSPLIT_HPP_

#include "dataset_io.hpp"
#include "dtw.hpp"
#include "error.hpp"
#include "features.hpp"
#include "fusion.hpp"
#include "model.hpp"
#include "model_io.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "score.hpp"
#include "signal.hpp"
#include "synth.hpp"
#include "vq.hpp"

#endif // SIGSPLIT_SIGSPLIT_HPP_
