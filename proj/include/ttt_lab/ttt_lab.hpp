// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ttt_lab/alignment.hpp"
#include "ttt_lab/cloud_metrics.hpp"
#include "ttt_lab/depth_metrics.hpp"
#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"
#include "ttt_lab/gradcheck.hpp"
#include "ttt_lab/io/csv.hpp"
#include "ttt_lab/io/files.hpp"
#include "ttt_lab/io/pfm.hpp"
#include "ttt_lab/io/ply.hpp"
#include "ttt_lab/io/tum.hpp"
#include "ttt_lab/parallel.hpp"
#include "ttt_lab/recall_bench.hpp"
#include "ttt_lab/rng.hpp"
#include "ttt_lab/state_rules.hpp"
#include "ttt_lab/stitcher.hpp"
#include "ttt_lab/trajectory_metrics.hpp"
