// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Everything except the HTTP transport, which lives in http_transport.hpp.

#include "deepbrowse/commands.hpp"
#include "deepbrowse/config.hpp"
#include "deepbrowse/error.hpp"
#include "deepbrowse/eval.hpp"
#include "deepbrowse/grammar.hpp"
#include "deepbrowse/judge.hpp"
#include "deepbrowse/kb_dump.hpp"
#include "deepbrowse/live_backends.hpp"
#include "deepbrowse/llm.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/react.hpp"
#include "deepbrowse/rng.hpp"
#include "deepbrowse/sim_models.hpp"
#include "deepbrowse/sim_web.hpp"
#include "deepbrowse/synthesis.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/tools.hpp"
#include "deepbrowse/training.hpp"
#include "deepbrowse/trajectory.hpp"
