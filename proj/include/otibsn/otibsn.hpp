// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "otibsn/error.hpp"
#include "otibsn/core.hpp"
#include "otibsn/parallel.hpp"
#include "otibsn/semidual.hpp"
#include "otibsn/sparsify.hpp"
#include "otibsn/krylov.hpp"
#include "otibsn/feasibility.hpp"
#include "otibsn/sinkhorn.hpp"
#include "otibsn/inner_newton.hpp"
#include "otibsn/trajectory.hpp"
#include "otibsn/bregman_outer.hpp"
#include "otibsn/oracle.hpp"
#include "otibsn/data.hpp"
