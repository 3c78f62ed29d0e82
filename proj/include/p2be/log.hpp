// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string_view>

namespace p2be::log {

using Sink = std::function<void(std::string_view)>;

/// Emits a warning line. Goes to stderr unless a sink is installed.
void warn(std::string_view message);

/// Replaces the warning sink; returns the previous one. Pass {} for stderr.
Sink set_warning_sink(Sink sink);

}  // namespace p2be::log
