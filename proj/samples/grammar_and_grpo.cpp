// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0

// Parses a few model responses and computes group advantages.

#include <iostream>

#include "deepbrowse/deepbrowse.hpp"

using namespace deepbrowse;

int main() {
  const char* responses[] = {
      R"(<think>Find where the photo was taken.</think>
<tool_call>{"name": "image_search", "arguments": {}}</tool_call>)",
      "<think>The caption names the bridge.</think><answer>Golden Gate Bridge</answer>",
      "<think>a</think><answer>x</answer><tool_call>{}</tool_call>",
      "no tags at all",
  };
  for (const char* r : responses) {
    const auto outcome = parse_response(r);
    if (const auto* v = std::get_if<FormatViolation>(&outcome)) {
      std::cout << "rejected: " << to_string(v->kind) << "\n";
    } else {
      std::cout << "accepted\n";
    }
  }

  // Six correct and two failed samples.
  const std::vector<double> rewards{1, 1, 1, 1, 1, 1, 0, 0};
  std::cout.precision(16);
  for (double a : compute_advantages(rewards)) std::cout << a << " ";
  std::cout << "\nclip(1.5, A=1) = " << clipped_surrogate(1.5, 1.0, 0.2) << "\n";
}
