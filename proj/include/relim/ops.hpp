#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "relim/problem.hpp"

namespace relim {

using json = nlohmann::json;

// Operations shared by the CLI and the HTTP service. Results are
// deterministic JSON (no timings), so both front ends emit identical bytes.
json run_op(const std::string& op, const json& params, const Context& ctx = {});

const std::vector<std::string>& op_names();

// Canonical JSON text: two-space indent and a trailing newline.
std::string dump_json(const json& j);

// Plain-text rendering used by the CLI without --json.
std::string render_text(const std::string& op, const json& result);

// Nonzero when the result reports a failed verification.
int result_status(const std::string& op, const json& result);

// Problem text produced by an operation, if it yields a new problem.
std::optional<std::string> produced_problem(const std::string& op, const json& result);

// Reads {"problem": text} | {"family": {"delta", "z", "variant"?}} | {"variant": Δ}.
Problem problem_from_params(const json& params);

}  // namespace relim
