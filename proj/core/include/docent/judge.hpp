#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/model_gateway.hpp"

namespace docent {

struct JudgeRun {
    std::optional<int> score;          // nullopt: unparseable after the re-ask
    std::vector<std::string> outputs;  // raw model outputs, re-ask included
};

struct JudgeVerdict {
    std::vector<int> run_scores;  // successful runs only
    std::size_t failed_runs = 0;
    double mean = 0.0;
    std::vector<JudgeRun> runs;

    std::size_t n_runs() const { return runs.size(); }
    std::vector<std::string> raw_outputs() const;
};

nlohmann::json to_json(const JudgeVerdict& v);

struct JudgeOptions {
    std::size_t n_runs = 15;
    double temperature = 0.1;
    /// A verdict fails when more than this share of runs stay unparseable.
    double max_failed_fraction = 0.2;
};

class JudgeError : public Error {
public:
    JudgeError(const std::string& message, JudgeVerdict partial) : Error(message), partial_(std::move(partial)) {}
    const JudgeVerdict& partial() const { return partial_; }

private:
    JudgeVerdict partial_;
};

/// First `[[N]]` marker with N in 1..5, scanning left to right.
std::optional<int> parse_judge_score(std::string_view output);

/// Judge instruction and rubric, then question, reference, candidate and the
/// required output format.
std::vector<ChatMessage> judge_prompt(std::string_view question, std::string_view reference_answer,
                                      std::string_view candidate_answer);

/// Runs the judge `n_runs` times. An unparseable output gets one re-ask in the
/// same run. Throws JudgeError if too many runs fail; gateway errors propagate.
JudgeVerdict judge(std::string_view question, std::string_view reference_answer, std::string_view candidate_answer,
                   ModelGateway& gateway, const ModelRef& judge_model, const JudgeOptions& opts = {});

}  // namespace docent
