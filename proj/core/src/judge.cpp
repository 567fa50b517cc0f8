#include "docent/judge.hpp"

#include <cctype>
#include <numeric>

#include "docent/prompt_templates.hpp"

namespace docent {

std::vector<std::string> JudgeVerdict::raw_outputs() const {
    std::vector<std::string> out;
    for (const auto& r : runs) out.insert(out.end(), r.outputs.begin(), r.outputs.end());
    return out;
}

nlohmann::json to_json(const JudgeVerdict& v) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : v.runs) {
        runs.push_back({{"score", r.score ? nlohmann::json(*r.score) : nlohmann::json(nullptr)}, {"outputs", r.outputs}});
    }
    return nlohmann::json{{"mean", v.mean}, {"run_scores", v.run_scores}, {"failed_runs", v.failed_runs}, {"runs", runs}};
}

std::optional<int> parse_judge_score(std::string_view output) {
    size_t pos = 0;
    while ((pos = output.find("[[", pos)) != std::string_view::npos) {
        size_t i = pos + 2;
        while (i < output.size() && output[i] == ' ') ++i;
        size_t digits_begin = i;
        while (i < output.size() && std::isdigit(static_cast<unsigned char>(output[i]))) ++i;
        const size_t digits = i - digits_begin;
        while (i < output.size() && output[i] == ' ') ++i;
        if (digits > 0 && digits <= 3 && output.substr(i, 2) == "]]") {
            const int n = std::stoi(std::string(output.substr(digits_begin, digits)));
            if (n >= 1 && n <= 5) return n;
        }
        pos += 2;
    }
    return std::nullopt;
}

std::vector<ChatMessage> judge_prompt(std::string_view question, std::string_view reference_answer,
                                      std::string_view candidate_answer) {
    std::string user = "Score rubric:\n";
    for (auto level : templates::kJudgeRubric) {
        user += level;
        user += '\n';
    }
    user += "\n[Question]\n";
    user += question;
    user += "\n\n[Reference answer]\n";
    user += reference_answer;
    user += "\n\n[Response to evaluate]\n";
    user += candidate_answer;
    user += "\n\n";
    user += templates::kJudgeOutputFormat;
    return {{ChatRole::system, std::string(templates::kJudgeInstruction)}, {ChatRole::user, std::move(user)}};
}

JudgeVerdict judge(std::string_view question, std::string_view reference_answer, std::string_view candidate_answer,
                   ModelGateway& gateway, const ModelRef& judge_model, const JudgeOptions& opts) {
    if (opts.n_runs < 1) throw ConfigError("judge needs at least one run");
    const auto prompt = judge_prompt(question, reference_answer, candidate_answer);
    const GenerationParams params{opts.temperature};

    JudgeVerdict verdict;
    for (size_t run = 0; run < opts.n_runs; ++run) {
        JudgeRun r;
        r.outputs.push_back(gateway.chat(judge_model, prompt, params));
        r.score = parse_judge_score(r.outputs.back());
        if (!r.score) {
            auto reask = prompt;
            reask.push_back({ChatRole::assistant, r.outputs.back()});
            reask.push_back({ChatRole::user, std::string(templates::kJudgeReask)});
            r.outputs.push_back(gateway.chat(judge_model, reask, params));
            r.score = parse_judge_score(r.outputs.back());
        }
        if (r.score) {
            verdict.run_scores.push_back(*r.score);
        } else {
            ++verdict.failed_runs;
        }
        verdict.runs.push_back(std::move(r));
    }

    if (!verdict.run_scores.empty()) {
        verdict.mean = std::accumulate(verdict.run_scores.begin(), verdict.run_scores.end(), 0.0) /
                       static_cast<double>(verdict.run_scores.size());
    }
    const double failed_fraction = static_cast<double>(verdict.failed_runs) / static_cast<double>(opts.n_runs);
    if (verdict.run_scores.empty() || failed_fraction > opts.max_failed_fraction) {
        throw JudgeError(std::to_string(verdict.failed_runs) + " of " + std::to_string(opts.n_runs) +
                             " judge runs were unparseable",
                         std::move(verdict));
    }
    return verdict;
}

}  // namespace docent
