#pragma once
// Prompt texts: the entity-extraction prompt, the knowledge-utilization
// prompt with its exemplars, and the per-task instructions. The figure texts
// live in assets.hpp; this header parses them and fills in the exemplars
// the figures elide.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "factcache/assets.hpp"
#include "factcache/error.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/text.hpp"

namespace factcache {

struct ExtractionExemplar {
    std::string sentence;
    std::string entity;
};

struct UtilizationExemplar {
    std::string triple;  // "(s, r, o)"
    std::string question;
    std::string answer;

    std::string render() const { return triple + "\nQ: " + question + "\nA: " + answer + ".\n"; }
};

namespace detail {

inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) lines.emplace_back(s.substr(start));
            break;
        }
        lines.emplace_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

// Non-empty lines between "##few-shot" and "##total", grouped by blank lines.
inline std::vector<std::vector<std::string>> few_shot_blocks(std::string_view figure) {
    std::vector<std::vector<std::string>> blocks;
    bool inside = false;
    std::vector<std::string> current;
    for (const auto& line : split_lines(figure)) {
        if (line.rfind("##few-shot", 0) == 0) {
            inside = true;
            continue;
        }
        if (line.rfind("##total", 0) == 0) break;
        if (!inside) continue;
        if (text::trim(line).empty()) {
            if (!current.empty()) blocks.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(line);
        }
    }
    if (!current.empty()) blocks.push_back(std::move(current));
    return blocks;
}

}  // namespace detail

// The two exemplars printed in the figure followed by six more of the same
// shape, for eight in total.
inline const std::vector<ExtractionExemplar>& extraction_exemplars() {
    static const std::vector<ExtractionExemplar> exemplars = [] {
        std::vector<ExtractionExemplar> out;
        for (const auto& block : detail::few_shot_blocks(assets::kEntityExtractionPromptFigure)) {
            if (block.size() == 2) out.push_back({block[0], block[1]});
        }
        const std::vector<ExtractionExemplar> extra = {
            {"Who is the current head of government for Sioux Falls?", "Sioux Falls"},
            {"In which administrative territorial entity is Route 128 station located?", "Route 128 station"},
            {"Who is the spouse of Joe Biden?", "Joe Biden"},
            {"What is the capital of Hiroshima Prefecture?", "Hiroshima Prefecture"},
            {"Which entities does Amtrak own?", "Amtrak"},
            {"What currency is used in Namibia?", "Namibia"},
        };
        out.insert(out.end(), extra.begin(), extra.end());
        return out;
    }();
    return exemplars;
}

// The two printed exemplars plus one more, for three in total.
inline const std::vector<UtilizationExemplar>& utilization_exemplars() {
    static const std::vector<UtilizationExemplar> exemplars = [] {
        std::vector<UtilizationExemplar> out;
        for (const auto& block : detail::few_shot_blocks(assets::kKnowledgeUtilizationPromptFigure)) {
            if (block.size() != 3 || block[1].rfind("Q: ", 0) != 0 || block[2].rfind("A: ", 0) != 0) continue;
            std::string answer = block[2].substr(3);
            if (!answer.empty() && answer.back() == '.') answer.pop_back();
            out.push_back({block[0], block[1].substr(3), answer});
        }
        out.push_back({"(Amtrak, owner of, Route 128 station)", "What does Amtrak own?", "Route 128 station"});
        return out;
    }();
    return exemplars;
}

// Header paragraph of the extraction prompt, byte-exact from the figure.
inline std::string extraction_instruction() {
    const auto lines = detail::split_lines(assets::kEntityExtractionPromptFigure);
    return lines.empty() ? std::string() : lines.front();
}

inline std::string extraction_prompt(std::string_view sentence) {
    std::string prompt = extraction_instruction();
    prompt += "\n\n";
    for (const auto& ex : extraction_exemplars()) prompt += ex.sentence + "\n" + ex.entity + "\n\n";
    prompt += std::string(text::trim(sentence));
    prompt += "\n";
    return prompt;
}

// Instruction keys from the task-instruction figure ("qa: \"...\"").
inline const std::map<std::string, std::string>& instruction_table() {
    static const std::map<std::string, std::string> table = [] {
        std::map<std::string, std::string> out;
        for (const auto& line : detail::split_lines(assets::kTaskInstructionsFigure)) {
            const auto colon = line.find(':');
            const auto open = line.find('"', colon);
            const auto close = line.rfind('"');
            if (colon == std::string::npos || open == std::string::npos || close <= open) continue;
            out.emplace(line.substr(0, colon), line.substr(open + 1, close - open - 1));
        }
        return out;
    }();
    return table;
}

inline std::string_view instruction_key(TaskKind task) {
    switch (task) {
        case TaskKind::QA:
        case TaskKind::MultiHopQA:
        case TaskKind::Dialogue: return "qa";
        case TaskKind::Locality: return "local";
        case TaskKind::Cloze: return "fill";
        case TaskKind::Choice: return "choose";
        case TaskKind::FactCheck: return "fc";
        case TaskKind::Completion: return "completion";
    }
    throw Error(ErrorCode::UnknownTask, "no instruction for task");
}

inline const std::string& task_instruction(TaskKind task) {
    const auto& table = instruction_table();
    auto it = table.find(std::string(instruction_key(task)));
    if (it == table.end()) throw Error(ErrorCode::UnknownTask, "no instruction for " + std::string(to_string(task)));
    return it->second;
}

struct AssembledPrompt {
    TaskKind task = TaskKind::QA;
    std::string task_instruction;
    std::vector<std::string> exemplars;
    std::vector<FactTriple> evidence_triples;
    std::vector<std::string> evidence;  // "(s, r, o)" lines
    std::string query;

    std::string render() const {
        std::string out = task_instruction;
        out += "\n\n";
        for (const auto& ex : exemplars) out += ex + "\n";
        for (const auto& line : evidence) out += line + "\n";
        out += "Q: " + query + "\nA:";
        return out;
    }
};

inline AssembledPrompt assemble_prompt(TaskKind task, const std::vector<FactTriple>& evidence, std::string_view query) {
    AssembledPrompt p;
    p.task = task;
    p.task_instruction = task_instruction(task);
    for (const auto& ex : utilization_exemplars()) p.exemplars.push_back(ex.render());
    for (const auto& t : evidence) {
        p.evidence_triples.push_back(t);
        p.evidence.push_back(t.serialize());
    }
    p.query = std::string(query);
    return p;
}

}  // namespace factcache
